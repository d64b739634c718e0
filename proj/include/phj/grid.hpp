#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "phj/util.hpp"

namespace phj {

// Uniform periodic grid on [0, length): nodes x_i = i * length / n.
struct Grid1D {
    double length = 1.0;
    int n = 0;

    double dx() const { return length / n; }
    double node(int i) const { return length * static_cast<double>(i) / n; }
    bool operator==(const Grid1D& o) const { return n == o.n && length == o.length; }
};

inline Grid1D make_grid(double length, int n) {
    if (!(length > 0.0)) throw std::invalid_argument("make_grid: length must be positive");
    if (n < 8) throw std::invalid_argument("make_grid: need n >= 8");
    return Grid1D{length, n};
}

struct GridFunction {
    Grid1D grid;
    std::vector<double> v;

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

inline GridFunction sample(const Grid1D& g, const std::function<double(double)>& f) {
    GridFunction u{g, std::vector<double>(static_cast<std::size_t>(g.n))};
    for (int i = 0; i < g.n; ++i) u.v[static_cast<std::size_t>(i)] = f(g.node(i));
    return u;
}

inline GridFunction constant(const Grid1D& g, double c) {
    return GridFunction{g, std::vector<double>(static_cast<std::size_t>(g.n), c)};
}

// Periodic piecewise-linear evaluation.
inline double grid_eval(const GridFunction& u, double x) {
    const auto& g = u.grid;
    double s = x / g.length;
    s -= std::floor(s);
    double r = s * g.n;
    int i = static_cast<int>(std::floor(r));
    if (i >= g.n) i = 0;
    double w = r - i;
    int j = (i + 1 == g.n) ? 0 : i + 1;
    return (1.0 - w) * u.v[static_cast<std::size_t>(i)] + w * u.v[static_cast<std::size_t>(j)];
}

inline double max_abs(const GridFunction& u) {
    double m = 0.0;
    for (double x : u.v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("max_abs_diff: grid mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

inline double mean(const GridFunction& u) {
    double s = 0.0;
    for (double x : u.v) s += x;
    return s / static_cast<double>(u.v.size());
}

inline double oscillation(const GridFunction& u) {
    double lo = u.v[0], hi = u.v[0];
    for (double x : u.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

// Largest |u(x_{i+1}) - u(x_i)| / dx over the periodic stencil.
inline double discrete_lipschitz(const GridFunction& u) {
    const int n = u.grid.n;
    const double dx = u.grid.dx();
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1 == n) ? 0 : i + 1;
        m = std::max(m, std::abs(u.v[static_cast<std::size_t>(j)] - u.v[static_cast<std::size_t>(i)]) / dx);
    }
    return m;
}

// sup over node pairs at circle distance <= s of |u(x) - u(y)|.
inline double spatial_modulus(const GridFunction& u, double s) {
    const int n = u.grid.n;
    const double P = u.grid.length;
    int reach = static_cast<int>(std::floor(s / u.grid.dx() + 1e-12));
    if (reach >= n / 2) reach = n / 2;
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int k = 1; k <= reach; ++k) {
            int j = (i + k) % n;
            if (circ_dist(u.grid.node(i), u.grid.node(j), P) > s + 1e-12) continue;
            m = std::max(m, std::abs(u.v[static_cast<std::size_t>(j)] - u.v[static_cast<std::size_t>(i)]));
        }
    }
    return m;
}

inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("GridFunction difference: grid mismatch");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
    return out;
}

// Common initial-condition shapes (all length-periodic).
inline std::function<double(double)> shape_sin(double period, double amp = 1.0, int k = 1) {
    return [=](double x) { return amp * std::sin(kTwoPi * k * x / period); };
}

inline std::function<double(double)> shape_cos(double period, double amp = 1.0, int k = 1) {
    return [=](double x) { return amp * std::cos(kTwoPi * k * x / period); };
}

// Triangle bump centered at period/2, support width period/2, peak amp.
inline std::function<double(double)> shape_hat(double period, double amp = 1.0) {
    return [=](double x) {
        double d = circ_dist(x, period / 2.0, period);
        return amp * std::max(0.0, 1.0 - d / (period / 4.0));
    };
}

inline std::function<double(double)> shape_zero() {
    return [](double) { return 0.0; };
}

}  // namespace phj
