#pragma once

// Independent reference implementations used only by the tests. Everything
// here is deliberately brute-force: exhaustive scans and quadrature instead
// of the library's optimized routines, so the two sides can disagree.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "phj/grid.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/paths.hpp"

namespace oracle {

// Exhaustive periodic inf/sup-convolution at sub-grid resolution.
//   sign +: u(x) = min_y [u0(y) + t*gstar((x-y)/t)]
//   sign -: u(x) = max_y [u0(y) - t*gstar((y-x)/t)]
// gstar is evaluated through the callable; candidates with |z| beyond
// `support` cost +infinity (finite-support conjugates, q = 1 families).
inline phj::GridFunction brute_convolve(const phj::GridFunction& u0, const std::function<double(double)>& gstar,
                                        double support, double t, int sign, int refine = 4) {
    const phj::Grid1D& g = u0.grid;
    const double P = g.length;
    const int m = g.n * refine;
    const double dy = P / m;
    phj::GridFunction out{g, std::vector<double>(static_cast<std::size_t>(g.n))};
    const double reach = t * support + 2.0 * dy;
    for (int i = 0; i < g.n; ++i) {
        double x = g.node(i);
        double best = sign > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        const int span = static_cast<int>(std::ceil(reach / dy)) + 1;
        for (int k = -span; k <= span; ++k) {
            double y = x + k * dy;
            double z = (sign > 0 ? (x - y) : (y - x)) / t;
            if (std::abs(z) > support + 1e-12) continue;
            double val = phj::grid_eval(u0, y);
            double cand = sign > 0 ? val + t * gstar(z) : val - t * gstar(z);
            best = sign > 0 ? std::min(best, cand) : std::max(best, cand);
        }
        out.v[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

// Closed-form effective Hamiltonian of H(p,y) = |p|^q + V(y), V 1-periodic,
// by the one-dimensional quadrature characterization: H̄(p) = max V when
// |p| <= ∫(max V - V)^{1/q}, otherwise the unique lambda > max V with
// ∫(lambda - V)^{1/q} dy = |p|.  Composite-midpoint quadrature, bisection.
inline double quad_hbar(double p, double q, const std::function<double(double)>& V, int nquad = 65536) {
    double vmax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nquad; ++i) vmax = std::max(vmax, V((i + 0.5) / nquad));
    auto flux = [&](double lam) {
        double s = 0.0;
        for (int i = 0; i < nquad; ++i) {
            double d = lam - V((i + 0.5) / nquad);
            if (d < 0.0) d = 0.0;
            s += std::pow(d, 1.0 / q);
        }
        return s / nquad;
    };
    double ap = std::abs(p);
    if (flux(vmax) >= ap) return vmax;
    double lo = vmax;
    double hi = vmax + 1.0;
    while (flux(hi) < ap) hi = vmax + 2.0 * (hi - vmax);
    for (int it = 0; it < 128; ++it) {
        double mid = 0.5 * (lo + hi);
        (flux(mid) < ap ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Modulus of continuity by exhaustive pair scan on an equispaced grid much
// finer than any knot spacing of the paths under test.
inline double brute_modulus(const phj::PiecewiseLinearPath& path, double T, double lag, int samples = 4096) {
    double best = 0.0;
    for (int i = 0; i <= samples; ++i) {
        double ti = T * i / samples;
        double vi = path.value(ti);
        int jmax = std::min(samples, i + static_cast<int>(std::floor(lag * samples / T + 1e-9)));
        for (int j = i; j <= jmax; ++j) {
            double tj = T * j / samples;
            if (tj - ti > lag + 1e-12) break;
            best = std::max(best, std::abs(path.value(tj) - vi));
        }
    }
    return best;
}

// Discrete Legendre transform by direct scan (no tie-breaking subtleties).
inline double brute_conjugate(const std::vector<double>& p_grid, const std::vector<double>& g, double z) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p_grid.size(); ++i) best = std::max(best, z * p_grid[i] - g[i]);
    return best;
}

// H*(z, y) for a HamiltonianSpec by brute maximization over a wide p grid.
inline double brute_hstar(const phj::HamiltonianSpec& spec, double z, double y, double pmax = 40.0, int np = 16001) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
        double p = -pmax + 2.0 * pmax * i / (np - 1);
        best = std::max(best, z * p - phj::eval(spec, p, y));
    }
    return best;
}

// Action of the straight-line trajectory from x to y in unit time:
// ∫0^1 H*(gammadot, gamma(s)) ds with midpoint quadrature. The kinetic parts
// under test are even in p, so the velocity sign is immaterial. Any
// admissible trajectory upper-bounds the distance function.
inline double straight_action(const phj::HamiltonianSpec& spec, double x, double y, int n = 512) {
    double v = y - x;
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        double gam = x + v * (j + 0.5) / n;
        s += brute_hstar(spec, v, gam);
    }
    return s / n;
}

}  // namespace oracle
