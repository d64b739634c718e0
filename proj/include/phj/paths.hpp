#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/rng.hpp"
#include "phj/util.hpp"

namespace phj {

// Continuous piecewise-linear driver, possibly vector valued. Knot k of
// component c has value values[c][k] at times[k]. Immutable after build.
struct PiecewiseLinearPath {
    std::vector<double> times;
    std::vector<std::vector<double>> values;

    int dim() const { return static_cast<int>(values.size()); }
    double horizon() const { return times.back(); }
    std::size_t knots() const { return times.size(); }

    double value(double t, int comp = 0) const {
        const auto& v = values[static_cast<std::size_t>(comp)];
        if (t <= times.front()) return v.front();
        if (t >= times.back()) return v.back();
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times.begin());
        double t0 = times[k - 1], t1 = times[k];
        double w = (t - t0) / (t1 - t0);
        return (1.0 - w) * v[k - 1] + w * v[k];
    }

    double total_variation(int comp = 0, double upto = -1.0) const {
        const auto& v = values[static_cast<std::size_t>(comp)];
        if (upto < 0.0) upto = times.back();
        double tv = 0.0;
        for (std::size_t k = 1; k < times.size(); ++k) {
            if (times[k] <= upto) {
                tv += std::abs(v[k] - v[k - 1]);
            } else {
                if (times[k - 1] < upto) tv += std::abs(value(upto, comp) - v[k - 1]);
                break;
            }
        }
        return tv;
    }

    PiecewiseLinearPath component(int comp) const {
        return PiecewiseLinearPath{times, {values[static_cast<std::size_t>(comp)]}};
    }
};

inline PiecewiseLinearPath make_path(std::vector<double> times, std::vector<std::vector<double>> values) {
    if (times.size() < 2) throw std::invalid_argument("make_path: need at least two knots");
    if (times.front() != 0.0) throw std::invalid_argument("make_path: first knot must be t = 0");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("make_path: knot times must increase strictly");
    if (values.empty()) throw std::invalid_argument("make_path: no components");
    for (const auto& v : values) {
        if (v.size() != times.size()) throw std::invalid_argument("make_path: component length mismatch");
        for (double x : v)
            if (!std::isfinite(x)) throw std::invalid_argument("make_path: non-finite sample value");
    }
    return PiecewiseLinearPath{std::move(times), std::move(values)};
}

inline PiecewiseLinearPath make_scalar_path(std::vector<double> times, std::vector<double> vals) {
    return make_path(std::move(times), {std::move(vals)});
}

inline PiecewiseLinearPath path_line(double T, double slope) {
    return make_scalar_path({0.0, T}, {0.0, slope * T});
}

// Maximal intervals on which the path moves in one direction; flats carry
// direction 0 and are legal identity segments.
struct MonotoneSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    double increment = 0.0;
    int direction = 0;
};

inline std::vector<MonotoneSegment> monotone_segments(const PiecewiseLinearPath& path, int comp = 0) {
    if (comp < 0 || comp >= path.dim()) throw std::invalid_argument("monotone_segments: bad component");
    const auto& v = path.values[static_cast<std::size_t>(comp)];
    std::vector<MonotoneSegment> segs;
    for (std::size_t k = 1; k < path.times.size(); ++k) {
        double d = v[k] - v[k - 1];
        int dir = (d > 0.0) ? 1 : (d < 0.0 ? -1 : 0);
        if (!segs.empty() && segs.back().direction == dir) {
            segs.back().t1 = path.times[k];
            segs.back().increment += d;
        } else {
            segs.push_back(MonotoneSegment{path.times[k - 1], path.times[k], d, dir});
        }
    }
    return segs;
}

// Piecewise-linear interpolant with knots at k*eta, k = 0..ceil(T/eta).
inline PiecewiseLinearPath interpolate(const std::function<double(double)>& samples, double T, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("interpolate: step must be positive");
    if (!(T >= eta)) throw std::invalid_argument("interpolate: horizon shorter than step");
    int K = static_cast<int>(std::ceil(T / eta - 1e-12));
    std::vector<double> times(static_cast<std::size_t>(K) + 1), vals(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        double t = std::min(k * eta, T);
        times[static_cast<std::size_t>(k)] = k < K ? k * eta : std::max(k * eta, T);
        double w = samples(t);
        if (!std::isfinite(w)) throw std::invalid_argument("interpolate: non-finite sample value");
        vals[static_cast<std::size_t>(k)] = w;
    }
    return make_scalar_path(std::move(times), std::move(vals));
}

inline PiecewiseLinearPath interpolate(const PiecewiseLinearPath& path, double eta, int comp = 0) {
    return interpolate([&](double t) { return path.value(t, comp); }, path.horizon(), eta);
}

// Empirical modulus of continuity omega_{W,T} sampled at the given lags.
struct ModulusTable {
    std::vector<double> lags;
    std::vector<double> omega;
    double horizon = 0.0;

    double eval(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= lags.back()) return omega.back();
        double prev_lag = 0.0, prev_om = 0.0;
        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (s <= lags[i]) {
                double w = (s - prev_lag) / (lags[i] - prev_lag);
                return (1.0 - w) * prev_om + w * omega[i];
            }
            prev_lag = lags[i];
            prev_om = omega[i];
        }
        return omega.back();
    }
};

inline ModulusTable modulus_table(const PiecewiseLinearPath& path, double T, std::vector<double> lag_grid,
                                  int comp = 0) {
    if (lag_grid.empty()) throw std::invalid_argument("modulus_table: empty lag grid");
    std::sort(lag_grid.begin(), lag_grid.end());
    lag_grid.erase(std::unique(lag_grid.begin(), lag_grid.end()), lag_grid.end());
    if (!(lag_grid.front() > 0.0) || lag_grid.back() > T + 1e-12)
        throw std::invalid_argument("modulus_table: lags must lie in (0, T]");

    const double h = lag_grid.front() / 64.0;
    const std::size_t N = static_cast<std::size_t>(std::floor(T / h + 1e-9)) + 1;
    std::vector<double> w(N);
    for (std::size_t i = 0; i < N; ++i) w[i] = path.value(std::min(i * h, T), comp);

    ModulusTable table;
    table.horizon = T;
    table.lags = lag_grid;
    table.omega.resize(lag_grid.size());
    for (std::size_t j = 0; j < lag_grid.size(); ++j) {
        const std::size_t win = std::min<std::size_t>(N - 1, static_cast<std::size_t>(std::floor(lag_grid[j] / h + 1e-9)));
        std::deque<std::size_t> qmax, qmin;
        double best = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            while (!qmax.empty() && w[qmax.back()] <= w[i]) qmax.pop_back();
            qmax.push_back(i);
            while (!qmin.empty() && w[qmin.back()] >= w[i]) qmin.pop_back();
            qmin.push_back(i);
            if (i >= win) {
                while (qmax.front() + win < i) qmax.pop_front();
                while (qmin.front() + win < i) qmin.pop_front();
                best = std::max(best, w[qmax.front()] - w[qmin.front()]);
            }
        }
        table.omega[j] = best;
    }
    for (std::size_t j = 1; j < table.omega.size(); ++j) table.omega[j] = std::max(table.omega[j], table.omega[j - 1]);
    return table;
}

struct ChiQuery {
    double s = 0.0;
    bool clamped = false;
};

// Inverse of r = s * omega(s) by bisection on the monotone interpolant.
inline ChiQuery chi_eval(const ModulusTable& table, double r) {
    auto g = [&](double s) { return s * table.eval(s); };
    const double s_hi = table.lags.back();
    if (r <= 0.0) return ChiQuery{0.0, r < 0.0};
    if (r >= g(s_hi)) return ChiQuery{s_hi, r > g(s_hi) + 1e-15};
    double lo = 0.0, hi = s_hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) < r ? lo : hi) = mid;
    }
    return ChiQuery{0.5 * (lo + hi), false};
}

inline ModulusTable chi_inverse(const ModulusTable& table) {
    if (table.omega.empty() || table.omega.back() <= 0.0)
        throw std::invalid_argument("chi_inverse: modulus is identically zero");
    ModulusTable inv;
    inv.horizon = table.horizon;
    const int refine = 4;
    double r_max = table.lags.back() * table.omega.back();
    for (int i = 1; i <= refine * static_cast<int>(table.lags.size()); ++i) {
        double r = r_max * static_cast<double>(i) / (refine * static_cast<double>(table.lags.size()));
        inv.lags.push_back(r);
        inv.omega.push_back(chi_eval(table, r).s);
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Path families

enum class IncrementDist { Rademacher, UniformSym };

enum class PathFamily { BrownianSample, TakagiLike, RandomWalkPair, SquareWavePair, ExplicitSamples };

struct PathFamilySpec {
    PathFamily family = PathFamily::BrownianSample;
    double theta = 0.5;
    int depth = 10;
    double eta = 1.0 / 32.0;
    double mu = 1.0;
    std::uint64_t seed = 0;
    IncrementDist x1 = IncrementDist::Rademacher;
    IncrementDist x2 = IncrementDist::UniformSym;
    std::vector<double> sample_times;   // ExplicitSamples only
    std::vector<double> sample_values;  // ExplicitSamples only
};

inline double draw_increment(IncrementDist d, CounterRng& rng) {
    switch (d) {
        case IncrementDist::Rademacher:
            return rng.rademacher();
        case IncrementDist::UniformSym:
            return rng.uniform_sym(std::sqrt(3.0));
    }
    return 0.0;
}

// Declared bound on |X2/X1| for a distribution pair; infinite if X1 can be
// arbitrarily close to zero.
inline double ratio_bound(IncrementDist x1, IncrementDist x2) {
    if (x1 != IncrementDist::Rademacher) return std::numeric_limits<double>::infinity();
    return x2 == IncrementDist::Rademacher ? 1.0 : std::sqrt(3.0);
}

inline void validate(const PathFamilySpec& spec) {
    if (!(spec.theta > 0.0 && spec.theta < 1.0)) throw std::invalid_argument("path spec: theta must lie in (0,1)");
    if (!(spec.eta > 0.0)) throw std::invalid_argument("path spec: eta must be positive");
    if (spec.depth < 1) throw std::invalid_argument("path spec: depth must be >= 1");
    if (spec.family == PathFamily::RandomWalkPair && !std::isfinite(ratio_bound(spec.x1, spec.x2)))
        throw std::invalid_argument("path spec: |X2/X1| unbounded for the chosen increment distributions");
    if (spec.family == PathFamily::SquareWavePair && !(spec.mu > 0.0))
        throw std::invalid_argument("path spec: slope magnitude must be positive");
    if (spec.family == PathFamily::ExplicitSamples && spec.sample_times.size() != spec.sample_values.size())
        throw std::invalid_argument("path spec: sample times/values length mismatch");
}

// Tent cascade sum_m 2^{-m(1-theta)} dist(2^m t, Z), evaluated exactly at its
// dyadic knots. Level-k interpolants (eta = 2^-k <= 2^-depth) subsample it
// exactly, with per-step slope magnitude ~ eta^-theta.
inline PiecewiseLinearPath path_takagi(double T, double theta, int depth) {
    const double h = std::ldexp(1.0, -depth);
    const std::size_t K = static_cast<std::size_t>(std::ceil(T / h - 1e-12));
    std::vector<double> times(K + 1), vals(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        double t = std::min(k * h, T);
        times[k] = k < K ? k * h : std::max(k * h, T);
        double w = 0.0;
        for (int m = 0; m < depth; ++m) {
            double x = std::ldexp(t, m);
            double fr = x - std::floor(x);
            w += std::pow(2.0, -m * (1.0 - theta)) * std::min(fr, 1.0 - fr);
        }
        vals[k] = w;
    }
    return make_scalar_path(std::move(times), std::move(vals));
}

inline PiecewiseLinearPath path_brownian(double T, double eta, std::uint64_t seed, std::uint64_t stream = 0) {
    CounterRng rng(seed, stream);
    const std::size_t K = static_cast<std::size_t>(std::ceil(T / eta - 1e-12));
    std::vector<double> times(K + 1), vals(K + 1);
    times[0] = 0.0;
    vals[0] = 0.0;
    const double sd = std::sqrt(eta);
    for (std::size_t k = 1; k <= K; ++k) {
        times[k] = k < K ? k * eta : std::max(k * eta, T);
        vals[k] = vals[k - 1] + sd * rng.normal();
    }
    return make_scalar_path(std::move(times), std::move(vals));
}

inline std::vector<PiecewiseLinearPath> gen_path(const PathFamilySpec& spec, double T) {
    validate(spec);
    switch (spec.family) {
        case PathFamily::BrownianSample:
            return {path_brownian(T, spec.eta, spec.seed)};
        case PathFamily::TakagiLike:
            return {path_takagi(T, spec.theta, spec.depth)};
        case PathFamily::ExplicitSamples:
            return {make_scalar_path(spec.sample_times, spec.sample_values)};
        case PathFamily::RandomWalkPair: {
            CounterRng rng(spec.seed, 0);
            const std::size_t K = static_cast<std::size_t>(std::ceil(T / spec.eta - 1e-12));
            std::vector<double> times(K + 1), w1(K + 1), w2(K + 1);
            times[0] = 0.0;
            const double root_eta = std::sqrt(spec.eta);
            for (std::size_t k = 1; k <= K; ++k) {
                times[k] = k < K ? k * spec.eta : std::max(k * spec.eta, T);
                w1[k] = w1[k - 1] + root_eta * draw_increment(spec.x1, rng);
                w2[k] = w2[k - 1] + root_eta * draw_increment(spec.x2, rng);
            }
            std::vector<PiecewiseLinearPath> out;
            out.push_back(make_scalar_path(times, w1));
            out.push_back(make_scalar_path(std::move(times), std::move(w2)));
            return out;
        }
        case PathFamily::SquareWavePair: {
            // dW1 = +mu on (4k eta, (4k+2) eta), -mu after; dW2 alternates each eta.
            const double eta = spec.eta, mu = spec.mu;
            const std::size_t K = static_cast<std::size_t>(std::ceil(T / eta - 1e-12));
            std::vector<double> times(K + 1), w1(K + 1), w2(K + 1);
            times[0] = 0.0;
            for (std::size_t k = 1; k <= K; ++k) {
                double t1 = (k < K) ? k * eta : std::max(k * eta, T);
                times[k] = t1;
                double dt = t1 - times[k - 1];
                std::size_t j = k - 1;
                double s1 = (j % 4 < 2) ? mu : -mu;
                double s2 = (j % 2 == 0) ? mu : -mu;
                w1[k] = w1[k - 1] + s1 * dt;
                w2[k] = w2[k - 1] + s2 * dt;
            }
            std::vector<PiecewiseLinearPath> out;
            out.push_back(make_scalar_path(times, w1));
            out.push_back(make_scalar_path(std::move(times), std::move(w2)));
            return out;
        }
    }
    throw std::logic_error("gen_path: unreachable");
}

// ---------------------------------------------------------------------------
// Variation check against the eta^-theta rate

struct VariationRow {
    double eta = 0.0;
    double t = 0.0;
    double ratio = 0.0;
};

struct VariationReport {
    std::vector<VariationRow> rows;
    double c = 0.0;
    double C = 0.0;
    bool pass = false;
};

inline VariationReport variation_check(const std::function<PiecewiseLinearPath(double)>& generator, double theta,
                                       const std::vector<double>& eta_list, const std::vector<double>& xi,
                                       const std::vector<double>& t_grid, double c_declared, double C_declared) {
    double norm2 = 0.0;
    for (double x : xi) norm2 += x * x;
    if (std::abs(norm2 - 1.0) > 1e-9) throw std::invalid_argument("variation_check: |xi| must be 1");
    VariationReport rep;
    rep.c = c_declared;
    rep.C = C_declared;
    rep.pass = true;
    for (double eta : eta_list) {
        PiecewiseLinearPath p = generator(eta);
        if (p.dim() != static_cast<int>(xi.size()))
            throw std::invalid_argument("variation_check: xi dimension mismatch");
        std::vector<double> proj(p.times.size(), 0.0);
        for (std::size_t k = 0; k < p.times.size(); ++k)
            for (int cc = 0; cc < p.dim(); ++cc) proj[k] += xi[static_cast<std::size_t>(cc)] * p.values[static_cast<std::size_t>(cc)][k];
        PiecewiseLinearPath sp = make_scalar_path(p.times, std::move(proj));
        for (double t : t_grid) {
            double ratio = sp.total_variation(0, t) / (std::pow(eta, -theta) * t);
            rep.rows.push_back(VariationRow{eta, t, ratio});
            if (!(ratio >= c_declared && ratio <= C_declared)) rep.pass = false;
        }
    }
    return rep;
}

// Local-uniform path metric sum_{n>=1} 2^-n min(1, sup_{[0, min(n,T)]} |f-g|);
// the tail past n = ceil(T) is summed in closed form.
inline double path_metric(const PiecewiseLinearPath& f, const PiecewiseLinearPath& g, int comp = 0) {
    double T = std::min(f.horizon(), g.horizon());
    std::vector<double> grid;
    for (double t : f.times)
        if (t < T) grid.push_back(t);
    for (double t : g.times)
        if (t < T) grid.push_back(t);
    grid.push_back(T);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto gap = [&](double t) { return std::abs(f.value(t, comp) - g.value(t, comp)); };
    int n_cap = std::max(1, static_cast<int>(std::ceil(T)));
    double d = 0.0, running = gap(0.0);
    std::size_t gi = 0;
    for (int n = 1; n <= n_cap; ++n) {
        double cap = std::min(static_cast<double>(n), T);
        while (gi < grid.size() && grid[gi] <= cap) running = std::max(running, gap(grid[gi++]));
        running = std::max(running, gap(cap));
        double term = std::min(1.0, running);
        d += (n < n_cap) ? std::ldexp(term, -n) : std::ldexp(term, 1 - n);
    }
    return d;
}

inline std::string path_csv(const PiecewiseLinearPath& p) {
    std::ostringstream os;
    os << "t";
    for (int c = 0; c < p.dim(); ++c) os << ",w" << (c + 1);
    os << "\n";
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        os << fmt_g17(p.times[k]);
        for (int c = 0; c < p.dim(); ++c) os << "," << fmt_g17(p.values[static_cast<std::size_t>(c)][k]);
        os << "\n";
    }
    return os.str();
}

}  // namespace phj
