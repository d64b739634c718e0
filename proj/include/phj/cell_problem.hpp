#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/grid.hpp"
#include "phj/grid_solver.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/util.hpp"

namespace phj {

struct CellConfig {
    enum class Method { LargeTime, VanishingDiscount };
    Method method = Method::LargeTime;
    int n = 256;
    double tol = 2e-4;
    double t0 = 4.0;        // first large-time horizon
    double t_max = 512.0;   // horizon cap (doubling schedule)
    bool richardson = true; // difference-quotient estimator instead of w(T)/T
    double discount = 0.02;
    double discount_min = 0.0025;
    SchemeConfig scheme;
};

inline void validate(const CellConfig& cfg) {
    if (cfg.n < 32) throw std::invalid_argument("cell config: n must be >= 32");
    if (!(cfg.t0 >= 1.0 && cfg.t_max >= cfg.t0)) throw std::invalid_argument("cell config: need t_max >= t0 >= 1");
    if (!(cfg.discount > 0.0 && cfg.discount <= 1.0)) throw std::invalid_argument("cell config: discount must lie in (0,1]");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("cell config: tolerance must be positive");
}

struct EffectivePoint {
    double lambda = 0.0;
    double residual = 0.0;
    bool converged = false;
    double horizon = 0.0;
};

namespace detail {

// Ergodic constant of w_t + coef*(K(p + Dw) + pot) = 0 on the unit cell by
// large-time averaging with horizon doubling.
inline EffectivePoint large_time_point(const HamiltonianSpec& spec, std::vector<double> pot, double coef, double p,
                                       const CellConfig& cfg) {
    Grid1D g = make_grid(1.0, cfg.n);
    FluxProblem pr;
    pr.spec = &spec;
    pr.coef = coef;
    pr.p0 = p;
    pr.pot_lip = pot.empty() ? 0.0 : array_lip(pot, g.dx());
    pr.pot = std::move(pot);

    std::vector<double> v(static_cast<std::size_t>(cfg.n), 0.0);
    EvolveStats stats;
    double T = cfg.t0;
    evolve_core(g, pr, v, T / 2.0, cfg.scheme, stats);
    std::vector<double> A = v;
    evolve_core(g, pr, v, T / 2.0, cfg.scheme, stats);

    EffectivePoint pt;
    double prev_est = std::numeric_limits<double>::quiet_NaN();
    while (true) {
        double mean_a = 0.0, mean_b = 0.0, field_res = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            mean_a += A[i];
            mean_b += v[i];
            field_res = std::max(field_res, std::abs(v[i] / T - A[i] / (T / 2.0)));
        }
        mean_a /= static_cast<double>(v.size());
        mean_b /= static_cast<double>(v.size());
        double est = cfg.richardson ? -(mean_b - mean_a) / (T / 2.0) : -mean_b / T;
        double cauchy = std::isnan(prev_est) ? std::numeric_limits<double>::infinity() : std::abs(est - prev_est);
        pt.lambda = est;
        pt.residual = field_res + (std::isfinite(cauchy) ? cauchy : 0.0);
        pt.horizon = T;
        if (std::isfinite(cauchy) && field_res + cauchy <= cfg.tol) {
            pt.converged = true;
            return pt;
        }
        if (2.0 * T > cfg.t_max * (1.0 + 1e-12)) {
            pt.converged = false;
            return pt;
        }
        prev_est = est;
        A = v;
        evolve_core(g, pr, v, T, cfg.scheme, stats);
        T *= 2.0;
    }
}

// gamma*v + coef*(K(p + Dv) + pot) = 0 relaxed in pseudo-time; lambda is the
// limit of -gamma*v along the halving discount schedule.
inline EffectivePoint discount_point(const HamiltonianSpec& spec, std::vector<double> pot, double coef, double p,
                                     const CellConfig& cfg) {
    Grid1D g = make_grid(1.0, cfg.n);
    const double dx = g.dx();
    const std::size_t n = static_cast<std::size_t>(cfg.n);
    std::vector<double> v(n, 0.0), dm(n), rate(n);
    EffectivePoint pt;
    double prev_lambda = std::numeric_limits<double>::quiet_NaN();
    double alpha_keep = std::abs(coef) * spec.kinetic_slope_bound(std::abs(p) + 1.0);
    for (double gamma = cfg.discount; gamma >= cfg.discount_min * (1.0 - 1e-12); gamma *= 0.5) {
        double horizon = 8.0 / gamma, done = 0.0;
        while (done < horizon) {
            gradients(v, dx, dm);
            double pm = 0.0;
            for (double d : dm) pm = std::max(pm, std::abs(p + d));
            alpha_keep = std::max(alpha_keep, std::abs(coef) * spec.kinetic_slope_bound(pm));
            double dt = std::min(horizon - done, cfg.scheme.cfl * dx / alpha_keep);
            dt = std::min(dt, 0.25 / gamma);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t j = (i + 1 == n) ? 0 : i + 1;
                double a = dm[i], b = dm[j];
                double hval = spec.kinetic(p + 0.5 * (a + b)) + (pot.empty() ? 0.0 : pot[i]);
                rate[i] = gamma * v[i] + coef * hval - 0.5 * alpha_keep * (b - a);
            }
            for (std::size_t i = 0; i < n; ++i) v[i] -= dt * rate[i];
            done += dt;
        }
        double m = 0.0, lo = v[0], hi = v[0];
        for (double x : v) {
            m += x;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        m /= static_cast<double>(n);
        double lambda = -gamma * m;
        double osc = gamma * (hi - lo);
        double cauchy = std::isnan(prev_lambda) ? std::numeric_limits<double>::infinity() : std::abs(lambda - prev_lambda);
        pt.lambda = lambda;
        pt.residual = osc + (std::isfinite(cauchy) ? cauchy : 0.0);
        pt.horizon = 1.0 / gamma;
        pt.converged = std::isfinite(cauchy) && pt.residual <= cfg.tol;
        prev_lambda = lambda;
    }
    return pt;
}

inline EffectivePoint effective_point(const HamiltonianSpec& spec, std::vector<double> pot, double coef, double p,
                                      const CellConfig& cfg) {
    validate(cfg);
    if (coef == 0.0) throw std::invalid_argument("effective value: zero Hamiltonian coefficient");
    return cfg.method == CellConfig::Method::LargeTime ? large_time_point(spec, std::move(pot), coef, p, cfg)
                                                       : discount_point(spec, std::move(pot), coef, p, cfg);
}

inline std::vector<double> cell_potential(const HamiltonianSpec& spec, int n) {
    if (!spec.has_potential()) return {};
    std::vector<double> pot(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pot[static_cast<std::size_t>(i)] = spec.V.value(static_cast<double>(i) / n);
    return pot;
}

}  // namespace detail

inline EffectivePoint effective_value(const HamiltonianSpec& spec, double p, const CellConfig& cfg = CellConfig{}) {
    return detail::effective_point(spec, detail::cell_potential(spec, cfg.n), 1.0, p, cfg);
}

// Effective Hamiltonian of -H, computed by rerunning the solver with the
// evaluator negated (never by flipping the sign of the H result).
inline EffectivePoint effective_value_negated(const HamiltonianSpec& spec, double p,
                                              const CellConfig& cfg = CellConfig{}) {
    return detail::effective_point(spec, detail::cell_potential(spec, cfg.n), -1.0, p, cfg);
}

// Ergodic constant of w_t + xi1*H(p + Dw, y) + xi2*f(y) = 0.
inline EffectivePoint two_signal_effective(const HamiltonianSpec& spec, const PotentialSpec& f, double xi1,
                                           double xi2, double p, const CellConfig& cfg = CellConfig{}) {
    if (xi1 == 0.0) throw std::invalid_argument("two_signal_effective: xi1 must be nonzero");
    std::vector<double> pot = detail::cell_potential(spec, cfg.n);
    if (pot.empty()) pot.assign(static_cast<std::size_t>(cfg.n), 0.0);
    for (int i = 0; i < cfg.n; ++i) pot[static_cast<std::size_t>(i)] += (xi2 / xi1) * f.value(static_cast<double>(i) / cfg.n);
    return detail::effective_point(spec, std::move(pot), xi1, p, cfg);
}

struct EffectiveTable {
    std::vector<double> p;
    std::vector<double> hbar;
    std::vector<double> hbar_residual;
    std::vector<char> hbar_converged;
    std::vector<double> neg;  // (-H)-bar
    std::vector<double> neg_residual;
    std::vector<char> neg_converged;
    double max_residual = 0.0;
    bool convex = false;
};

inline EffectiveTable effective_table(const HamiltonianSpec& spec, const std::vector<double>& p_grid,
                                      const CellConfig& cfg = CellConfig{}, int workers = 1) {
    EffectiveTable table;
    table.p = p_grid;
    std::size_t m = p_grid.size();
    table.hbar.resize(m);
    table.hbar_residual.resize(m);
    table.hbar_converged.assign(m, 0);
    table.neg.resize(m);
    table.neg_residual.resize(m);
    table.neg_converged.assign(m, 0);
    parallel_for(m, workers, [&](std::size_t i) {
        EffectivePoint plus = effective_value(spec, p_grid[i], cfg);
        EffectivePoint minus = effective_value_negated(spec, p_grid[i], cfg);
        table.hbar[i] = plus.lambda;
        table.hbar_residual[i] = plus.residual;
        table.hbar_converged[i] = plus.converged ? 1 : 0;
        table.neg[i] = minus.lambda;
        table.neg_residual[i] = minus.residual;
        table.neg_converged[i] = minus.converged ? 1 : 0;
    });
    for (std::size_t i = 0; i < m; ++i)
        table.max_residual = std::max(table.max_residual, std::max(table.hbar_residual[i], table.neg_residual[i]));
    double ctol = 3.0 * table.max_residual + 1e-9;
    table.convex = discrete_convex(table.hbar, ctol);
    return table;
}

struct ConsistencyReport {
    std::vector<double> gap;        // |(-H)bar(p) + Hbar(p)|
    std::vector<double> threshold;  // mult*(residual_+ + residual_-) + floor
    double max_gap = 0.0;
    bool consistent = false;
    std::vector<std::size_t> exceed_indices;
};

inline ConsistencyReport consistency_check(const EffectiveTable& table, double mult = 3.0, double floor_tol = 1e-9) {
    ConsistencyReport rep;
    std::size_t m = table.p.size();
    rep.gap.resize(m);
    rep.threshold.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        rep.gap[i] = std::abs(table.neg[i] + table.hbar[i]);
        rep.threshold[i] = mult * (table.hbar_residual[i] + table.neg_residual[i]) + floor_tol;
        rep.max_gap = std::max(rep.max_gap, rep.gap[i]);
        if (rep.gap[i] > rep.threshold[i]) rep.exceed_indices.push_back(i);
    }
    rep.consistent = rep.exceed_indices.empty();
    return rep;
}

inline std::string effective_table_csv(const EffectiveTable& t) {
    std::string out = "p,hbar,neg_hbar,gap,residual\n";
    for (std::size_t i = 0; i < t.p.size(); ++i) {
        out += fmt_g17(t.p[i]);
        out += ",";
        out += fmt_g17(t.hbar[i]);
        out += ",";
        out += fmt_g17(t.neg[i]);
        out += ",";
        out += fmt_g17(std::abs(t.neg[i] + t.hbar[i]));
        out += ",";
        out += fmt_g17(t.hbar_residual[i] + t.neg_residual[i]);
        out += "\n";
    }
    return out;
}

// Oscillation lower bound H-bar(p, xi) >= b.xi + mu |xi.xi*| extracted from the
// most-separated pair of forcing values on the period.
struct OscfRow {
    double p = 0.0;
    std::vector<double> xi;
    double lambda = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool ok = false;
};

struct OscfReport {
    std::vector<double> b;
    std::vector<double> xi_star;
    double mu = 0.0;
    std::vector<OscfRow> rows;
    bool pass = false;
};

inline OscfReport oscf_lower_bound(const HamiltonianSpec& spec, const std::vector<PotentialSpec>& fs,
                                   const std::vector<double>& p_list,
                                   const std::vector<std::vector<double>>& xi_list,
                                   const CellConfig& cfg = CellConfig{}) {
    if (fs.empty()) throw std::invalid_argument("oscf_lower_bound: no forcing components");
    const int m = static_cast<int>(fs.size());
    const int N = 2048;
    std::vector<std::vector<double>> fv(static_cast<std::size_t>(m), std::vector<double>(N));
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < N; ++i) fv[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = fs[static_cast<std::size_t>(c)].value(static_cast<double>(i) / N);
    double best = -1.0;
    int b1 = 0, b2 = 0;
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < m; ++c) {
                double d = fv[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] - fv[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                d2 += d * d;
            }
            if (d2 > best) {
                best = d2;
                b1 = i;
                b2 = j;
            }
        }
    }
    OscfReport rep;
    rep.mu = 0.5 * std::sqrt(best);
    if (rep.mu < 1e-9) throw std::invalid_argument("oscf_lower_bound: forcing is numerically constant");
    rep.b.resize(static_cast<std::size_t>(m));
    rep.xi_star.resize(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
        double f1 = fv[static_cast<std::size_t>(c)][static_cast<std::size_t>(b1)];
        double f2 = fv[static_cast<std::size_t>(c)][static_cast<std::size_t>(b2)];
        rep.b[static_cast<std::size_t>(c)] = 0.5 * (f1 + f2);
        rep.xi_star[static_cast<std::size_t>(c)] = (f1 - f2) / (2.0 * rep.mu);
    }
    rep.pass = true;
    for (double p : p_list) {
        for (const auto& xi : xi_list) {
            if (static_cast<int>(xi.size()) != m) throw std::invalid_argument("oscf_lower_bound: xi dimension mismatch");
            std::vector<double> pot = detail::cell_potential(spec, cfg.n);
            if (pot.empty()) pot.assign(static_cast<std::size_t>(cfg.n), 0.0);
            for (int i = 0; i < cfg.n; ++i) {
                double y = static_cast<double>(i) / cfg.n;
                for (int c = 0; c < m; ++c) pot[static_cast<std::size_t>(i)] += xi[static_cast<std::size_t>(c)] * fs[static_cast<std::size_t>(c)].value(y);
            }
            EffectivePoint pt = detail::effective_point(spec, std::move(pot), 1.0, p, cfg);
            OscfRow row;
            row.p = p;
            row.xi = xi;
            row.lambda = pt.lambda;
            double bxi = 0.0, xxi = 0.0;
            for (int c = 0; c < m; ++c) {
                bxi += rep.b[static_cast<std::size_t>(c)] * xi[static_cast<std::size_t>(c)];
                xxi += rep.xi_star[static_cast<std::size_t>(c)] * xi[static_cast<std::size_t>(c)];
            }
            row.bound = bxi + rep.mu * std::abs(xxi);
            row.margin = row.lambda - row.bound;
            row.ok = row.margin >= -(pt.residual + 10.0 * cfg.tol);
            if (!row.ok) rep.pass = false;
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

}  // namespace phj
