#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/cell_problem.hpp"
#include "phj/grid.hpp"
#include "phj/grid_solver.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/paths.hpp"
#include "phj/pathwise.hpp"
#include "phj/rng.hpp"
#include "phj/util.hpp"
#include "phj/variational.hpp"

namespace phj {

// ---------------------------------------------------------------------------
// homogenization rate sweeps
// ---------------------------------------------------------------------------

struct RateRow {
    double eps = 0.0;
    double eta = 0.0;
    double error = 0.0;
    double envelope = 0.0;  // modulus of the source path at the chosen eta
    bool eta_clamped = false;
    bool aborted = false;
};

struct RateReport {
    std::vector<RateRow> rows;
    double T = 1.0;
    double beta = 1.0 / 3.0;
    double slope = 0.0;       // log-log fit over clean rows
    double envelope_c = 0.0;  // max error / envelope
    int inversions = 0;
    bool monotone_ok = false;  // at most one inversion
    bool halved = false;       // last error <= half of the first
    bool assumption_ok = true; // mild mode: eps^beta / eta decreasing
    bool pass = false;
};

struct RateOptions {
    double T = 1.0;
    double beta = 1.0 / 3.0;
    int nodes_per_cell = 16;
    // Per-cell resolution grows like (eps_front/eps)^cell_refine along the
    // sweep. The scheme's dissipation shifts the effective flux by O(1/npc)
    // uniformly in eps, so a fixed npc bottoms out at that floor; a positive
    // exponent lets the discretization error vanish together with eps.
    double cell_refine = 0.0;
    int n_min = 128;
    int n_max = 4096;
    std::vector<double> checkpoints;  // defaults to quarters of [0,T]
    SchemeConfig scheme;
    int conj_points = 2049;
};

namespace detail {

inline int sweep_grid_n(double eps, double eps_front, const RateOptions& opt) {
    double cells = std::round(1.0 / eps);
    double per_cell = opt.nodes_per_cell;
    if (opt.cell_refine > 0.0 && eps_front > 0.0 && eps < eps_front)
        per_cell *= std::pow(eps_front / eps, opt.cell_refine);
    double want = cells * per_cell;
    want = std::min(want, static_cast<double>(opt.n_max));
    want = std::max(want, static_cast<double>(opt.n_min));
    int n = static_cast<int>(std::round(want / cells) * cells);  // keep an integer count per cell
    if (n < static_cast<int>(cells)) n = static_cast<int>(cells);
    return std::max(n, 8);
}

inline std::vector<double> sweep_checkpoints(const RateOptions& opt) {
    if (!opt.checkpoints.empty()) return opt.checkpoints;
    return {0.25 * opt.T, 0.5 * opt.T, 0.75 * opt.T, opt.T};
}

inline RateRow sweep_point(const HamiltonianSpec& spec, const EffectiveTable& table,
                           const PiecewiseLinearPath& source, const std::function<double(double)>& u0_fn,
                           double eps, double eps_front, double eta, const RateOptions& opt) {
    RateRow row;
    row.eps = eps;
    row.eta = eta;
    PiecewiseLinearPath weta = interpolate(source, eta, 0);
    Grid1D g = make_grid(1.0, sweep_grid_n(eps, eps_front, opt));
    GridFunction u0 = sample(g, u0_fn);
    std::vector<double> cps = sweep_checkpoints(opt);
    PathwiseSolveRecord pw = solve_pathwise(spec, eps, weta, u0, cps, opt.scheme);
    PathwiseSolveRecord hom = solve_homogenized(table, weta, u0, cps, 0.0, opt.conj_points);
    row.aborted = pw.aborted;
    double err = 0.0;
    for (double t : cps) err = std::max(err, max_abs_diff(state_at(pw, t), state_at(hom, t)));
    row.error = err;
    return row;
}

inline void finish_rate_report(RateReport& rep) {
    std::vector<double> le, lr;
    double prev = std::numeric_limits<double>::infinity();
    bool first_set = false;
    double first_err = 0.0, last_err = 0.0;
    for (const auto& row : rep.rows) {
        if (row.aborted) continue;
        if (!first_set) {
            first_err = row.error;
            first_set = true;
        }
        last_err = row.error;
        if (row.error > prev * (1.0 + 1e-9)) rep.inversions += 1;
        prev = row.error;
        if (row.error > 0.0 && row.eps > 0.0) {
            le.push_back(std::log(row.eps));
            lr.push_back(std::log(row.error));
        }
        if (row.envelope > 0.0) rep.envelope_c = std::max(rep.envelope_c, row.error / row.envelope);
    }
    if (le.size() >= 2) rep.slope = least_squares(le, lr).slope;
    rep.monotone_ok = rep.inversions <= 1;
    rep.halved = first_set && last_err <= 0.5 * first_err;
    bool clean = true;
    for (const auto& row : rep.rows) clean = clean && !row.aborted;
    rep.pass = clean && rep.monotone_ok && rep.halved && rep.assumption_ok;
}

}  // namespace detail

// Optimal-eta sweep: eta solves eta * omega(eta) = T * eps^beta on the source
// path's modulus, the predicted error envelope is omega(eta).
inline RateReport rate_sweep(const HamiltonianSpec& spec, const EffectiveTable& table,
                             const PiecewiseLinearPath& source, const std::function<double(double)>& u0_fn,
                             const std::vector<double>& eps_list, const RateOptions& opt = RateOptions{}) {
    if (eps_list.size() < 2) throw std::invalid_argument("rate_sweep: need at least two eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("rate_sweep: eps list must be strictly decreasing");
    if (source.horizon() < opt.T - 1e-12) throw std::invalid_argument("rate_sweep: source path shorter than T");
    std::vector<double> lags;
    for (int k = 10; k >= 0; --k) lags.push_back(opt.T * std::pow(2.0, -k));
    ModulusTable mod = modulus_table(source, opt.T, lags);
    RateReport rep;
    rep.T = opt.T;
    rep.beta = opt.beta;
    for (double eps : eps_list) {
        ChiQuery q = chi_eval(mod, opt.T * std::pow(eps, opt.beta));
        RateRow row = detail::sweep_point(spec, table, source, u0_fn, eps, eps_list.front(), q.s, opt);
        row.eta_clamped = q.clamped;
        row.envelope = mod.eval(q.s);
        rep.rows.push_back(row);
    }
    detail::finish_rate_report(rep);
    return rep;
}

// Fixed-law sweep eta = eps^rho; convergence is only asserted when the
// coupling eps^beta / eta -> 0 holds along the list.
inline RateReport mild_sweep(const HamiltonianSpec& spec, const EffectiveTable& table,
                             const PiecewiseLinearPath& source, const std::function<double(double)>& u0_fn,
                             const std::vector<double>& eps_list, double rho,
                             const RateOptions& opt = RateOptions{}) {
    if (eps_list.size() < 2) throw std::invalid_argument("mild_sweep: need at least two eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("mild_sweep: eps list must be strictly decreasing");
    if (!(rho > 0.0)) throw std::invalid_argument("mild_sweep: rho must be positive");
    if (source.horizon() < opt.T - 1e-12) throw std::invalid_argument("mild_sweep: source path shorter than T");
    std::vector<double> lags;
    for (int k = 10; k >= 0; --k) lags.push_back(opt.T * std::pow(2.0, -k));
    ModulusTable mod = modulus_table(source, opt.T, lags);
    RateReport rep;
    rep.T = opt.T;
    rep.beta = opt.beta;
    double prev_ratio = std::numeric_limits<double>::infinity();
    double first_ratio = -1.0, last_ratio = 0.0;
    for (double eps : eps_list) {
        double eta = std::pow(eps, rho);
        double ratio = std::pow(eps, opt.beta) / eta;
        if (first_ratio < 0.0) first_ratio = ratio;
        last_ratio = ratio;
        if (ratio > prev_ratio * (1.0 + 1e-12)) rep.assumption_ok = false;
        prev_ratio = ratio;
        RateRow row = detail::sweep_point(spec, table, source, u0_fn, eps, eps_list.front(), eta, opt);
        row.envelope = mod.eval(std::min(eta, mod.horizon));
        rep.rows.push_back(row);
    }
    if (!(last_ratio <= 0.75 * first_ratio)) rep.assumption_ok = false;
    detail::finish_rate_report(rep);
    if (!rep.assumption_ok) rep.pass = false;  // no convergence claim without the coupling
    return rep;
}

inline std::string rate_csv(const RateReport& rep) {
    std::string out = "eps,eta,error,envelope\n";
    for (const auto& r : rep.rows) {
        out += fmt_g17(r.eps);
        out += ",";
        out += fmt_g17(r.eta);
        out += ",";
        out += fmt_g17(r.error);
        out += ",";
        out += fmt_g17(r.envelope);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// blow-up scaling
// ---------------------------------------------------------------------------

struct BlowupRow {
    double eps = 0.0;
    double eta = 0.0;
    double sup_u = 0.0;            // sup_x of the computed solution at time t
    double scaled_sup = 0.0;       // sup_u * eps^(sigma*theta - (sigma-1)_+)
    double candidate = 0.0;        // control-candidate action value (>= 0 expected)
    double scaled_candidate = 0.0;
    bool consistent = true;
};

struct BlowupReport {
    std::vector<BlowupRow> rows;
    double theta = 0.5;
    double sigma = 1.0;
    double t = 1.0;
    double exponent = 0.5;  // sigma*theta - (sigma-1)_+
    double kappa = 0.0;     // min over rows of -scaled_sup
    bool negative = false;  // all scaled sups below zero
    bool stable = false;    // -scaled_sup within a factor 3 across the sweep
    bool pass = false;
};

enum class BlowupMode { Pde, Control, Both };

struct BlowupOptions {
    int nodes_per_cell = 128;
    int depth_cap = 14;
    double nu = 0.25;
    unsigned long long seed = 2024;
    SchemeConfig scheme;
    BlowupMode mode = BlowupMode::Both;
};

inline BlowupReport blowup_experiment(const PotentialSpec& f, double theta, double sigma, double t,
                                      const std::vector<double>& eps_list, const BlowupOptions& opt = BlowupOptions{}) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("blowup_experiment: theta must lie in (0,1)");
    if (!(sigma > 0.0 && sigma < 1.0 / (1.0 - theta)))
        throw std::invalid_argument("blowup_experiment: sigma must lie in (0, 1/(1-theta))");
    if (!(t > 0.0)) throw std::invalid_argument("blowup_experiment: t must be positive");
    HamiltonianSpec spec = make_eikonal_forcing(f);
    BlowupReport rep;
    rep.theta = theta;
    rep.sigma = sigma;
    rep.t = t;
    rep.exponent = sigma * theta - std::max(sigma - 1.0, 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool negative = true;
    for (double eps : eps_list) {
        if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("blowup_experiment: eps must lie in (0,1)");
        BlowupRow row;
        row.eps = eps;
        double eta_target = std::pow(eps, sigma);
        int depth = static_cast<int>(std::min(static_cast<double>(opt.depth_cap),
                                              std::ceil(-std::log2(eta_target))));
        row.eta = std::pow(2.0, -depth);  // dyadic step so the interpolant subsamples the cascade exactly

        PathFamilySpec pf;
        pf.family = PathFamily::TakagiLike;
        pf.theta = theta;
        pf.depth = opt.depth_cap;
        pf.seed = opt.seed;
        PiecewiseLinearPath cascade = gen_path(pf, t).front();
        PiecewiseLinearPath weta = interpolate(cascade, row.eta, 0);

        double scale = std::pow(eps, rep.exponent);
        if (opt.mode != BlowupMode::Control) {
            Grid1D g = make_grid(eps, opt.nodes_per_cell);  // solution is eps-periodic: one cell suffices
            GridFunction u = constant(g, 0.0);
            long K = std::lround(t / row.eta);
            if (std::abs(K * row.eta - t) > 1e-9) throw std::invalid_argument("blowup_experiment: t must be a multiple of eta");
            for (long k = 0; k < K; ++k) {
                double w0 = weta.value(static_cast<double>(k) * row.eta);
                double w1 = weta.value(static_cast<double>(k + 1) * row.eta);
                u = evolve_forced(spec, eps, 1.0, (w1 - w0) / row.eta, u, row.eta, opt.scheme);
            }
            double sup = -std::numeric_limits<double>::infinity();
            for (double v : u.v) sup = std::max(sup, v);
            row.sup_u = sup;
            row.scaled_sup = sup * scale;
        }
        if (opt.mode != BlowupMode::Pde) {
            BlowupCandidate cand = blowup_candidate(f, weta, eps, t, 0.0, opt.nu, sigma);
            row.candidate = cand.value;
            row.scaled_candidate = cand.value * scale;
        }
        if (opt.mode == BlowupMode::Both) {
            double neg_sup = -row.sup_u;
            double ratio = neg_sup > 0.0 ? row.candidate / neg_sup : -1.0;
            row.consistent = neg_sup > 0.0 && row.candidate > 0.0 && ratio >= 1.0 / 3.0 && ratio <= 3.0;
        }
        if (opt.mode != BlowupMode::Control) {
            negative = negative && row.scaled_sup < 0.0;
            double mag = -row.scaled_sup;
            if (mag > 0.0) {
                lo = std::min(lo, mag);
                hi = std::max(hi, mag);
            }
        }
        rep.rows.push_back(row);
    }
    if (opt.mode == BlowupMode::Control) {
        bool ok = true;
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        for (const auto& r : rep.rows) {
            ok = ok && r.scaled_candidate > 0.0;
            lo = std::min(lo, r.scaled_candidate);
            hi = std::max(hi, r.scaled_candidate);
        }
        rep.kappa = std::isfinite(lo) ? lo : 0.0;
        rep.negative = ok;  // candidates positive means the solution bound is negative
        rep.stable = ok && hi <= 3.0 * lo;
        rep.pass = rep.negative && rep.stable;
        return rep;
    }
    rep.negative = negative;
    rep.kappa = (negative && std::isfinite(lo)) ? lo : 0.0;
    rep.stable = negative && std::isfinite(lo) && hi <= 3.0 * lo;
    bool cons = true;
    if (opt.mode == BlowupMode::Both)
        for (const auto& r : rep.rows) cons = cons && r.consistent;
    rep.pass = rep.negative && rep.stable && cons;
    return rep;
}

inline std::string blowup_csv(const BlowupReport& rep) {
    std::string out = "eps,eta,sup_u,scaled_sup,candidate,scaled_candidate\n";
    for (const auto& r : rep.rows) {
        out += fmt_g17(r.eps);
        out += ",";
        out += fmt_g17(r.eta);
        out += ",";
        out += fmt_g17(r.sup_u);
        out += ",";
        out += fmt_g17(r.scaled_sup);
        out += ",";
        out += fmt_g17(r.candidate);
        out += ",";
        out += fmt_g17(r.scaled_candidate);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// random-walk driving (weak convergence to Brownian motion)
// ---------------------------------------------------------------------------

struct DonskerReport {
    int samples = 0;
    double eps = 0.0;
    double eta = 0.0;
    double T = 1.0;
    std::vector<double> ks_times;
    std::vector<double> ks_u;       // KS distance of u^eps(0,t) against N(0,t)
    std::vector<double> ks_w;       // same for the explicit walk functional
    std::vector<double> mean_u;     // empirical means (central-limit band check)
    std::vector<char> mean_ok;
    double coupling_max = 0.0;      // max over samples of sup_t max_x |u - W^eps|
    double coupling_unit = 0.0;     // (T/eta)*eps
    double fitted_c = 0.0;          // calibrated on the first half of the samples
    double within_fraction = 0.0;   // fraction of all samples inside fitted_c * unit
    double metric_diag = 0.0;       // path-space metric between u(0,.) and W^eps, first samples
    bool pass = false;
};

struct DonskerOptions {
    double T = 1.0;
    int nodes_per_cell = 32;
    IncrementDist x1 = IncrementDist::Rademacher;
    IncrementDist x2 = IncrementDist::UniformSym;
    std::vector<double> ks_times;  // defaults to quarters of [0,T]
    SchemeConfig scheme;
    int workers = 1;
    double ks_threshold = 0.05;
    double within_target = 0.99;
};

inline DonskerReport donsker_experiment(const HamiltonianSpec& spec, double eps, double eta, int samples,
                                        unsigned long long seed, const DonskerOptions& opt = DonskerOptions{}) {
    if (samples < 8) throw std::invalid_argument("donsker_experiment: need at least 8 samples");
    if (!(eps > 0.0 && eta > 0.0 && eta < 1.0)) throw std::invalid_argument("donsker_experiment: bad eps/eta");
    long K = std::lround(opt.T / eta);
    if (K < 1 || std::abs(K * eta - opt.T) > 1e-9)
        throw std::invalid_argument("donsker_experiment: T must be a positive multiple of eta");
    if (opt.x1 != IncrementDist::Rademacher)
        throw std::invalid_argument("donsker_experiment: X1 must be Rademacher (bounded increment ratio)");

    std::vector<double> ks_times = opt.ks_times;
    if (ks_times.empty()) ks_times = {0.25 * opt.T, 0.5 * opt.T, 0.75 * opt.T, opt.T};
    std::vector<long> ks_idx;
    for (double t : ks_times) {
        long k = std::lround(t / eta);
        if (k < 1 || k > K || std::abs(k * eta - t) > 1e-9)
            throw std::invalid_argument("donsker_experiment: checkpoint " + fmt_g17(t) + " is not a multiple of eta");
        ks_idx.push_back(k);
    }

    const double sq_eta = std::sqrt(eta);
    const double sq3 = std::sqrt(3.0);
    const std::size_t nt = ks_times.size();
    std::vector<double> coup(static_cast<std::size_t>(samples));
    std::vector<double> u_at(static_cast<std::size_t>(samples) * nt);
    std::vector<double> w_at(static_cast<std::size_t>(samples) * nt);
    std::vector<double> metric_acc(static_cast<std::size_t>(std::min(samples, 8)), 0.0);

    Grid1D g = make_grid(eps, opt.nodes_per_cell);  // constant data + eps-periodic medium
    parallel_for(static_cast<std::size_t>(samples), opt.workers, [&](std::size_t s) {
        CounterRng rng(seed, 1000 + s);
        GridFunction u = constant(g, 0.0);
        double weps = 0.0;
        double worst = 0.0;
        std::vector<double> u0_trace(static_cast<std::size_t>(K) + 1, 0.0);
        std::vector<double> w_trace(static_cast<std::size_t>(K) + 1, 0.0);
        std::size_t nk = 0;
        for (long k = 0; k < K; ++k) {
            double x1 = rng.rademacher();
            double x2 = opt.x2 == IncrementDist::UniformSym ? rng.uniform_sym(sq3) : rng.rademacher();
            u = evolve_forced(spec, eps, x1 / sq_eta, x2 / sq_eta, u, eta, opt.scheme);
            weps += -sq_eta * x1 * std::abs(x2);  // sgn(x1)=x1 for Rademacher steps
            for (double v : u.v) worst = std::max(worst, std::abs(v - weps));
            u0_trace[static_cast<std::size_t>(k) + 1] = u.v[0];
            w_trace[static_cast<std::size_t>(k) + 1] = weps;
            if (nk < nt && ks_idx[nk] == k + 1) {
                u_at[s * nt + nk] = u.v[0];
                w_at[s * nt + nk] = weps;
                ++nk;
            }
        }
        coup[s] = worst;
        if (s < metric_acc.size()) {
            std::vector<double> times(static_cast<std::size_t>(K) + 1);
            for (long k = 0; k <= K; ++k) times[static_cast<std::size_t>(k)] = static_cast<double>(k) * eta;
            PiecewiseLinearPath pu = make_path(times, {u0_trace});
            PiecewiseLinearPath pw = make_path(times, {w_trace});
            metric_acc[s] = path_metric(pu, pw);
        }
    });

    DonskerReport rep;
    rep.samples = samples;
    rep.eps = eps;
    rep.eta = eta;
    rep.T = opt.T;
    rep.ks_times = ks_times;
    rep.coupling_unit = (opt.T / eta) * eps;
    for (double c : coup) rep.coupling_max = std::max(rep.coupling_max, c);
    double calib = 0.0;
    for (int s = 0; s < samples / 2; ++s) calib = std::max(calib, coup[static_cast<std::size_t>(s)]);
    rep.fitted_c = 1.1 * calib / rep.coupling_unit;
    int within = 0;
    for (double c : coup)
        if (c <= rep.fitted_c * rep.coupling_unit * (1.0 + 1e-12)) ++within;
    rep.within_fraction = static_cast<double>(within) / samples;
    for (double m : metric_acc) rep.metric_diag = std::max(rep.metric_diag, m);

    bool ks_ok = true, mean_ok_all = true;
    for (std::size_t j = 0; j < nt; ++j) {
        double t = ks_times[j];
        std::vector<double> su(static_cast<std::size_t>(samples)), sw(static_cast<std::size_t>(samples));
        double mu = 0.0;
        for (int s = 0; s < samples; ++s) {
            su[static_cast<std::size_t>(s)] = u_at[static_cast<std::size_t>(s) * nt + j];
            sw[static_cast<std::size_t>(s)] = w_at[static_cast<std::size_t>(s) * nt + j];
            mu += su[static_cast<std::size_t>(s)];
        }
        mu /= samples;
        std::sort(su.begin(), su.end());
        std::sort(sw.begin(), sw.end());
        double sd = std::sqrt(t);
        auto cdf = [sd](double x) { return normal_cdf(x / sd); };
        rep.ks_u.push_back(ks_statistic(su, cdf));
        rep.ks_w.push_back(ks_statistic(sw, cdf));
        rep.mean_u.push_back(mu);
        bool mok = std::abs(mu) <= 3.0 * std::sqrt(t / samples);
        rep.mean_ok.push_back(mok ? 1 : 0);
        mean_ok_all = mean_ok_all && mok;
        ks_ok = ks_ok && rep.ks_u.back() <= opt.ks_threshold && rep.ks_w.back() <= opt.ks_threshold;
    }
    rep.pass = ks_ok && mean_ok_all && rep.within_fraction >= opt.within_target;
    return rep;
}

inline std::string donsker_ks_csv(const DonskerReport& rep) {
    std::string out = "t,ks_u,ks_w,mean_u\n";
    for (std::size_t i = 0; i < rep.ks_times.size(); ++i) {
        out += fmt_g17(rep.ks_times[i]);
        out += ",";
        out += fmt_g17(rep.ks_u[i]);
        out += ",";
        out += fmt_g17(rep.ks_w[i]);
        out += ",";
        out += fmt_g17(rep.mean_u[i]);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// square-wave pair: uniform convergence with a vanishing-amplitude schedule
// ---------------------------------------------------------------------------

struct SquareWaveRow {
    double eta = 0.0;
    double mu = 0.0;
    double eps = 0.0;
    double sup_dev = 0.0;   // sup over segment ends of max_x |u + W1|
    double bound_unit = 0.0;  // (T/eta)*eps
    double c = 0.0;
    double sup_u = 0.0;     // sup |u| at the horizon
};

struct SquareWaveReport {
    std::vector<SquareWaveRow> rows;
    double T = 1.0;
    double fitted_c = 0.0;
    bool uniform_ok = false;  // sup|u| decreases to below its starting value
    bool pass = false;
};

struct SquareWaveOptions {
    double T = 1.0;
    int nodes_per_cell = 32;
    SchemeConfig scheme;
};

inline SquareWaveReport square_wave_experiment(const std::vector<double>& eta_list,
                                               const std::vector<double>& mu_list,
                                               const std::vector<double>& eps_list,
                                               const SquareWaveOptions& opt = SquareWaveOptions{}) {
    std::size_t m = eta_list.size();
    if (m == 0 || mu_list.size() != m || eps_list.size() != m)
        throw std::invalid_argument("square_wave_experiment: schedule lists must share a nonzero length");
    for (std::size_t i = 1; i < m; ++i) {
        if (!(mu_list[i] * eta_list[i] < mu_list[i - 1] * eta_list[i - 1]))
            throw std::invalid_argument("square_wave_experiment: schedule violation: mu*eta must decrease");
        if (!(eps_list[i] / eta_list[i] < eps_list[i - 1] / eta_list[i - 1]))
            throw std::invalid_argument("square_wave_experiment: schedule violation: eps/eta must decrease");
    }
    HamiltonianSpec spec = make_eikonal_forcing(PotentialSpec::cosine(1.0, 1));
    SquareWaveReport rep;
    rep.T = opt.T;
    for (std::size_t i = 0; i < m; ++i) {
        double eta = eta_list[i], mu = mu_list[i], eps = eps_list[i];
        long K = std::lround(opt.T / eta);
        if (K < 1 || std::abs(K * eta - opt.T) > 1e-9)
            throw std::invalid_argument("square_wave_experiment: T must be a multiple of each eta");
        PathFamilySpec pf;
        pf.family = PathFamily::SquareWavePair;
        pf.eta = eta;
        pf.mu = mu;
        std::vector<PiecewiseLinearPath> pair = gen_path(pf, opt.T);
        const PiecewiseLinearPath& w1 = pair[0];

        Grid1D g = make_grid(eps, opt.nodes_per_cell);
        GridFunction u = constant(g, 0.0);
        SquareWaveRow row;
        row.eta = eta;
        row.mu = mu;
        row.eps = eps;
        row.bound_unit = (opt.T / eta) * eps;
        for (long k = 0; k < K; ++k) {
            double t0 = static_cast<double>(k) * eta, t1 = static_cast<double>(k + 1) * eta;
            double s1 = (pair[0].value(t1) - pair[0].value(t0)) / eta;
            double s2 = (pair[1].value(t1) - pair[1].value(t0)) / eta;
            u = evolve_forced(spec, eps, s1, s2, u, eta, opt.scheme);
            double w1v = w1.value(t1);
            for (double v : u.v) row.sup_dev = std::max(row.sup_dev, std::abs(v + w1v));
        }
        for (double v : u.v) row.sup_u = std::max(row.sup_u, std::abs(v));
        row.c = row.sup_dev / row.bound_unit;
        rep.fitted_c = std::max(rep.fitted_c, row.c);
        rep.rows.push_back(row);
    }
    rep.uniform_ok = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        rep.uniform_ok = rep.uniform_ok && rep.rows[i].sup_u < rep.rows[i - 1].sup_u + 1e-12;
    if (rep.rows.size() >= 2) rep.uniform_ok = rep.uniform_ok && rep.rows.back().sup_u < rep.rows.front().sup_u;
    rep.pass = rep.uniform_ok;
    return rep;
}

inline std::string square_wave_csv(const SquareWaveReport& rep) {
    std::string out = "eta,mu,eps,sup_dev,c,sup_u\n";
    for (const auto& r : rep.rows) {
        out += fmt_g17(r.eta);
        out += ",";
        out += fmt_g17(r.mu);
        out += ",";
        out += fmt_g17(r.eps);
        out += ",";
        out += fmt_g17(r.sup_dev);
        out += ",";
        out += fmt_g17(r.c);
        out += ",";
        out += fmt_g17(r.sup_u);
        out += "\n";
    }
    return out;
}

}  // namespace phj
