#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/cell_problem.hpp"
#include "phj/grid.hpp"
#include "phj/grid_solver.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/paths.hpp"
#include "phj/util.hpp"
#include "phj/variational.hpp"

namespace phj {

struct SegmentRun {
    double t0 = 0.0;
    double t1 = 0.0;
    double increment = 0.0;
    int direction = 0;
    long steps = 0;
};

struct PathwiseSolveRecord {
    std::vector<double> checkpoint_times;
    std::vector<GridFunction> states;  // periodic representative; full value = affine_p*x + state
    std::vector<double> lip_trace;     // discrete Lipschitz constant of the full value per checkpoint
    std::vector<SegmentRun> segments;
    double affine_p = 0.0;
    double horizon = 0.0;
    double max_lip = 0.0;
    bool aborted = false;
    std::size_t abort_segment = 0;
    bool truncated = false;  // Hopf-Lax table range exhausted somewhere (homogenized driver only)
};

namespace detail {

inline std::vector<double> checkpoint_union(const std::vector<MonotoneSegment>& segs, std::vector<double> req,
                                            double horizon) {
    req.push_back(0.0);
    req.push_back(horizon);
    for (const auto& s : segs) {
        req.push_back(s.t0);
        req.push_back(s.t1);
    }
    for (double t : req)
        if (!(t >= -1e-12 && t <= horizon + 1e-12)) throw std::invalid_argument("checkpoints must lie in [0, horizon]");
    std::sort(req.begin(), req.end());
    std::vector<double> out;
    for (double t : req) {
        t = std::min(std::max(t, 0.0), horizon);
        if (out.empty() || t - out.back() > 1e-12) out.push_back(t);
    }
    return out;
}

inline double full_lipschitz(const GridFunction& u, double affine_p) {
    const std::size_t n = u.v.size();
    const double dx = u.grid.dx();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1 == n) ? 0 : i + 1;
        m = std::max(m, std::abs(affine_p + (u.v[j] - u.v[i]) / dx));
    }
    return m;
}

}  // namespace detail

// Splitting driver: march u_t + H(Du, x/eps)*Wdot = 0 segment by segment; on a
// monotone segment with increment d the inner solve runs for time |d| with the
// sign of d, and flat segments are the identity.
inline PathwiseSolveRecord solve_pathwise(const HamiltonianSpec& spec, double eps, const PiecewiseLinearPath& path,
                                          const GridFunction& u0, const std::vector<double>& checkpoints,
                                          const SchemeConfig& cfg = SchemeConfig{}, double affine_p = 0.0) {
    if (path.dim() != 1) throw std::invalid_argument("solve_pathwise: path must be scalar");
    if (!(eps > 0.0)) throw std::invalid_argument("solve_pathwise: eps must be positive");
    double cells = u0.grid.length / eps;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
        throw std::invalid_argument("solve_pathwise: grid length must be an integer number of eps-cells");

    PathwiseSolveRecord rec;
    rec.affine_p = affine_p;
    rec.horizon = path.horizon();
    std::vector<MonotoneSegment> segs = monotone_segments(path, 0);
    rec.checkpoint_times = detail::checkpoint_union(segs, checkpoints, rec.horizon);

    GridFunction u = u0;
    std::size_t cp = 0;
    auto record_state = [&](double t) {
        while (cp < rec.checkpoint_times.size() && rec.checkpoint_times[cp] <= t + 1e-12) {
            rec.states.push_back(u);
            rec.lip_trace.push_back(detail::full_lipschitz(u, affine_p));
            rec.max_lip = std::max(rec.max_lip, rec.lip_trace.back());
            ++cp;
        }
    };
    record_state(0.0);

    for (std::size_t si = 0; si < segs.size(); ++si) {
        const MonotoneSegment& s = segs[si];
        SegmentRun run;
        run.t0 = s.t0;
        run.t1 = s.t1;
        run.increment = s.increment;
        run.direction = s.direction;
        double w_cur = path.value(s.t0);
        double t_cur = s.t0;
        while (cp < rec.checkpoint_times.size() && rec.checkpoint_times[cp] <= s.t1 + 1e-12) {
            double t_next = std::min(rec.checkpoint_times[cp], s.t1);
            if (s.direction != 0 && t_next > t_cur) {
                double w_next = path.value(t_next);
                double ds = std::abs(w_next - w_cur);
                if (ds > 0.0) {
                    EvolveStats stats;
                    if (affine_p == 0.0)
                        u = evolve(spec, eps, s.direction, u, ds, cfg, &stats);
                    else
                        u = evolve_affine(spec, eps, s.direction, u, ds, affine_p, cfg, &stats);
                    run.steps += stats.steps;
                    if (stats.aborted) {
                        rec.aborted = true;
                        rec.abort_segment = si;
                    }
                }
                w_cur = w_next;
            }
            t_cur = t_next;
            rec.states.push_back(u);
            rec.lip_trace.push_back(detail::full_lipschitz(u, affine_p));
            rec.max_lip = std::max(rec.max_lip, rec.lip_trace.back());
            ++cp;
            if (rec.aborted) break;
        }
        rec.segments.push_back(run);
        if (rec.aborted) break;
    }
    while (cp < rec.checkpoint_times.size()) {  // abort path: freeze the last state
        rec.states.push_back(u);
        rec.lip_trace.push_back(detail::full_lipschitz(u, affine_p));
        ++cp;
    }
    return rec;
}

// Homogenized driver: compose Hopf-Lax semigroups of the tabulated effective
// Hamiltonian along the same monotone decomposition. Only increments enter, so
// the result is invariant under reparametrizing the path's time axis.
inline PathwiseSolveRecord solve_homogenized(const EffectiveTable& table, const PiecewiseLinearPath& path,
                                             const GridFunction& u0, const std::vector<double>& checkpoints,
                                             double affine_p = 0.0, int conj_points = 2049) {
    if (path.dim() != 1) throw std::invalid_argument("solve_homogenized: path must be scalar");
    ConsistencyReport gate = consistency_check(table);
    if (!gate.consistent)
        throw std::invalid_argument("solve_homogenized: effective table fails the consistency gate (max gap " +
                                    fmt_g17(gate.max_gap) + ")");
    if (!table.convex) throw std::invalid_argument("solve_homogenized: effective table is not convex");
    LegendreTable conj = make_conjugate(table.p, table.hbar, conj_points);

    PathwiseSolveRecord rec;
    rec.affine_p = affine_p;
    rec.horizon = path.horizon();
    std::vector<MonotoneSegment> segs = monotone_segments(path, 0);
    rec.checkpoint_times = detail::checkpoint_union(segs, checkpoints, rec.horizon);

    GridFunction u = u0;
    std::size_t cp = 0;
    while (cp < rec.checkpoint_times.size() && rec.checkpoint_times[cp] <= 1e-12) {
        rec.states.push_back(u);
        rec.lip_trace.push_back(detail::full_lipschitz(u, affine_p));
        rec.max_lip = std::max(rec.max_lip, rec.lip_trace.back());
        ++cp;
    }
    for (const auto& s : segs) {
        SegmentRun run;
        run.t0 = s.t0;
        run.t1 = s.t1;
        run.increment = s.increment;
        run.direction = s.direction;
        double w_cur = path.value(s.t0);
        double t_cur = s.t0;
        while (cp < rec.checkpoint_times.size() && rec.checkpoint_times[cp] <= s.t1 + 1e-12) {
            double t_next = std::min(rec.checkpoint_times[cp], s.t1);
            if (s.direction != 0 && t_next > t_cur) {
                double ds = std::abs(path.value(t_next) - w_cur);
                if (ds > 0.0) {
                    HopfLaxResult r = hopf_lax(conj, u, ds, s.direction, affine_p);
                    u = std::move(r.u);
                    rec.truncated = rec.truncated || r.truncated;
                    run.steps += 1;
                }
                w_cur = path.value(t_next);
            }
            t_cur = t_next;
            rec.states.push_back(u);
            rec.lip_trace.push_back(detail::full_lipschitz(u, affine_p));
            rec.max_lip = std::max(rec.max_lip, rec.lip_trace.back());
            ++cp;
        }
        rec.segments.push_back(run);
    }
    return rec;
}

inline const GridFunction& state_at(const PathwiseSolveRecord& rec, double t, double tol = 1e-9) {
    for (std::size_t i = 0; i < rec.checkpoint_times.size(); ++i)
        if (std::abs(rec.checkpoint_times[i] - t) <= tol) return rec.states[i];
    throw std::invalid_argument("state_at: no checkpoint at t = " + fmt_g17(t));
}

inline double lipschitz_at(const PathwiseSolveRecord& rec, double t, double tol = 1e-9) {
    for (std::size_t i = 0; i < rec.checkpoint_times.size(); ++i)
        if (std::abs(rec.checkpoint_times[i] - t) <= tol) return rec.lip_trace[i];
    throw std::invalid_argument("lipschitz_at: no checkpoint at t = " + fmt_g17(t));
}

// Stability of the solution map in the driving path: difference at time t is
// measured against base + C1 * L^{q'} * sup_{s<=t} |W1 - W2|, and the spatial
// modulus of u(.,t) against C2 * L * s.
struct StabilityRow {
    double t = 0.0;
    double diff = 0.0;
    double path_gap = 0.0;
    double modulus_ratio = 0.0;
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
    double base_gap = 0.0;
    double lip0 = 0.0;
    double growth_conjugate = 1.0;
    double c1 = 0.0;  // smallest admissible constant across the batch
    double c2 = 0.0;  // equicontinuity constant across checkpoints
    bool contraction_ok = false;
};

namespace detail {

inline double path_sup_gap(const PiecewiseLinearPath& a, const PiecewiseLinearPath& b, double t) {
    std::vector<double> knots;
    for (double s : a.times)
        if (s <= t + 1e-12) knots.push_back(std::min(s, t));
    for (double s : b.times)
        if (s <= t + 1e-12) knots.push_back(std::min(s, t));
    knots.push_back(t);
    double m = 0.0;
    for (double s : knots) m = std::max(m, std::abs(a.value(s) - b.value(s)));
    return m;
}

inline double growth_conjugate(double q) {
    if (q > 1.0) return q / (q - 1.0);
    return 1.0;
}

template <typename Solver>
inline StabilityReport stability_core(Solver&& run, double q, const GridFunction& u0a, const GridFunction& u0b,
                                      const PiecewiseLinearPath& w1, const PiecewiseLinearPath& w2,
                                      const std::vector<double>& checkpoints, double affine_p) {
    if (std::abs(w1.value(0.0) - w2.value(0.0)) > 1e-12)
        throw std::invalid_argument("stability_check: paths must start at the same value");
    if (std::abs(w1.horizon() - w2.horizon()) > 1e-12)
        throw std::invalid_argument("stability_check: paths must share the horizon");
    if (!(u0a.grid == u0b.grid)) throw std::invalid_argument("stability_check: initial data grids differ");

    PathwiseSolveRecord ra = run(w1, u0a);
    PathwiseSolveRecord rb = run(w2, u0b);

    StabilityReport rep;
    rep.base_gap = max_abs_diff(u0a, u0b);
    rep.lip0 = std::max(detail::full_lipschitz(u0a, affine_p), detail::full_lipschitz(u0b, affine_p));
    rep.growth_conjugate = growth_conjugate(q);
    const double lpow = std::pow(std::max(rep.lip0, 1e-12), rep.growth_conjugate);
    const double dx = u0a.grid.dx();
    std::vector<double> probes = {4.0 * dx, 8.0 * dx, 16.0 * dx};

    std::vector<double> ts = checkpoints;
    ts.push_back(w1.horizon());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), ts.end());

    bool contraction = true;
    for (double t : ts) {
        if (t < -1e-12 || t > w1.horizon() + 1e-12) throw std::invalid_argument("stability_check: checkpoint outside horizon");
        StabilityRow row;
        row.t = t;
        const GridFunction& ua = state_at(ra, t);
        const GridFunction& ub = state_at(rb, t);
        row.diff = max_abs_diff(ua, ub);
        row.path_gap = path_sup_gap(w1, w2, t);
        double mr = 0.0;
        for (double s : probes)
            if (s < 0.5 * u0a.grid.length) mr = std::max(mr, spatial_modulus(ua, s) / (std::max(rep.lip0, 1e-12) * s));
        row.modulus_ratio = mr;
        if (row.path_gap > 1e-14) rep.c1 = std::max(rep.c1, (row.diff - rep.base_gap) / (lpow * row.path_gap));
        rep.c2 = std::max(rep.c2, mr);
        if (row.diff > rep.base_gap + 1e-10 + 1e-10 * std::abs(rep.base_gap) && row.path_gap <= 1e-14) contraction = false;
        rep.rows.push_back(row);
    }
    rep.contraction_ok = contraction;
    return rep;
}

}  // namespace detail

inline StabilityReport stability_check(const HamiltonianSpec& spec, double eps, const GridFunction& u0a,
                                       const GridFunction& u0b, const PiecewiseLinearPath& w1,
                                       const PiecewiseLinearPath& w2, const std::vector<double>& checkpoints,
                                       const SchemeConfig& cfg = SchemeConfig{}, double affine_p = 0.0) {
    auto run = [&](const PiecewiseLinearPath& w, const GridFunction& u0) {
        return solve_pathwise(spec, eps, w, u0, checkpoints, cfg, affine_p);
    };
    return detail::stability_core(run, spec.growth_exponent(), u0a, u0b, w1, w2, checkpoints, affine_p);
}

inline StabilityReport stability_check(const EffectiveTable& table, double q, const GridFunction& u0a,
                                       const GridFunction& u0b, const PiecewiseLinearPath& w1,
                                       const PiecewiseLinearPath& w2, const std::vector<double>& checkpoints,
                                       double affine_p = 0.0) {
    auto run = [&](const PiecewiseLinearPath& w, const GridFunction& u0) {
        return solve_homogenized(table, w, u0, checkpoints, affine_p);
    };
    return detail::stability_core(run, q, u0a, u0b, w1, w2, checkpoints, affine_p);
}

// Lipschitz-envelope audit of a splitting record: fitted exponential-rate c0
// with Lip(t) <= exp(c0 t/eta) (Lip0 + 1), and the additive envelope
// Lip(t) <= Lip0 + 2 t/eta available for potentials with matched growth caps.
struct LipTraceReport {
    double lip0 = 0.0;
    double c0 = 0.0;
    bool additive_ok = false;
    double additive_slack = 0.0;
    bool nonincreasing = true;
};

inline LipTraceReport lipschitz_growth_trace(const PathwiseSolveRecord& rec, double eta) {
    if (rec.lip_trace.empty()) throw std::invalid_argument("lipschitz_growth_trace: record has no trace");
    if (!(eta > 0.0)) throw std::invalid_argument("lipschitz_growth_trace: eta must be positive");
    LipTraceReport rep;
    rep.lip0 = rec.lip_trace.front();
    double worst_add = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rec.lip_trace.size(); ++i) {
        double t = rec.checkpoint_times[i];
        double lip = rec.lip_trace[i];
        if (t > 1e-12 && lip > rep.lip0 + 1.0)
            rep.c0 = std::max(rep.c0, (eta / t) * std::log(lip / (rep.lip0 + 1.0)));
        worst_add = std::max(worst_add, lip - (rep.lip0 + 2.0 * t / eta));
        if (i > 0 && lip > rec.lip_trace[i - 1] + 1e-9) rep.nonincreasing = false;
    }
    rep.additive_slack = worst_add;
    rep.additive_ok = worst_add <= 1e-9;
    return rep;
}

}  // namespace phj
