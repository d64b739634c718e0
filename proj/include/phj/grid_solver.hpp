#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/grid.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/util.hpp"

namespace phj {

enum class FluxKind { LaxFriedrichs, EngquistOsherConvex };

struct SchemeConfig {
    FluxKind flux = FluxKind::LaxFriedrichs;
    double cfl = 0.9;
    double alpha_hint = 0.0;         // expected max gradient, seeds the viscosity bound
    double gradient_ceiling = std::numeric_limits<double>::infinity();  // abort above this
};

struct EvolveStats {
    long steps = 0;
    double alpha = 0.0;
    double max_lip = 0.0;
    double t_reached = 0.0;
    bool aborted = false;
};

namespace detail {

// u_t + coef*(K(p0 + Du) + pot(x)) + fcoef*force(x) = 0 on a periodic grid.
// The forcing is x-only, so it enters as exact vertical shifts fused around
// each flux step (Strang splitting).
struct FluxProblem {
    const HamiltonianSpec* spec = nullptr;
    double coef = 1.0;
    double p0 = 0.0;
    std::vector<double> pot;
    std::vector<double> force;
    double fcoef = 0.0;
    double pot_lip = 0.0;
    double force_lip = 0.0;
};

inline double array_lip(const std::vector<double>& a, double dx) {
    double m = 0.0;
    std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1 == n) ? 0 : i + 1;
        m = std::max(m, std::abs(a[j] - a[i]) / dx);
    }
    return m;
}

inline void gradients(const std::vector<double>& v, double dx, std::vector<double>& dm) {
    const std::size_t n = v.size();
    dm.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t h = (i == 0) ? n - 1 : i - 1;
        dm[i] = (v[i] - v[h]) / dx;
    }
}

// One monotone flux update with fixed dt and viscosity alpha (LF) or the
// Engquist-Osher upwind flux (convex kinetic, coef > 0 only).
inline void flux_update(const Grid1D& g, const FluxProblem& pr, FluxKind flux, double alpha, double dt,
                        const std::vector<double>& dm, std::vector<double>& v) {
    const std::size_t n = v.size();
    const double c = pr.coef;
    std::vector<double>& out = v;
    static thread_local std::vector<double> rate;
    rate.resize(n);
    if (flux == FluxKind::LaxFriedrichs) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = (i + 1 == n) ? 0 : i + 1;
            double a = dm[i], b = dm[j];
            double hval = pr.spec->kinetic(pr.p0 + 0.5 * (a + b)) + (pr.pot.empty() ? 0.0 : pr.pot[i]);
            rate[i] = c * hval - 0.5 * alpha * (b - a);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = (i + 1 == n) ? 0 : i + 1;
            double a = pr.p0 + dm[i], b = pr.p0 + dm[j];
            double k0 = pr.spec->kinetic(0.0);
            double hval = pr.spec->kinetic(std::max(a, 0.0)) + pr.spec->kinetic(std::min(b, 0.0)) - k0 +
                          (pr.pot.empty() ? 0.0 : pr.pot[i]);
            rate[i] = c * hval;
        }
    }
    for (std::size_t i = 0; i < n; ++i) out[i] -= dt * rate[i];
}

inline void evolve_core(const Grid1D& g, FluxProblem& pr, std::vector<double>& v, double t,
                        const SchemeConfig& cfg, EvolveStats& stats) {
    if (t < 0.0) throw std::invalid_argument("evolve: negative time");
    if (cfg.flux == FluxKind::EngquistOsherConvex) {
        if (pr.coef < 0.0) throw std::invalid_argument("evolve: Engquist-Osher flux requires positive coefficient");
        if (pr.spec->family == HamiltonianFamily::LTYNonconvex)
            throw std::invalid_argument("evolve: Engquist-Osher flux requires a convex kinetic part");
    }
    const double dx = g.dx();
    const std::size_t n = v.size();
    double alpha = std::abs(pr.coef) * pr.spec->kinetic_slope_bound(std::abs(pr.p0) + cfg.alpha_hint);
    stats.alpha = std::max(stats.alpha, alpha);
    double done = 0.0;
    std::vector<double> dm;
    while (done < t - 1e-15 * std::max(1.0, t)) {
        gradients(v, dx, dm);
        double pm = 0.0, lip = 0.0;
        for (double d : dm) {
            pm = std::max(pm, std::abs(pr.p0 + d));
            lip = std::max(lip, std::abs(d));
        }
        stats.max_lip = std::max(stats.max_lip, lip);
        if (lip > cfg.gradient_ceiling) {
            stats.aborted = true;
            stats.t_reached = done;
            return;
        }
        alpha = std::max(alpha, std::abs(pr.coef) * pr.spec->kinetic_slope_bound(pm));
        double dt = t - done;
        if (alpha > 0.0) dt = std::min(dt, cfg.cfl * dx / alpha);
        // keep per-step gradient production from x-dependence bounded
        double grow = std::abs(pr.coef) * pr.pot_lip + std::abs(pr.fcoef) * pr.force_lip;
        if (grow > 0.0) dt = std::min(dt, std::max(pm, 1.0) / grow);
        if (pr.fcoef != 0.0 && !pr.force.empty()) {
            double half = 0.5 * dt * pr.fcoef;
            for (std::size_t i = 0; i < n; ++i) v[i] -= half * pr.force[i];
            gradients(v, dx, dm);
            double pm2 = 0.0;
            for (double d : dm) pm2 = std::max(pm2, std::abs(pr.p0 + d));
            alpha = std::max(alpha, std::abs(pr.coef) * pr.spec->kinetic_slope_bound(pm2));
        }
        flux_update(g, pr, cfg.flux, alpha, dt, dm, v);
        if (pr.fcoef != 0.0 && !pr.force.empty()) {
            double half = 0.5 * dt * pr.fcoef;
            for (std::size_t i = 0; i < n; ++i) v[i] -= half * pr.force[i];
        }
        done += dt;
        ++stats.steps;
        stats.alpha = std::max(stats.alpha, alpha);
    }
    stats.t_reached = t;
}

inline std::vector<double> sample_unit_periodic(const PotentialSpec& f, const Grid1D& g, double eps) {
    std::vector<double> out(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) out[static_cast<std::size_t>(i)] = f.value(g.node(i) / eps);
    return out;
}

inline FluxProblem make_problem(const HamiltonianSpec& spec, const Grid1D& g, double eps, double coef, double p0) {
    FluxProblem pr;
    pr.spec = &spec;
    pr.coef = coef;
    pr.p0 = p0;
    if (spec.has_potential()) {
        pr.pot = sample_unit_periodic(spec.V, g, eps);
        pr.pot_lip = array_lip(pr.pot, g.dx());
    }
    return pr;
}

}  // namespace detail

// One explicit monotone step; rejects dt above the admissible CFL bound.
inline GridFunction step(const HamiltonianSpec& spec, double eps, int sign, const GridFunction& u, double dt,
                         const SchemeConfig& cfg = SchemeConfig{}) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("step: sign must be +1 or -1");
    detail::FluxProblem pr = detail::make_problem(spec, u.grid, eps, static_cast<double>(sign), 0.0);
    const double dx = u.grid.dx();
    std::vector<double> dm;
    detail::gradients(u.v, dx, dm);
    double pm = 0.0;
    for (double d : dm) pm = std::max(pm, std::abs(d));
    double alpha = spec.kinetic_slope_bound(std::max(pm, cfg.alpha_hint));
    double admissible = alpha > 0.0 ? cfg.cfl * dx / alpha : std::numeric_limits<double>::infinity();
    if (dt > admissible * (1.0 + 1e-12))
        throw std::invalid_argument("step: dt violates CFL; admissible dt = " + fmt_g17(admissible));
    GridFunction out = u;
    detail::flux_update(u.grid, pr, cfg.flux, alpha, dt, dm, out.v);
    return out;
}

// March u_t + sign*H(Du, x/eps) = 0 to exactly time t.
inline GridFunction evolve(const HamiltonianSpec& spec, double eps, int sign, const GridFunction& u0, double t,
                           const SchemeConfig& cfg = SchemeConfig{}, EvolveStats* stats_out = nullptr) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("evolve: sign must be +1 or -1");
    GridFunction u = u0;
    detail::FluxProblem pr = detail::make_problem(spec, u.grid, eps, static_cast<double>(sign), 0.0);
    EvolveStats stats;
    if (cfg.flux == FluxKind::EngquistOsherConvex && sign < 0) {
        // mirror conjugation z(x) = -u(-x) turns the backward solve into a
        // forward one for the reflected medium
        const std::size_t n = u.v.size();
        GridFunction z = u;
        for (std::size_t i = 0; i < n; ++i) z.v[i] = -u.v[(n - i) % n];
        detail::FluxProblem zpr = pr;
        zpr.coef = 1.0;
        if (!zpr.pot.empty())
            for (std::size_t i = 0; i < n; ++i) zpr.pot[i] = pr.pot[(n - i) % n];
        detail::evolve_core(z.grid, zpr, z.v, t, cfg, stats);
        for (std::size_t i = 0; i < n; ++i) u.v[i] = -z.v[(n - i) % n];
    } else {
        detail::evolve_core(u.grid, pr, u.v, t, cfg, stats);
    }
    if (stats_out) *stats_out = stats;
    if (stats.aborted && !stats_out) throw std::runtime_error("evolve: gradient ceiling exceeded");
    return u;
}

// Same semigroup with the kinetic argument shifted by p0 (data u = p0*x + v
// evolved through the periodic representative v).
inline GridFunction evolve_affine(const HamiltonianSpec& spec, double eps, int sign, const GridFunction& u0,
                                  double t, double p0, const SchemeConfig& cfg = SchemeConfig{},
                                  EvolveStats* stats_out = nullptr) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("evolve_affine: sign must be +1 or -1");
    if (cfg.flux == FluxKind::EngquistOsherConvex && sign < 0)
        throw std::invalid_argument("evolve_affine: Engquist-Osher flux supports sign + only");
    GridFunction u = u0;
    detail::FluxProblem pr = detail::make_problem(spec, u.grid, eps, static_cast<double>(sign), p0);
    EvolveStats stats;
    detail::evolve_core(u.grid, pr, u.v, t, cfg, stats);
    if (stats_out) *stats_out = stats;
    if (stats.aborted && !stats_out) throw std::runtime_error("evolve_affine: gradient ceiling exceeded");
    return u;
}

// u_t + xi1*H(Du, x/eps) + xi2*f(x/eps) = 0 over a wall-clock interval.
inline GridFunction evolve_forced(const HamiltonianSpec& spec, double eps, double xi1, double xi2,
                                  const GridFunction& u0, double t, const SchemeConfig& cfg = SchemeConfig{},
                                  EvolveStats* stats_out = nullptr) {
    GridFunction u = u0;
    EvolveStats stats;
    if (xi1 == 0.0) {
        if (xi2 != 0.0) {
            std::vector<double> force = detail::sample_unit_periodic(spec.f, u.grid, eps);
            for (std::size_t i = 0; i < u.v.size(); ++i) u.v[i] -= t * xi2 * force[i];
        }
        stats.t_reached = t;
        if (stats_out) *stats_out = stats;
        return u;
    }
    detail::FluxProblem pr = detail::make_problem(spec, u.grid, eps, xi1, 0.0);
    if (xi2 != 0.0) {
        pr.force = detail::sample_unit_periodic(spec.f, u.grid, eps);
        pr.force_lip = detail::array_lip(pr.force, u.grid.dx());
        pr.fcoef = xi2;
    }
    detail::evolve_core(u.grid, pr, u.v, t, cfg, stats);
    if (stats_out) *stats_out = stats;
    if (stats.aborted && !stats_out) throw std::runtime_error("evolve_forced: gradient ceiling exceeded");
    return u;
}

// Cone-of-dependence comparison: ball maxima of the evolved difference versus
// the initial difference, with a 2dx-scale slack for the discrete stencil.
struct FiniteSpeedReport {
    double speed = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = false;
};

inline FiniteSpeedReport finite_speed_check(const HamiltonianSpec& spec, double eps, int sign,
                                            const GridFunction& u1, const GridFunction& u2, double R, double t,
                                            double center, const SchemeConfig& cfg = SchemeConfig{}) {
    if (!(u1.grid == u2.grid)) throw std::invalid_argument("finite_speed_check: grid mismatch");
    double pm = std::max(discrete_lipschitz(u1), discrete_lipschitz(u2)) + 1.0;
    double speed = 0.0;
    const double h = 1e-4 * std::max(1.0, pm);
    for (int k = -64; k <= 64; ++k) {
        double p = pm * static_cast<double>(k) / 64.0;
        speed = std::max(speed, std::abs(spec.kinetic(p + h) - spec.kinetic(p - h)) / (2.0 * h));
    }
    FiniteSpeedReport rep;
    rep.speed = speed;
    GridFunction a = evolve(spec, eps, sign, u1, t, cfg);
    GridFunction b = evolve(spec, eps, sign, u2, t, cfg);
    const double P = u1.grid.length;
    double lhs = -std::numeric_limits<double>::infinity();
    double rhs = -std::numeric_limits<double>::infinity();
    double r_in = R - speed * t;
    for (int i = 0; i < u1.grid.n; ++i) {
        double d = circ_dist(u1.grid.node(i), center, P);
        std::size_t ii = static_cast<std::size_t>(i);
        if (d <= r_in + 1e-12) lhs = std::max(lhs, a.v[ii] - b.v[ii]);
        if (d <= R + 1e-12) rhs = std::max(rhs, u1.v[ii] - u2.v[ii]);
    }
    GridFunction d0 = u1 - u2;
    rep.slack = 2.0 * u1.grid.dx() * (1.0 + discrete_lipschitz(d0));
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.pass = (r_in < 0.0) || lhs <= rhs + rep.slack;
    return rep;
}

inline std::string grid_csv(const GridFunction& u) {
    std::string out = "x,u\n";
    for (int i = 0; i < u.grid.n; ++i) {
        out += fmt_g17(u.grid.node(i));
        out += ",";
        out += fmt_g17(u.v[static_cast<std::size_t>(i)]);
        out += "\n";
    }
    return out;
}

}  // namespace phj
