#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/grid.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/paths.hpp"
#include "phj/rng.hpp"
#include "phj/util.hpp"

namespace phj {

// ---------------------------------------------------------------------------
// Hopf-Lax / Lax-Oleinik oracle for x-independent convex effective H

struct HopfLaxResult {
    GridFunction u;
    bool truncated = false;  // some candidate set hit the conjugate's support edge
};

// sign +: u(x) = min_y [u0(y) + t G*((x-y)/t)]; sign -: max_y [u0(y) - t G*((y-x)/t)].
// Periodic images of y are scanned; candidates outside the conjugate support
// cost +/-infinity. With affine_p the data is read as p*x + u0 (u0 periodic)
// and the returned function is again the periodic part.
inline HopfLaxResult hopf_lax(const LegendreTable& conj, const GridFunction& u0, double t, int sign,
                              double affine_p = 0.0) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("hopf_lax: sign must be +1 or -1");
    HopfLaxResult res{u0, false};
    if (t <= 0.0) {
        if (t < 0.0) throw std::invalid_argument("hopf_lax: negative time");
        return res;
    }
    const Grid1D& g = u0.grid;
    const int n = g.n;
    const double P = g.length;
    const double s = static_cast<double>(sign);
    double zreach = std::max(std::abs(conj.support_lo), std::abs(conj.support_hi));
    int kmax = static_cast<int>(std::floor(zreach * t / P)) + 1;
    const double dz = conj.z.size() > 1 ? conj.z[1] - conj.z[0] : 0.0;

    for (int i = 0; i < n; ++i) {
        const double x = g.node(i);
        // minimize psi(y) = s*u0(y) + t*G*(s(x-y)/t) - s*p*(x-y); u(x) = s*min psi
        auto psi = [&](double y, bool grid_exact, std::size_t j) {
            auto val = conj.eval(s * (x - y) / t);
            if (val.outside) return std::numeric_limits<double>::infinity();
            double base = grid_exact ? u0.v[j] : grid_eval(u0, y);
            return s * base + t * val.g - s * affine_p * (x - y);
        };
        double best = std::numeric_limits<double>::infinity();
        double best_y = x;
        for (int j = 0; j < n; ++j) {
            for (int k = -kmax; k <= kmax; ++k) {
                double y = g.node(j) + k * P;
                double c = psi(y, true, static_cast<std::size_t>(j));
                if (c < best) {
                    best = c;
                    best_y = y;
                }
            }
        }
        if (!std::isfinite(best)) {
            res.truncated = true;
            res.u.v[static_cast<std::size_t>(i)] = u0.v[static_cast<std::size_t>(i)];
            continue;
        }
        double zwin = s * (x - best_y) / t;
        if (zwin - conj.support_lo < 2.0 * dz || conj.support_hi - zwin < 2.0 * dz) res.truncated = true;
        const double h = g.dx();
        double f0 = psi(best_y - h, false, 0), f2 = psi(best_y + h, false, 0);
        if (std::isfinite(f0) && std::isfinite(f2)) {
            double denom = f0 - 2.0 * best + f2;
            if (denom > 1e-14) {
                double yv = best_y + h * 0.5 * (f0 - f2) / denom;
                yv = std::clamp(yv, best_y - h, best_y + h);
                best = std::min(best, psi(yv, false, 0));
            }
        }
        res.u.v[static_cast<std::size_t>(i)] = s * best;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Trajectories and actions

struct TrajectoryGrid {
    std::vector<double> s;
    std::vector<double> gamma;
    double speed_cap = 0.0;  // <= 0: uncapped

    double max_speed() const {
        double m = 0.0;
        for (std::size_t j = 1; j < s.size(); ++j) m = std::max(m, std::abs(gamma[j] - gamma[j - 1]) / (s[j] - s[j - 1]));
        return m;
    }
};

inline std::string trajectory_csv(const TrajectoryGrid& t) {
    std::string out = "s,gamma\n";
    for (std::size_t j = 0; j < t.s.size(); ++j) {
        out += fmt_g17(t.s[j]);
        out += ",";
        out += fmt_g17(t.gamma[j]);
        out += "\n";
    }
    return out;
}

inline double trajectory_eval(const TrajectoryGrid& tr, double s) {
    if (s <= tr.s.front()) return tr.gamma.front();
    if (s >= tr.s.back()) return tr.gamma.back();
    auto it = std::upper_bound(tr.s.begin(), tr.s.end(), s);
    std::size_t k = static_cast<std::size_t>(it - tr.s.begin());
    double w = (s - tr.s[k - 1]) / (tr.s[k] - tr.s[k - 1]);
    return (1.0 - w) * tr.gamma[k - 1] + w * tr.gamma[k];
}

// integral of f(gamma/eps) . dW over the trajectory's time range, by midpoint
// quadrature on the common refinement of trajectory and path partitions.
inline double control_value(const std::vector<PotentialSpec>& f, const PiecewiseLinearPath& path, double eps,
                            const TrajectoryGrid& traj) {
    if (static_cast<int>(f.size()) != path.dim())
        throw std::invalid_argument("control_value: forcing/path dimension mismatch");
    if (traj.speed_cap > 0.0 && traj.max_speed() > traj.speed_cap * (1.0 + 1e-9))
        throw std::invalid_argument("control_value: trajectory violates its speed cap");
    const double s0 = traj.s.front(), s1 = traj.s.back();
    std::vector<double> cuts;
    for (double t : traj.s) cuts.push_back(t);
    for (double t : path.times)
        if (t > s0 && t < s1) cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               cuts.end());
    double total = 0.0;
    for (std::size_t j = 1; j < cuts.size(); ++j) {
        double a = cuts[j - 1], b = cuts[j];
        double mid = 0.5 * (a + b);
        double y = trajectory_eval(traj, mid) / eps;
        for (int c = 0; c < path.dim(); ++c) {
            double slope = (path.value(b, c) - path.value(a, c)) / (b - a);
            total += f[static_cast<std::size_t>(c)].value(y) * slope * (b - a);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Distance function of the convex action (projected gradient descent)

struct DistanceResult {
    double value = 0.0;
    TrajectoryGrid trajectory;
    double straight_line_action = 0.0;
    bool within_lower = false;
    bool within_upper = false;
    bool optimizer_ok = false;  // values decreased monotonically and beat the upper bound
    double c0 = 0.0;
    double C0 = 0.0;
    double action_exponent = 0.0;
};

namespace detail {

struct ActionProblem {
    const PotentialSpec* V = nullptr;
    double kappa = 0.0;
    double a = 2.0;  // action exponent (conjugate of the Hamiltonian's q)

    double action(const std::vector<double>& g, double ds) const {
        double total = 0.0;
        for (std::size_t j = 1; j < g.size(); ++j) {
            double d = (g[j] - g[j - 1]) / ds;
            double m = 0.5 * (g[j] + g[j - 1]);
            total += ds * (kappa * std::pow(std::abs(d), a) - V->value(m));
        }
        return total;
    }

    void grad(const std::vector<double>& g, double ds, std::vector<double>& out) const {
        const std::size_t n = g.size();
        out.assign(n, 0.0);
        for (std::size_t j = 1; j < n; ++j) {
            double d = (g[j] - g[j - 1]) / ds;
            double m = 0.5 * (g[j] + g[j - 1]);
            double dk = kappa * a * std::pow(std::abs(d), a - 1.0) * (d >= 0.0 ? 1.0 : -1.0);
            double dv = -V->deriv(m) * 0.5 * ds;
            out[j] += dk + dv;
            out[j - 1] += -dk + dv;
        }
        out.front() = 0.0;
        out.back() = 0.0;
    }
};

}  // namespace detail

inline DistanceResult distance_function(const HamiltonianSpec& spec, double x, double y, int n_steps = 256,
                                        int restarts = 4, int iters = 400, std::uint64_t seed = 2024) {
    if (spec.family != HamiltonianFamily::PowerPlusPotential || !(spec.q > 1.0))
        throw std::invalid_argument("distance_function: needs the power family with q > 1");
    const double q = spec.q;
    const double a = q / (q - 1.0);
    const double kappa = (q - 1.0) * std::pow(q, -a);
    detail::ActionProblem prob{&spec.V, kappa, a};
    const double ds = 1.0 / n_steps;

    DistanceResult res;
    res.action_exponent = a;
    res.c0 = kappa - std::max(spec.V.maximum(), 0.0);
    res.C0 = kappa + std::max(-spec.V.minimum(), 0.0);

    std::vector<double> line(static_cast<std::size_t>(n_steps) + 1);
    for (int j = 0; j <= n_steps; ++j)
        line[static_cast<std::size_t>(j)] = x + (y - x) * static_cast<double>(j) / n_steps;
    res.straight_line_action = prob.action(line, ds);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_g;
    bool monotone_all = true;
    CounterRng rng(seed, 17);
    for (int r = 0; r <= restarts; ++r) {
        std::vector<double> g = line;
        if (r > 0) {
            for (int b = 1; b <= 3; ++b) {
                double amp = 0.25 * std::abs(y - x + 0.5) * rng.uniform_sym(1.0);
                for (int j = 1; j < n_steps; ++j)
                    g[static_cast<std::size_t>(j)] += amp * std::sin(kPi * b * static_cast<double>(j) / n_steps);
            }
        }
        double val = prob.action(g, ds);
        double lr = 0.1 * ds;
        std::vector<double> gr, trial;
        for (int it = 0; it < iters; ++it) {
            prob.grad(g, ds, gr);
            trial = g;
            for (std::size_t j = 0; j < trial.size(); ++j) trial[j] -= lr * gr[j];
            double tval = prob.action(trial, ds);
            if (tval <= val) {
                g.swap(trial);
                if (tval > val + 1e-13) monotone_all = false;
                val = tval;
                lr *= 1.15;
            } else {
                lr *= 0.5;
                if (lr < 1e-14) break;
            }
        }
        if (val < best_val) {
            best_val = val;
            best_g = g;
        }
    }

    res.value = best_val;
    res.trajectory.s.resize(best_g.size());
    for (std::size_t j = 0; j < best_g.size(); ++j) res.trajectory.s[j] = ds * static_cast<double>(j);
    res.trajectory.gamma = best_g;
    res.trajectory.speed_cap = 0.0;

    double dist_pow = std::pow(std::abs(x - y), a);
    res.within_lower = best_val >= res.c0 * dist_pow - 1e-9;
    res.within_upper = best_val <= res.C0 * dist_pow + 1e-9;
    res.optimizer_ok = monotone_all && best_val <= res.straight_line_action + 1e-12 &&
                       (dist_pow == 0.0 || res.within_upper);
    return res;
}

// Residual of the stationarity identity (a-1)L = H(D_x L, x) at (x, y), with a
// finite-difference gradient; a is the action exponent.
inline double distance_pde_residual(const HamiltonianSpec& spec, double x, double y, double h = 1e-4,
                                    int n_steps = 256, int restarts = 2, int iters = 400) {
    double a = spec.q / (spec.q - 1.0);
    double Lp = distance_function(spec, x + h, y, n_steps, restarts, iters).value;
    double Lm = distance_function(spec, x - h, y, n_steps, restarts, iters).value;
    double L0 = distance_function(spec, x, y, n_steps, restarts, iters).value;
    double dxL = (Lp - Lm) / (2.0 * h);
    return std::abs(eval(spec, dxL, x) - (a - 1.0) * L0);
}

// ---------------------------------------------------------------------------
// Blow-up zig-zag candidate (single space dimension, scalar path)

struct BlowupCandidate {
    TrajectoryGrid trajectory;
    double value = 0.0;           // control integral along the candidate
    double zigzag_value = 0.0;    // contribution of the oscillating part
    double boundary_value = 0.0;  // final-leg contribution
    double y0 = 0.0;
    double delta = 0.0;
    int segments = 0;
    double max_speed = 0.0;
};

inline BlowupCandidate blowup_candidate(const PotentialSpec& f, const PiecewiseLinearPath& path, double eps,
                                        double t, double x_target, double nu, double sigma) {
    if (path.dim() != 1) throw std::invalid_argument("blowup_candidate: scalar path required");
    if (path.knots() < 2) throw std::invalid_argument("blowup_candidate: empty path");
    const double eta = path.times[1] - path.times[0];
    for (std::size_t k = 0; k < path.times.size(); ++k)
        if (std::abs(path.times[k] - static_cast<double>(k) * eta) > 1e-9 * std::max(1.0, t))
            throw std::invalid_argument("blowup_candidate: path knots must be uniform");

    // base point maximizing |f'|
    double y0 = 0.0, best = -1.0;
    for (int i = 0; i < 4096; ++i) {
        double yy = static_cast<double>(i) / 4096.0;
        double d = std::abs(f.deriv(yy));
        if (d > best) {
            best = d;
            y0 = yy;
        }
    }
    const double xi = f.deriv(y0);
    const double delta = nu * std::pow(eps, std::max(sigma - 1.0, 0.0));
    const double zig_speed = 2.0 * delta * eps / eta;
    if (zig_speed > 1.0 + 1e-12) {
        double nu_max = nu / zig_speed;
        throw std::invalid_argument("blowup_candidate: speed cap violated; max admissible nu = " + fmt_g17(nu_max));
    }

    if (path.horizon() < t - 1e-12) throw std::invalid_argument("blowup_candidate: path horizon shorter than t");
    const double half = 0.5 * eta;
    const int total = static_cast<int>(std::llround(t / half));
    if (std::abs(static_cast<double>(total) * half - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument("blowup_candidate: t must be a multiple of eta/2");
    const double r = std::abs(x_target) / eps;
    const double R = (r + std::abs(y0)) / t;
    int N = static_cast<int>(std::floor((1.0 - R * eps) * t / eta + 1e-12));
    N = std::min(N, (total - 1) / 2);
    if (N < 1) throw std::invalid_argument("blowup_candidate: horizon too short for one oscillation segment");

    TrajectoryGrid traj;
    traj.speed_cap = 1.0;
    traj.s.resize(static_cast<std::size_t>(total) + 1);
    traj.gamma.resize(static_cast<std::size_t>(total) + 1);
    const double t_leg = t - static_cast<double>(N) * eta;
    for (int j = 0; j <= total; ++j) {
        double sj = std::min(half * static_cast<double>(j), t);
        traj.s[static_cast<std::size_t>(j)] = sj;
        if (j <= 2 * N) {
            if (j % 2 == 0) {
                traj.gamma[static_cast<std::size_t>(j)] = eps * y0;
            } else {
                int k = (j - 1) / 2;
                double dW = path.value((k + 1) * eta) - path.value(k * eta);
                double sgn = (xi * dW > 0.0) ? 1.0 : (xi * dW < 0.0 ? -1.0 : 0.0);
                traj.gamma[static_cast<std::size_t>(j)] = eps * (y0 + delta * sgn);
            }
        } else {
            double w = (sj - static_cast<double>(N) * eta) / t_leg;
            traj.gamma[static_cast<std::size_t>(j)] = eps * y0 + w * (x_target - eps * y0);
        }
    }

    BlowupCandidate cand;
    cand.trajectory = traj;
    cand.y0 = y0;
    cand.delta = delta;
    cand.segments = N;
    cand.max_speed = traj.max_speed();
    cand.value = control_value({f}, path, eps, traj);
    if (N * 2 >= 1) {
        TrajectoryGrid zig;
        zig.speed_cap = 1.0;
        zig.s.assign(traj.s.begin(), traj.s.begin() + 2 * N + 1);
        zig.gamma.assign(traj.gamma.begin(), traj.gamma.begin() + 2 * N + 1);
        cand.zigzag_value = control_value({f}, path, eps, zig);
    }
    cand.boundary_value = cand.value - cand.zigzag_value;
    return cand;
}

}  // namespace phj
