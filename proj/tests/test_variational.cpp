#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phj/variational.hpp"
#include "support/oracles.hpp"

using namespace phj;

namespace {

LegendreTable quadratic_conjugate() {
    auto pgrid = linspace(-6.0, 6.0, 481);
    std::vector<double> g;
    for (double p : pgrid) g.push_back(p * p);
    return make_conjugate(pgrid, g, 2001);
}

LegendreTable eikonal_conjugate() {
    auto pgrid = linspace(-4.0, 4.0, 321);
    std::vector<double> g;
    for (double p : pgrid) g.push_back(std::abs(p));
    return make_conjugate(pgrid, g, 801);
}

}  // namespace

TEST_CASE("hopf-lax fixes constants in both directions") {
    Grid1D g = make_grid(1.0, 128);
    GridFunction c = constant(g, 2.5);
    for (const LegendreTable& conj : {quadratic_conjugate(), eikonal_conjugate()}) {
        for (int sign : {1, -1}) {
            HopfLaxResult r = hopf_lax(conj, c, 0.3, sign);
            CHECK(max_abs_diff(r.u, c) <= 1e-10);
        }
    }
    CHECK_THROWS_AS(hopf_lax(quadratic_conjugate(), c, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(hopf_lax(quadratic_conjugate(), c, 0.1, 0), std::invalid_argument);
    HopfLaxResult same = hopf_lax(quadratic_conjugate(), c, 0.0, 1);
    CHECK(same.u.v == c.v);
}

TEST_CASE("hopf-lax on affine data decays at the hamiltonian of the slope") {
    Grid1D g = make_grid(1.0, 64);
    LegendreTable conj = quadratic_conjugate();
    GridFunction zero = constant(g, 0.0);
    const double t = 0.4, pbar = 1.5;
    HopfLaxResult r = hopf_lax(conj, zero, t, 1, pbar);
    CHECK_FALSE(r.truncated);
    for (double v : r.u.v) CHECK(v == Catch::Approx(-t * pbar * pbar).margin(1e-4));
    HopfLaxResult rm = hopf_lax(conj, zero, t, -1, pbar);
    for (double v : rm.u.v) CHECK(v == Catch::Approx(t * pbar * pbar).margin(1e-4));
}

TEST_CASE("expanding eikonal hopf-lax equals the exhaustive sup-convolution") {
    const int n = 256;
    Grid1D g = make_grid(1.0, n);
    GridFunction u0 = sample(g, shape_hat(1.0));
    const double t = 24.0 / n;  // ball edges land on nodes
    LegendreTable conj = eikonal_conjugate();
    HopfLaxResult r = hopf_lax(conj, u0, t, -1);
    GridFunction brute = oracle::brute_convolve(u0, [](double) { return 0.0; }, 1.0, t, -1, 4);
    CHECK(max_abs_diff(r.u, brute) <= 1e-9);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = circ_dist(g.node(i), 0.5, 1.0);
        double exact = std::max(0.0, std::min(1.0, (0.25 - (d - t)) / 0.25));
        worst = std::max(worst, std::abs(r.u.v[static_cast<std::size_t>(i)] - exact));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("hopf-lax composes as a semigroup") {
    const int n = 256;
    Grid1D g = make_grid(1.0, n);
    GridFunction u0 = sample(g, shape_sin(1.0));
    LegendreTable conj = quadratic_conjugate();
    GridFunction whole = hopf_lax(conj, u0, 0.2, 1).u;
    GridFunction first = hopf_lax(conj, u0, 0.07, 1).u;
    GridFunction composed = hopf_lax(conj, first, 0.13, 1).u;
    double tol = 2.0 * g.dx() * (1.0 + discrete_lipschitz(u0));
    CHECK(max_abs_diff(whole, composed) <= tol);
}

TEST_CASE("control integral along a frozen trajectory is an exact increment") {
    PiecewiseLinearPath tent = make_scalar_path({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    const double eps = 0.2;
    SECTION("constant trajectory picks up f at the point") {
        TrajectoryGrid traj;
        traj.s = {0.0, 0.75};
        traj.gamma = {0.3, 0.3};
        double got = control_value({PotentialSpec::cosine(1.0, 1)}, tent, eps, traj);
        double want = std::cos(kTwoPi * 0.3 / eps) * 0.25;  // f(x/eps) * (W(.75) - W(0))
        CHECK(got == Catch::Approx(want).margin(1e-14));
    }
    SECTION("unit forcing integrates the raw increment") {
        PotentialSpec one;
        one.a0 = 1.0;
        TrajectoryGrid traj;
        traj.s = {0.0, 0.75};
        traj.gamma = {0.0, 0.4};
        traj.speed_cap = 1.0;
        CHECK(control_value({one}, tent, eps, traj) == Catch::Approx(0.25).margin(1e-14));
    }
    SECTION("linear in the forcing amplitude") {
        TrajectoryGrid traj;
        traj.s = {0.0, 0.3, 0.9};
        traj.gamma = {0.1, -0.2, 0.35};
        double v1 = control_value({PotentialSpec::sine(1.0, 1)}, tent, eps, traj);
        double v2 = control_value({PotentialSpec::sine(2.0, 1)}, tent, eps, traj);
        CHECK(v2 == Catch::Approx(2.0 * v1).margin(1e-13));
    }
    SECTION("speed cap and dimension mismatches are rejected") {
        TrajectoryGrid fast;
        fast.s = {0.0, 0.5};
        fast.gamma = {0.0, 1.0};
        fast.speed_cap = 1.0;
        CHECK_THROWS_AS(control_value({PotentialSpec::sine(1.0, 1)}, tent, eps, fast),
                        std::invalid_argument);
        TrajectoryGrid ok;
        ok.s = {0.0, 0.5};
        ok.gamma = {0.0, 0.0};
        CHECK_THROWS_AS(control_value({PotentialSpec::sine(1.0, 1), PotentialSpec::sine(1.0, 1)}, tent, eps, ok),
                        std::invalid_argument);
    }
}

TEST_CASE("distance function recovers the flat-medium parabola exactly") {
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::zero());
    DistanceResult r = distance_function(spec, 0.2, 0.9);
    CHECK(r.action_exponent == Catch::Approx(2.0));
    CHECK(r.value == Catch::Approx(0.25 * 0.7 * 0.7).margin(1e-12));
    CHECK(r.value == Catch::Approx(r.straight_line_action).margin(1e-12));
    CHECK(r.trajectory.max_speed() == Catch::Approx(0.7).margin(1e-9));
    CHECK(r.within_lower);
    CHECK(r.within_upper);
    CHECK(r.optimizer_ok);
    DistanceResult same = distance_function(spec, 0.4, 0.4);
    CHECK(std::abs(same.value) <= 1e-12);
}

TEST_CASE("distance function in a weak medium stays inside the comparison bounds") {
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::cosine(0.1, 1));
    const double x = 0.3, y = 1.7;
    DistanceResult r = distance_function(spec, x, y);
    CHECK(r.c0 == Catch::Approx(0.15).margin(1e-12));
    CHECK(r.C0 == Catch::Approx(0.35).margin(1e-12));
    CHECK(r.within_lower);
    CHECK(r.within_upper);
    CHECK(r.optimizer_ok);
    CHECK(r.value <= oracle::straight_action(spec, x, y) + 1e-3);
    CHECK_THROWS_AS(distance_function(make_eikonal(), 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(distance_function(make_lty(0.2), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("distance function nearly satisfies its stationarity identity") {
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::cosine(0.1, 1));
    CHECK(distance_pde_residual(spec, 0.3, 1.7) <= 0.1);
}

TEST_CASE("zig-zag candidate value on a tent path in closed form") {
    PotentialSpec f = PotentialSpec::sine(1.0, 1);
    PiecewiseLinearPath tent = make_scalar_path({0.0, 0.5, 1.0}, {0.0, 0.5, 0.0});
    const double eps = 0.25, nu = 0.2, sigma = 1.0;
    BlowupCandidate cand = blowup_candidate(f, tent, eps, 1.0, 0.0, nu, sigma);
    // y0 = 0 (max of |f'|), one oscillation segment rides the up-leg, the
    // boundary leg sits on the zero set of f; every piece is exact
    CHECK(cand.y0 == Catch::Approx(0.0).margin(1e-12));
    CHECK(cand.delta == Catch::Approx(nu).margin(1e-15));
    CHECK(cand.segments == 1);
    CHECK(cand.value == Catch::Approx(0.5 * std::sin(kPi * nu)).margin(1e-13));
    CHECK(cand.zigzag_value == Catch::Approx(cand.value).margin(1e-13));
    CHECK(cand.boundary_value == Catch::Approx(0.0).margin(1e-13));
    CHECK(cand.max_speed == Catch::Approx(2.0 * nu * eps / 0.5).margin(1e-12));

    CHECK_THROWS_WITH(blowup_candidate(f, tent, eps, 1.0, 0.0, 2.0, sigma),
                      Catch::Matchers::ContainsSubstring("max admissible nu"));
    CHECK_THROWS_AS(blowup_candidate(f, tent, eps, 0.8, 0.0, nu, sigma), std::invalid_argument);
    CHECK_THROWS_AS(blowup_candidate(f, tent, eps, 1.5, 0.0, nu, sigma), std::invalid_argument);
    PiecewiseLinearPath skew = make_scalar_path({0.0, 0.4, 1.0}, {0.0, 0.4, 0.0});
    CHECK_THROWS_AS(blowup_candidate(f, skew, eps, 1.0, 0.0, nu, sigma), std::invalid_argument);
}
