#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phj/grid_solver.hpp"
#include "phj/rng.hpp"

using namespace phj;

namespace {

GridFunction random_trig(const Grid1D& g, CounterRng& rng) {
    double a1 = rng.uniform_sym(1.0), a2 = rng.uniform_sym(0.7), b1 = rng.uniform_sym(0.5);
    double c = rng.uniform_sym(2.0);
    return sample(g, [=](double x) {
        return c + a1 * std::sin(kTwoPi * x) + a2 * std::cos(2.0 * kTwoPi * x) + b1 * std::cos(3.0 * kTwoPi * x);
    });
}

HamiltonianSpec pick_spec(CounterRng& rng) {
    switch (static_cast<int>(rng.next_u64() % 5)) {
        case 0: return make_eikonal();
        case 1: return make_power(1.5, PotentialSpec::cosine(0.8, 1));
        case 2: return make_power(2.0, PotentialSpec::cosine(1.0, 1));
        case 3: return make_power(2.0, PotentialSpec::sawtooth(0.3));
        default: return make_lty(0.2);
    }
}

}  // namespace

TEST_CASE("time zero is the identity, bitwise") {
    Grid1D g = make_grid(1.0, 128);
    GridFunction u0 = sample(g, shape_sin(1.0));
    GridFunction u = evolve(make_power(2.0, PotentialSpec::cosine()), 0.25, 1, u0, 0.0);
    CHECK(u.v == u0.v);
    CHECK_THROWS_AS(evolve(make_eikonal(), 1.0, 1, u0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(evolve(make_eikonal(), 1.0, 0, u0, 0.1), std::invalid_argument);
}

TEST_CASE("constants are fixed points when the medium is trivial") {
    Grid1D g = make_grid(1.0, 96);
    GridFunction c5 = constant(g, 5.0);
    for (int sign : {1, -1}) {
        GridFunction a = evolve(make_eikonal(), 1.0, sign, c5, 0.4);
        CHECK(max_abs_diff(a, c5) <= 1e-12);
        GridFunction b = evolve(make_power(2.0, PotentialSpec::zero()), 1.0, sign, c5, 0.4);
        CHECK(max_abs_diff(b, c5) <= 1e-12);
    }
}

TEST_CASE("adding a constant commutes with the flow") {
    Grid1D g = make_grid(1.0, 128);
    CounterRng rng(31, 0);
    SchemeConfig cfg;
    cfg.alpha_hint = 40.0;  // pins alpha, hence the dt sequence, across both runs
    for (int rep = 0; rep < 8; ++rep) {
        HamiltonianSpec spec = pick_spec(rng);
        GridFunction u = random_trig(g, rng);
        GridFunction uc = u;
        double c = rng.uniform_sym(3.0);
        for (double& x : uc.v) x += c;
        int sign = rng.rademacher() > 0 ? 1 : -1;
        GridFunction a = evolve(spec, 0.5, sign, u, 0.05, cfg);
        GridFunction b = evolve(spec, 0.5, sign, uc, 0.05, cfg);
        for (double& x : b.v) x -= c;
        CHECK(max_abs_diff(a, b) <= 1e-10);
    }
}

TEST_CASE("monotonicity and sup-norm contraction under a shared step sequence") {
    Grid1D g = make_grid(1.0, 128);
    CounterRng rng(32, 0);
    SchemeConfig cfg;
    cfg.alpha_hint = 40.0;
    for (int rep = 0; rep < 50; ++rep) {
        HamiltonianSpec spec = pick_spec(rng);
        int sign = rng.rademacher() > 0 ? 1 : -1;
        GridFunction u = random_trig(g, rng);
        GridFunction v = random_trig(g, rng);
        GridFunction above = u;  // dominating datum
        for (std::size_t i = 0; i < above.v.size(); ++i) above.v[i] = std::max(u.v[i], v.v[i]) + 0.1;
        GridFunction su = evolve(spec, 0.5, sign, u, 0.04, cfg);
        GridFunction sv = evolve(spec, 0.5, sign, v, 0.04, cfg);
        GridFunction sa = evolve(spec, 0.5, sign, above, 0.04, cfg);
        double dmax = 0.0;
        for (std::size_t i = 0; i < u.v.size(); ++i) {
            CHECK(sa.v[i] >= su.v[i] - 1e-10);
            dmax = std::max(dmax, std::abs(u.v[i] - v.v[i]));
        }
        CHECK(max_abs_diff(su, sv) <= dmax + 1e-10);
    }
}

TEST_CASE("affine data with a flat medium decays at exactly the kinetic rate") {
    Grid1D g = make_grid(1.0, 64);
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::zero());
    GridFunction zero = constant(g, 0.0);
    GridFunction out = evolve_affine(spec, 1.0, 1, zero, 0.3, 1.5);
    for (double v : out.v) CHECK(v == Catch::Approx(-0.3 * 2.25).margin(1e-12));
    GridFunction back = evolve_affine(spec, 1.0, -1, zero, 0.3, 1.5);
    for (double v : back.v) CHECK(v == Catch::Approx(0.3 * 2.25).margin(1e-12));
    SchemeConfig eo;
    eo.flux = FluxKind::EngquistOsherConvex;
    CHECK_THROWS_AS(evolve_affine(spec, 1.0, -1, zero, 0.1, 1.5, eo), std::invalid_argument);
}

TEST_CASE("eikonal expansion matches the ball supremum in closed form") {
    const int n = 512;
    Grid1D g = make_grid(1.0, n);
    GridFunction u0 = sample(g, [](double x) { return circ_dist(x, 0.0, 1.0); });
    SchemeConfig cfg;
    cfg.flux = FluxKind::EngquistOsherConvex;
    const double t = 0.13;
    GridFunction u = evolve(make_eikonal(), 1.0, -1, u0, t, cfg);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        double exact = std::min(circ_dist(g.node(i), 0.0, 1.0) + t, 0.5);
        err = std::max(err, std::abs(u.v[static_cast<std::size_t>(i)] - exact));
    }
    CHECK(err <= 2.0 * g.dx());
}

TEST_CASE("eikonal decay matches the ball infimum in closed form") {
    const int n = 512;
    Grid1D g = make_grid(1.0, n);
    GridFunction u0 = sample(g, shape_hat(1.0));
    SchemeConfig cfg;
    cfg.flux = FluxKind::EngquistOsherConvex;
    const double t = 0.1;
    GridFunction u = evolve(make_eikonal(), 1.0, 1, u0, t, cfg);
    // kinks sit at the peak (gradient shock) and at the support feet (sonic
    // points of the upwind flux); a monotone scheme smears both over a few
    // cells, and stays sharp elsewhere
    double err_smooth = 0.0, err_kink = 0.0;
    const double foot = 0.25 - t;
    for (int i = 0; i < n; ++i) {
        double d = circ_dist(g.node(i), 0.5, 1.0);
        double exact = std::max(0.0, 1.0 - (d + t) / 0.25);
        double e = std::abs(u.v[static_cast<std::size_t>(i)] - exact);
        bool near_kink = d <= 3.0 * g.dx() || std::abs(d - foot) <= 3.0 * g.dx();
        (near_kink ? err_kink : err_smooth) = std::max(near_kink ? err_kink : err_smooth, e);
    }
    CHECK(err_smooth <= 2.0 * g.dx());
    CHECK(err_kink <= 6.0 * g.dx());
}

TEST_CASE("level sets of the decaying hat move at unit speed") {
    const int n = 512;
    Grid1D g = make_grid(1.0, n);
    GridFunction u0 = sample(g, shape_hat(1.0));
    SchemeConfig cfg;
    cfg.flux = FluxKind::EngquistOsherConvex;
    auto crossing = [&](const GridFunction& u) {
        // level-0.5 crossing on the right flank, linearly interpolated
        for (int i = 0; i < n - 1; ++i) {
            double x = g.node(i);
            if (x < 0.52 || x > 0.72) continue;
            double a = u.v[static_cast<std::size_t>(i)], b = u.v[static_cast<std::size_t>(i + 1)];
            if ((a - 0.5) * (b - 0.5) <= 0.0 && a != b) return x + g.dx() * (a - 0.5) / (a - b);
        }
        FAIL("no level crossing found");
        return 0.0;
    };
    double x0 = crossing(u0);
    GridFunction u = evolve(make_eikonal(), 1.0, 1, u0, 0.05, cfg);
    double x1 = crossing(u);
    double speed = (x0 - x1) / 0.05;
    CHECK(speed == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("lipschitz constant does not grow in a flat medium") {
    Grid1D g = make_grid(1.0, 256);
    CounterRng rng(33, 0);
    for (int rep = 0; rep < 10; ++rep) {
        GridFunction u = random_trig(g, rng);
        GridFunction out = evolve(make_power(2.0, PotentialSpec::zero()), 1.0, 1, u, 0.07);
        CHECK(discrete_lipschitz(out) <= discrete_lipschitz(u) + 1e-10);
    }
}

TEST_CASE("first-order convergence against the parabolic envelope") {
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::zero());
    const double t = 0.01;
    auto exact = [&](double x) {
        // inf over y of u0(y) + (x-y)^2/(4t), swept over a fine periodic grid
        double best = std::numeric_limits<double>::infinity();
        const int m = 16384;
        for (int j = -m / 4; j <= m / 4; ++j) {
            double y = x + static_cast<double>(j) / m;
            double v = std::sin(kTwoPi * y) + (x - y) * (x - y) / (4.0 * t);
            best = std::min(best, v);
        }
        return best;
    };
    double err[3];
    int idx = 0;
    for (int n : {128, 256, 512}) {
        Grid1D g = make_grid(1.0, n);
        GridFunction u = evolve(spec, 1.0, 1, sample(g, shape_sin(1.0)), t);
        double e = 0.0;
        for (int i = 0; i < n; ++i) e = std::max(e, std::abs(u.v[static_cast<std::size_t>(i)] - exact(g.node(i))));
        err[idx++] = e;
    }
    CHECK(err[0] > err[1]);
    CHECK(err[1] > err[2]);
    CHECK(err[2] <= err[0] / 2.5);
}

TEST_CASE("pure forcing is an exact vertical shift") {
    Grid1D g = make_grid(1.0, 160);
    HamiltonianSpec spec = make_eikonal_forcing(PotentialSpec::cosine(1.0, 1));
    GridFunction u0 = sample(g, shape_sin(1.0, 0.4));
    double eps = 0.2, t = 0.37, xi2 = 1.3;
    GridFunction u = evolve_forced(spec, eps, 0.0, xi2, u0, t);
    double worst = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double want = u0.v[static_cast<std::size_t>(i)] - t * xi2 * spec.f.value(g.node(i) / eps);
        worst = std::max(worst, std::abs(u.v[static_cast<std::size_t>(i)] - want));
    }
    CHECK(worst <= 1e-14);
}

TEST_CASE("gradient ceiling aborts the march") {
    Grid1D g = make_grid(1.0, 128);
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::cosine(5.0, 1));
    GridFunction zero = constant(g, 0.0);
    SchemeConfig cfg;
    cfg.gradient_ceiling = 1.0;
    EvolveStats stats;
    GridFunction u = evolve(spec, 1.0, 1, zero, 0.5, cfg, &stats);
    CHECK(stats.aborted);
    CHECK(stats.t_reached < 0.5);
    CHECK_THROWS_AS(evolve(spec, 1.0, 1, zero, 0.5, cfg), std::runtime_error);
}

TEST_CASE("single steps respect the cfl bound") {
    Grid1D g = make_grid(1.0, 128);
    GridFunction u = sample(g, shape_sin(1.0));
    HamiltonianSpec spec = make_power(2.0, PotentialSpec::zero());
    CHECK_THROWS_WITH(step(spec, 1.0, 1, u, 0.01), Catch::Matchers::ContainsSubstring("admissible"));
    GridFunction out = step(spec, 1.0, 1, u, 1e-5);
    CHECK(out.v != u.v);
}

TEST_CASE("disturbances propagate no faster than the kinetic slope") {
    Grid1D g = make_grid(1.0, 256);
    GridFunction base = constant(g, 0.0);
    GridFunction bump = sample(g, shape_hat(1.0, 0.5));
    SECTION("eikonal") {
        FiniteSpeedReport r = finite_speed_check(make_eikonal(), 1.0, 1, bump, base, 0.35, 0.1, 0.5);
        CHECK(r.pass);
        CHECK(r.speed == Catch::Approx(1.0).margin(1e-6));
    }
    SECTION("quadratic with medium") {
        HamiltonianSpec spec = make_power(2.0, PotentialSpec::cosine(1.0, 1));
        GridFunction u1 = sample(g, shape_sin(1.0, 0.3));
        GridFunction u2 = sample(g, [](double x) { return 0.3 * std::sin(kTwoPi * (x - 0.2)); });
        FiniteSpeedReport r = finite_speed_check(spec, 0.25, -1, u1, u2, 0.3, 0.04, 0.4);
        CHECK(r.pass);
    }
    SECTION("nonconvex kinetic") {
        FiniteSpeedReport r = finite_speed_check(make_lty(0.2), 0.5, 1, bump, base, 0.35, 0.08, 0.5);
        CHECK(r.pass);
    }
}
