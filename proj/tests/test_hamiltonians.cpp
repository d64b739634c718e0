#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phj/hamiltonians.hpp"
#include "phj/rng.hpp"
#include "support/oracles.hpp"

using namespace phj;

TEST_CASE("pointwise evaluation") {
    CHECK(eval(make_eikonal(), -2.0, 0.3) == Catch::Approx(2.0));
    HamiltonianSpec pq = make_power(2.0, PotentialSpec::cosine(1.0, 1));
    CHECK(eval(pq, 1.0, 0.0) == Catch::Approx(2.0));
    HamiltonianSpec lty = make_lty(0.2);
    // V_s attains its minimum -1 at y = s, so H(p, s) = F(|p|) - 1.
    CHECK(lty.potential(0.2) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(eval(lty, 0.5, 0.2) == Catch::Approx(lty.kinetic(0.5) - 1.0).margin(1e-12));
}

TEST_CASE("lty kinetic profile hits its constrained breakpoints") {
    LtyKinetic kin;
    kin.build();
    CHECK(kin.eval(0.0) == Catch::Approx(0.0));
    CHECK(kin.eval(kin.th3) == Catch::Approx(1.0 / 3.0));
    CHECK(kin.eval(kin.th2) == Catch::Approx(0.5));
    CHECK(kin.eval(kin.th1) == Catch::Approx(1.0 / 3.0));
    // linear growth with slope 1 far out
    CHECK(kin.eval(10.0) - kin.eval(9.0) == Catch::Approx(1.0).margin(1e-12));
    LtyKinetic bad;
    bad.th3 = 0.7;  // violates th3 < th2
    CHECK_THROWS_AS(bad.build(), std::invalid_argument);
}

TEST_CASE("potential spec shapes") {
    PotentialSpec saw = PotentialSpec::sawtooth(0.2);
    CHECK(saw.value(0.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(saw.value(0.2) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(saw.value(0.1) == Catch::Approx(-0.5).margin(1e-12));
    PotentialSpec sym = PotentialSpec::sawtooth(0.5);
    for (double y : {0.1, 0.23, 0.4}) CHECK(sym.value(y) == Catch::Approx(sym.value(-y)).margin(1e-12));
    CHECK_THROWS_AS(PotentialSpec::sawtooth(1.5), std::invalid_argument);

    PotentialSpec c2 = PotentialSpec::cosine(0.7, 2);
    CHECK(c2.value(0.3) == Catch::Approx(0.7 * std::cos(2.0 * kTwoPi * 0.3)).margin(1e-12));
    CHECK_THROWS_AS(PotentialSpec::cosine(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(PotentialSpec::sine(1.0, -3), std::invalid_argument);

    CHECK_THROWS_AS(PotentialSpec::samples({1.0}), std::invalid_argument);
    PotentialSpec ns = PotentialSpec::samples({0.0, 1.0, 0.0, -1.0});
    CHECK(ns.value(0.25) == Catch::Approx(1.0));
    CHECK(ns.value(1.25) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("y-periodicity for every family") {
    CounterRng rng(21, 0);
    std::vector<HamiltonianSpec> specs{make_eikonal(), make_eikonal_forcing(PotentialSpec::sine(1.0, 1)),
                                       make_power(2.0, PotentialSpec::cosine(0.8, 1)),
                                       make_power(1.5, PotentialSpec::sawtooth(0.3)), make_lty(0.2)};
    for (const auto& s : specs) {
        for (int i = 0; i < 40; ++i) {
            double p = rng.uniform_sym(4.0);
            double y = rng.uniform_sym(3.0);
            CHECK(std::abs(eval(s, p, y + 1.0) - eval(s, p, y)) < 1e-12);
        }
    }
}

TEST_CASE("lty reflection identity H_s(p,-y) = H_{1-s}(p,y)") {
    HamiltonianSpec a = make_lty(0.2);
    HamiltonianSpec b = make_lty(0.8);
    double worst = 0.0;
    for (int i = 0; i <= 64; ++i) {
        double y = static_cast<double>(i) / 64.0;
        for (double p : {-1.0, -0.4, 0.0, 0.3, 0.9}) {
            worst = std::max(worst, std::abs(eval(a, p, -y) - eval(b, p, y)));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("midpoint convexity of the power kinetics") {
    CounterRng rng(22, 0);
    for (double q : {1.0, 1.5, 2.0, 3.0}) {
        HamiltonianSpec s = make_power(q, PotentialSpec::zero());
        for (int i = 0; i < 50; ++i) {
            double p1 = rng.uniform_sym(5.0), p2 = rng.uniform_sym(5.0);
            double mid = s.kinetic(0.5 * (p1 + p2));
            CHECK(mid <= 0.5 * (s.kinetic(p1) + s.kinetic(p2)) + 1e-12);
        }
    }
}

TEST_CASE("coercivity growth ratio") {
    for (auto& s : {make_power(2.0, PotentialSpec::cosine(1.0, 1)), make_eikonal(), make_lty(0.3)}) {
        CHECK(coercivity_ratio(s, 50.0) >= 0.5 * s.growth_c);
    }
}

TEST_CASE("legendre transform on closed forms") {
    auto pgrid = linspace(-6.0, 6.0, 481);
    SECTION("p^2/2 is self-conjugate") {
        std::vector<double> g;
        for (double p : pgrid) g.push_back(0.5 * p * p);
        LegendreTable t = legendre_transform(pgrid, g, linspace(-3.0, 3.0, 241));
        for (double z : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
            CHECK(t.eval(z).g == Catch::Approx(0.5 * z * z).margin(2e-3));
            CHECK_FALSE(t.eval(z).outside);
        }
        CHECK(discrete_convex(t.gstar, 1e-12));
    }
    SECTION("|p| conjugates to the indicator of [-1,1]") {
        std::vector<double> g;
        for (double p : pgrid) g.push_back(std::abs(p));
        LegendreTable t = legendre_transform(pgrid, g, linspace(-2.0, 2.0, 321));
        CHECK(t.eval(0.5).g == Catch::Approx(0.0).margin(1e-9));
        CHECK_FALSE(t.eval(0.5).outside);
        CHECK(t.eval(1.5).outside);
        CHECK(t.support_lo == Catch::Approx(-1.0));
        CHECK(t.support_hi == Catch::Approx(1.0));
    }
    SECTION("p^4/4 at z=1 equals 3/4") {
        std::vector<double> g;
        for (double p : pgrid) g.push_back(0.25 * p * p * p * p);
        LegendreTable t = legendre_transform(pgrid, g, linspace(-2.0, 2.0, 161));
        CHECK(t.eval(1.0).g == Catch::Approx(0.75).margin(2e-3));
        CHECK(t.eval(1.0).g == Catch::Approx(oracle::brute_conjugate(pgrid, g, 1.0)).margin(1e-9));
    }
    SECTION("boundary-attained suprema are flagged truncated") {
        auto small = linspace(-1.0, 1.0, 41);
        std::vector<double> g;
        for (double p : small) g.push_back(0.5 * p * p);
        LegendreTable t = legendre_transform(small, g, linspace(-3.0, 3.0, 61));
        CHECK(t.any_truncated);  // |z| > 1 wants p outside the grid
    }
}

TEST_CASE("biconjugation dominates and approximates convex tables") {
    auto pgrid = linspace(-4.0, 4.0, 201);
    double h = pgrid[1] - pgrid[0];
    std::vector<double> g;
    for (double p : pgrid) g.push_back(p * p);
    LegendreTable t = make_conjugate(pgrid, g, 801);
    auto gss = biconjugate(t, pgrid);
    double max_slope = 8.0;
    for (std::size_t i = 20; i + 20 < pgrid.size(); ++i) {
        CHECK(gss[i] <= g[i] + 1e-9);  // biconjugate never exceeds a convex table
        CHECK(std::abs(gss[i] - g[i]) <= 2.0 * h * max_slope);
    }
}

TEST_CASE("conjugate grid covers the slope range automatically") {
    auto pgrid = linspace(-3.0, 3.0, 121);
    std::vector<double> g;
    for (double p : pgrid) g.push_back(std::abs(p));
    LegendreTable t = make_conjugate(pgrid, g, 200);
    CHECK(t.z.size() % 2 == 1);  // symmetric grid keeps 0
    CHECK(t.z.front() <= -1.0);
    CHECK(t.z.back() >= 1.0);
}
