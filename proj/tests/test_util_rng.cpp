#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <string>

#include "phj/rng.hpp"
#include "phj/util.hpp"

using namespace phj;

TEST_CASE("fnv1a64 known vectors") {
    // Published FNV-1a 64-bit values.
    CHECK(fnv1a64(std::string{}) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64(std::string{"a"}) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64(std::string{"foobar"}) == 0x85944171f73967e8ull);
}

TEST_CASE("fmt_g17 round-trips doubles exactly") {
    CounterRng rng(11, 0);
    for (int i = 0; i < 200; ++i) {
        double x = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform_sym(12.0));
        std::string s = fmt_g17(x);
        double back = std::strtod(s.c_str(), nullptr);
        CHECK(back == x);
    }
    CHECK(fmt_g17(0.0) == "0");
}

TEST_CASE("linspace endpoints and spacing") {
    auto v = linspace(-3.0, 3.0, 25);
    REQUIRE(v.size() == 25);
    CHECK(v.front() == -3.0);
    CHECK(v.back() == 3.0);
    CHECK(v[12] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("circ_dist basics") {
    CHECK(circ_dist(0.1, 0.9, 1.0) == Catch::Approx(0.2));
    CHECK(circ_dist(0.9, 0.1, 1.0) == Catch::Approx(0.2));
    CHECK(circ_dist(0.25, 0.75, 1.0) == Catch::Approx(0.5));
    CounterRng rng(3, 0);
    for (int i = 0; i < 100; ++i) {
        double a = rng.uniform_sym(5.0), b = rng.uniform_sym(5.0);
        double d = circ_dist(a, b, 1.0);
        CHECK(d >= 0.0);
        CHECK(d <= 0.5 + 1e-12);
        CHECK(d == Catch::Approx(circ_dist(b, a, 1.0)).margin(1e-12));
    }
}

TEST_CASE("ks_statistic on tiny hand-checked samples") {
    auto unif = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    CHECK(ks_statistic({0.5}, unif) == Catch::Approx(0.5));
    CHECK(ks_statistic({0.25, 0.75}, unif) == Catch::Approx(0.25));
}

TEST_CASE("normal_cdf reference values") {
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(normal_cdf(1.96) == Catch::Approx(0.975002104852).margin(1e-6));
    CHECK(normal_cdf(-1.0) + normal_cdf(1.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(normal_cdf(2.0, 2.0, 5.0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("least_squares recovers an exact line") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double xi : x) y.push_back(2.0 * xi + 1.0);
    auto fit = least_squares(x, y);
    CHECK(fit.slope == Catch::Approx(2.0).margin(1e-12));
    CHECK(fit.intercept == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(least_squares({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("counter rng matches the philox4x32-10 reference vector") {
    // key = (0,0), counter = (0,0,0,0).
    CounterRng r(0, 0);
    CHECK(r.next_u32() == 0x6627e8d5u);
    CHECK(r.next_u32() == 0xe169c58du);
    CHECK(r.next_u32() == 0xbc57ac4cu);
    CHECK(r.next_u32() == 0x9b00dbd8u);
}

TEST_CASE("counter rng determinism and stream separation") {
    CounterRng a(2024, 5), b(2024, 5), c(2024, 6);
    bool same = true, diff = false;
    for (int i = 0; i < 64; ++i) {
        auto x = a.next_u32(), y = b.next_u32(), z = c.next_u32();
        same = same && (x == y);
        diff = diff || (x != z);
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("counter rng distributions") {
    CounterRng r(7, 0);
    double s = 0.0, s2 = 0.0;
    const int n = 8192;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(s / n == Catch::Approx(0.5).margin(0.02));
    CHECK(s2 / n - (s / n) * (s / n) == Catch::Approx(1.0 / 12.0).margin(0.01));

    CounterRng rr(8, 0);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
        double v = rr.rademacher();
        REQUIRE((v == 1.0 || v == -1.0));
        if (v > 0) ++pos;
    }
    CHECK(std::abs(pos - n / 2) < 4 * std::sqrt(n / 4.0));

    CounterRng rn(9, 0);
    double m = 0.0, v2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = rn.normal();
        m += g;
        v2 += g * g;
    }
    CHECK(m / n == Catch::Approx(0.0).margin(0.05));
    CHECK(v2 / n == Catch::Approx(1.0).margin(0.05));

    CounterRng ru(10, 0);
    double w = std::sqrt(3.0), m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = ru.uniform_sym(w);
        REQUIRE(std::abs(u) < w);
        m2 += u * u;
    }
    CHECK(m2 / n == Catch::Approx(1.0).margin(0.05));  // E|X|^2 = w^2/3 = 1
}

TEST_CASE("parallel_for covers every index once, any worker count") {
    for (int workers : {1, 2, 4}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) REQUIRE(h == 1);
    }
}
