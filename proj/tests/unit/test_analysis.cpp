#include "doctest.h"

#include "../support/synthetic.hpp"
#include "cavity/analysis.hpp"

#include <cmath>
#include <limits>

using namespace cavity;

TEST_CASE("least squares recovers an exact line") {
    const LinearFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(confidence_halfwidth(f) == doctest::Approx(0.0).scale(1e-12));
    CHECK_THROWS(fit_line({0, 1}, {0, 1}));
}

TEST_CASE("default box ladder") {
    const auto s = default_box_scales();
    REQUIRE(s.size() == 12);
    CHECK(s.front() == 0.125);
    CHECK(s.back() == 1.0 / 8192);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1] / s[i] == doctest::Approx(std::pow(1024.0, 1.0 / 11)));
}

TEST_CASE("box counts of simple curves") {
    // a diagonal through a 4 x 4 grid touches the 4 diagonal cells
    const std::vector<std::pair<double, double>> diag{{0, 0}, {1, 1}};
    CHECK(count_boxes(diag, 0.25) >= 4);
    CHECK(count_boxes(diag, 0.25) <= 7);
    // a horizontal segment fills one row
    const std::vector<std::pair<double, double>> flat{{0, 0.3}, {1, 0.3}};
    CHECK(count_boxes(flat, 0.25) == 4);
    // a vertical jump between neighbouring columns fills the whole column span
    const std::vector<std::pair<double, double>> jump{{0.1, 0.0}, {0.2, 1.0}};
    CHECK(count_boxes(jump, 0.25) == 4);
}

TEST_CASE("box-counting dimension of reference curves") {
    BoxCountConfig cfg;
    cfg.log_y = false;
    SUBCASE("straight line") {
        std::vector<std::pair<double, double>> line;
        for (int i = 0; i <= 20000; ++i) line.emplace_back(i / 20000.0, 1.0 + 0.5 * i / 20000.0);
        const auto r = box_counting_dimension(line, cfg);
        CHECK(r.dimension == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("koch prefractal") {
        const auto r = box_counting_dimension(synthetic::koch(7), cfg);
        CHECK(std::abs(r.dimension - std::log(4.0) / std::log(3.0)) <= 0.05);
        CHECK(r.dimension > 1.0);
        CHECK(r.dimension < 2.0);
        for (std::size_t i = 1; i < r.counts.size(); ++i) CHECK(r.counts[i] >= r.counts[i - 1]);
    }
}

TEST_CASE("dimension is invariant under affine rescaling of either axis") {
    BoxCountConfig cfg;
    cfg.log_y = false;
    const auto base = synthetic::koch(6);
    const auto r0 = box_counting_dimension(base, cfg);
    auto moved = base;
    for (auto& [x, y] : moved) {
        x = 64.1 + 0.5 * x;
        y = 3e2 * y - 7.0;
    }
    const auto r1 = box_counting_dimension(moved, cfg);
    CHECK(std::abs(r1.dimension - r0.dimension) <= r0.ci_halfwidth);
}

TEST_CASE("box counting needs enough scales") {
    BoxCountConfig cfg;
    cfg.log_y = false;
    std::vector<std::pair<double, double>> few{{0, 0}, {0.5, 1}, {1, 0}};
    CHECK_THROWS_AS(box_counting_dimension(few, cfg), std::domain_error);
    cfg.fit_range = std::make_pair(0.01, 0.02);
    CHECK_THROWS_AS(box_counting_dimension(synthetic::koch(5), cfg), std::domain_error);
}

TEST_CASE("exit curve caps trapped samples and drops failures") {
    std::vector<ExitRecord> recs(3);
    recs[0].p0 = 1;
    recs[0].T = 50.0;
    recs[1].p0 = 2;
    recs[2].p0 = 3;
    recs[2].failed = true;
    const auto c = exit_curve(recs, 1e4);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[1].second == 1e4);
    CHECK(c.capped == 1);
    CHECK(c.excluded == 1);
}

TEST_CASE("stochastic layer width") {
    // independent evaluation of the closed form
    CHECK(stochastic_layer_width({1e-3, 0.4, 10}, 11.0) ==
          doctest::Approx(1.997273909892037e-168).epsilon(1e-12));
    CHECK(stochastic_layer_width({1e-1, 0.4, 10}, 11.0) == doctest::Approx(1.0088960959290715e-12).epsilon(1e-12));
    // vanishes as alpha goes to zero
    CHECK(stochastic_layer_width({1e-6, 0.4, 10}, 11.0) == 0.0);
    // grows along an alpha ramp while Omega/omega is above the crossover
    double prev = 0.0;
    for (double a = 1e-3; a < 5.0; a *= 1.5) {
        const double w = stochastic_layer_width({a, 0.4, 10}, 11.0);
        CHECK(w >= prev);
        prev = w;
    }
    CHECK_THROWS_AS(stochastic_layer_width({1e-3, 0.0, 10}, 11.0), std::domain_error);
    CHECK_THROWS_AS(stochastic_layer_width({1e-3, 0.4, 10}, 0.0), std::domain_error);
    // pure evaluation: repeated calls agree bit for bit
    CHECK(stochastic_layer_width({2e-2, -1.3, 4}, 5.0) == stochastic_layer_width({2e-2, -1.3, 4}, 5.0));
}

TEST_CASE("predictability horizon") {
    CHECK(predictability_horizon(0.05, 1e-4, 2.0) == doctest::Approx(198.06975105072254).epsilon(1e-14));
    CHECK(predictability_horizon(0.5, 1.0, std::exp(5.0)) == doctest::Approx(10.0));
    CHECK(predictability_horizon(0.3, 1e-3, 1e-3) == 0.0);
    CHECK(std::isinf(predictability_horizon(0.0, 1e-4, 2.0)));
    CHECK(std::isinf(predictability_horizon(-0.1, 1e-4, 2.0)));
    CHECK_THROWS_AS(predictability_horizon(0.1, 2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(predictability_horizon(0.1, 0.0, 1.0), std::domain_error);
}

TEST_CASE("oscillation frequency of a sampled cosine") {
    std::vector<double> t, z;
    for (int i = 0; i <= 10000; ++i) {
        t.push_back(i * 0.01);
        z.push_back(-0.2 - 0.7 * std::cos(1.7 * t.back()) + 0.02 * std::sin(40.0 * t.back()));
    }
    CHECK(oscillation_frequency(t, z) == doctest::Approx(1.7).epsilon(1e-3));
    CHECK(peak_to_peak({1.0, -0.5, 0.25}) == 1.5);
    CHECK_THROWS_AS(oscillation_frequency({0, 1, 2}, {0, 0.1, 0.2}), std::domain_error);
}

TEST_CASE("transport exponent calibration") {
    SUBCASE("ballistic") {
        std::vector<double> t;
        for (int i = 0; i <= 200; ++i) t.push_back(i * 0.5);
        const auto r = transport_exponent(t, synthetic::ballistic(t, 400, 1), 10.0, 100.0);
        CHECK(r.mu == doctest::Approx(2.0).epsilon(0.025));
        CHECK(r.r2 > 0.95);
    }
    SUBCASE("random walk") {
        std::vector<double> t;
        for (int i = 0; i <= 2000; ++i) t.push_back(i);
        const auto r = transport_exponent(t, synthetic::random_walk(2000, 500, 2), 10.0, 2000.0);
        CHECK(std::abs(r.mu - 1.0) <= 0.1);
    }
    SUBCASE("rejections") {
        std::vector<double> t{0, 1, 2, 3};
        CHECK_THROWS(transport_exponent(t, std::vector<std::vector<double>>(99, {0, 1, 2, 3}), 1, 3));
        CHECK_THROWS(transport_exponent(t, std::vector<std::vector<double>>(100, {0, 0, 0, 0}), 1, 3));
    }
}

TEST_CASE("recurrence fits") {
    SUBCASE("planted power law") {
        const auto f = recurrence_exponent(synthetic::pareto(4000, 2.5, 1.0, 7));
        CHECK(std::abs(f.gamma - 2.5) <= 0.2);
        CHECK(f.preferred == "power-law");
        CHECK(f.power_r2 > 0.95);
    }
    SUBCASE("exponential sample") {
        const auto f = recurrence_exponent(synthetic::exponential(4000, 0.2, 3.0, 8));
        CHECK(f.preferred == "exponential");
        CHECK(f.rate == doctest::Approx(0.2).epsilon(0.1));
    }
    SUBCASE("periodic orbit is degenerate") {
        const auto f = recurrence_exponent(std::vector<double>(80, 6.25));
        CHECK(f.degenerate);
        CHECK(f.preferred == "none");
    }
    SUBCASE("too few returns") {
        CHECK_THROWS_AS(recurrence_exponent(synthetic::pareto(49, 2.5, 1.0, 9)), std::domain_error);
    }
}

TEST_CASE("recurrence times of a circular orbit") {
    std::vector<double> t;
    std::vector<std::vector<double>> s;
    for (int i = 0; i <= 4000; ++i) {
        t.push_back(i * 0.01);
        s.push_back({std::cos(t.back()), std::sin(t.back())});
    }
    RecurrenceMetric metric{{1.0, 1.0}, -1};
    const auto r = recurrence_times(t, s, 0.05, metric);
    REQUIRE(r.size() == 6);
    for (double dt : r) CHECK(dt == doctest::Approx(2 * M_PI).epsilon(1e-2));
}

TEST_CASE("fit reports warn on poor fits") {
    const auto good = make_report("x", 1.0, 0.1, {1, 2}, 0.99, "d");
    CHECK(good.warnings.empty());
    const auto bad = make_report("x", 1.0, 0.1, {1, 2}, 0.5, "d");
    REQUIRE(bad.warnings.size() == 1);
    const auto j = to_json(bad);
    CHECK(j["estimator"] == "x");
    CHECK(j["fit_window"][1] == 2.0);
    CHECK(j["warnings"].size() == 1);
    CHECK(digest_values({1.0, 2.0}) == digest_values({1.0, 2.0}));
    CHECK(digest_values({1.0, 2.0}) != digest_values({2.0, 1.0}));
}
