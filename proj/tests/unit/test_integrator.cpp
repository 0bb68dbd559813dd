#include "doctest.h"

#include "cavity/experiments.hpp"
#include "cavity/integrator.hpp"
#include "cavity/model.hpp"

#include <cmath>
#include <numbers>

using namespace cavity;

namespace {

constexpr double pi = std::numbers::pi;

RhsFunction flow(const Model& m) {
    return [&m](double, std::span<const double> y, std::span<double> d) { m.rhs(y, d); };
}

}  // namespace

TEST_CASE("force-free atom flies in a straight line") {
    const ControlParams params{1e-3, 0.0, 10};
    const Model m = Model::fock_pair(params);
    IntegratorConfig cfg;
    cfg.t_end = 100.0;
    cfg.sample_interval = 1.0;
    const auto traj = integrate(flow(m), m.pack(prepare_initial({0.1, 37.0, 0.0}, params)), cfg);
    REQUIRE(traj.ok());
    REQUIRE(traj.times.size() == 101);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        CHECK(traj.times[i] == doctest::Approx(double(i)));
        CHECK(traj.states[i][0] == doctest::Approx(0.1 + 1e-3 * 37.0 * traj.times[i]).epsilon(1e-12));
    }
}

TEST_CASE("two-level precession matches the rotating-wave closed form") {
    // u' = d v, v' = -d u + g z, z' = -g v from the ground state
    const double d = 0.7, g = 2 * std::sqrt(11.0);
    RhsFunction bloch = [=](double, std::span<const double> y, std::span<double> dy) {
        dy[0] = d * y[1];
        dy[1] = -d * y[0] + g * y[2];
        dy[2] = -g * y[1];
    };
    IntegratorConfig cfg;
    cfg.t_end = 100.0;
    cfg.sample_interval = 0.05;
    const std::vector<double> y0{0, 0, -1};
    const auto traj = integrate(bloch, y0, cfg);
    REQUIRE(traj.ok());
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        worst = std::max(worst, std::abs(traj.states[i][2] - rotating_wave_inversion(d, g, traj.times[i])));
    }
    CHECK(worst <= 1e-6);
    // frozen value of the closed form, W = sqrt(0.49 + 44)
    CHECK(rotating_wave_inversion(d, g, 1.0) == doctest::Approx(-0.9268983592740159).epsilon(1e-12));
}

TEST_CASE("exit times follow the resonant law") {
    const ControlParams params{1e-3, 0.0, 10};
    ExitScanConfig cfg;
    SUBCASE("right detector") {
        const auto r = exit_time_sample(params, 100.0, cfg);
        REQUIRE(r.T.has_value());
        CHECK(*r.T == doctest::Approx(15 * pi).epsilon(1e-9));
        CHECK(r.side == ExitSide::right);
        CHECK(r.m == 1);
        CHECK(r.kind == TrajectoryKind::flythrough);
    }
    SUBCASE("left detector") {
        const auto r = exit_time_sample(params, -40.0, cfg);
        REQUIRE(r.T.has_value());
        CHECK(*r.T == doctest::Approx(pi / (2 * 1e-3 * 40.0)).epsilon(1e-9));
        CHECK(r.side == ExitSide::left);
        CHECK(r.m == 0);
    }
    SUBCASE("atom at rest never leaves") {
        cfg.t_horizon = 50.0;
        cfg.x0 = 0.5;
        const auto r = exit_time_sample(params, 0.0, cfg);
        CHECK(r.trapped());
        CHECK(r.m == 0);
        CHECK(r.kind == TrajectoryKind::trapped);
        // at rest on an anti-node it sits on a stationary point
        cfg.x0 = 0.0;
        CHECK(exit_time_sample(params, 0.0, cfg).kind == TrajectoryKind::separatrix_proximal);
    }
}

TEST_CASE("boundary events are refined and ordered") {
    const ControlParams params{1e-3, 0.4, 10};
    const Model m = Model::fock_pair(params);
    const std::vector<EventSpec> events{EventSpec::left_boundary(-pi / 2), EventSpec::right_boundary(1.5 * pi),
                                        EventSpec::node(pi / 2)};
    IntegratorConfig cfg;
    cfg.t_end = 1e4;
    const auto traj = integrate(flow(m), m.pack(prepare_initial({0, 64.3, 0}, params)), cfg, events);
    REQUIRE(traj.status == IntegrationStatus::terminated);
    REQUIRE(!traj.events.empty());
    for (std::size_t i = 1; i < traj.events.size(); ++i) CHECK(traj.events[i].time >= traj.events[i - 1].time);
    for (const auto& e : traj.events) CHECK(std::abs(e.state[0] - e.location) <= 1e-9);
    const auto& last = traj.events.back();
    CHECK((last.kind == EventKind::boundary_left || last.kind == EventKind::boundary_right));
    CHECK(traj.final_time() == last.time);
    const int crossings =
        static_cast<int>(std::count_if(traj.events.begin(), traj.events.end(),
                                       [](const EventRecord& e) { return e.kind == EventKind::node_crossing; }));
    CHECK(count_node_crossings(traj, pi / 2) == crossings);
}

TEST_CASE("node crossings from samples when no events were recorded") {
    Trajectory t;
    t.times = {0, 1, 2, 3};
    t.states = {{0.0, 1}, {2.0, 1}, {1.0, -1}, {2.5, 1}};
    CHECK(count_node_crossings(t, pi / 2) == 3);
    CHECK(count_node_crossings(t, 10.0) == 0);
    const auto e = detect_exit(t, -pi / 2, 2.25);
    REQUIRE(e.time.has_value());
    CHECK(*e.time == doctest::Approx(2.0 + 1.25 / 1.5));
    CHECK(e.side == ExitSide::right);
}

TEST_CASE("halving the tolerance moves the endpoint by less than the coarse budget") {
    const ControlParams params{1e-3, 0.4, 10};
    const Model m = Model::fock_pair(params);
    const auto y0 = m.pack(prepare_initial({0, 50, 0.3}, params));
    IntegratorConfig coarse;
    coarse.t_end = 50.0;
    coarse.rel_tol = 1e-9;
    coarse.abs_tol = 1e-11;
    IntegratorConfig fine = coarse;
    fine.rel_tol /= 2;
    fine.abs_tol /= 2;
    const auto a = integrate(flow(m), y0, coarse).final_state();
    const auto b = integrate(flow(m), y0, fine).final_state();
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-9 * std::max(1.0, std::abs(a[i])) * 100);
    }
}

TEST_CASE("reversing momentum and v retraces the trajectory") {
    const ControlParams params{1e-3, 0.4, 10};
    const Model m = Model::fock_pair(params);
    const auto y0 = m.pack(prepare_initial({0.2, 50, 0.4}, params));
    IntegratorConfig cfg;
    cfg.t_end = 30.0;
    auto y1 = integrate(flow(m), y0, cfg).final_state();
    for (std::size_t i : {1, 3, 6}) y1[i] = -y1[i];
    auto y2 = integrate(flow(m), y1, cfg).final_state();
    for (std::size_t i : {1, 3, 6}) y2[i] = -y2[i];
    for (std::size_t i = 0; i < y0.size(); ++i) {
        CHECK(std::abs(y2[i] - y0[i]) <= 10 * (cfg.abs_tol + cfg.rel_tol * std::abs(y0[i])) * 1e3);
    }
}

TEST_CASE("failures come back with the partial trajectory") {
    RhsFunction blowup = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * y[0]; };
    IntegratorConfig cfg;
    cfg.t_end = 2.0;
    cfg.sample_interval = 0.1;
    const std::vector<double> y0{1.0};
    const auto traj = integrate(blowup, y0, cfg);
    CHECK(!traj.ok());
    CHECK(!traj.message.empty());
    CHECK(traj.times.size() >= 2);
    CHECK(traj.final_time() < 1.0 + 1e-6);

    IntegratorConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.t_end = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
