#include "doctest.h"

#include "cavity/cli/pool.hpp"
#include "cavity/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace cavity;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("sweep axes parse from name:min:max:count") {
    const auto a = parse_sweep_axis("log10alpha:-4:-1:61");
    CHECK(a.parameter == AxisParameter::alpha);
    CHECK(a.scale == AxisScale::log10);
    CHECK(a.count == 61);
    CHECK(a.coordinate(0) == -4.0);
    CHECK(a.coordinate(60) == doctest::Approx(-1.0));
    CHECK(a.value(0) == doctest::Approx(1e-4));

    const auto d = parse_sweep_axis("delta:-2:2:81");
    CHECK(d.parameter == AxisParameter::delta);
    CHECK(d.coordinate(40) == doctest::Approx(0.0));

    const auto n = parse_sweep_axis("log10nbar:0:2:3");
    CHECK(n.value(1) == 10.0);

    CHECK_THROWS_AS(parse_sweep_axis("detla:0:1:3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("delta:0:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("delta:0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("alpha:-1:1:3"), std::invalid_argument);
}

TEST_CASE("lambda map is identical for any worker count") {
    const ControlParams base{1e-3, 0.0, 10};
    LyapunovConfig cfg;
    cfg.tau_total = 200.0;
    const auto a1 = parse_sweep_axis("delta:-1:1:3");
    const auto a2 = parse_sweep_axis("log10alpha:-3:-2:2");
    const auto serial = lambda_map(base, {0, 50, 0}, cfg, a1, a2);
    const auto threaded = lambda_map(base, {0, 50, 0}, cfg, a1, a2, cli::thread_pool_for(3));
    REQUIRE(serial.values.size() == 6);
    CHECK(serial.failed_count() == 0);
    std::ostringstream x, y;
    write_lambda_map_csv(x, serial);
    write_lambda_map_csv(y, threaded);
    CHECK(x.str() == y.str());
    CHECK(x.str().find("tangent") != std::string::npos);
}

TEST_CASE("resonant exit time times momentum is constant per sign") {
    const ControlParams params{1e-3, 0.0, 10};
    const auto momenta = linspace(10.0, 200.0, 12);
    const auto recs = exit_time_scan(params, momenta, ExitScanConfig{}, cli::thread_pool_for(2));
    for (std::size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(recs[i].T.has_value());
        CHECK(*recs[i].T * momenta[i] * 1e-3 == doctest::Approx(1.5 * pi).epsilon(1e-9));
    }
    const auto back = exit_time_scan(params, {-10.0, -55.0}, ExitScanConfig{});
    for (const auto& r : back) CHECK(*r.T * std::abs(r.p0) * 1e-3 == doctest::Approx(0.5 * pi).epsilon(1e-9));
}

TEST_CASE("an atom balanced on the barrier top is separatrix-proximal") {
    // far detuned, ground state: pendulum-like potential with maxima at the antinodes
    const ControlParams params{1e-3, 10.0, 10};
    ExitScanConfig cfg;
    cfg.z_in = -1.0;
    cfg.x0 = pi / 2;
    cfg.t_horizon = 1500.0;
    double lo = 30.0, hi = 50.0;
    for (int k = 0; k < 55; ++k) {
        const double mid = 0.5 * (lo + hi);
        (exit_time_sample(params, mid, cfg).side == ExitSide::right ? hi : lo) = mid;
    }
    cfg.t_horizon = 300.0;
    const auto r = exit_time_sample(params, lo, cfg);
    CHECK(r.kind == TrajectoryKind::separatrix_proximal);
    const auto t = exit_trajectory(params, lo, cfg);
    CHECK(std::abs(t.final_state()[0] - pi) < 1e-2);
    CHECK(std::abs(t.final_state()[1]) < 1e-2);

    // the same atom ends plainly trapped with a threshold it cannot meet
    cfg.geometry.separatrix_momentum = 1e-9;
    CHECK(exit_time_sample(params, lo, cfg).kind == TrajectoryKind::trapped);
}

TEST_CASE("bisection between m = 1 and m = 2 lengthens the exit time") {
    const ControlParams params{1e-3, 0.4, 10};
    ExitScanConfig cfg;
    const auto grid = linspace(64.1, 64.2, 40);
    const auto recs = exit_time_scan(params, grid, cfg);
    std::size_t i = 0;
    while (i + 1 < recs.size() && !(recs[i].m == 1 && recs[i + 1].m == 2)) ++i;
    REQUIRE(i + 1 < recs.size());
    const auto b = bisect_singular_point(params, grid[i], grid[i + 1], 20, cfg);
    CHECK(b.probes.size() == 20);
    CHECK(b.hi - b.lo == doctest::Approx((grid[i + 1] - grid[i]) / (1 << 20)).epsilon(1e-6));
    CHECK(b.max_T > std::max(*recs[i].T, *recs[i + 1].T));
    CHECK_THROWS_AS(bisect_singular_point(params, grid[0], grid[0] + 1e-9, 5, cfg), std::invalid_argument);
}

TEST_CASE("resonant z scan is smooth and the perturbation flips at the upper edge") {
    const ControlParams params{1e-3, 0.0, 10};
    const auto grid = linspace(-1.0, 1.0, 21);
    const auto scan = zout_zin_scan(params, 0.0, 50.0, 50.0, grid, 1e-4, IntegratorConfig{});
    REQUIRE(scan.z_out.size() == 21);
    CHECK(std::count(scan.failed.begin(), scan.failed.end(), 1) == 0);
    const auto sens = zscan_sensitivity(scan, 5);
    CHECK(sens.max_linear_residual <= 1e-9);
    // at the upper edge the probe steps inward
    const auto edge = zout_zin_scan(params, 0.0, 50.0, 50.0, {1.0 - 1e-4, -1.0 + 1e-4}, 1e-4, IntegratorConfig{});
    CHECK(scan.z_out_perturbed.back() == edge.z_out[0]);
    CHECK(scan.z_out_perturbed.front() == edge.z_out[1]);
}

TEST_CASE("doppler-rabi helpers") {
    const ControlParams params{1e-3, 32.0, 10};
    CHECK(doppler_rabi_frequency(params, 32000.0) == doctest::Approx(std::pow(11.0, 0.25)));
    CHECK(doppler_rabi_analytic(params, 32000.0, 0.0) == doctest::Approx(-1.0));
    const auto s = doppler_rabi_run(params, 32000.0, -1.0, 5.0, 0.5);
    CHECK(s.status == IntegrationStatus::completed);
    CHECK(s.tau.size() == 11);
    CHECK(s.z.front() == -1.0);
    CHECK(s.z_upper.front() == 0.0);
    CHECK(!s.raman_nath_violated);
}

TEST_CASE("exit scan csv leaves T empty for trapped atoms and documents units") {
    ExitRecord flew{50.0, 94.2, ExitSide::right, 1, TrajectoryKind::flythrough};
    ExitRecord stuck{51.0, std::nullopt, ExitSide::none, 4, TrajectoryKind::trapped};
    std::ostringstream out;
    write_exit_scan_csv(out, {flew, stuck}, {{"t_horizon", "10000"}});
    const std::string text = out.str();
    CHECK(text.find("# t_horizon: 10000") != std::string::npos);
    CHECK(text.find("# column p0: momentum [hbar k_f]") != std::string::npos);
    CHECK(text.find("# column T: normalized time [1/Omega_0]") != std::string::npos);
    CHECK(text.find("p0,T,side,m,trapped,kind\n") != std::string::npos);
    CHECK(text.find("\n51,,none,4,true,trapped\n") != std::string::npos);
}

TEST_CASE("geometry is validated") {
    CavityGeometry g;
    CHECK_NOTHROW(g.validate());
    g.left = 2.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
