#include "doctest.h"

#include "cavity/integrator.hpp"
#include "cavity/model.hpp"

#include <cmath>
#include <random>

using namespace cavity;

namespace {

std::vector<double> eval(const Model& m, const std::vector<double>& y) {
    std::vector<double> d(y.size());
    m.rhs(y, d);
    return d;
}

Trajectory run(const Model& m, const std::vector<double>& y0, double t_end, double dt = 0.0) {
    IntegratorConfig cfg;
    cfg.t_end = t_end;
    cfg.sample_interval = dt;
    return integrate([&m](double, std::span<const double> y, std::span<double> d) { m.rhs(y, d); }, y0, cfg);
}

}  // namespace

TEST_CASE("preparation splits the inversion between the two subspaces") {
    const ControlParams params{1e-3, 0.4, 10};
    const FockPairState s = prepare_initial({0.3, 50.0, 0.2}, params);
    CHECK(s.x == 0.3);
    CHECK(s.p == 50.0);
    CHECK(s.lower.z == doctest::Approx(-0.4));
    CHECK(s.upper.z == doctest::Approx(0.6));
    CHECK(s.lower.u == 0.0);
    CHECK(s.lower.v == 0.0);
    CHECK(s.upper.u == 0.0);
    CHECK(s.upper.v == 0.0);
    // total probability is 1
    CHECK(s.upper.norm() + s.lower.norm() == doctest::Approx(1.0));

    CHECK_THROWS_AS(prepare_initial({0, 50, 1.5}, params), std::invalid_argument);
    CHECK_THROWS_AS(prepare_initial({0, 50, 0.0}, {1e-3, 0.4, 0}), std::invalid_argument);
    CHECK_NOTHROW(prepare_initial({0, 50, 1.0}, {1e-3, 0.4, 0}));
}

TEST_CASE("reduction picks N from the energetic eigenstate") {
    const ControlParams params{1e-3, 0.4, 10};
    CHECK(reduce_to_semiclassical({0, 50, 1.0}, params).N == 11.0);
    CHECK(reduce_to_semiclassical({0, 50, -1.0}, params).N == 10.0);
    CHECK(reduce_to_semiclassical({0, 50, -1.0}, params).z == -1.0);
    CHECK_THROWS_AS(reduce_to_semiclassical({0, 50, 0.5}, params), std::invalid_argument);
}

TEST_CASE("control parameters are validated") {
    CHECK_THROWS_AS((ControlParams{0.0, 0.0, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ControlParams{1e-3, NAN, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ControlParams{1e-3, 0.0, -1}.validate()), std::invalid_argument);
    CHECK_NOTHROW((ControlParams{1e-3, 0.0, 0}.validate()));
}

TEST_CASE("model kind names round-trip") {
    for (auto k : {ModelKind::semiclassical, ModelKind::fock_pair, ModelKind::ladder}) {
        CHECK(parse_model_kind(to_string(k)) == k);
    }
    CHECK_THROWS(parse_model_kind("pendulum"));
}

TEST_CASE("pair right-hand side with one empty triple equals the semiclassical one") {
    const ControlParams params{2e-3, 0.7, 6};
    const Model pair = Model::fock_pair(params);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double x = 3 * U(rng), p = 40 * U(rng), u = U(rng), v = U(rng), z = U(rng);
        // upper triple only: coupling sqrt(nbar + 1)
        const auto up = eval(pair, {x, p, 0, 0, 0, u, v, z});
        const auto sc_up = eval(Model::semiclassical(params, params.nbar + 1), {x, p, u, v, z});
        // lower triple only: coupling sqrt(nbar)
        const auto lo = eval(pair, {x, p, u, v, z, 0, 0, 0});
        const auto sc_lo = eval(Model::semiclassical(params, params.nbar), {x, p, u, v, z});
        for (int i = 0; i < 2; ++i) {
            CHECK(up[i] == doctest::Approx(sc_up[i]).epsilon(1e-14));
            CHECK(lo[i] == doctest::Approx(sc_lo[i]).epsilon(1e-14));
        }
        for (int i = 0; i < 3; ++i) {
            CHECK(up[5 + i] == doctest::Approx(sc_up[2 + i]).epsilon(1e-14));
            CHECK(lo[2 + i] == doctest::Approx(sc_lo[2 + i]).epsilon(1e-14));
            CHECK(up[2 + i] == 0.0);
            CHECK(lo[5 + i] == 0.0);
        }
    }
}

TEST_CASE("ladder with two adjacent triples equals the pair system") {
    const ControlParams params{1e-3, -0.3, 4};
    const Model pair = Model::fock_pair(params);
    const Model ladder = Model::ladder(params, 8);
    const FockPairState s{0.4, 31.0, {0.1, -0.2, -0.3}, {0.05, 0.3, 0.6}};
    const auto d_pair = eval(pair, pair.pack(s));
    const auto y_ladder = ladder.pack(embed_in_ladder(s, params, 8));
    const auto d_ladder = eval(ladder, y_ladder);
    const auto back = unpack_ladder(d_ladder);
    CHECK(back.x == doctest::Approx(d_pair[0]));
    CHECK(back.p == doctest::Approx(d_pair[1]));
    for (int i = 0; i < 3; ++i) {
        const double lo[3] = {back.components[3].u, back.components[3].v, back.components[3].z};
        const double up[3] = {back.components[4].u, back.components[4].v, back.components[4].z};
        CHECK(lo[i] == doctest::Approx(d_pair[2 + i]));
        CHECK(up[i] == doctest::Approx(d_pair[5 + i]));
    }
    for (int n : {0, 1, 2, 5, 6, 7, 8}) {
        CHECK(back.components[n].norm() == 0.0);
    }
}

TEST_CASE("integrals are conserved along pair trajectories") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const ControlParams params{std::pow(10.0, -3.0 + U(rng)), 2 * U(rng) - 1, 1 + int(12 * U(rng))};
        const Model m = Model::fock_pair(params);
        const auto y0 = m.pack(prepare_initial({U(rng), 20 + 60 * U(rng), 2 * U(rng) - 1}, params));
        const auto traj = run(m, y0, 300.0);
        REQUIRE(traj.ok());
        const double W0 = m.energy(y0);
        const auto R0 = m.bloch_norms(y0);
        const auto& yf = traj.final_state();
        CHECK(std::abs(m.energy(yf) - W0) / std::max(1.0, std::abs(W0)) <= 1e-8);
        const auto Rf = m.bloch_norms(yf);
        for (std::size_t k = 0; k < R0.size(); ++k) CHECK(std::abs(Rf[k] - R0[k]) <= 1e-8);
    }
}

TEST_CASE("resonance freezes every u component") {
    const ControlParams params{1e-3, 0.0, 10};
    const Model m = Model::fock_pair(params);
    FockPairState s = prepare_initial({0.2, 50, 0.3}, params);
    s.lower.u = 0.3;
    s.upper.u = -0.2;
    s.lower.z = -std::sqrt(0.35 * 0.35 - 0.09);
    const auto traj = run(m, m.pack(s), 500.0, 5.0);
    REQUIRE(traj.ok());
    for (const auto& y : traj.states) {
        CHECK(std::abs(y[2] - 0.3) <= 1e-8);
        CHECK(std::abs(y[5] + 0.2) <= 1e-8);
    }
}

TEST_CASE("ladder conserves total probability without truncation leakage") {
    const ControlParams params{1e-3, 0.4, 3};
    const Model m = Model::ladder(params, 6);
    const auto y0 = m.pack(embed_in_ladder(prepare_initial({0, 40, 0.1}, params), params, 6));
    const auto traj = run(m, y0, 200.0);
    REQUIRE(traj.ok());
    const auto I = ladder_integrals(unpack_ladder(traj.final_state()), params);
    CHECK(I.total_probability == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("semiclassical motion is a frequency-modulated pendulum") {
    const ControlParams params{1e-3, 0.4, 10};
    const Model m = Model::semiclassical(params, 11);
    const double h = 0.01;
    const auto traj = run(m, m.pack(reduce_to_semiclassical({0, 50, 1}, params)), 20.0, h);
    REQUIRE(traj.ok());
    for (std::size_t i = 1; i + 1 < traj.states.size(); i += 97) {
        const double xdd = (traj.states[i + 1][0] - 2 * traj.states[i][0] + traj.states[i - 1][0]) / (h * h);
        const double force = -params.alpha * std::sqrt(11.0) * traj.states[i][2] * std::sin(traj.states[i][0]);
        CHECK(std::abs(xdd - force) <= 1e-7 + 1e-3 * std::abs(force));
    }
}
