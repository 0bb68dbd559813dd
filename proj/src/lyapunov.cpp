#include "cavity/lyapunov.hpp"

#include "cavity/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cavity {

TangentSystem TangentSystem::from_model(const Model& model) {
    TangentSystem sys;
    sys.dimension = model.dimension();
    sys.rhs = [model](std::span<const double> y, std::span<double> dy) { model.rhs(y, dy); };
    sys.tangent = [model](std::span<const double> y, std::span<const double> w,
                          std::span<double> jw) { model.tangent(y, w, jw); };
    sys.description = to_string(model.kind()) + " (" + std::to_string(model.dimension()) + "-dim)";
    return sys;
}

double Jacobian::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += entries[i * n + i];
    return t;
}

Jacobian jacobian(const Model& model, std::span<const double> y) {
    const std::size_t n = model.dimension();
    if (y.size() != n) throw std::invalid_argument("jacobian: state dimension mismatch");
    Jacobian jac{n, std::vector<double>(n * n, 0.0)};
    std::vector<double> e(n, 0.0);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        model.tangent(y, e, column);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) jac.entries[i * n + j] = column[i];
    }
    return jac;
}

void LyapunovConfig::validate() const {
    if (!(renorm_interval > 0.0) || !std::isfinite(renorm_interval)) {
        throw std::invalid_argument("renorm_interval must be positive");
    }
    if (!(tau_total >= renorm_interval) || !std::isfinite(tau_total)) {
        throw std::invalid_argument("tau_total must be at least one renormalization interval");
    }
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw std::invalid_argument("tail_fraction must lie in (0, 1]");
    }
    if (series_stride == 0) throw std::invalid_argument("series_stride must be >= 1");
}

namespace {

struct TailRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double spread() const { return hi >= lo ? hi - lo : 0.0; }
};

LyapunovResult run_benettin(const TangentSystem& system, std::span<const double> y0,
                            const LyapunovConfig& config, std::vector<std::vector<double>> basis) {
    config.validate();
    const std::size_t n = system.dimension;
    if (y0.size() != n) throw std::invalid_argument("lyapunov: state dimension mismatch");
    const std::size_t k = basis.size();

    std::vector<double> aug(n * (1 + k));
    std::copy(y0.begin(), y0.end(), aug.begin());
    for (std::size_t j = 0; j < k; ++j) std::copy(basis[j].begin(), basis[j].end(), aug.begin() + n * (1 + j));

    RhsFunction rhs = [&system, n, k](double, std::span<const double> y, std::span<double> dy) {
        const auto base = y.first(n);
        system.rhs(base, dy.first(n));
        for (std::size_t j = 0; j < k; ++j) {
            system.tangent(base, y.subspan(n * (1 + j), n), dy.subspan(n * (1 + j), n));
        }
    };

    LyapunovResult result;
    result.renorm_interval = config.renorm_interval;
    result.tau_total = config.tau_total;

    const auto segments =
        static_cast<std::size_t>(std::llround(config.tau_total / config.renorm_interval));
    const auto tail_start = static_cast<std::size_t>(
        std::floor(static_cast<double>(segments) * (1.0 - config.tail_fraction)));
    std::vector<double> log_sum(k, 0.0);
    std::vector<TailRange> tail(k);

    Dop853 stepper(rhs, aug.size(), config.rel_tol, config.abs_tol);
    double h_guess = 0.0;
    double t = 0.0;
    for (std::size_t seg = 1; seg <= segments; ++seg) {
        stepper.reset(t, aug, h_guess);
        const double t_target = static_cast<double>(seg) * config.renorm_interval;
        while (stepper.time() < t_target) {
            const auto outcome = stepper.step(t_target);
            if (outcome != Dop853::StepOutcome::accepted) {
                result.ok = false;
                result.failure = (outcome == Dop853::StepOutcome::step_underflow
                                      ? "step-size underflow at tau = "
                                      : "non-finite state at tau = ") +
                                 std::to_string(stepper.time());
                break;
            }
        }
        if (!result.ok) break;
        h_guess = stepper.step_size();
        t = t_target;
        std::copy(stepper.state().begin(), stepper.state().end(), aug.begin());

        // modified Gram-Schmidt on the tangent block
        for (std::size_t j = 0; j < k; ++j) {
            std::span<double> wj(aug.data() + n * (1 + j), n);
            for (std::size_t l = 0; l < j; ++l) {
                std::span<const double> wl(aug.data() + n * (1 + l), n);
                const double dot = std::inner_product(wj.begin(), wj.end(), wl.begin(), 0.0);
                for (std::size_t i = 0; i < n; ++i) wj[i] -= dot * wl[i];
            }
            const double norm = std::sqrt(std::inner_product(wj.begin(), wj.end(), wj.begin(), 0.0));
            if (!(norm > 0.0) || !std::isfinite(norm)) {
                result.ok = false;
                result.failure = "degenerate tangent vector at tau = " + std::to_string(t);
                break;
            }
            log_sum[j] += std::log(norm);
            for (double& v : wj) v /= norm;
            if (seg > tail_start) tail[j].add(log_sum[j] / t);
        }
        if (!result.ok) break;
        if (seg % config.series_stride == 0 || seg == segments) {
            result.convergence.emplace_back(t, log_sum[0] / t);
        }
    }

    const double t_final = t > 0.0 ? t : config.renorm_interval;
    std::vector<std::pair<double, double>> exps(k);
    for (std::size_t j = 0; j < k; ++j) exps[j] = {log_sum[j] / t_final, tail[j].spread()};
    std::stable_sort(exps.begin(), exps.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [value, spread] : exps) {
        result.spectrum.push_back(value);
        result.spectrum_uncertainty.push_back(spread);
    }
    result.lambda_max = result.spectrum.front();
    result.uncertainty = result.spectrum_uncertainty.front();
    result.converged =
        result.ok && result.uncertainty <= std::max(0.1 * std::abs(result.lambda_max), 1e-3);
    return result;
}

}  // namespace

LyapunovResult max_lyapunov(const TangentSystem& system, std::span<const double> y0,
                            const LyapunovConfig& config, std::span<const double> initial_tangent) {
    const std::size_t n = system.dimension;
    std::vector<double> w(n, 0.0);
    std::string convention;
    if (initial_tangent.empty()) {
        if (config.seed_component >= n) throw std::invalid_argument("seed_component out of range");
        w[config.seed_component] = 1.0;
        convention = "unit vector along component " + std::to_string(config.seed_component);
    } else {
        if (initial_tangent.size() != n) {
            throw std::invalid_argument("initial tangent has the wrong dimension");
        }
        const double norm =
            std::sqrt(std::inner_product(initial_tangent.begin(), initial_tangent.end(), initial_tangent.begin(), 0.0));
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw std::invalid_argument("initial tangent must be a finite nonzero vector");
        }
        // only the direction matters
        for (std::size_t i = 0; i < n; ++i) w[i] = initial_tangent[i] / norm;
        convention = "caller-supplied initial tangent";
    }
    LyapunovResult r = run_benettin(system, y0, config, {w});
    r.tangent_convention = system.description + "; " + convention;
    return r;
}

LyapunovResult lyapunov_spectrum(const TangentSystem& system, std::span<const double> y0,
                                 const LyapunovConfig& config, std::size_t count) {
    const std::size_t n = system.dimension;
    if (count == 0 || count > n) count = n;
    if (config.seed_component >= n) throw std::invalid_argument("seed_component out of range");
    // seed direction first, then the remaining unit vectors in index order
    std::vector<std::vector<double>> basis;
    std::vector<std::size_t> order{config.seed_component};
    for (std::size_t i = 0; i < n; ++i) {
        if (i != config.seed_component) order.push_back(i);
    }
    for (std::size_t j = 0; j < count; ++j) {
        std::vector<double> e(n, 0.0);
        e[order[j]] = 1.0;
        basis.push_back(std::move(e));
    }
    LyapunovResult r = run_benettin(system, y0, config, std::move(basis));
    r.tangent_convention = system.description + "; orthonormal basis seeded along component " +
                           std::to_string(config.seed_component);
    return r;
}

}  // namespace cavity
