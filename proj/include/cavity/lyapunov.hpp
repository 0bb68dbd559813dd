// Lyapunov exponents by tangent-space propagation with periodic
// Gram-Schmidt re-orthonormalization (Benettin et al.).

#pragma once

#include "cavity/model.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cavity {

/// Autonomous flow together with its linearization.
struct TangentSystem {
    std::size_t dimension = 0;
    std::function<void(std::span<const double> y, std::span<double> dydt)> rhs;
    /// jw = J(y) w
    std::function<void(std::span<const double> y, std::span<const double> w,
                       std::span<double> jw)>
        tangent;
    std::string description;

    static TangentSystem from_model(const Model& model);
};

/// Dense row-major Jacobian of the model right-hand side at y.
struct Jacobian {
    std::size_t n = 0;
    std::vector<double> entries;

    double operator()(std::size_t row, std::size_t col) const { return entries[row * n + col]; }
    double trace() const;
};

Jacobian jacobian(const Model& model, std::span<const double> y);

struct LyapunovConfig {
    double tau_total = 1e5;
    double renorm_interval = 1.0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// Uncertainty is the spread of lambda(tau) over this final fraction of the run.
    double tail_fraction = 0.2;
    /// Index of the unit vector seeding the leading tangent direction (1 = p).
    std::size_t seed_component = 1;
    /// Keep every k-th renormalization in the convergence series.
    std::size_t series_stride = 1;

    void validate() const;
};

struct LyapunovResult {
    double lambda_max = 0.0;
    double uncertainty = 0.0;
    /// Descending; a single entry for max_lyapunov.
    std::vector<double> spectrum;
    std::vector<double> spectrum_uncertainty;
    /// (tau, lambda_1(tau)) after each kept renormalization.
    std::vector<std::pair<double, double>> convergence;
    double renorm_interval = 0.0;
    double tau_total = 0.0;
    bool converged = false;
    bool ok = true;
    std::string failure;
    /// Space the tangent vectors live in and how they were seeded.
    std::string tangent_convention;
};

/// Largest exponent from one tangent vector. An empty initial_tangent means the
/// unit vector along config.seed_component.
LyapunovResult max_lyapunov(const TangentSystem& system, std::span<const double> y0,
                            const LyapunovConfig& config,
                            std::span<const double> initial_tangent = {});

/// First `count` exponents (all of them when count is 0).
LyapunovResult lyapunov_spectrum(const TangentSystem& system, std::span<const double> y0,
                                 const LyapunovConfig& config, std::size_t count = 0);

}  // namespace cavity
