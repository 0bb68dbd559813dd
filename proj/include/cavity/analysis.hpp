// Post-processing estimators: box-counting dimension of exit-time curves,
// closed-form chaos indicators, transport and recurrence statistics.

#pragma once

#include "cavity/experiments.hpp"
#include "cavity/model.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cavity {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs at least 3 points.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided 95% Student-t half-width for a slope with n - 2 degrees of freedom.
double confidence_halfwidth(const LinearFit& fit);

// ---------------------------------------------------------------- box counting

/// 12 geometric scales from 1/8 down to 1/8192.
std::vector<double> default_box_scales();

struct BoxCountConfig {
    std::vector<double> scales = default_box_scales();
    bool log_y = true;
    /// Scales finer than this many mean sample spacings are left out of the fit.
    double min_scale_spacings = 2.0;
    /// Explicit (min_scale, max_scale) fit window; overrides min_scale_spacings.
    std::optional<std::pair<double, double>> fit_range;
};

struct BoxCountResult {
    double dimension = 0.0;
    double ci_halfwidth = 0.0;
    std::vector<double> scales;     ///< descending
    std::vector<std::size_t> counts;
    std::pair<double, double> fit_range{0.0, 0.0};
    double r2 = 0.0;
    std::size_t points = 0;
    bool log_y = true;
};

/// Occupied boxes of the normalized polyline at one scale; every box the
/// piecewise-linear graph passes through is counted.
std::size_t count_boxes(const std::vector<std::pair<double, double>>& normalized, double scale);

/// Both axes mapped onto [0, 1] (ordinate through log10 first when log_y).
/// Point order is kept: the curve is the polyline through the points as given.
std::vector<std::pair<double, double>> normalize_curve(std::vector<std::pair<double, double>> curve,
                                                       bool log_y);

/// Throws std::domain_error when fewer than 4 scales fall inside the fit window.
BoxCountResult box_counting_dimension(const std::vector<std::pair<double, double>>& curve,
                                      const BoxCountConfig& config = {});

struct ExitCurve {
    std::vector<std::pair<double, double>> points;  ///< (p0, T)
    std::size_t capped = 0;                        ///< trapped samples set to the cap
    std::size_t excluded = 0;                      ///< failed samples dropped
    double cap = 0.0;
};

/// Exit-time graph with trapped samples capped at `cap`.
ExitCurve exit_curve(const std::vector<ExitRecord>& records, double cap);

// ---------------------------------------------------------------- closed forms

/// Lower bound on the stochastic-layer width around the pendulum separatrix.
/// Throws for delta = 0, N <= 0 or alpha <= 0.
double stochastic_layer_width(const ControlParams& params, double N);

/// (1/lambda) ln(dz / dz_in); +infinity when lambda <= 0.
double predictability_horizon(double lambda, double dz_in, double dz);

// ---------------------------------------------------------------- series

/// Angular frequency from upward crossings of the series mean.
double oscillation_frequency(const std::vector<double>& tau, const std::vector<double>& z);

double peak_to_peak(const std::vector<double>& z);

// ---------------------------------------------------------------- transport

struct TransportResult {
    double mu = 0.0;
    double stderr_mu = 0.0;
    double ci_halfwidth = 0.0;
    double r2 = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    std::vector<double> times;
    std::vector<double> msd;  ///< ensemble mean of (x(tau) - x(0))^2
};

/// Log-log fit of the mean squared displacement over [t_min, t_max].
/// positions[k][i] is trajectory k at times[i]; at least 100 trajectories.
TransportResult transport_exponent(const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& positions,
                                   double t_min, double t_max);

// ---------------------------------------------------------------- recurrence

struct RecurrenceMetric {
    /// Per-component divisor; the distance is the largest scaled difference.
    std::vector<double> scales;
    /// Component treated as an angle with period 2 pi (x); -1 for none.
    int periodic_component = 0;
};

/// Times between successive entries into the radius-ball around states[0].
std::vector<double> recurrence_times(const std::vector<double>& times,
                                     const std::vector<std::vector<double>>& states, double radius,
                                     const RecurrenceMetric& metric);

struct RecurrenceFit {
    std::size_t samples = 0;
    bool degenerate = false;  ///< a single repeated return time, no fit attempted
    double t_min = 0.0;
    /// Density exponent of P(t) ~ t^-gamma, maximum likelihood.
    double gamma = 0.0;
    double gamma_stderr = 0.0;
    double power_loglik = 0.0;
    double power_r2 = 0.0;  ///< log survival versus log t
    /// Rate h of P(t) = h exp(-h (t - t_min)).
    double rate = 0.0;
    double rate_stderr = 0.0;
    double exp_loglik = 0.0;
    double exp_r2 = 0.0;  ///< log survival versus t
    std::string preferred;  ///< "power-law", "exponential" or "none"
};

/// Fits the return times at or above t_min (the smallest sample when absent).
/// Throws std::domain_error with fewer than 50 usable returns.
RecurrenceFit recurrence_exponent(std::vector<double> return_times,
                                  std::optional<double> t_min = std::nullopt);

// ---------------------------------------------------------------- reports

struct FitReport {
    std::string estimator;
    double value = 0.0;
    double uncertainty = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    double r2 = 0.0;
    std::string input_digest;
    std::vector<std::string> warnings;
};

/// Adds the low-r2 warning when r2 < 0.95.
FitReport make_report(std::string estimator, double value, double uncertainty,
                      std::pair<double, double> window, double r2, std::string input_digest);

nlohmann::json to_json(const FitReport& report);

/// SHA-256 of the 17-digit text rendering of the values.
std::string digest_values(const std::vector<double>& values);

}  // namespace cavity
