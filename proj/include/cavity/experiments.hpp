// Figure-level experiments: Doppler-Rabi inversion runs, Lyapunov maps over
// control-parameter grids, output-inversion scans and exit-time scattering.

#pragma once

#include "cavity/integrator.hpp"
#include "cavity/lyapunov.hpp"
#include "cavity/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cavity {

/// Runs body(i) for every i in [0, count). Implementations may run items
/// concurrently; each item writes only to its own output slot.
using ParallelFor = std::function<void(std::size_t count, const std::function<void(std::size_t)>& body)>;

ParallelFor serial_for();

/// Ordered key/value record echoed into output headers.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CavityGeometry {
    double left = -std::numbers::pi / 2;
    double right = 3 * std::numbers::pi / 2;
    double node = std::numbers::pi / 2;
    /// Separatrix-proximal thresholds on |p| and on the distance to the nearest anti-node.
    double separatrix_momentum = 1e-2;
    double separatrix_distance = 1e-2;

    void validate() const;
};

// ---------------------------------------------------------------- Doppler-Rabi

struct InversionSeries {
    std::vector<double> tau;
    std::vector<double> z;
    std::vector<double> z_lower;
    std::vector<double> z_upper;
    double max_momentum_deviation = 0.0;  ///< max |p - p0| / |p0|
    bool raman_nath_violated = false;     ///< deviation above 1%
    IntegrationStatus status = IntegrationStatus::completed;
    std::string message;
};

InversionSeries doppler_rabi_run(const ControlParams& params, double p0, double z_in,
                                 double tau_end, double sample_interval = 0.01,
                                 const IntegratorConfig& integrator = {});

/// Rabi frequency of the printed closed form, sqrt((delta - alpha p0)^2 + sqrt(nbar + 1)).
double doppler_rabi_frequency(const ControlParams& params, double p0);

/// Printed ground-state closed form for the inversion at constant momentum.
double doppler_rabi_analytic(const ControlParams& params, double p0, double tau);

/// Exact solution of the driven two-level system with detuning d and coupling g
/// started in the ground state: z = -d^2/W^2 - (g^2/W^2) cos(W tau), W^2 = d^2 + g^2.
double rotating_wave_inversion(double detuning, double coupling, double tau);

// ---------------------------------------------------------------- lambda maps

enum class AxisParameter { delta, alpha, nbar };
enum class AxisScale { linear, log10 };

struct SweepAxis {
    std::string name;  ///< as given: delta, alpha, log10alpha, nbar, log10nbar
    AxisParameter parameter = AxisParameter::delta;
    AxisScale scale = AxisScale::linear;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 1;

    /// Coordinate of point i on the axis (log10 value for log axes).
    double coordinate(std::size_t i) const;
    /// Physical parameter value at point i; nbar is rounded to an integer.
    double value(std::size_t i) const;
    void apply(std::size_t i, ControlParams& params) const;
};

/// Parses "name:min:max:count", e.g. "delta:-2:2:81" or "log10alpha:-4:-1:61".
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepGrid {
    SweepAxis axis1;
    SweepAxis axis2;
    /// Row-major, axis1 index varies slowest. Failed cells hold NaN.
    std::vector<double> values;
    std::vector<double> uncertainties;
    std::vector<std::uint8_t> failed;
    std::vector<std::string> failures;  ///< empty for computed cells
    Metadata metadata;

    double at(std::size_t i1, std::size_t i2) const { return values[i1 * axis2.count + i2]; }
    std::size_t failed_count() const;
};

SweepGrid lambda_map(const ControlParams& base, const InitialPreparation& prep,
                     const LyapunovConfig& config, const SweepAxis& axis1, const SweepAxis& axis2,
                     const ParallelFor& parallel = serial_for());

// ---------------------------------------------------------------- z_out / z_in

struct ZScan {
    double tau_detect = 0.0;
    double dz_in = 0.0;
    std::vector<double> z_in;
    std::vector<double> z_out;
    /// z_out at z_in + dz_in, or at z_in - dz_in where the shift would leave [-1, 1].
    std::vector<double> z_out_perturbed;
    std::vector<std::uint8_t> failed;
};

ZScan zout_zin_scan(const ControlParams& params, double x0, double p0, double tau_detect,
                    const std::vector<double>& z_in_grid, double dz_in,
                    const IntegratorConfig& integrator = {},
                    const ParallelFor& parallel = serial_for());

struct ZScanSensitivity {
    /// Per grid point: range of both output series over the surrounding window.
    std::vector<double> spread;
    /// Per grid point: |z_out_perturbed - z_out - (+-dz_in) * local slope|.
    std::vector<double> linear_residual;
    std::size_t window = 0;
    double max_spread = 0.0;
    double max_linear_residual = 0.0;
    double total_variation = 0.0;

    /// Fraction of grid points whose spread reaches the threshold.
    double fraction_spread_at_least(double threshold) const;
};

ZScanSensitivity zscan_sensitivity(const ZScan& scan, std::size_t window = 9);

// ---------------------------------------------------------------- exit times

enum class TrajectoryKind { flythrough, multi_pass, separatrix_proximal, trapped };

std::string to_string(TrajectoryKind kind);

struct TrajectoryClass {
    int m = 0;
    TrajectoryKind kind = TrajectoryKind::flythrough;
};

/// m from node crossings; trapped when no detector was reached.
TrajectoryClass classify_trajectory(const Trajectory& trajectory, const CavityGeometry& geometry);

struct ExitRecord {
    double p0 = 0.0;
    std::optional<double> T;  ///< absent when trapped
    ExitSide side = ExitSide::none;
    int m = 0;
    TrajectoryKind kind = TrajectoryKind::flythrough;
    bool failed = false;
    std::string message;

    bool trapped() const { return !T.has_value() && !failed; }
};

struct ExitScanConfig {
    CavityGeometry geometry;
    double x0 = 0.0;
    double z_in = 0.0;
    double t_horizon = 1e4;
    IntegratorConfig integrator;
};

/// Full trajectory of one injected atom; uniform samples when sample_interval > 0.
Trajectory exit_trajectory(const ControlParams& params, double p0, const ExitScanConfig& config,
                           double sample_interval = 0.0);

ExitRecord exit_time_sample(const ControlParams& params, double p0, const ExitScanConfig& config);

std::vector<ExitRecord> exit_time_scan(const ControlParams& params,
                                       const std::vector<double>& p0_values,
                                       const ExitScanConfig& config,
                                       const ParallelFor& parallel = serial_for());

/// count points spaced evenly over [lo, hi], both ends included.
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct BisectionResult {
    std::vector<ExitRecord> probes;  ///< midpoints in evaluation order
    double lo = 0.0;
    double hi = 0.0;
    double max_T = 0.0;  ///< trapped probes count as t_horizon
    bool reached_horizon = false;
};

/// Bisects [p_a, p_b], whose endpoints have different m, always keeping the half
/// whose endpoints still differ in m. Converges toward a separatrix-like momentum.
BisectionResult bisect_singular_point(const ControlParams& params, double p_a, double p_b,
                                      std::size_t steps, const ExitScanConfig& config);

// ---------------------------------------------------------------- output

struct Column {
    std::string name;
    std::string unit;
};

/// '#'-prefixed metadata block followed by one unit line per column.
void write_csv_header(std::ostream& out, const Metadata& metadata, const std::vector<Column>& columns);

void write_inversion_csv(std::ostream& out, const InversionSeries& series, const Metadata& metadata);
void write_lambda_map_csv(std::ostream& out, const SweepGrid& grid);
void write_zscan_csv(std::ostream& out, const ZScan& scan, const Metadata& metadata);
void write_exit_scan_csv(std::ostream& out, const std::vector<ExitRecord>& records,
                         const Metadata& metadata);
void write_convergence_csv(std::ostream& out, const LyapunovResult& result, const Metadata& metadata);

Metadata describe(const ControlParams& params);
Metadata describe(const IntegratorConfig& config);
Metadata describe(const LyapunovConfig& config);
Metadata describe(const CavityGeometry& geometry);

}  // namespace cavity
