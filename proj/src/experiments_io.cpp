#include "cavity/experiments.hpp"
#include "cavity/format.hpp"

#include <cmath>
#include <ostream>

namespace cavity {

namespace {

const char* const kTime = "normalized time [1/Omega_0]";
const char* const kMomentum = "momentum [hbar k_f]";
const char* const kInversion = "population inversion [dimensionless]";
const char* const kRate = "Lyapunov exponent [Omega_0]";

std::string unit_of(const SweepAxis& axis) {
    switch (axis.parameter) {
        case AxisParameter::delta: return "detuning [Omega_0]";
        case AxisParameter::alpha:
            return axis.scale == AxisScale::log10 ? "log10 recoil frequency [dimensionless]"
                                                  : "recoil frequency [dimensionless]";
        case AxisParameter::nbar:
            return axis.scale == AxisScale::log10 ? "log10 photon number [dimensionless]"
                                                  : "photon number [dimensionless]";
    }
    return "";
}

std::string optional_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_csv_header(std::ostream& out, const Metadata& metadata, const std::vector<Column>& columns) {
    for (const auto& [key, value] : metadata) out << "# " << key << ": " << value << '\n';
    for (const Column& c : columns) out << "# column " << c.name << ": " << c.unit << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i].name;
    out << '\n';
}

void write_inversion_csv(std::ostream& out, const InversionSeries& series, const Metadata& metadata) {
    Metadata md = metadata;
    md.emplace_back("max_momentum_deviation", format_double(series.max_momentum_deviation));
    md.emplace_back("raman_nath_violated", series.raman_nath_violated ? "true" : "false");
    md.emplace_back("integration_status", to_string(series.status));
    write_csv_header(out, md,
                     {{"tau", kTime}, {"z", kInversion}, {"z_lower", kInversion}, {"z_upper", kInversion}});
    for (std::size_t i = 0; i < series.tau.size(); ++i) {
        out << format_double(series.tau[i]) << ',' << format_double(series.z[i]) << ','
            << format_double(series.z_lower[i]) << ',' << format_double(series.z_upper[i]) << '\n';
    }
}

void write_lambda_map_csv(std::ostream& out, const SweepGrid& grid) {
    write_csv_header(out, grid.metadata,
                     {{grid.axis1.name, unit_of(grid.axis1)},
                      {grid.axis2.name, unit_of(grid.axis2)},
                      {"lambda", kRate},
                      {"lambda_uncertainty", kRate}});
    for (std::size_t i1 = 0; i1 < grid.axis1.count; ++i1) {
        for (std::size_t i2 = 0; i2 < grid.axis2.count; ++i2) {
            const std::size_t cell = i1 * grid.axis2.count + i2;
            out << format_double(grid.axis1.coordinate(i1)) << ','
                << format_double(grid.axis2.coordinate(i2)) << ','
                << optional_number(grid.values[cell]) << ','
                << optional_number(grid.uncertainties[cell]) << '\n';
        }
    }
}

void write_zscan_csv(std::ostream& out, const ZScan& scan, const Metadata& metadata) {
    Metadata md = metadata;
    md.emplace_back("tau_detect", format_double(scan.tau_detect));
    md.emplace_back("dz_in", format_double(scan.dz_in));
    write_csv_header(out, md,
                     {{"z_in", kInversion}, {"z_out", kInversion}, {"z_out_perturbed", kInversion}});
    for (std::size_t i = 0; i < scan.z_in.size(); ++i) {
        out << format_double(scan.z_in[i]) << ',' << optional_number(scan.z_out[i]) << ','
            << optional_number(scan.z_out_perturbed[i]) << '\n';
    }
}

void write_exit_scan_csv(std::ostream& out, const std::vector<ExitRecord>& records,
                         const Metadata& metadata) {
    write_csv_header(out, metadata,
                     {{"p0", kMomentum},
                      {"T", kTime},
                      {"side", "exit detector [left|right|none]"},
                      {"m", "central-node crossings [count]"},
                      {"trapped", "no exit before the horizon [bool]"},
                      {"kind", "trajectory class"}});
    for (const ExitRecord& r : records) {
        out << format_double(r.p0) << ',' << (r.T ? format_double(*r.T) : std::string()) << ','
            << to_string(r.side) << ',' << r.m << ',' << (r.trapped() ? "true" : "false") << ','
            << (r.failed ? std::string("failed") : to_string(r.kind)) << '\n';
    }
}

void write_convergence_csv(std::ostream& out, const LyapunovResult& result, const Metadata& metadata) {
    Metadata md = metadata;
    md.emplace_back("lambda_max", format_double(result.lambda_max));
    md.emplace_back("uncertainty", format_double(result.uncertainty));
    md.emplace_back("converged", result.converged ? "true" : "false");
    md.emplace_back("tangent_convention", result.tangent_convention);
    write_csv_header(out, md, {{"tau", kTime}, {"lambda", kRate}});
    for (const auto& [tau, lambda] : result.convergence) {
        out << format_double(tau) << ',' << format_double(lambda) << '\n';
    }
}

Metadata describe(const ControlParams& params) {
    return {{"alpha", format_double(params.alpha)},
            {"delta", format_double(params.delta)},
            {"nbar", std::to_string(params.nbar)}};
}

Metadata describe(const IntegratorConfig& config) {
    return {{"integrator", "dop853"},
            {"rel_tol", format_double(config.rel_tol)},
            {"abs_tol", format_double(config.abs_tol)},
            {"max_step", format_double(config.max_step)}};
}

Metadata describe(const LyapunovConfig& config) {
    return {{"lyapunov_method", "benettin-tangent"},
            {"tau_total", format_double(config.tau_total)},
            {"renorm_interval", format_double(config.renorm_interval)},
            {"lyapunov_rel_tol", format_double(config.rel_tol)},
            {"lyapunov_abs_tol", format_double(config.abs_tol)},
            {"tail_fraction", format_double(config.tail_fraction)}};
}

Metadata describe(const CavityGeometry& geometry) {
    return {{"detector_left", format_double(geometry.left)},
            {"detector_right", format_double(geometry.right)},
            {"central_node", format_double(geometry.node)},
            {"separatrix_momentum", format_double(geometry.separatrix_momentum)},
            {"separatrix_distance", format_double(geometry.separatrix_distance)}};
}

}  // namespace cavity
