#include "cavity/experiments.hpp"

#include "cavity/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cavity {

ParallelFor serial_for() {
    return [](std::size_t count, const std::function<void(std::size_t)>& body) {
        for (std::size_t i = 0; i < count; ++i) body(i);
    };
}

void CavityGeometry::validate() const {
    if (!(left < node && node < right)) {
        throw std::invalid_argument("cavity geometry needs left < node < right");
    }
    if (!(separatrix_momentum > 0.0) || !(separatrix_distance > 0.0)) {
        throw std::invalid_argument("separatrix thresholds must be positive");
    }
}

namespace {

RhsFunction autonomous(const Model& model) {
    return [model](double, std::span<const double> y, std::span<double> dydt) { model.rhs(y, dydt); };
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------- Doppler-Rabi

InversionSeries doppler_rabi_run(const ControlParams& params, double p0, double z_in,
                                 double tau_end, double sample_interval,
                                 const IntegratorConfig& integrator) {
    if (p0 == 0.0) throw std::invalid_argument("doppler_rabi_run: p0 must be nonzero");
    if (!(sample_interval > 0.0)) {
        throw std::invalid_argument("doppler_rabi_run: sample_interval must be positive");
    }
    const Model model = Model::fock_pair(params);
    const auto y0 = model.pack(prepare_initial({0.0, p0, z_in}, params));
    IntegratorConfig cfg = integrator;
    cfg.t_end = tau_end;
    cfg.sample_interval = sample_interval;
    cfg.record_samples = true;
    const Trajectory traj = integrate(autonomous(model), y0, cfg);

    InversionSeries out;
    out.status = traj.status;
    out.message = traj.message;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto& y = traj.states[i];
        out.tau.push_back(traj.times[i]);
        out.z_lower.push_back(y[4]);
        out.z_upper.push_back(y[7]);
        out.z.push_back(y[4] + y[7]);
        out.max_momentum_deviation =
            std::max(out.max_momentum_deviation, std::abs(y[1] - p0) / std::abs(p0));
    }
    out.raman_nath_violated = out.max_momentum_deviation > 0.01;
    return out;
}

double doppler_rabi_frequency(const ControlParams& params, double p0) {
    const double d = params.delta - params.alpha * p0;
    return std::sqrt(d * d + std::sqrt(params.nbar + 1.0));
}

double doppler_rabi_analytic(const ControlParams& params, double p0, double tau) {
    const double d = params.delta - params.alpha * p0;
    const double w = doppler_rabi_frequency(params, p0);
    return -(d / w) * (d / w) - std::sqrt(params.nbar + 1.0) / (w * w) * std::cos(w * tau);
}

double rotating_wave_inversion(double detuning, double coupling, double tau) {
    const double w2 = detuning * detuning + coupling * coupling;
    if (!(w2 > 0.0)) return -1.0;
    return -(detuning * detuning) / w2 - (coupling * coupling) / w2 * std::cos(std::sqrt(w2) * tau);
}

// ---------------------------------------------------------------- sweep axes

double SweepAxis::coordinate(std::size_t i) const {
    if (count <= 1) return min;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

double SweepAxis::value(std::size_t i) const {
    const double c = coordinate(i);
    const double v = scale == AxisScale::log10 ? std::pow(10.0, c) : c;
    return parameter == AxisParameter::nbar ? std::round(v) : v;
}

void SweepAxis::apply(std::size_t i, ControlParams& params) const {
    const double v = value(i);
    switch (parameter) {
        case AxisParameter::delta: params.delta = v; break;
        case AxisParameter::alpha: params.alpha = v; break;
        case AxisParameter::nbar: params.nbar = static_cast<int>(v); break;
    }
}

SweepAxis parse_sweep_axis(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 4) {
        throw std::invalid_argument("sweep axis '" + text + "' is not of the form name:min:max:count");
    }
    SweepAxis axis;
    axis.name = parts[0];
    if (axis.name == "delta") {
        axis.parameter = AxisParameter::delta;
    } else if (axis.name == "alpha" || axis.name == "log10alpha") {
        axis.parameter = AxisParameter::alpha;
    } else if (axis.name == "nbar" || axis.name == "log10nbar") {
        axis.parameter = AxisParameter::nbar;
    } else {
        throw std::invalid_argument("unknown sweep axis '" + axis.name +
                                    "' (expected delta, alpha, log10alpha, nbar or log10nbar)");
    }
    axis.scale = axis.name.rfind("log10", 0) == 0 ? AxisScale::log10 : AxisScale::linear;
    try {
        std::size_t pos = 0;
        axis.min = std::stod(parts[1], &pos);
        if (pos != parts[1].size()) throw std::invalid_argument("min");
        axis.max = std::stod(parts[2], &pos);
        if (pos != parts[2].size()) throw std::invalid_argument("max");
        const long long n = std::stoll(parts[3], &pos);
        if (pos != parts[3].size() || n < 1) throw std::invalid_argument("count");
        axis.count = static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw std::invalid_argument("sweep axis '" + text + "' has a malformed min, max or count");
    }
    if (!std::isfinite(axis.min) || !std::isfinite(axis.max)) {
        throw std::invalid_argument("sweep axis '" + text + "' has non-finite bounds");
    }
    if (axis.scale == AxisScale::linear) {
        const double lo = std::min(axis.min, axis.max);
        if (axis.parameter == AxisParameter::alpha && !(lo > 0.0)) {
            throw std::invalid_argument("sweep axis '" + text + "' reaches alpha <= 0");
        }
        if (axis.parameter == AxisParameter::nbar && lo < 0.0) {
            throw std::invalid_argument("sweep axis '" + text + "' reaches nbar < 0");
        }
    }
    return axis;
}

std::size_t SweepGrid::failed_count() const {
    return static_cast<std::size_t>(std::count(failed.begin(), failed.end(), std::uint8_t{1}));
}

SweepGrid lambda_map(const ControlParams& base, const InitialPreparation& prep,
                     const LyapunovConfig& config, const SweepAxis& axis1, const SweepAxis& axis2,
                     const ParallelFor& parallel) {
    if (axis1.parameter == axis2.parameter) {
        throw std::invalid_argument("lambda_map: both axes sweep the same parameter");
    }
    config.validate();
    SweepGrid grid;
    grid.axis1 = axis1;
    grid.axis2 = axis2;
    const std::size_t cells = axis1.count * axis2.count;
    grid.values.assign(cells, kNaN);
    grid.uncertainties.assign(cells, kNaN);
    grid.failed.assign(cells, 0);
    grid.failures.assign(cells, {});

    parallel(cells, [&](std::size_t cell) {
        const std::size_t i1 = cell / axis2.count;
        const std::size_t i2 = cell % axis2.count;
        ControlParams params = base;
        axis1.apply(i1, params);
        axis2.apply(i2, params);
        try {
            const Model model = Model::fock_pair(params);
            const auto y0 = model.pack(prepare_initial(prep, params));
            const LyapunovResult r = max_lyapunov(TangentSystem::from_model(model), y0, config);
            if (!r.ok) {
                grid.failed[cell] = 1;
                grid.failures[cell] = r.failure;
                return;
            }
            grid.values[cell] = r.lambda_max;
            grid.uncertainties[cell] = r.uncertainty;
        } catch (const std::exception& e) {
            grid.failed[cell] = 1;
            grid.failures[cell] = e.what();
        }
    });

    Metadata& md = grid.metadata;
    md.emplace_back("experiment", "lambda-map");
    md.emplace_back("axis1", axis1.name + ":" + format_double(axis1.min) + ":" +
                                 format_double(axis1.max) + ":" + std::to_string(axis1.count));
    md.emplace_back("axis2", axis2.name + ":" + format_double(axis2.min) + ":" +
                                 format_double(axis2.max) + ":" + std::to_string(axis2.count));
    for (auto& kv : describe(base)) md.push_back(kv);
    md.emplace_back("x0", format_double(prep.x0));
    md.emplace_back("p0", format_double(prep.p0));
    md.emplace_back("z_in", format_double(prep.z_in));
    for (auto& kv : describe(config)) md.push_back(kv);
    md.emplace_back("tangent_convention",
                    "fock-pair (8-dim); unit vector along component " +
                        std::to_string(config.seed_component) + " (p)");
    md.emplace_back("failed_cells", std::to_string(grid.failed_count()));
    return grid;
}

// ---------------------------------------------------------------- z_out / z_in

ZScan zout_zin_scan(const ControlParams& params, double x0, double p0, double tau_detect,
                    const std::vector<double>& z_in_grid, double dz_in,
                    const IntegratorConfig& integrator, const ParallelFor& parallel) {
    if (!(dz_in > 0.0) || dz_in >= 1.0) {
        throw std::invalid_argument("zout_zin_scan: dz_in must lie in (0, 1)");
    }
    for (double z : z_in_grid) {
        if (!(z >= -1.0 && z <= 1.0)) {
            throw std::invalid_argument("zout_zin_scan: z_in grid must lie in [-1, 1]");
        }
    }
    const Model model = Model::fock_pair(params);
    const RhsFunction rhs = autonomous(model);
    IntegratorConfig cfg = integrator;
    cfg.t_end = tau_detect;
    cfg.record_samples = false;

    ZScan scan;
    scan.tau_detect = tau_detect;
    scan.dz_in = dz_in;
    scan.z_in = z_in_grid;
    const std::size_t n = z_in_grid.size();
    scan.z_out.assign(n, kNaN);
    scan.z_out_perturbed.assign(n, kNaN);
    scan.failed.assign(n, 0);

    auto detect = [&](double z_in) {
        const auto y0 = model.pack(prepare_initial({x0, p0, z_in}, params));
        const Trajectory traj = integrate(rhs, y0, cfg);
        if (!traj.ok()) throw std::runtime_error(traj.message);
        return model.inversion(traj.final_state());
    };

    parallel(n, [&](std::size_t i) {
        const double z = z_in_grid[i];
        const double shifted = z + dz_in <= 1.0 ? z + dz_in : z - dz_in;
        try {
            scan.z_out[i] = detect(z);
            scan.z_out_perturbed[i] = detect(shifted);
        } catch (const std::exception&) {
            scan.failed[i] = 1;
        }
    });
    return scan;
}

double ZScanSensitivity::fraction_spread_at_least(double threshold) const {
    if (spread.empty()) return 0.0;
    const auto hits = std::count_if(spread.begin(), spread.end(),
                                    [threshold](double s) { return s >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(spread.size());
}

ZScanSensitivity zscan_sensitivity(const ZScan& scan, std::size_t window) {
    const std::size_t n = scan.z_in.size();
    if (window == 0) throw std::invalid_argument("zscan_sensitivity: window must be >= 1");
    ZScanSensitivity out;
    out.window = window;
    out.spread.assign(n, kNaN);
    out.linear_residual.assign(n, kNaN);
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double mn = std::numeric_limits<double>::infinity();
        double mx = -mn;
        for (std::size_t j = lo; j <= hi; ++j) {
            for (double v : {scan.z_out[j], scan.z_out_perturbed[j]}) {
                if (std::isnan(v)) continue;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
        }
        if (mx >= mn) out.spread[i] = mx - mn;

        if (n >= 2) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 < n ? i + 1 : n - 1;
            const double slope = (scan.z_out[b] - scan.z_out[a]) / (scan.z_in[b] - scan.z_in[a]);
            const double step = scan.z_in[i] + scan.dz_in <= 1.0 ? scan.dz_in : -scan.dz_in;
            out.linear_residual[i] =
                std::abs(scan.z_out_perturbed[i] - scan.z_out[i] - slope * step);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(out.spread[i])) out.max_spread = std::max(out.max_spread, out.spread[i]);
        if (!std::isnan(out.linear_residual[i])) {
            out.max_linear_residual = std::max(out.max_linear_residual, out.linear_residual[i]);
        }
        if (i > 0) out.total_variation += std::abs(scan.z_out[i] - scan.z_out[i - 1]);
    }
    return out;
}

// ---------------------------------------------------------------- exit times

std::string to_string(TrajectoryKind kind) {
    switch (kind) {
        case TrajectoryKind::flythrough: return "flythrough";
        case TrajectoryKind::multi_pass: return "multi-pass";
        case TrajectoryKind::separatrix_proximal: return "separatrix-proximal";
        case TrajectoryKind::trapped: return "trapped";
    }
    return "unknown";
}

TrajectoryClass classify_trajectory(const Trajectory& trajectory, const CavityGeometry& geometry) {
    TrajectoryClass c;
    c.m = count_node_crossings(trajectory, geometry.node);
    const ExitOutcome exit = detect_exit(trajectory, geometry.left, geometry.right);
    if (!exit.trapped()) {
        c.kind = c.m <= 1 ? TrajectoryKind::flythrough : TrajectoryKind::multi_pass;
        return c;
    }
    const auto& y = trajectory.final_state();
    const double antinode = std::numbers::pi * std::round(y[0] / std::numbers::pi);
    const bool stalled = std::abs(y[1]) < geometry.separatrix_momentum &&
                         std::abs(y[0] - antinode) < geometry.separatrix_distance;
    c.kind = stalled ? TrajectoryKind::separatrix_proximal : TrajectoryKind::trapped;
    return c;
}

Trajectory exit_trajectory(const ControlParams& params, double p0, const ExitScanConfig& config,
                           double sample_interval) {
    config.geometry.validate();
    if (!(config.x0 > config.geometry.left && config.x0 < config.geometry.right)) {
        throw std::invalid_argument("exit scan: x0 must lie between the detectors");
    }
    const Model model = Model::fock_pair(params);
    const auto y0 = model.pack(prepare_initial({config.x0, p0, config.z_in}, params));
    IntegratorConfig cfg = config.integrator;
    cfg.t_end = config.t_horizon;
    cfg.sample_interval = sample_interval;
    const std::vector<EventSpec> events{EventSpec::left_boundary(config.geometry.left),
                                        EventSpec::right_boundary(config.geometry.right),
                                        EventSpec::node(config.geometry.node)};
    return integrate(autonomous(model), y0, cfg, events);
}

ExitRecord exit_time_sample(const ControlParams& params, double p0, const ExitScanConfig& config) {
    ExitRecord rec;
    rec.p0 = p0;
    ExitScanConfig cfg = config;
    cfg.integrator.record_samples = false;
    const Trajectory traj = exit_trajectory(params, p0, cfg);
    if (!traj.ok()) {
        rec.failed = true;
        rec.message = traj.message;
        rec.m = count_node_crossings(traj, config.geometry.node);
        return rec;
    }
    const ExitOutcome exit = detect_exit(traj, config.geometry.left, config.geometry.right);
    const TrajectoryClass cls = classify_trajectory(traj, config.geometry);
    rec.T = exit.time;
    rec.side = exit.side;
    rec.m = cls.m;
    rec.kind = cls.kind;
    return rec;
}

std::vector<ExitRecord> exit_time_scan(const ControlParams& params,
                                       const std::vector<double>& p0_values,
                                       const ExitScanConfig& config, const ParallelFor& parallel) {
    config.geometry.validate();
    std::vector<ExitRecord> records(p0_values.size());
    parallel(p0_values.size(), [&](std::size_t i) {
        try {
            records[i] = exit_time_sample(params, p0_values[i], config);
        } catch (const std::exception& e) {
            records[i].p0 = p0_values[i];
            records[i].failed = true;
            records[i].message = e.what();
        }
    });
    return records;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    if (count > 0) out.back() = hi;
    return out;
}

BisectionResult bisect_singular_point(const ControlParams& params, double p_a, double p_b,
                                      std::size_t steps, const ExitScanConfig& config) {
    const ExitRecord ra = exit_time_sample(params, p_a, config);
    const ExitRecord rb = exit_time_sample(params, p_b, config);
    if (ra.failed || rb.failed) throw std::runtime_error("bisection endpoint failed to integrate");
    if (ra.m == rb.m) throw std::invalid_argument("bisection endpoints share the same m");

    BisectionResult out;
    out.lo = p_a;
    out.hi = p_b;
    auto exit_time = [&](const ExitRecord& r) {
        if (r.T) return *r.T;
        out.reached_horizon = true;
        return config.t_horizon;
    };
    out.max_T = std::max(exit_time(ra), exit_time(rb));
    for (std::size_t k = 0; k < steps; ++k) {
        const double mid = 0.5 * (out.lo + out.hi);
        if (mid == out.lo || mid == out.hi) break;
        ExitRecord r = exit_time_sample(params, mid, config);
        if (r.failed) throw std::runtime_error("bisection probe failed: " + r.message);
        out.max_T = std::max(out.max_T, exit_time(r));
        if (r.m == ra.m) {
            out.lo = mid;
        } else {
            out.hi = mid;
        }
        out.probes.push_back(std::move(r));
    }
    return out;
}

}  // namespace cavity
