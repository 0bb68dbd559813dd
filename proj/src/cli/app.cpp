#include "cavity/cli/app.hpp"

#include "cavity/analysis.hpp"
#include "cavity/cli/manifest.hpp"
#include "cavity/cli/params.hpp"
#include "cavity/cli/pool.hpp"
#include "cavity/experiments.hpp"
#include "cavity/format.hpp"
#include "cavity/lyapunov.hpp"
#include "cavity/model.hpp"
#include "cavity/version.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace cavity::cli {

namespace {

namespace fs = std::filesystem;

/// Parameter combinations that make no sense for the requested run.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    const ParameterSet& params;
    fs::path out;
    std::size_t jobs = 1;
    std::ostream& console;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
};

struct Command {
    std::string name;
    std::string description;
    std::string default_out;
    std::vector<ParamSpec> schema;
    std::function<void(Context&)> run;
};

// ------------------------------------------------------------------ schema

std::vector<ParamSpec> physics(const std::string& delta, const std::string& p0, const std::string& zin) {
    return {{"alpha", ParamType::real, "1e-3", "recoil frequency alpha"},
            {"delta", ParamType::real, delta, "atom-field detuning delta [Omega_0]"},
            {"nbar", ParamType::integer, "10", "photon number of the initial Fock state"},
            {"x0", ParamType::real, "0", "initial position [1/k_f]"},
            {"p0", ParamType::real, p0, "initial momentum [hbar k_f]"},
            {"zin", ParamType::real, zin, "initial population inversion in [-1, 1]"}};
}

std::vector<ParamSpec> tolerances() {
    return {{"rtol", ParamType::real, "1e-10", "integrator relative tolerance"},
            {"atol", ParamType::real, "1e-12", "integrator absolute tolerance"}};
}

std::vector<ParamSpec> join(std::initializer_list<std::vector<ParamSpec>> parts) {
    std::vector<ParamSpec> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

ControlParams control(const ParameterSet& p) {
    const long long nbar = p.integer("nbar");
    if (nbar < 0 || nbar > 1'000'000'000) throw UsageError("nbar must be a non-negative photon number");
    ControlParams c{p.real("alpha"), p.real("delta"), static_cast<int>(nbar)};
    c.validate();
    return c;
}

InitialPreparation preparation(const ParameterSet& p) {
    const double zin = p.real("zin");
    if (zin < -1.0 || zin > 1.0) throw UsageError("zin must lie in [-1, 1], got " + format_double(zin));
    return {p.real("x0"), p.real("p0"), zin};
}

IntegratorConfig integrator(const ParameterSet& p) {
    IntegratorConfig c;
    c.rel_tol = p.real("rtol");
    c.abs_tol = p.real("atol");
    return c;
}

/// "lo:hi:count" into evenly spaced values.
std::vector<double> parse_range(const std::string& key, const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    try {
        if (parts.size() == 1) return {std::stod(parts[0])};
        if (parts.size() == 3) {
            const long long n = std::stoll(parts[2]);
            if (n >= 1) return linspace(std::stod(parts[0]), std::stod(parts[1]), static_cast<std::size_t>(n));
        }
    } catch (const std::exception&) {
    }
    throw UsageError(key + " must be a number or lo:hi:count, got '" + text + "'");
}

Metadata base_metadata(const std::string& command, const ParameterSet& p) {
    Metadata md{{"command", command}, {"version", version_string()}};
    const auto values = p.values_json();
    for (const auto& [key, value] : values.items()) {
        md.emplace_back(key, value.is_number_float() ? format_double(value.get<double>())
                             : value.is_string()     ? value.get<std::string>()
                                                     : value.dump());
    }
    return md;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file '" + path.string() + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const fs::path& path, Context& ctx) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    out.close();
    ctx.outputs.push_back(path);
}

// ------------------------------------------------------------------ simulate

void run_simulate(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const InitialPreparation prep = preparation(p);
    const ModelKind kind = parse_model_kind(p.text("model"));
    const double tau = p.real("tau");
    const double dt = p.real("dt");
    if (!(tau > 0.0)) throw UsageError("tau must be positive");
    if (dt < 0.0) throw UsageError("dt must be >= 0");

    std::optional<Model> model;
    std::vector<double> y0;
    switch (kind) {
        case ModelKind::semiclassical: {
            if (prep.z_in != 1.0 && prep.z_in != -1.0) {
                throw UsageError("the semiclassical model needs zin = +1 or -1");
            }
            const SemiclassicalState s = reduce_to_semiclassical(prep, params);
            model = Model::semiclassical(params, s.N);
            y0 = model->pack(s);
            break;
        }
        case ModelKind::fock_pair:
            model = Model::fock_pair(params);
            y0 = model->pack(prepare_initial(prep, params));
            break;
        case ModelKind::ladder: {
            long long nmax = p.integer("nmax");
            if (nmax == 0) nmax = params.nbar + 10;
            if (nmax < params.nbar) throw UsageError("nmax must be at least nbar");
            model = Model::ladder(params, static_cast<int>(nmax));
            y0 = model->pack(embed_in_ladder(prepare_initial(prep, params), params, static_cast<int>(nmax)));
            break;
        }
    }
    IntegratorConfig cfg = integrator(p);
    cfg.t_end = tau;
    cfg.sample_interval = dt;
    const Model& m = *model;
    const Trajectory traj =
        integrate([&m](double, std::span<const double> y, std::span<double> d) { m.rhs(y, d); }, y0, cfg);

    auto out = open_output(ctx.out);
    Metadata md = base_metadata("simulate", p);
    md.emplace_back("integration_status", to_string(traj.status));
    if (!traj.message.empty()) md.emplace_back("integration_message", traj.message);
    std::vector<Column> cols{{"tau", "normalized time [1/Omega_0]"}};
    for (const auto& name : m.component_names()) {
        const std::string unit = name == "x"   ? "position [1/k_f]"
                                 : name == "p" ? "momentum [hbar k_f]"
                                               : "Bloch component [dimensionless]";
        cols.push_back({name, unit});
    }
    cols.push_back({"energy", "energy [hbar Omega_0]"});
    cols.push_back({"inversion", "population inversion [dimensionless]"});
    write_csv_header(out, md, cols);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out << format_double(traj.times[i]);
        for (double v : traj.states[i]) out << ',' << format_double(v);
        out << ',' << format_double(m.energy(traj.states[i])) << ','
            << format_double(m.inversion(traj.states[i])) << '\n';
    }
    finish_output(out, ctx.out, ctx);
    if (!traj.ok()) throw std::runtime_error("integration stopped: " + traj.message);
}

// ------------------------------------------------------------------ lyapunov

void run_lyapunov(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const InitialPreparation prep = preparation(p);
    const ModelKind kind = parse_model_kind(p.text("model"));
    LyapunovConfig cfg;
    cfg.tau_total = p.real("tau-total");
    cfg.renorm_interval = p.real("renorm");
    cfg.tail_fraction = p.real("tail");
    cfg.rel_tol = p.real("rtol");
    cfg.abs_tol = p.real("atol");
    cfg.series_stride = static_cast<std::size_t>(std::max(1LL, p.integer("stride")));
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (p.boolean("layer-width") && params.delta == 0.0) {
        throw UsageError("the stochastic layer width is undefined at delta = 0");
    }

    std::optional<Model> model;
    std::vector<double> y0;
    double excitations = 0.0;
    if (kind == ModelKind::semiclassical) {
        if (prep.z_in != 1.0 && prep.z_in != -1.0) {
            throw UsageError("the semiclassical model needs zin = +1 or -1");
        }
        const SemiclassicalState s = reduce_to_semiclassical(prep, params);
        excitations = s.N;
        model = Model::semiclassical(params, s.N);
        y0 = model->pack(s);
    } else if (kind == ModelKind::fock_pair) {
        model = Model::fock_pair(params);
        y0 = model->pack(prepare_initial(prep, params));
    } else {
        throw UsageError("lyapunov supports the semiclassical and fock-pair models");
    }
    const TangentSystem sys = TangentSystem::from_model(*model);
    const LyapunovResult r =
        p.boolean("spectrum") ? lyapunov_spectrum(sys, y0, cfg) : max_lyapunov(sys, y0, cfg);

    auto out = open_output(ctx.out);
    write_convergence_csv(out, r, base_metadata("lyapunov", p));
    finish_output(out, ctx.out, ctx);

    nlohmann::ordered_json summary;
    summary["lambda_max"] = r.lambda_max;
    summary["uncertainty"] = r.uncertainty;
    summary["converged"] = r.converged;
    summary["ok"] = r.ok;
    if (!r.ok) summary["failure"] = r.failure;
    summary["spectrum"] = r.spectrum;
    summary["spectrum_uncertainty"] = r.spectrum_uncertainty;
    double sum = 0.0;
    for (double l : r.spectrum) sum += l;
    summary["spectrum_sum"] = sum;
    summary["tangent_convention"] = r.tangent_convention;
    summary["tau_total"] = r.tau_total;
    summary["renorm_interval"] = r.renorm_interval;
    const double horizon = predictability_horizon(r.lambda_max, p.real("dz-in"), p.real("dz"));
    summary["predictability_horizon"] = std::isfinite(horizon) ? nlohmann::ordered_json(horizon)
                                                               : nlohmann::ordered_json("infinite");
    if (p.boolean("layer-width")) {
        const double N = excitations > 0.0 ? excitations : params.nbar + (prep.z_in >= 0.0 ? 1.0 : 0.0);
        summary["stochastic_layer_width"] = stochastic_layer_width(params, N);
        summary["stochastic_layer_N"] = N;
    }
    fs::path json_path = ctx.out;
    json_path.replace_extension(".json");
    auto js = open_output(json_path);
    js << summary.dump(2) << '\n';
    finish_output(js, json_path, ctx);
    ctx.console << "lambda_max = " << format_double(r.lambda_max) << " +- "
                << format_double(r.uncertainty) << '\n';
}

// ------------------------------------------------------------------ map

void run_map(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const InitialPreparation prep = preparation(p);
    SweepAxis a1, a2;
    try {
        a1 = parse_sweep_axis(p.text("axis1"));
        a2 = parse_sweep_axis(p.text("axis2"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a1.parameter == a2.parameter) throw UsageError("axis1 and axis2 sweep the same parameter");
    LyapunovConfig cfg;
    cfg.tau_total = p.real("tau-total");
    cfg.renorm_interval = p.real("renorm");
    cfg.rel_tol = p.real("rtol");
    cfg.abs_tol = p.real("atol");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    auto out = open_output(ctx.out);
    SweepGrid grid = lambda_map(params, prep, cfg, a1, a2, thread_pool_for(ctx.jobs));
    grid.metadata.insert(grid.metadata.begin(), {"version", version_string()});
    grid.metadata.insert(grid.metadata.begin(), {"command", "map"});
    write_lambda_map_csv(out, grid);
    finish_output(out, ctx.out, ctx);
    ctx.console << "cells: " << grid.values.size() << ", failed: " << grid.failed_count() << '\n';
}

// ------------------------------------------------------------------ scan-exit

void run_scan_exit(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const auto momenta = parse_range("p0", p.text("p0"));
    ExitScanConfig cfg;
    cfg.x0 = p.real("x0");
    cfg.z_in = p.real("zin");
    if (cfg.z_in < -1.0 || cfg.z_in > 1.0) throw UsageError("zin must lie in [-1, 1]");
    cfg.t_horizon = p.real("horizon");
    if (!(cfg.t_horizon > 0.0)) throw UsageError("horizon must be positive");
    cfg.geometry.left = p.real("left");
    cfg.geometry.right = p.real("right");
    cfg.geometry.node = p.real("node");
    cfg.geometry.separatrix_momentum = p.real("sep-p");
    cfg.geometry.separatrix_distance = p.real("sep-x");
    try {
        cfg.geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    cfg.integrator = integrator(p);
    auto out = open_output(ctx.out);
    const auto records = exit_time_scan(params, momenta, cfg, thread_pool_for(ctx.jobs));
    Metadata md = base_metadata("scan-exit", p);
    for (auto& kv : describe(cfg.geometry)) md.push_back(kv);
    md.emplace_back("t_horizon", format_double(cfg.t_horizon));
    std::size_t trapped = 0, failed = 0;
    for (const auto& r : records) {
        trapped += r.trapped() ? 1 : 0;
        failed += r.failed ? 1 : 0;
    }
    md.emplace_back("trapped_samples", std::to_string(trapped));
    md.emplace_back("failed_samples", std::to_string(failed));
    write_exit_scan_csv(out, records, md);
    finish_output(out, ctx.out, ctx);
    ctx.console << "samples: " << records.size() << ", trapped: " << trapped << ", failed: " << failed
                << '\n';
}

// ------------------------------------------------------------------ scan-inversion

void run_scan_inversion(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const auto grid = parse_range("zin", p.text("zin"));
    for (double z : grid) {
        if (z < -1.0 || z > 1.0) throw UsageError("zin grid must lie in [-1, 1]");
    }
    const double tau = p.real("tau");
    if (!(tau > 0.0)) throw UsageError("tau must be positive");
    const double dz = p.real("dz");
    if (!(dz > 0.0 && dz < 1.0)) throw UsageError("dz must lie in (0, 1)");
    const long long window = p.integer("window");
    if (window < 1) throw UsageError("window must be >= 1");
    auto out = open_output(ctx.out);
    const ZScan scan = zout_zin_scan(params, p.real("x0"), p.real("p0"), tau, grid, dz, integrator(p),
                                     thread_pool_for(ctx.jobs));
    const ZScanSensitivity sens = zscan_sensitivity(scan, static_cast<std::size_t>(window));
    Metadata md = base_metadata("scan-inversion", p);
    md.emplace_back("max_spread", format_double(sens.max_spread));
    md.emplace_back("fraction_spread_ge_1.9", format_double(sens.fraction_spread_at_least(1.9)));
    md.emplace_back("max_linear_residual", format_double(sens.max_linear_residual));
    md.emplace_back("total_variation", format_double(sens.total_variation));
    write_zscan_csv(out, scan, md);
    finish_output(out, ctx.out, ctx);
}

// ------------------------------------------------------------------ doppler

void run_doppler(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const InitialPreparation prep = preparation(p);
    const double tau = p.real("tau");
    const double dt = p.real("dt");
    if (!(tau > 0.0) || !(dt > 0.0)) throw UsageError("tau and dt must be positive");
    if (prep.p0 == 0.0) throw UsageError("p0 must be nonzero");
    auto out = open_output(ctx.out);
    const InversionSeries series = doppler_rabi_run(params, prep.p0, prep.z_in, tau, dt, integrator(p));
    Metadata md = base_metadata("doppler", p);
    md.emplace_back("closed_form_frequency", format_double(doppler_rabi_frequency(params, prep.p0)));
    try {
        md.emplace_back("measured_frequency", format_double(oscillation_frequency(series.tau, series.z)));
    } catch (const std::domain_error&) {
        md.emplace_back("measured_frequency", "unresolved");
    }
    md.emplace_back("peak_to_peak", format_double(peak_to_peak(series.z)));
    write_inversion_csv(out, series, md);
    finish_output(out, ctx.out, ctx);
    if (series.raman_nath_violated) {
        ctx.console << "warning: momentum drifted by " << format_double(series.max_momentum_deviation)
                    << " of p0; the constant-momentum picture is approximate\n";
    }
}

// ------------------------------------------------------------------ analyze-fractal

std::vector<ExitRecord> read_exit_csv(const fs::path& path, Metadata& metadata) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read input file '" + path.string() + "'");
    std::string line;
    std::vector<std::string> header;
    std::vector<ExitRecord> records;
    std::size_t lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(": ");
            if (colon != std::string::npos && line.rfind("# column ", 0) != 0) {
                metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
            }
            continue;
        }
        if (header.empty()) {
            header = split(line);
            for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
            for (const char* need : {"p0", "T", "trapped"}) {
                if (!col.count(need)) {
                    throw UsageError(path.string() + ": exit-scan CSV lacks column '" + need + "'");
                }
            }
            continue;
        }
        const auto f = split(line);
        if (f.size() != header.size()) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        ExitRecord r;
        try {
            r.p0 = std::stod(f[col["p0"]]);
            if (!f[col["T"]].empty()) r.T = std::stod(f[col["T"]]);
        } catch (const std::exception&) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (col.count("kind") && f[col["kind"]] == "failed") r.failed = true;
        records.push_back(r);
    }
    if (header.empty()) throw UsageError(path.string() + ": no CSV header found");
    return records;
}

void run_analyze_fractal(Context& ctx) {
    const auto& p = ctx.params;
    const std::string input = p.text("input");
    if (input.empty()) throw UsageError("analyze-fractal needs --input <exit-scan CSV>");
    Metadata file_md;
    const auto records = read_exit_csv(input, file_md);
    ctx.inputs.emplace_back(input);
    double cap = p.real("cap");
    if (cap == 0.0) {
        cap = 1e4;
        for (const auto& [k, v] : file_md) {
            if (k == "t_horizon") cap = std::stod(v);
        }
    }
    BoxCountConfig cfg;
    cfg.log_y = p.boolean("log-y");
    cfg.min_scale_spacings = p.real("min-spacings");
    const double fit_min = p.real("fit-min");
    const double fit_max = p.real("fit-max");
    if (fit_min > 0.0 || fit_max > 0.0) {
        cfg.fit_range = std::make_pair(fit_min > 0.0 ? fit_min : 0.0,
                                       fit_max > 0.0 ? fit_max : std::numeric_limits<double>::infinity());
    }
    const ExitCurve curve = exit_curve(records, cap);
    auto out = open_output(ctx.out);
    const BoxCountResult r = box_counting_dimension(curve.points, cfg);
    std::vector<double> flat;
    for (const auto& [x, y] : curve.points) {
        flat.push_back(x);
        flat.push_back(y);
    }
    const FitReport report = make_report("box-counting dimension", r.dimension, r.ci_halfwidth,
                                         r.fit_range, r.r2, digest_values(flat));
    nlohmann::ordered_json j;
    j["report"] = to_json(report);
    j["scales"] = r.scales;
    j["counts"] = r.counts;
    j["points"] = r.points;
    j["ordinate"] = r.log_y ? "log10 T" : "T";
    j["trapped_policy"] = "T capped at " + format_double(cap) + " before normalization";
    j["capped_samples"] = curve.capped;
    j["excluded_failed_samples"] = curve.excluded;
    j["reference_dimension_semiclassical"] = 1.84;
    out << j.dump(2) << '\n';
    finish_output(out, ctx.out, ctx);
    ctx.console << "dimension = " << format_double(r.dimension) << " +- " << format_double(r.ci_halfwidth)
                << '\n';
}

// ------------------------------------------------------------------ analyze-diffusion

void run_analyze_diffusion(Context& ctx) {
    const auto& p = ctx.params;
    const ControlParams params = control(p);
    const InitialPreparation prep = preparation(p);
    const ModelKind kind = parse_model_kind(p.text("model"));
    const long long count = p.integer("ensemble");
    if (count < 100) throw UsageError("ensemble must hold at least 100 trajectories");
    const double tau = p.real("tau");
    const double dt = p.real("dt");
    if (!(tau > 0.0) || !(dt > 0.0)) throw UsageError("tau and dt must be positive");
    const double spread = p.real("x0-spread");

    std::optional<Model> model;
    std::function<std::vector<double>(double)> initial;
    if (kind == ModelKind::semiclassical) {
        if (prep.z_in != 1.0 && prep.z_in != -1.0) {
            throw UsageError("the semiclassical model needs zin = +1 or -1");
        }
        const SemiclassicalState s0 = reduce_to_semiclassical(prep, params);
        model = Model::semiclassical(params, s0.N);
        initial = [&, s0](double x0) {
            SemiclassicalState s = s0;
            s.x = x0;
            return model->pack(s);
        };
    } else if (kind == ModelKind::fock_pair) {
        model = Model::fock_pair(params);
        initial = [&](double x0) {
            return model->pack(prepare_initial({x0, prep.p0, prep.z_in}, params));
        };
    } else {
        throw UsageError("analyze-diffusion supports the semiclassical and fock-pair models");
    }
    const Model& m = *model;
    IntegratorConfig cfg = integrator(p);
    cfg.t_end = tau;
    cfg.sample_interval = dt;

    const auto n = static_cast<std::size_t>(count);
    std::vector<std::vector<double>> positions(n);
    std::vector<double> times;
    std::vector<std::string> failures(n);
    thread_pool_for(ctx.jobs)(n, [&](std::size_t k) {
        const double x0 = prep.x0 + spread * (static_cast<double>(k) / static_cast<double>(n) - 0.5);
        const Trajectory t =
            integrate([&m](double, std::span<const double> y, std::span<double> d) { m.rhs(y, d); },
                      initial(x0), cfg);
        if (!t.ok()) failures[k] = t.message;
        for (const auto& s : t.states) positions[k].push_back(s[0]);
    });
    for (const auto& f : failures) {
        if (!f.empty()) throw std::runtime_error("ensemble member failed: " + f);
    }
    times = linspace(0.0, std::floor(tau / dt + 1e-9) * dt, positions.front().size());

    const double t_min = p.real("fit-min");
    const double t_max = p.real("fit-max") > 0.0 ? p.real("fit-max") : tau;
    auto out = open_output(ctx.out);
    const TransportResult tr = transport_exponent(times, positions, t_min, t_max);
    nlohmann::ordered_json j;
    j["transport"] = to_json(make_report("transport exponent mu", tr.mu, tr.ci_halfwidth, tr.window, tr.r2,
                                         digest_values(tr.msd)));
    j["msd_times"] = tr.times;
    j["msd"] = tr.msd;
    j["ensemble"] = count;

    const double rec_tau = p.real("recurrence-tau");
    if (rec_tau > 0.0) {
        IntegratorConfig rc = cfg;
        rc.t_end = rec_tau;
        rc.sample_interval = p.real("recurrence-dt");
        const Trajectory t =
            integrate([&m](double, std::span<const double> y, std::span<double> d) { m.rhs(y, d); },
                      initial(prep.x0), rc);
        RecurrenceMetric metric;
        metric.scales.assign(m.dimension(), 1.0);
        metric.scales[0] = std::numbers::pi;
        metric.scales[1] = std::max(1.0, std::abs(prep.p0));
        const auto returns = recurrence_times(t.times, t.states, p.real("radius"), metric);
        nlohmann::ordered_json rj;
        rj["returns"] = returns.size();
        try {
            const RecurrenceFit f = recurrence_exponent(returns);
            rj["degenerate"] = f.degenerate;
            if (!f.degenerate) {
                rj["power_law"] = to_json(make_report("recurrence density exponent gamma", f.gamma,
                                                      f.gamma_stderr, {f.t_min, 0.0}, f.power_r2,
                                                      digest_values(returns)));
                rj["exponential"] = to_json(make_report("recurrence rate h", f.rate, f.rate_stderr,
                                                        {f.t_min, 0.0}, f.exp_r2, digest_values(returns)));
                rj["power_loglik"] = f.power_loglik;
                rj["exp_loglik"] = f.exp_loglik;
            }
            rj["preferred"] = f.preferred;
        } catch (const std::domain_error& e) {
            rj["error"] = e.what();
        }
        j["recurrence"] = rj;
    }
    out << j.dump(2) << '\n';
    finish_output(out, ctx.out, ctx);
    ctx.console << "mu = " << format_double(tr.mu) << " +- " << format_double(tr.ci_halfwidth) << '\n';
}

// ------------------------------------------------------------------ registry

std::vector<Command> commands() {
    const auto halfpi = format_double(std::numbers::pi / 2);
    std::vector<Command> cmds;
    cmds.push_back({"simulate", "integrate one trajectory and write it as CSV", "trajectory.csv",
                    join({physics("0", "50", "0"), tolerances(),
                          {{"model", ParamType::text, "fock-pair", "semiclassical, fock-pair or ladder"},
                           {"nmax", ParamType::integer, "0", "ladder truncation (0 = nbar + 10)"},
                           {"tau", ParamType::real, "100", "integration time [1/Omega_0]"},
                           {"dt", ParamType::real, "0.1", "sample interval (0 = every step)"}}}),
                    run_simulate});
    cmds.push_back({"lyapunov", "maximal Lyapunov exponent or full spectrum", "lyapunov.csv",
                    join({physics("0.4", "50", "0"), tolerances(),
                          {{"model", ParamType::text, "fock-pair", "semiclassical or fock-pair"},
                           {"tau-total", ParamType::real, "1e5", "total integration time"},
                           {"renorm", ParamType::real, "1", "renormalization interval"},
                           {"tail", ParamType::real, "0.2", "final fraction used for the uncertainty"},
                           {"stride", ParamType::integer, "1", "keep every k-th convergence point"},
                           {"spectrum", ParamType::boolean, "false", "compute all exponents"},
                           {"dz-in", ParamType::real, "1e-4", "input uncertainty for the horizon"},
                           {"dz", ParamType::real, "2", "output tolerance for the horizon"},
                           {"layer-width", ParamType::boolean, "false",
                            "also report the stochastic layer width (needs delta != 0)"}}}),
                    run_lyapunov});
    cmds.push_back({"map", "Lyapunov map over two control parameters", "lambda_map.csv",
                    join({physics("0", "50", "0"), tolerances(),
                          {{"axis1", ParamType::text, "delta:-2:2:81", "first axis name:min:max:count"},
                           {"axis2", ParamType::text, "log10alpha:-4:-1:61", "second axis name:min:max:count"},
                           {"tau-total", ParamType::real, "1e4", "integration time per cell"},
                           {"renorm", ParamType::real, "1", "renormalization interval"}}}),
                    run_map});
    cmds.push_back({"scan-exit", "exit times of atoms injected at x0 over a momentum range", "exit_scan.csv",
                    join({{{"alpha", ParamType::real, "1e-3", "recoil frequency alpha"},
                           {"delta", ParamType::real, "0.4", "atom-field detuning delta [Omega_0]"},
                           {"nbar", ParamType::integer, "10", "photon number of the initial Fock state"},
                           {"x0", ParamType::real, "0", "injection point [1/k_f]"},
                           {"p0", ParamType::text, "64.1:64.6:2000", "momenta lo:hi:count [hbar k_f]"},
                           {"zin", ParamType::real, "0", "initial population inversion"},
                           {"horizon", ParamType::real, "1e4", "trapping horizon [1/Omega_0]"},
                           {"left", ParamType::real, format_double(-std::numbers::pi / 2), "left detector x"},
                           {"right", ParamType::real, format_double(3 * std::numbers::pi / 2),
                            "right detector x"},
                           {"node", ParamType::real, halfpi, "central node x for crossing counts"},
                           {"sep-p", ParamType::real, "1e-2", "separatrix-proximal |p| threshold"},
                           {"sep-x", ParamType::real, "1e-2", "separatrix-proximal anti-node distance"}},
                          tolerances()}),
                    run_scan_exit});
    cmds.push_back({"scan-inversion", "output inversion versus input inversion", "zscan.csv",
                    join({{{"alpha", ParamType::real, "1e-3", "recoil frequency alpha"},
                           {"delta", ParamType::real, "0.4", "atom-field detuning delta [Omega_0]"},
                           {"nbar", ParamType::integer, "10", "photon number of the initial Fock state"},
                           {"x0", ParamType::real, "0", "initial position [1/k_f]"},
                           {"p0", ParamType::real, "50", "initial momentum [hbar k_f]"},
                           {"zin", ParamType::text, "-1:1:201", "input inversion grid lo:hi:count"},
                           {"tau", ParamType::real, "200", "detection time [1/Omega_0]"},
                           {"dz", ParamType::real, "1e-4", "input perturbation"},
                           {"window", ParamType::integer, "9", "grid points per spread window"}},
                          tolerances()}),
                    run_scan_inversion});
    cmds.push_back({"doppler", "inversion under Doppler-Rabi conditions", "doppler.csv",
                    join({physics("32", "32000", "-1"), tolerances(),
                          {{"tau", ParamType::real, "100", "integration time [1/Omega_0]"},
                           {"dt", ParamType::real, "0.01", "sample interval"}}}),
                    run_doppler});
    cmds.push_back({"analyze-fractal", "box-counting dimension of an exit-time scan", "fractal.json",
                    {{"input", ParamType::text, "", "exit-scan CSV written by scan-exit"},
                     {"cap", ParamType::real, "0", "T assigned to trapped samples (0 = scan horizon)"},
                     {"log-y", ParamType::boolean, "true", "count boxes on log10 T"},
                     {"min-spacings", ParamType::real, "2", "finest fitted scale in sample spacings"},
                     {"fit-min", ParamType::real, "0", "smallest fitted box size (0 = automatic)"},
                     {"fit-max", ParamType::real, "0", "largest fitted box size (0 = all)"}},
                    run_analyze_fractal});
    cmds.push_back({"analyze-diffusion", "transport and recurrence statistics of an ensemble",
                    "diffusion.json",
                    join({physics("0.4", "50", "1"), tolerances(),
                          {{"model", ParamType::text, "semiclassical", "semiclassical or fock-pair"},
                           {"ensemble", ParamType::integer, "200", "number of trajectories"},
                           {"x0-spread", ParamType::real, format_double(2 * std::numbers::pi),
                            "initial positions spread evenly over this width around x0"},
                           {"tau", ParamType::real, "1000", "integration time"},
                           {"dt", ParamType::real, "1", "sample interval"},
                           {"fit-min", ParamType::real, "10", "start of the fit window"},
                           {"fit-max", ParamType::real, "0", "end of the fit window (0 = tau)"},
                           {"recurrence-tau", ParamType::real, "0", "length of the recurrence run (0 = skip)"},
                           {"recurrence-dt", ParamType::real, "0.1", "recurrence sampling interval"},
                           {"radius", ParamType::real, "0.1", "recurrence neighbourhood radius"}}}),
                    run_analyze_diffusion});
    return cmds;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& key = {}, std::size_t line = 0) {
    nlohmann::ordered_json e;
    e["kind"] = kind;
    e["message"] = message;
    if (!key.empty()) e["key"] = key;
    if (line > 0) e["line"] = line;
    err << nlohmann::ordered_json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto cmds = commands();
    CLI::App app{"Semiclassical and semiquantum dynamics of a two-level atom in a standing-wave cavity",
                 "cavity"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    struct Bound {
        const Command* command;
        CLI::App* sub;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
        std::string config;
        std::string out;
        std::string manifest;
        std::size_t jobs = default_jobs();
    };
    std::vector<Bound> bound(cmds.size());
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        Bound& b = bound[i];
        b.command = &cmds[i];
        b.sub = app.add_subcommand(cmds[i].name, cmds[i].description);
        for (const ParamSpec& s : cmds[i].schema) {
            b.options[s.key] = b.sub->add_option("--" + s.key, b.values[s.key],
                                                 s.help + " [" + to_string(s.type) + ", default: " +
                                                     (s.default_value.empty() ? "none" : s.default_value) + "]");
        }
        b.out = cmds[i].default_out;
        b.sub->add_option("--config", b.config,
                          "key = value file or a run manifest; flags override its values");
        b.sub->add_option("--out", b.out, "output path")->capture_default_str();
        b.sub->add_option("--manifest", b.manifest, "manifest path (default: <out>.manifest.json)");
        b.sub->add_option("--jobs", b.jobs, "worker threads; output does not depend on it")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForVersion&) {
        out << version_string() << '\n';
        return ok;
    } catch (const CLI::Success& e) {
        // help requests
        app.exit(e, out, err);
        return ok;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return usage_error;
    }

    const Bound* chosen = nullptr;
    for (const Bound& b : bound) {
        if (b.sub->parsed()) chosen = &b;
    }
    if (chosen == nullptr) {
        report_error(err, "usage", "no subcommand given");
        return usage_error;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        ParameterSet params(chosen->command->schema);
        std::vector<fs::path> inputs;
        if (!chosen->config.empty()) {
            params.load_file(chosen->config, chosen->command->name);
            inputs.emplace_back(chosen->config);
        }
        for (const auto& [key, opt] : chosen->options) {
            if (opt->count() > 0) params.set_flag(key, chosen->values.at(key));
        }
        RunManifest manifest = make_manifest(chosen->command->name, args, params);
        Context ctx{params, chosen->out, chosen->jobs, out, {}, {}};
        chosen->command->run(ctx);
        inputs.insert(inputs.end(), ctx.inputs.begin(), ctx.inputs.end());
        record_inputs(manifest, inputs);
        record_outputs(manifest, ctx.outputs);
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const fs::path manifest_path =
            chosen->manifest.empty() ? fs::path(chosen->out + ".manifest.json") : fs::path(chosen->manifest);
        write_manifest(manifest_path, manifest);
        return ok;
    } catch (const ConfigError& e) {
        report_error(err, "config", e.what(), e.key(), e.line());
        return usage_error;
    } catch (const UsageError& e) {
        report_error(err, "usage", e.what());
        return usage_error;
    } catch (const std::invalid_argument& e) {
        report_error(err, "usage", e.what());
        return usage_error;
    } catch (const IoError& e) {
        report_error(err, "io", e.what());
        return runtime_failure;
    } catch (const std::exception& e) {
        report_error(err, "runtime", e.what());
        return runtime_failure;
    }
}

}  // namespace cavity::cli
