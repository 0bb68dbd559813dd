#include "cavity/analysis.hpp"

#include "cavity/digest.hpp"
#include "cavity/format.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cavity {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::domain_error("fit_line: at least 3 points are required");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::domain_error("fit_line: abscissae are all equal");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    return f;
}

double confidence_halfwidth(const LinearFit& fit) {
    if (fit.n < 3) return std::numeric_limits<double>::infinity();
    const boost::math::students_t dist(static_cast<double>(fit.n - 2));
    return boost::math::quantile(boost::math::complement(dist, 0.025)) * fit.slope_stderr;
}

// ---------------------------------------------------------------- box counting

std::vector<double> default_box_scales() {
    std::vector<double> s;
    const double ratio = std::pow(1024.0, 1.0 / 11.0);
    for (int k = 0; k < 12; ++k) s.push_back(0.125 / std::pow(ratio, k));
    s.back() = 1.0 / 8192.0;
    return s;
}

std::vector<std::pair<double, double>> normalize_curve(std::vector<std::pair<double, double>> curve,
                                                       bool log_y) {
    if (curve.size() < 2) throw std::domain_error("box counting needs at least 2 points");
    for (auto& [x, y] : curve) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw std::domain_error("curve has non-finite points");
        if (log_y) {
            if (!(y > 0.0)) throw std::domain_error("log ordinate needs positive values");
            y = std::log10(y);
        }
    }
    const auto [ymin, ymax] = std::minmax_element(curve.begin(), curve.end(), [](const auto& a, const auto& b) {
        return a.second < b.second;
    });
    const auto [xmin, xmax] = std::minmax_element(curve.begin(), curve.end(), [](const auto& a, const auto& b) {
        return a.first < b.first;
    });
    const double x0 = xmin->first;
    const double xr = xmax->first - x0;
    const double y0 = ymin->second;
    const double yr = ymax->second - y0;
    if (!(xr > 0.0)) throw std::domain_error("curve abscissae span zero width");
    for (auto& [x, y] : curve) {
        x = (x - x0) / xr;
        y = yr > 0.0 ? (y - y0) / yr : 0.0;
    }
    return curve;
}

std::size_t count_boxes(const std::vector<std::pair<double, double>>& pts, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("box scale must be positive");
    const auto cells = static_cast<long long>(std::ceil(1.0 / scale - 1e-9));
    auto cell = [&](double v) {
        return std::clamp(static_cast<long long>(std::floor(v / scale)), 0LL, cells - 1);
    };
    // per column, the contiguous run of rows crossed by each segment piece
    struct Run {
        long long col, lo, hi;
    };
    std::vector<Run> runs;
    runs.reserve(pts.size() * 2);
    auto add = [&](long long col, double ya, double yb) {
        runs.push_back({col, cell(std::min(ya, yb)), cell(std::max(ya, yb))});
    };
    if (pts.size() == 1) add(cell(pts[0].first), pts[0].second, pts[0].second);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        auto [xa, ya] = pts[i - 1];
        auto [xb, yb] = pts[i];
        if (xb < xa) {
            std::swap(xa, xb);
            std::swap(ya, yb);
        }
        const long long ca = cell(xa);
        const long long cb = cell(xb);
        if (ca == cb || xb == xa) {
            add(ca, ya, yb);
            continue;
        }
        const double slope = (yb - ya) / (xb - xa);
        for (long long c = ca; c <= cb; ++c) {
            const double left = c == ca ? xa : static_cast<double>(c) * scale;
            const double right = c == cb ? xb : static_cast<double>(c + 1) * scale;
            add(c, ya + slope * (left - xa), ya + slope * (right - xa));
        }
    }
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
        return a.col != b.col ? a.col < b.col : a.lo < b.lo;
    });
    std::size_t total = 0;
    std::size_t i = 0;
    while (i < runs.size()) {
        const long long col = runs[i].col;
        long long lo = runs[i].lo;
        long long hi = runs[i].hi;
        for (++i; i < runs.size() && runs[i].col == col; ++i) {
            if (runs[i].lo > hi + 1) {
                total += static_cast<std::size_t>(hi - lo + 1);
                lo = runs[i].lo;
                hi = runs[i].hi;
            } else {
                hi = std::max(hi, runs[i].hi);
            }
        }
        total += static_cast<std::size_t>(hi - lo + 1);
    }
    return total;
}

BoxCountResult box_counting_dimension(const std::vector<std::pair<double, double>>& curve,
                                      const BoxCountConfig& config) {
    const auto pts = normalize_curve(curve, config.log_y);
    BoxCountResult r;
    r.points = pts.size();
    r.log_y = config.log_y;
    r.scales = config.scales;
    std::sort(r.scales.begin(), r.scales.end(), std::greater<>());
    for (double s : r.scales) r.counts.push_back(count_boxes(pts, s));

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    if (config.fit_range) {
        lo = config.fit_range->first;
        hi = config.fit_range->second;
    } else {
        lo = config.min_scale_spacings / static_cast<double>(pts.size() - 1);
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < r.scales.size(); ++i) {
        const double s = r.scales[i];
        if (s < lo * (1 - 1e-12) || s > hi * (1 + 1e-12)) continue;
        lx.push_back(std::log(s));
        ly.push_back(std::log(static_cast<double>(r.counts[i])));
    }
    if (lx.size() < 4) {
        throw std::domain_error("box counting: fewer than 4 usable scales in the fit window (" +
                                std::to_string(lx.size()) + ")");
    }
    const LinearFit fit = fit_line(lx, ly);
    r.dimension = -fit.slope;
    r.ci_halfwidth = confidence_halfwidth(fit);
    r.r2 = fit.r2;
    r.fit_range = {std::exp(*std::min_element(lx.begin(), lx.end())),
                   std::exp(*std::max_element(lx.begin(), lx.end()))};
    return r;
}

ExitCurve exit_curve(const std::vector<ExitRecord>& records, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("exit_curve: cap must be positive");
    ExitCurve c;
    c.cap = cap;
    for (const ExitRecord& r : records) {
        if (r.failed) {
            ++c.excluded;
        } else if (!r.T) {
            ++c.capped;
            c.points.emplace_back(r.p0, cap);
        } else {
            c.points.emplace_back(r.p0, std::min(*r.T, cap));
        }
    }
    return c;
}

// ---------------------------------------------------------------- closed forms

double stochastic_layer_width(const ControlParams& params, double N) {
    if (params.delta == 0.0) {
        throw std::domain_error("stochastic layer width is undefined at delta = 0 (omega vanishes)");
    }
    if (!(N > 0.0)) throw std::domain_error("stochastic layer width needs N > 0");
    if (!(params.alpha > 0.0)) throw std::domain_error("stochastic layer width needs alpha > 0");
    const double Omega = std::sqrt(params.delta * params.delta + 4.0 * N);
    const double omega = std::sqrt(2.0 * params.alpha * std::pow(N, 1.5) * std::abs(params.delta)) / Omega;
    const double ratio = Omega / omega;
    return 8.0 * std::numbers::pi * ratio * ratio * ratio *
           std::exp(-std::numbers::pi * ratio / 2.0);
}

double predictability_horizon(double lambda, double dz_in, double dz) {
    if (!(dz_in > 0.0) || !(dz >= dz_in)) {
        throw std::domain_error("predictability horizon needs dz >= dz_in > 0");
    }
    if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
    return std::log(dz / dz_in) / lambda;
}

// ---------------------------------------------------------------- series

double oscillation_frequency(const std::vector<double>& tau, const std::vector<double>& z) {
    if (tau.size() != z.size() || z.size() < 3) {
        throw std::invalid_argument("oscillation_frequency: need matching series of 3+ samples");
    }
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    // hysteresis band keeps fast ripples from registering as extra crossings
    const double band = 0.1 * peak_to_peak(z);
    std::vector<double> crossings;
    bool armed = false;
    std::size_t last_cross = 0;
    for (std::size_t i = 1; i < z.size(); ++i) {
        if (z[i - 1] < mean && z[i] >= mean) last_cross = i;
        if (z[i] < mean - band) armed = true;
        if (armed && z[i] >= mean + band && last_cross > 0) {
            const std::size_t j = last_cross;
            const double f = (mean - z[j - 1]) / (z[j] - z[j - 1]);
            crossings.push_back(tau[j - 1] + f * (tau[j] - tau[j - 1]));
            armed = false;
        }
    }
    if (crossings.size() < 2) throw std::domain_error("oscillation_frequency: fewer than two periods");
    const double periods = static_cast<double>(crossings.size() - 1);
    return 2.0 * std::numbers::pi * periods / (crossings.back() - crossings.front());
}

double peak_to_peak(const std::vector<double>& z) {
    if (z.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(z.begin(), z.end());
    return *mx - *mn;
}

// ---------------------------------------------------------------- transport

TransportResult transport_exponent(const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& positions,
                                   double t_min, double t_max) {
    if (positions.size() < 100) {
        throw std::domain_error("transport exponent needs an ensemble of at least 100 trajectories");
    }
    for (const auto& traj : positions) {
        if (traj.size() != times.size()) {
            throw std::invalid_argument("transport exponent: trajectories must share the sampling grid");
        }
    }
    TransportResult r;
    r.times = times;
    r.msd.assign(times.size(), 0.0);
    for (const auto& traj : positions) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double d = traj[i] - traj[0];
            r.msd[i] += d * d;
        }
    }
    for (double& m : r.msd) m /= static_cast<double>(positions.size());

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_min || times[i] > t_max || !(times[i] > 0.0)) continue;
        if (!(r.msd[i] > 0.0)) {
            throw std::domain_error("transport exponent: non-positive second moment at tau = " +
                                    format_double(times[i]));
        }
        lx.push_back(std::log(times[i]));
        ly.push_back(std::log(r.msd[i]));
    }
    const LinearFit fit = fit_line(lx, ly);
    r.mu = fit.slope;
    r.stderr_mu = fit.slope_stderr;
    r.ci_halfwidth = confidence_halfwidth(fit);
    r.r2 = fit.r2;
    r.window = {std::exp(lx.front()), std::exp(lx.back())};
    return r;
}

// ---------------------------------------------------------------- recurrence

std::vector<double> recurrence_times(const std::vector<double>& times,
                                     const std::vector<std::vector<double>>& states, double radius,
                                     const RecurrenceMetric& metric) {
    if (!(radius > 0.0)) throw std::invalid_argument("recurrence radius must be positive");
    if (times.size() != states.size() || states.empty()) {
        throw std::invalid_argument("recurrence_times: need matching non-empty series");
    }
    const auto& ref = states.front();
    auto distance = [&](const std::vector<double>& s) {
        double d = 0.0;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            double diff = s[k] - ref[k];
            if (static_cast<int>(k) == metric.periodic_component) {
                diff = std::remainder(diff, 2.0 * std::numbers::pi);
            }
            const double scale = k < metric.scales.size() ? metric.scales[k] : 1.0;
            d = std::max(d, std::abs(diff) / scale);
        }
        return d;
    };
    std::vector<double> out;
    bool inside = true;
    double last_entry = times.front();
    for (std::size_t i = 1; i < states.size(); ++i) {
        const bool now = distance(states[i]) < radius;
        if (now && !inside) {
            out.push_back(times[i] - last_entry);
            last_entry = times[i];
        }
        inside = now;
    }
    return out;
}

namespace {

double survival_r2(const std::vector<double>& sorted, bool log_time) {
    const std::size_t n = sorted.size();
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n; ++i) {
        lx.push_back(log_time ? std::log(sorted[i]) : sorted[i]);
        ly.push_back(std::log(static_cast<double>(n - i) / static_cast<double>(n)));
    }
    try {
        return fit_line(lx, ly).r2;
    } catch (const std::domain_error&) {
        return 0.0;
    }
}

}  // namespace

RecurrenceFit recurrence_exponent(std::vector<double> return_times, std::optional<double> t_min) {
    RecurrenceFit fit;
    for (double t : return_times) {
        if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("return times must be positive");
    }
    std::sort(return_times.begin(), return_times.end());
    fit.samples = return_times.size();
    if (!return_times.empty() && return_times.back() - return_times.front() <= 1e-9 * return_times.back()) {
        fit.degenerate = true;
        fit.preferred = "none";
        return fit;
    }
    fit.t_min = t_min.value_or(return_times.empty() ? 0.0 : return_times.front());
    std::vector<double> tail;
    for (double t : return_times) {
        if (t >= fit.t_min) tail.push_back(t);
    }
    if (tail.size() < 50) {
        throw std::domain_error("recurrence fit: insufficient statistics (" + std::to_string(tail.size()) +
                                " returns, at least 50 required)");
    }
    const auto n = static_cast<double>(tail.size());
    double sum_log = 0.0;
    double sum_excess = 0.0;
    for (double t : tail) {
        sum_log += std::log(t / fit.t_min);
        sum_excess += t - fit.t_min;
    }
    fit.gamma = 1.0 + n / sum_log;
    fit.gamma_stderr = (fit.gamma - 1.0) / std::sqrt(n);
    fit.power_loglik = n * std::log(fit.gamma - 1.0) - n * std::log(fit.t_min) - fit.gamma * sum_log;
    fit.rate = n / sum_excess;
    fit.rate_stderr = fit.rate / std::sqrt(n);
    fit.exp_loglik = n * std::log(fit.rate) - n;
    fit.power_r2 = survival_r2(tail, true);
    fit.exp_r2 = survival_r2(tail, false);
    fit.preferred = fit.power_loglik > fit.exp_loglik ? "power-law" : "exponential";
    return fit;
}

// ---------------------------------------------------------------- reports

FitReport make_report(std::string estimator, double value, double uncertainty,
                      std::pair<double, double> window, double r2, std::string input_digest) {
    FitReport r{std::move(estimator), value, uncertainty, window, r2, std::move(input_digest), {}};
    if (r2 < 0.95) r.warnings.push_back("fit r2 = " + format_double(r2) + " is below 0.95");
    return r;
}

nlohmann::json to_json(const FitReport& report) {
    return {{"estimator", report.estimator},
            {"value", report.value},
            {"uncertainty", report.uncertainty},
            {"fit_window", {report.window.first, report.window.second}},
            {"r2", report.r2},
            {"input_digest", report.input_digest},
            {"warnings", report.warnings}};
}

std::string digest_values(const std::vector<double>& values) {
    std::string text;
    for (double v : values) {
        text += format_double(v);
        text += '\n';
    }
    return sha256_hex(text);
}

}  // namespace cavity
