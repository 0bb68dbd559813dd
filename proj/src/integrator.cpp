#include "cavity/integrator.hpp"

#include "cavity/format.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>

namespace cavity {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("integrator tolerances must be positive");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("t_end must be a finite positive time");
    }
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
    if (sample_interval < 0.0 || !std::isfinite(sample_interval)) {
        throw std::invalid_argument("sample_interval must be >= 0");
    }
}

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::boundary_left: return "boundary-left";
        case EventKind::boundary_right: return "boundary-right";
        case EventKind::node_crossing: return "node-crossing";
        case EventKind::custom_surface: return "custom-surface";
    }
    return "unknown";
}

std::string to_string(IntegrationStatus status) {
    switch (status) {
        case IntegrationStatus::completed: return "completed";
        case IntegrationStatus::terminated: return "terminated";
        case IntegrationStatus::step_underflow: return "step-underflow";
        case IntegrationStatus::non_finite: return "non-finite";
        case IntegrationStatus::step_limit: return "step-limit";
    }
    return "unknown";
}

std::string to_string(ExitSide side) {
    switch (side) {
        case ExitSide::none: return "none";
        case ExitSide::left: return "left";
        case ExitSide::right: return "right";
    }
    return "none";
}

EventSpec EventSpec::left_boundary(double x) {
    EventSpec e;
    e.kind = EventKind::boundary_left;
    e.location = x;
    e.direction = CrossingDirection::decreasing;
    return e;
}

EventSpec EventSpec::right_boundary(double x) {
    EventSpec e;
    e.kind = EventKind::boundary_right;
    e.location = x;
    e.direction = CrossingDirection::increasing;
    return e;
}

EventSpec EventSpec::node(double x) {
    EventSpec e;
    e.kind = EventKind::node_crossing;
    e.location = x;
    return e;
}

EventSpec EventSpec::custom(std::function<double(double, std::span<const double>)> g,
                            CrossingDirection dir, bool terminal) {
    EventSpec e;
    e.kind = EventKind::custom_surface;
    e.surface = std::move(g);
    e.direction = dir;
    e.custom_terminal = terminal;
    return e;
}

double EventSpec::evaluate(double t, std::span<const double> y) const {
    if (kind == EventKind::custom_surface) return surface(t, y);
    return y[component] - location;
}

namespace {

bool crosses(double g0, double g1, CrossingDirection dir) {
    if (g0 == 0.0) return false;
    const bool changed = (g0 < 0.0) ? g1 >= 0.0 : g1 <= 0.0;
    if (!changed) return false;
    switch (dir) {
        case CrossingDirection::any: return true;
        case CrossingDirection::increasing: return g0 < 0.0;
        case CrossingDirection::decreasing: return g0 > 0.0;
    }
    return false;
}

struct PendingEvent {
    double time;
    std::size_t index;
};

}  // namespace

Trajectory integrate(const RhsFunction& rhs, std::span<const double> y0,
                     const IntegratorConfig& config, std::span<const EventSpec> events) {
    config.validate();
    const std::size_t n = y0.size();
    if (n == 0) throw std::invalid_argument("integrate: empty initial state");
    for (const EventSpec& e : events) {
        if (e.kind == EventKind::custom_surface ? !e.surface : e.component >= n) {
            throw std::invalid_argument("integrate: malformed event specification");
        }
    }

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.emplace_back(y0.begin(), y0.end());
    for (double v : y0) {
        if (!std::isfinite(v)) {
            traj.status = IntegrationStatus::non_finite;
            traj.message = "non-finite initial state";
            return traj;
        }
    }

    Dop853 stepper(rhs, n, config.rel_tol, config.abs_tol, config.max_step);
    stepper.reset(0.0, y0);

    std::vector<double> g_prev(events.size());
    for (std::size_t k = 0; k < events.size(); ++k) g_prev[k] = events[k].evaluate(0.0, y0);

    const bool uniform = config.sample_interval > 0.0;
    std::uint64_t next_sample = 1;
    std::vector<double> buffer(n);
    std::vector<double> g_now(events.size());
    std::vector<PendingEvent> pending;

    auto emit_samples_until = [&](double t_stop, bool inclusive) {
        if (!uniform || !config.record_samples) return;
        for (;;) {
            const double ts = static_cast<double>(next_sample) * config.sample_interval;
            if (ts > config.t_end || ts > t_stop || (!inclusive && ts == t_stop)) break;
            stepper.interpolate(ts, buffer);
            traj.times.push_back(ts);
            traj.states.push_back(buffer);
            ++next_sample;
        }
    };

    auto finish = [&](double t, std::span<const double> y) {
        if (traj.times.back() < t) {
            traj.times.push_back(t);
            traj.states.emplace_back(y.begin(), y.end());
        }
        traj.accepted_steps = stepper.accepted_steps();
        traj.rejected_steps = stepper.rejected_steps();
        traj.rhs_evaluations = stepper.rhs_evaluations();
    };

    while (stepper.time() < config.t_end) {
        if (stepper.accepted_steps() >= config.max_steps) {
            traj.status = IntegrationStatus::step_limit;
            traj.message = "step limit reached at t = " + format_double(stepper.time());
            finish(stepper.time(), stepper.state());
            return traj;
        }
        const auto outcome = stepper.step(config.t_end);
        if (outcome != Dop853::StepOutcome::accepted) {
            traj.status = outcome == Dop853::StepOutcome::step_underflow
                              ? IntegrationStatus::step_underflow
                              : IntegrationStatus::non_finite;
            traj.message = to_string(traj.status) + " at t = " + format_double(stepper.time());
            if (outcome == Dop853::StepOutcome::non_finite) {
                finish(stepper.previous_time(), stepper.previous_state());
            } else {
                finish(stepper.time(), stepper.state());
            }
            return traj;
        }
        const double t0 = stepper.previous_time();
        const double t1 = stepper.time();

        pending.clear();
        for (std::size_t k = 0; k < events.size(); ++k) {
            g_now[k] = events[k].evaluate(t1, stepper.state());
            if (!crosses(g_prev[k], g_now[k], events[k].direction)) continue;
            const EventSpec& spec = events[k];
            auto g = [&](double t) {
                stepper.interpolate(t, buffer);
                return spec.evaluate(t, buffer);
            };
            double root = t1;
            const double g_start = spec.evaluate(t0, stepper.previous_state());
            if (g_now[k] != 0.0 && g_start != 0.0 && (g_start < 0.0) != (g_now[k] < 0.0)) {
                std::uintmax_t max_iter = 200;
                boost::math::tools::eps_tolerance<double> tol(50);
                const auto bracket = boost::math::tools::toms748_solve(g, t0, t1, g_start,
                                                                       g_now[k], tol, max_iter);
                const double ga = std::abs(g(bracket.first));
                const double gb = std::abs(g(bracket.second));
                root = ga <= gb ? bracket.first : bracket.second;
            }
            pending.push_back({root, k});
        }
        std::sort(pending.begin(), pending.end(),
                  [](const PendingEvent& a, const PendingEvent& b) { return a.time < b.time; });

        for (const PendingEvent& ev : pending) {
            stepper.interpolate(ev.time, buffer);
            const EventSpec& spec = events[ev.index];
            traj.events.push_back({ev.time, spec.kind, spec.location, ev.index, buffer});
            if (spec.terminal()) {
                emit_samples_until(ev.time, false);
                traj.status = IntegrationStatus::terminated;
                const std::vector<double> at_event = buffer;
                finish(ev.time, at_event);
                return traj;
            }
        }

        emit_samples_until(t1, true);
        if (!uniform && config.record_samples) {
            traj.times.push_back(t1);
            traj.states.emplace_back(stepper.state().begin(), stepper.state().end());
        }
        for (std::size_t k = 0; k < events.size(); ++k) {
            if (g_now[k] != 0.0) g_prev[k] = g_now[k];
        }
    }
    finish(stepper.time(), stepper.state());
    return traj;
}

ExitOutcome detect_exit(const Trajectory& trajectory, double left, double right) {
    for (const EventRecord& e : trajectory.events) {
        if (e.kind == EventKind::boundary_left) return {e.time, ExitSide::left};
        if (e.kind == EventKind::boundary_right) return {e.time, ExitSide::right};
    }
    for (std::size_t i = 1; i < trajectory.times.size(); ++i) {
        const double xa = trajectory.states[i - 1][0];
        const double xb = trajectory.states[i][0];
        const double ta = trajectory.times[i - 1];
        const double tb = trajectory.times[i];
        if (xb >= right && xa < right) {
            return {ta + (tb - ta) * (right - xa) / (xb - xa), ExitSide::right};
        }
        if (xb <= left && xa > left) {
            return {ta + (tb - ta) * (left - xa) / (xb - xa), ExitSide::left};
        }
    }
    return {};
}

int count_node_crossings(const Trajectory& trajectory, double node_x) {
    int from_events = 0;
    for (const EventRecord& e : trajectory.events) {
        if (e.kind == EventKind::node_crossing && std::abs(e.location - node_x) <= 1e-12) {
            ++from_events;
        }
    }
    if (from_events > 0) return from_events;
    int crossings = 0;
    double prev = 0.0;
    for (const auto& s : trajectory.states) {
        const double d = s[0] - node_x;
        if (d == 0.0) continue;
        if (prev != 0.0 && (d > 0.0) != (prev > 0.0)) ++crossings;
        prev = d;
    }
    return crossings;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const std::vector<std::string>& component_names) {
    out << "time";
    for (const auto& name : component_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
        out << format_double(trajectory.times[i]);
        for (double v : trajectory.states[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

}  // namespace cavity
