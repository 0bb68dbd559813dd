// Adaptive Dormand-Prince 8(5,3) integration with 7th-order dense output,
// event location on the dense interpolant, and uniform trajectory sampling.

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cavity {

using RhsFunction =
    std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double t_end = 1.0;
    /// > 0: uniform samples at multiples of this interval; 0: every accepted step.
    double sample_interval = 0.0;
    /// When false only the initial and the final state are stored.
    bool record_samples = true;
    std::size_t max_steps = 100'000'000;

    void validate() const;
};

enum class EventKind { boundary_left, boundary_right, node_crossing, custom_surface };
enum class CrossingDirection { any, increasing, decreasing };

std::string to_string(EventKind kind);

struct EventSpec {
    EventKind kind = EventKind::node_crossing;
    double location = 0.0;  ///< x value for boundary and node events
    CrossingDirection direction = CrossingDirection::any;
    std::size_t component = 0;  ///< state component compared against location
    /// Event function for custom_surface; the event fires where it changes sign.
    std::function<double(double t, std::span<const double> y)> surface;
    bool custom_terminal = false;

    bool terminal() const {
        return kind == EventKind::boundary_left || kind == EventKind::boundary_right ||
               (kind == EventKind::custom_surface && custom_terminal);
    }

    static EventSpec left_boundary(double x);
    static EventSpec right_boundary(double x);
    static EventSpec node(double x);
    static EventSpec custom(std::function<double(double, std::span<const double>)> g,
                            CrossingDirection dir = CrossingDirection::any, bool terminal = false);

    double evaluate(double t, std::span<const double> y) const;
};

struct EventRecord {
    double time;
    EventKind kind;
    double location;
    std::size_t spec_index;
    std::vector<double> state;
};

enum class IntegrationStatus { completed, terminated, step_underflow, non_finite, step_limit };

std::string to_string(IntegrationStatus status);

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<EventRecord> events;
    IntegrationStatus status = IntegrationStatus::completed;
    std::string message;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evaluations = 0;

    /// Completed or stopped by a terminal event.
    bool ok() const {
        return status == IntegrationStatus::completed || status == IntegrationStatus::terminated;
    }
    double final_time() const { return times.back(); }
    const std::vector<double>& final_state() const { return states.back(); }
};

/// Explicit DOP853 stepper over a caller-owned right-hand side.
class Dop853 {
public:
    enum class StepOutcome { accepted, step_underflow, non_finite };

    Dop853(RhsFunction rhs, std::size_t dimension, double rel_tol, double abs_tol,
           double max_step = std::numeric_limits<double>::infinity());

    /// Restarts at (t, y). A positive h_guess skips the automatic initial step estimate.
    void reset(double t, std::span<const double> y, double h_guess = 0.0);

    /// Advances by one accepted step whose end does not pass t_limit.
    StepOutcome step(double t_limit);

    double time() const { return t_; }
    double previous_time() const { return t_old_; }
    double step_size() const { return h_next_; }
    std::span<const double> state() const { return y_; }
    std::span<const double> previous_state() const { return y_old_; }
    std::size_t dimension() const { return n_; }

    /// Dense output inside the last accepted step [previous_time(), time()].
    void interpolate(double t, std::span<double> out);

    std::size_t accepted_steps() const { return accepted_; }
    std::size_t rejected_steps() const { return rejected_; }
    std::size_t rhs_evaluations() const { return evaluations_; }

private:
    void eval(double t, std::span<const double> y, std::span<double> dy);
    double initial_step();
    void prepare_dense();

    RhsFunction rhs_;
    std::size_t n_;
    double rtol_;
    double atol_;
    double max_step_;

    double t_ = 0.0;
    double t_old_ = 0.0;
    double h_next_ = 0.0;
    double h_last_ = 0.0;
    bool last_rejected_ = false;
    bool dense_ready_ = false;

    std::vector<double> y_, y_old_, f_, f_old_, y_new_, ytmp_;
    std::vector<double> k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_;
    std::vector<double> rc1_, rc2_, rc3_, rc4_, rc5_, rc6_, rc7_, rc8_;
    std::vector<double> k14_, k15_, k16_;

    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
    std::size_t evaluations_ = 0;
};

/// Integrates from t = 0 to config.t_end (or the first terminal event).
/// Failures come back as a non-ok status with the partial trajectory.
Trajectory integrate(const RhsFunction& rhs, std::span<const double> y0,
                     const IntegratorConfig& config, std::span<const EventSpec> events = {});

enum class ExitSide { none, left, right };

std::string to_string(ExitSide side);

struct ExitOutcome {
    std::optional<double> time;  ///< absent when trapped within the horizon
    ExitSide side = ExitSide::none;

    bool trapped() const { return !time.has_value(); }
};

/// First crossing of x = left or x = right. Uses recorded boundary events when the
/// trajectory carries them, otherwise linear interpolation between samples.
ExitOutcome detect_exit(const Trajectory& trajectory, double left, double right);

/// Number of sign changes of x - node_x along the trajectory. Recorded node events
/// at node_x are authoritative; without them samples are scanned.
int count_node_crossings(const Trajectory& trajectory, double node_x);

/// CSV: header "time,<names...>", one row per sample, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const std::vector<std::string>& component_names);

}  // namespace cavity
