#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "crp/trajectory.hpp"

namespace crp {

enum class Mode { free_space, boundary_following, flow_through };
enum class Switch { off, on };

const char* to_string(Mode m);
const char* to_string(Switch s);

/// Maneuver for a plan: flow-through when the predicted contact lies on the
/// left of the chord WP_1 -> WP_4, boundary following otherwise.
Mode select_maneuver(const ControlPoints& wp, const std::optional<Vec2>& p_c);

/// First crossing of a trajectory with an obstacle boundary polyline.
struct SplineContact {
    Vec2 point;
    std::size_t boundary = 0;  // index of the polyline that was hit
    std::size_t sample = 0;    // index of the sample ending the crossing segment
};

/// Earliest crossing of the sampled trajectory with any of the polylines,
/// ignoring contact at the very first sample.
std::optional<SplineContact> first_contact(const TimedTrajectory& traj, const std::vector<std::vector<Vec2>>& boundaries);

/// True when p lies strictly on the right of the polyline (the obstacle
/// side for boundaries stored with the obstacle on the right).
bool on_obstacle_side(const std::vector<Vec2>& polyline, Vec2 p);

Vec2 project_onto_polyline(const std::vector<Vec2>& polyline, Vec2 p);

struct BoundaryReference {
    TimedTrajectory q_bound;
    Vec2 p_d;
    std::size_t engage = 0;     // first projected sample
    std::size_t disengage = 0;  // sample at p_d
};

/// Samples from the engaging point onwards are projected on the boundary
/// until the spline returns to the free side. Samples outside that range
/// are left as they are.
BoundaryReference boundary_following_reference(const TimedTrajectory& q_spl, const std::vector<Vec2>& boundary,
                                               Vec2 p_c);

/// Every sample projected onto the line through WP_1 and WP_4.
TimedTrajectory flow_through_reference(const TimedTrajectory& q_spl, const ControlPoints& wp);

/// Position-triggered reference switch. The boundary variant turns off near
/// p_d and stays off; the flow-through variant has no off transition.
class SwitchAutomaton {
public:
    SwitchAutomaton() = default;
    SwitchAutomaton(Vec2 p_c, std::optional<Vec2> p_d, double delta);

    /// One transition per call. The distance tests use the segment travelled
    /// since `prev`, so fast motion cannot skip over a trigger point.
    Switch update(Vec2 prev, Vec2 p);
    Switch update(Vec2 p) { return update(p, p); }
    Switch state() const { return state_; }

private:
    Vec2 p_c_;
    std::optional<Vec2> p_d_;
    double delta_ = 0.0;
    Switch state_ = Switch::off;
    bool done_ = false;
};

struct PidGains {
    double kp = 3.0;
    double ki = 0.0;
    double kd = 0.3;

    void validate() const;
};

/// Per-axis PID on the position error to reference(t) plus the reference
/// velocity as feed-forward, saturated at v_max.
class PidTracker {
public:
    PidTracker(PidGains gains, double v_max);

    Vec2 track(const TimedTrajectory& reference, double t, Vec2 position, double dt);
    void reset();

private:
    PidGains gains_;
    double v_max_;
    Vec2 integral_;
    std::optional<Vec2> prev_error_;
};

/// Stateless form of a single tracking step with a fresh tracker.
Vec2 track(const TimedTrajectory& reference, double t, const RobotState& state, const PidGains& gains, double dt,
           double v_max);

struct ManeuverState {
    Mode mode = Mode::free_space;
    Switch sw = Switch::off;
    std::optional<Vec2> p_c;
    std::optional<Vec2> p_d;
};

struct ModeEvent {
    double t = 0.0;
    Mode mode = Mode::free_space;
    Switch sw = Switch::off;
};

struct ControllerParams {
    PidGains gains;
    double v_max = 1.2;
    double delta = 0.04;  // switching hysteresis radius
};

/// Owns the current plan and produces velocity commands.
class Controller {
public:
    explicit Controller(ControllerParams params);

    /// Installs a new plan starting at t_now. `contact` and `boundary` come
    /// from first_contact on the same trajectory.
    void set_plan(const TimedTrajectory& q_spl, const std::optional<SplineContact>& contact,
                  const std::vector<Vec2>& boundary, double t_now);

    Vec2 command(Vec2 position, double t_now, double dt);

    const ManeuverState& state() const { return state_; }
    const std::vector<ModeEvent>& events() const { return events_; }
    bool has_plan() const { return has_plan_; }
    const TimedTrajectory& spline() const { return spline_; }
    const TimedTrajectory& active_reference() const;

private:
    ControllerParams params_;
    PidTracker pid_;
    bool has_plan_ = false;
    std::optional<Vec2> last_position_;
    double t_start_ = 0.0;
    TimedTrajectory spline_;
    TimedTrajectory maneuver_ref_;
    SwitchAutomaton automaton_;
    ManeuverState state_;
    std::vector<ModeEvent> events_;
};

}  // namespace crp
