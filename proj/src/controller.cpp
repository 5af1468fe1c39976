#include "crp/controller.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crp {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::free_space: return "free_space";
        case Mode::boundary_following: return "boundary_following";
        case Mode::flow_through: return "flow_through";
    }
    return "?";
}

const char* to_string(Switch s) { return s == Switch::on ? "on" : "off"; }

Mode select_maneuver(const ControlPoints& wp, const std::optional<Vec2>& p_c) {
    if (!p_c) return Mode::free_space;
    const Vec2 chord = wp[3] - wp[0];
    if (chord.norm() <= kGeomTol) throw std::invalid_argument("select_maneuver: WP_1 == WP_4");
    const Vec2 v = perp(chord.normalized());
    const Vec2 v_c = *p_c - wp[0];
    return dot(v, v_c) >= 0.0 ? Mode::flow_through : Mode::boundary_following;
}

std::optional<SplineContact> first_contact(const TimedTrajectory& traj,
                                           const std::vector<std::vector<Vec2>>& boundaries) {
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        const Segment step{traj.samples[i - 1].pos, traj.samples[i].pos};
        std::optional<SplineContact> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < boundaries.size(); ++b) {
            const auto& poly = boundaries[b];
            for (std::size_t k = 1; k < poly.size(); ++k) {
                const auto hit = segment_intersection(step, {poly[k - 1], poly[k]});
                if (!hit) continue;
                if (i == 1 && distance(*hit, step.a) <= kGeomTol) continue;
                const double d = distance(*hit, step.a);
                if (d < best_d) {
                    best_d = d;
                    best = SplineContact{*hit, b, i};
                }
            }
        }
        if (best) return best;
    }
    return std::nullopt;
}

namespace {

struct Nearest {
    std::size_t segment = 0;
    Vec2 point;
    double distance = std::numeric_limits<double>::infinity();
};

Nearest nearest_on_polyline(const std::vector<Vec2>& polyline, Vec2 p) {
    Nearest best;
    for (std::size_t k = 1; k < polyline.size(); ++k) {
        const Segment s{polyline[k - 1], polyline[k]};
        const Vec2 q = closest_point(s, p);
        const double d = distance(q, p);
        if (d < best.distance) best = {k - 1, q, d};
    }
    return best;
}

}  // namespace

Vec2 project_onto_polyline(const std::vector<Vec2>& polyline, Vec2 p) {
    if (polyline.empty()) throw std::invalid_argument("project_onto_polyline: empty polyline");
    if (polyline.size() == 1) return polyline.front();
    return nearest_on_polyline(polyline, p).point;
}

bool on_obstacle_side(const std::vector<Vec2>& polyline, Vec2 p) {
    if (polyline.size() < 2) return false;
    const Nearest n = nearest_on_polyline(polyline, p);
    if (n.distance <= kGeomTol) return false;
    const auto side = [&](std::size_t k) {
        return cross(polyline[k + 1] - polyline[k], p - polyline[k]) < 0.0;
    };
    const Vec2 a = polyline[n.segment];
    const Vec2 b = polyline[n.segment + 1];
    // At a shared vertex the answer depends on the turn direction.
    if (distance(n.point, b) <= kGeomTol && n.segment + 2 < polyline.size()) {
        const bool right_turn = cross(b - a, polyline[n.segment + 2] - b) < 0.0;
        return right_turn ? side(n.segment) && side(n.segment + 1) : side(n.segment) || side(n.segment + 1);
    }
    if (distance(n.point, a) <= kGeomTol && n.segment > 0) {
        const bool right_turn = cross(a - polyline[n.segment - 1], b - a) < 0.0;
        return right_turn ? side(n.segment - 1) && side(n.segment) : side(n.segment - 1) || side(n.segment);
    }
    return side(n.segment);
}

BoundaryReference boundary_following_reference(const TimedTrajectory& q_spl, const std::vector<Vec2>& boundary,
                                               Vec2 p_c) {
    if (q_spl.samples.empty()) throw std::invalid_argument("boundary_following_reference: empty trajectory");
    if (boundary.size() < 2) throw std::invalid_argument("boundary_following_reference: boundary needs 2 points");
    const auto& s = q_spl.samples;

    std::size_t engage = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = distance(s[i].pos, p_c);
        if (d < best) {
            best = d;
            engage = i;
        }
    }
    std::size_t disengage = s.size() - 1;
    for (std::size_t i = engage + 1; i < s.size(); ++i) {
        if (!on_obstacle_side(boundary, s[i].pos)) {
            disengage = i;
            break;
        }
    }

    std::vector<Vec2> pos;
    pos.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        pos.push_back(i >= engage && i <= disengage ? project_onto_polyline(boundary, s[i].pos) : s[i].pos);
    }
    BoundaryReference out;
    out.q_bound = with_positions(q_spl, pos);
    out.engage = engage;
    out.disengage = disengage;
    out.p_d = pos[disengage];
    return out;
}

TimedTrajectory flow_through_reference(const TimedTrajectory& q_spl, const ControlPoints& wp) {
    const Vec2 chord = wp[3] - wp[0];
    if (chord.norm() <= kGeomTol) throw std::invalid_argument("flow_through_reference: WP_1 == WP_4");
    std::vector<Vec2> pos;
    pos.reserve(q_spl.samples.size());
    for (const auto& smp : q_spl.samples) pos.push_back(wp[0] + project(smp.pos - wp[0], chord));
    return with_positions(q_spl, pos);
}

SwitchAutomaton::SwitchAutomaton(Vec2 p_c, std::optional<Vec2> p_d, double delta)
    : p_c_(p_c), p_d_(p_d), delta_(delta) {}

Switch SwitchAutomaton::update(Vec2 prev, Vec2 p) {
    const Segment moved{prev, p};
    if (state_ == Switch::off) {
        if (!done_ && point_segment_distance(p_c_, moved) <= delta_) state_ = Switch::on;
    } else if (p_d_ && point_segment_distance(*p_d_, moved) <= delta_) {
        state_ = Switch::off;
        done_ = true;
    }
    return state_;
}

void PidGains::validate() const {
    if (!(kp > 0.0)) throw std::invalid_argument("PidGains: kp must be positive");
    if (ki < 0.0 || kd < 0.0) throw std::invalid_argument("PidGains: ki and kd must be >= 0");
}

PidTracker::PidTracker(PidGains gains, double v_max) : gains_(gains), v_max_(v_max) {
    gains_.validate();
    if (!(v_max > 0.0)) throw std::invalid_argument("PidTracker: v_max must be positive");
}

void PidTracker::reset() {
    integral_ = {};
    prev_error_.reset();
}

Vec2 PidTracker::track(const TimedTrajectory& reference, double t, Vec2 position, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("track: dt must be positive");
    const Vec2 e = reference.position_at(t) - position;
    integral_ += e * dt;
    const Vec2 de = prev_error_ ? (e - *prev_error_) / dt : Vec2{};
    prev_error_ = e;
    Vec2 cmd = reference.velocity_at(t) + e * gains_.kp + integral_ * gains_.ki + de * gains_.kd;
    const double n = cmd.norm();
    if (n > v_max_) cmd = cmd * (v_max_ / n);
    return cmd;
}

Vec2 track(const TimedTrajectory& reference, double t, const RobotState& state, const PidGains& gains, double dt,
           double v_max) {
    PidTracker pid(gains, v_max);
    return pid.track(reference, t, state.position(), dt);
}

Controller::Controller(ControllerParams params) : params_(params), pid_(params.gains, params.v_max) {
    if (!(params.delta > 0.0)) throw std::invalid_argument("Controller: delta must be positive");
}

void Controller::set_plan(const TimedTrajectory& q_spl, const std::optional<SplineContact>& contact,
                          const std::vector<Vec2>& boundary, double t_now) {
    spline_ = q_spl;
    t_start_ = t_now;
    has_plan_ = true;
    pid_.reset();

    state_ = ManeuverState{};
    const auto& wp = q_spl.control_points;
    if (contact && distance(wp[0], wp[3]) > kGeomTol) {
        state_.p_c = contact->point;
        state_.mode = select_maneuver(wp, contact->point);
    }
    switch (state_.mode) {
        case Mode::free_space:
            maneuver_ref_ = spline_;
            automaton_ = SwitchAutomaton{};
            break;
        case Mode::boundary_following: {
            const auto ref = boundary_following_reference(q_spl, boundary, *state_.p_c);
            maneuver_ref_ = ref.q_bound;
            state_.p_d = ref.p_d;
            automaton_ = SwitchAutomaton(*state_.p_c, ref.p_d, params_.delta);
            break;
        }
        case Mode::flow_through:
            maneuver_ref_ = flow_through_reference(q_spl, wp);
            automaton_ = SwitchAutomaton(*state_.p_c, std::nullopt, params_.delta);
            break;
    }
    events_.push_back({t_now, state_.mode, state_.sw});
}

const TimedTrajectory& Controller::active_reference() const {
    return state_.sw == Switch::on ? maneuver_ref_ : spline_;
}

Vec2 Controller::command(Vec2 position, double t_now, double dt) {
    if (!has_plan_) return {};
    if (state_.mode != Mode::free_space) {
        const Switch next = automaton_.update(last_position_.value_or(position), position);
        if (next != state_.sw) {
            state_.sw = next;
            events_.push_back({t_now, state_.mode, state_.sw});
        }
    }
    last_position_ = position;
    return pid_.track(active_reference(), t_now - t_start_, position, dt);
}

}  // namespace crp
