#pragma once

#include <cstddef>
#include <optional>

#include "crp/geometry.hpp"

namespace crp {

/// Holonomic robot state: position plus velocity direction and magnitude.
struct RobotState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // velocity direction
    double v = 0.0;      // velocity magnitude

    Vec2 position() const { return {x, y}; }
    Vec2 velocity() const { return unit_from_angle(theta) * v; }

    static RobotState from(Vec2 p, Vec2 vel) {
        const double speed = vel.norm();
        return {p.x, p.y, speed > 0.0 ? vel.angle() : 0.0, speed};
    }
};

/// Terms of the joint planning cost for one candidate.
struct CostBreakdown {
    double p_pos = 0.0;      // raw position cost before normalization
    double inv_tc = 0.0;     // raw 1 / collision time
    double j_pos = 0.0;
    double j_risk = 0.0;
    double j_risk_h = 0.0;
    double j_risk_g = 0.0;
    double j_vel = 0.0;
    double r_ref = 0.0;
    double total = 0.0;
};

/// One sampled state on a frontier or window arc.
struct CandidateState {
    Vec2 pos;
    double vel_dir = 0.0;  // [0, 2*pi)
    double vel_mag = 0.0;  // [0, v_max]
    std::size_t frontier_id = 0;
    std::optional<CostBreakdown> costs;

    Vec2 velocity() const { return unit_from_angle(vel_dir) * vel_mag; }
};

}  // namespace crp
