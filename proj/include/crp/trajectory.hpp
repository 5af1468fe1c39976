#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "crp/types.hpp"

namespace crp {

using ControlPoints = std::array<Vec2, 4>;

struct TrajectorySample {
    double t = 0.0;
    Vec2 pos;
};

/// Time-parameterized reference path.
struct TimedTrajectory {
    ControlPoints control_points{};
    std::vector<TrajectorySample> samples;
    double duration = 0.0;

    /// Linear interpolation between samples, clamped to [0, duration].
    Vec2 position_at(double t) const;
    /// Finite-difference velocity of the sample interval containing t; zero
    /// outside the trajectory.
    Vec2 velocity_at(double t) const;
    Vec2 start() const { return samples.front().pos; }
    Vec2 end() const { return samples.back().pos; }
};

struct TrajectoryParams {
    double v_max = 1.2;
    double p_safe = 1.2;
    int n_samples = 50;
};

/// Bezier-style layout: the inner points sit a third of the chord along the
/// current and target velocity directions.
ControlPoints make_control_points(const RobotState& q_cur, const CandidateState& q_s);
ControlPoints make_control_points(Vec2 p_cur, Vec2 v_cur, Vec2 p_s, Vec2 v_s);

/// Clamped cubic B-spline over the four control points at n_samples uniform
/// parameters in [0, 1].
std::vector<Vec2> interpolate_bspline(const ControlPoints& wp, int n_samples);

/// De Boor evaluation of the clamped cubic at u in [0, 1].
Vec2 evaluate_bspline(const ControlPoints& wp, double u);

double control_polygon_length(const ControlPoints& wp);

/// max(p_safe * control polygon length / v_max, t_map).
double assign_duration(const ControlPoints& wp, double v_max, double p_safe, double t_map);

TimedTrajectory make_trajectory(const ControlPoints& wp, const TrajectoryParams& params, double t_map);

/// Copy of `traj` with every sample position replaced; timestamps kept.
TimedTrajectory with_positions(const TimedTrajectory& traj, const std::vector<Vec2>& positions);

}  // namespace crp
