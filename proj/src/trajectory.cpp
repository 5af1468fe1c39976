#include "crp/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace crp {

namespace {

Vec2 direction_or(Vec2 v, Vec2 fallback) {
    const double n = v.norm();
    return n > kGeomTol ? v / n : fallback;
}

}  // namespace

Vec2 TimedTrajectory::position_at(double t) const {
    if (samples.empty()) throw std::logic_error("TimedTrajectory: no samples");
    if (t <= samples.front().t) return samples.front().pos;
    if (t >= samples.back().t) return samples.back().pos;
    const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                     [](double v, const TrajectorySample& s) { return v < s.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return a.pos + (b.pos - a.pos) * w;
}

Vec2 TimedTrajectory::velocity_at(double t) const {
    if (samples.size() < 2 || t < samples.front().t || t >= samples.back().t) return {};
    const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                     [](double v, const TrajectorySample& s) { return v < s.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return (b.pos - a.pos) / (b.t - a.t);
}

ControlPoints make_control_points(Vec2 p_cur, Vec2 v_cur, Vec2 p_s, Vec2 v_s) {
    const Vec2 chord = p_s - p_cur;
    const double len = chord.norm();
    if (len <= kGeomTol) return {p_cur, p_cur, p_s, p_s};
    const Vec2 c = chord / len;
    const double kappa = len / 3.0;
    return {p_cur, p_cur + direction_or(v_cur, c) * kappa, p_s - direction_or(v_s, c) * kappa, p_s};
}

ControlPoints make_control_points(const RobotState& q_cur, const CandidateState& q_s) {
    return make_control_points(q_cur.position(), q_cur.velocity(), q_s.pos, q_s.velocity());
}

Vec2 evaluate_bspline(const ControlPoints& wp, double u) {
    // Knots {0,0,0,0,1,1,1,1}: a single span, so de Boor runs on all four
    // points with alpha = u at every level.
    u = std::clamp(u, 0.0, 1.0);
    std::array<Vec2, 4> d = wp;
    for (int r = 1; r <= 3; ++r) {
        for (int j = 3; j >= r; --j) d[j] = d[j - 1] * (1.0 - u) + d[j] * u;
    }
    return d[3];
}

std::vector<Vec2> interpolate_bspline(const ControlPoints& wp, int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("interpolate_bspline: n_samples must be >= 2");
    std::vector<Vec2> out;
    out.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        if (i == 0) {
            out.push_back(wp[0]);
        } else if (i == n_samples - 1) {
            out.push_back(wp[3]);
        } else {
            out.push_back(evaluate_bspline(wp, static_cast<double>(i) / (n_samples - 1)));
        }
    }
    return out;
}

double control_polygon_length(const ControlPoints& wp) {
    return distance(wp[0], wp[1]) + distance(wp[1], wp[2]) + distance(wp[2], wp[3]);
}

double assign_duration(const ControlPoints& wp, double v_max, double p_safe, double t_map) {
    if (!(v_max > 0.0)) throw std::invalid_argument("assign_duration: v_max must be positive");
    if (!(p_safe >= 1.0)) throw std::invalid_argument("assign_duration: p_safe must be >= 1");
    const double t_v = p_safe * control_polygon_length(wp) / v_max;
    return std::max(t_v, t_map);
}

TimedTrajectory make_trajectory(const ControlPoints& wp, const TrajectoryParams& params, double t_map) {
    TimedTrajectory traj;
    traj.control_points = wp;
    traj.duration = assign_duration(wp, params.v_max, params.p_safe, t_map);
    if (!(traj.duration > 0.0)) throw std::invalid_argument("make_trajectory: zero duration");
    const auto pts = interpolate_bspline(wp, params.n_samples);
    traj.samples.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double t = i + 1 == pts.size() ? traj.duration : traj.duration * i / (pts.size() - 1);
        traj.samples.push_back({t, pts[i]});
    }
    return traj;
}

TimedTrajectory with_positions(const TimedTrajectory& traj, const std::vector<Vec2>& positions) {
    if (positions.size() != traj.samples.size()) throw std::invalid_argument("with_positions: size mismatch");
    TimedTrajectory out = traj;
    for (std::size_t i = 0; i < positions.size(); ++i) out.samples[i].pos = positions[i];
    return out;
}

}  // namespace crp
