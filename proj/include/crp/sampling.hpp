#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crp/localmap.hpp"
#include "crp/types.hpp"

namespace crp {

struct SamplingParams {
    double delta_l = 0.2;  // frontier sample spacing [m]
    int n_dirs = 8;        // velocity directions per position
    double v_max = 1.2;    // [m/s]
    /// Also sample the visible window rim (ids follow the occlusion
    /// frontiers).
    bool include_window_arcs = true;

    void validate() const;
};

inline constexpr double kVelocityProbeStep = 1e-4;

/// Frontier polylines sampled by the planner, in frontier_id order.
std::vector<const Frontier*> sampling_frontiers(const LocalMap& map, const SamplingParams& params);

/// Position at arc length s along a polyline (clamped to its ends).
Vec2 point_along(const std::vector<Vec2>& polyline, double s);

/// Number of velocity magnitude steps for a frontier of the given length.
int magnitude_steps(double length, double delta_l);

/// Positions every delta_l along each frontier; at each, n_dirs directions
/// times (N_v + 1) magnitudes with N_v = floor(length / delta_l).
std::vector<CandidateState> sample_candidates(const LocalMap& map, const SamplingParams& params);

/// Removes candidates whose position is dominated by a surviving candidate
/// on another frontier that is closer to the goal, nearer than
/// neighbor_radius and reachable through free space. Sites are decided
/// nearest-goal first, so a frontier is only emptied when a survivor lies
/// within neighbor_radius, and applying the pruning twice changes nothing.
std::vector<CandidateState> prune_by_position(std::span<const CandidateState> cands, const LocalMap& map,
                                              Vec2 goal, double neighbor_radius);

/// Removes moving candidates whose velocity points into the free space.
std::vector<CandidateState> prune_by_velocity(std::span<const CandidateState> cands, const LocalMap& map,
                                              double probe_step = kVelocityProbeStep);

}  // namespace crp
