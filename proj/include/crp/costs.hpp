#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "crp/localmap.hpp"
#include "crp/types.hpp"

namespace crp {

class PlannerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CostWeights {
    double w_p = 1.0;
    double w_r = 0.1;
    double w_v = 4.0;

    void validate() const;
};

struct CostParams {
    double theta_thres = kPi / 2.0;  // turning angle that triggers f_a
    double f_a = 2.0;                // >= 1
    double f_theta = 0.1;            // [0, 1]
    double delta_v = 1e-3;           // speed assumed for stationary candidates
    double penalty = -1.2;           // reward when the bounce lands in known space
    double tau_ref = 0.5;            // post-impact prediction horizon [s]
    double restitution_n = 0.7;      // (0, 1]
    double restitution_t = 1.0;      // (0, 1]
    double sight_radius = 0.3;       // reach of the narrow-region angle [m]

    void validate() const;
};

struct PlannerContext {
    Vec2 p_cur;
    Vec2 p_goal;
    Vec2 p_pre;
    Vec2 p_ini;
    double traveled_length = 0.0;
};

/// Deviation of p_cur -> p_s from the straight continuation of
/// p_pre -> p_cur; 0 when either leg is degenerate.
double turning_angle(Vec2 p_pre, Vec2 p_cur, Vec2 p_s);

/// Raw (un-normalized) position cost: travelled plus remaining distance,
/// scaled by f_a when the turn at p_cur reaches theta_thres.
double cost_pos(const CandidateState& cand, const PlannerContext& ctx, const CostParams& params);

struct CollisionPrediction {
    Vec2 point;
    std::size_t boundary = 0;  // index into the predicted-boundary list
    double distance = 0.0;
};

/// Nearest crossing of the candidate's velocity ray with a predicted
/// boundary ray. Empty for stationary candidates.
std::optional<CollisionPrediction> potential_collision_point(const CandidateState& cand,
                                                             std::span<const PredictedBoundary> boundaries);

/// Raw inverse collision time 1/t_c. Infinite when the candidate already
/// touches an obstacle; zero when no collision is predicted.
double inverse_collision_time(const CandidateState& cand, const LocalMap& map,
                              std::span<const PredictedBoundary> boundaries, const CostParams& params);

/// Min-max range used to normalize P_pos and 1/t_c.
struct NormalizationBounds {
    double pos_min = 0.0;
    double pos_max = 0.0;
    double risk_min = 0.0;
    double risk_max = 0.0;  // over finite values only
};

/// Min-max normalization to [0, 1]; constant ranges map to 0 and infinite
/// inputs to 1.
double normalize(double value, double lo, double hi);

NormalizationBounds compute_bounds(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                   const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                   const CostParams& params);

struct RiskTerms {
    double j_risk = 0.0;
    double j_risk_h = 0.0;
    double j_risk_g = 0.0;
};

/// Risk of one candidate, normalized against the given batch.
RiskTerms cost_risk(const CandidateState& cand, const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                    const CostParams& params, std::span<const CandidateState> batch);

/// Impact response: tangential component scaled by restitution_t, normal
/// component reversed and scaled by restitution_n.
Vec2 reflect_velocity(Vec2 v_in, Vec2 tangent, const CostParams& params);

/// Reward for the predicted bounce off `hit`: alignment of the rebound
/// velocity with the goal direction, or `penalty` when the rebound lands
/// back in free space.
double reward_reflection(const CandidateState& cand, Vec2 p_p, const PredictedBoundary& hit, const LocalMap& map,
                         Vec2 goal, const CostParams& params);

double cost_vel(const CandidateState& cand, double j_risk_h, double r_ref, const PlannerContext& ctx);

struct Selection {
    std::size_t index = 0;
    CandidateState candidate;
    CostBreakdown costs;
    std::optional<CollisionPrediction> collision;
};

/// Full cost breakdown of every candidate against fixed bounds.
std::vector<CostBreakdown> evaluate_candidates(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                               const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                               const CostWeights& weights, const CostParams& params,
                                               const NormalizationBounds& bounds);

/// Minimizer of w_p*J_pos + w_r*J_risk + w_v*J_vel. Ties go to the smaller
/// J_risk, then the smaller index. Bounds default to the batch's own range.
/// Throws PlannerError on an empty batch.
Selection select_intermediate_state(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                    const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                    const CostWeights& weights, const CostParams& params,
                                    const std::optional<NormalizationBounds>& bounds = std::nullopt);

}  // namespace crp
