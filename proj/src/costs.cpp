#include "crp/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace crp {

void CostWeights::validate() const {
    if (w_p < 0.0 || w_r < 0.0 || w_v < 0.0) throw std::invalid_argument("CostWeights: weights must be >= 0");
    if (w_p == 0.0 && w_r == 0.0 && w_v == 0.0) throw std::invalid_argument("CostWeights: all weights zero");
}

void CostParams::validate() const {
    if (!(f_a >= 1.0)) throw std::invalid_argument("CostParams: f_a must be >= 1");
    if (!(f_theta >= 0.0 && f_theta <= 1.0)) throw std::invalid_argument("CostParams: f_theta must be in [0,1]");
    if (!(delta_v > 0.0)) throw std::invalid_argument("CostParams: delta_v must be positive");
    if (!(penalty <= 0.0)) throw std::invalid_argument("CostParams: penalty must be <= 0");
    if (!(tau_ref >= 0.0)) throw std::invalid_argument("CostParams: tau_ref must be >= 0");
    if (!(restitution_n > 0.0 && restitution_n <= 1.0)) throw std::invalid_argument("CostParams: restitution_n in (0,1]");
    if (!(sight_radius > 0.0)) throw std::invalid_argument("CostParams: sight_radius must be positive");
    if (!(restitution_t > 0.0 && restitution_t <= 1.0)) throw std::invalid_argument("CostParams: restitution_t in (0,1]");
}

double turning_angle(Vec2 p_pre, Vec2 p_cur, Vec2 p_s) {
    const Vec2 a = p_cur - p_pre;
    const Vec2 b = p_s - p_cur;
    if (a.norm() <= kGeomTol || b.norm() <= kGeomTol) return 0.0;
    return angle_between(a, b);
}

double cost_pos(const CandidateState& cand, const PlannerContext& ctx, const CostParams& params) {
    const double actual = ctx.traveled_length + distance(cand.pos, ctx.p_cur);
    const double heuristic = distance(ctx.p_goal, cand.pos);
    const double d_pos = actual + heuristic;
    return turning_angle(ctx.p_pre, ctx.p_cur, cand.pos) >= params.theta_thres ? params.f_a * d_pos : d_pos;
}

std::optional<CollisionPrediction> potential_collision_point(const CandidateState& cand,
                                                             std::span<const PredictedBoundary> boundaries) {
    if (!(cand.vel_mag > 0.0)) return std::nullopt;
    const Vec2 dir = unit_from_angle(cand.vel_dir);
    std::optional<CollisionPrediction> best;
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        const auto hit = line_intersection(cand.pos, dir, boundaries[i].anchor, boundaries[i].tangent);
        if (!hit) continue;
        const auto [s, t] = *hit;
        if (s <= kGeomTol || t < -kGeomTol) continue;
        if (!best || s < best->distance) best = CollisionPrediction{cand.pos + dir * s, i, s};
    }
    return best;
}

double inverse_collision_time(const CandidateState& cand, const LocalMap& map,
                              std::span<const PredictedBoundary> boundaries, const CostParams& params) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (cand.vel_mag > 0.0) {
        const auto hit = potential_collision_point(cand, boundaries);
        if (!hit) return 0.0;
        const Vec2 s_p = hit->point - cand.pos;
        const double d_p = s_p.norm();
        if (d_p <= kGeomTol) return inf;
        const double v_c = project(cand.velocity(), s_p).norm();
        return v_c / d_p;
    }
    double d_p = inf;
    if (!boundaries.empty()) {
        for (const auto& pb : boundaries) d_p = std::min(d_p, point_ray_distance(cand.pos, pb.anchor, pb.tangent));
    } else {
        for (const auto& chain : map.observed_boundaries) {
            for (std::size_t i = 1; i < chain.polyline.size(); ++i) {
                d_p = std::min(d_p, point_segment_distance(cand.pos, {chain.polyline[i - 1], chain.polyline[i]}));
            }
        }
    }
    if (d_p == inf) return 0.0;
    if (d_p <= kGeomTol) return inf;
    return params.delta_v / d_p;
}

double normalize(double value, double lo, double hi) {
    if (std::isinf(value)) return 1.0;
    if (!(hi > lo)) return 0.0;
    return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

NormalizationBounds compute_bounds(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                   const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                   const CostParams& params) {
    NormalizationBounds b;
    b.pos_min = b.risk_min = std::numeric_limits<double>::infinity();
    b.pos_max = b.risk_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : cands) {
        const double p = cost_pos(c, ctx, params);
        b.pos_min = std::min(b.pos_min, p);
        b.pos_max = std::max(b.pos_max, p);
        const double r = inverse_collision_time(c, map, boundaries, params);
        if (std::isfinite(r)) {
            b.risk_min = std::min(b.risk_min, r);
            b.risk_max = std::max(b.risk_max, r);
        }
    }
    if (!std::isfinite(b.pos_min)) b.pos_min = b.pos_max = 0.0;
    if (!std::isfinite(b.risk_min)) b.risk_min = b.risk_max = 0.0;
    return b;
}

RiskTerms cost_risk(const CandidateState& cand, const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                    const CostParams& params, std::span<const CandidateState> batch) {
    if (batch.empty()) throw PlannerError("cost_risk: empty batch");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : batch) {
        const double r = inverse_collision_time(c, map, boundaries, params);
        if (std::isfinite(r)) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    RiskTerms out;
    out.j_risk_h = normalize(inverse_collision_time(cand, map, boundaries, params), lo, hi);
    out.j_risk_g = -params.f_theta * narrow_region_angle(cand.pos, map, params.sight_radius);
    out.j_risk = out.j_risk_g + out.j_risk_h;
    return out;
}

Vec2 reflect_velocity(Vec2 v_in, Vec2 tangent, const CostParams& params) {
    const Vec2 e = tangent;
    const Vec2 n = rotate(e, kPi / 2.0);
    const double v_t = dot(v_in, e);
    const double v_n = dot(v_in, n);
    return e * (params.restitution_t * v_t) - n * (params.restitution_n * v_n);
}

double reward_reflection(const CandidateState& cand, Vec2 p_p, const PredictedBoundary& hit, const LocalMap& map,
                         Vec2 goal, const CostParams& params) {
    const Vec2 v_ref = reflect_velocity(cand.velocity(), hit.tangent, params);
    const Vec2 p_ref = p_p + v_ref * params.tau_ref;
    if (map.free_space.contains(p_ref)) return params.penalty;
    const Vec2 to_goal = goal - p_p;
    if (to_goal.norm() <= kGeomTol) return v_ref.norm();
    return dot(v_ref, to_goal.normalized());
}

double cost_vel(const CandidateState& cand, double j_risk_h, double r_ref, const PlannerContext& ctx) {
    return -dot(cand.velocity(), ctx.p_goal - ctx.p_cur) * (1.0 - j_risk_h) - r_ref * j_risk_h;
}

std::vector<CostBreakdown> evaluate_candidates(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                               const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                               const CostWeights& weights, const CostParams& params,
                                               const NormalizationBounds& bounds) {
    std::vector<CostBreakdown> out;
    out.reserve(cands.size());
    std::map<std::pair<double, double>, double> sight_cache;
    for (const auto& c : cands) {
        CostBreakdown b;
        b.p_pos = cost_pos(c, ctx, params);
        b.j_pos = normalize(b.p_pos, bounds.pos_min, bounds.pos_max);

        b.inv_tc = inverse_collision_time(c, map, boundaries, params);
        b.j_risk_h = normalize(b.inv_tc, bounds.risk_min, bounds.risk_max);
        const auto key = std::make_pair(c.pos.x, c.pos.y);
        auto it = sight_cache.find(key);
        if (it == sight_cache.end()) it = sight_cache.emplace(key, narrow_region_angle(c.pos, map, params.sight_radius)).first;
        b.j_risk_g = -params.f_theta * it->second;
        b.j_risk = b.j_risk_g + b.j_risk_h;

        if (const auto hit = potential_collision_point(c, boundaries)) {
            b.r_ref = reward_reflection(c, hit->point, boundaries[hit->boundary], map, ctx.p_goal, params);
        }
        b.j_vel = cost_vel(c, b.j_risk_h, b.r_ref, ctx);
        b.total = weights.w_p * b.j_pos + weights.w_r * b.j_risk + weights.w_v * b.j_vel;
        out.push_back(b);
    }
    return out;
}

Selection select_intermediate_state(std::span<const CandidateState> cands, const PlannerContext& ctx,
                                    const LocalMap& map, std::span<const PredictedBoundary> boundaries,
                                    const CostWeights& weights, const CostParams& params,
                                    const std::optional<NormalizationBounds>& bounds) {
    if (cands.empty()) throw PlannerError("select_intermediate_state: no candidates");
    const NormalizationBounds nb = bounds ? *bounds : compute_bounds(cands, ctx, map, boundaries, params);
    const auto costs = evaluate_candidates(cands, ctx, map, boundaries, weights, params, nb);
    std::size_t best = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
        const auto& c = costs[i];
        const auto& b = costs[best];
        if (c.total < b.total || (c.total == b.total && c.j_risk < b.j_risk)) best = i;
    }
    Selection sel;
    sel.index = best;
    sel.candidate = cands[best];
    sel.costs = costs[best];
    sel.candidate.costs = costs[best];
    sel.collision = potential_collision_point(cands[best], boundaries);
    return sel;
}

}  // namespace crp
