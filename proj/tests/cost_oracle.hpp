#pragma once

// Brute-force re-scoring of candidate batches, written from the cost
// definitions rather than the library's helpers. Shared by the cost tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "crp/costs.hpp"

namespace crp::testing {

struct Scored {
    double pos;
    double inv_tc;
    double sight;
    double r_ref;
    bool hit;
};

inline Scored score(const CandidateState& c, const PlannerContext& ctx, const LocalMap& map,
                    const std::vector<PredictedBoundary>& E, const CostParams& prm) {
    Scored s{};
    const Vec2 a = ctx.p_cur - ctx.p_pre;
    const Vec2 b = c.pos - ctx.p_cur;
    double turn = 0.0;
    if (a.norm() > 1e-9 && b.norm() > 1e-9) turn = std::acos(std::clamp(dot(a, b) / (a.norm() * b.norm()), -1.0, 1.0));
    const double d = ctx.traveled_length + b.norm() + (ctx.p_goal - c.pos).norm();
    s.pos = turn >= prm.theta_thres ? prm.f_a * d : d;

    const Vec2 v{std::cos(c.vel_dir) * c.vel_mag, std::sin(c.vel_dir) * c.vel_mag};
    if (c.vel_mag > 0.0) {
        const Vec2 u = v / c.vel_mag;
        double best = INFINITY;
        const PredictedBoundary* hit = nullptr;
        for (const auto& e : E) {
            // Solve c.pos + t*u = anchor + s*tangent.
            const double den = u.x * (-e.tangent.y) - u.y * (-e.tangent.x);
            if (std::abs(den) < 1e-12) continue;
            const Vec2 r = e.anchor - c.pos;
            const double t = (r.x * (-e.tangent.y) - r.y * (-e.tangent.x)) / den;
            const double sp = (u.x * r.y - u.y * r.x) / den;
            if (t <= 1e-9 || sp < -1e-9) continue;
            if (t < best) {
                best = t;
                hit = &e;
            }
        }
        if (hit) {
            s.hit = true;
            const Vec2 pp = c.pos + u * best;
            const Vec2 sp = pp - c.pos;
            const double vc = std::abs(dot(v, sp)) / sp.norm();
            s.inv_tc = sp.norm() <= 1e-9 ? INFINITY : vc / sp.norm();
            const Vec2 n{-hit->tangent.y, hit->tangent.x};
            const Vec2 vr = hit->tangent * (prm.restitution_t * dot(v, hit->tangent)) - n * (prm.restitution_n * dot(v, n));
            const Vec2 pr = pp + vr * prm.tau_ref;
            if (map.free_space.contains(pr)) {
                s.r_ref = prm.penalty;
            } else {
                const Vec2 g = ctx.p_goal - pp;
                s.r_ref = g.norm() <= 1e-9 ? vr.norm() : dot(vr, g / g.norm());
            }
        }
    } else {
        double dp = INFINITY;
        for (const auto& e : E) {
            const double t = std::max(0.0, dot(c.pos - e.anchor, e.tangent));
            dp = std::min(dp, (c.pos - (e.anchor + e.tangent * t)).norm());
        }
        if (E.empty()) {
            for (const auto& ch : map.observed_boundaries) {
                for (std::size_t k = 1; k < ch.polyline.size(); ++k) {
                    dp = std::min(dp, point_segment_distance(c.pos, {ch.polyline[k - 1], ch.polyline[k]}));
                }
            }
        }
        s.inv_tc = dp == INFINITY ? 0.0 : (dp <= 1e-9 ? INFINITY : prm.delta_v / dp);
    }
    // The narrow-region angle has its own tests; reuse it here.
    s.sight = narrow_region_angle(c.pos, map, prm.sight_radius);
    return s;
}

inline std::size_t brute_argmin(const std::vector<CandidateState>& cs, const PlannerContext& ctx,
                                const LocalMap& map, const std::vector<PredictedBoundary>& E, const CostWeights& w,
                                const CostParams& prm, std::vector<double>* totals = nullptr) {
    std::vector<Scored> sc;
    for (const auto& c : cs) sc.push_back(score(c, ctx, map, E, prm));
    double pmin = INFINITY, pmax = -INFINITY, rmin = INFINITY, rmax = -INFINITY;
    for (const auto& s : sc) {
        pmin = std::min(pmin, s.pos);
        pmax = std::max(pmax, s.pos);
        if (std::isfinite(s.inv_tc)) {
            rmin = std::min(rmin, s.inv_tc);
            rmax = std::max(rmax, s.inv_tc);
        }
    }
    auto norm = [](double v, double lo, double hi) {
        if (std::isinf(v)) return 1.0;
        if (!(hi > lo)) return 0.0;
        return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    };
    std::size_t best = 0;
    double best_total = INFINITY, best_risk = INFINITY;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto& s = sc[i];
        const double jp = norm(s.pos, pmin, pmax);
        const double jh = norm(s.inv_tc, rmin, rmax);
        const double jr = -prm.f_theta * s.sight + jh;
        const Vec2 v = cs[i].velocity();
        const double jv = -dot(v, ctx.p_goal - ctx.p_cur) * (1.0 - jh) - s.r_ref * jh;
        const double total = w.w_p * jp + w.w_r * jr + w.w_v * jv;
        if (totals) totals->push_back(total);
        if (total < best_total || (total == best_total && jr < best_risk)) {
            best = i;
            best_total = total;
            best_risk = jr;
        }
    }
    return best;
}

}  // namespace crp::testing
