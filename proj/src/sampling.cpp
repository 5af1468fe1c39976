#include "crp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace crp {

void SamplingParams::validate() const {
    if (!(delta_l > 0.0)) throw std::invalid_argument("SamplingParams: delta_l must be positive");
    if (n_dirs < 1) throw std::invalid_argument("SamplingParams: n_dirs must be >= 1");
    if (!(v_max > 0.0)) throw std::invalid_argument("SamplingParams: v_max must be positive");
}

std::vector<const Frontier*> sampling_frontiers(const LocalMap& map, const SamplingParams& params) {
    std::vector<const Frontier*> out;
    for (const auto& f : map.frontiers) out.push_back(&f);
    if (params.include_window_arcs) {
        for (const auto& f : map.window_arcs) out.push_back(&f);
    }
    return out;
}

Vec2 point_along(const std::vector<Vec2>& polyline, double s) {
    if (polyline.empty()) throw GeometryError("point_along: empty polyline");
    if (s <= 0.0) return polyline.front();
    for (std::size_t i = 1; i < polyline.size(); ++i) {
        const double l = distance(polyline[i - 1], polyline[i]);
        if (s <= l) return polyline[i - 1] + (polyline[i] - polyline[i - 1]) * (l > 0.0 ? s / l : 0.0);
        s -= l;
    }
    return polyline.back();
}

int magnitude_steps(double length, double delta_l) {
    // The small slack keeps exact multiples (1.0 / 0.5) from rounding down.
    return static_cast<int>(std::floor(length / delta_l + 1e-9));
}

std::vector<CandidateState> sample_candidates(const LocalMap& map, const SamplingParams& params) {
    params.validate();
    std::vector<CandidateState> out;
    const auto frontiers = sampling_frontiers(map, params);
    for (std::size_t fid = 0; fid < frontiers.size(); ++fid) {
        const Frontier& f = *frontiers[fid];
        const int n_v = magnitude_steps(f.length, params.delta_l);
        for (int k = 0; k <= n_v; ++k) {
            const Vec2 pos = point_along(f.polyline, k * params.delta_l);
            for (int d = 0; d < params.n_dirs; ++d) {
                const double dir = kTwoPi * d / params.n_dirs;
                for (int m = 0; m <= n_v; ++m) {
                    CandidateState c;
                    c.pos = pos;
                    c.vel_dir = dir;
                    c.vel_mag = n_v == 0 ? 0.0 : params.v_max * m / n_v;
                    c.frontier_id = fid;
                    out.push_back(c);
                }
            }
        }
    }
    return out;
}

std::vector<CandidateState> prune_by_position(std::span<const CandidateState> cands, const LocalMap& map,
                                              Vec2 goal, double neighbor_radius) {
    struct Site {
        Vec2 pos;
        std::size_t frontier;
        bool dominated = false;
        bool keep = false;
    };
    std::vector<Site> sites;
    std::vector<std::size_t> site_of(cands.size());
    std::map<std::tuple<double, double, std::size_t>, std::size_t> index;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto key = std::make_tuple(cands[i].pos.x, cands[i].pos.y, cands[i].frontier_id);
        auto [it, inserted] = index.try_emplace(key, sites.size());
        if (inserted) sites.push_back({cands[i].pos, cands[i].frontier_id});
        site_of[i] = it->second;
    }

    // Nearest-to-goal first, so a site can only be dominated by one that
    // survives. Every removed site then has a survivor within
    // neighbor_radius, which is the exploration-retention guarantee, and a
    // second pass removes nothing.
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> goal_dist(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) goal_dist[i] = distance(sites[i].pos, goal);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return goal_dist[a] < goal_dist[b]; });

    std::vector<std::size_t> kept;
    for (const std::size_t i : order) {
        Site& s = sites[i];
        for (const std::size_t j : kept) {
            const Site& o = sites[j];
            if (o.frontier == s.frontier) continue;
            if (!(goal_dist[j] < goal_dist[i])) continue;
            if (!(distance(o.pos, s.pos) < neighbor_radius)) continue;
            if (!segment_inside_polygon({s.pos, o.pos}, map.free_space)) continue;
            s.dominated = true;
            break;
        }
        s.keep = !s.dominated;
        if (s.keep) kept.push_back(i);
    }

    std::vector<CandidateState> out;
    out.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (sites[site_of[i]].keep) out.push_back(cands[i]);
    }
    return out;
}

std::vector<CandidateState> prune_by_velocity(std::span<const CandidateState> cands, const LocalMap& map,
                                              double probe_step) {
    std::vector<CandidateState> out;
    out.reserve(cands.size());
    for (const auto& c : cands) {
        if (c.vel_mag > 0.0) {
            const Vec2 probe = c.pos + unit_from_angle(c.vel_dir) * probe_step;
            if (map.free_space.contains(probe)) continue;
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace crp
