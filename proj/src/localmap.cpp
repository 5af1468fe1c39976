#include "crp/localmap.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"

namespace crp {

namespace {

// Index of an obstacle edge containing the whole segment [a, b], if any.
std::optional<std::size_t> obstacle_carrying(const std::vector<Polygon>& obstacles, Vec2 a, Vec2 b) {
    for (std::size_t j = 0; j < obstacles.size(); ++j) {
        const Polygon& o = obstacles[j];
        for (std::size_t k = 0; k < o.size(); ++k) {
            const Segment e = o.edge(k);
            if (point_segment_distance(a, e) <= kGeomTol && point_segment_distance(b, e) <= kGeomTol) return j;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> window_side(const Polygon& window, Vec2 a, Vec2 b) {
    for (std::size_t k = 0; k < window.size(); ++k) {
        const Segment e = window.edge(k);
        if (point_segment_distance(a, e) <= kGeomTol && point_segment_distance(b, e) <= kGeomTol) return k;
    }
    return std::nullopt;
}

double polyline_length(const std::vector<Vec2>& pl) {
    double l = 0.0;
    for (std::size_t i = 1; i < pl.size(); ++i) l += distance(pl[i - 1], pl[i]);
    return l;
}

struct EdgeInfo {
    EdgeClass cls;
    std::size_t owner;  // obstacle index or window side
};

}  // namespace

const char* to_string(EdgeClass c) {
    switch (c) {
        case EdgeClass::observed_boundary: return "observed_boundary";
        case EdgeClass::frontier: return "frontier";
        case EdgeClass::window_arc: return "window_arc";
    }
    return "?";
}

const char* to_string(JunctionKind k) {
    switch (k) {
        case JunctionKind::silhouette: return "silhouette";
        case JunctionKind::occluded: return "occluded";
        case JunctionKind::window_rim: return "window_rim";
    }
    return "?";
}

LocalMap build_local_map(Vec2 robot_pos, double window_size, std::span<const Polygon> scene) {
    if (!(window_size > 0.0)) throw MapError("window size must be positive");
    LocalMap map;
    map.robot = robot_pos;
    map.window_size = window_size;
    map.window = Polygon::square(robot_pos, window_size);
    const Aabb wbox = bounding_box(map.window);
    for (const auto& o : scene) {
        if (bounding_box(o).overlaps(wbox, kGeomTol)) map.obstacles.push_back(o);
    }

    try {
        map.free_space = visibility_polygon(robot_pos, map.obstacles, map.window);
    } catch (const GeometryError& e) {
        throw MapError(std::string("local map: ") + e.what());
    }
    const auto& fv = map.free_space.vertices();
    const std::size_t n = fv.size();
    if (n < 3) throw MapError("local map: degenerate visibility polygon");

    std::vector<EdgeInfo> info(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = fv[i];
        const Vec2 b = fv[(i + 1) % n];
        if (auto j = obstacle_carrying(map.obstacles, a, b)) {
            info[i] = {EdgeClass::observed_boundary, *j};
        } else if (auto k = window_side(map.window, a, b)) {
            info[i] = {EdgeClass::window_arc, *k};
        } else {
            info[i] = {EdgeClass::frontier, 0};
        }
        map.edge_class.push_back(info[i].cls);
    }

    // Group edges into maximal runs of identical (class, owner). Runs of
    // frontier edges are split at every vertex so each occlusion edge is its
    // own frontier unless the edges are collinear continuations.
    auto same_run = [&](std::size_t i, std::size_t j) {
        if (info[i].cls != info[j].cls) return false;
        if (info[i].cls == EdgeClass::frontier) {
            const Vec2 d1 = fv[(i + 1) % n] - fv[i];
            const Vec2 d2 = fv[(j + 1) % n] - fv[j];
            return std::abs(cross(d1.normalized(), d2.normalized())) <= 1e-9 && dot(d1, d2) > 0;
        }
        return info[i].owner == info[j].owner;
    };

    std::size_t start = 0;
    bool all_same = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!same_run((i + n - 1) % n, i)) {
            start = i;
            all_same = false;
            break;
        }
    }

    struct Run {
        EdgeInfo info;
        std::vector<Vec2> pts;
    };
    std::vector<Run> runs;
    if (all_same) {
        Run r{info[0], {}};
        for (std::size_t k = 0; k <= n; ++k) r.pts.push_back(fv[k % n]);
        runs.push_back(std::move(r));
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = (start + k) % n;
            if (k == 0 || !same_run((i + n - 1) % n, i)) runs.push_back({info[i], {fv[i]}});
            runs.back().pts.push_back(fv[(i + 1) % n]);
        }
    }

    auto kind_of = [](EdgeClass c) {
        switch (c) {
            case EdgeClass::observed_boundary: return EndpointKind::obstacle;
            case EdgeClass::window_arc: return EndpointKind::window;
            default: return EndpointKind::free;
        }
    };
    const std::size_t nr = runs.size();
    for (std::size_t r = 0; r < nr; ++r) {
        const Run& run = runs[r];
        const EdgeClass prev = runs[(r + nr - 1) % nr].info.cls;
        const EdgeClass next = runs[(r + 1) % nr].info.cls;
        switch (run.info.cls) {
            case EdgeClass::observed_boundary:
                map.observed_boundaries.push_back({run.pts, run.info.owner});
                break;
            case EdgeClass::frontier:
            case EdgeClass::window_arc: {
                Frontier f;
                f.polyline = run.pts;
                f.length = polyline_length(run.pts);
                f.window_arc = run.info.cls == EdgeClass::window_arc;
                f.start_kind = nr > 1 ? kind_of(prev) : EndpointKind::free;
                f.end_kind = nr > 1 ? kind_of(next) : EndpointKind::free;
                if (f.length <= kGeomTol) break;
                (f.window_arc ? map.window_arcs : map.frontiers).push_back(std::move(f));
                break;
            }
        }
    }

    map.predicted_boundaries = extract_predicted_boundaries(map);
    return map;
}

std::vector<PredictedBoundary> extract_predicted_boundaries(const LocalMap& map) {
    std::vector<PredictedBoundary> out;
    const auto& fv = map.free_space.vertices();
    const std::size_t n = fv.size();

    auto vertex_index = [&](Vec2 p) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < n; ++i) {
            if (distance(fv[i], p) <= kGeomTol) return i;
        }
        return std::nullopt;
    };

    for (std::size_t c = 0; c < map.observed_boundaries.size(); ++c) {
        const auto& pl = map.observed_boundaries[c].polyline;
        if (pl.size() < 2) continue;
        for (int end = 0; end < 2; ++end) {
            const bool at_end = end == 1;
            const Vec2 anchor = at_end ? pl.back() : pl.front();
            const auto vi = vertex_index(anchor);
            if (!vi) continue;
            // Neighbouring free-space edge beyond the chain.
            const std::size_t ei = at_end ? *vi : (*vi + n - 1) % n;
            const EdgeClass cls = map.edge_class[ei];
            if (cls == EdgeClass::observed_boundary) continue;
            const Vec2 other = at_end ? fv[(*vi + 1) % n] : fv[(*vi + n - 1) % n];

            // Direction of the chain at this end, pointing away from it.
            const Vec2 face = at_end ? (pl[pl.size() - 1] - pl[pl.size() - 2]).normalized()
                                     : (pl[0] - pl[1]).normalized();

            PredictedBoundary pb;
            pb.anchor = anchor;
            pb.chain = c;
            pb.at_chain_end = at_end;
            if (cls == EdgeClass::window_arc) {
                pb.kind = JunctionKind::window_rim;
                pb.tangent = face;
            } else if (distance(other, map.robot) > distance(anchor, map.robot)) {
                pb.kind = JunctionKind::silhouette;
                // Hidden side assumed perpendicular to the visible face,
                // turning toward the obstacle (right of the chain's forward
                // direction, left of its backward direction).
                Vec2 t = at_end ? Vec2{face.y, -face.x} : Vec2{-face.y, face.x};
                const Vec2 radial = (anchor - map.robot).normalized();
                // Keep the prediction inside the shadow cone.
                const double side = cross(radial, t);
                if ((at_end && side > 0.0) || (!at_end && side < 0.0)) t = radial;
                pb.tangent = t;
            } else {
                pb.kind = JunctionKind::occluded;
                pb.tangent = face;
            }
            out.push_back(pb);
        }
    }
    return out;
}

double narrow_region_angle(Vec2 p, const LocalMap& map, double reach) {
    if (!(reach > 0.0)) throw std::invalid_argument("narrow_region_angle: reach must be positive");
    struct Interval {
        double lo;
        double width;
    };
    std::vector<Interval> blocked;

    // Observed boundaries plus the predicted continuations behind them.
    std::vector<Segment> walls;
    for (const auto& chain : map.observed_boundaries) {
        for (std::size_t i = 1; i < chain.polyline.size(); ++i) walls.push_back({chain.polyline[i - 1], chain.polyline[i]});
    }
    for (const auto& pb : map.predicted_boundaries) {
        walls.push_back({pb.anchor, pb.anchor + pb.tangent * (distance(pb.anchor, p) + reach)});
    }

    for (const auto& w : walls) {
        {
            Vec2 a = w.a;
            Vec2 b = w.b;
            if (point_segment_distance(p, {a, b}) <= kGeomTol) continue;
            if (point_segment_distance(p, {a, b}) >= reach) continue;
            // Clip the segment to the disc of radius `reach` around p.
            const Vec2 d = b - a;
            const double A = d.squared_norm();
            const double B = 2.0 * dot(a - p, d);
            const double C = (a - p).squared_norm() - reach * reach;
            const double disc = B * B - 4.0 * A * C;
            if (disc <= 0.0) continue;
            const double sq = std::sqrt(disc);
            const double t0 = std::max(0.0, (-B - sq) / (2.0 * A));
            const double t1 = std::min(1.0, (-B + sq) / (2.0 * A));
            if (t1 <= t0) continue;
            a = w.a + d * t0;
            b = w.a + d * t1;
            const double aa = (a - p).angle();
            const double ab = (b - p).angle();
            const double sweep = wrap_pi(ab - aa);
            if (sweep >= 0.0) {
                blocked.push_back({wrap_two_pi(aa), sweep});
            } else {
                blocked.push_back({wrap_two_pi(ab), -sweep});
            }
        }
    }
    if (blocked.empty()) return kTwoPi;

    // Split wrapping intervals and merge on [0, 2*pi).
    std::vector<std::pair<double, double>> spans;
    for (const auto& iv : blocked) {
        const double hi = iv.lo + iv.width;
        if (hi > kTwoPi) {
            spans.emplace_back(iv.lo, kTwoPi);
            spans.emplace_back(0.0, hi - kTwoPi);
        } else {
            spans.emplace_back(iv.lo, hi);
        }
    }
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, s.second);
        } else {
            merged.push_back(s);
        }
    }

    // Free gaps, with the gap crossing angle zero joined into one.
    struct Gap {
        double lo;
        double width;
    };
    std::vector<Gap> gaps;
    double cursor = 0.0;
    for (const auto& m : merged) {
        if (m.first > cursor) gaps.push_back({cursor, m.first - cursor});
        cursor = std::max(cursor, m.second);
    }
    if (cursor < kTwoPi) gaps.push_back({cursor, kTwoPi - cursor});
    if (gaps.size() > 1 && gaps.front().lo == 0.0 && gaps.back().lo + gaps.back().width >= kTwoPi) {
        gaps.back().width += gaps.front().width;
        gaps.erase(gaps.begin());
    }
    if (gaps.empty()) return 1e-9;

    const Vec2 lead_vec = p - map.robot;
    const double lead = lead_vec.norm() > kGeomTol ? wrap_two_pi(lead_vec.angle()) : 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    double best_width = gaps.front().width;
    for (const auto& g : gaps) {
        const double off = wrap_two_pi(lead - g.lo);
        if (off <= g.width) return g.width;
        const double d = std::min(off - g.width, kTwoPi - off);
        if (d < best_dist) {
            best_dist = d;
            best_width = g.width;
        }
    }
    return best_width;
}

bool goal_in_free_space(const LocalMap& map, Vec2 goal) { return map.free_space.contains(goal); }

std::vector<Vec2> extended_boundary(const LocalMap& map, std::size_t chain, double extension) {
    std::vector<Vec2> pl = map.observed_boundaries.at(chain).polyline;
    for (const auto& pb : map.predicted_boundaries) {
        if (pb.chain != chain) continue;
        if (pb.at_chain_end) {
            pl.push_back(pb.anchor + pb.tangent * extension);
        } else {
            pl.insert(pl.begin(), pb.anchor + pb.tangent * extension);
        }
    }
    return pl;
}

std::string dump_local_map(const LocalMap& map) {
    using nlohmann::json;
    auto pt = [](Vec2 v) { return json::array({v.x, v.y}); };
    auto poly = [&](const std::vector<Vec2>& vs) {
        json a = json::array();
        for (const auto& v : vs) a.push_back(pt(v));
        return a;
    };
    json j;
    j["robot"] = pt(map.robot);
    j["window_size"] = map.window_size;
    j["window"] = poly(map.window.vertices());
    j["obstacles"] = json::array();
    for (const auto& o : map.obstacles) j["obstacles"].push_back(poly(o.vertices()));
    j["free_space"] = poly(map.free_space.vertices());
    json edges = json::array();
    const auto& fv = map.free_space.vertices();
    for (std::size_t i = 0; i < fv.size(); ++i) {
        edges.push_back({{"a", pt(fv[i])}, {"b", pt(fv[(i + 1) % fv.size()])}, {"class", to_string(map.edge_class[i])}});
    }
    j["edges"] = edges;
    auto frontier_json = [&](const Frontier& f) {
        return json{{"polyline", poly(f.polyline)}, {"length", f.length}};
    };
    j["frontiers"] = json::array();
    for (const auto& f : map.frontiers) j["frontiers"].push_back(frontier_json(f));
    j["window_arcs"] = json::array();
    for (const auto& f : map.window_arcs) j["window_arcs"].push_back(frontier_json(f));
    j["observed_boundaries"] = json::array();
    for (const auto& c : map.observed_boundaries) {
        j["observed_boundaries"].push_back({{"polyline", poly(c.polyline)}, {"obstacle", c.obstacle}});
    }
    j["predicted_boundaries"] = json::array();
    for (const auto& pb : map.predicted_boundaries) {
        j["predicted_boundaries"].push_back(
            {{"anchor", pt(pb.anchor)}, {"tangent", pt(pb.tangent)}, {"chain", pb.chain}, {"kind", to_string(pb.kind)}});
    }
    return j.dump(2);
}

}  // namespace crp
