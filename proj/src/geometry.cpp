#include "crp/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace crp {

Vec2 Vec2::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw GeometryError("cannot normalize a zero or non-finite vector");
    }
    return {x / n, y / n};
}

double wrap_two_pi(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double wrap_pi(double a) {
    double r = wrap_two_pi(a);
    if (r > kPi) r -= kTwoPi;
    return r;
}

double angle_between(Vec2 a, Vec2 b) {
    return std::abs(std::atan2(cross(a, b), dot(a, b)));
}

Vec2 rotate(Vec2 v, double angle) {
    if (!std::isfinite(angle)) throw GeometryError("rotate: non-finite angle");
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 project(Vec2 v, Vec2 onto) {
    const double n2 = onto.squared_norm();
    if (!(n2 > 0.0)) throw GeometryError("project: zero direction vector");
    return onto * (dot(v, onto) / n2);
}

Vec2 closest_point(const Segment& s, Vec2 p) {
    const Vec2 d = s.b - s.a;
    const double l2 = d.squared_norm();
    if (l2 == 0.0) return s.a;
    const double t = std::clamp(dot(p - s.a, d) / l2, 0.0, 1.0);
    return s.a + d * t;
}

double point_segment_distance(Vec2 p, const Segment& s) { return distance(p, closest_point(s, p)); }

double point_ray_distance(Vec2 p, Vec2 origin, Vec2 dir) {
    const double l2 = dir.squared_norm();
    if (l2 == 0.0) return distance(p, origin);
    const double t = std::max(0.0, dot(p - origin, dir) / l2);
    return distance(p, origin + dir * t);
}

std::optional<std::pair<double, double>> line_intersection(Vec2 a0, Vec2 da, Vec2 b0, Vec2 db) {
    const double denom = cross(da, db);
    const double scale = da.norm() * db.norm();
    if (std::abs(denom) <= 1e-14 * scale || scale == 0.0) return std::nullopt;
    const Vec2 w = b0 - a0;
    return std::make_pair(cross(w, db) / denom, cross(w, da) / denom);
}

std::optional<Vec2> segment_intersection(const Segment& s1, const Segment& s2) {
    const Vec2 d1 = s1.b - s1.a;
    const Vec2 d2 = s2.b - s2.a;
    const double l1 = d1.norm();
    const double l2 = d2.norm();
    if (auto hit = line_intersection(s1.a, d1, s2.a, d2)) {
        const double e1 = l1 > 0 ? kGeomTol / l1 : 0.0;
        const double e2 = l2 > 0 ? kGeomTol / l2 : 0.0;
        const auto [t, s] = *hit;
        if (t >= -e1 && t <= 1.0 + e1 && s >= -e2 && s <= 1.0 + e2) {
            return s1.a + d1 * std::clamp(t, 0.0, 1.0);
        }
        return std::nullopt;
    }
    if (l1 == 0.0) {
        return point_segment_distance(s1.a, s2) <= kGeomTol ? std::optional<Vec2>(s1.a) : std::nullopt;
    }
    // Parallel: only collinear overlap counts.
    if (std::abs(cross(d1, s2.a - s1.a)) > kGeomTol * l1) return std::nullopt;
    const double ta = dot(s2.a - s1.a, d1) / (l1 * l1);
    const double tb = dot(s2.b - s1.a, d1) / (l1 * l1);
    const double lo = std::max(0.0, std::min(ta, tb));
    const double hi = std::min(1.0, std::max(ta, tb));
    if (lo > hi + kGeomTol / l1) return std::nullopt;
    return s1.a + d1 * lo;
}

// --- Polygon ---------------------------------------------------------------

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
    for (const auto& v : vertices_) {
        if (!v.is_finite()) throw GeometryError("polygon vertex is not finite");
    }
    if (!(signed_area() > 0.0)) {
        throw GeometryError("polygon must be counter-clockwise with positive area");
    }
    if (!is_simple()) throw GeometryError("polygon is self-intersecting");
}

Polygon Polygon::unchecked(std::vector<Vec2> vertices) {
    Polygon p;
    p.vertices_ = std::move(vertices);
    return p;
}

Polygon Polygon::rectangle(Vec2 lo, Vec2 hi) {
    return Polygon({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
}

Polygon Polygon::square(Vec2 center, double side) {
    const Vec2 h{side / 2.0, side / 2.0};
    return rectangle(center - h, center + h);
}

double Polygon::signed_area() const {
    double a = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(vertices_[i], vertices_[(i + 1) % n]);
    return 0.5 * a;
}

Vec2 Polygon::centroid() const {
    const double a = signed_area();
    const std::size_t n = vertices_.size();
    if (a == 0.0) {
        Vec2 c;
        for (const auto& v : vertices_) c += v;
        return c / static_cast<double>(n);
    }
    Vec2 c;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = vertices_[i];
        const Vec2& q = vertices_[(i + 1) % n];
        c += (p + q) * cross(p, q);
    }
    return c / (6.0 * a);
}

bool Polygon::is_convex() const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = vertices_[i];
        const Vec2 b = vertices_[(i + 1) % n];
        const Vec2 c = vertices_[(i + 2) % n];
        if (cross(b - a, c - b) < -kGeomTol) return false;
    }
    return true;
}

bool Polygon::is_simple() const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Segment ei = edge(i);
        if (ei.length() <= kGeomTol) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segment_intersection(ei, edge(j))) return false;
        }
    }
    return true;
}

double Polygon::boundary_distance(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices_.size(); ++i) best = std::min(best, point_segment_distance(p, edge(i)));
    return best;
}

namespace {
bool crossing_inside(const std::vector<Vec2>& v, Vec2 p) {
    bool inside = false;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = v[i];
        const Vec2& b = v[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}
}  // namespace

bool Polygon::contains_strict(Vec2 p) const {
    if (on_boundary(p)) return false;
    return crossing_inside(vertices_, p);
}

bool Polygon::contains(Vec2 p, double tol) const {
    if (crossing_inside(vertices_, p)) return true;
    return boundary_distance(p) <= tol;
}

Aabb bounding_box(const Polygon& p) {
    Aabb b{p[0], p[0]};
    for (const auto& v : p.vertices()) {
        b.min.x = std::min(b.min.x, v.x);
        b.min.y = std::min(b.min.y, v.y);
        b.max.x = std::max(b.max.x, v.x);
        b.max.y = std::max(b.max.y, v.y);
    }
    return b;
}

// --- Ray casting -------------------------------------------------------------

namespace {

// Ray parameter of the hit against one segment, or infinity.
double ray_segment_param(Vec2 origin, Vec2 dir, const Segment& s) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(dir, e);
    const double len = e.norm();
    if (std::abs(denom) <= 1e-14 * len) return std::numeric_limits<double>::infinity();
    const Vec2 w = s.a - origin;
    const double t = cross(w, e) / denom;
    const double u = cross(w, dir) / denom;
    const double eu = kGeomTol / len;
    if (t < 0.0 || u < -eu || u > 1.0 + eu) return std::numeric_limits<double>::infinity();
    return t;
}

}  // namespace

RayHit ray_cast_unchecked(Vec2 origin, Vec2 direction, std::span<const Polygon> obstacles,
                          const Polygon& window) {
    RayHit best;
    best.distance = std::numeric_limits<double>::infinity();
    const double dn = direction.norm();
    const Vec2 dir = direction / dn;
    for (std::size_t j = 0; j < obstacles.size(); ++j) {
        const Polygon& poly = obstacles[j];
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const double t = ray_segment_param(origin, dir, poly.edge(i));
            if (t < best.distance) {
                best.distance = t;
                best.kind = HitKind::obstacle_edge;
                best.polygon = j;
                best.edge = i;
            }
        }
    }
    for (std::size_t i = 0; i < window.size(); ++i) {
        const double t = ray_segment_param(origin, dir, window.edge(i));
        // Obstacles win exact ties with the window.
        if (t < best.distance) {
            best.distance = t;
            best.kind = HitKind::window_edge;
            best.polygon = 0;
            best.edge = i;
        }
    }
    if (!std::isfinite(best.distance)) {
        throw GeometryError("ray_cast: ray does not hit the window boundary");
    }
    best.point = origin + dir * best.distance;
    return best;
}

RayHit ray_cast(Vec2 origin, Vec2 direction, std::span<const Polygon> obstacles, const Polygon& window) {
    if (!(direction.norm() > 0.0)) throw GeometryError("ray_cast: zero direction");
    if (!window.contains(origin)) throw GeometryError("ray_cast: origin outside window");
    for (const auto& o : obstacles) {
        if (o.contains_strict(origin)) throw GeometryError("ray_cast: origin inside an obstacle");
    }
    return ray_cast_unchecked(origin, direction, obstacles, window);
}

Polygon visibility_polygon(Vec2 origin, std::span<const Polygon> obstacles, const Polygon& window) {
    if (!window.contains_strict(origin)) throw GeometryError("visibility_polygon: origin not inside window");
    for (const auto& o : obstacles) {
        if (o.contains_strict(origin)) throw GeometryError("visibility_polygon: origin inside an obstacle");
    }

    struct Dir {
        double angle;
        Vec2 v;
    };
    std::vector<Dir> dirs;
    auto add_target = [&](Vec2 target) {
        const Vec2 d = target - origin;
        if (d.norm() <= kGeomTol) return;
        const Vec2 u = d.normalized();
        const double a = wrap_two_pi(u.angle());
        dirs.push_back({a, u});
        dirs.push_back({wrap_two_pi(a - kVertexRayOffset), rotate(u, -kVertexRayOffset)});
        dirs.push_back({wrap_two_pi(a + kVertexRayOffset), rotate(u, kVertexRayOffset)});
    };

    for (const auto& v : window.vertices()) add_target(v);
    for (const auto& o : obstacles) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            if (window.contains(o[i])) add_target(o[i]);
            const Segment e = o.edge(i);
            for (std::size_t k = 0; k < window.size(); ++k) {
                if (auto x = segment_intersection(e, window.edge(k))) add_target(*x);
            }
        }
    }
    std::sort(dirs.begin(), dirs.end(), [](const Dir& a, const Dir& b) { return a.angle < b.angle; });

    std::vector<Vec2> pts;
    pts.reserve(dirs.size());
    for (const auto& d : dirs) {
        const Vec2 p = ray_cast_unchecked(origin, d.v, obstacles, window).point;
        if (!pts.empty() && distance(pts.back(), p) <= kGeomTol) continue;
        pts.push_back(p);
    }
    while (pts.size() > 1 && distance(pts.front(), pts.back()) <= kGeomTol) pts.pop_back();

    // Drop vertices lying on the segment between their neighbours.
    bool changed = true;
    while (changed && pts.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size() && pts.size() > 3; ++i) {
            const std::size_t n = pts.size();
            const Vec2 a = pts[(i + n - 1) % n];
            const Vec2 b = pts[i];
            const Vec2 c = pts[(i + 1) % n];
            if (point_segment_distance(b, {a, c}) <= kGeomTol) {
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                --i;
            }
        }
    }
    if (pts.size() < 3) throw GeometryError("visibility_polygon: degenerate result");
    return Polygon::unchecked(std::move(pts));
}

std::vector<Vec2> segment_polygon_intersection(const Segment& s, const Polygon& p) {
    std::vector<std::pair<double, Vec2>> hits;
    const Vec2 d = s.b - s.a;
    const double l2 = d.squared_norm();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (auto x = segment_intersection(s, p.edge(i))) {
            const double t = l2 > 0 ? dot(*x - s.a, d) / l2 : 0.0;
            hits.emplace_back(t, *x);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vec2> out;
    for (const auto& [t, x] : hits) {
        if (!out.empty() && distance(out.back(), x) <= kGeomTol) continue;
        out.push_back(x);
    }
    return out;
}

namespace {
std::vector<double> crossing_params(const Segment& s, const Polygon& p) {
    std::vector<double> ts{0.0, 1.0};
    const Vec2 d = s.b - s.a;
    const double l2 = d.squared_norm();
    if (l2 == 0.0) return ts;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Segment e = p.edge(i);
        if (auto x = segment_intersection(s, e)) ts.push_back(std::clamp(dot(*x - s.a, d) / l2, 0.0, 1.0));
        // Vertices touching the segment split it as well.
        const double tv = dot(e.a - s.a, d) / l2;
        if (tv > 0.0 && tv < 1.0 && point_segment_distance(e.a, s) <= kGeomTol) ts.push_back(tv);
    }
    std::sort(ts.begin(), ts.end());
    return ts;
}
}  // namespace

bool segment_inside_polygon(const Segment& s, const Polygon& p) {
    if (!p.contains(s.a) || !p.contains(s.b)) return false;
    const auto ts = crossing_params(s, p);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] - ts[i] <= 0.0) continue;
        if (!p.contains(s.at(0.5 * (ts[i] + ts[i + 1])))) return false;
    }
    return true;
}

bool segment_crosses_interior(const Segment& s, const Polygon& p) {
    if (p.contains_strict(s.a) || p.contains_strict(s.b)) return true;
    const auto ts = crossing_params(s, p);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] - ts[i] <= 0.0) continue;
        if (p.contains_strict(s.at(0.5 * (ts[i] + ts[i + 1])))) return true;
    }
    return false;
}

Polygon inflate_convex(const Polygon& p, double radius, int arc_steps) {
    if (radius <= 0.0) return p;
    if (arc_steps < 1) arc_steps = 1;
    const std::size_t n = p.size();
    std::vector<Vec2> out;
    out.reserve(n * static_cast<std::size_t>(arc_steps));
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 v = p[i];
        const Vec2 d_in = (v - p[(i + n - 1) % n]).normalized();
        const Vec2 d_out = (p[(i + 1) % n] - v).normalized();
        const Vec2 n0{d_in.y, -d_in.x};
        const Vec2 n1{d_out.y, -d_out.x};
        const double turn = std::atan2(cross(n0, n1), dot(n0, n1));
        if (turn <= 1e-12) {
            out.push_back(v + n0 * radius);
            continue;
        }
        const double step = turn / arc_steps;
        const double r = radius / std::cos(0.5 * step);
        const double a0 = n0.angle();
        for (int k = 0; k < arc_steps; ++k) out.push_back(v + unit_from_angle(a0 + (k + 0.5) * step) * r);
    }
    return Polygon(std::move(out));
}

}  // namespace crp
