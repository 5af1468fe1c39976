#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace crp {

/// Tolerance for point-on-edge and degenerate-intersection tests (meters).
inline constexpr double kGeomTol = 1e-9;
/// Angular offset applied on both sides of every vertex ray in the
/// visibility sweep (radians).
inline constexpr double kVertexRayOffset = 1e-6;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

class GeometryError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
    constexpr double squared_norm() const { return x * x + y * y; }
    /// Unit vector; throws GeometryError for the zero vector.
    Vec2 normalized() const;
    double angle() const { return std::atan2(y, x); }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }
/// 90-degree counter-clockwise rotation, exact.
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

/// Wraps an angle to [0, 2*pi).
double wrap_two_pi(double a);
/// Wraps an angle to (-pi, pi].
double wrap_pi(double a);
/// Unsigned angle between two non-zero vectors, in [0, pi].
double angle_between(Vec2 a, Vec2 b);

Vec2 rotate(Vec2 v, double angle);
/// Orthogonal projection of v onto the line spanned by `onto`.
Vec2 project(Vec2 v, Vec2 onto);

struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return distance(a, b); }
    Vec2 direction() const { return (b - a).normalized(); }
    Vec2 at(double s) const { return a + (b - a) * s; }
};

/// Closest point on the segment to p.
Vec2 closest_point(const Segment& s, Vec2 p);
double point_segment_distance(Vec2 p, const Segment& s);
/// Distance from p to the ray origin + t*dir, t >= 0 (dir need not be unit).
double point_ray_distance(Vec2 p, Vec2 origin, Vec2 dir);

/// Parameters (t along ray a, s along ray/segment b) of the intersection of
/// two lines a0 + t*da and b0 + s*db. Empty if (nearly) parallel.
std::optional<std::pair<double, double>> line_intersection(Vec2 a0, Vec2 da, Vec2 b0, Vec2 db);

/// Proper or touching intersection of two segments. Collinear overlaps
/// report the overlap endpoint nearest to s1.a.
std::optional<Vec2> segment_intersection(const Segment& s1, const Segment& s2);

/// Simple polygon with counter-clockwise vertex order.
class Polygon {
public:
    Polygon() = default;
    /// Validates (>= 3 vertices, finite, positive signed area, simple).
    explicit Polygon(std::vector<Vec2> vertices);

    /// Builds without validation; used for intermediate results known to be
    /// well-formed by construction.
    static Polygon unchecked(std::vector<Vec2> vertices);
    static Polygon rectangle(Vec2 min_corner, Vec2 max_corner);
    static Polygon square(Vec2 center, double side);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Vec2& operator[](std::size_t i) const { return vertices_[i]; }
    Segment edge(std::size_t i) const { return {vertices_[i], vertices_[(i + 1) % vertices_.size()]}; }

    double signed_area() const;
    double area() const { return std::abs(signed_area()); }
    Vec2 centroid() const;
    bool is_convex() const;
    bool is_simple() const;

    /// Strict interior test (points within kGeomTol of the boundary are
    /// not inside).
    bool contains_strict(Vec2 p) const;
    /// Closed test: interior or within `tol` of the boundary.
    bool contains(Vec2 p, double tol = kGeomTol) const;
    double boundary_distance(Vec2 p) const;
    bool on_boundary(Vec2 p, double tol = kGeomTol) const { return boundary_distance(p) <= tol; }

private:
    std::vector<Vec2> vertices_;
};

enum class HitKind { obstacle_edge, window_edge };

struct RayHit {
    Vec2 point;
    double distance = 0.0;
    HitKind kind = HitKind::window_edge;
    std::size_t polygon = 0;  // obstacle index (obstacle_edge only)
    std::size_t edge = 0;     // edge index within that polygon / window
};

/// Nearest intersection of the ray origin + t*direction with obstacle edges
/// or the window boundary. Throws GeometryError if the origin lies inside an
/// obstacle or outside the window.
RayHit ray_cast(Vec2 origin, Vec2 direction, std::span<const Polygon> obstacles, const Polygon& window);

/// Same as ray_cast, skipping the precondition checks. Intended for hot
/// loops that already validated the origin.
RayHit ray_cast_unchecked(Vec2 origin, Vec2 direction, std::span<const Polygon> obstacles,
                          const Polygon& window);

/// Star-shaped region of the window visible from origin.
Polygon visibility_polygon(Vec2 origin, std::span<const Polygon> obstacles, const Polygon& window);

/// Intersection points of s with the boundary of p, ordered from s.a to s.b.
std::vector<Vec2> segment_polygon_intersection(const Segment& s, const Polygon& p);

/// True if the closed segment stays inside the closed polygon (tolerance
/// kGeomTol).
bool segment_inside_polygon(const Segment& s, const Polygon& p);

/// True if the segment passes through the interior of a convex polygon.
bool segment_crosses_interior(const Segment& s, const Polygon& p);

/// Outward offset of a convex polygon by radius r. Corners are rounded with
/// `arc_steps` segments placed so the result contains the exact offset set.
Polygon inflate_convex(const Polygon& p, double radius, int arc_steps = 3);

/// Axis-aligned bounding box.
struct Aabb {
    Vec2 min;
    Vec2 max;
    bool overlaps(const Aabb& o, double margin = 0.0) const {
        return min.x - margin <= o.max.x && o.min.x - margin <= max.x && min.y - margin <= o.max.y &&
               o.min.y - margin <= max.y;
    }
};
Aabb bounding_box(const Polygon& p);

}  // namespace crp
