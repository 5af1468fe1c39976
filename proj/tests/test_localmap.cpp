#include <random>

#include "crp/localmap.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace crp;

namespace {

double polyline_length(const std::vector<Vec2>& pl) {
    double l = 0.0;
    for (std::size_t i = 1; i < pl.size(); ++i) l += distance(pl[i - 1], pl[i]);
    return l;
}

double perimeter(const Polygon& p) {
    double l = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) l += p.edge(i).length();
    return l;
}

bool on_segment(Vec2 p, Vec2 a, Vec2 b, double tol) {
    const Vec2 d = b - a;
    const double t = std::clamp(dot(p - a, d) / d.squared_norm(), 0.0, 1.0);
    return distance(p, a + d * t) <= tol;
}

bool on_polygon_edges(Vec2 p, const Polygon& poly, double tol) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        if (on_segment(p, poly[i], poly[(i + 1) % poly.size()], tol)) return true;
    }
    return false;
}

// Oracle classification of a free-space edge from the raw scene.
EdgeClass classify(const Segment& e, const std::vector<Polygon>& obstacles, const Polygon& window) {
    const double tol = 1e-7;
    for (const auto& o : obstacles) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            const Vec2 a = o[i];
            const Vec2 b = o[(i + 1) % o.size()];
            if (on_segment(e.a, a, b, tol) && on_segment(e.b, a, b, tol)) return EdgeClass::observed_boundary;
        }
    }
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (on_segment(e.a, window[i], window[(i + 1) % window.size()], tol) &&
            on_segment(e.b, window[i], window[(i + 1) % window.size()], tol))
            return EdgeClass::window_arc;
    }
    return EdgeClass::frontier;
}

}  // namespace

TEST_CASE("empty window has no frontiers or boundaries") {
    const LocalMap m = build_local_map({0, 0}, 2.0, {});
    CHECK(m.frontiers.empty());
    CHECK(m.observed_boundaries.empty());
    CHECK(m.predicted_boundaries.empty());
    CHECK(m.free_space.area() == doctest::Approx(m.window.area()).epsilon(1e-12));
    // The visible rim is still available for exploration, one arc per side.
    CHECK(m.window_arcs.size() == 4);
}

TEST_CASE("single obstacle: two frontiers and one chain") {
    const std::vector<Polygon> scene{Polygon::square({0.3, 0.1}, 0.3)};
    const LocalMap m = build_local_map({-0.4, -0.2}, 2.0, scene);
    CHECK(m.frontiers.size() == 2);
    CHECK(m.observed_boundaries.size() == 1);
    for (const auto& f : m.frontiers) {
        CHECK(f.length > 0.0);
        CHECK(f.start_kind != EndpointKind::free);
        CHECK(f.end_kind != EndpointKind::free);
    }
}

TEST_CASE("square seen from the left: predicted tangents along top and bottom edges") {
    const std::vector<Polygon> scene{Polygon::square({0.3, 0.0}, 0.3)};
    const LocalMap m = build_local_map({-0.6, 0.0}, 2.0, scene);
    REQUIRE(m.predicted_boundaries.size() == 2);
    for (const auto& pb : m.predicted_boundaries) {
        CHECK(pb.kind == JunctionKind::silhouette);
        CHECK(std::abs(pb.tangent.norm() - 1.0) < 1e-12);
        // Along +x: parallel to the hidden top/bottom faces, away from the robot.
        CHECK(pb.tangent.x == doctest::Approx(1.0));
        CHECK(std::abs(pb.tangent.y) < 1e-9);
        CHECK(pb.anchor.x == doctest::Approx(0.15));
        CHECK(std::abs(std::abs(pb.anchor.y) - 0.15) < 1e-9);
    }
    CHECK(m.predicted_boundaries[0].anchor.y != doctest::Approx(m.predicted_boundaries[1].anchor.y));
}

TEST_CASE("no obstacle in the window: no predicted boundaries") {
    const std::vector<Polygon> far{Polygon::square({3.0, 3.0}, 0.5)};
    const LocalMap m = build_local_map({0, 0}, 2.0, far);
    CHECK(m.predicted_boundaries.empty());
    CHECK(extract_predicted_boundaries(m).empty());
}

TEST_CASE("two separated obstacles give two predicted pairs") {
    const std::vector<Polygon> scene{Polygon::rectangle({0.2, 0.25}, {0.5, 0.6}),
                                     Polygon::rectangle({0.2, -0.6}, {0.5, -0.25})};
    const LocalMap m = build_local_map({-0.3, 0.0}, 2.0, scene);
    CHECK(m.observed_boundaries.size() == 2);
    int silhouettes = 0;
    std::vector<int> per_chain(m.observed_boundaries.size(), 0);
    for (const auto& pb : m.predicted_boundaries) {
        if (pb.kind != JunctionKind::silhouette) continue;
        ++silhouettes;
        ++per_chain.at(pb.chain);
    }
    CHECK(silhouettes == 4);
    CHECK(per_chain[0] == 2);
    CHECK(per_chain[1] == 2);
}

TEST_CASE("predicted boundaries anchor at frontier and chain endpoints") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        const auto sc = crp::testing::random_scene(rng, 3);
        const LocalMap m = build_local_map(sc.robot, 2.0, sc.obstacles);
        for (const auto& pb : m.predicted_boundaries) {
            CHECK(std::abs(pb.tangent.norm() - 1.0) < 1e-9);
            const auto& chain = m.observed_boundaries.at(pb.chain).polyline;
            const Vec2 end = pb.at_chain_end ? chain.back() : chain.front();
            CHECK(distance(end, pb.anchor) < 1e-9);
            if (pb.kind != JunctionKind::silhouette) continue;
            bool touches = false;
            for (const auto& f : m.frontiers) {
                if (distance(f.polyline.front(), pb.anchor) < 1e-7 || distance(f.polyline.back(), pb.anchor) < 1e-7) {
                    touches = true;
                    // E differs from the frontier direction.
                    const Vec2 fd = f.polyline.back() - f.polyline.front();
                    CHECK(angle_between(fd, pb.tangent) > 1e-6);
                    CHECK(angle_between(fd, pb.tangent) < kPi - 1e-6);
                }
            }
            CHECK(touches);
        }
    }
}

TEST_CASE("boundary partition on random convex scenes") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        const auto sc = crp::testing::random_scene(rng, 4);
        const LocalMap m = build_local_map(sc.robot, 2.0, sc.obstacles);
        REQUIRE(m.edge_class.size() == m.free_space.size());
        for (std::size_t k = 0; k < m.free_space.size(); ++k) {
            const Segment e = m.free_space.edge(k);
            if (e.length() < 1e-9) continue;
            CHECK(m.edge_class[k] == classify(e, m.obstacles, m.window));
        }
        double total = 0.0;
        for (const auto& f : m.frontiers) total += polyline_length(f.polyline);
        for (const auto& f : m.window_arcs) total += polyline_length(f.polyline);
        for (const auto& c : m.observed_boundaries) total += polyline_length(c.polyline);
        CHECK(total == doctest::Approx(perimeter(m.free_space)).epsilon(1e-9));

        for (const auto& f : m.frontiers) {
            for (const Vec2& v : f.polyline) CHECK(on_polygon_edges(v, m.free_space, 1e-9));
        }
        for (const auto& c : m.observed_boundaries) {
            for (const Vec2& v : c.polyline) CHECK(on_polygon_edges(v, m.obstacles.at(c.obstacle), 1e-7));
        }
    }
}

TEST_CASE("window growth never hides visible boundary") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 20; ++i) {
        const auto sc = crp::testing::random_scene(rng, 3, 1.6);
        const LocalMap small = build_local_map(sc.robot, 1.6, sc.obstacles);
        const LocalMap big = build_local_map(sc.robot, 2.4, sc.obstacles);
        for (const auto& c : small.observed_boundaries) {
            for (std::size_t k = 1; k < c.polyline.size(); ++k) {
                const Vec2 mid = (c.polyline[k - 1] + c.polyline[k]) * 0.5;
                bool found = false;
                for (const auto& cb : big.observed_boundaries) {
                    for (std::size_t j = 1; j < cb.polyline.size(); ++j) {
                        if (on_segment(mid, cb.polyline[j - 1], cb.polyline[j], 1e-7)) found = true;
                    }
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("narrow region angle") {
    const LocalMap open = build_local_map({0, 0}, 2.0, {});
    CHECK(narrow_region_angle({0.5, 0.2}, open, 0.3) == doctest::Approx(kTwoPi));
    CHECK_THROWS_AS(narrow_region_angle({0.5, 0.2}, open, 0.0), std::invalid_argument);

    SUBCASE("corridor: wider is more open") {
        double prev = 0.0;
        for (double w : {0.1, 0.15, 0.2, 0.3, 0.4, 0.5}) {
            const std::vector<Polygon> walls{Polygon::rectangle({-0.5, w / 2}, {0.9, w / 2 + 0.1}),
                                             Polygon::rectangle({-0.5, -w / 2 - 0.1}, {0.9, -w / 2})};
            const LocalMap m = build_local_map({-0.8, 0.0}, 2.0, walls);
            const double th = narrow_region_angle({0.1, 0.0}, m, 0.3);
            CHECK(th > prev);
            CHECK(th <= kTwoPi);
            prev = th;
        }
    }

    SUBCASE("narrow gap is tighter than the wide opening") {
        const std::vector<Polygon> scene{Polygon::rectangle({0.0, 0.05}, {0.4, 0.5}),
                                         Polygon::rectangle({0.0, -0.5}, {0.4, -0.05})};
        const LocalMap m = build_local_map({-0.7, 0.0}, 2.0, scene);
        const double gap = narrow_region_angle({0.2, 0.0}, m, 0.3);
        const double wide = narrow_region_angle({0.2, 0.75}, m, 0.3);
        CHECK(gap < wide);
        CHECK(gap > 0.0);
    }
}

TEST_CASE("goal in free space") {
    const std::vector<Polygon> scene{Polygon::square({0.3, 0.0}, 0.3)};
    const LocalMap m = build_local_map({-0.6, 0.0}, 2.0, scene);
    CHECK(goal_in_free_space(m, {-0.6, 0.0}));
    CHECK_FALSE(goal_in_free_space(m, {5.0, 0.0}));
    CHECK_FALSE(goal_in_free_space(m, {0.8, 0.0}));  // in the shadow
    CHECK(goal_in_free_space(m, {0.2, 0.8}));
}

TEST_CASE("degenerate input raises MapError") {
    const std::vector<Polygon> scene{Polygon::square({0.0, 0.0}, 0.4)};
    CHECK_THROWS(build_local_map({0.0, 0.0}, 2.0, scene));
}
