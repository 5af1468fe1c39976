#include <random>

#include "crp/controller.hpp"
#include "doctest.h"

using namespace crp;

namespace {

TimedTrajectory line_traj(Vec2 a, Vec2 b, int n = 50) {
    const ControlPoints wp = make_control_points(a, b - a, b, b - a);
    TrajectoryParams p;
    p.n_samples = n;
    return make_trajectory(wp, p, 0.0);
}

double dist_to_polyline(const std::vector<Vec2>& pl, Vec2 p) {
    double best = INFINITY;
    for (std::size_t k = 1; k < pl.size(); ++k) best = std::min(best, point_segment_distance(p, {pl[k - 1], pl[k]}));
    return best;
}

}  // namespace

TEST_CASE("maneuver selection by side of the chord") {
    const ControlPoints wp{Vec2{0, 0}, Vec2{1, 0}, Vec2{2, 0}, Vec2{3, 0}};
    CHECK(select_maneuver(wp, std::nullopt) == Mode::free_space);
    CHECK(select_maneuver(wp, Vec2{1.5, 0.5}) == Mode::flow_through);
    CHECK(select_maneuver(wp, Vec2{1.5, -0.5}) == Mode::boundary_following);
    CHECK(select_maneuver(wp, Vec2{1.5, 0.0}) == Mode::flow_through);
    const ControlPoints degenerate{Vec2{1, 1}, Vec2{1, 1}, Vec2{1, 1}, Vec2{1, 1}};
    CHECK_THROWS_AS(select_maneuver(degenerate, Vec2{0, 0}), std::invalid_argument);
    CHECK(std::string(to_string(Mode::boundary_following)) != std::string(to_string(Mode::flow_through)));
    CHECK(std::string(to_string(Switch::on)) != std::string(to_string(Switch::off)));
}

TEST_CASE("first contact with boundary polylines") {
    const TimedTrajectory t = line_traj({0, 0}, {2, 0});
    const std::vector<std::vector<Vec2>> walls{{{1.5, 1}, {1.5, -1}}, {{1.0, 1}, {1.0, -1}}};
    const auto c = first_contact(t, walls);
    REQUIRE(c);
    CHECK(c->boundary == 1);
    CHECK(distance(c->point, {1, 0}) < 1e-9);
    CHECK(t.samples[c->sample - 1].pos.x <= 1.0);
    CHECK(t.samples[c->sample].pos.x >= 1.0);

    // Touching at the start sample does not count.
    const std::vector<std::vector<Vec2>> at_start{{{0, 1}, {0, -1}}};
    CHECK_FALSE(first_contact(t, at_start));
    CHECK_FALSE(first_contact(t, {{{0, 1}, {2, 1}}}));
}

TEST_CASE("obstacle side and projection") {
    // Obstacle on the right of a polyline running +x: the half-plane y < 0.
    const std::vector<Vec2> pl{{0, 0}, {1, 0}, {2, 0}};
    CHECK(on_obstacle_side(pl, {0.5, -0.1}));
    CHECK_FALSE(on_obstacle_side(pl, {0.5, 0.1}));
    CHECK_FALSE(on_obstacle_side(pl, {0.5, 0.0}));
    CHECK(distance(project_onto_polyline(pl, {1.5, 3}), {1.5, 0}) < 1e-12);
    CHECK(distance(project_onto_polyline(pl, {-1, -1}), {0, 0}) < 1e-12);
    CHECK_THROWS_AS(project_onto_polyline({}, {0, 0}), std::invalid_argument);

    // Convex corner (right turn): only the quadrant behind both edges is inside.
    const std::vector<Vec2> corner{{0, 1}, {1, 1}, {1, 0}};
    CHECK(on_obstacle_side(corner, {0.9, 0.9}));
    CHECK_FALSE(on_obstacle_side(corner, {1.2, 1.2}));
    CHECK_FALSE(on_obstacle_side(corner, {1.1, 0.5}));
}

TEST_CASE("boundary-following reference") {
    // Spline dips below y = 0 between x = 1 and x = 2; obstacle is y < 0.
    const ControlPoints wp{Vec2{0, 0.3}, Vec2{1, -0.6}, Vec2{2, -0.6}, Vec2{3, 0.3}};
    TrajectoryParams p;
    p.n_samples = 61;
    const TimedTrajectory spl = make_trajectory(wp, p, 0.0);
    const std::vector<Vec2> wall{{-1, 0}, {4, 0}};
    const auto c = first_contact(spl, {wall});
    REQUIRE(c);
    const BoundaryReference ref = boundary_following_reference(spl, wall, c->point);
    CHECK(ref.engage < ref.disengage);
    REQUIRE(ref.q_bound.samples.size() == spl.samples.size());
    for (std::size_t i = 0; i < spl.samples.size(); ++i) {
        const Vec2 q = ref.q_bound.samples[i].pos;
        CHECK(ref.q_bound.samples[i].t == spl.samples[i].t);
        if (i >= ref.engage && i <= ref.disengage) {
            CHECK(dist_to_polyline(wall, q) < 1e-12);
        } else {
            CHECK(q == spl.samples[i].pos);
        }
        CHECK_FALSE(on_obstacle_side(wall, q));
    }
    CHECK(distance(ref.p_d, ref.q_bound.samples[ref.disengage].pos) == 0.0);
    CHECK(ref.p_d.x > c->point.x);
}

TEST_CASE("flow-through reference lies on the chord") {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 100; ++i) {
        const ControlPoints wp{Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}};
        if (distance(wp[0], wp[3]) < 0.1) continue;
        const TimedTrajectory spl = make_trajectory(wp, {}, 0.0);
        const TimedTrajectory ft = flow_through_reference(spl, wp);
        const Vec2 d = (wp[3] - wp[0]).normalized();
        for (std::size_t k = 0; k < ft.samples.size(); ++k) {
            CHECK(std::abs(cross(d, ft.samples[k].pos - wp[0])) < 1e-9);
            // Foot of the perpendicular.
            CHECK(std::abs(dot(d, ft.samples[k].pos - spl.samples[k].pos)) < 1e-9);
        }
    }
}

TEST_CASE("switch automaton") {
    SUBCASE("boundary variant turns on at p_c and off at p_d, then latches") {
        SwitchAutomaton a({1, 0}, Vec2{2, 0}, 0.04);
        CHECK(a.update({0.5, 0}) == Switch::off);
        CHECK(a.update({0.97, 0}) == Switch::on);
        CHECK(a.update({1.5, 0}) == Switch::on);
        CHECK(a.update({1.99, 0}) == Switch::off);
        CHECK(a.update({1.0, 0}) == Switch::off);
    }
    SUBCASE("flow-through variant never turns off") {
        SwitchAutomaton a({1, 0}, std::nullopt, 0.04);
        CHECK(a.update({1.0, 0.01}) == Switch::on);
        for (double x : {2.0, 5.0, 1.0, -3.0}) CHECK(a.update({x, 0}) == Switch::on);
    }
    SUBCASE("fast motion cannot skip the trigger") {
        SwitchAutomaton a({1, 0}, Vec2{2, 0}, 0.04);
        CHECK(a.update({0.5, 0}, {1.5, 0.02}) == Switch::on);
        CHECK(a.update({1.5, 0.02}, {2.5, 0}) == Switch::off);
    }
    SUBCASE("default automaton stays off") {
        SwitchAutomaton a;
        CHECK(a.state() == Switch::off);
    }
}

TEST_CASE("PID tracking") {
    const TimedTrajectory t = line_traj({0, 0}, {2, 0});
    PidGains g;
    CHECK_NOTHROW(g.validate());
    PidGains bad;
    bad.kp = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(PidTracker(g, 0.0), std::invalid_argument);

    // On the reference the command is the feed-forward velocity.
    const double tm = 0.3 * t.duration;
    const Vec2 cmd = track(t, tm, RobotState::from(t.position_at(tm), {}), g, 0.05, 1.2);
    CHECK(distance(cmd, t.velocity_at(tm)) < 1e-9);

    // Large error saturates at v_max.
    const Vec2 far = track(t, tm, RobotState::from({0, 10}, {}), g, 0.05, 1.2);
    CHECK(far.norm() == doctest::Approx(1.2));
    CHECK_THROWS_AS(track(t, tm, RobotState{}, g, 0.0, 1.2), std::invalid_argument);

    // Closed loop from an offset start converges onto the path.
    PidTracker pid(g, 1.2);
    Vec2 p{0, 0.2};
    const double dt = 0.01;
    for (double s = 0.0; s < t.duration + 1.0; s += dt) p += pid.track(t, s, p, dt) * dt;
    CHECK(distance(p, t.end()) < 0.02);
}

TEST_CASE("controller plan handling") {
    Controller c({});
    CHECK_FALSE(c.has_plan());
    CHECK(c.command({0, 0}, 0.0, 0.05) == Vec2{});
    CHECK_THROWS_AS(Controller(ControllerParams{{}, 1.2, 0.0}), std::invalid_argument);

    SUBCASE("free-space plan tracks the spline") {
        const TimedTrajectory t = line_traj({0, 0}, {1, 0});
        c.set_plan(t, std::nullopt, {}, 2.0);
        CHECK(c.state().mode == Mode::free_space);
        CHECK(&c.active_reference() == &c.spline());
        CHECK(c.events().size() == 1);
        const Vec2 v = c.command({0, 0}, 2.0 + 0.1 * t.duration, 0.05);
        CHECK(v.x > 0.0);
    }

    SUBCASE("boundary plan switches on at contact and off at departure") {
        const ControlPoints wp{Vec2{0, 0.3}, Vec2{1, -0.6}, Vec2{2, -0.6}, Vec2{3, 0.3}};
        const TimedTrajectory spl = make_trajectory(wp, {}, 0.0);
        const std::vector<Vec2> wall{{-1, 0}, {4, 0}};
        const auto contact = first_contact(spl, {wall});
        REQUIRE(contact);
        c.set_plan(spl, contact, wall, 0.0);
        REQUIRE(c.state().mode == Mode::boundary_following);
        REQUIRE(c.state().p_d);

        Vec2 p = spl.start();
        const double dt = 0.01;
        bool was_on = false;
        double min_y = INFINITY;
        for (double s = 0.0; s < spl.duration + 1.0; s += dt) {
            p += c.command(p, s, dt) * dt;
            if (c.state().sw == Switch::on) {
                was_on = true;
                min_y = std::min(min_y, p.y);
            }
        }
        CHECK(was_on);
        CHECK(c.state().sw == Switch::off);
        // While switched on the robot rides the wall instead of dipping under it.
        CHECK(min_y > -0.05);
        CHECK(c.events().size() == 3);
    }
}
