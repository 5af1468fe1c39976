#include "crp/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace crp {

using nlohmann::json;

namespace {

Polygon polygon_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw SimulationError(std::string("world: ") + what + " must be a list of [x, y] points");
    std::vector<Vec2> pts;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) throw SimulationError(std::string("world: bad point in ") + what);
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    double area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) area += cross(pts[i], pts[(i + 1) % pts.size()]);
    if (area < 0.0) std::reverse(pts.begin(), pts.end());
    try {
        return Polygon(std::move(pts));
    } catch (const GeometryError& e) {
        throw SimulationError(std::string("world: invalid ") + what + ": " + e.what());
    }
}

json polygon_to_json(const Polygon& p) {
    json out = json::array();
    for (const auto& v : p.vertices()) out.push_back({v.x, v.y});
    return out;
}

Vec2 vec_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw SimulationError(std::string("world: ") + what + " must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
    for (const auto& v : a.vertices()) {
        if (b.contains(v, 0.0)) return true;
    }
    for (const auto& v : b.vertices()) {
        if (a.contains(v, 0.0)) return true;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (segment_intersection(a.edge(i), b.edge(j))) return true;
        }
    }
    return false;
}

}  // namespace

void World::validate() const {
    const Aabb box = bounding_box(bounds);
    const double box_area = (box.max.x - box.min.x) * (box.max.y - box.min.y);
    if (bounds.size() != 4 || std::abs(bounds.area() - box_area) > 1e-9 * std::max(1.0, box_area)) {
        throw SimulationError("world: bounds must be an axis-aligned rectangle");
    }
    if (!(robot_radius > 0.0)) throw SimulationError("world: robot_radius must be positive");
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        const auto& o = obstacles[i];
        if (!o.is_convex()) throw SimulationError("world: obstacle " + std::to_string(i) + " is not convex");
        for (const auto& v : o.vertices()) {
            if (!bounds.contains(v)) throw SimulationError("world: obstacle " + std::to_string(i) + " leaves bounds");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (polygons_overlap(o, obstacles[j])) {
                throw SimulationError("world: obstacles " + std::to_string(j) + " and " + std::to_string(i) +
                                      " intersect");
            }
        }
    }
    for (const auto& [p, what] : {std::pair{start, "start"}, std::pair{goal, "goal"}}) {
        if (!bounds.contains_strict(p)) throw SimulationError(std::string("world: ") + what + " outside bounds");
        for (const auto& o : obstacles) {
            if (o.contains(p)) throw SimulationError(std::string("world: ") + what + " inside an obstacle");
        }
    }
}

World parse_world(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SimulationError(std::string("world: parse error: ") + e.what());
    }
    World w;
    try {
        w.name = j.value("name", "");
        w.bounds = polygon_from_json(j.at("bounds"), "bounds");
        for (const auto& o : j.value("obstacles", json::array())) w.obstacles.push_back(polygon_from_json(o, "obstacle"));
        w.start = vec_from_json(j.at("start"), "start");
        w.goal = vec_from_json(j.at("goal"), "goal");
        w.robot_radius = j.value("robot_radius", 0.08);
        w.rng_seed = j.value("rng_seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw SimulationError(std::string("world: ") + e.what());
    }
    w.validate();
    return w;
}

std::string serialize_world(const World& world) {
    json j;
    j["name"] = world.name;
    j["bounds"] = polygon_to_json(world.bounds);
    j["obstacles"] = json::array();
    for (const auto& o : world.obstacles) j["obstacles"].push_back(polygon_to_json(o));
    j["start"] = {world.start.x, world.start.y};
    j["goal"] = {world.goal.x, world.goal.y};
    j["robot_radius"] = world.robot_radius;
    j["rng_seed"] = world.rng_seed;
    return j.dump(2) + "\n";
}

World load_world(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SimulationError("cannot open world file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_world(ss.str());
    } catch (const SimulationError& e) {
        throw SimulationError(path.string() + ": " + e.what());
    }
}

SimWorld make_sim_world(const World& world, int arc_steps) {
    world.validate();
    SimWorld sim;
    sim.world = world;
    const double r = world.robot_radius;
    for (const auto& o : world.obstacles) sim.inflated.push_back(inflate_convex(o, r, arc_steps));

    const Aabb b = bounding_box(world.bounds);
    const Vec2 lo{b.min.x + r, b.min.y + r};
    const Vec2 hi{b.max.x - r, b.max.y - r};
    if (!(lo.x < hi.x && lo.y < hi.y)) throw SimulationError("world: bounds too small for the robot");
    const double t = std::max(1.0, std::max(hi.x - lo.x, hi.y - lo.y));
    // Bottom and top span the corners; left and right fill in between.
    sim.inflated.push_back(Polygon::rectangle({lo.x - t, lo.y - t}, {hi.x + t, lo.y}));
    sim.inflated.push_back(Polygon::rectangle({lo.x - t, hi.y}, {hi.x + t, hi.y + t}));
    sim.inflated.push_back(Polygon::rectangle({lo.x - t, lo.y}, {lo.x, hi.y}));
    sim.inflated.push_back(Polygon::rectangle({hi.x, lo.y}, {hi.x + t, hi.y}));
    for (const auto& p : sim.inflated) sim.boxes.push_back(bounding_box(p));
    return sim;
}

StepResult step(const SimWorld& sim, const RobotState& state, Vec2 velocity, double dt, const CostParams& restitution) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    constexpr int kMaxContacts = 8;
    constexpr double kBackoff = 1e-9;
    constexpr double kPenetrationTol = 1e-6;

    const Vec2 p0 = state.position();
    Vec2 p = p0;
    Vec2 v = velocity;
    double remaining = dt;
    StepResult out;
    for (int bounce = 0; bounce <= kMaxContacts; ++bounce) {
        const Vec2 d = v * remaining;
        if (d.norm() == 0.0) break;
        const Aabb swept{{std::min(p.x, p.x + d.x), std::min(p.y, p.y + d.y)},
                         {std::max(p.x, p.x + d.x), std::max(p.y, p.y + d.y)}};
        double best_s = std::numeric_limits<double>::infinity();
        std::size_t best_poly = 0;
        Vec2 best_e, best_n;
        for (std::size_t k = 0; k < sim.inflated.size(); ++k) {
            if (!sim.boxes[k].overlaps(swept, 1e-6)) continue;
            const Polygon& poly = sim.inflated[k];
            for (std::size_t i = 0; i < poly.size(); ++i) {
                const Segment seg = poly.edge(i);
                const double len = distance(seg.a, seg.b);
                if (len <= 0.0) continue;
                const Vec2 e = (seg.b - seg.a) / len;
                const Vec2 n{e.y, -e.x};
                const double approach = dot(d, n);
                if (approach >= 0.0) continue;
                const double h = dot(p - seg.a, n);
                if (h < -kPenetrationTol) continue;
                const double s = std::max(0.0, h / -approach);
                if (s > 1.0 || s >= best_s) continue;
                const double u = dot(p + d * s - seg.a, e);
                if (u < -kGeomTol || u > len + kGeomTol) continue;
                best_s = s;
                best_poly = k;
                best_e = e;
                best_n = n;
            }
        }
        if (!std::isfinite(best_s)) {
            p += d;
            out.displacement += d.norm();
            remaining = 0.0;
            break;
        }
        const Vec2 q = p + d * best_s;
        out.displacement += d.norm() * best_s;
        const Vec2 v_after = reflect_velocity(v, best_e, restitution);
        if (!out.collision) out.collision = CollisionEvent{0.0, q, best_poly, v, v_after, false};
        p = q + best_n * kBackoff;
        remaining *= 1.0 - best_s;
        v = v_after;
        if (bounce == kMaxContacts) remaining = 0.0;
    }

    for (const auto& poly : sim.inflated) {
        if (poly.contains_strict(p) && poly.boundary_distance(p) > kPenetrationTol) {
            // Numerical corner case: refuse the move.
            p = p0;
            v = {};
            out.displacement = 0.0;
            break;
        }
    }
    out.state = RobotState::from(p, v);
    return out;
}

Vec2 apply_actuation_noise(Vec2 cmd, const NoiseParams& noise, double v_max, std::mt19937_64& rng) {
    if (noise.actuation_sigma <= 0.0) return cmd;
    std::normal_distribution<double> n(0.0, noise.actuation_sigma);
    const double nx = n(rng);
    const double ny = n(rng);
    Vec2 v = cmd + Vec2{nx, ny};
    const double s = v.norm();
    if (s > v_max) v = v * (v_max / s);
    return v;
}

SensedScene sense(const SimWorld& sim, Vec2 position, double window_size, SenseMode mode, int n_beams) {
    const Polygon window = Polygon::square(position, window_size);
    const Aabb wbox = bounding_box(window);
    SensedScene near;
    for (std::size_t k = 0; k < sim.inflated.size(); ++k) {
        if (!sim.boxes[k].overlaps(wbox)) continue;
        near.polygons.push_back(sim.inflated[k]);
        near.ids.push_back(k);
    }
    if (mode == SenseMode::exact) return near;
    if (n_beams < 1) throw std::invalid_argument("sense: n_beams must be >= 1");
    std::vector<bool> hit(near.polygons.size(), false);
    for (int i = 0; i < n_beams; ++i) {
        const RayHit h = ray_cast_unchecked(position, unit_from_angle(kTwoPi * i / n_beams), near.polygons, window);
        if (h.kind == HitKind::obstacle_edge) hit[h.polygon] = true;
    }
    SensedScene out;
    for (std::size_t i = 0; i < hit.size(); ++i) {
        if (!hit[i]) continue;
        out.polygons.push_back(near.polygons[i]);
        out.ids.push_back(near.ids[i]);
    }
    return out;
}

GoalReading goal_sensor(const World& world, Vec2 position, const NoiseParams& noise, std::mt19937_64* rng) {
    const Vec2 d = world.goal - position;
    GoalReading r{d.norm() > 0.0 ? d.angle() : 0.0, d.norm()};
    if (rng) {
        if (noise.goal_bearing_sigma > 0.0) r.bearing += std::normal_distribution<double>(0.0, noise.goal_bearing_sigma)(*rng);
        if (noise.goal_range_sigma > 0.0) {
            r.range = std::max(0.0, r.range + std::normal_distribution<double>(0.0, noise.goal_range_sigma)(*rng));
        }
    }
    return r;
}

PlannerConfig PlannerConfig::defaults_for(const World& world) {
    PlannerConfig cfg;
    cfg.trajectory.v_max = cfg.sampling.v_max;
    cfg.controller.v_max = cfg.sampling.v_max;
    cfg.controller.delta = world.robot_radius / 2.0;
    return cfg;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

CandidateState fallback_target(const LocalMap& map, Vec2 p, Vec2 goal) {
    CandidateState c;
    c.pos = p;
    const Vec2 d = goal - p;
    if (d.norm() <= kGeomTol) return c;
    const Vec2 dir = d.normalized();
    const RayHit h = ray_cast_unchecked(p, dir, map.obstacles, map.window);
    c.pos = p + dir * std::clamp(h.distance - 0.05, 0.0, 0.5);
    return c;
}

}  // namespace

PlanResult plan_cycle(const SimWorld& sim, const RobotState& robot, const PlannerContext& ctx, Vec2 goal_estimate,
                      const PlannerConfig& cfg, double t_map) {
    const Vec2 p = robot.position();
    const SensedScene scene = sense(sim, p, cfg.window_size, cfg.sense_mode, cfg.n_beams);
    const LocalMap map = build_local_map(p, cfg.window_size, scene.polygons);
    const auto& E = map.predicted_boundaries;

    PlanResult res;
    for (std::size_t i = 0; i < map.observed_boundaries.size(); ++i) {
        res.boundaries.push_back(extended_boundary(map, i, cfg.window_size));
    }

    if (goal_in_free_space(map, goal_estimate)) {
        res.direct = true;
        res.target.pos = goal_estimate;
    } else {
        const auto cands = sample_candidates(map, cfg.sampling);
        res.n_candidates = cands.size();
        if (cands.empty()) {
            res.fallback = true;
            res.target = fallback_target(map, p, goal_estimate);
        } else {
            const auto bounds = compute_bounds(cands, ctx, map, E, cfg.cost);
            auto t0 = std::chrono::steady_clock::now();
            std::vector<CandidateState> pool;
            if (cfg.prune) {
                pool = prune_by_velocity(prune_by_position(cands, map, goal_estimate, 0.5 * cfg.window_size), map);
            }
            if (pool.empty()) pool = cands;
            const Selection sel = select_intermediate_state(pool, ctx, map, E, cfg.weights, cfg.cost, bounds);
            const double pruned_ms = elapsed_ms(t0);
            if (cfg.instrument_timing) {
                t0 = std::chrono::steady_clock::now();
                (void)select_intermediate_state(cands, ctx, map, E, cfg.weights, cfg.cost, bounds);
                res.timing = CycleTiming{cands.size(), pool.size(), elapsed_ms(t0), pruned_ms};
            }
            res.target = sel.candidate;
            res.collision = sel.collision;
        }
    }

    const ControlPoints wp = make_control_points(robot, res.target);
    res.trajectory = make_trajectory(wp, cfg.trajectory, t_map);
    res.contact = first_contact(res.trajectory, res.boundaries);
    return res;
}

EpisodeResult run_episode(const SimWorld& sim, const PlannerConfig& cfg, double t_map, std::uint64_t seed) {
    if (!(t_map > 0.0)) throw std::invalid_argument("run_episode: t_map must be positive");
    if (!(cfg.dt > 0.0) || !(cfg.control_period >= cfg.dt)) throw std::invalid_argument("run_episode: bad timing");
    cfg.weights.validate();
    cfg.cost.validate();
    cfg.sampling.validate();

    const World& world = sim.world;
    for (const auto& poly : sim.inflated) {
        if (poly.contains_strict(world.start)) throw SimulationError("run_episode: start is in collision");
    }

    const auto ticks = [&](double seconds) { return std::max<long long>(1, std::llround(seconds / cfg.dt)); };
    const long long plan_every = ticks(t_map);
    const long long ctrl_every = ticks(cfg.control_period);
    const long long max_steps = ticks(cfg.timeout);

    std::mt19937_64 rng(seed);
    Controller ctrl(cfg.controller);
    RobotState state = RobotState::from(world.start, {});
    Vec2 held;
    Vec2 p_pre = world.start;
    bool intentional_plan = false;
    // Contacts with the same obstacle closer together than this are one event.
    constexpr double kContactMerge = 0.1;
    std::vector<double> last_contact(sim.inflated.size(), -std::numeric_limits<double>::infinity());

    EpisodeResult out;
    out.record.t_map = t_map;
    out.record.seed = seed;
    out.path.push_back({0.0, world.start});
    double traveled = 0.0;

    for (long long k = 0; k < max_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const Vec2 p = state.position();
        if (k % plan_every == 0) {
            const GoalReading g = goal_sensor(world, p, cfg.noise, &rng);
            const Vec2 goal_est = p + unit_from_angle(g.bearing) * g.range;
            const PlannerContext ctx{p, goal_est, p_pre, world.start, traveled};
            try {
                const PlanResult plan = plan_cycle(sim, state, ctx, goal_est, cfg, t_map);
                static const std::vector<Vec2> kNoBoundary;
                const auto& boundary = plan.contact ? plan.boundaries[plan.contact->boundary] : kNoBoundary;
                ctrl.set_plan(plan.trajectory, plan.contact, boundary, t);
                intentional_plan = plan.intentional();
                out.plans.push_back({t, p, plan.target, plan.direct, plan.fallback, plan.n_candidates,
                                     plan.contact ? std::optional<Vec2>(plan.contact->point) : std::nullopt,
                                     ctrl.state().mode, intentional_plan});
                if (plan.timing) out.timings.push_back(*plan.timing);
                ++out.n_plans;
            } catch (const MapError&) {
                // Degenerate view; keep the previous plan.
            } catch (const GeometryError&) {
            }
            p_pre = p;
        }
        if (k % ctrl_every == 0) held = ctrl.command(p, t, cfg.control_period);

        const Vec2 vel = apply_actuation_noise(held, cfg.noise, cfg.sampling.v_max, rng);
        const StepResult sr = step(sim, state, vel, cfg.dt, cfg.cost);
        traveled += sr.displacement;
        state = sr.state;
        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        if (sr.collision) {
            held = sr.collision->v_after;
            double& last = last_contact[sr.collision->obstacle_id];
            if (t_next - last > kContactMerge) {
                CollisionEvent ev = *sr.collision;
                ev.t = t_next;
                ev.intentional = intentional_plan;
                out.collisions.push_back(ev);
            }
            last = t_next;
        }
        out.path.push_back({t_next, state.position()});
        if (distance(state.position(), world.goal) <= cfg.eps_goal) {
            out.record.success = true;
            out.record.arrival_time = t_next;
            break;
        }
    }
    if (!out.record.success) out.record.arrival_time = static_cast<double>(max_steps) * cfg.dt;
    out.record.path_length = traveled;
    out.record.n_collisions = static_cast<int>(out.collisions.size());
    out.record.n_intentional =
        static_cast<int>(std::count_if(out.collisions.begin(), out.collisions.end(), [](const auto& e) { return e.intentional; }));
    out.mode_events = ctrl.events();
    return out;
}

}  // namespace crp
