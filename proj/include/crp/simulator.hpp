#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "crp/controller.hpp"
#include "crp/costs.hpp"
#include "crp/sampling.hpp"
#include "crp/trajectory.hpp"

namespace crp {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arena description as stored in .world files (JSON).
struct World {
    std::string name;
    Polygon bounds;  // axis-aligned rectangle
    std::vector<Polygon> obstacles;
    Vec2 start;
    Vec2 goal;
    double robot_radius = 0.08;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

World parse_world(const std::string& text);
std::string serialize_world(const World& world);
World load_world(const std::filesystem::path& path);

/// World with obstacles inflated by the robot radius and walls turned into
/// slabs around the bounds shrunk by the radius. The robot is a point here.
struct SimWorld {
    World world;
    std::vector<Polygon> inflated;  // obstacles first, then the 4 walls
    std::vector<Aabb> boxes;

    std::size_t n_obstacles() const { return world.obstacles.size(); }
    bool is_wall(std::size_t id) const { return id >= world.obstacles.size(); }
};

SimWorld make_sim_world(const World& world, int arc_steps = 3);

struct NoiseParams {
    double actuation_sigma = 0.02;  // [m/s] per axis
    double goal_range_sigma = 0.0;
    double goal_bearing_sigma = 0.0;
};

struct CollisionEvent {
    double t = 0.0;
    Vec2 point;
    std::size_t obstacle_id = 0;
    Vec2 v_before;
    Vec2 v_after;
    bool intentional = false;
};

struct StepResult {
    RobotState state;
    std::optional<CollisionEvent> collision;  // first contact of the step
    double displacement = 0.0;
};

/// Integrates p += v*dt with continuous collision detection, reflecting the
/// velocity at each contact. `velocity` already includes any noise.
StepResult step(const SimWorld& sim, const RobotState& state, Vec2 velocity, double dt,
                const CostParams& restitution);

/// Draws the noisy velocity actually applied for a command.
Vec2 apply_actuation_noise(Vec2 cmd, const NoiseParams& noise, double v_max, std::mt19937_64& rng);

enum class SenseMode { exact, beams };

struct SensedScene {
    std::vector<Polygon> polygons;
    std::vector<std::size_t> ids;  // index into SimWorld::inflated
};

/// Inflated polygons visible to the sensor. Exact mode returns every polygon
/// overlapping the window; beam mode keeps only those hit by at least one of
/// n_beams rays.
SensedScene sense(const SimWorld& sim, Vec2 position, double window_size, SenseMode mode = SenseMode::exact,
                  int n_beams = 360);

struct GoalReading {
    double bearing = 0.0;
    double range = 0.0;
};

GoalReading goal_sensor(const World& world, Vec2 position, const NoiseParams& noise, std::mt19937_64* rng = nullptr);

struct PlannerConfig {
    CostWeights weights;
    CostParams cost;
    SamplingParams sampling;
    TrajectoryParams trajectory;
    ControllerParams controller;
    NoiseParams noise;
    double window_size = kDefaultWindowSize;
    bool prune = true;
    bool instrument_timing = false;
    SenseMode sense_mode = SenseMode::exact;
    int n_beams = 360;
    double dt = 0.01;
    double control_period = 0.05;
    double eps_goal = 0.1;
    double timeout = 60.0;

    /// Defaults with v_max propagated and delta = robot_radius / 2.
    static PlannerConfig defaults_for(const World& world);
};

struct CycleTiming {
    std::size_t n_full = 0;
    std::size_t n_pruned = 0;
    double full_ms = 0.0;    // evaluating the unpruned batch
    double pruned_ms = 0.0;  // pruning plus evaluating the survivors
};

struct PlanResult {
    bool direct = false;  // goal visible
    bool fallback = false;
    CandidateState target;
    std::optional<CollisionPrediction> collision;
    TimedTrajectory trajectory;
    std::optional<SplineContact> contact;
    std::vector<std::vector<Vec2>> boundaries;
    std::optional<CycleTiming> timing;
    std::size_t n_candidates = 0;
    bool intentional() const { return target.vel_mag > 0.0 && collision.has_value(); }
};

/// One sense-plan cycle from the robot's state.
PlanResult plan_cycle(const SimWorld& sim, const RobotState& robot, const PlannerContext& ctx, Vec2 goal_estimate,
                      const PlannerConfig& cfg, double t_map);

struct TrialRecord {
    std::int64_t trial_id = 0;
    std::string strategy;
    double t_map = 0.0;
    double arrival_time = 0.0;
    double path_length = 0.0;
    int n_collisions = 0;
    int n_intentional = 0;
    bool success = false;
    std::uint64_t seed = 0;

    bool operator==(const TrialRecord&) const = default;
};

/// Per-cycle planner log entry.
struct PlanLog {
    double t = 0.0;
    Vec2 position;
    CandidateState target;  // costs filled when selected from candidates
    bool direct = false;
    bool fallback = false;
    std::size_t n_candidates = 0;
    std::optional<Vec2> contact;
    Mode mode = Mode::free_space;
    bool intentional = false;
};

struct EpisodeResult {
    TrialRecord record;
    std::vector<TrajectorySample> path;  // robot position every dt
    std::vector<CollisionEvent> collisions;
    std::vector<ModeEvent> mode_events;
    std::vector<PlanLog> plans;
    std::vector<CycleTiming> timings;
    int n_plans = 0;
};

EpisodeResult run_episode(const SimWorld& sim, const PlannerConfig& cfg, double t_map, std::uint64_t seed);

}  // namespace crp
