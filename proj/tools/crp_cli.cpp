#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "crp/harness.hpp"

namespace {

std::string defaults_footer() {
    const crp::CostWeights w;
    const crp::CostParams c;
    const crp::SamplingParams s;
    const crp::TrajectoryParams t;
    const crp::PidGains g;
    const crp::NoiseParams n;
    const crp::PlannerConfig p;
    char buf[1400];
    std::snprintf(buf, sizeof buf,
                  "\nDefaults:\n"
                  "  weights       w_p=%g w_r=%g w_v=%g\n"
                  "  costs         theta_thres=%g f_a=%g f_theta=%g delta_v=%g penalty=%g tau_ref=%g\n"
                  "                restitution_n=%g restitution_t=%g sight_radius=%g\n"
                  "  sampling      delta_l=%g n_dirs=%d v_max=%g window_arcs=%s\n"
                  "  trajectory    p_safe=%g n_samples=%d\n"
                  "  controller    kp=%g ki=%g kd=%g delta=robot_radius/2\n"
                  "  simulator     window=%g dt=%g control_period=%g eps_goal=%g timeout=%g\n"
                  "                actuation_sigma=%g\n"
                  "  strategies    harness (1, 0.1, 4), high_risk (1, 0.1, 0), low_risk (1, 100, 0)\n",
                  w.w_p, w.w_r, w.w_v, c.theta_thres, c.f_a, c.f_theta, c.delta_v, c.penalty, c.tau_ref,
                  c.restitution_n, c.restitution_t, c.sight_radius, s.delta_l, s.n_dirs, s.v_max,
                  s.include_window_arcs ? "on" : "off", t.p_safe, t.n_samples, g.kp, g.ki, g.kd, p.window_size,
                  p.dt, p.control_period, p.eps_goal, p.timeout, n.actuation_sigma);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collision-resilient planner: episodes, sweeps and statistics"};
    app.footer(defaults_footer());
    app.require_subcommand(1);

    std::string world_path, strategy = "harness", out_dir, spec_path, in_dir;
    double t_map = 0.2;
    std::uint64_t seed = 0;
    bool plot = false, timing = false, no_noise = false, verbose = false, no_prune = false;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string sense_mode = "exact";
    int n_beams = 360;

    auto* run = app.add_subcommand("run", "Run one episode");
    run->add_option("--world", world_path, "World file")->required()->check(CLI::ExistingFile);
    run->add_option("--strategy", strategy, "harness | high_risk | low_risk")->capture_default_str();
    run->add_option("--t-map", t_map, "Map update period [s]")->capture_default_str();
    run->add_option("--seed", seed, "RNG seed")->capture_default_str();
    run->add_option("--out", out_dir, "Output directory (trials.csv, trajectory, plots)");
    run->add_flag("--plot", plot, "Write SVG plots (needs --out)");
    run->add_flag("--timing", timing, "Measure pruned vs unpruned evaluation time");
    run->add_flag("--no-noise", no_noise, "Disable actuation noise");
    run->add_flag("--no-prune", no_prune, "Evaluate the full candidate set");
    double delta = -1.0, sight = -1.0;
    run->add_option("--sight", sight, "Narrow-region reach [m]");
    run->add_option("--delta", delta, "Maneuver switching radius [m] (default robot_radius/2)");
    run->add_flag("-v,--verbose", verbose, "Print collision and maneuver events");
    run->add_option("--sense", sense_mode, "exact | beams")->capture_default_str();
    run->add_option("--beams", n_beams, "Beam count for --sense beams")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("--spec", spec_path, "Sweep spec (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    sweep->add_flag("--timing", timing, "Measure pruned vs unpruned evaluation time");

    auto* stats = app.add_subcommand("stats", "Summaries and improvement table of a sweep directory");
    stats->add_option("--in", in_dir, "Directory containing trials.csv")->required()->check(CLI::ExistingDirectory);

    auto* map = app.add_subcommand("map", "Dump the local map seen from the start pose (JSON)");
    map->add_option("--world", world_path, "World file")->required()->check(CLI::ExistingFile);

    std::vector<double> at, vel{0.0, 0.0};
    int top = 15;
    auto* probe = app.add_subcommand("probe", "Score the candidates seen from one pose");
    probe->add_option("--world", world_path, "World file")->required()->check(CLI::ExistingFile);
    probe->add_option("--at", at, "Robot position x y")->required()->expected(2);
    probe->add_option("--vel", vel, "Robot velocity vx vy")->expected(2);
    probe->add_option("--strategy", strategy, "harness | high_risk | low_risk")->capture_default_str();
    probe->add_option("--top", top, "Number of candidates to print")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const crp::World world = crp::load_world(world_path);
            const crp::SimWorld sim = crp::make_sim_world(world);
            crp::PlannerConfig cfg = crp::PlannerConfig::defaults_for(world);
            cfg.weights = crp::strategy_by_label(strategy).weights;
            cfg.instrument_timing = timing;
            if (no_noise) cfg.noise.actuation_sigma = 0.0;
            if (no_prune) cfg.prune = false;
            if (delta > 0.0) cfg.controller.delta = delta;
            if (sight > 0.0) cfg.cost.sight_radius = sight;
            if (sense_mode == "beams") {
                cfg.sense_mode = crp::SenseMode::beams;
                cfg.n_beams = n_beams;
            } else if (sense_mode != "exact") {
                throw std::invalid_argument("--sense must be exact or beams");
            }
            crp::EpisodeResult ep = crp::run_episode(sim, cfg, t_map, seed);
            ep.record.strategy = strategy;
            const auto& r = ep.record;
            std::printf("success=%d arrival_time=%.2f path_length=%.3f collisions=%d intentional=%d plans=%d\n",
                        r.success ? 1 : 0, r.arrival_time, r.path_length, r.n_collisions, r.n_intentional, ep.n_plans);
            if (timing) std::cout << crp::format_timing_report(crp::timing_report(ep.timings));
            if (verbose) {
                for (const auto& c : ep.collisions) {
                    std::printf("collision t=%.2f obstacle=%zu%s at (%.3f, %.3f) v_before=(%.2f, %.2f) v_after=(%.2f, %.2f)%s\n",
                                c.t, c.obstacle_id, sim.is_wall(c.obstacle_id) ? " (wall)" : "", c.point.x, c.point.y,
                                c.v_before.x, c.v_before.y, c.v_after.x, c.v_after.y,
                                c.intentional ? " intentional" : "");
                }
                for (const auto& pl : ep.plans) {
                    std::printf("plan t=%.2f at (%.3f, %.3f) -> (%.3f, %.3f) dir=%.2f v=%.2f n=%zu%s%s %s",
                                pl.t, pl.position.x, pl.position.y, pl.target.pos.x, pl.target.pos.y,
                                pl.target.vel_dir, pl.target.vel_mag, pl.n_candidates, pl.direct ? " direct" : "",
                                pl.fallback ? " fallback" : "", crp::to_string(pl.mode));
                    if (pl.contact) std::printf(" contact=(%.3f, %.3f)", pl.contact->x, pl.contact->y);
                    if (pl.target.costs) {
                        const auto& c = *pl.target.costs;
                        std::printf(" J=%.3f pos=%.3f risk=%.3f (h=%.3f g=%.3f) vel=%.3f rref=%.2f", c.total, c.j_pos,
                                    c.j_risk, c.j_risk_h, c.j_risk_g, c.j_vel, c.r_ref);
                    }
                    std::printf("\n");
                }
                for (const auto& m : ep.mode_events) {
                    if (m.mode == crp::Mode::free_space) continue;
                    std::printf("mode t=%.2f %s switch=%s\n", m.t, crp::to_string(m.mode), crp::to_string(m.sw));
                }
            }
            if (!out_dir.empty()) {
                crp::emit_outputs({crp::TrialOutput{r, ep.path, ep.timings}}, out_dir, plot ? &world : nullptr);
            } else if (plot) {
                std::cerr << "--plot ignored without --out\n";
            }
        } else if (*sweep) {
            const crp::SweepSpec spec = crp::load_sweep_spec(spec_path);
            if (spec.world.empty()) throw std::invalid_argument("sweep spec has no world");
            const crp::World world = crp::load_world(spec.world);
            crp::PlannerConfig cfg = crp::PlannerConfig::defaults_for(world);
            cfg.instrument_timing = timing;
            const auto outputs = crp::run_trials(spec, world, jobs, cfg);
            crp::emit_outputs(outputs, out_dir, &world);
            const auto records = crp::records_of(outputs);
            std::cout << crp::summary_to_csv(crp::summarize(records));
            if (timing) {
                std::vector<crp::CycleTiming> all;
                for (const auto& o : outputs) all.insert(all.end(), o.timings.begin(), o.timings.end());
                std::cout << crp::format_timing_report(crp::timing_report(all));
            }
        } else if (*stats) {
            const auto records = crp::load_records(in_dir);
            std::cout << crp::summary_to_csv(crp::summarize(records));
            try {
                std::cout << crp::format_improvement_table(crp::improvement_table(records));
            } catch (const crp::HarnessError& e) {
                std::cout << "(no improvement table: " << e.what() << ")\n";
            }
        } else if (*probe) {
            const crp::World world = crp::load_world(world_path);
            const crp::SimWorld sim = crp::make_sim_world(world);
            crp::PlannerConfig cfg = crp::PlannerConfig::defaults_for(world);
            cfg.weights = crp::strategy_by_label(strategy).weights;
            const crp::Vec2 p{at[0], at[1]};
            const auto scene = crp::sense(sim, p, cfg.window_size);
            const auto lm = crp::build_local_map(p, cfg.window_size, scene.polygons);
            const crp::PlannerContext ctx{p, world.goal, p - crp::Vec2{vel[0], vel[1]} * 0.2, world.start, 0.0};
            auto cands = crp::sample_candidates(lm, cfg.sampling);
            const auto bounds = crp::compute_bounds(cands, ctx, lm, lm.predicted_boundaries, cfg.cost);
            auto pool = crp::prune_by_velocity(crp::prune_by_position(cands, lm, world.goal, 0.5 * cfg.window_size), lm);
            const auto costs = crp::evaluate_candidates(pool, ctx, lm, lm.predicted_boundaries, cfg.weights, cfg.cost, bounds);
            std::vector<std::size_t> order(pool.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return costs[a].total < costs[b].total; });
            std::printf("%zu candidates, %zu after pruning, %zu frontiers, %zu window arcs, %zu predicted boundaries\n",
                        cands.size(), pool.size(), lm.frontiers.size(), lm.window_arcs.size(),
                        lm.predicted_boundaries.size());
            for (const auto& pb : lm.predicted_boundaries) {
                std::printf("  predicted (%.3f, %.3f) -> (%.3f, %.3f) %s\n", pb.anchor.x, pb.anchor.y, pb.tangent.x,
                            pb.tangent.y, crp::to_string(pb.kind));
            }
            for (int k = 0; k < top && k < static_cast<int>(order.size()); ++k) {
                const auto& c = pool[order[k]];
                const auto& b = costs[order[k]];
                std::printf("(%.3f, %.3f) f=%zu dir=%.2f v=%.2f J=%.3f pos=%.3f h=%.3f g=%.3f vel=%.3f rref=%.2f\n",
                            c.pos.x, c.pos.y, c.frontier_id, c.vel_dir, c.vel_mag, b.total, b.j_pos, b.j_risk_h,
                            b.j_risk_g, b.j_vel, b.r_ref);
            }
        } else if (*map) {
            const crp::World world = crp::load_world(world_path);
            const crp::SimWorld sim = crp::make_sim_world(world);
            const auto scene = crp::sense(sim, world.start, crp::kDefaultWindowSize);
            std::cout << crp::dump_local_map(crp::build_local_map(world.start, crp::kDefaultWindowSize, scene.polygons))
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
