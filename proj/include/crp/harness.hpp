#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crp/simulator.hpp"

namespace crp {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Strategy {
    std::string label;
    CostWeights weights;
};

/// harness (1, 0.1, 4), high_risk (1, 0.1, 0), low_risk (1, 100, 0).
std::vector<Strategy> default_strategies();
Strategy strategy_by_label(const std::string& label);

struct SweepSpec {
    std::string world;  // path, relative to the sweep file when loaded
    std::vector<Strategy> strategies;
    std::vector<double> t_map_grid;
    int trials_per_cell = 1;
    std::uint64_t base_seed = 0;

    void validate() const;
};

SweepSpec parse_sweep_spec(const std::string& text);
SweepSpec load_sweep_spec(const std::filesystem::path& path);
std::string serialize_sweep_spec(const SweepSpec& spec);

struct TrialOutput {
    TrialRecord record;
    std::vector<TrajectorySample> path;
    std::vector<CycleTiming> timings;
};

/// One episode per (strategy, t_map, trial), ids assigned in that order.
/// Trial i of every cell uses seed base_seed + i. Runs on `jobs` threads;
/// the result order does not depend on it.
std::vector<TrialOutput> run_trials(const SweepSpec& spec, const World& world, int jobs = 1,
                                    const std::optional<PlannerConfig>& base = std::nullopt);

std::vector<TrialRecord> records_of(const std::vector<TrialOutput>& outputs);

inline constexpr const char* kTrialsHeader =
    "trial_id,strategy,t_map,arrival_time,path_length,n_collisions,n_intentional,success,seed";

std::string records_to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_csv(const std::string& text);
std::string trajectory_to_csv(const std::vector<TrajectorySample>& path);
std::vector<TrajectorySample> trajectory_from_csv(const std::string& text);

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for n < 2
};

MetricStats stats_of(const std::vector<double>& values);

struct CellSummary {
    std::string strategy;
    double t_map = 0.0;
    int n = 0;
    int n_success = 0;
    MetricStats arrival_time;
    MetricStats path_length;
    double mean_collisions = 0.0;
    double mean_intentional = 0.0;
};

/// Per (strategy, t_map) statistics, sorted by strategy then t_map.
std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);
std::string summary_to_csv(const std::vector<CellSummary>& cells);

struct ImprovementCell {
    double arrival_mean = 0.0;
    double arrival_std = 0.0;
    double length_mean = 0.0;
    double length_std = 0.0;
};

struct ImprovementTable {
    ImprovementCell vs_high_risk;
    ImprovementCell vs_low_risk;
};

/// 100 * (baseline - harness) / baseline over all records of each strategy.
/// Throws HarnessError when a strategy is missing.
ImprovementTable improvement_table(const std::vector<TrialRecord>& records);
std::string format_improvement_table(const ImprovementTable& table);

struct TimingReport {
    std::size_t cycles = 0;
    double mean_full_ms = 0.0;
    double mean_pruned_ms = 0.0;
    double mean_saving_ms = 0.0;
    double reduction_ratio = 0.0;  // 1 - pruned / full candidate count
};

TimingReport timing_report(const std::vector<CycleTiming>& timings);
std::string format_timing_report(const TimingReport& report);

/// Writes trials.csv, trajectories/<id>.csv, summary.csv and, when there are
/// records, SVG plots (per-strategy overlays if a world is given, and the
/// mean/STD panels versus t_map).
void emit_outputs(const std::vector<TrialOutput>& outputs, const std::filesystem::path& out_dir,
                  const World* world = nullptr);

/// Loads trials.csv from a directory written by emit_outputs.
std::vector<TrialRecord> load_records(const std::filesystem::path& dir);

}  // namespace crp
