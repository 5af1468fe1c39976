#include "crp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace crp {

using nlohmann::json;

std::vector<Strategy> default_strategies() {
    return {{"harness", {1.0, 0.1, 4.0}}, {"high_risk", {1.0, 0.1, 0.0}}, {"low_risk", {1.0, 100.0, 0.0}}};
}

Strategy strategy_by_label(const std::string& label) {
    for (auto& s : default_strategies()) {
        if (s.label == label) return s;
    }
    throw HarnessError("unknown strategy '" + label + "' (expected harness, high_risk or low_risk)");
}

void SweepSpec::validate() const {
    if (strategies.empty()) throw HarnessError("sweep: no strategies");
    for (const auto& s : strategies) {
        if (s.label.empty() || s.label.find_first_of(",\n\"") != std::string::npos) {
            throw HarnessError("sweep: invalid strategy label '" + s.label + "'");
        }
        s.weights.validate();
    }
    if (t_map_grid.empty()) throw HarnessError("sweep: empty t_map_grid");
    for (double t : t_map_grid) {
        if (!(t > 0.0)) throw HarnessError("sweep: t_map values must be positive");
    }
    if (trials_per_cell < 1) throw HarnessError("sweep: trials_per_cell must be >= 1");
}

SweepSpec parse_sweep_spec(const std::string& text) {
    SweepSpec spec;
    try {
        const json j = json::parse(text);
        spec.world = j.value("world", "");
        for (const auto& s : j.at("strategies")) {
            if (s.is_string()) {
                spec.strategies.push_back(strategy_by_label(s.get<std::string>()));
            } else {
                Strategy st;
                st.label = s.at("label").get<std::string>();
                st.weights = {s.value("w_p", 1.0), s.value("w_r", 0.1), s.value("w_v", 4.0)};
                spec.strategies.push_back(st);
            }
        }
        spec.t_map_grid = j.at("t_map_grid").get<std::vector<double>>();
        spec.trials_per_cell = j.value("trials_per_cell", 1);
        spec.base_seed = j.value("base_seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw HarnessError(std::string("sweep spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw HarnessError(std::string("sweep spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot open sweep spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    SweepSpec spec = parse_sweep_spec(ss.str());
    if (!spec.world.empty() && std::filesystem::path(spec.world).is_relative()) {
        spec.world = (path.parent_path() / spec.world).lexically_normal().string();
    }
    return spec;
}

std::string serialize_sweep_spec(const SweepSpec& spec) {
    json j;
    j["world"] = spec.world;
    j["strategies"] = json::array();
    for (const auto& s : spec.strategies) {
        j["strategies"].push_back({{"label", s.label}, {"w_p", s.weights.w_p}, {"w_r", s.weights.w_r},
                                   {"w_v", s.weights.w_v}});
    }
    j["t_map_grid"] = spec.t_map_grid;
    j["trials_per_cell"] = spec.trials_per_cell;
    j["base_seed"] = spec.base_seed;
    return j.dump(2) + "\n";
}

std::vector<TrialOutput> run_trials(const SweepSpec& spec, const World& world, int jobs,
                                    const std::optional<PlannerConfig>& base) {
    spec.validate();
    const SimWorld sim = make_sim_world(world);
    const PlannerConfig base_cfg = base ? *base : PlannerConfig::defaults_for(world);

    struct Task {
        std::size_t strategy;
        double t_map;
        int trial;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < spec.strategies.size(); ++s) {
        for (double t : spec.t_map_grid) {
            for (int i = 0; i < spec.trials_per_cell; ++i) tasks.push_back({s, t, i});
        }
    }

    std::vector<TrialOutput> out(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t k = next++; k < tasks.size(); k = next++) {
            try {
                const Task& task = tasks[k];
                PlannerConfig cfg = base_cfg;
                cfg.weights = spec.strategies[task.strategy].weights;
                const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(task.trial);
                EpisodeResult ep = run_episode(sim, cfg, task.t_map, seed);
                ep.record.trial_id = static_cast<std::int64_t>(k);
                ep.record.strategy = spec.strategies[task.strategy].label;
                out[k] = TrialOutput{ep.record, std::move(ep.path), std::move(ep.timings)};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<TrialRecord> records_of(const std::vector<TrialOutput>& outputs) {
    std::vector<TrialRecord> r;
    r.reserve(outputs.size());
    for (const auto& o : outputs) r.push_back(o.record);
    return r;
}

namespace {

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw HarnessError("csv row " + std::to_string(row) + ": bad number '" + s + "'");
    }
    return v;
}

long long parse_int(const std::string& s, std::size_t row) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != s.size()) throw HarnessError("csv row " + std::to_string(row) + ": bad integer '" + s + "'");
    return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HarnessError("cannot write " + path.string());
    out << content;
    if (!out) throw HarnessError("write failed: " + path.string());
}

}  // namespace

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::string s = std::string(kTrialsHeader) + "\n";
    for (const auto& r : records) {
        s += std::to_string(r.trial_id) + "," + r.strategy + "," + fmt_double(r.t_map) + "," +
             fmt_double(r.arrival_time) + "," + fmt_double(r.path_length) + "," + std::to_string(r.n_collisions) +
             "," + std::to_string(r.n_intentional) + "," + (r.success ? "1" : "0") + "," + std::to_string(r.seed) +
             "\n";
    }
    return s;
}

std::vector<TrialRecord> records_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kTrialsHeader) throw HarnessError("trials csv: unexpected header");
    std::vector<TrialRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() != 9) throw HarnessError("csv row " + std::to_string(i) + ": expected 9 fields");
        TrialRecord r;
        r.trial_id = parse_int(f[0], i);
        r.strategy = f[1];
        r.t_map = parse_double(f[2], i);
        r.arrival_time = parse_double(f[3], i);
        r.path_length = parse_double(f[4], i);
        r.n_collisions = static_cast<int>(parse_int(f[5], i));
        r.n_intentional = static_cast<int>(parse_int(f[6], i));
        if (f[7] != "0" && f[7] != "1") throw HarnessError("csv row " + std::to_string(i) + ": bad success flag");
        r.success = f[7] == "1";
        try {
            std::size_t pos = 0;
            r.seed = std::stoull(f[8], &pos);
            if (pos != f[8].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw HarnessError("csv row " + std::to_string(i) + ": bad seed '" + f[8] + "'");
        }
        out.push_back(r);
    }
    return out;
}

std::string trajectory_to_csv(const std::vector<TrajectorySample>& path) {
    std::string s = "t,x,y\n";
    for (const auto& p : path) s += fmt_double(p.t) + "," + fmt_double(p.pos.x) + "," + fmt_double(p.pos.y) + "\n";
    return s;
}

std::vector<TrajectorySample> trajectory_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "t,x,y") throw HarnessError("trajectory csv: unexpected header");
    std::vector<TrajectorySample> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() != 3) throw HarnessError("csv row " + std::to_string(i) + ": expected 3 fields");
        out.push_back({parse_double(f[0], i), {parse_double(f[1], i), parse_double(f[2], i)}});
    }
    return out;
}

MetricStats stats_of(const std::vector<double>& values) {
    MetricStats s;
    if (values.empty()) return s;
    // Sorting first makes the sums independent of record order.
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
    std::map<std::pair<std::string, double>, std::vector<const TrialRecord*>> cells;
    for (const auto& r : records) cells[{r.strategy, r.t_map}].push_back(&r);
    std::vector<CellSummary> out;
    for (const auto& [key, rs] : cells) {
        CellSummary c;
        c.strategy = key.first;
        c.t_map = key.second;
        c.n = static_cast<int>(rs.size());
        std::vector<double> at, pl;
        long long col = 0, intent = 0;
        for (const auto* r : rs) {
            c.n_success += r->success ? 1 : 0;
            at.push_back(r->arrival_time);
            pl.push_back(r->path_length);
            col += r->n_collisions;
            intent += r->n_intentional;
        }
        c.arrival_time = stats_of(at);
        c.path_length = stats_of(pl);
        c.mean_collisions = static_cast<double>(col) / c.n;
        c.mean_intentional = static_cast<double>(intent) / c.n;
        out.push_back(c);
    }
    return out;
}

std::string summary_to_csv(const std::vector<CellSummary>& cells) {
    std::string s =
        "strategy,t_map,n,n_success,arrival_mean,arrival_std,length_mean,length_std,collisions_mean,intentional_mean\n";
    for (const auto& c : cells) {
        s += c.strategy + "," + fmt_double(c.t_map) + "," + std::to_string(c.n) + "," + std::to_string(c.n_success) +
             "," + fmt_double(c.arrival_time.mean) + "," + fmt_double(c.arrival_time.stddev) + "," +
             fmt_double(c.path_length.mean) + "," + fmt_double(c.path_length.stddev) + "," +
             fmt_double(c.mean_collisions) + "," + fmt_double(c.mean_intentional) + "\n";
    }
    return s;
}

ImprovementTable improvement_table(const std::vector<TrialRecord>& records) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by;
    for (const auto& r : records) {
        by[r.strategy].first.push_back(r.arrival_time);
        by[r.strategy].second.push_back(r.path_length);
    }
    for (const char* label : {"harness", "high_risk", "low_risk"}) {
        if (!by.count(label)) throw HarnessError(std::string("improvement_table: no records for ") + label);
    }
    const auto pct = [](double base, double ours) { return base == 0.0 ? 0.0 : 100.0 * (base - ours) / base; };
    const auto cell = [&](const std::string& baseline) {
        const MetricStats ha = stats_of(by["harness"].first), hl = stats_of(by["harness"].second);
        const MetricStats ba = stats_of(by[baseline].first), bl = stats_of(by[baseline].second);
        return ImprovementCell{pct(ba.mean, ha.mean), pct(ba.stddev, ha.stddev), pct(bl.mean, hl.mean),
                               pct(bl.stddev, hl.stddev)};
    };
    return {cell("high_risk"), cell("low_risk")};
}

std::string format_improvement_table(const ImprovementTable& t) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "improvement (%%)        vs high_risk  vs low_risk\n"
                  "arrival time mean      %10.2f  %10.2f\n"
                  "arrival time STD       %10.2f  %10.2f\n"
                  "path length mean       %10.2f  %10.2f\n"
                  "path length STD        %10.2f  %10.2f\n",
                  t.vs_high_risk.arrival_mean, t.vs_low_risk.arrival_mean, t.vs_high_risk.arrival_std,
                  t.vs_low_risk.arrival_std, t.vs_high_risk.length_mean, t.vs_low_risk.length_mean,
                  t.vs_high_risk.length_std, t.vs_low_risk.length_std);
    return buf;
}

TimingReport timing_report(const std::vector<CycleTiming>& timings) {
    TimingReport r;
    r.cycles = timings.size();
    if (timings.empty()) return r;
    double full = 0.0, pruned = 0.0, n_full = 0.0, n_pruned = 0.0;
    for (const auto& t : timings) {
        full += t.full_ms;
        pruned += t.pruned_ms;
        n_full += static_cast<double>(t.n_full);
        n_pruned += static_cast<double>(t.n_pruned);
    }
    const double n = static_cast<double>(timings.size());
    r.mean_full_ms = full / n;
    r.mean_pruned_ms = pruned / n;
    r.mean_saving_ms = r.mean_full_ms - r.mean_pruned_ms;
    r.reduction_ratio = n_full > 0.0 ? 1.0 - n_pruned / n_full : 0.0;
    return r;
}

std::string format_timing_report(const TimingReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "planning cycles        %zu\n"
                  "mean full eval [ms]    %.4f\n"
                  "mean pruned eval [ms]  %.4f\n"
                  "mean saving [ms]       %.4f\n"
                  "candidate reduction    %.1f%%\n",
                  r.cycles, r.mean_full_ms, r.mean_pruned_ms, r.mean_saving_ms, 100.0 * r.reduction_ratio);
    return buf;
}

namespace {

const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct SvgFrame {
    double x0, y0, x1, y1;  // data range
    double left, top, width, height;  // pixels

    double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

std::string svg_header(double w, double h) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                  w, h);
    return buf;
}

std::string svg_polygon(const SvgFrame& f, const Polygon& p, const char* fill) {
    std::string s = "<polygon points=\"";
    char buf[64];
    for (const auto& v : p.vertices()) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", f.px(v.x), f.py(v.y));
        s += buf;
    }
    return s + "\" fill=\"" + fill + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
}

std::string svg_text(double x, double y, const std::string& text, const char* anchor = "middle") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"%s\">", x, y, anchor);
    return buf + text + "</text>\n";
}

std::string trajectory_plot(const World& world, const std::string& label, const std::vector<const TrialOutput*>& runs) {
    const Aabb b = bounding_box(world.bounds);
    const double scale = 200.0;
    const double w = (b.max.x - b.min.x) * scale, h = (b.max.y - b.min.y) * scale;
    const SvgFrame f{b.min.x, b.min.y, b.max.x, b.max.y, 20.0, 40.0, w, h};
    std::string s = svg_header(w + 40.0, h + 60.0);
    s += svg_text(20.0 + w / 2, 24.0, label + " (" + std::to_string(runs.size()) + " trials)");
    s += svg_polygon(f, world.bounds, "none");
    for (const auto& o : world.obstacles) s += svg_polygon(f, o, "#bbbbbb");
    char buf[96];
    for (const auto* run : runs) {
        s += "<polyline fill=\"none\" stroke=\"";
        s += run->record.success ? "#1f77b4" : "#d62728";
        s += "\" stroke-opacity=\"0.5\" stroke-width=\"1\" points=\"";
        const std::size_t stride = std::max<std::size_t>(1, run->path.size() / 400);
        for (std::size_t i = 0; i < run->path.size(); i += stride) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", f.px(run->path[i].pos.x), f.py(run->path[i].pos.y));
            s += buf;
        }
        s += "\"/>\n";
    }
    for (const auto& [p, color] : {std::pair{world.start, "green"}, std::pair{world.goal, "orange"}}) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\" fill=\"%s\"/>\n", f.px(p.x), f.py(p.y),
                      color);
        s += buf;
    }
    return s + "</svg>\n";
}

std::string panel_plot(const std::vector<CellSummary>& cells) {
    std::vector<std::string> strategies;
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
    for (const auto& c : cells) {
        if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) {
            strategies.push_back(c.strategy);
        }
        t_lo = std::min(t_lo, c.t_map);
        t_hi = std::max(t_hi, c.t_map);
    }
    if (t_hi <= t_lo) {
        t_lo -= 0.1;
        t_hi += 0.1;
    }
    struct Panel {
        const char* title;
        double (*get)(const CellSummary&);
    };
    const Panel panels[4] = {
        {"arrival time mean [s]", [](const CellSummary& c) { return c.arrival_time.mean; }},
        {"arrival time STD [s]", [](const CellSummary& c) { return c.arrival_time.stddev; }},
        {"path length mean [m]", [](const CellSummary& c) { return c.path_length.mean; }},
        {"path length STD [m]", [](const CellSummary& c) { return c.path_length.stddev; }},
    };
    const double pw = 320.0, ph = 220.0;
    std::string s = svg_header(2 * pw + 120.0, 2 * ph + 160.0);
    char buf[160];
    for (int k = 0; k < 4; ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& c : cells) {
            lo = std::min(lo, panels[k].get(c));
            hi = std::max(hi, panels[k].get(c));
        }
        const double pad = hi > lo ? 0.1 * (hi - lo) : std::max(0.1, 0.1 * std::abs(hi));
        const SvgFrame f{t_lo, lo - pad, t_hi, hi + pad, 60.0 + (k % 2) * (pw + 40.0), 40.0 + (k / 2) * (ph + 60.0),
                         pw, ph};
        std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                      f.left, f.top, f.width, f.height);
        s += buf;
        s += svg_text(f.left + pw / 2, f.top - 8.0, panels[k].title);
        s += svg_text(f.left + pw / 2, f.top + ph + 30.0, "T_map [s]");
        for (const double y : {f.y0, f.y1}) {
            std::snprintf(buf, sizeof buf, "%.3g", y);
            s += svg_text(f.left - 4.0, f.py(y) + 4.0, buf, "end");
        }
        for (const auto& c : cells) {
            std::snprintf(buf, sizeof buf, "%.2g", c.t_map);
            s += svg_text(f.px(c.t_map), f.top + ph + 14.0, buf);
        }
        for (std::size_t si = 0; si < strategies.size(); ++si) {
            const char* color = kPalette[si % 6];
            s += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"2\" points=\"";
            for (const auto& c : cells) {
                if (c.strategy != strategies[si]) continue;
                std::snprintf(buf, sizeof buf, "%.2f,%.2f ", f.px(c.t_map), f.py(panels[k].get(c)));
                s += buf;
            }
            s += "\"/>\n";
        }
    }
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        const double x = 60.0 + 140.0 * static_cast<double>(si);
        const double y = 2 * ph + 150.0;
        std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"14\" height=\"4\" fill=\"%s\"/>\n", x, y - 6,
                      kPalette[si % 6]);
        s += buf;
        s += svg_text(x + 20.0, y, strategies[si], "start");
    }
    return s + "</svg>\n";
}

}  // namespace

void emit_outputs(const std::vector<TrialOutput>& outputs, const std::filesystem::path& out_dir, const World* world) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "trajectories", ec);
    if (ec) throw HarnessError("cannot create " + (out_dir / "trajectories").string() + ": " + ec.message());

    std::vector<const TrialOutput*> sorted;
    for (const auto& o : outputs) sorted.push_back(&o);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->record.trial_id < b->record.trial_id; });
    std::vector<TrialRecord> records;
    for (const auto* o : sorted) records.push_back(o->record);

    write_file(out_dir / "trials.csv", records_to_csv(records));
    for (const auto* o : sorted) {
        write_file(out_dir / "trajectories" / (std::to_string(o->record.trial_id) + ".csv"), trajectory_to_csv(o->path));
    }
    const auto cells = summarize(records);
    write_file(out_dir / "summary.csv", summary_to_csv(cells));
    if (records.empty()) return;

    if (world) {
        std::map<std::string, std::vector<const TrialOutput*>> by;
        for (const auto* o : sorted) by[o->record.strategy].push_back(o);
        for (const auto& [label, runs] : by) {
            write_file(out_dir / ("trajectories_" + label + ".svg"), trajectory_plot(*world, label, runs));
        }
    }
    write_file(out_dir / "tmap_panels.svg", panel_plot(cells));
}

std::vector<TrialRecord> load_records(const std::filesystem::path& dir) {
    const auto path = dir / "trials.csv";
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return records_from_csv(ss.str());
    } catch (const HarnessError& e) {
        throw HarnessError(path.string() + ": " + e.what());
    }
}

}  // namespace crp
