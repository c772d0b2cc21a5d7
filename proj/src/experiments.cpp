#include "gnm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gnm/output.hpp"

namespace gnm {

namespace {

/// Captures the crowd once the alive count falls to a fraction of the spawn.
class CrowdShapeSink : public SampleSink {
public:
    CrowdShapeSink(double fraction, int spawned) : fraction_(fraction), spawned_(spawned) {}

    void on_sample(double t, std::span<const Agent> agents) override {
        if (captured_) return;
        int alive = 0;
        for (const Agent& a : agents) alive += a.alive ? 1 : 0;
        if (alive > fraction_ * spawned_ || alive == 0) return;
        captured_ = true;
        t_ = t;
        for (const Agent& a : agents)
            if (a.alive) agents_.push_back(a);
    }

    bool captured() const { return captured_; }
    double time() const { return t_; }
    const std::vector<Agent>& agents() const { return agents_; }

private:
    double fraction_;
    int spawned_;
    bool captured_ = false;
    double t_ = -1.0;
    std::vector<Agent> agents_;
};

}  // namespace

ExperimentOutput run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& opt) {
    const Scenario& scn = cfg.scenario;
    const bool periodic = scn.boundary == Boundary::PeriodicX;
    const double period = scn.period();

    if (!opt.out_dir.empty()) ensure_directory(opt.out_dir);

    std::vector<SampleSink*> sinks;
    std::optional<TrajectorySink> traj;
    if (opt.trajectories && !opt.out_dir.empty()) {
        traj.emplace(opt.out_dir + "/trajectory.csv");
        sinks.push_back(&*traj);
    }
    std::optional<FlowSink> flow;
    if (cfg.measurement.flow_line_x) {
        flow.emplace(*cfg.measurement.flow_line_x, periodic, period);
        sinks.push_back(&*flow);
    }
    MinDistanceSink dist(cfg.model.collision_threshold, periodic, period);
    sinks.push_back(&dist);
    std::optional<DensitySpeedSink> density;
    if (opt.density) {
        density.emplace(cfg.measurement, scn);
        sinks.push_back(&*density);
    }
    std::optional<SnapshotSink> lane_snap;
    if (opt.lane_snapshot_t) {
        lane_snap.emplace(*opt.lane_snapshot_t);
        sinks.push_back(&*lane_snap);
    }
    std::optional<CrowdShapeSink> cone;
    int spawn_estimate = 0;
    for (const Source& s : scn.sources) spawn_estimate += s.count;
    if (opt.cone_fraction) {
        cone.emplace(*opt.cone_fraction, spawn_estimate);
        sinks.push_back(&*cone);
    }

    ExperimentOutput out;
    out.sim = run_simulation(cfg, sinks);

    if (flow) {
        out.crossings = flow->crossing_times();
        out.flow = flow_rate(out.crossings);
    }
    out.min_distance = dist.run_minimum();
    out.collision_events = dist.collisions().size();
    if (density)
        out.speed = speed_statistics(density->stationary_speeds(), cfg.population.v_mean,
                                     cfg.population.v_std);

    if (lane_snap && lane_snap->captured_at() >= 0.0) {
        out.lanes_t = lane_snap->captured_at();
        for (size_t ti = 0; ti < scn.targets.size(); ++ti) {
            if (!scn.targets[ti].direction) continue;
            std::vector<double> ys;
            for (const Agent& a : lane_snap->agents())
                if (a.target == static_cast<int>(ti)) ys.push_back(a.x.y);
            if (ys.size() >= 20) {
                out.lanes.push_back({scn.targets[ti].id,
                                     detect_lanes(ys, scn.domain.lo.y, scn.domain.hi.y)});
            }
        }
    }

    if (cone && cone->captured() && cfg.measurement.flow_line_x) {
        const double x_exit = *cfg.measurement.flow_line_x;
        const double x_funnel = x_exit - 4.0;  // constriction length is 4 m
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
        bool any_wait = false, any_line = false;
        for (const Agent& a : cone->agents()) {
            if (a.x.x <= x_funnel) {
                any_wait = true;
                xmin = std::min(xmin, a.x.x);
                xmax = std::max(xmax, a.x.x);
            }
            if (a.x.x >= x_funnel - 0.5 && a.x.x <= x_funnel) {
                any_line = true;
                ymin = std::min(ymin, a.x.y);
                ymax = std::max(ymax, a.x.y);
            }
        }
        if (any_wait && any_line) {
            out.have_cone = true;
            out.cone_x_extent = xmax - xmin;
            out.cone_gap_y_extent = ymax - ymin;
        }
    }

    if (!opt.out_dir.empty()) {
        std::vector<std::string> files;
        if (traj) files.push_back("trajectory.csv");
        if (flow) {
            flow->write_csv(opt.out_dir + "/flow.csv");
            files.push_back("flow.csv");
        }
        dist.write_csv(opt.out_dir + "/collisions.csv");
        files.push_back("collisions.csv");
        if (density) {
            density->write_csv(opt.out_dir + "/density_speed.csv");
            files.push_back("density_speed.csv");
        }
        if (!out.lanes.empty()) {
            CsvFile lanes_csv(opt.out_dir + "/lanes.csv", "t,direction,count");
            for (const LaneCount& lc : out.lanes)
                lanes_csv.raw_row(std::to_string(out.lanes_t) + "," + lc.direction + "," +
                                  std::to_string(lc.result.count));
            lanes_csv.close();
            files.push_back("lanes.csv");
        }
        std::map<std::string, double> summary{
            {"flow", out.flow},
            {"min_distance", std::isfinite(out.min_distance) ? out.min_distance : -1.0},
            {"mu_norm", out.speed.mu_norm},
            {"sigma_norm", out.speed.sigma_norm}};
        write_manifest(opt.out_dir, cfg, out.sim, summary, files);
    }
    return out;
}

// ---------------------------------------------------------------------------
// sweeps

void run_tasks(int n_tasks, int parallel, const std::function<void(int)>& task) {
    parallel = std::max(1, parallel);
    if (parallel == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < std::min(parallel, n_tasks); ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<BottleneckRow> sweep_bottleneck(std::span<const double> widths, int seeds,
                                            int parallel, int agents) {
    const int n = static_cast<int>(widths.size()) * seeds;
    std::vector<BottleneckRow> rows(n);
    run_tasks(n, parallel, [&](int i) {
        const double width = widths[i / seeds];
        const std::uint64_t seed = 1 + i % seeds;
        ScenarioConfig cfg = preset_bottleneck(width, agents, seed);
        ExperimentOptions opt;
        opt.density = false;
        opt.cone_fraction = 0.5;
        const ExperimentOutput out = run_experiment(cfg, opt);
        BottleneckRow& r = rows[i];
        r.width = width;
        r.seed = seed;
        r.flow = out.flow;
        r.specific_flow = out.flow / width;
        r.min_distance = out.min_distance;
        r.cone_x_extent = out.cone_x_extent;
        r.cone_gap_y_extent = out.cone_gap_y_extent;
    });
    return rows;
}

std::vector<CorridorRow> sweep_corridor(CorridorKind kind, std::span<const double> densities,
                                        int seeds, int parallel, bool second_parameter_set) {
    const int n = static_cast<int>(densities.size()) * seeds;
    std::vector<CorridorRow> rows(n);
    run_tasks(n, parallel, [&](int i) {
        const double rho = densities[i / seeds];
        const std::uint64_t seed = 1 + i % seeds;
        ScenarioConfig cfg = kind == CorridorKind::FundamentalDiagram
                                 ? preset_fundamental_diagram(rho, seed)
                                 : preset_stop_and_go(rho, seed);
        if (second_parameter_set) apply_second_parameter_set(cfg);
        const ExperimentOutput out = run_experiment(cfg, {});
        rows[i] = {rho, seed, out.speed};
    });
    return rows;
}

std::vector<LaneRunRow> sweep_lanes(int seeds, int parallel, double rho, double snapshot_t) {
    std::vector<LaneRunRow> rows(seeds);
    run_tasks(seeds, parallel, [&](int i) {
        ScenarioConfig cfg = preset_lanes(rho, 1 + i);
        cfg.duration = snapshot_t + 5.0;
        ExperimentOptions opt;
        opt.density = false;
        opt.lane_snapshot_t = snapshot_t;
        const ExperimentOutput out = run_experiment(cfg, opt);
        LaneRunRow& r = rows[i];
        r.seed = 1 + i;
        for (const LaneCount& lc : out.lanes) {
            if (lc.direction == "east") r.lanes_east = lc.result.count;
            if (lc.direction == "west") r.lanes_west = lc.result.count;
            r.no_lanes = r.no_lanes || lc.result.no_lanes;
        }
    });
    return rows;
}

SpeedStatsTable aggregate_speed_stats(const std::vector<CorridorRow>& rows) {
    SpeedStatsTable t;
    for (const CorridorRow& r : rows) {
        const auto it = std::find(t.rho.begin(), t.rho.end(), r.rho);
        if (it == t.rho.end()) {
            t.rho.push_back(r.rho);
            t.mu_norm.push_back(r.speed.mu_norm);
            t.sigma_norm.push_back(r.speed.sigma_norm);
        } else {
            // running mean over seeds
            const size_t k = it - t.rho.begin();
            int count = 1;
            for (const CorridorRow& q : rows)
                if (q.rho == r.rho && &q < &r) ++count;
            t.mu_norm[k] += (r.speed.mu_norm - t.mu_norm[k]) / (count + 0.0);
            t.sigma_norm[k] += (r.speed.sigma_norm - t.sigma_norm[k]) / (count + 0.0);
        }
    }
    if (t.rho.size() >= 5) {
        t.mu_filt = zero_phase_filter(t.mu_norm, 5);
        t.sigma_filt = zero_phase_filter(t.sigma_norm, 5);
    } else {
        t.mu_filt = t.mu_norm;
        t.sigma_filt = t.sigma_norm;
    }
    return t;
}

void write_speed_stats_csv(const SpeedStatsTable& t, const std::string& path) {
    CsvFile csv(path, "rho_global,mu_norm,sigma_norm,mu_filt,sigma_filt");
    for (size_t i = 0; i < t.rho.size(); ++i)
        csv.row({t.rho[i], t.mu_norm[i], t.sigma_norm[i], t.mu_filt[i], t.sigma_filt[i]});
    csv.close();
}

}  // namespace gnm
