#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gnm/measurement.hpp"
#include "gnm/presets.hpp"

namespace gnm {

struct ExperimentOptions {
    std::string out_dir;        // empty: no files written
    bool trajectories = false;  // trajectory CSV (can be large)
    bool density = true;        // Voronoi density sampling
    std::optional<double> lane_snapshot_t;  // capture lane histograms at this time
    std::optional<double> cone_fraction;    // capture crowd shape when alive drops below
                                            // fraction * spawned (bottleneck)
};

struct LaneCount {
    std::string direction;
    LaneResult result;
};

struct ExperimentOutput {
    SimulationResult sim;
    std::vector<double> crossings;  // sorted crossing times over the flow line
    double flow = 0.0;              // steady-state window convention
    double min_distance = std::numeric_limits<double>::infinity();
    size_t collision_events = 0;
    SpeedStats speed;               // stationary-phase instantaneous speeds
    std::vector<LaneCount> lanes;   // one entry per direction target
    double lanes_t = -1.0;
    // crowd shape in front of a constriction
    bool have_cone = false;
    double cone_x_extent = 0.0;      // depth of the waiting crowd
    double cone_gap_y_extent = 0.0;  // cross extent right at the constriction line
};

/// Runs one configured simulation with the standard measurement sinks
/// attached; optionally writes the metric CSVs and run.json into out_dir.
ExperimentOutput run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& opt = {});

// --- sweeps ----------------------------------------------------------------

struct BottleneckRow {
    double width = 0.0;
    std::uint64_t seed = 0;
    double flow = 0.0;
    double specific_flow = 0.0;
    double min_distance = 0.0;
    double cone_x_extent = 0.0;
    double cone_gap_y_extent = 0.0;
};

std::vector<BottleneckRow> sweep_bottleneck(std::span<const double> widths, int seeds,
                                            int parallel, int agents = 180);

enum class CorridorKind { FundamentalDiagram, StopAndGo };

struct CorridorRow {
    double rho = 0.0;
    std::uint64_t seed = 0;
    SpeedStats speed;
};

std::vector<CorridorRow> sweep_corridor(CorridorKind kind, std::span<const double> densities,
                                        int seeds, int parallel, bool second_parameter_set);

struct LaneRunRow {
    std::uint64_t seed = 0;
    int lanes_east = 0;
    int lanes_west = 0;
    bool no_lanes = false;
};

std::vector<LaneRunRow> sweep_lanes(int seeds, int parallel, double rho = 0.3,
                                    double snapshot_t = 120.0);

/// speed_stats.csv rows: rho, mu_norm, sigma_norm plus zero-phase filtered
/// columns over the density ladder (seed-averaged when several seeds ran).
struct SpeedStatsTable {
    std::vector<double> rho;
    std::vector<double> mu_norm;
    std::vector<double> sigma_norm;
    std::vector<double> mu_filt;
    std::vector<double> sigma_filt;
};
SpeedStatsTable aggregate_speed_stats(const std::vector<CorridorRow>& rows);
void write_speed_stats_csv(const SpeedStatsTable& table, const std::string& path);

/// Deterministic order-preserving task runner (sweep-level parallelism).
void run_tasks(int n_tasks, int parallel, const std::function<void(int)>& task);

}  // namespace gnm
