#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnm/integrator.hpp"
#include "gnm/scenario.hpp"

namespace gnm {

// ---------------------------------------------------------------------------
// density

struct DensityConfig {
    double cap_radius = 2.0;     // sparse cells are capped at this disc area
    double fallback_radius = 1.0;  // disc-count fallback for degenerate cells
    bool periodic_x = false;
    double period = 0.0;
    std::optional<AABB> domain;  // cells are clipped to it (y always, x if closed)
};

/// Voronoi-cell density of one agent: 1 / area of its bisector cell, clipped
/// to the walkable domain, with the area capped at pi * cap_radius^2.
double local_density(size_t index, std::span<const Vec2> positions, const DensityConfig& cfg);

/// Disc-counting alternative (also the degenerate-tessellation fallback).
double local_density_disc(size_t index, std::span<const Vec2> positions,
                          const DensityConfig& cfg);

// ---------------------------------------------------------------------------
// series operations

/// Moving-average filtfilt: forward width-w pass and its time-reversed twin,
/// mirror padding at the edges. Equivalent to one symmetric triangular kernel,
/// evaluated with paired summation so filtering commutes with reversal exactly.
std::vector<double> zero_phase_filter(std::span<const double> series, int width = 5);

/// Crossings per second over the window; defaults to [first, last] crossing.
double flow_rate(std::span<const double> crossing_times,
                 std::optional<std::pair<double, double>> window = std::nullopt);

struct SpeedStats {
    double mu_norm = 0.0;     // mean speed / v_mean
    double sigma_norm = 0.0;  // speed standard deviation / v_std
    size_t samples = 0;
};

SpeedStats speed_statistics(std::span<const double> speeds, double v_mean = 1.34,
                            double v_std = 0.26);

struct LaneResult {
    int count = 0;
    bool no_lanes = false;  // no maximum exceeded 1.5x the histogram mean
    std::vector<double> histogram;  // smoothed bin counts
};

/// Histogram of cross-axis positions (0.5 m bins over [y_min, y_max]),
/// zero-phase smoothed; lanes are local maxima above half the global maximum.
LaneResult detect_lanes(std::span<const double> cross_positions, double y_min, double y_max,
                        double bin_width = 0.5, int filter_width = 5);

// ---------------------------------------------------------------------------
// pairwise distance

/// Exact brute-force minimum center distance (minimum image along x when
/// periodic). Requires >= 2 positions.
double min_pairwise_distance(std::span<const Vec2> positions, bool periodic_x = false,
                             double period = 0.0);

/// Hash-accelerated variant: exact whenever the result is below `cutoff`,
/// +inf otherwise. With cutoff >= the domain diameter it equals brute force.
double min_pairwise_distance_indexed(std::span<const Vec2> positions, double cutoff,
                                     bool periodic_x = false, double period = 0.0);

// ---------------------------------------------------------------------------
// sinks fed by the simulation loop

/// CSV trajectories: t,id,x,y,w,vdes at the output cadence.
class TrajectorySink : public SampleSink {
public:
    explicit TrajectorySink(const std::string& path);
    void on_sample(double t, std::span<const Agent> agents) override;
    void finish() override;

private:
    std::string path_;
    std::string buffer_;
};

/// Crossing times over a vertical line, one per agent per passage.
class FlowSink : public SampleSink {
public:
    FlowSink(double line_x, bool periodic_x = false, double period = 0.0);
    void on_sample(double t, std::span<const Agent> agents) override;

    const std::vector<std::pair<double, int>>& crossings() const { return crossings_; }
    std::vector<double> crossing_times() const;
    void write_csv(const std::string& path) const;

private:
    double line_x_;
    bool periodic_;
    double period_;
    std::vector<std::pair<double, Vec2>> prev_;  // t, position per id
    std::vector<uint8_t> crossed_;
    std::vector<std::pair<double, int>> crossings_;
};

/// Tracks the run minimum pairwise distance (exact below `cutoff`) and logs
/// pairs closer than the collision threshold.
class MinDistanceSink : public SampleSink {
public:
    MinDistanceSink(double collision_threshold, bool periodic_x = false, double period = 0.0,
                    double cutoff = 1.0);
    void on_sample(double t, std::span<const Agent> agents) override;

    double run_minimum() const { return run_min_; }  // +inf if never below cutoff
    struct Collision {
        double t;
        int id_a, id_b;
        double dist;
    };
    const std::vector<Collision>& collisions() const { return collisions_; }
    void write_csv(const std::string& path) const;

private:
    double threshold_;
    bool periodic_;
    double period_;
    double cutoff_;
    double run_min_ = std::numeric_limits<double>::infinity();
    std::vector<Collision> collisions_;
    std::vector<Vec2> scratch_;
};

/// Per-agent (t, id, local density, speed) rows at the density cadence;
/// speeds are finite differences over the output cadence.
class DensitySpeedSink : public SampleSink {
public:
    DensitySpeedSink(const MeasurementConfig& mc, const Scenario& scn);
    void on_sample(double t, std::span<const Agent> agents) override;

    struct Row {
        double t;
        int id;
        double rho;
        double speed;
    };
    const std::vector<Row>& rows() const { return rows_; }
    /// Instantaneous speeds sampled after the warm-up.
    std::vector<double> stationary_speeds() const;
    void write_csv(const std::string& path) const;

private:
    double cadence_;
    double warmup_;
    double next_t_ = 0.0;
    DensityConfig density_cfg_;
    double prev_t_ = -1.0;
    std::vector<std::pair<int, Vec2>> prev_positions_;
    std::vector<Row> rows_;
};

/// Snapshot of alive agent states at a fixed time (lane detection input).
class SnapshotSink : public SampleSink {
public:
    explicit SnapshotSink(double at_t) : at_(at_t) {}
    void on_sample(double t, std::span<const Agent> agents) override;
    const std::vector<Agent>& agents() const { return agents_; }
    double captured_at() const { return captured_; }

private:
    double at_;
    double captured_ = -1.0;
    std::vector<Agent> agents_;
};

}  // namespace gnm
