#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gnm/dynamics.hpp"
#include "gnm/scenario.hpp"

namespace gnm {

using RhsFn = std::function<void(std::span<const double>, double, std::span<double>)>;

struct StepOutcome {
    bool accepted = false;
    double error = 0.0;   // scaled error measure; accept when <= 1
    double h_next = 0.0;  // controller proposal (unclamped to h bounds)
    int worst = -1;       // component with the largest scaled error
};

/// Dormand-Prince 4(5) embedded pair with FSAL and a 4th-order dense-output
/// interpolant. The object owns stage workspace for one system dimension.
class Dp45 {
public:
    explicit Dp45(size_t dim);

    size_t dim() const { return dim_; }

    /// Prime the FSAL derivative (k1 at the current (t, y)).
    void prime(const RhsFn& f, std::span<const double> y, double t);
    void invalidate() { have_k1_ = false; }
    bool primed() const { return have_k1_; }

    /// One attempted step. On acceptance, result() holds y(t+h), k_last()
    /// holds f(t+h, result()) for FSAL reuse, and dense() interpolates on
    /// [t, t+h]. On rejection y is untouched and k1 stays valid.
    StepOutcome attempt(const RhsFn& f, std::span<const double> y, double t, double h,
                        const IntegratorConfig& cfg);

    const std::vector<double>& result() const { return ynew_; }
    const std::vector<double>& k_last() const { return k_[6]; }

    /// theta in [0, 1] maps to t..t+h of the last accepted step.
    void dense(double theta, std::span<double> out) const;

    /// Plain fixed-step advance with the 5th-order weights (no error control).
    static void fixed_step(const RhsFn& f, std::vector<double>& y, double t, double h);

private:
    size_t dim_;
    std::vector<double> k_[7];
    std::vector<double> ytmp_;
    std::vector<double> ynew_;
    std::vector<double> rcont_[5];
    double h_last_ = 0.0;
    bool have_k1_ = false;

    void stages(const RhsFn& f, std::span<const double> y, double t, double h);
};

// ---------------------------------------------------------------------------
// simulation loop

/// Receives interpolated crowd snapshots at the fixed output cadence.
/// Snapshots contain every agent record; dead agents keep their last state.
class SampleSink {
public:
    virtual ~SampleSink() = default;
    virtual void on_sample(double t, std::span<const Agent> agents) = 0;
    virtual void on_absorb(double /*t*/, const Agent& /*agent*/) {}
    virtual void finish() {}
};

struct SimulationResult {
    double t_end = 0.0;
    long steps_accepted = 0;
    long steps_rejected = 0;
    int spawned = 0;
    int absorbed = 0;
    double wall_seconds = 0.0;
    std::vector<Agent> agents;
};

/// Integrates the whole crowd as one coupled system; applies periodic wrap
/// and target absorption after each accepted step; samples sinks at
/// measurement.output_cadence via the dense interpolant. Deterministic for a
/// fixed (config, seed).
SimulationResult run_simulation(const ScenarioConfig& cfg,
                                std::span<SampleSink* const> sinks = {});

/// Same, but with externally prepared agents (bypasses the spawn step).
SimulationResult run_simulation(const ScenarioConfig& cfg, std::vector<Agent> agents,
                                std::span<SampleSink* const> sinks = {});

}  // namespace gnm
