#include "gnm/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

namespace gnm {

// ---------------------------------------------------------------------------
// Dormand-Prince coefficients

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
// 5th-order weights (also the last stage row -> FSAL)
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// difference to the embedded 4th-order solution
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output extension
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

Dp45::Dp45(size_t dim) : dim_(dim) {
    for (auto& k : k_) k.assign(dim, 0.0);
    ytmp_.assign(dim, 0.0);
    ynew_.assign(dim, 0.0);
    for (auto& r : rcont_) r.assign(dim, 0.0);
}

void Dp45::prime(const RhsFn& f, std::span<const double> y, double t) {
    f(y, t, k_[0]);
    have_k1_ = true;
}

void Dp45::stages(const RhsFn& f, std::span<const double> y, double t, double h) {
    const size_t n = dim_;
    if (!have_k1_) prime(f, y, t);

    for (size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * a21 * k_[0][i];
    f(ytmp_, t + c2 * h, k_[1]);
    for (size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * (a31 * k_[0][i] + a32 * k_[1][i]);
    f(ytmp_, t + c3 * h, k_[2]);
    for (size_t i = 0; i < n; ++i)
        ytmp_[i] = y[i] + h * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
    f(ytmp_, t + c4 * h, k_[3]);
    for (size_t i = 0; i < n; ++i)
        ytmp_[i] =
            y[i] + h * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
    f(ytmp_, t + c5 * h, k_[4]);
    for (size_t i = 0; i < n; ++i)
        ytmp_[i] = y[i] + h * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] +
                               a64 * k_[3][i] + a65 * k_[4][i]);
    f(ytmp_, t + h, k_[5]);
    for (size_t i = 0; i < n; ++i)
        ynew_[i] = y[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] +
                               b5 * k_[4][i] + b6 * k_[5][i]);
    f(ynew_, t + h, k_[6]);
}

StepOutcome Dp45::attempt(const RhsFn& f, std::span<const double> y, double t, double h,
                          const IntegratorConfig& cfg) {
    stages(f, y, t, h);
    h_last_ = h;

    StepOutcome out;
    double emax = 0.0;
    for (size_t i = 0; i < dim_; ++i) {
        const double err = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] +
                                e5 * k_[4][i] + e6 * k_[5][i] + e7 * k_[6][i]);
        const double y4 = ynew_[i] - err;
        const double scale =
            cfg.tol_abs + cfg.tol_rel * std::max(std::fabs(ynew_[i]), std::fabs(y4));
        const double e = std::fabs(err) / scale;
        if (e > emax) {
            emax = e;
            out.worst = static_cast<int>(i);
        }
    }
    out.error = emax;
    out.accepted = emax <= 1.0;

    const double factor =
        emax > 0.0 ? std::clamp(cfg.safety * std::pow(emax, -0.2), 0.2, 5.0) : 5.0;
    out.h_next = h * factor;

    if (out.accepted) {
        for (size_t i = 0; i < dim_; ++i) {
            const double delta = ynew_[i] - y[i];
            rcont_[0][i] = y[i];
            rcont_[1][i] = delta;
            rcont_[2][i] = h * k_[0][i] - delta;
            rcont_[3][i] = delta - h * k_[6][i] - rcont_[2][i];
            rcont_[4][i] = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] +
                                d5 * k_[4][i] + d6 * k_[5][i] + d7 * k_[6][i]);
        }
        k_[0] = k_[6];  // FSAL: the last stage is k1 of the next step
        have_k1_ = true;
    }
    return out;
}

void Dp45::dense(double theta, std::span<double> out) const {
    const double t1 = 1.0 - theta;
    for (size_t i = 0; i < dim_; ++i) {
        out[i] = rcont_[0][i] +
                 theta * (rcont_[1][i] +
                          t1 * (rcont_[2][i] + theta * (rcont_[3][i] + t1 * rcont_[4][i])));
    }
}

void Dp45::fixed_step(const RhsFn& f, std::vector<double>& y, double t, double h) {
    Dp45 s(y.size());
    s.stages(f, y, t, h);
    y = s.ynew_;
}

// ---------------------------------------------------------------------------
// simulation loop

namespace {

std::vector<int> alive_indices(const std::vector<Agent>& agents) {
    std::vector<int> act;
    for (size_t i = 0; i < agents.size(); ++i)
        if (agents[i].alive) act.push_back(static_cast<int>(i));
    return act;
}

void wrap_positions(std::vector<double>& y, size_t n, const Scenario& scn) {
    if (scn.boundary != Boundary::PeriodicX) return;
    const double lo = scn.domain.lo.x;
    const double L = scn.period();
    for (size_t k = 0; k < n; ++k) {
        double& x = y[3 * k];
        if (x >= lo + L) x -= L * std::floor((x - lo) / L);
        else if (x < lo) x += L * std::ceil((lo - x) / L);
    }
}

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& cfg,
                                std::span<SampleSink* const> sinks) {
    Rng rng(cfg.population.seed);
    return run_simulation(cfg, spawn_all(cfg, rng), sinks);
}

SimulationResult run_simulation(const ScenarioConfig& cfg, std::vector<Agent> agents,
                                std::span<SampleSink* const> sinks) {
    const auto wall_start = std::chrono::steady_clock::now();
    cfg.validate();
    const Scenario& scn = cfg.scenario;

    SimulationResult res;
    res.spawned = static_cast<int>(agents.size());

    // floor fields, one per target (built concurrently when there are several)
    std::vector<FloorField> fields(scn.targets.size());
    if (scn.targets.size() > 1) {
        std::vector<std::future<FloorField>> futs;
        for (const Target& t : scn.targets)
            futs.push_back(std::async(std::launch::async, [&scn, &t, &cfg] {
                return build_floor_field(scn, t, cfg.model);
            }));
        for (size_t i = 0; i < futs.size(); ++i) fields[i] = futs[i].get();
    } else if (!scn.targets.empty()) {
        fields[0] = build_floor_field(scn, scn.targets[0], cfg.model);
    }

    double v_cap = 0.0;
    for (const Agent& a : agents) v_cap = std::max(v_cap, a.v_des);

    std::vector<int> active = alive_indices(agents);
    SimContext ctx;
    ctx.init(scn, cfg.model, fields, agents, active, v_cap, cfg.integrator.h_max);

    const double cadence = cfg.measurement.output_cadence;
    double next_sample = 0.0;
    std::vector<Agent> snapshot = agents;
    const auto emit = [&](double ts, std::span<const double> y) {
        for (size_t i = 0; i < agents.size(); ++i) snapshot[i].alive = agents[i].alive;
        for (size_t k = 0; k < active.size(); ++k) {
            Agent& a = snapshot[active[k]];
            a.x = {y[3 * k], y[3 * k + 1]};
            a.w = y[3 * k + 2];
            if (scn.boundary == Boundary::PeriodicX) {
                const double L = scn.period();
                if (a.x.x >= scn.domain.lo.x + L) a.x.x -= L * std::floor((a.x.x - scn.domain.lo.x) / L);
                else if (a.x.x < scn.domain.lo.x) a.x.x += L * std::ceil((scn.domain.lo.x - a.x.x) / L);
            }
        }
        for (SampleSink* s : sinks) s->on_sample(ts, snapshot);
    };

    std::vector<double> y = pack_state(agents, active);
    const bool per_stage = cfg.integrator.rebuild_index_per_stage;
    if (per_stage) ctx.stage_slack = 0.0;
    const RhsFn f = [&](std::span<const double> ys, double ts, std::span<double> dys) {
        if (per_stage) ctx.rebuild_index(ys);
        rhs(ys, ts, dys, ctx);
    };

    double t = 0.0;
    if (!active.empty()) emit(0.0, y);
    next_sample = cadence;

    Dp45 stepper(y.size());
    std::vector<double> ysample(y.size());
    double h = std::clamp(cfg.integrator.h_init, cfg.integrator.h_min, cfg.integrator.h_max);
    const double w_slack = 100.0 * cfg.integrator.tol_abs + 1e-9;

    while (!active.empty() && t < cfg.duration - 1e-12) {
        const double h_cap = cfg.duration - t;
        const double h_try = std::min(h, h_cap);
        if (stepper.dim() != y.size()) {
            stepper = Dp45(y.size());
            ysample.resize(y.size());
        }
        if (!per_stage) ctx.rebuild_index(y);
        if (!stepper.primed()) stepper.prime(f, y, t);

        const StepOutcome out = stepper.attempt(f, y, t, h_try, cfg.integrator);
        if (!out.accepted) {
            ++res.steps_rejected;
            h = std::max(out.h_next, cfg.integrator.h_min);
            if (out.h_next < cfg.integrator.h_min) {
                const int slot = out.worst / 3;
                const int agent_id = agents[active[slot]].id;
                throw NumericError("step size collapsed below h_min at t=" + std::to_string(t) +
                                   " (worst component: agent " + std::to_string(agent_id) +
                                   ", entry " + std::to_string(out.worst % 3) + ")");
            }
            continue;
        }

        ++res.steps_accepted;
        // dense-output samples inside (t, t+h_try]
        while (next_sample <= t + h_try + 1e-12 && next_sample <= cfg.duration + 1e-12) {
            const double theta = std::clamp((next_sample - t) / h_try, 0.0, 1.0);
            stepper.dense(theta, ysample);
            emit(next_sample, ysample);
            next_sample += cadence;
        }

        y = stepper.result();
        t += h_try;
        h = std::clamp(out.h_next, cfg.integrator.h_min, cfg.integrator.h_max);

        wrap_positions(y, active.size(), scn);
        unpack_state(y, agents, active);

        // invariant region of the relaxed speed
        for (size_t k = 0; k < active.size(); ++k) {
            const double w = y[3 * k + 2];
            if (!(w >= -w_slack && w <= v_cap + w_slack))
                throw NumericError("relaxed speed left [0, v_max] for agent " +
                                   std::to_string(agents[active[k]].id) + " at t=" +
                                   std::to_string(t) + " (w=" + std::to_string(w) + ")");
        }

        // absorption at step end
        bool changed = false;
        for (const int idx : active) {
            Agent& a = agents[idx];
            const Target& tgt = scn.targets[a.target];
            if (!tgt.direction && tgt.region.contains(a.x)) {
                a.alive = false;
                ++res.absorbed;
                changed = true;
                for (SampleSink* s : sinks) s->on_absorb(t, a);
            }
        }
        if (changed) {
            active = alive_indices(agents);
            y = pack_state(agents, active);
            stepper.invalidate();
        }
    }

    res.t_end = t;
    res.agents = std::move(agents);
    for (SampleSink* s : sinks) s->finish();
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

}  // namespace gnm
