#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gnm/integrator.hpp"
#include "gnm/measurement.hpp"
#include "gnm/presets.hpp"

using namespace gnm;

namespace {

std::vector<double> integrate_adaptive(const RhsFn& f, std::vector<double> y, double t0,
                                       double t1, const IntegratorConfig& cfg,
                                       double* h_final = nullptr) {
    Dp45 stepper(y.size());
    double t = t0;
    double h = cfg.h_init;
    int guard = 0;
    while (t < t1 - 1e-14) {
        REQUIRE(++guard < 200000);
        const double ht = std::min(h, t1 - t);
        const StepOutcome out = stepper.attempt(f, y, t, ht, cfg);
        if (out.accepted) {
            y = stepper.result();
            t += ht;
        }
        h = std::clamp(out.h_next, cfg.h_min, cfg.h_max);
    }
    if (h_final) *h_final = h;
    return y;
}

const RhsFn decay = [](std::span<const double> y, double, std::span<double> d) {
    for (size_t i = 0; i < y.size(); ++i) d[i] = -y[i];
};

ScenarioConfig free_agent_corridor(double duration) {
    ScenarioConfig cfg;
    Scenario& s = cfg.scenario;
    s.domain = {{0.0, 0.0}, {60.0, 4.0}};
    s.boundary = Boundary::PeriodicX;
    s.grid_h = 0.1;
    s.targets.push_back({"east", {}, Vec2{1.0, 0.0}});
    cfg.duration = duration;
    return cfg;
}

Agent lone_agent(double v_des = 1.34) {
    Agent a;
    a.id = 0;
    a.x = {5.0, 2.0};
    a.w = 0.0;
    a.v_des = v_des;
    return a;
}

// closed-form relaxation from rest: w(t) = v (1 - e^(-t/tau))
double w_exact(double t, double v = 1.34, double tau = 0.5) {
    return v * (1.0 - std::exp(-t / tau));
}
double x_exact(double t, double v = 1.34, double tau = 0.5) {
    return v * t - v * tau * (1.0 - std::exp(-t / tau));
}

}  // namespace

TEST_CASE("adaptive run on dy/dt = -y meets the paper tolerances") {
    IntegratorConfig cfg;  // tol_abs 1e-5, tol_rel 1e-4
    const std::vector<double> y = integrate_adaptive(decay, {1.0}, 0.0, 1.0, cfg);
    CHECK(std::fabs(y[0] - std::exp(-1.0)) <= 1e-5);
}

TEST_CASE("dy/dt = 0: state unchanged bitwise and h opens up to h_max") {
    const RhsFn zero = [](std::span<const double> y, double, std::span<double> d) {
        for (size_t i = 0; i < y.size(); ++i) d[i] = 0.0;
    };
    IntegratorConfig cfg;
    cfg.h_init = 1e-3;
    double h_final = 0.0;
    const std::vector<double> y =
        integrate_adaptive(zero, {0.25, -3.5}, 0.0, 5.0, cfg, &h_final);
    CHECK(y[0] == 0.25);
    CHECK(y[1] == -3.5);
    CHECK(h_final == cfg.h_max);
}

TEST_CASE("fixed-step convergence order is at least 4.5") {
    const auto global_error = [&](double h) {
        std::vector<double> y{1.0};
        double t = 0.0;
        const int n = static_cast<int>(std::round(1.0 / h));
        for (int i = 0; i < n; ++i, t += h) Dp45::fixed_step(decay, y, t, h);
        return std::fabs(y[0] - std::exp(-1.0));
    };
    const double e1 = global_error(0.1);
    const double e2 = global_error(0.05);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 4.5);
}

TEST_CASE("step error estimate collapses h on an impossible tolerance") {
    ScenarioConfig cfg = preset_bottleneck(1.0, 30, 3);
    cfg.duration = 1.0;
    cfg.integrator.tol_abs = 1e-14;
    cfg.integrator.tol_rel = 1e-16;
    cfg.integrator.h_min = 0.05;
    cfg.integrator.h_init = 0.05;
    CHECK_THROWS_AS(run_simulation(cfg), NumericError);
}

TEST_CASE("free agent reproduces the closed-form relaxation") {
    ScenarioConfig cfg = free_agent_corridor(6.0);
    const SimulationResult res = run_simulation(cfg, {lone_agent()});
    REQUIRE(res.agents.size() == 1);
    CHECK(std::fabs(res.agents[0].w - w_exact(6.0)) <= 1e-5);
    CHECK(std::fabs(res.agents[0].x.x - (5.0 + x_exact(6.0))) <= 1e-3);
    CHECK(res.agents[0].x.y == 2.0);
}

TEST_CASE("10 m straight run arrives on the closed-form schedule") {
    // solve x_exact(t*) = 10 (fixed point of t = (10 + v tau (1-e^(-t/tau))) / v)
    double t_star = 10.0 / 1.34;
    for (int i = 0; i < 60; ++i)
        t_star = (10.0 + 1.34 * 0.5 * (1.0 - std::exp(-t_star / 0.5))) / 1.34;
    ScenarioConfig cfg = free_agent_corridor(t_star);
    const SimulationResult res = run_simulation(cfg, {lone_agent()});
    CHECK(std::fabs(res.agents[0].x.x - 15.0) <= 1e-3);  // started at x = 5
    CHECK(t_star == doctest::Approx(10.0 / 1.34 + 0.5).epsilon(1e-4));
}

TEST_CASE("dense-output samples match the closed form at the cadence") {
    ScenarioConfig cfg = free_agent_corridor(4.0);
    struct Probe : SampleSink {
        double worst_w = 0.0, worst_x = 0.0;
        void on_sample(double t, std::span<const Agent> agents) override {
            worst_w = std::max(worst_w, std::fabs(agents[0].w - w_exact(t)));
            worst_x = std::max(worst_x, std::fabs(agents[0].x.x - (5.0 + x_exact(t))));
        }
    } probe;
    SampleSink* sinks[] = {&probe};
    run_simulation(cfg, {lone_agent()}, sinks);
    CHECK(probe.worst_w <= 1e-5);
    CHECK(probe.worst_x <= 1e-3);
}

TEST_CASE("zero agents complete immediately with empty trajectories") {
    ScenarioConfig cfg = free_agent_corridor(100.0);
    struct Count : SampleSink {
        int samples = 0;
        void on_sample(double, std::span<const Agent>) override { ++samples; }
    } count;
    SampleSink* sinks[] = {&count};
    const SimulationResult res = run_simulation(cfg, std::vector<Agent>{}, sinks);
    CHECK(res.steps_accepted == 0);
    CHECK(count.samples == 0);
    CHECK(res.agents.empty());
}

TEST_CASE("determinism: identical config and seed give bit-identical states") {
    ScenarioConfig cfg = preset_bottleneck(1.0, 40, 7);
    cfg.duration = 15.0;
    const SimulationResult a = run_simulation(cfg);
    const SimulationResult b = run_simulation(cfg);
    REQUIRE(a.agents.size() == b.agents.size());
    for (size_t i = 0; i < a.agents.size(); ++i) {
        CHECK(a.agents[i].x == b.agents[i].x);
        CHECK(a.agents[i].w == b.agents[i].w);
        CHECK(a.agents[i].alive == b.agents[i].alive);
    }
    CHECK(a.steps_accepted == b.steps_accepted);
}

TEST_CASE("tolerance proportionality: 10x coarser tolerance moves the answer less "
          "than its own error allowance") {
    ScenarioConfig fine = free_agent_corridor(10.0);
    ScenarioConfig coarse = free_agent_corridor(10.0);
    coarse.integrator.tol_abs = 1e-4;
    coarse.integrator.tol_rel = 1e-3;
    const SimulationResult rf = run_simulation(fine, {lone_agent()});
    const SimulationResult rc = run_simulation(coarse, {lone_agent()});
    const double diff = (rf.agents[0].x - rc.agents[0].x).norm();
    const double allowance =
        10.0 * (coarse.integrator.tol_abs + coarse.integrator.tol_rel * 20.0);
    CHECK(diff < allowance);
}

TEST_CASE("absorption: alive count non-increasing, all absorbed eventually") {
    ScenarioConfig cfg = preset_bottleneck(1.6, 30, 11);
    cfg.duration = 120.0;
    struct AliveTrace : SampleSink {
        int prev = std::numeric_limits<int>::max();
        bool monotone = true;
        void on_sample(double, std::span<const Agent> agents) override {
            int alive = 0;
            for (const Agent& a : agents) alive += a.alive ? 1 : 0;
            monotone &= alive <= prev;
            prev = alive;
        }
    } trace;
    SampleSink* sinks[] = {&trace};
    const SimulationResult res = run_simulation(cfg, sinks);
    CHECK(trace.monotone);
    CHECK(res.absorbed == 30);
    CHECK(res.t_end < 120.0);  // early finish once everyone is through
}
