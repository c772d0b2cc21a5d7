#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gnm/dynamics.hpp"
#include "gnm/integrator.hpp"
#include "gnm/presets.hpp"
#include "gnm/smoothmath.hpp"

using namespace gnm;

namespace {

/// Periodic corridor with a constant +x drive and no obstacles unless added.
Scenario bare_corridor(double L = 40.0, double W = 4.0) {
    Scenario s;
    s.domain = {{0.0, 0.0}, {L, W}};
    s.boundary = Boundary::PeriodicX;
    s.grid_h = 0.1;
    s.targets.push_back({"east", {}, Vec2{1.0, 0.0}});
    return s;
}

struct Fixture {
    Scenario scenario;
    ModelParams params;
    std::vector<FloorField> fields;
    std::vector<Agent> agents;
    std::vector<int> active;
    SimContext ctx;
    std::vector<double> state;

    Fixture(Scenario scn, std::vector<Vec2> positions, ModelParams prm = {})
        : scenario(std::move(scn)), params(prm) {
        for (const Target& t : scenario.targets)
            fields.push_back(build_floor_field(scenario, t, params));
        for (size_t i = 0; i < positions.size(); ++i) {
            Agent a;
            a.id = static_cast<int>(i);
            a.x = positions[i];
            a.v_des = 1.34;
            a.target = 0;
            agents.push_back(a);
            active.push_back(static_cast<int>(i));
        }
        ctx.init(scenario, params, fields, agents, active, 3.0, 0.1);
        state = pack_state(agents, active);
        ctx.rebuild_index(state);
    }

    std::vector<double> eval_rhs() {
        std::vector<double> d(state.size());
        rhs(state, 0.0, d, ctx);
        return d;
    }
};

}  // namespace

TEST_CASE("nav_target: periodic corridor gives exactly the corridor axis") {
    const Scenario s = bare_corridor();
    const FloorField f = build_floor_field(s, s.targets[0], {});
    CHECK(nav_target(f, {3.0, 2.0}) == Vec2{1.0, 0.0});
    CHECK(nav_target(f, {39.9, 0.1}) == Vec2{1.0, 0.0});
}

TEST_CASE("nav_target: empty domain points at the target within 0.05 rad") {
    Scenario s;
    s.domain = {{0.0, 0.0}, {10.0, 10.0}};
    s.grid_h = 0.1;
    Target t;
    t.id = "spot";
    t.region = Polygon{{{8.9, 4.9}, {9.1, 4.9}, {9.1, 5.1}, {8.9, 5.1}}};
    s.targets.push_back(t);
    const FloorField f = build_floor_field(s, t, {});

    const Vec2 x{2.0, 5.0};  // target straight east
    const Vec2 n = nav_target(f, x);
    CHECK(n.norm() > 0.5);
    const double angle = std::atan2(n.y, n.x);
    CHECK(std::fabs(angle) < 0.05);
}

TEST_CASE("nav_target: gradient leads around an obstacle, not into it") {
    Scenario s;
    s.domain = {{0.0, 0.0}, {10.0, 10.0}};
    s.grid_h = 0.1;
    s.obstacles.push_back(Polygon{{{5.0, 2.0}, {5.0, 8.0}}});  // wall between x and target
    Target t;
    t.id = "spot";
    t.region = Polygon{{{8.9, 4.9}, {9.1, 4.9}, {9.1, 5.1}, {8.9, 5.1}}};
    s.targets.push_back(t);
    const FloorField f = build_floor_field(s, t, {});

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uy(2.5, 7.5);
    for (int i = 0; i < 20; ++i) {
        const Vec2 x{3.0, uy(rng)};  // far side of the wall
        const Vec2 n = unit_or_zero(nav_target(f, x));
        REQUIRE(n.norm() > 0.0);
        // a short ray along the commanded direction stays traversable
        for (double step = 0.02; step <= s.grid_h + 1e-12; step += 0.02) {
            const Vec2 probe = x + n * step;
            CHECK(s.obstacles[0].distance(probe) > 0.04);
        }
    }
}

TEST_CASE("grad_pedestrian: conventions and scalar-kernel composition") {
    const ModelParams p;
    const Vec2 east{1.0, 0.0};
    CHECK(grad_pedestrian({2, 3}, {2, 3}, east, p) == Vec2{0, 0});  // coincident
    CHECK(grad_pedestrian({0, 0}, {p.R_p + 0.01, 0}, east, p) == Vec2{0, 0});
    CHECK(grad_pedestrian({0, 0}, {p.R_p, 0}, east, p) == Vec2{0, 0});

    // neighbor directly ahead at 0.35 m: norm is the product of the kernels
    const Vec2 g = grad_pedestrian({0, 0}, {0.35, 0}, east, p);
    const double want = smooth::bump_eps(0.35, {p.R_p, p.p_p}, p.eps) *
                        smooth::view_scale(east, {0.35, 0}, p.kappa,
                                           {p.logistic_x0, p.logistic_R});
    CHECK(g.x == doctest::Approx(want).epsilon(1e-14));
    CHECK(g.y == 0.0);
    CHECK(g.x > 0.0);  // points toward the neighbor
}

TEST_CASE("grad_obstacle: wall cases and corner bisector") {
    const ModelParams p;
    const Polygon wall{{{-5.0, 0.0}, {5.0, 0.0}}};
    CHECK(grad_obstacle({0.0, 0.5}, wall, p) == Vec2{0, 0});  // beyond R_B = 0.25

    const Vec2 g = grad_obstacle({0.0, 0.1}, wall, p);
    CHECK(g.x == 0.0);
    CHECK(g.y == doctest::Approx(-smooth::bump_eps(0.1, {p.R_B, p.p_B}, p.eps))
                     .epsilon(1e-14));
    CHECK(g.y < 0.0);  // toward the wall; the repulsion sign enters through N_P

    // corner equidistant from two faces: gradient along the bisector
    const Polygon box{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    const Vec2 corner_g = grad_obstacle({-0.1, -0.1}, box, p);
    CHECK(corner_g.x == doctest::Approx(corner_g.y).epsilon(1e-12));
    CHECK(corner_g.x > 0.0);
}

TEST_CASE("nav_combined: saturation, standoff cancellation, deflection") {
    const ModelParams p;
    // free path: unit vector along the drive
    CHECK(combine_navigation({2.0, 0.0}, {0.0, 0.0}) == Vec2{1.0, 0.0});
    // exact standoff: g(N_T) = -g(N_P) gives the zero vector
    CHECK(combine_navigation({1.0, 0.0}, {-1.0, 0.0}) == Vec2{0.0, 0.0});
    CHECK(combine_navigation({1.0, 0.0}, {-3.0, 0.0}) == Vec2{0.0, 0.0});  // ramp saturates

    // single neighbor slightly left of dead ahead deflects and shortens
    const Vec2 x_i{0, 0};
    const std::vector<Vec2> ahead{{0.4, 0.05}};
    const Vec2 n = nav_combined(x_i, {1.0, 0.0}, ahead, {}, p);
    CHECK(n.norm() < 1.0);
    CHECK(n.norm() > 0.0);
    CHECK(n.y < 0.0);
}

TEST_CASE("rhs: stopping and cruising fixed points") {
    Fixture fx(bare_corridor(), {{10.0, 2.0}});  // lone agent: |N| = 1 exactly

    SUBCASE("free agent at w = v_des cruises with dw/dt = 0") {
        fx.state[2] = 1.34;
        const std::vector<double> d = fx.eval_rhs();
        CHECK(d[0] == doctest::Approx(1.34).epsilon(1e-15));
        CHECK(d[1] == 0.0);
        CHECK(d[2] == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("relaxation toward the desired speed, and the N = 0 stop") {
        fx.state[2] = 0.8;
        const std::vector<double> d = fx.eval_rhs();
        CHECK(d[2] == doctest::Approx((1.34 - 0.8) / 0.5).epsilon(1e-12));
        // the N = 0 branch of the equations of motion: pure exponential stop
        const Vec2 n = combine_navigation({1, 0}, {-1, 0});
        CHECK(n == Vec2{0, 0});
        const double w = 0.8;
        CHECK((1.34 * n.norm() - w) / 0.5 == doctest::Approx(-w / 0.5));
    }
}

TEST_CASE("rhs: |N| <= 1 so agents never outrun their relaxed speed") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ux(0.0, 40.0), uy(0.4, 3.6), uw(0.0, 2.0);
    Scenario s = bare_corridor();
    s.obstacles.push_back(Polygon{{{0.0, 0.0}, {40.0, 0.0}}});
    s.obstacles.push_back(Polygon{{{0.0, 4.0}, {40.0, 4.0}}});
    std::vector<Vec2> pos;
    for (int i = 0; i < 120; ++i) pos.push_back({ux(rng), uy(rng)});
    Fixture fx(s, pos);
    for (size_t k = 0; k < pos.size(); ++k) fx.state[3 * k + 2] = uw(rng);

    const std::vector<double> d = fx.eval_rhs();
    for (size_t k = 0; k < pos.size(); ++k) {
        const double speed = std::hypot(d[3 * k], d[3 * k + 1]);
        CHECK(speed <= fx.state[3 * k + 2] + 1e-12);
    }
}

TEST_CASE("rhs: smooth in the state (finite-difference probe)") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> ux(0.0, 40.0), uy(0.4, 3.6);
    Scenario s = bare_corridor();
    s.obstacles.push_back(Polygon{{{0.0, 0.0}, {40.0, 0.0}}});
    s.obstacles.push_back(Polygon{{{0.0, 4.0}, {40.0, 4.0}}});
    std::vector<Vec2> pos;
    for (int i = 0; i < 80; ++i) pos.push_back({ux(rng), uy(rng)});
    Fixture fx(s, pos);
    for (size_t k = 0; k < pos.size(); ++k) fx.state[3 * k + 2] = 1.0;

    const std::vector<double> base = fx.eval_rhs();
    std::uniform_int_distribution<int> pick(0, static_cast<int>(fx.state.size()) - 1);
    for (int trial = 0; trial < 60; ++trial) {
        const int i = pick(rng);
        const double keep = fx.state[i];
        fx.state[i] = keep + 1e-6;
        const std::vector<double> bumped = fx.eval_rhs();
        fx.state[i] = keep;
        double dmax = 0.0;
        for (size_t k = 0; k < base.size(); ++k)
            dmax = std::max(dmax, std::fabs(bumped[k] - base[k]));
        CHECK(dmax < 1e-3);  // O(1e-4) scale, no jumps
    }
}

TEST_CASE("rhs: non-finite state names the agent") {
    Fixture fx(bare_corridor(), {{10.0, 2.0}, {11.0, 2.0}});
    fx.state[3] = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> d(fx.state.size());
    CHECK_THROWS_WITH_AS(rhs(fx.state, 0.0, d, fx.ctx), doctest::Contains("agent 1"),
                         NumericError);
}

TEST_CASE("indexed N_P equals the O(n^2) sum exactly (closed + periodic)") {
    std::mt19937_64 rng(41);
    for (int config = 0; config < 100; ++config) {
        const bool periodic = config % 2 == 1;
        const int n = 5 + static_cast<int>(rng() % 196);
        Scenario s = bare_corridor(20.0, 8.0);
        s.boundary = periodic ? Boundary::PeriodicX : Boundary::Closed;
        if (config % 3 == 0) {
            s.obstacles.push_back(Polygon{{{0.0, 0.0}, {20.0, 0.0}}});
            s.obstacles.push_back(Polygon{{{4.0, 3.0}, {5.0, 3.0}, {5.0, 4.0}, {4.0, 3.9}}});
        }
        std::uniform_real_distribution<double> ux(0.0, 19.999), uy(0.1, 7.9);
        std::vector<Vec2> pos;
        for (int i = 0; i < n; ++i) pos.push_back({ux(rng), uy(rng)});
        Fixture fx(s, pos);

        const double L = s.period();
        for (int slot = 0; slot < n; ++slot) {
            const Vec2 xi = pos[slot];
            const Vec2 dir = unit_or_zero(nav_target(fx.fields[0], xi));

            // brute force: every pair, ascending id, same minimum-image rule
            Vec2 sum{};
            for (int j = 0; j < n; ++j) {
                if (j == slot) continue;
                Vec2 off = pos[j] - xi;
                if (periodic) off.x = min_image(off.x, L);
                sum += grad_pedestrian({0.0, 0.0}, off, dir, fx.params);
            }
            for (const Polygon& o : s.obstacles) {
                const AABB box = o.bbox();
                if (box.distance(xi) < fx.params.R_B) {
                    sum += grad_obstacle(xi, o, fx.params);
                } else if (periodic) {
                    for (const Vec2 sft : {Vec2{xi.x + L, xi.y}, Vec2{xi.x - L, xi.y}})
                        if (box.distance(sft) < fx.params.R_B)
                            sum += grad_obstacle(sft, o, fx.params);
                }
            }
            const Vec2 brute = -sum;
            const Vec2 indexed = nav_repulsion(slot, fx.state, fx.ctx);
            CHECK(indexed.x == brute.x);
            CHECK(indexed.y == brute.y);
        }
    }
}

TEST_CASE("translation equivariance along a periodic corridor") {
    ScenarioConfig cfg;
    cfg.scenario = bare_corridor();
    cfg.scenario.obstacles.push_back(Polygon{{{0.0, 0.0}, {40.0, 0.0}}});
    cfg.scenario.obstacles.push_back(Polygon{{{0.0, 4.0}, {40.0, 4.0}}});
    cfg.duration = 3.0;
    cfg.measurement.output_cadence = 1.0;

    std::vector<Agent> agents;
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> ux(0.0, 40.0), uy(0.6, 3.4);
    for (int i = 0; i < 24; ++i) {
        Agent a;
        a.id = i;
        a.x = {ux(rng), uy(rng)};
        a.v_des = 1.0 + 0.05 * (i % 7);
        agents.push_back(a);
    }

    const double shift = 7.3;
    std::vector<Agent> shifted = agents;
    for (Agent& a : shifted) {
        a.x.x += shift;
        if (a.x.x >= 40.0) a.x.x -= 40.0;
    }

    const SimulationResult r1 = run_simulation(cfg, agents);
    const SimulationResult r2 = run_simulation(cfg, shifted);
    for (size_t i = 0; i < agents.size(); ++i) {
        double expect = r1.agents[i].x.x + shift;
        if (expect >= 40.0) expect -= 40.0;
        double diff = std::fabs(r2.agents[i].x.x - expect);
        diff = std::min(diff, 40.0 - diff);  // wrap-aware comparison
        CHECK(diff < 1e-6);
        CHECK(std::fabs(r2.agents[i].x.y - r1.agents[i].x.y) < 1e-6);
        CHECK(std::fabs(r2.agents[i].w - r1.agents[i].w) < 1e-6);
    }
}

TEST_CASE("neighbor index returns a superset of everything within R_p") {
    std::mt19937_64 rng(47);
    Scenario s = bare_corridor(15.0, 6.0);
    std::uniform_real_distribution<double> ux(0.0, 14.999), uy(0.0, 6.0);
    std::vector<Vec2> pos;
    for (int i = 0; i < 150; ++i) pos.push_back({ux(rng), uy(rng)});
    Fixture fx(s, pos);

    std::vector<int> cand;
    for (int i = 0; i < 150; ++i) {
        fx.ctx.index.query(pos[i], cand);
        for (int j = 0; j < 150; ++j) {
            Vec2 off = pos[j] - pos[i];
            off.x = min_image(off.x, 15.0);
            if (off.norm() < fx.params.R_p)
                CHECK(std::find(cand.begin(), cand.end(), j) != cand.end());
        }
    }
}
