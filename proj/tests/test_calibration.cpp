#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gnm/calibration.hpp"
#include "gnm/integrator.hpp"
#include "gnm/smoothmath.hpp"

using namespace gnm;

TEST_CASE("lattice spacing: reference density and scaling law") {
    CHECK(lattice_spacing(7.0) == doctest::Approx(0.41).epsilon(0.01));
    CHECK(lattice_spacing(7.0) == doctest::Approx(0.4062).epsilon(1e-3));
    // R_p = sqrt(3) r reproduces the reference support
    CHECK(std::sqrt(3.0) * lattice_spacing(7.0) == doctest::Approx(0.70).epsilon(5e-3));
    // r ~ rho^(-1/2)
    CHECK(lattice_spacing(4.0 * 7.0) == doctest::Approx(0.5 * lattice_spacing(7.0)).epsilon(1e-14));
    CHECK_THROWS_AS(lattice_spacing(0.0), ScenarioError);
}

TEST_CASE("standoff residual: no repulsion leaves the pure drive") {
    const StandoffScenario s = default_standoff();
    const ModelParams p;
    // p_p = p_B = 0 is outside the params' validity but fine for the residual
    const Vec2 f = standoff_residual(0.0, 0.0, s, 0.70, 0.25, p);
    CHECK(f.x == 1.0);
    CHECK(f.y == 0.0);
}

TEST_CASE("standoff residual: x-symmetric horizontal pair contributes no F_y") {
    const ModelParams p;
    // neighbors only at (+-r, 0): vertical components vanish identically, so
    // the wall term alone controls F_y
    StandoffScenario s = default_standoff();
    const double r = s.lattice_r;
    s.neighbors = {{r, 0.0}, {-r, 0.0}};

    StandoffScenario no_wall = s;
    no_wall.wall_weight = 0.0;
    const Vec2 f = standoff_residual(2.0, 5.0, no_wall, 0.70, 0.25, p);
    CHECK(f.y == 0.0);
    // the two horizontal terms differ only through the viewing angle:
    // ahead pushes back almost fully, behind is nearly invisible
    CHECK(f.x < 1.0);

    const Vec2 g = standoff_residual(2.0, 5.0, s, 0.70, 0.25, p);
    CHECK(g.y > 0.0);  // wall below pushes the repulsion vector upward
}

TEST_CASE("calibrate: default geometry solves to residual <= 1e-10") {
    const StandoffScenario s = default_standoff();
    const ModelParams p;
    const CalibrationResult res = calibrate(s, 0.70, 0.25, p);
    CHECK(res.residual.norm() <= 1e-10);
    CHECK(res.closure_norm == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.p_p > 0.0);
    CHECK(res.p_B > 0.0);
    MESSAGE("default geometry: p_p=", res.p_p, " p_B=", res.p_B,
            " (reference values 3.59, 9.96)");

    // the solved parameters really do cancel the drive
    const Vec2 f = standoff_residual(res.p_p, res.p_B, s, 0.70, 0.25, p);
    CHECK(f.norm() <= 1e-10);
}

TEST_CASE("calibrate: scan resolution does not move the root") {
    const StandoffScenario s = default_standoff();
    const ModelParams p;
    const CalibrationResult a = calibrate(s, 0.70, 0.25, p, 60);
    const CalibrationResult b = calibrate(s, 0.70, 0.25, p, 37);
    CHECK(std::fabs(a.p_p - b.p_p) < 1e-8);
    CHECK(std::fabs(a.p_B - b.p_B) < 1e-8);
}

TEST_CASE("calibrate: second-layer geometry (wide support)") {
    const StandoffScenario s = second_layer_standoff(7.0, 1.0);
    CHECK(s.neighbors.size() > 4);  // neighbors of neighbors joined in
    const ModelParams p;
    const CalibrationResult res = calibrate(s, 1.0, 0.25, p);
    CHECK(res.residual.norm() <= 1e-10);
    MESSAGE("second layer: p_p=", res.p_p, " p_B=", res.p_B,
            " (reference values 1.79, 11.3)");
}

TEST_CASE("wall-only standoff inverts the bump in closed form") {
    const ModelParams p;
    const double d_w = 0.2, R_B = 0.25;

    // vertical wall straight ahead, no pedestrians: balance needs bump = 1
    StandoffScenario ahead;
    ahead.neighbors.clear();
    ahead.wall = {{d_w, -50.0}, {d_w, 50.0}};
    ahead.wall_distance = d_w;
    const CalibrationResult res1 = calibrate(ahead, 0.70, R_B, p);
    const double p_B_expect = std::exp(-1.0 / ((d_w / R_B) * (d_w / R_B) - 1.0));
    CHECK(res1.p_B == doctest::Approx(p_B_expect).epsilon(1e-9));
    CHECK(smooth::bump(d_w, {R_B, res1.p_B}) == doctest::Approx(1.0).epsilon(1e-10));

    // doubling the wall-term weight halves the required height
    StandoffScenario doubled = ahead;
    doubled.wall_weight = 2.0;
    const CalibrationResult res2 = calibrate(doubled, 0.70, R_B, p);
    CHECK(res2.p_B == doctest::Approx(0.5 * p_B_expect).epsilon(1e-9));
    CHECK(2.0 * smooth::bump(d_w, {R_B, res2.p_B}) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("calibrate: unsolvable setup reports the scan diagnostics") {
    StandoffScenario s = default_standoff();
    s.wall_weight = 0.0;
    s.neighbors.clear();  // nothing to push back: no bracket anywhere
    CHECK_THROWS_WITH_AS(calibrate(s, 0.70, 0.25, ModelParams{}),
                         doctest::Contains("no bracketing cell"), ScenarioError);
}

TEST_CASE("full-engine standoff: gray agent stays put for 10 s") {
    const StandoffScenario s = default_standoff();
    ModelParams p;
    const CalibrationResult cal = calibrate(s, 0.70, 0.25, p);
    p.p_p = cal.p_p;
    p.p_B = cal.p_B;

    const ScenarioConfig cfg = standoff_simulation_config(s, p, 10.0);
    const SimulationResult res = run_simulation(cfg);
    REQUIRE(res.agents.size() == 5);
    const Agent& gray = res.agents[0];
    const Vec2 start{5.0, 0.0};  // the config centers the gray agent at x = 5
    CHECK((gray.x - start).norm() <= 1e-3);
    CHECK(gray.w <= 1e-3);  // relaxed speed decays to zero at the standstill
    // the enclosing agents are stationary by construction
    for (size_t i = 1; i < res.agents.size(); ++i) CHECK(res.agents[i].w == 0.0);
}
