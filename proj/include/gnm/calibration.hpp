#pragma once

#include <vector>

#include "gnm/geometry.hpp"
#include "gnm/scenario.hpp"

namespace gnm {

/// Spacing of a dense hexagonal lattice at the given density.
double lattice_spacing(double rho_max);

/// The enclosed-pedestrian benchmark: a still crowd around one agent that
/// wants to move along +x, with a wall closing the remaining side. Solving
/// the standstill condition for (p_p, p_B) fixes the two free kernel heights.
struct StandoffScenario {
    Vec2 gray{0.0, 0.0};
    std::vector<Vec2> neighbors;   // enclosing pedestrians (absolute positions)
    Segment wall{{-50.0, -0.2}, {50.0, -0.2}};
    double wall_weight = 1.0;      // multiplicity of the wall term
    Vec2 target_dir{1.0, 0.0};
    double lattice_r = 0.0;        // spacing used to build the neighbor set
    double wall_distance = 0.2;
};

/// Gray agent at the origin with the four first-ring neighbors at hexagonal
/// positions (+-r, 0), (+-r/2, sqrt(3)r/2) and a horizontal wall below at
/// distance d_wall.
StandoffScenario default_standoff(double rho_max = 7.0, double d_wall = 0.2);

/// All upper-half lattice sites within reach of R_p (neighbors of neighbors
/// included), same wall.
StandoffScenario second_layer_standoff(double rho_max, double R_p, double d_wall = 0.2);

/// F = g(N_T) + g(N_P) evaluated with plain (eps -> 0) kernels; zero at a
/// calibrated standstill.
Vec2 standoff_residual(double p_p, double p_B, const StandoffScenario& scenario, double R_p,
                       double R_B, const ModelParams& params);

struct CalibrationResult {
    double p_p = 0.0;
    double p_B = 0.0;
    Vec2 residual;       // F at the solution
    double closure_norm = 0.0;  // |N_P| at the solution (solved to 1)
    int newton_iters = 0;
    int scan_resolution = 0;
};

/// Solves the standstill condition under the closure |N_P| = 1 (minimal norm
/// that saturates the ramp): coarse scan over (0, 50]^2 for a bracketing
/// cell, then damped Newton with a finite-difference Jacobian. Throws
/// ScenarioError with a residual table when no bracket exists.
CalibrationResult calibrate(const StandoffScenario& scenario, double R_p, double R_B,
                            const ModelParams& params, int scan_resolution = 60);

/// ScenarioConfig that reproduces the standoff inside the full engine:
/// periodic corridor, stationary enclosing agents (v_des = 0), wall below.
ScenarioConfig standoff_simulation_config(const StandoffScenario& scenario,
                                          const ModelParams& params, double duration = 10.0);

}  // namespace gnm
