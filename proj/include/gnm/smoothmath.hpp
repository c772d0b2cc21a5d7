#pragma once

#include <stdexcept>

#include "gnm/vec2.hpp"

// Scalar and vector kernels the model is built from. Everything in here is a
// pure function of its arguments; no global state, safe from any thread.

namespace gnm::smooth {

/// Compact-support exponential bump: support radius R, peak value p/e at r=0.
struct BumpParams {
    double R = 1.0;  // support radius (m), > 0
    double p = 1.0;  // height scale, > 0
};

/// Parameters of the shifted logistic used for the viewing-angle weight.
struct LogisticParams {
    double x0 = 0.3;     // midpoint
    double R_log = 0.03; // steepness scale, > 0
};

/// p * exp(1/((r/R)^2 - 1)) for |r/R| < 1, else 0. Maximum p/e at r = 0,
/// strictly decreasing on [0, R), C^inf across the support boundary.
double bump(double r, const BumpParams& bp);

/// bump(r; R, p) - bump(r; eps, p): vanishes at r = 0, equals bump for
/// r >= eps. Requires 0 < eps < R.
double bump_eps(double r, const BumpParams& bp, double eps);

/// Mollifier profile e * exp(1/((|x|/R)^(2p) - 1)): 1 at x = 0, 0 outside |x| >= R.
double mollifier_weight(double x, double R, int p_exp);

/// Smooth ramp: 0 at 0, identity-like on (0,1), exactly 1 for x >= 1.
/// Defined for x >= 0 only; negative arguments are rejected (all call sites
/// pass vector norms).
double smooth_ramp(double x, int p_exp = 3);

/// Rescales v to length smooth_ramp(|v|), keeping its direction; (0,0) maps
/// to (0,0). The result never has norm greater than 1.
Vec2 normalize_capped(Vec2 v);

/// 1 / (1 + exp(-(x - x0)/R)).
double logistic(double x, const LogisticParams& lp);

/// Viewing-angle weight in (0,1): logistic(cos(kappa * dphi)) where dphi is
/// the angle between the target direction and the offset to the other
/// pedestrian. dir_target must be a unit vector and offset nonzero.
double view_scale(Vec2 dir_target, Vec2 offset, double kappa,
                  const LogisticParams& lp = {});

}  // namespace gnm::smooth
