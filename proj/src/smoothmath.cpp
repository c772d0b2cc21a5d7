#include "gnm/smoothmath.hpp"

#include <cmath>

namespace gnm::smooth {

double bump(double r, const BumpParams& bp) {
    if (!std::isfinite(r)) throw std::invalid_argument("bump: non-finite r");
    const double s = std::fabs(r / bp.R);
    if (s >= 1.0) return 0.0;
    return bp.p * std::exp(1.0 / (s * s - 1.0));
}

double bump_eps(double r, const BumpParams& bp, double eps) {
    if (!(eps > 0.0) || eps >= bp.R)
        throw std::invalid_argument("bump_eps: requires 0 < eps < R");
    return bump(r, bp) - bump(r, {eps, bp.p});
}

double mollifier_weight(double x, double R, int p_exp) {
    if (!(R > 0.0)) throw std::invalid_argument("mollifier_weight: R must be > 0");
    const double s = std::fabs(x / R);
    if (s >= 1.0) return 0.0;
    double s2p = 1.0;
    const double s2 = s * s;
    for (int k = 0; k < p_exp; ++k) s2p *= s2;
    // e * exp(1/(s^(2p) - 1)) written as a single exp
    return std::exp(1.0 + 1.0 / (s2p - 1.0));
}

double smooth_ramp(double x, int p_exp) {
    if (!(x >= 0.0)) throw std::domain_error("smooth_ramp: x must be >= 0");
    const double m = mollifier_weight(x, 1.0, p_exp);
    return m * x + (1.0 - m);
}

Vec2 normalize_capped(Vec2 v) {
    const double n = v.norm();
    if (n == 0.0) return {};
    return v * (smooth_ramp(n) / n);
}

double logistic(double x, const LogisticParams& lp) {
    return 1.0 / (1.0 + std::exp(-(x - lp.x0) / lp.R_log));
}

double view_scale(Vec2 dir_target, Vec2 offset, double kappa, const LogisticParams& lp) {
    if (offset.x == 0.0 && offset.y == 0.0)
        throw std::invalid_argument("view_scale: zero offset");
    // angle in [0, pi] between the two directions; cos is even in the sign
    const double dphi = std::atan2(std::fabs(cross(dir_target, offset)), dot(dir_target, offset));
    return logistic(std::cos(kappa * dphi), lp);
}

}  // namespace gnm::smooth
