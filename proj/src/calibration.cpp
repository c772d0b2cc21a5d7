#include "gnm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gnm/smoothmath.hpp"

namespace gnm {

double lattice_spacing(double rho_max) {
    if (!(rho_max > 0.0)) throw ScenarioError("rho_max: must be > 0");
    return std::sqrt(2.0 / (std::sqrt(3.0) * rho_max));
}

StandoffScenario default_standoff(double rho_max, double d_wall) {
    StandoffScenario s;
    const double r = lattice_spacing(rho_max);
    s.lattice_r = r;
    s.wall_distance = d_wall;
    const double hy = 0.5 * std::sqrt(3.0) * r;
    s.neighbors = {{r, 0.0}, {-r, 0.0}, {0.5 * r, hy}, {-0.5 * r, hy}};
    s.wall = {{-50.0, -d_wall}, {50.0, -d_wall}};
    return s;
}

StandoffScenario second_layer_standoff(double rho_max, double R_p, double d_wall) {
    StandoffScenario s;
    const double r = lattice_spacing(rho_max);
    s.lattice_r = r;
    s.wall_distance = d_wall;
    s.wall = {{-50.0, -d_wall}, {50.0, -d_wall}};
    // hexagonal lattice sites in the upper half plane within the support
    const Vec2 a1{r, 0.0};
    const Vec2 a2{0.5 * r, 0.5 * std::sqrt(3.0) * r};
    for (int n = -6; n <= 6; ++n) {
        for (int m = 0; m <= 6; ++m) {
            const Vec2 p = a1 * n + a2 * m;
            if (n == 0 && m == 0) continue;
            if (p.y < -1e-12) continue;
            const double d = p.norm();
            if (d > 1e-12 && d < R_p) s.neighbors.push_back(p);
        }
    }
    std::sort(s.neighbors.begin(), s.neighbors.end(), [](Vec2 a, Vec2 b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return s;
}

namespace {

/// N_P in the standoff setup with plain bumps (eps -> 0) and the viewing
/// weight, linear in (p_p, p_B) through the two unit-height sums.
Vec2 standoff_repulsion(double p_p, double p_B, const StandoffScenario& s, double R_p,
                        double R_B, const ModelParams& params) {
    const smooth::LogisticParams lp{params.logistic_x0, params.logistic_R};
    Vec2 sum{};
    for (const Vec2& xj : s.neighbors) {
        const Vec2 off = xj - s.gray;
        const double d = off.norm();
        if (d == 0.0 || d >= R_p) continue;
        const double k =
            smooth::bump(d, {R_p, p_p}) * smooth::view_scale(s.target_dir, off, params.kappa, lp);
        sum += off * (k / d);
    }
    const Vec2 xb = closest_point_on_segment(s.gray, s.wall);
    const Vec2 offb = xb - s.gray;
    const double db = offb.norm();
    if (db > 0.0 && db < R_B)
        sum += offb * (s.wall_weight * smooth::bump(db, {R_B, p_B}) / db);
    return -sum;
}

}  // namespace

Vec2 standoff_residual(double p_p, double p_B, const StandoffScenario& scenario, double R_p,
                       double R_B, const ModelParams& params) {
    const Vec2 np = standoff_repulsion(p_p, p_B, scenario, R_p, R_B, params);
    return smooth::normalize_capped(scenario.target_dir) + smooth::normalize_capped(np);
}

CalibrationResult calibrate(const StandoffScenario& scenario, double R_p, double R_B,
                            const ModelParams& params, int scan_resolution) {
    // Closure |N_P| = 1 with direction opposite the drive: solve the smooth
    // 2x2 system N_P + unit(N_T) = 0 (g saturates exactly at norm 1, so the
    // ramp residual vanishes identically at the root).
    const Vec2 drive = unit_or_zero(scenario.target_dir);
    const auto closure = [&](double pp, double pb) -> Vec2 {
        return standoff_repulsion(pp, pb, scenario, R_p, R_B, params) + drive;
    };

    const double lo = 1e-3, hi = 50.0;
    const int n = std::max(scan_resolution, 4);
    const auto grid_val = [&](int i) { return lo + (hi - lo) * i / (n - 1); };

    // coarse scan for a cell with a sign change in both components
    double seed_pp = -1.0, seed_pb = -1.0;
    for (int i = 0; i + 1 < n && seed_pp < 0.0; ++i) {
        for (int j = 0; j + 1 < n && seed_pp < 0.0; ++j) {
            const Vec2 f00 = closure(grid_val(i), grid_val(j));
            const Vec2 f10 = closure(grid_val(i + 1), grid_val(j));
            const Vec2 f01 = closure(grid_val(i), grid_val(j + 1));
            const Vec2 f11 = closure(grid_val(i + 1), grid_val(j + 1));
            const auto change = [](double a, double b, double c, double d) {
                const double mn = std::min({a, b, c, d});
                const double mx = std::max({a, b, c, d});
                return mn <= 0.0 && mx >= 0.0;
            };
            if (change(f00.x, f10.x, f01.x, f11.x) && change(f00.y, f10.y, f01.y, f11.y)) {
                seed_pp = 0.5 * (grid_val(i) + grid_val(i + 1));
                seed_pb = 0.5 * (grid_val(j) + grid_val(j + 1));
            }
        }
    }
    if (seed_pp < 0.0) {
        std::ostringstream diag;
        diag << "calibrate: no bracketing cell on (0,50]^2; residual samples:\n";
        for (int i = 0; i < n; i += std::max(1, n / 8)) {
            for (int j = 0; j < n; j += std::max(1, n / 8)) {
                const Vec2 f = closure(grid_val(i), grid_val(j));
                diag << "  p_p=" << grid_val(i) << " p_B=" << grid_val(j) << " F=(" << f.x
                     << ", " << f.y << ")\n";
            }
        }
        throw ScenarioError(diag.str());
    }

    // damped Newton with finite-difference Jacobian
    double pp = seed_pp, pb = seed_pb;
    Vec2 F = closure(pp, pb);
    int iters = 0;
    for (; iters < 100 && F.norm() > 1e-13; ++iters) {
        const double dp = 1e-7 * (1.0 + std::fabs(pp));
        const double db = 1e-7 * (1.0 + std::fabs(pb));
        const Vec2 Fp = closure(pp + dp, pb);
        const Vec2 Fb = closure(pp, pb + db);
        const double j11 = (Fp.x - F.x) / dp, j12 = (Fb.x - F.x) / db;
        const double j21 = (Fp.y - F.y) / dp, j22 = (Fb.y - F.y) / db;
        const double det = j11 * j22 - j12 * j21;
        const double col_pp = std::fabs(j11) + std::fabs(j21);
        const double col_pb = std::fabs(j12) + std::fabs(j22);
        double step_pp = 0.0, step_pb = 0.0;
        if (std::isfinite(det) && std::fabs(det) > 1e-14 * col_pp * col_pb) {
            step_pp = -(j22 * F.x - j12 * F.y) / det;
            step_pb = -(-j21 * F.x + j11 * F.y) / det;
        } else if (col_pb > 1e3 * col_pp && col_pb > 0.0) {
            // degenerate geometry (e.g. wall-only): least-squares step in p_B
            step_pb = -(j12 * F.x + j22 * F.y) / (j12 * j12 + j22 * j22);
        } else if (col_pp > 1e3 * col_pb && col_pp > 0.0) {
            step_pp = -(j11 * F.x + j21 * F.y) / (j11 * j11 + j21 * j21);
        } else {
            throw ScenarioError("calibrate: singular Jacobian during Newton");
        }
        double damp = 1.0;
        for (int back = 0; back < 40; ++back) {
            const double cand_pp = pp + damp * step_pp;
            const double cand_pb = pb + damp * step_pb;
            const Vec2 Fc = closure(cand_pp, cand_pb);
            if (Fc.norm() < F.norm() || F.norm() <= 1e-13) {
                pp = cand_pp;
                pb = cand_pb;
                F = Fc;
                break;
            }
            damp *= 0.5;
        }
    }

    CalibrationResult res;
    res.p_p = pp;
    res.p_B = pb;
    res.newton_iters = iters;
    res.scan_resolution = n;
    res.closure_norm = standoff_repulsion(pp, pb, scenario, R_p, R_B, params).norm();
    res.residual = standoff_residual(pp, pb, scenario, R_p, R_B, params);
    return res;
}

ScenarioConfig standoff_simulation_config(const StandoffScenario& scenario,
                                          const ModelParams& params, double duration) {
    ScenarioConfig cfg;
    cfg.name = "standoff";
    cfg.duration = duration;
    cfg.model = params;

    Scenario& s = cfg.scenario;
    const double cx = 5.0;  // corridor center; geometry is placed relative to it
    s.domain = {{0.0, -1.0 - scenario.wall_distance}, {10.0, 3.0}};
    s.boundary = Boundary::PeriodicX;
    s.grid_h = 0.1;
    s.targets.push_back({"drive", {}, unit_or_zero(scenario.target_dir)});
    s.obstacles.push_back(
        Polygon{{{0.0, -scenario.wall_distance}, {10.0, -scenario.wall_distance}}});

    Source gray;
    gray.target_id = "drive";
    gray.policy = SpawnPolicy::Fixed;
    gray.positions = {{cx + scenario.gray.x, scenario.gray.y}};
    gray.count = 1;
    gray.v_des_override = 1.34;
    s.sources.push_back(gray);

    Source ring;
    ring.target_id = "drive";
    ring.policy = SpawnPolicy::Fixed;
    for (const Vec2& p : scenario.neighbors) ring.positions.push_back({cx + p.x, p.y});
    ring.count = static_cast<int>(ring.positions.size());
    ring.v_des_override = 0.0;  // enclosing pedestrians stand still
    s.sources.push_back(ring);

    cfg.measurement.warmup = 0.0;
    return cfg;
}

}  // namespace gnm
