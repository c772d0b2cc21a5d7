#include "gnm/floorfield.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>

#include "gnm/smoothmath.hpp"

namespace gnm {

GridSpec GridSpec::cover(const AABB& domain, double h) {
    GridSpec g;
    g.xmin = domain.lo.x;
    g.ymin = domain.lo.y;
    g.h = h;
    g.nx = static_cast<int>(std::ceil(domain.width() / h - 1e-9)) + 1;
    g.ny = static_cast<int>(std::ceil(domain.height() / h - 1e-9)) + 1;
    return g;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1, 1] (Newton on the Legendre recurrence)

namespace {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

/// Raw mollifier profile exp(1/(s^2 - 1)) with s = |y| / radius.
double moll_profile(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 / (s * s - 1.0));
}

}  // namespace

MollifierQuadrature MollifierQuadrature::build(double radius, int points_per_axis) {
    MollifierQuadrature q;
    q.radius = radius;

    // normalization integral on a fine grid (one-time cost)
    {
        std::vector<double> xs, ws;
        gauss_legendre(200, xs, ws);
        double integral = 0.0;
        for (size_t i = 0; i < xs.size(); ++i)
            for (size_t j = 0; j < xs.size(); ++j)
                integral += ws[i] * ws[j] * moll_profile(std::hypot(xs[i], xs[j]));
        integral *= radius * radius;
        q.normalization = 1.0 / integral;
    }

    std::vector<double> xs, ws;
    gauss_legendre(points_per_axis, xs, ws);
    q.offsets.reserve(xs.size() * xs.size());
    q.weights.reserve(xs.size() * xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        for (size_t j = 0; j < xs.size(); ++j) {
            const Vec2 y{radius * xs[i], radius * xs[j]};
            const double s = y.norm() / radius;
            Vec2 grad_eta{};
            if (s > 0.0 && s < 1.0) {
                const double den = s * s - 1.0;
                const double dprofile = moll_profile(s) * (-2.0 * s / (den * den));
                grad_eta = (y / y.norm()) * (q.normalization * dprofile / radius);
            }
            q.offsets.push_back(y);
            q.weights.push_back(grad_eta * (ws[i] * ws[j] * radius * radius));
        }
    }
    return q;
}

// ---------------------------------------------------------------------------
// speed function

std::vector<double> build_speed_function(const Scenario& scenario, const GridSpec& grid,
                                         const ModelParams& params) {
    std::vector<double> G(grid.size(), 1.0);
    const double block_band = 0.5 * grid.h;  // captures zero-thickness wall segments
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Vec2 p = grid.node(i, j);
            double d = std::numeric_limits<double>::max();
            bool inside = false;
            for (const Polygon& o : scenario.obstacles) {
                if (o.has_interior() && o.contains(p)) {
                    inside = true;
                    break;
                }
                d = std::min(d, o.distance(p));
            }
            double& g = G[grid.idx(i, j)];
            if (inside || d < block_band) {
                g = 0.0;  // non-traversable marker
            } else if (d < params.R_B) {
                g = 1.0 / (1.0 + smooth::bump(d, {params.R_B, params.p_B}));
            }
        }
    }
    return G;
}

// ---------------------------------------------------------------------------
// fast marching

namespace {

struct HeapEntry {
    double value;
    int idx;
    bool operator>(const HeapEntry& o) const {
        return value > o.value || (value == o.value && idx > o.idx);
    }
};

}  // namespace

FloorField fast_march(const Scenario& /*scenario*/, const Target& target,
                      const std::vector<double>& speed, const GridSpec& grid) {
    FloorField f;
    f.grid = grid;
    f.target_id = target.id;
    f.sigma.assign(grid.size(), kInfSigma);
    f.traversable.assign(grid.size(), 0);
    for (int k = 0; k < grid.size(); ++k) f.traversable[k] = speed[k] > 0.0 ? 1 : 0;

    std::vector<uint8_t> accepted(grid.size(), 0);
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

    // Seed a one-cell band with first-order arrival times d/G; nodes inside
    // the target get exactly 0.
    int seeded = 0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int k = grid.idx(i, j);
            if (!f.traversable[k]) continue;
            const double d = target.region.distance(grid.node(i, j));
            if (d <= grid.h) {
                f.sigma[k] = d / speed[k];
                heap.push({f.sigma[k], k});
                ++seeded;
            }
        }
    }
    if (seeded == 0)
        throw ScenarioError("targets: target '" + target.id +
                            "' does not touch any traversable cell");

    const auto solve_update = [&](int i, int j) -> double {
        const int k = grid.idx(i, j);
        double ax = kInfSigma, ay = kInfSigma;
        if (i > 0 && accepted[grid.idx(i - 1, j)]) ax = f.sigma[grid.idx(i - 1, j)];
        if (i < grid.nx - 1 && accepted[grid.idx(i + 1, j)])
            ax = std::min(ax, f.sigma[grid.idx(i + 1, j)]);
        if (j > 0 && accepted[grid.idx(i, j - 1)]) ay = f.sigma[grid.idx(i, j - 1)];
        if (j < grid.ny - 1 && accepted[grid.idx(i, j + 1)])
            ay = std::min(ay, f.sigma[grid.idx(i, j + 1)]);

        const double fk = grid.h / speed[k];
        if (std::isinf(ax) && std::isinf(ay)) return kInfSigma;
        if (std::isinf(ax)) return ay + fk;
        if (std::isinf(ay)) return ax + fk;
        const double diff = ax - ay;
        if (std::fabs(diff) >= fk) return std::min(ax, ay) + fk;
        // (sigma-ax)^2 + (sigma-ay)^2 = fk^2, upwind root
        return 0.5 * ((ax + ay) + std::sqrt(2.0 * fk * fk - diff * diff));
    };

    double last_accepted = 0.0;
    while (!heap.empty()) {
        const HeapEntry e = heap.top();
        heap.pop();
        if (accepted[e.idx] || e.value != f.sigma[e.idx]) continue;  // stale entry
        accepted[e.idx] = 1;
        if (e.value < last_accepted - 1e-12 * (1.0 + last_accepted))
            throw std::logic_error("fast_march: acceptance order not monotone");
        last_accepted = e.value;

        const int i = e.idx % grid.nx;
        const int j = e.idx / grid.nx;
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        for (int n = 0; n < 4; ++n) {
            const int ii = i + di[n];
            const int jj = j + dj[n];
            if (ii < 0 || ii >= grid.nx || jj < 0 || jj >= grid.ny) continue;
            const int kk = grid.idx(ii, jj);
            if (!f.traversable[kk] || accepted[kk]) continue;
            const double cand = solve_update(ii, jj);
            if (cand < f.sigma[kk]) {
                f.sigma[kk] = cand;
                heap.push({cand, kk});
            }
        }
    }

    // Fill blocked/unreachable nodes from their nearest assigned neighbor so
    // interpolation near walls sees a smooth continuation.
    f.sigma_filled = f.sigma;
    std::deque<int> bfs;
    for (int k = 0; k < grid.size(); ++k) {
        if (std::isinf(f.sigma_filled[k])) {
            if (f.traversable[k]) ++f.desc.unreachable_nodes;
        } else {
            bfs.push_back(k);
        }
    }
    while (!bfs.empty()) {
        const int k = bfs.front();
        bfs.pop_front();
        const int i = k % grid.nx;
        const int j = k / grid.nx;
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        for (int n = 0; n < 4; ++n) {
            const int ii = i + di[n];
            const int jj = j + dj[n];
            if (ii < 0 || ii >= grid.nx || jj < 0 || jj >= grid.ny) continue;
            const int kk = grid.idx(ii, jj);
            if (std::isinf(f.sigma_filled[kk])) {
                f.sigma_filled[kk] = f.sigma_filled[k];
                bfs.push_back(kk);
            }
        }
    }

    return f;
}

// ---------------------------------------------------------------------------
// sampling

namespace {

struct BilinearCell {
    int i, j;
    double fx, fy;
};

BilinearCell locate(const GridSpec& g, Vec2 x) {
    double u = (x.x - g.xmin) / g.h;
    double v = (x.y - g.ymin) / g.h;
    u = std::clamp(u, 0.0, static_cast<double>(g.nx - 1));
    v = std::clamp(v, 0.0, static_cast<double>(g.ny - 1));
    int i = std::min(static_cast<int>(u), g.nx - 2);
    int j = std::min(static_cast<int>(v), g.ny - 2);
    i = std::max(i, 0);
    j = std::max(j, 0);
    return {i, j, u - i, v - j};
}

}  // namespace

double FloorField::sample_sigma(Vec2 x) const {
    if (const_direction) return -dot(x, *const_direction);
    const BilinearCell c = locate(grid, x);
    const double s00 = sigma_filled[grid.idx(c.i, c.j)];
    const double s10 = sigma_filled[grid.idx(c.i + 1, c.j)];
    const double s01 = sigma_filled[grid.idx(c.i, c.j + 1)];
    const double s11 = sigma_filled[grid.idx(c.i + 1, c.j + 1)];
    return (1.0 - c.fy) * ((1.0 - c.fx) * s00 + c.fx * s10) +
           c.fy * ((1.0 - c.fx) * s01 + c.fx * s11);
}

Vec2 FloorField::sample_grad(Vec2 x) const {
    if (const_direction) return -*const_direction;
    const BilinearCell c = locate(grid, x);
    const Vec2 g00 = grad_nodes[grid.idx(c.i, c.j)];
    const Vec2 g10 = grad_nodes[grid.idx(c.i + 1, c.j)];
    const Vec2 g01 = grad_nodes[grid.idx(c.i, c.j + 1)];
    const Vec2 g11 = grad_nodes[grid.idx(c.i + 1, c.j + 1)];
    return (g00 * (1.0 - c.fx) + g10 * c.fx) * (1.0 - c.fy) +
           (g01 * (1.0 - c.fx) + g11 * c.fx) * c.fy;
}

Vec2 mollified_gradient(const FloorField& field, Vec2 x, const MollifierQuadrature& quad) {
    if (field.const_direction) return -*field.const_direction;
    Vec2 g{};
    for (size_t k = 0; k < quad.offsets.size(); ++k) {
        const Vec2& w = quad.weights[k];
        if (w.x == 0.0 && w.y == 0.0) continue;
        g += w * field.sample_sigma(x - quad.offsets[k]);
    }
    return g;
}

// ---------------------------------------------------------------------------
// assembly

FloorField build_floor_field(const Scenario& scenario, const Target& target,
                             const ModelParams& params) {
    if (target.direction) {
        FloorField f;
        f.target_id = target.id;
        f.const_direction = unit_or_zero(*target.direction);
        f.desc.kind = "constant-direction";
        return f;
    }
    const GridSpec grid = GridSpec::cover(scenario.domain, scenario.grid_h);
    const std::vector<double> G = build_speed_function(scenario, grid, params);
    FloorField f = fast_march(scenario, target, G, grid);
    f.desc.kind = "wall-slowdown";
    f.desc.p_B = params.p_B;
    f.desc.R_B = params.R_B;

    const MollifierQuadrature quad = MollifierQuadrature::build(params.moll_radius);
    f.desc.mollifier_radius = quad.radius;
    f.desc.mollifier_normalization = quad.normalization;
    f.grad_nodes.resize(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            f.grad_nodes[grid.idx(i, j)] = mollified_gradient(f, grid.node(i, j), quad);
    return f;
}

void dump_field_csv(const FloorField& field, const std::string& path) {
    if (field.const_direction)
        throw ScenarioError("field: target '" + field.target_id +
                            "' uses a constant direction; nothing to dump");
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write field dump '" + path + "'");
    out << "x,y,sigma,gx,gy\n";
    for (int j = 0; j < field.grid.ny; ++j) {
        for (int i = 0; i < field.grid.nx; ++i) {
            const Vec2 p = field.grid.node(i, j);
            const int k = field.grid.idx(i, j);
            const Vec2 g = field.grad_nodes.empty() ? Vec2{} : field.grad_nodes[k];
            out << p.x << ',' << p.y << ',' << field.sigma[k] << ',' << g.x << ',' << g.y
                << '\n';
        }
    }
}

}  // namespace gnm
