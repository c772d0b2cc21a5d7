#include "gnm/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "gnm/smoothmath.hpp"

namespace gnm {

// ---------------------------------------------------------------------------
// NeighborIndex

int NeighborIndex::cell_ix(double x) const {
    int i = static_cast<int>(std::floor((x - origin_.x) * inv_cell_x_));
    if (periodic_) {
        i %= ncx_;
        if (i < 0) i += ncx_;
    } else {
        i = std::clamp(i, 0, ncx_ - 1);
    }
    return i;
}

int NeighborIndex::cell_iy(double y) const {
    return std::clamp(static_cast<int>(std::floor((y - origin_.y) * inv_cell_y_)), 0, ncy_ - 1);
}

void NeighborIndex::build(std::span<const double> state, int n_agents,
                          const Scenario& scenario, double cell_size) {
    cell_ = cell_size;
    origin_ = scenario.domain.lo;
    periodic_ = scenario.boundary == Boundary::PeriodicX;
    const double W = scenario.domain.width();
    const double H = scenario.domain.height();
    if (periodic_) {
        ncx_ = std::max(1, static_cast<int>(std::floor(W / cell_size)));
        inv_cell_x_ = ncx_ / W;  // effective cell >= cell_size
    } else {
        ncx_ = std::max(1, static_cast<int>(std::ceil(W / cell_size)));
        inv_cell_x_ = 1.0 / cell_size;
    }
    ncy_ = std::max(1, static_cast<int>(std::ceil(H / cell_size)));
    inv_cell_y_ = 1.0 / cell_size;

    const int ncells = ncx_ * ncy_;
    bucket_start_.assign(ncells + 1, 0);
    entries_.assign(n_agents, 0);

    std::vector<int> cell_of(n_agents);
    for (int k = 0; k < n_agents; ++k) {
        const int ix = cell_ix(state[3 * k]);
        const int iy = cell_iy(state[3 * k + 1]);
        cell_of[k] = iy * ncx_ + ix;
        ++bucket_start_[cell_of[k] + 1];
    }
    for (int c = 0; c < ncells; ++c) bucket_start_[c + 1] += bucket_start_[c];
    std::vector<int> cursor(bucket_start_.begin(), bucket_start_.end() - 1);
    for (int k = 0; k < n_agents; ++k) entries_[cursor[cell_of[k]]++] = k;  // slot-ascending
}

void NeighborIndex::query(Vec2 p, std::vector<int>& out) const {
    out.clear();
    const int ci = cell_ix(p.x);
    const int cj = cell_iy(p.y);
    int visited[3] = {-1, -1, -1};
    int nvis = 0;
    for (int dx = -1; dx <= 1; ++dx) {
        int ix = ci + dx;
        if (periodic_) {
            ix %= ncx_;
            if (ix < 0) ix += ncx_;
            bool dup = false;
            for (int v = 0; v < nvis; ++v) dup |= visited[v] == ix;
            if (dup) continue;
            visited[nvis++] = ix;
        } else if (ix < 0 || ix >= ncx_) {
            continue;
        }
        for (int dy = -1; dy <= 1; ++dy) {
            const int iy = cj + dy;
            if (iy < 0 || iy >= ncy_) continue;
            const int c = iy * ncx_ + ix;
            for (int e = bucket_start_[c]; e < bucket_start_[c + 1]; ++e)
                out.push_back(entries_[e]);
        }
    }
    std::sort(out.begin(), out.end());
}

// ---------------------------------------------------------------------------
// SimContext

void SimContext::init(const Scenario& scn, const ModelParams& prm,
                      const std::vector<FloorField>& ff, const std::vector<Agent>& ag,
                      const std::vector<int>& act, double v_cap, double h_max) {
    scenario = &scn;
    params = &prm;
    fields = &ff;
    agents = &ag;
    active = &act;
    obstacle_boxes.clear();
    for (const Polygon& o : scn.obstacles) obstacle_boxes.push_back(o.bbox());
    stage_slack = h_max * v_cap;
}

void SimContext::rebuild_index(std::span<const double> state) {
    // Any pair within R_p at a stage state is within R_p + 2*slack at the base
    // state, so this cell size keeps queries a superset across all stages.
    const double cell = params->R_p + 2.0 * stage_slack;
    index.build(state, static_cast<int>(active->size()), *scenario, cell);
}

// ---------------------------------------------------------------------------
// model terms

Vec2 nav_target(const FloorField& field, Vec2 x) { return -field.sample_grad(x); }

namespace {

/// Shared kernel for the pedestrian term, on a precomputed offset (so the
/// periodic minimum image can be applied by the caller). has_dir=false drops
/// the viewing-angle factor (degenerate zero target direction).
inline Vec2 ped_term(Vec2 offset, Vec2 dir_target, bool has_dir, const ModelParams& p) {
    const double d2 = offset.norm2();
    if (d2 == 0.0 || d2 >= p.R_p * p.R_p) return {};
    const double d = std::sqrt(d2);
    double k = smooth::bump_eps(d, {p.R_p, p.p_p}, p.eps);
    if (has_dir)
        k *= smooth::view_scale(dir_target, offset, p.kappa, {p.logistic_x0, p.logistic_R});
    return offset * (k / d);
}

inline Vec2 obstacle_term(Vec2 x_i, const Polygon& obstacle, const ModelParams& p) {
    const Vec2 xb = obstacle.closest_boundary_point(x_i);
    const Vec2 off = xb - x_i;
    const double d2 = off.norm2();
    if (d2 == 0.0 || d2 >= p.R_B * p.R_B) return {};
    const double d = std::sqrt(d2);
    return off * (smooth::bump_eps(d, {p.R_B, p.p_B}, p.eps) / d);
}

}  // namespace

Vec2 grad_pedestrian(Vec2 x_i, Vec2 x_j, Vec2 dir_target_i, const ModelParams& params) {
    const bool has_dir = dir_target_i.norm2() > 0.0;
    return ped_term(x_j - x_i, dir_target_i, has_dir, params);
}

Vec2 grad_obstacle(Vec2 x_i, const Polygon& obstacle, const ModelParams& params) {
    return obstacle_term(x_i, obstacle, params);
}

Vec2 combine_navigation(Vec2 nav_t, Vec2 nav_p) {
    return smooth::normalize_capped(smooth::normalize_capped(nav_t) +
                                    smooth::normalize_capped(nav_p));
}

Vec2 nav_combined(Vec2 x_i, Vec2 dir_target, std::span<const Vec2> neighbors,
                  std::span<const Polygon> obstacles, const ModelParams& params) {
    Vec2 sum{};
    for (const Vec2& xj : neighbors) sum += grad_pedestrian(x_i, xj, dir_target, params);
    for (const Polygon& o : obstacles) sum += grad_obstacle(x_i, o, params);
    return combine_navigation(dir_target, -sum);
}

// ---------------------------------------------------------------------------
// state & rhs

std::vector<double> pack_state(const std::vector<Agent>& agents,
                               const std::vector<int>& active) {
    std::vector<double> y(3 * active.size());
    for (size_t k = 0; k < active.size(); ++k) {
        const Agent& a = agents[active[k]];
        y[3 * k] = a.x.x;
        y[3 * k + 1] = a.x.y;
        y[3 * k + 2] = a.w;
    }
    return y;
}

void unpack_state(std::span<const double> state, std::vector<Agent>& agents,
                  const std::vector<int>& active) {
    for (size_t k = 0; k < active.size(); ++k) {
        Agent& a = agents[active[k]];
        a.x = {state[3 * k], state[3 * k + 1]};
        a.w = state[3 * k + 2];
    }
}

namespace {

thread_local std::vector<int> t_candidates;

Vec2 repulsion_at(int slot, Vec2 pos, Vec2 dir, bool has_dir, std::span<const double> state,
                  const SimContext& ctx) {
    const ModelParams& p = *ctx.params;
    const bool periodic = ctx.scenario->boundary == Boundary::PeriodicX;
    const double L = ctx.scenario->period();

    Vec2 sum{};
    std::vector<int>& cand = t_candidates;
    ctx.index.query(pos, cand);
    for (const int j : cand) {
        if (j == slot) continue;
        Vec2 off{state[3 * j] - pos.x, state[3 * j + 1] - pos.y};
        if (periodic) off.x = min_image(off.x, L);
        sum += ped_term(off, dir, has_dir, p);
    }

    for (size_t b = 0; b < ctx.scenario->obstacles.size(); ++b) {
        const Polygon& o = ctx.scenario->obstacles[b];
        const AABB& box = ctx.obstacle_boxes[b];
        if (box.distance(pos) < p.R_B) {
            sum += obstacle_term(pos, o, p);
        } else if (periodic) {
            // the wrapped copies of the agent may sit next to this obstacle
            const Vec2 shifted[2] = {{pos.x + L, pos.y}, {pos.x - L, pos.y}};
            for (const Vec2& s : shifted)
                if (box.distance(s) < p.R_B) sum += obstacle_term(s, o, p);
        }
    }
    return -sum;
}

}  // namespace

Vec2 nav_repulsion(int slot, std::span<const double> state, const SimContext& ctx) {
    const Vec2 pos{state[3 * slot], state[3 * slot + 1]};
    const Agent& a = (*ctx.agents)[(*ctx.active)[slot]];
    const Vec2 nt = nav_target((*ctx.fields)[a.target], pos);
    const Vec2 dir = unit_or_zero(nt);
    return repulsion_at(slot, pos, dir, dir.norm2() > 0.0, state, ctx);
}

void rhs(std::span<const double> state, double /*t*/, std::span<double> dstate,
         const SimContext& ctx) {
    const ModelParams& p = *ctx.params;
    const int n = static_cast<int>(ctx.active->size());
    for (int k = 0; k < n; ++k) {
        for (int c = 0; c < 3; ++c) {
            if (!std::isfinite(state[3 * k + c]))
                throw NumericError("non-finite state for agent " +
                                   std::to_string((*ctx.agents)[(*ctx.active)[k]].id));
        }
    }
    for (int k = 0; k < n; ++k) {
        const Vec2 pos{state[3 * k], state[3 * k + 1]};
        const double w = state[3 * k + 2];
        const Agent& a = (*ctx.agents)[(*ctx.active)[k]];

        const Vec2 nt = nav_target((*ctx.fields)[a.target], pos);
        const Vec2 dir = unit_or_zero(nt);
        const Vec2 np = repulsion_at(k, pos, dir, dir.norm2() > 0.0, state, ctx);
        const Vec2 nav = combine_navigation(nt, np);

        dstate[3 * k] = w * nav.x;
        dstate[3 * k + 1] = w * nav.y;
        dstate[3 * k + 2] = (a.v_des * nav.norm() - w) / p.tau;
    }
}

}  // namespace gnm
