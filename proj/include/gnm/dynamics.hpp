#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "gnm/floorfield.hpp"
#include "gnm/scenario.hpp"

namespace gnm {

/// Non-finite state or derivative; message carries the agent id.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform spatial hash over agent positions. query() returns a superset of
/// every agent within the cell size of the probe point (no false negatives),
/// sorted by slot so force sums have a fixed order.
class NeighborIndex {
public:
    void build(std::span<const double> state, int n_agents, const Scenario& scenario,
               double cell_size);
    void query(Vec2 p, std::vector<int>& out) const;
    double cell_size() const { return cell_; }

private:
    double cell_ = 1.0;
    double inv_cell_x_ = 1.0;
    double inv_cell_y_ = 1.0;
    Vec2 origin_{};
    int ncx_ = 0;
    int ncy_ = 0;
    bool periodic_ = false;
    std::vector<int> bucket_start_;
    std::vector<int> entries_;

    int cell_ix(double x) const;
    int cell_iy(double y) const;
};

/// Everything rhs() needs besides the state itself. The neighbor index is
/// rebuilt at each step's base state and read concurrently by the stages.
struct SimContext {
    const Scenario* scenario = nullptr;
    const ModelParams* params = nullptr;
    const std::vector<FloorField>* fields = nullptr;  // one per target
    const std::vector<Agent>* agents = nullptr;       // full records
    const std::vector<int>* active = nullptr;         // agent indices in state order
    std::vector<AABB> obstacle_boxes;
    NeighborIndex index;
    double stage_slack = 0.0;  // worst-case drift of a stage state vs. the base state

    void init(const Scenario& scn, const ModelParams& prm, const std::vector<FloorField>& ff,
              const std::vector<Agent>& ag, const std::vector<int>& act, double v_cap,
              double h_max);
    void rebuild_index(std::span<const double> state);
};

// --- model terms -----------------------------------------------------------

/// Direction of steepest arrival-time descent (or the corridor axis).
Vec2 nav_target(const FloorField& field, Vec2 x);

/// Repulsion gradient exerted on the agent at x_i by a pedestrian at x_j;
/// points toward x_j and vanishes at contact and beyond R_p.
Vec2 grad_pedestrian(Vec2 x_i, Vec2 x_j, Vec2 dir_target_i, const ModelParams& params);

/// Same for an obstacle, via its nearest boundary point; no viewing-angle factor.
Vec2 grad_obstacle(Vec2 x_i, const Polygon& obstacle, const ModelParams& params);

/// N = g(g(N_T) + g(N_P)), always |N| <= 1.
Vec2 combine_navigation(Vec2 nav_t, Vec2 nav_p);

/// Reference assembly from explicit neighbor/obstacle lists.
Vec2 nav_combined(Vec2 x_i, Vec2 dir_target, std::span<const Vec2> neighbors,
                  std::span<const Polygon> obstacles, const ModelParams& params);

// --- state layout & rhs ----------------------------------------------------

/// State packs (x, y, w) per active agent, in active-list order.
std::vector<double> pack_state(const std::vector<Agent>& agents, const std::vector<int>& active);
void unpack_state(std::span<const double> state, std::vector<Agent>& agents,
                  const std::vector<int>& active);

/// Repulsion vector N_P for the active slot (hash-indexed neighbor sum).
Vec2 nav_repulsion(int slot, std::span<const double> state, const SimContext& ctx);

/// Coupled derivative of the whole crowd.
void rhs(std::span<const double> state, double t, std::span<double> dstate,
         const SimContext& ctx);

}  // namespace gnm
