#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gnm/scenario.hpp"

namespace gnm {

constexpr double kInfSigma = std::numeric_limits<double>::infinity();

/// Regular node grid over the domain: node (i,j) sits at
/// (xmin + i*h, ymin + j*h).
struct GridSpec {
    double xmin = 0.0;
    double ymin = 0.0;
    double h = 0.1;
    int nx = 0;
    int ny = 0;

    int idx(int i, int j) const { return j * nx + i; }
    Vec2 node(int i, int j) const { return {xmin + i * h, ymin + j * h}; }
    int size() const { return nx * ny; }

    static GridSpec cover(const AABB& domain, double h);
};

/// 21x21 tensor-product Gauss-Legendre stencil for the mollified gradient.
/// The kernel-weighted node vectors are fixed for a given support radius, so
/// one evaluation is just a weighted sum of interpolated field values.
struct MollifierQuadrature {
    double radius = 0.5;
    double normalization = 0.0;      // 1 / integral of the raw bump profile
    std::vector<Vec2> offsets;       // quadrature nodes relative to the center
    std::vector<Vec2> weights;       // w_k * grad(eta)(y_k)

    static MollifierQuadrature build(double radius, int points_per_axis = 21);
};

/// How the eikonal speed function was assembled, kept for reproducibility.
struct SpeedFnDesc {
    std::string kind = "wall-slowdown";  // G = 1 / (1 + bump(d_wall; R_B, p_B))
    double p_B = 0.0;
    double R_B = 0.0;
    double mollifier_radius = 0.0;
    double mollifier_normalization = 0.0;
    int unreachable_nodes = 0;
};

/// Arrival-time field for one target plus a smooth gradient sampler.
struct FloorField {
    GridSpec grid;
    std::string target_id;
    std::optional<Vec2> const_direction;  // periodic corridors: no grid solve
    std::vector<double> sigma;            // arrival times; +inf on blocked/unreachable
    std::vector<uint8_t> traversable;
    std::vector<double> sigma_filled;     // blocked nodes take nearest traversable value
    std::vector<Vec2> grad_nodes;         // mollified gradient precomputed per node
    SpeedFnDesc desc;

    /// Bilinear interpolation of the filled arrival-time grid.
    double sample_sigma(Vec2 x) const;
    /// Bilinear interpolation of the precomputed mollified gradient.
    Vec2 sample_grad(Vec2 x) const;
};

/// G in (0,1]: 1 away from obstacles, reduced within R_B of one. Nodes inside
/// obstacles (or closer than half a cell) are blocked and get G = 0 as a marker.
std::vector<double> build_speed_function(const Scenario& scenario, const GridSpec& grid,
                                         const ModelParams& params);

/// First-order upwind fast marching from the target region. The G grid uses
/// 0 entries for non-traversable nodes. Throws ScenarioError when no
/// traversable node touches the target.
FloorField fast_march(const Scenario& scenario, const Target& target,
                      const std::vector<double>& speed, const GridSpec& grid);

/// Full pipeline for one target: G, fast marching, gradient precomputation.
/// Direction targets short-circuit to a constant field.
FloorField build_floor_field(const Scenario& scenario, const Target& target,
                             const ModelParams& params);

/// Direct quadrature evaluation of the mollified gradient at x (the sampler
/// grid is precomputed from this).
Vec2 mollified_gradient(const FloorField& field, Vec2 x, const MollifierQuadrature& quad);

/// CSV dump: x,y,sigma,gx,gy per node.
void dump_field_csv(const FloorField& field, const std::string& path);

}  // namespace gnm
