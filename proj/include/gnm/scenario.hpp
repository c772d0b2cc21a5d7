#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnm/geometry.hpp"
#include "gnm/rng.hpp"

namespace gnm {

/// Configuration / validation failure; the message names the offending field.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary { Closed, PeriodicX };

/// Where agents want to go. Either an absorbing polygon region (closed
/// domains, routed via the floor field) or a constant drive direction
/// (periodic corridors, where an arrival-time field is ill-posed).
struct Target {
    std::string id;
    Polygon region;
    std::optional<Vec2> direction;
};

enum class SpawnPolicy { Uniform, Lattice, Fixed };

struct Source {
    std::string target_id;
    int count = 0;
    AABB region{};
    SpawnPolicy policy = SpawnPolicy::Uniform;
    std::vector<Vec2> positions;            // Fixed policy only
    std::optional<double> v_des_override;   // e.g. 0 for deliberately stationary agents
};

/// All model constants. Defaults are the calibrated reference set.
struct ModelParams {
    double kappa = 0.6;    // viewing-angle constant
    double tau = 0.5;      // relaxation time (s)
    double p_p = 3.59;     // pedestrian repulsion height
    double R_p = 0.70;     // pedestrian repulsion support (m)
    double p_B = 9.96;     // obstacle repulsion height
    double R_B = 0.25;     // obstacle repulsion support (m)
    double eps = 0.1;      // inner radius of the overlap-safe kernel (m)
    double rho_max = 7.0;  // maximum density (P/m^2)
    double moll_radius = 0.5;        // gradient mollifier support (m)
    double logistic_x0 = 0.3;        // viewing-angle logistic midpoint
    double logistic_R = 0.03;        // viewing-angle logistic steepness
    double collision_threshold = 0.3;  // logged-collision distance (m)

    void validate() const;
};

struct PopulationParams {
    double v_mean = 1.34;  // m/s
    double v_std = 0.26;   // m/s
    double v_min = 0.3;    // truncation (m/s)
    double v_max = 3.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct IntegratorConfig {
    double tol_abs = 1e-5;
    double tol_rel = 1e-4;
    double h_init = 0.01;  // s
    double h_min = 1e-9;
    double h_max = 0.1;
    double safety = 0.9;
    bool rebuild_index_per_stage = false;  // exact per-stage neighbor rebuild

    void validate() const;
};

struct MeasurementConfig {
    double output_cadence = 0.1;   // trajectory / flow / distance sampling (s)
    double density_cadence = 1.0;  // Voronoi density sampling (s)
    double warmup = 30.0;          // stationary-phase start (s)
    std::optional<double> flow_line_x;  // crossing-count line, if any
};

struct Scenario {
    AABB domain;
    Boundary boundary = Boundary::Closed;
    double grid_h = 0.1;
    std::vector<Polygon> obstacles;
    std::vector<Target> targets;
    std::vector<Source> sources;

    double period() const { return domain.width(); }
    int target_index(const std::string& id) const;
    void validate() const;
};

struct Agent {
    int id = -1;
    Vec2 x;
    double w = 0.0;      // relaxed speed (m/s)
    double v_des = 1.34; // desired speed (m/s)
    int target = 0;      // index into Scenario::targets
    bool alive = true;
};

/// One scenario file's worth of configuration.
struct ScenarioConfig {
    std::string name = "custom";
    Scenario scenario;
    ModelParams model;
    PopulationParams population;
    IntegratorConfig integrator;
    MeasurementConfig measurement;
    double duration = 180.0;  // simulated seconds

    void validate() const;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_json(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& cfg, int indent = 2);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

/// Minimum-image displacement along a periodic axis.
inline double min_image(double dx, double period) {
    if (dx > 0.5 * period) dx -= period;
    else if (dx < -0.5 * period) dx += period;
    return dx;
}

/// Places agents for one source. `existing` agents count against the pairwise
/// spacing; new agents are appended with ids following the largest one seen.
/// Uniform policy: rejection sampling at >= 0.5 m spacing, w(0) = 0, desired
/// speeds from the truncated normal.
std::vector<Agent> spawn_agents(const Source& source, const PopulationParams& population,
                                const ModelParams& model, const Scenario& scenario, Rng& rng,
                                const std::vector<Agent>& existing = {});

/// All sources in file order, one shared RNG stream.
std::vector<Agent> spawn_all(const ScenarioConfig& cfg, Rng& rng);

constexpr double kMinSpawnSpacing = 0.5;  // m

}  // namespace gnm
