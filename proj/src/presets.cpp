#include "gnm/presets.hpp"

#include <cmath>

namespace gnm {

namespace {

Polygon segment(Vec2 a, Vec2 b) { return Polygon{{a, b}}; }

Polygon rect(Vec2 lo, Vec2 hi) {
    return Polygon{{{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}}};
}

}  // namespace

ScenarioConfig preset_bottleneck(double width, int agents, std::uint64_t seed) {
    if (!(width > 0.0)) throw ScenarioError("width: must be > 0");
    if (agents < 0) throw ScenarioError("agents: must be >= 0");

    // holding area [0,12]x[0,10], constriction 12..16, exit area up to 19
    const double H = 10.0;
    const double x_funnel = 12.0;
    const double x_exit = x_funnel + 4.0;  // 4 m long constriction
    const double y_lo = 0.5 * (H - width);
    const double y_hi = 0.5 * (H + width);

    ScenarioConfig cfg;
    cfg.name = "bottleneck";
    cfg.duration = 600.0;
    Scenario& s = cfg.scenario;
    s.domain = {{0.0, 0.0}, {19.0, H}};
    s.boundary = Boundary::Closed;
    s.grid_h = 0.1;

    s.obstacles.push_back(segment({0.0, 0.0}, {0.0, H}));            // back wall
    s.obstacles.push_back(segment({0.0, 0.0}, {x_funnel, 0.0}));     // holding area bottom
    s.obstacles.push_back(segment({0.0, H}, {x_funnel, H}));         // holding area top
    s.obstacles.push_back(segment({x_funnel, 0.0}, {x_funnel, y_lo}));  // funnel lower
    s.obstacles.push_back(segment({x_funnel, y_hi}, {x_funnel, H}));    // funnel upper
    s.obstacles.push_back(segment({x_funnel, y_lo}, {x_exit, y_lo}));   // constriction walls
    s.obstacles.push_back(segment({x_funnel, y_hi}, {x_exit, y_hi}));

    Target exit;
    exit.id = "exit";
    exit.region = rect({18.0, 0.0}, {19.0, H});
    s.targets.push_back(exit);

    Source src;
    src.target_id = "exit";
    src.count = agents;
    src.region = {{0.5, 0.5}, {11.5, 9.5}};
    src.policy = SpawnPolicy::Uniform;
    s.sources.push_back(src);

    cfg.population.seed = seed;
    cfg.measurement.flow_line_x = x_exit;
    cfg.measurement.warmup = 0.0;
    return cfg;
}

ScenarioConfig preset_corridor(double length, double width, double rho, std::uint64_t seed) {
    if (!(rho > 0.0)) throw ScenarioError("rho: must be > 0");
    ScenarioConfig cfg;
    cfg.name = "corridor";
    cfg.duration = 180.0;
    Scenario& s = cfg.scenario;
    s.domain = {{0.0, 0.0}, {length, width}};
    s.boundary = Boundary::PeriodicX;
    s.grid_h = 0.1;
    s.obstacles.push_back(segment({0.0, 0.0}, {length, 0.0}));
    s.obstacles.push_back(segment({0.0, width}, {length, width}));
    s.targets.push_back({"east", {}, Vec2{1.0, 0.0}});

    Source src;
    src.target_id = "east";
    src.count = static_cast<int>(std::lround(rho * length * width));
    src.region = {{0.0, 0.0}, {length, width}};
    src.policy = SpawnPolicy::Lattice;
    s.sources.push_back(src);

    cfg.population.seed = seed;
    cfg.measurement.warmup = 30.0;
    return cfg;
}

ScenarioConfig preset_fundamental_diagram(double rho, std::uint64_t seed) {
    ScenarioConfig cfg = preset_corridor(40.0, 4.0, rho, seed);
    cfg.name = "fundamental-diagram";
    return cfg;
}

ScenarioConfig preset_stop_and_go(double rho, std::uint64_t seed) {
    ScenarioConfig cfg = preset_corridor(50.0, 4.0, rho, seed);
    cfg.name = "stop-and-go";
    return cfg;
}

ScenarioConfig preset_lanes(double rho, std::uint64_t seed) {
    if (!(rho > 0.0)) throw ScenarioError("rho: must be > 0");
    const double L = 150.0, W = 10.0;
    ScenarioConfig cfg;
    cfg.name = "lanes";
    cfg.duration = 150.0;
    Scenario& s = cfg.scenario;
    s.domain = {{0.0, 0.0}, {L, W}};
    s.boundary = Boundary::PeriodicX;
    s.grid_h = 0.1;
    s.obstacles.push_back(segment({0.0, 0.0}, {L, 0.0}));
    s.obstacles.push_back(segment({0.0, W}, {L, W}));
    s.targets.push_back({"east", {}, Vec2{1.0, 0.0}});
    s.targets.push_back({"west", {}, Vec2{-1.0, 0.0}});

    const int per_direction = static_cast<int>(std::lround(0.5 * rho * L * W));
    for (const char* id : {"east", "west"}) {
        Source src;
        src.target_id = id;
        src.count = per_direction;
        src.region = {{0.0, 0.0}, {L, W}};
        src.policy = SpawnPolicy::Uniform;
        s.sources.push_back(src);
    }

    cfg.population.seed = seed;
    cfg.measurement.warmup = 30.0;
    return cfg;
}

void apply_second_parameter_set(ScenarioConfig& cfg) {
    cfg.model.R_p = 1.0;
    cfg.model.p_p = 1.79;
    cfg.model.R_B = 0.25;
    cfg.model.p_B = 11.3;
}

}  // namespace gnm
