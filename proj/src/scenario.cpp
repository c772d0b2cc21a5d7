#include "gnm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gnm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// validation

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ScenarioError(field + ": " + what);
}

void require_positive(double v, const std::string& field) {
    require(std::isfinite(v) && v > 0.0, field, "must be strictly positive");
}

}  // namespace

void ModelParams::validate() const {
    require_positive(kappa, "model.kappa");
    require_positive(tau, "model.tau");
    require_positive(p_p, "model.p_p");
    require_positive(R_p, "model.R_p");
    require_positive(p_B, "model.p_B");
    require_positive(R_B, "model.R_B");
    require_positive(eps, "model.eps");
    require_positive(rho_max, "model.rho_max");
    require_positive(moll_radius, "model.moll_radius");
    require_positive(logistic_R, "model.logistic_R");
    require_positive(collision_threshold, "model.collision_threshold");
    require(eps < R_p, "model.eps", "must be smaller than R_p");
    require(eps < R_B, "model.eps", "must be smaller than R_B");
}

void PopulationParams::validate() const {
    require(std::isfinite(v_mean), "population.v_mean", "must be finite");
    require(std::isfinite(v_std) && v_std >= 0.0, "population.v_std", "must be >= 0");
    require_positive(v_min, "population.v_min");
    require(v_min < v_max, "population.v_min", "must be below v_max");
}

void IntegratorConfig::validate() const {
    require_positive(tol_abs, "integrator.tol_abs");
    require_positive(tol_rel, "integrator.tol_rel");
    require_positive(h_min, "integrator.h_min");
    require(h_min <= h_init && h_init <= h_max, "integrator.h_init",
            "must satisfy h_min <= h_init <= h_max");
    require(safety > 0.0 && safety <= 1.0, "integrator.safety", "must be in (0, 1]");
}

int Scenario::target_index(const std::string& id) const {
    for (size_t i = 0; i < targets.size(); ++i)
        if (targets[i].id == id) return static_cast<int>(i);
    return -1;
}

void Scenario::validate() const {
    require(domain.hi.x > domain.lo.x && domain.hi.y > domain.lo.y, "domain",
            "must have positive extent");
    require_positive(grid_h, "grid_h");
    require(!targets.empty(), "targets", "must not be empty");

    const double tol = 1e-9;
    const AABB dom{{domain.lo.x - tol, domain.lo.y - tol}, {domain.hi.x + tol, domain.hi.y + tol}};

    for (size_t i = 0; i < targets.size(); ++i) {
        const Target& t = targets[i];
        const std::string field = "targets[" + std::to_string(i) + "]";
        require(!t.id.empty(), field, "needs an id");
        if (t.direction) {
            require(t.direction->norm() > 0.0, field + ".direction", "must be nonzero");
        } else {
            require(t.region.has_interior(), field, "polygon needs >= 3 vertices");
            for (const Vec2& p : t.region.pts)
                require(dom.contains(p), field, "lies outside the domain");
        }
        if (boundary == Boundary::PeriodicX)
            require(t.direction.has_value(), field,
                    "periodic-x corridors use direction targets, not regions");
    }
    for (size_t i = 0; i < obstacles.size(); ++i) {
        const std::string field = "obstacles[" + std::to_string(i) + "]";
        require(obstacles[i].pts.size() >= 2, field, "needs >= 2 vertices");
        for (const Vec2& p : obstacles[i].pts)
            require(dom.contains(p), field, "lies outside the domain");
    }
    for (size_t i = 0; i < sources.size(); ++i) {
        const Source& s = sources[i];
        const std::string field = "sources[" + std::to_string(i) + "]";
        require(s.count >= 0, field + ".count", "must be >= 0");
        require(target_index(s.target_id) >= 0, field + ".target",
                "unknown target id '" + s.target_id + "'");
        if (s.policy == SpawnPolicy::Fixed) {
            require(static_cast<int>(s.positions.size()) >= s.count, field + ".positions",
                    "fewer positions than count");
            for (const Vec2& p : s.positions)
                require(dom.contains(p), field + ".positions", "lies outside the domain");
        } else {
            require(dom.contains(s.region.lo) && dom.contains(s.region.hi), field + ".region",
                    "lies outside the domain");
        }
        if (s.v_des_override)
            require(*s.v_des_override >= 0.0, field + ".v_des", "must be >= 0");
    }
}

void ScenarioConfig::validate() const {
    scenario.validate();
    model.validate();
    population.validate();
    integrator.validate();
    require_positive(duration, "duration");
    require_positive(measurement.output_cadence, "measurement.output_cadence");
    require_positive(measurement.density_cadence, "measurement.density_cadence");
    require(measurement.warmup >= 0.0, "measurement.warmup", "must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

Vec2 parse_vec2(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ScenarioError(field + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }

AABB parse_aabb(const json& j, const std::string& field) {
    if (!j.contains("min") || !j.contains("max"))
        throw ScenarioError(field + ": expected {min: [..], max: [..]}");
    return {parse_vec2(j["min"], field + ".min"), parse_vec2(j["max"], field + ".max")};
}

json aabb_json(const AABB& b) {
    return json{{"min", vec2_json(b.lo)}, {"max", vec2_json(b.hi)}};
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig parse_scenario_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("parse error: ") + e.what());
    }

    ScenarioConfig cfg;
    get_if_present(j, "name", cfg.name);
    get_if_present(j, "duration", cfg.duration);

    if (!j.contains("domain")) throw ScenarioError("domain: missing");
    Scenario& s = cfg.scenario;
    s.domain = parse_aabb(j["domain"], "domain");
    if (j.contains("boundary")) {
        const std::string b = j["boundary"].get<std::string>();
        if (b == "closed") s.boundary = Boundary::Closed;
        else if (b == "periodic-x") s.boundary = Boundary::PeriodicX;
        else throw ScenarioError("boundary: expected 'closed' or 'periodic-x'");
    }
    get_if_present(j, "grid_h", s.grid_h);

    for (size_t i = 0; j.contains("obstacles") && i < j["obstacles"].size(); ++i) {
        const json& jo = j["obstacles"][i];
        const std::string field = "obstacles[" + std::to_string(i) + "]";
        Polygon poly;
        if (jo.contains("points")) {
            for (const auto& p : jo["points"]) poly.pts.push_back(parse_vec2(p, field));
        } else if (jo.contains("a") && jo.contains("b")) {
            poly.pts = {parse_vec2(jo["a"], field), parse_vec2(jo["b"], field)};
        } else {
            throw ScenarioError(field + ": expected 'points' or 'a'/'b'");
        }
        s.obstacles.push_back(std::move(poly));
    }

    if (!j.contains("targets")) throw ScenarioError("targets: missing");
    for (size_t i = 0; i < j["targets"].size(); ++i) {
        const json& jt = j["targets"][i];
        const std::string field = "targets[" + std::to_string(i) + "]";
        Target t;
        if (!jt.contains("id")) throw ScenarioError(field + ".id: missing");
        t.id = jt["id"].get<std::string>();
        if (jt.contains("direction")) {
            t.direction = unit_or_zero(parse_vec2(jt["direction"], field + ".direction"));
        } else if (jt.contains("polygon")) {
            for (const auto& p : jt["polygon"]) t.region.pts.push_back(parse_vec2(p, field));
        } else {
            throw ScenarioError(field + ": expected 'polygon' or 'direction'");
        }
        s.targets.push_back(std::move(t));
    }

    for (size_t i = 0; j.contains("sources") && i < j["sources"].size(); ++i) {
        const json& js = j["sources"][i];
        const std::string field = "sources[" + std::to_string(i) + "]";
        Source src;
        if (!js.contains("target")) throw ScenarioError(field + ".target: missing");
        src.target_id = js["target"].get<std::string>();
        get_if_present(js, "count", src.count);
        if (js.contains("policy")) {
            const std::string p = js["policy"].get<std::string>();
            if (p == "uniform") src.policy = SpawnPolicy::Uniform;
            else if (p == "lattice") src.policy = SpawnPolicy::Lattice;
            else if (p == "fixed") src.policy = SpawnPolicy::Fixed;
            else throw ScenarioError(field + ".policy: expected uniform|lattice|fixed");
        }
        if (js.contains("region")) src.region = parse_aabb(js["region"], field + ".region");
        if (js.contains("positions"))
            for (const auto& p : js["positions"])
                src.positions.push_back(parse_vec2(p, field + ".positions"));
        if (src.policy == SpawnPolicy::Fixed && src.count == 0)
            src.count = static_cast<int>(src.positions.size());
        if (js.contains("v_des")) src.v_des_override = js["v_des"].get<double>();
        s.sources.push_back(std::move(src));
    }

    if (j.contains("model")) {
        const json& jm = j["model"];
        ModelParams& m = cfg.model;
        get_if_present(jm, "kappa", m.kappa);
        get_if_present(jm, "tau", m.tau);
        get_if_present(jm, "p_p", m.p_p);
        get_if_present(jm, "R_p", m.R_p);
        get_if_present(jm, "p_B", m.p_B);
        get_if_present(jm, "R_B", m.R_B);
        get_if_present(jm, "eps", m.eps);
        get_if_present(jm, "rho_max", m.rho_max);
        get_if_present(jm, "moll_radius", m.moll_radius);
        get_if_present(jm, "logistic_x0", m.logistic_x0);
        get_if_present(jm, "logistic_R", m.logistic_R);
        get_if_present(jm, "collision_threshold", m.collision_threshold);
    }
    if (j.contains("population")) {
        const json& jp = j["population"];
        PopulationParams& p = cfg.population;
        get_if_present(jp, "v_mean", p.v_mean);
        get_if_present(jp, "v_std", p.v_std);
        get_if_present(jp, "v_min", p.v_min);
        get_if_present(jp, "v_max", p.v_max);
        get_if_present(jp, "seed", p.seed);
    }
    if (j.contains("integrator")) {
        const json& ji = j["integrator"];
        IntegratorConfig& ic = cfg.integrator;
        get_if_present(ji, "tol_abs", ic.tol_abs);
        get_if_present(ji, "tol_rel", ic.tol_rel);
        get_if_present(ji, "h_init", ic.h_init);
        get_if_present(ji, "h_min", ic.h_min);
        get_if_present(ji, "h_max", ic.h_max);
        get_if_present(ji, "safety", ic.safety);
        get_if_present(ji, "rebuild_index_per_stage", ic.rebuild_index_per_stage);
    }
    if (j.contains("measurement")) {
        const json& jm = j["measurement"];
        MeasurementConfig& mc = cfg.measurement;
        get_if_present(jm, "output_cadence", mc.output_cadence);
        get_if_present(jm, "density_cadence", mc.density_cadence);
        get_if_present(jm, "warmup", mc.warmup);
        if (jm.contains("flow_line_x") && !jm["flow_line_x"].is_null())
            mc.flow_line_x = jm["flow_line_x"].get<double>();
    }

    cfg.validate();
    return cfg;
}

std::string scenario_to_json_text(const ScenarioConfig& cfg, int indent) {
    const Scenario& s = cfg.scenario;
    json j;
    j["name"] = cfg.name;
    j["duration"] = cfg.duration;
    j["domain"] = aabb_json(s.domain);
    j["boundary"] = s.boundary == Boundary::PeriodicX ? "periodic-x" : "closed";
    j["grid_h"] = s.grid_h;

    j["obstacles"] = json::array();
    for (const Polygon& o : s.obstacles) {
        json jo;
        if (o.pts.size() == 2) {
            jo["a"] = vec2_json(o.pts[0]);
            jo["b"] = vec2_json(o.pts[1]);
        } else {
            jo["points"] = json::array();
            for (const Vec2& p : o.pts) jo["points"].push_back(vec2_json(p));
        }
        j["obstacles"].push_back(jo);
    }

    j["targets"] = json::array();
    for (const Target& t : s.targets) {
        json jt{{"id", t.id}};
        if (t.direction) {
            jt["direction"] = vec2_json(*t.direction);
        } else {
            jt["polygon"] = json::array();
            for (const Vec2& p : t.region.pts) jt["polygon"].push_back(vec2_json(p));
        }
        j["targets"].push_back(jt);
    }

    j["sources"] = json::array();
    for (const Source& src : s.sources) {
        json js{{"target", src.target_id}, {"count", src.count}};
        switch (src.policy) {
            case SpawnPolicy::Uniform: js["policy"] = "uniform"; break;
            case SpawnPolicy::Lattice: js["policy"] = "lattice"; break;
            case SpawnPolicy::Fixed: js["policy"] = "fixed"; break;
        }
        if (src.policy == SpawnPolicy::Fixed) {
            js["positions"] = json::array();
            for (const Vec2& p : src.positions) js["positions"].push_back(vec2_json(p));
        } else {
            js["region"] = aabb_json(src.region);
        }
        if (src.v_des_override) js["v_des"] = *src.v_des_override;
        j["sources"].push_back(js);
    }

    const ModelParams& m = cfg.model;
    j["model"] = json{{"kappa", m.kappa},
                      {"tau", m.tau},
                      {"p_p", m.p_p},
                      {"R_p", m.R_p},
                      {"p_B", m.p_B},
                      {"R_B", m.R_B},
                      {"eps", m.eps},
                      {"rho_max", m.rho_max},
                      {"moll_radius", m.moll_radius},
                      {"logistic_x0", m.logistic_x0},
                      {"logistic_R", m.logistic_R},
                      {"collision_threshold", m.collision_threshold}};
    const PopulationParams& p = cfg.population;
    j["population"] = json{{"v_mean", p.v_mean},
                           {"v_std", p.v_std},
                           {"v_min", p.v_min},
                           {"v_max", p.v_max},
                           {"seed", p.seed}};
    const IntegratorConfig& ic = cfg.integrator;
    j["integrator"] = json{{"tol_abs", ic.tol_abs},
                           {"tol_rel", ic.tol_rel},
                           {"h_init", ic.h_init},
                           {"h_min", ic.h_min},
                           {"h_max", ic.h_max},
                           {"safety", ic.safety},
                           {"rebuild_index_per_stage", ic.rebuild_index_per_stage}};
    const MeasurementConfig& mc = cfg.measurement;
    json jm{{"output_cadence", mc.output_cadence},
            {"density_cadence", mc.density_cadence},
            {"warmup", mc.warmup}};
    if (mc.flow_line_x) jm["flow_line_x"] = *mc.flow_line_x;
    j["measurement"] = jm;

    return j.dump(indent);
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    // run manifests embed the full configuration under "scenario"
    try {
        json j = json::parse(text);
        if (j.contains("scenario") && j["scenario"].is_object() && !j.contains("domain"))
            text = j["scenario"].dump();
    } catch (const json::parse_error&) {
        // fall through; parse_scenario_json reports the error with context
    }
    return parse_scenario_json(text);
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
    out << scenario_to_json_text(cfg) << "\n";
}

// ---------------------------------------------------------------------------
// spawning

namespace {

double obstacle_clearance_distance(const Scenario& scn, Vec2 p) {
    double best = std::numeric_limits<double>::max();
    for (const Polygon& o : scn.obstacles) {
        best = std::min(best, o.distance(p));
        if (scn.boundary == Boundary::PeriodicX) {
            const double L = scn.period();
            best = std::min(best, o.distance({p.x + L, p.y}));
            best = std::min(best, o.distance({p.x - L, p.y}));
        }
    }
    return best;
}

double pair_distance(const Scenario& scn, Vec2 a, Vec2 b) {
    Vec2 d = a - b;
    if (scn.boundary == Boundary::PeriodicX) d.x = min_image(d.x, scn.period());
    return d.norm();
}

bool spacing_ok(const Scenario& scn, Vec2 p, const std::vector<Vec2>& placed,
                const std::vector<Agent>& existing, double min_spacing) {
    for (const Vec2& q : placed)
        if (pair_distance(scn, p, q) < min_spacing) return false;
    for (const Agent& a : existing)
        if (pair_distance(scn, p, a.x) < min_spacing) return false;
    return true;
}

std::vector<Vec2> place_uniform(const Source& src, const ModelParams& model,
                                const Scenario& scn, Rng& rng,
                                const std::vector<Agent>& existing) {
    std::vector<Vec2> placed;
    placed.reserve(src.count);
    const double clearance = model.R_B;
    const long max_attempts = 400L * std::max(src.count, 1);
    long attempts = 0;
    while (static_cast<int>(placed.size()) < src.count) {
        if (++attempts > max_attempts)
            throw ScenarioError(
                "sources: placement failed after bounded retries; use a larger region "
                "(or fewer agents) for " +
                std::to_string(src.count) + " agents at " +
                std::to_string(kMinSpawnSpacing) + " m spacing");
        Vec2 p{rng.uniform(src.region.lo.x, src.region.hi.x),
               rng.uniform(src.region.lo.y, src.region.hi.y)};
        if (!scn.domain.contains(p)) continue;
        if (obstacle_clearance_distance(scn, p) < clearance) continue;
        if (!spacing_ok(scn, p, placed, existing, kMinSpawnSpacing)) continue;
        placed.push_back(p);
    }
    return placed;
}

// Hexagonal rows at spacing s; periodic corridors get an integer number of
// columns so the wrap seam keeps the same spacing.
std::vector<Vec2> lattice_points(const Source& src, const Scenario& scn,
                                 const ModelParams& model, double s) {
    std::vector<Vec2> pts;
    const double clearance = model.R_B;
    const AABB& r = src.region;
    const double row_h = 0.5 * std::sqrt(3.0) * s;
    const bool wraps = scn.boundary == Boundary::PeriodicX &&
                       r.width() >= scn.period() - 1e-9;
    int row = 0;
    for (double y = r.lo.y + clearance; y <= r.hi.y - clearance + 1e-12; y += row_h, ++row) {
        const double off = (row % 2 == 1) ? 0.5 * s : 0.0;
        if (wraps) {
            const int ncols = std::max(1, static_cast<int>(std::floor(r.width() / s)));
            const double sx = r.width() / ncols;
            for (int c = 0; c < ncols; ++c) {
                Vec2 p{r.lo.x + off + c * sx, y};
                if (p.x >= r.hi.x) p.x -= r.width();
                if (obstacle_clearance_distance(scn, p) >= clearance) pts.push_back(p);
            }
        } else {
            for (double x = r.lo.x + clearance + off; x <= r.hi.x - clearance + 1e-12; x += s) {
                Vec2 p{x, y};
                if (scn.domain.contains(p) && obstacle_clearance_distance(scn, p) >= clearance)
                    pts.push_back(p);
            }
        }
    }
    return pts;
}

std::vector<Vec2> place_lattice(const Source& src, const ModelParams& model,
                                const Scenario& scn, Rng& rng) {
    if (src.count == 0) return {};
    double s = std::sqrt(2.0 * src.region.area() / (std::sqrt(3.0) * src.count));
    std::vector<Vec2> pts;
    for (int iter = 0; iter < 120; ++iter) {
        pts = lattice_points(src, scn, model, s);
        if (static_cast<int>(pts.size()) >= src.count) break;
        s *= 0.97;
    }
    if (static_cast<int>(pts.size()) < src.count)
        throw ScenarioError("sources: lattice placement cannot fit " +
                            std::to_string(src.count) + " agents in the region");
    // subsample evenly so partial fills stay homogeneous
    std::vector<Vec2> placed;
    placed.reserve(src.count);
    for (int i = 0; i < src.count; ++i) {
        const size_t idx = static_cast<size_t>(i) * pts.size() / src.count;
        Vec2 p = pts[idx];
        const double j = 0.05 * s;
        p.x += rng.uniform(-j, j);
        p.y += rng.uniform(-j, j);
        if (scn.boundary == Boundary::PeriodicX) {
            const double L = scn.period();
            if (p.x < scn.domain.lo.x) p.x += L;
            if (p.x >= scn.domain.hi.x) p.x -= L;
        } else {
            p.x = std::clamp(p.x, scn.domain.lo.x, scn.domain.hi.x);
        }
        p.y = std::clamp(p.y, scn.domain.lo.y, scn.domain.hi.y);
        placed.push_back(p);
    }
    return placed;
}

}  // namespace

std::vector<Agent> spawn_agents(const Source& source, const PopulationParams& population,
                                const ModelParams& model, const Scenario& scenario, Rng& rng,
                                const std::vector<Agent>& existing) {
    const int target = scenario.target_index(source.target_id);
    if (target < 0) throw ScenarioError("sources.target: unknown id '" + source.target_id + "'");

    std::vector<Vec2> positions;
    switch (source.policy) {
        case SpawnPolicy::Uniform:
            positions = place_uniform(source, model, scenario, rng, existing);
            break;
        case SpawnPolicy::Lattice:
            positions = place_lattice(source, model, scenario, rng);
            break;
        case SpawnPolicy::Fixed:
            positions.assign(source.positions.begin(),
                             source.positions.begin() + source.count);
            break;
    }

    int next_id = 0;
    for (const Agent& a : existing) next_id = std::max(next_id, a.id + 1);

    std::vector<Agent> agents;
    agents.reserve(positions.size());
    for (const Vec2& p : positions) {
        Agent a;
        a.id = next_id++;
        a.x = p;
        a.w = 0.0;
        a.v_des = source.v_des_override
                      ? *source.v_des_override
                      : rng.truncated_normal(population.v_mean, population.v_std,
                                             population.v_min, population.v_max);
        a.target = target;
        a.alive = true;
        agents.push_back(a);
    }
    return agents;
}

std::vector<Agent> spawn_all(const ScenarioConfig& cfg, Rng& rng) {
    std::vector<Agent> agents;
    for (const Source& src : cfg.scenario.sources) {
        std::vector<Agent> fresh =
            spawn_agents(src, cfg.population, cfg.model, cfg.scenario, rng, agents);
        agents.insert(agents.end(), fresh.begin(), fresh.end());
    }
    return agents;
}

}  // namespace gnm
