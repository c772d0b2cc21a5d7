// Command-line front end: presets, custom scenarios, parameter sweeps,
// calibration and floor-field dumps, all emitting CSV metrics plus a
// reproducible run.json manifest.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "gnm/calibration.hpp"
#include "gnm/experiments.hpp"
#include "gnm/output.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
    std::string preset;
    std::string scenario_file;
    std::uint64_t seed = 1;
    std::string out;
    double duration = -1.0;
    double tol_abs = -1.0;
    double tol_rel = -1.0;
    std::vector<std::string> params;
    // preset knobs
    double width = 1.0;
    double rho = -1.0;
    int agents = 180;
    bool second_set = false;
    bool trajectories = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--preset", o.preset,
                    "bottleneck | fundamental-diagram | stop-and-go | lanes | standoff");
    cmd->add_option("--scenario", o.scenario_file, "scenario JSON (or a run.json manifest)");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "output directory (default $GNM_OUT_DIR/<name>)");
    cmd->add_option("--duration", o.duration, "simulated seconds");
    cmd->add_option("--tol-abs", o.tol_abs, "integrator absolute tolerance");
    cmd->add_option("--tol-rel", o.tol_rel, "integrator relative tolerance");
    cmd->add_option("--param", o.params, "model override key=value (repeatable)")
        ->take_all();
    cmd->add_option("--width", o.width, "bottleneck width (m)");
    cmd->add_option("--rho", o.rho, "corridor global density (P/m^2)");
    cmd->add_option("--agents", o.agents, "bottleneck agent count");
    cmd->add_flag("--second-set", o.second_set, "use the wide-support parameter set");
    cmd->add_flag("--trajectories", o.trajectories, "write trajectory.csv");
}

void apply_model_override(gnm::ModelParams& m, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw gnm::ScenarioError("--param: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const double value = std::stod(kv.substr(eq + 1));
    if (key == "kappa") m.kappa = value;
    else if (key == "tau") m.tau = value;
    else if (key == "p_p") m.p_p = value;
    else if (key == "R_p") m.R_p = value;
    else if (key == "p_B") m.p_B = value;
    else if (key == "R_B") m.R_B = value;
    else if (key == "eps") m.eps = value;
    else if (key == "rho_max") m.rho_max = value;
    else if (key == "moll_radius") m.moll_radius = value;
    else if (key == "logistic_x0") m.logistic_x0 = value;
    else if (key == "logistic_R") m.logistic_R = value;
    else if (key == "collision_threshold") m.collision_threshold = value;
    else throw gnm::ScenarioError("--param: unknown model field '" + key + "'");
}

gnm::ScenarioConfig build_config(const CommonOpts& o) {
    gnm::ScenarioConfig cfg;
    if (!o.scenario_file.empty()) {
        cfg = gnm::load_scenario(o.scenario_file);
    } else if (o.preset == "bottleneck") {
        cfg = gnm::preset_bottleneck(o.width, o.agents, o.seed);
    } else if (o.preset == "fundamental-diagram") {
        cfg = gnm::preset_fundamental_diagram(o.rho > 0 ? o.rho : 1.0, o.seed);
    } else if (o.preset == "stop-and-go") {
        cfg = gnm::preset_stop_and_go(o.rho > 0 ? o.rho : 4.0, o.seed);
    } else if (o.preset == "lanes") {
        cfg = gnm::preset_lanes(o.rho > 0 ? o.rho : 0.3, o.seed);
    } else if (o.preset == "standoff") {
        cfg = gnm::standoff_simulation_config(gnm::default_standoff(), gnm::ModelParams{});
    } else if (o.preset.empty()) {
        throw gnm::ScenarioError("either --preset or --scenario is required");
    } else {
        throw gnm::ScenarioError("unknown preset '" + o.preset + "'");
    }
    if (o.scenario_file.empty()) cfg.population.seed = o.seed;
    if (o.second_set) gnm::apply_second_parameter_set(cfg);
    if (o.duration > 0) cfg.duration = o.duration;
    if (o.tol_abs > 0) cfg.integrator.tol_abs = o.tol_abs;
    if (o.tol_rel > 0) cfg.integrator.tol_rel = o.tol_rel;
    for (const std::string& kv : o.params) apply_model_override(cfg.model, kv);
    cfg.validate();
    return cfg;
}

std::string resolve_out_dir(const CommonOpts& o, const std::string& name) {
    if (!o.out.empty()) return o.out;
    const char* root = std::getenv("GNM_OUT_DIR");
    return std::string(root ? root : "out") + "/" + name;
}

int cmd_run(const CommonOpts& o) {
    gnm::ScenarioConfig cfg = build_config(o);
    gnm::ExperimentOptions opt;
    opt.out_dir = resolve_out_dir(o, cfg.name);
    opt.trajectories = o.trajectories;
    if (cfg.name == "lanes") opt.lane_snapshot_t = std::min(120.0, cfg.duration);
    const gnm::ExperimentOutput out = gnm::run_experiment(cfg, opt);

    std::cout << "run: " << cfg.name << " seed=" << cfg.population.seed
              << " t_end=" << out.sim.t_end << "s steps=" << out.sim.steps_accepted
              << " wall=" << out.sim.wall_seconds << "s\n";
    if (!out.crossings.empty())
        std::cout << "  crossings=" << out.crossings.size() << " flow=" << out.flow << "/s\n";
    if (std::isfinite(out.min_distance))
        std::cout << "  min_distance=" << out.min_distance << " m (collision events: "
                  << out.collision_events << ")\n";
    if (out.speed.samples > 0)
        std::cout << "  mu_norm=" << out.speed.mu_norm << " sigma_norm=" << out.speed.sigma_norm
                  << " (" << out.speed.samples << " samples)\n";
    for (const gnm::LaneCount& lc : out.lanes)
        std::cout << "  lanes[" << lc.direction << "]=" << lc.result.count
                  << (lc.result.no_lanes ? " (no-lanes flag)" : "") << "\n";
    std::cout << "  outputs: " << opt.out_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOpts& o, const std::string& which, std::vector<double> values,
              int seeds, int parallel) {
    if (values.empty()) throw gnm::ScenarioError("sweep: empty parameter grid");
    const std::string out_dir = resolve_out_dir(o, o.preset + "-sweep");
    gnm::ensure_directory(out_dir);

    if (o.preset == "bottleneck") {
        const auto rows = gnm::sweep_bottleneck(values, seeds, parallel, o.agents);
        gnm::CsvFile csv(out_dir + "/flow_sweep.csv",
                         "width,seed,J,J_per_width,min_distance,cone_x,cone_gap_y");
        for (const auto& r : rows)
            csv.row({r.width, static_cast<double>(r.seed), r.flow, r.specific_flow,
                     r.min_distance, r.cone_x_extent, r.cone_gap_y_extent});
        csv.close();
        std::cout << "wrote " << rows.size() << " rows to " << out_dir << "/flow_sweep.csv\n";
        return kExitOk;
    }
    if (o.preset == "fundamental-diagram" || o.preset == "stop-and-go") {
        const auto kind = o.preset == "stop-and-go" ? gnm::CorridorKind::StopAndGo
                                                    : gnm::CorridorKind::FundamentalDiagram;
        const auto rows = gnm::sweep_corridor(kind, values, seeds, parallel, o.second_set);
        gnm::write_speed_stats_csv(gnm::aggregate_speed_stats(rows),
                                   out_dir + "/speed_stats.csv");
        std::cout << "wrote " << rows.size() << " runs to " << out_dir << "/speed_stats.csv\n";
        return kExitOk;
    }
    if (o.preset == "lanes") {
        const auto rows = gnm::sweep_lanes(seeds, parallel, o.rho > 0 ? o.rho : 0.3,
                                           values.empty() ? 120.0 : values[0]);
        gnm::CsvFile csv(out_dir + "/lanes_sweep.csv", "seed,lanes_east,lanes_west,no_lanes");
        for (const auto& r : rows)
            csv.row({static_cast<double>(r.seed), static_cast<double>(r.lanes_east),
                     static_cast<double>(r.lanes_west), r.no_lanes ? 1.0 : 0.0});
        csv.close();
        std::cout << "wrote " << rows.size() << " rows to " << out_dir << "/lanes_sweep.csv\n";
        return kExitOk;
    }
    throw gnm::ScenarioError("sweep: preset '" + o.preset + "' (" + which +
                             ") has no sweep driver");
}

int cmd_field(const CommonOpts& o, const std::string& target_id) {
    gnm::ScenarioConfig cfg = build_config(o);
    const gnm::Scenario& scn = cfg.scenario;
    int idx = target_id.empty() ? 0 : scn.target_index(target_id);
    if (idx < 0) {
        std::string ids;
        for (const gnm::Target& t : scn.targets) ids += " '" + t.id + "'";
        throw gnm::ScenarioError("field: unknown target '" + target_id + "'; available:" + ids);
    }
    const gnm::FloorField field = gnm::build_floor_field(scn, scn.targets[idx], cfg.model);
    const std::string out_dir = resolve_out_dir(o, cfg.name + "-field");
    gnm::ensure_directory(out_dir);
    const std::string path = out_dir + "/field_" + scn.targets[idx].id + ".csv";
    gnm::dump_field_csv(field, path);
    std::cout << "wrote " << path << " (" << field.grid.nx << "x" << field.grid.ny
              << " nodes, " << field.desc.unreachable_nodes << " unreachable)\n";
    return kExitOk;
}

int cmd_calibrate(double rp, double rb, double dw, double rho_max, bool second_layer, int scan,
                  const std::string& write_back) {
    gnm::ModelParams params;
    const gnm::StandoffScenario geom = second_layer
                                           ? gnm::second_layer_standoff(rho_max, rp, dw)
                                           : gnm::default_standoff(rho_max, dw);
    const gnm::CalibrationResult res = gnm::calibrate(geom, rp, rb, params, scan);
    std::cout << "calibrate: p_p=" << res.p_p << " p_B=" << res.p_B << "\n"
              << "  residual=(" << res.residual.x << ", " << res.residual.y << ")"
              << " |N_P|=" << res.closure_norm << " newton_iters=" << res.newton_iters << "\n"
              << "  geometry: " << geom.neighbors.size() << " neighbors at lattice r="
              << geom.lattice_r << " m, wall at d=" << geom.wall_distance << " m, R_p=" << rp
              << ", R_B=" << rb << "\n";
    if (!write_back.empty()) {
        gnm::ScenarioConfig cfg = gnm::load_scenario(write_back);
        cfg.model.p_p = res.p_p;
        cfg.model.p_B = res.p_B;
        cfg.model.R_p = rp;
        cfg.model.R_B = rb;
        gnm::save_scenario(cfg, write_back);
        std::cout << "  wrote calibrated parameters into " << write_back << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-navigation crowd simulator"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    CLI::App* run = app.add_subcommand("run", "run one scenario and write metrics");
    add_common(run, run_opts);

    CommonOpts sweep_opts;
    std::vector<double> widths{0.8, 1.0, 1.2, 1.6, 2.0};
    std::vector<double> densities;
    int seeds = 3;
    int parallel = 1;
    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep with aggregated CSV");
    add_common(sweep, sweep_opts);
    sweep->add_option("--widths", widths, "bottleneck widths (m)")->delimiter(',');
    sweep->add_option("--densities", densities, "corridor densities (P/m^2)")->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds per grid point");
    sweep->add_option("--parallel", parallel, "concurrent runs");

    CommonOpts field_opts;
    std::string field_target;
    CLI::App* field = app.add_subcommand("field", "dump sigma and its smooth gradient as CSV");
    add_common(field, field_opts);
    field->add_option("--target", field_target, "target id (default: first)");

    double cal_rp = 0.70, cal_rb = 0.25, cal_dw = 0.2, cal_rho = 7.0;
    bool cal_second = false;
    int cal_scan = 60;
    std::string cal_write;
    CLI::App* cal = app.add_subcommand("calibrate", "solve the standstill condition for (p_p, p_B)");
    cal->add_option("--rp", cal_rp, "pedestrian support R_p (m)");
    cal->add_option("--rb", cal_rb, "obstacle support R_B (m)");
    cal->add_option("--dw", cal_dw, "wall distance (m)");
    cal->add_option("--rho-max", cal_rho, "lattice density (P/m^2)");
    cal->add_flag("--second-layer", cal_second, "include neighbors of neighbors");
    cal->add_option("--scan", cal_scan, "bracketing scan resolution");
    cal->add_option("--write-back", cal_write, "write p_p/p_B into this scenario file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (sweep->parsed()) {
            const bool corridor = sweep_opts.preset == "fundamental-diagram" ||
                                  sweep_opts.preset == "stop-and-go";
            std::vector<double> values = corridor ? densities : widths;
            if (sweep_opts.preset == "lanes") values = {120.0};
            return cmd_sweep(sweep_opts, corridor ? "densities" : "widths", values, seeds,
                             parallel);
        }
        if (field->parsed()) return cmd_field(field_opts, field_target);
        if (cal->parsed())
            return cmd_calibrate(cal_rp, cal_rb, cal_dw, cal_rho, cal_second, cal_scan,
                                 cal_write);
    } catch (const gnm::ScenarioError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gnm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const gnm::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
