#include "gnm/output.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gnm {

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create output directory '" + path + "': " + ec.message());
}

void write_manifest(const std::string& dir, const ScenarioConfig& cfg,
                    const SimulationResult& result,
                    const std::map<std::string, double>& summary,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["version"] = "1.0";
    j["name"] = cfg.name;
    j["seed"] = cfg.population.seed;
    j["scenario"] = nlohmann::json::parse(scenario_to_json_text(cfg));
    j["result"] = {{"t_end", result.t_end},
                   {"steps_accepted", result.steps_accepted},
                   {"steps_rejected", result.steps_rejected},
                   {"spawned", result.spawned},
                   {"absorbed", result.absorbed},
                   {"wall_seconds", result.wall_seconds}};
    for (const auto& [k, v] : summary) j["summary"][k] = v;
    j["outputs"] = outputs;

    const std::string path = dir + "/run.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << j.dump(2) << "\n";
}

CsvFile::CsvFile(const std::string& path, const std::string& header) : path_(path) {
    buffer_ = header;
    if (!header.empty() && header.back() != '\n') buffer_ += '\n';
}

void CsvFile::row(const std::vector<double>& values) {
    std::ostringstream line;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) line << ',';
        line << values[i];
    }
    buffer_ += line.str();
    buffer_ += '\n';
}

void CsvFile::raw_row(const std::string& line) {
    buffer_ += line;
    buffer_ += '\n';
}

void CsvFile::close() {
    if (closed_) return;
    std::ofstream out(path_);
    if (!out) throw IoError("cannot write '" + path_ + "'");
    out << buffer_;
    closed_ = true;
}

}  // namespace gnm
