#pragma once

#include <map>
#include <string>
#include <vector>

#include "gnm/integrator.hpp"
#include "gnm/scenario.hpp"

namespace gnm {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void ensure_directory(const std::string& path);

/// run.json: the fully resolved configuration plus run provenance, enough to
/// reproduce the run exactly (`run --scenario <dir>/run.json`).
void write_manifest(const std::string& dir, const ScenarioConfig& cfg,
                    const SimulationResult& result,
                    const std::map<std::string, double>& summary,
                    const std::vector<std::string>& outputs);

/// Simple row-oriented CSV writer.
class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header);
    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);
    void close();

private:
    std::string path_;
    std::string buffer_;
    bool closed_ = false;
};

}  // namespace gnm
