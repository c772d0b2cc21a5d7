#pragma once

#include "gnm/scenario.hpp"

namespace gnm {

/// Holding area, a 4 m long constriction of the given width, and an
/// absorbing strip behind the exit. 180 agents by default; the flow line
/// sits at the constriction exit.
ScenarioConfig preset_bottleneck(double width = 1.0, int agents = 180,
                                 std::uint64_t seed = 1);

/// Unidirectional periodic corridor at a global density (P/m^2), lattice
/// spawn. Used for the speed-density relation (40x4) and for wave
/// measurements (50x4).
ScenarioConfig preset_corridor(double length, double width, double rho,
                               std::uint64_t seed = 1);

ScenarioConfig preset_fundamental_diagram(double rho, std::uint64_t seed = 1);
ScenarioConfig preset_stop_and_go(double rho, std::uint64_t seed = 1);

/// Bidirectional periodic walkway (150x10 m), both groups spread uniformly,
/// total density rho (P/m^2).
ScenarioConfig preset_lanes(double rho = 0.3, std::uint64_t seed = 1);

/// Applies the alternate kernel set fitted with a wider support.
void apply_second_parameter_set(ScenarioConfig& cfg);

}  // namespace gnm
