#pragma once

#include <string>
#include <vector>

#include "cqn/config.hpp"

namespace cqn {

// The example configs shipped in configs/, compiled into the library.
std::vector<std::string> bundled_scenario_names();

// Raw JSON text; std::out_of_range for an unknown name.
const std::string& bundled_scenario_text(const std::string& name);

ExperimentConfig bundled_scenario(const std::string& name);

}  // namespace cqn
