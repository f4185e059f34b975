#pragma once

#include <string>
#include <vector>

#include "qlink/link_sim.hpp"

namespace qlink {

std::vector<std::string> preset_names();

// Throws DomainError for unknown names.
ScenarioConfig preset_config(const std::string& name);

// The integration-time sweep preset drives a tau sweep instead of a single
// scenario; the runner special-cases it.
bool preset_is_sweep(const std::string& name);

}  // namespace qlink
