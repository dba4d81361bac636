#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hhm/sim.hpp"

namespace hhm {

//! Parses a scenario file and the fixture it references. Errors carry file, line and field path.
Scenario load_scenario(const std::filesystem::path& path);
//! Same, from text; `base` resolves the fixture path.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base, const std::string& origin);

//! Every problem found in a scenario file, without running it. Empty when the file would run.
std::vector<std::string> validate_scenario_file(const std::filesystem::path& path);

}  // namespace hhm
