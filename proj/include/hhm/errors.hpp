#pragma once

#include <stdexcept>
#include <string>

namespace hhm {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhysicalConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Raised by the simulation loop; carries the control tick where it happened.
struct SimulationAbort : std::runtime_error {
  SimulationAbort(const std::string& what, long tick_index)
      : std::runtime_error(what + " (tick " + std::to_string(tick_index) + ")"), tick(tick_index) {}
  long tick;
};

}  // namespace hhm
