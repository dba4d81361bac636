#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hhm/sim.hpp"

namespace hhm {

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr double kDefaultSteadyWindow = 2.0;  // s

//! First line "# hhm-sim-csv schema=<v> ...", then the column header, then one row per control tick.
std::string csv_text(const SimResult& r);
void write_csv(const SimResult& r, const std::filesystem::path& path);

//! Metrics report as JSON text (schema documented in the README).
std::string metrics_json(const SimResult& r, const Metrics& m);
void write_metrics(const SimResult& r, const Metrics& m, const std::filesystem::path& path);

//! One column of a comparison table.
struct MetricsRecord {
  std::string label;  // scenario/mode
  std::array<bool, 6> free{};
  std::array<JointMetrics, 6> joints{};
  double rho = -1.0;  // negative when undefined
  bool aborted = false;
};

//! Throws ConfigError on unreadable files or a schema mismatch.
MetricsRecord read_metrics(const std::filesystem::path& path);

//! Side-by-side |e|max, e_rms, u_rms (degrees / volts) per joint and rho.
std::string compare_text(const std::vector<MetricsRecord>& recs);
std::string compare_json(const std::vector<MetricsRecord>& recs);

}  // namespace hhm
