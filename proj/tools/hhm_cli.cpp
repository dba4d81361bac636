#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hhm/config.hpp"
#include "hhm/errors.hpp"
#include "hhm/report.hpp"
#include "hhm/sim.hpp"

namespace fs = std::filesystem;
using namespace hhm;

namespace {

struct RunManifest {
  std::vector<std::string> scenarios;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  int jobs = 1;
  bool validate_only = false;
};

int validate(const std::vector<std::string>& paths) {
  int bad = 0;
  for (const auto& p : paths) {
    const auto problems = validate_scenario_file(p);
    if (problems.empty()) {
      fmt::print("{}: ok\n", p);
    } else {
      ++bad;
      for (const auto& msg : problems) fmt::print(stderr, "{}\n", msg);
    }
  }
  return bad ? 2 : 0;
}

int run(const RunManifest& m) {
  if (m.validate_only) return validate(m.scenarios);
  // Parse everything up front so config errors are reported before any run starts.
  std::vector<Scenario> scs;
  for (const auto& p : m.scenarios) {
    try {
      Scenario sc = load_scenario(p);
      if (m.seed) sc.seed = *m.seed;
      if (m.mode) sc.controller.mode = parse_mode(*m.mode);
      scs.push_back(std::move(sc));
    } catch (const ConfigError& e) {
      fmt::print(stderr, "{}\n", e.what());
      return 2;
    }
  }
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < scs.size(); i = next++) {
      const Scenario& sc = scs[i];
      const std::string stem = fmt::format("{}_{}", sc.name, mode_name(sc.controller.mode));
      try {
        const SimResult r = hhm::run(sc);
        const Metrics met = metrics(r, kDefaultSteadyWindow);
        write_csv(r, fs::path(m.out) / (stem + ".csv"));
        write_metrics(r, met, fs::path(m.out) / (stem + ".json"));
        std::lock_guard lock(io);
        if (r.abort_reason) {
          ++failures;
          fmt::print(stderr, "{}: aborted: {}\n", stem, *r.abort_reason);
        } else {
          fmt::print("{}: {} rows -> {}\n", stem, r.rows(), (fs::path(m.out) / stem).string());
        }
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(io);
        fmt::print(stderr, "{}: {}\n", stem, e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(m.jobs, static_cast<int>(scs.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return failures ? 1 : 0;
}

int compare(const std::vector<std::string>& paths, const std::string& json_out) {
  if (paths.size() < 2) {
    fmt::print(stderr, "compare needs at least two metrics files\n");
    return 2;
  }
  std::vector<MetricsRecord> recs;
  try {
    for (const auto& p : paths) recs.push_back(read_metrics(p));
  } catch (const ConfigError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 2;
  }
  fmt::print("{}", compare_text(recs));
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << compare_json(recs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydraulic manipulator control simulator"};
  app.require_subcommand(1);

  RunManifest m;
  auto* run_cmd = app.add_subcommand("run", "Run scenarios and write CSV and metrics JSON");
  run_cmd->add_option("--scenario,scenario", m.scenarios, "Scenario file(s)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", m.out, "Output directory");
  run_cmd->add_option("--seed", m.seed, "Override the scenario seed");
  run_cmd->add_option("--mode", m.mode, "Override the control mode (PD, VDC, RVDC)");
  run_cmd->add_option("--jobs", m.jobs, "Scenarios run in parallel")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--validate-only", m.validate_only, "Check the scenarios without running them");

  std::vector<std::string> metrics_files;
  std::string json_out;
  auto* cmp = app.add_subcommand("compare", "Side-by-side table of metrics files");
  cmp->add_option("metrics", metrics_files, "Metrics JSON files")->required();
  cmp->add_option("--json", json_out, "Also write the table as JSON");

  std::vector<std::string> to_validate;
  auto* val = app.add_subcommand("validate", "Check scenario files without running");
  val->add_option("--scenario,scenario", to_validate, "Scenario file(s)")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(m);
    if (*cmp) return compare(metrics_files, json_out);
    if (*val) return validate(to_validate);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
