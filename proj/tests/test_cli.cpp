#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hhm/config.hpp"
#include "hhm/errors.hpp"
#include "hhm/report.hpp"

namespace fs = std::filesystem;
using namespace hhm;

namespace {

const fs::path kSource = HHM_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::string replaced(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

fs::path scratch(const char* name) {
  const fs::path d = fs::temp_directory_path() / "hhm_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

//! Scenario text with an absolute fixture path, so it can live anywhere.
std::string base_text(const fs::path& fixture = kSource / "scenarios/fixtures/hydraulic_arm.yaml") {
  return replaced(slurp(kSource / "scenarios/base_joint.yaml"), "fixtures/hydraulic_arm.yaml", fixture.string());
}

std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text, kSource / "scenarios", "s.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HHM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse errors carry line and field path") {
  SUBCASE("wrong type") {
    const std::string e = parse_error(replaced(base_text(), "duration: 20.0", "duration: long"));
    CHECK(e.find("s.yaml:6:") != std::string::npos);
    CHECK(e.find("duration") != std::string::npos);
  }
  SUBCASE("nested field") {
    const std::string e = parse_error(replaced(base_text(), "kd: 3.0", "kd: [1, 2]"));
    CHECK(e.find("s.yaml:24:") != std::string::npos);
    CHECK(e.find("controller.pd.kd") != std::string::npos);
  }
  SUBCASE("bad mode name") {
    CHECK(parse_error(replaced(base_text(), "mode: RVDC", "mode: LQR")).find("mode") != std::string::npos);
  }
  SUBCASE("syntax") {
    CHECK(parse_error("name: [unclosed\n").find("syntax error") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_scenario(kSource / "scenarios/does_not_exist.yaml"), ConfigError);
  }
}

TEST_CASE("validate") {
  const fs::path dir = scratch("validate");
  SUBCASE("shipped scenarios pass") {
    CHECK(validate_scenario_file(kSource / "scenarios/base_joint.yaml").empty());
    CHECK(cli("validate " + (kSource / "scenarios/base_joint.yaml").string()) == 0);
  }
  SUBCASE("return pressure above supply") {
    const fs::path fx = dir / "fixture.yaml";
    spit(fx, replaced(slurp(kSource / "scenarios/fixtures/hydraulic_arm.yaml"), "p_r: 3.0e5", "p_r: 3.0e7"));
    spit(dir / "s.yaml", base_text(fx));
    const auto problems = validate_scenario_file(dir / "s.yaml");
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("actuators") != std::string::npos);
    CHECK(problems[0].find("p_r") != std::string::npos);
    CHECK(cli("validate " + (dir / "s.yaml").string()) == 2);
  }
  SUBCASE("negative dead band width") {
    spit(dir / "s.yaml", replaced(base_text(), "b_r: 0.2", "b_r: -0.2"));
    const auto problems = validate_scenario_file(dir / "s.yaml");
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("constraint.params") != std::string::npos);
  }
  SUBCASE("accepts exactly what run accepts") {
    // A waypoint outside the stroke parses but cannot run; both front ends must refuse it.
    spit(dir / "s.yaml", replaced(base_text(), "theta: [0.5,", "theta: [2.5,"));
    CHECK_NOTHROW(load_scenario(dir / "s.yaml"));
    CHECK(validate_scenario_file(dir / "s.yaml").size() == 1);
    CHECK(cli("run --validate-only " + (dir / "s.yaml").string()) == 2);
    CHECK(cli("run --out " + (dir / "out").string() + " " + (dir / "s.yaml").string()) != 0);
    CHECK_FALSE(fs::exists(dir / "out/base_joint_RVDC.csv"));
  }
}

TEST_CASE("run and compare") {
  const fs::path dir = scratch("run");
  spit(dir / "s.yaml", replaced(base_text(), "duration: 20.0", "duration: 0.3"));
  REQUIRE(cli("run --mode VDC --out " + (dir / "out").string() + " " + (dir / "s.yaml").string()) == 0);
  REQUIRE(cli("run --mode pd --seed 3 --out " + (dir / "out").string() + " " + (dir / "s.yaml").string()) == 0);
  const fs::path vdc = dir / "out/base_joint_VDC.json", pd = dir / "out/base_joint_PD.json";
  REQUIRE(fs::exists(dir / "out/base_joint_VDC.csv"));
  REQUIRE(fs::exists(vdc));

  const auto j = nlohmann::json::parse(slurp(pd));
  CHECK(j["mode"] == "PD");
  CHECK(j["seed"] == 3);
  CHECK(j["schema"] == kMetricsSchemaVersion);
  CHECK(slurp(dir / "out/base_joint_VDC.csv").rfind("# hhm-sim-csv schema=1 scenario=base_joint mode=VDC", 0) == 0);

  SUBCASE("a run against itself gives identical columns") {
    const MetricsRecord a = read_metrics(vdc);
    const std::string t = compare_text({a, a});
    std::istringstream in(t);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::istringstream cells(line.substr(22));  // label column is 22 wide
      std::string x, y;
      cells >> x >> y;
      CHECK(x == y);
    }
  }
  SUBCASE("three-way compare has three columns") {
    const auto recs = std::vector<MetricsRecord>{read_metrics(vdc), read_metrics(pd), read_metrics(vdc)};
    const auto cj = nlohmann::json::parse(compare_json(recs));
    CHECK(cj.size() == 3);
    const std::string header = compare_text(recs).substr(0, compare_text(recs).find('\n'));
    CHECK(header.find("base_joint/PD") != std::string::npos);
    CHECK(cli("compare " + vdc.string() + " " + pd.string() + " " + vdc.string()) == 0);
  }
  SUBCASE("schema mismatch") {
    auto bad = nlohmann::json::parse(slurp(vdc));
    bad["schema"] = kMetricsSchemaVersion + 1;
    spit(dir / "bad.json", bad.dump());
    CHECK_THROWS_AS(read_metrics(dir / "bad.json"), ConfigError);
    CHECK(cli("compare " + vdc.string() + " " + (dir / "bad.json").string()) == 2);
  }
  SUBCASE("compare needs two files") { CHECK(cli("compare " + vdc.string()) != 0); }
  SUBCASE("missing scenario file") { CHECK(cli("run " + (dir / "nope.yaml").string()) != 0); }
}
