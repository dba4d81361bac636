#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hhm/config.hpp"
#include "hhm/errors.hpp"
#include "hhm/report.hpp"
#include "hhm/sim.hpp"

using namespace hhm;

namespace {

std::filesystem::path scenario_path(const char* name) {
  return std::filesystem::path(HHM_SOURCE_DIR) / "scenarios" / name;
}

Scenario base_joint(double duration) {
  Scenario sc = load_scenario(scenario_path("base_joint.yaml"));
  sc.duration = duration;
  return sc;
}

SimResult fake_result(const std::vector<double>& e, const std::vector<double>& speed) {
  SimResult r;
  r.columns = {"t", "e1", "v1", "ee_err", "ee_speed_d"};
  r.free = {true, false, false, false, false, false};
  r.dt = 1e-3;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (double v : {i * 1e-3, e[i], 2.0 * e[i], std::abs(e[i]), speed[i]}) r.data.push_back(v);
  }
  return r;
}

double state_diff(const PlantState& a, const PlantState& b) {
  // Pressures in MPa so that all parts carry similar weight.
  return std::sqrt((a.theta - b.theta).squaredNorm() + (a.theta_dot - b.theta_dot).squaredNorm() +
                   ((a.pa - b.pa) * 1e-6).squaredNorm() + ((a.pb - b.pb) * 1e-6).squaredNorm());
}

PlantState integrate(const Plant& p, PlantState s, const Vec6& u, double T, double dt) {
  const int n = static_cast<int>(std::lround(T / dt));
  for (int i = 0; i < n; ++i) s = p.step(s, u, dt);
  return s;
}

}  // namespace

TEST_CASE("metric oracles") {
  SUBCASE("constant error") {
    const std::vector<double> e(500, -0.03), v(500, 1.0);
    const Metrics m = metrics(fake_result(e, v), 0.1);
    CHECK(m.joints[0].e_rms == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(m.joints[0].e_max == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(m.joints[0].u_rms == doctest::Approx(0.06).epsilon(1e-14));
  }
  SUBCASE("sine rms over whole periods") {
    const double A = 0.7;
    std::vector<double> e(4000), v(4000, 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = A * std::sin(2.0 * std::numbers::pi * 5.0 * i * 1e-3);
    CHECK(rms(e) == doctest::Approx(A / std::sqrt(2.0)).epsilon(1e-6));
  }
  SUBCASE("rho") {
    const std::vector<double> e{0.0, 0.02, 0.01}, v{0.0, 0.5, 0.4};
    CHECK(rho(e, v) == doctest::Approx(0.04));
    const std::vector<double> still{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(rho(e, still), std::domain_error);
    CHECK_FALSE(metrics(fake_result(e, still), 0.001).rho.has_value());
  }
}

TEST_CASE("scenario validation") {
  Scenario sc = base_joint(1.0);
  SUBCASE("accepted") { CHECK_NOTHROW(prepared(sc)); }
  SUBCASE("non-integer step ratio") {
    sc.dt_control = 1.5e-3 + 1e-5;
    CHECK_THROWS_AS(prepared(sc), ConfigError);
  }
  SUBCASE("nonpositive duration") {
    sc.duration = 0.0;
    CHECK_THROWS_AS(prepared(sc), ConfigError);
  }
  SUBCASE("waypoint past the stroke") {
    sc.reference.joint[0].theta(0) = 3.0;
    CHECK_THROWS_AS(prepared(sc), ConfigError);
  }
  SUBCASE("no free joint") {
    sc.free.fill(false);
    CHECK_THROWS_AS(prepared(sc), ConfigError);
  }
}

TEST_CASE("shipped scenarios load") {
  for (const char* name : {"base_joint.yaml", "full_reach.yaml"}) {
    CAPTURE(name);
    CHECK(validate_scenario_file(scenario_path(name)).empty());
  }
}

TEST_CASE("run is deterministic and well formed") {
  const Scenario sc = base_joint(0.5);
  const SimResult a = run(sc), b = run(sc);
  REQUIRE_FALSE(a.abort_reason.has_value());
  CHECK(a.rows() == 500);
  CHECK(csv_text(a) == csv_text(b));
  for (double v : a.data) REQUIRE(std::isfinite(v));
  const auto t = a.series("t");
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] - t[i - 1] == doctest::Approx(1e-3).epsilon(1e-9));
  SUBCASE("a different seed changes the networks") {
    Scenario s2 = sc;
    s2.seed += 1;
    CHECK(csv_text(run(s2)) != csv_text(a));
  }
}

TEST_CASE("regulation at the current pose") {
  for (ControlMode mode : {ControlMode::PD, ControlMode::VDC, ControlMode::RVDC}) {
    CAPTURE(mode_name(mode));
    Scenario sc = base_joint(3.0);
    sc.controller.mode = mode;
    sc.reference.joint = {{sc.theta0, 0.5, 2.5}};
    const SimResult r = run(sc);
    REQUIRE_FALSE(r.abort_reason.has_value());
    const auto e = r.series("e1");
    const std::vector<double> first(e.begin(), e.begin() + 500), last(e.end() - 500, e.end());
    CHECK(max_abs(first) < 0.01);
    CHECK(max_abs(last) <= max_abs(first) + 1e-9);
  }
}

TEST_CASE("plant step doubling") {
  Scenario sc = prepared(load_scenario(scenario_path("full_reach.yaml")));
  const Plant plant(sc.model, sc.actuators, sc.free);
  const PlantState s0 = plant.equilibrium(sc.theta0, sc.pb0_fraction);
  Vec6 u;
  u << 0.8, -0.6, 0.5, 0.3, -0.4, 0.2;
  const double T = 0.02;
  const PlantState y1 = integrate(plant, s0, u, T, 4e-4);
  const PlantState y2 = integrate(plant, s0, u, T, 2e-4);
  const PlantState y3 = integrate(plant, s0, u, T, 1e-4);
  const double order = std::log2(state_diff(y1, y2) / state_diff(y2, y3));
  CAPTURE(order);
  CHECK(order >= 3.5);
}

TEST_CASE("stroke violation aborts with the tick") {
  Scenario sc = base_joint(4.0);
  sc.controller.mode = ControlMode::PD;
  sc.controller.pd_kp = Vec6::Constant(0.0);
  sc.controller.pd_kd = Vec6::Constant(0.0);
  // A constant full-open valve drives the slew piston into its end stop.
  sc.db_enabled.fill(false);
  sc.controller.pd_kp(0) = -1e6;
  sc.reference.joint = {{sc.theta0 + Vec6::Unit(0) * 0.5, 0.1, 3.9}};
  const SimResult r = run(sc);
  REQUIRE(r.abort_reason.has_value());
  CHECK(r.abort_reason->find("tick") != std::string::npos);
  CHECK(r.rows() > 2000);
  CHECK(r.rows() < 3500);
}
