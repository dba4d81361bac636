#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hhm/actuator.hpp"
#include "hhm/constraint.hpp"
#include "hhm/controller.hpp"
#include "hhm/manipulator.hpp"
#include "hhm/trajectory.hpp"

namespace hhm {

struct ReferenceSpec {
  enum class Kind { Joint, Cartesian };
  Kind kind = Kind::Joint;
  std::vector<JointWaypoint> joint;
  std::vector<CartesianWaypoint> cartesian;
  double k_pose = 20.0;
};

//! How far the initial estimates sit from the plant truth.
struct EstimateInit {
  double phi_scale = 0.2;       // inertial parameters
  double theta_v_scale = 0.5;   // valve flow coefficients
  double theta_d_scale = 0.8;   // [1/beta, A_a, A_b, c_l]
  double friction_scale = 0.0;  // friction parameters
};

struct Scenario {
  std::string name = "scenario";
  ManipulatorModel model;                   // plant truth; the controller gets the kinematics
  std::array<ActuatorParams, 6> actuators;  // plant truth; geometry is known to the controller
  std::array<DbParams, 6> db{};
  std::array<bool, 6> db_enabled{};
  BacklashModel backlash = BacklashModel::Literal;
  std::array<bool, 6> free{true, true, true, true, true, true};
  ControllerConfig controller;
  EstimateInit init;
  Vec6 theta0 = Vec6::Zero();
  double pb0_fraction = 0.3;  // initial rod-side pressure as a fraction of p_s
  bool auto_offset = true;    // place each piston at mid-stroke at theta0
  ReferenceSpec reference;
  double duration = 20.0;
  double dt_plant = 2e-4;
  double dt_control = 1e-3;
  std::uint64_t seed = 1;
  bool track_nu = false;

  //! Throws ConfigError on the first violated invariant.
  void validate() const;
  int substeps() const;
};

//! Plant state: mechanism, chamber pressures, bristle deflections.
struct PlantState {
  Vec6 theta = Vec6::Zero();
  Vec6 theta_dot = Vec6::Zero();
  Vec6 pa = Vec6::Zero();
  Vec6 pb = Vec6::Zero();
  Vec6 z = Vec6::Zero();
};

//! Manipulator + hydraulics, integrated with classical RK4 under a held valve input.
class Plant {
 public:
  Plant(const ManipulatorModel& model, const std::array<ActuatorParams, 6>& actuators, std::array<bool, 6> free);
  PlantState derivative(const PlantState& s, const Vec6& u) const;
  PlantState step(const PlantState& s, const Vec6& u, double dt) const;
  //! Stroke coordinates [0, s] of every actuator at a configuration.
  Vec6 strokes(const Vec6& theta) const;
  //! Pressures that hold the mechanism at rest at theta under gravity.
  PlantState equilibrium(const Vec6& theta, double pb_fraction) const;

 private:
  const ManipulatorModel* model_;
  const std::array<ActuatorParams, 6>* act_;
  std::array<bool, 6> free_;
};

//! Row-major table with named columns.
struct SimResult {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<std::string> columns;
  std::vector<double> data;
  std::array<bool, 6> free{};
  std::optional<std::string> abort_reason;
  double nu0 = 0.0, nu_max = 0.0, nu_bound = 0.0;  // filled when the scenario tracks nu

  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }
  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> series(const std::string& name) const;
};

//! Adjusted scenario: offsets placed, validated. Shared by run() and the CLI validator.
Scenario prepared(Scenario sc);

//! Runs a scenario. A singularity, stroke violation or NaN stops the run; the partial result carries the reason.
SimResult run(const Scenario& scenario);

struct JointMetrics {
  double e_max = 0.0, e_rms = 0.0, u_rms = 0.0;
  double e_steady = 0.0;  // max |e| over the final window
};

struct Metrics {
  std::array<JointMetrics, 6> joints{};
  std::array<bool, 6> free{};
  std::optional<double> rho;
  double ee_error_max = 0.0;
  double ee_rmse = 0.0;
  double ee_speed_max = 0.0;
};

double rms(const std::vector<double>& x);
double max_abs(const std::vector<double>& x);
//! Max error norm over max reference speed; throws std::domain_error if the reference never moves.
double rho(const std::vector<double>& error_norm, const std::vector<double>& speed);

Metrics metrics(const SimResult& r, double steady_window);

}  // namespace hhm
