#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "hhm/actuator.hpp"
#include "hhm/constraint.hpp"
#include "hhm/manipulator.hpp"
#include "hhm/rbfnn.hpp"
#include "hhm/rigid_body.hpp"
#include "hhm/trajectory.hpp"

namespace hhm {

enum class ControlMode { PD, VDC, RVDC };

const char* mode_name(ControlMode mode);
//! Accepts "PD", "VDC", "RVDC" (case-insensitive); throws ConfigError otherwise.
ControlMode parse_mode(const std::string& name);

struct ControllerConfig {
  ControlMode mode = ControlMode::RVDC;
  RequiredGains required;
  std::array<Mat6, kBodyCount> K_A;
  double gamma = 500.0;   // natural adaptation metric weight
  double gamma0 = 1e-4;   // its leakage
  std::array<RigidRbfGains, kBodyCount> rigid_rbf{};  // per body
  std::array<ActuatorGains, 6> actuator{};
  bool rbf_on = true;
  bool db_on = true;
  InverseForm inverse_form = InverseForm::Smooth;
  DbInverseParams db_inverse;
  int rigid_nodes = 15;
  double rigid_width = 5.0;
  Eigen::VectorXd rigid_input_scale = Eigen::VectorXd::Ones(18);  // [V, V_r, dV_r]
  std::array<int, 6> actuator_nodes{13, 13, 13, 12, 12, 12};
  double actuator_width = 0.5;
  std::array<Eigen::VectorXd, 6> actuator_input_scale;  // [x, xdot, p_a, p_b, f_pr - f_p]
  double diff_cutoff_hz = 50.0;
  double u_max = 10.0;  // valve command limit, V
  Vec6 pd_kp = Vec6::Constant(20.0);  // V/rad
  Vec6 pd_kd = Vec6::Constant(1.0);   // V s/rad
  std::array<bool, 6> active{true, true, true, true, true, true};
  std::uint64_t seed = 1;

  ControllerConfig();
  //! Effective switches: VDC forces both compensators off.
  bool rbf_enabled() const { return mode == ControlMode::RVDC && rbf_on; }
  bool db_enabled() const { return mode == ControlMode::RVDC && db_on; }
  //! Throws ConfigError on nonpositive gains or a K_A that is not positive definite.
  void validate() const;
};

//! What the controller measures: joint encoders and chamber pressures.
struct Observation {
  Vec6 theta = Vec6::Zero();
  Vec6 theta_dot = Vec6::Zero();
  Vec6 pa = Vec6::Zero();
  Vec6 pb = Vec6::Zero();
};

//! Initial estimates handed to the controller.
struct InitialEstimates {
  std::array<InertialParams, kBodyCount> inertia{};
  std::array<ActuatorEstimates, 6> actuator{};
};

struct Telemetry {
  Vec6 error = Vec6::Zero();     // theta_d - theta
  Vec6 f_p = Vec6::Zero();
  Vec6 f_pr = Vec6::Zero();
  Vec6 xdot = Vec6::Zero();
  Vec6 xdot_r = Vec6::Zero();
  Vec6 u_fr = Vec6::Zero();      // required flow command
  Vec6 u_d = Vec6::Zero();       // valve voltage before the constraint inverse
  Vec6 v = Vec6::Zero();         // commanded voltage
  Vec6 valve_floored = Vec6::Zero();
  double vpf_residual = 0.0;
  double phi_norm = 0.0;         // sum over bodies of |phi_hat|
  double rigid_weight_norm = 0.0;
  double actuator_estimate_norm = 0.0;
  double actuator_weight_norm = 0.0;
};

double vpf(const Vec6& V_r, const Vec6& V, const Vec6& F_r, const Vec6& F);

//! Sum of body VPFs minus actuator and boundary VPFs; zero when required and actual forces come from the
//! same recursion. Base VPF is zero for a fixed base.
double vpf_network_residual(const FrameSet& frames, const std::array<Vec6, kBodyCount>& net,
                            const std::array<Vec6, kBodyCount>& net_r, const Vec6& xdot, const Vec6& xdot_r,
                            const Vec6& f_c, const Vec6& f_cr, double base_vpf = 0.0);

//! Backward difference followed by a first-order low-pass.
class Differentiator {
 public:
  Differentiator() = default;
  explicit Differentiator(int n) : prev_(Eigen::VectorXd::Zero(n)), out_(Eigen::VectorXd::Zero(n)) {}
  const Eigen::VectorXd& step(const Eigen::VectorXd& x, double dt, double cutoff_hz);
  const Eigen::VectorXd& value() const { return out_; }

 private:
  Eigen::VectorXd prev_, out_;
  bool primed_ = false;
};

//! Plant truth used to evaluate the accompanying function in simulation.
struct PlantTruth {
  const ManipulatorModel* model = nullptr;
  const std::array<ActuatorParams, 6>* actuators = nullptr;
  const std::array<DbParams, 6>* db = nullptr;
};

struct AccompanyingFunction {
  double nu = 0.0;
  double mu_bar = 0.0;
  double mu_bar0 = 0.0;
  double bound() const { return mu_bar0 / mu_bar; }
};

class Controller {
 public:
  //! `model` carries the known kinematics; its inertias are ignored. `nominal` carries the known actuator geometry.
  Controller(const ManipulatorModel& model, const std::array<ActuatorParams, 6>& nominal, ControllerConfig cfg,
             const InitialEstimates& init);

  //! One control period: returns the commanded valve voltages.
  Vec6 tick(const Observation& obs, const JointReference& ref, double dt);

  const Telemetry& telemetry() const { return tel_; }
  const ControllerConfig& config() const { return cfg_; }
  const std::array<PseudoInertia, kBodyCount>& inertia_estimates() const { return L_hat_; }
  const std::array<RbfNetwork, kBodyCount>& rigid_networks() const { return nets_; }
  const std::array<ActuatorEstimates, 6>& actuator_estimates() const { return est_; }
  const FrameSet& frames() const { return frames_; }

  //! Discrete accompanying function at the last tick and the constants of its bound.
  AccompanyingFunction accompanying(const PlantTruth& truth) const;

 private:
  Vec6 tick_pd(const Observation& obs, const JointReference& ref);
  Vec6 tick_vdc(const Observation& obs, const JointReference& ref, double dt);

  ManipulatorModel model_;
  std::array<ActuatorParams, 6> nominal_;
  ControllerConfig cfg_;
  std::array<PseudoInertia, kBodyCount> L_hat_{};
  std::array<RbfNetwork, kBodyCount> nets_{};
  std::array<ActuatorEstimates, 6> est_{};
  std::array<Differentiator, kBodyCount> dVr_{};
  Differentiator dfpr_{6}, dud_{6};
  Vec6 z_hat_ = Vec6::Zero();
  FrameSet frames_;
  Vec6 e_f_ = Vec6::Zero();
  Telemetry tel_;
};

//! Inertial parameters scaled toward zero and repaired to a physically consistent estimate.
InertialParams scaled_estimate(const InertialParams& truth, double scale);

}  // namespace hhm
