#pragma once

#include <array>
#include <utility>

#include "hhm/rigid_body.hpp"
#include "hhm/spatial.hpp"

namespace hhm {

// Lift and tilt chain angle offsets: q1 = -2.0736 - zeta2, q2 = zeta3 - 0.4116.
inline constexpr double kChain1Offset = -2.0736;
inline constexpr double kChain2Offset = -0.4116;
inline constexpr double kSingularGuard = 1e-3;
inline constexpr double kArccosSlack = 1e-9;

//! One cylinder-driven closed chain. O is the boom pivot, A the cylinder base, T the rod-end pin.
struct ChainGeometry {
  double L = 1.0;             // |OA|
  double L1 = 1.0;            // |OT|
  double x0 = 0.5;            // pin-to-pin cylinder length at zero stroke
  double lc = 0.3;            // rod frame to rod-end pin distance
  double angle_offset = 0.0;  // q = angle_offset + zeta_sign * zeta
  double zeta_sign = 1.0;
  double stroke_min = 0.0;
  double stroke_max = 1.0;
};

struct GearRatios {
  double r_p = 0.1;
  Vec3 r_w = Vec3::Constant(0.05);
};

struct JointState {
  Vec3 zeta = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
  Vec6 rates = Vec6::Zero();

  Vec6 theta() const {
    Vec6 t;
    t << zeta, xi;
    return t;
  }
  static JointState from(const Vec6& theta, const Vec6& theta_dot) {
    return {theta.head<3>(), theta.tail<3>(), theta_dot};
  }
};

enum Frame : int {
  // Rigid bodies.
  P1, Pp2, B01, B11, B31, B41, B02, B12, B32, B42, G1, G2, G3,
  // Coupling frames. T<branch><chain>: the rod-end pin seen from the boom (1) or the rod (2).
  Pp1, B21, B22, T11, T21, T12, T22, E1, E2, E3, E4, E,
  kFrameCount
};
inline constexpr int kBodyCount = 13;

const char* frame_name(int frame);

//! Per-frame velocity, required velocity, force and required force.
struct FrameSet {
  std::array<SpatialVelocity, kFrameCount> V{};
  std::array<SpatialVelocity, kFrameCount> Vr{};
  std::array<SpatialForce, kFrameCount> F{};
  std::array<SpatialForce, kFrameCount> Fr{};
};

struct ManipulatorModel {
  ChainGeometry chain[2];
  GearRatios ratios;
  double rack_offset = 0.0;                 // Pp2 position along the rack at zeta1 = 0
  Transform6 ground_to_rack;                // Pp1 in ground
  Transform6 pillar_to_chain1;              // B01 in P1
  Transform6 boom1_to_chain2;               // B02 in T11
  Transform6 boom2_to_wrist;                // E1 in T12
  std::array<Transform6, 3> wrist_link{};   // E_{i+1} in G_i
  Transform6 tool;                          // E in E4
  std::array<int, 3> wrist_axis{0, 1, 0};   // 0 = x, 1 = y, 2 = z
  std::array<InertialParams, kBodyCount> inertia{};
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  Vec6 theta_min = Vec6::Constant(-3.0);
  Vec6 theta_max = Vec6::Constant(3.0);

  void validate() const;
};

//! Chain scalars at one configuration.
struct ChainState {
  double q = 0.0, q1 = 0.0, q2 = 0.0;
  double d = 0.0;  // pin-to-pin length
  double x = 0.0;  // stroke
};

//! Relative rates of every joint of the mechanism.
struct MechanismRates {
  double zeta1 = 0.0;
  double xp = 0.0;
  std::array<double, 2> q{}, x{}, q1{}, q2{};
  Vec3 xi = Vec3::Zero();
};

std::pair<double, double> passive_angles(double zeta2, double zeta3);
double chain_q(double zeta, const ChainGeometry& geom);
double chain_piston_position(double q, const ChainGeometry& geom);
//! Returns (q_j1, q_j2), both in (-pi, 0], with q_j1 + q_j2 = q_j.
std::pair<double, double> chain_angles(double x, const ChainGeometry& geom);

struct ChainRates {
  double xdot = 0.0, q1dot = 0.0, q2dot = 0.0;
};
ChainRates chain_rate_map(double q, double x, double qdot, const ChainGeometry& geom);
//! Rates of the passive angles driven by a stroke rate.
ChainRates chain_rate_from_stroke(double q, double x, double xdot, const ChainGeometry& geom);
//! dx/dq at q.
double chain_stroke_gain(double q, const ChainGeometry& geom);

//! Second-order chain relation: given qdot, qddot returns (xddot, q1ddot, q2ddot).
ChainRates chain_accel_map(const ChainState& s, double qdot, double qddot, const ChainGeometry& geom);

//! Everything that depends on position only.
struct Configuration {
  JointState joints;
  double xp = 0.0;
  std::array<ChainState, 2> chain{};
  // Parent-to-child transform of every frame; parent index in `parent`.
  std::array<Transform6, kFrameCount> U{};
  std::array<int, kFrameCount> parent{};
  // World pose of every frame.
  std::array<Mat3, kFrameCount> R_world{};
  std::array<Vec3, kFrameCount> p_world{};
};

Configuration configure(const ManipulatorModel& model, const JointState& joints);

//! Joint-space rates to mechanism rates.
MechanismRates mechanism_rates(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot);
//! Actuator-space rates [xp, x1, x2, xw1, xw2, xw3] to mechanism rates.
MechanismRates mechanism_rates_from_actuators(const ManipulatorModel& model, const Configuration& cfg,
                                              const Vec6& actuator_rates);
//! Joint rates to actuator rates.
Vec6 actuator_rates(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot);
//! Actuator positions [xp, x1, x2, xw1, xw2, xw3] at a configuration.
Vec6 actuator_positions(const ManipulatorModel& model, const Configuration& cfg);

std::array<SpatialVelocity, kFrameCount> propagate_velocities(const ManipulatorModel& model, const Configuration& cfg,
                                                             const MechanismRates& rates,
                                                             const SpatialVelocity& base_velocity);

void forward_velocities(const ManipulatorModel& model, const Configuration& cfg, const SpatialVelocity& base_velocity,
                        FrameSet& frames);

//! Coordinate derivatives of the body-frame velocities.
std::array<Vec6, kFrameCount> propagate_accelerations(const ManipulatorModel& model, const Configuration& cfg,
                                                      const MechanismRates& rates,
                                                      const std::array<SpatialVelocity, kFrameCount>& V,
                                                      const Vec6& theta_dot, const Vec6& theta_ddot);

//! Piston-force sign on the rod side-force lever of a chain.
enum class LeverSign { Minus, Plus };

struct BackpropResult {
  std::array<SpatialForce, kFrameCount> F{};
  Vec6 f_c = Vec6::Zero();  // [f_cp, f_c1, f_c2, f_cw1, f_cw2, f_cw3]
};

//! Total frame forces and actuator forces from per-body net wrenches and the end-effector wrench.
BackpropResult backpropagate_forces(const ManipulatorModel& model, const Configuration& cfg,
                                    const std::array<Vec6, kBodyCount>& net, const SpatialForce& f_env,
                                    LeverSign sign = LeverSign::Minus);

struct RequiredGains {
  double lambda = 3.0;
  double lambda_x[2] = {3.0, 3.0};
  Vec3 sigma = Vec3::Constant(3.0);
};

struct DesiredJoints {
  Vec6 theta = Vec6::Zero();
  Vec6 theta_dot = Vec6::Zero();
};

//! Required actuator-space rates [xp_r, x1_r, x2_r, xw1_r, xw2_r, xw3_r].
Vec6 required_actuator_rates(const ManipulatorModel& model, const Configuration& cfg, const DesiredJoints& desired,
                             const RequiredGains& gains);

void required_velocities(const ManipulatorModel& model, const Configuration& cfg, const DesiredJoints& desired,
                         const RequiredGains& gains, const SpatialVelocity& base_velocity, FrameSet& frames);

//! Required actuator forces from required net wrenches; same recursion as the actual one.
Vec6 required_forces(const ManipulatorModel& model, const Configuration& cfg,
                     const std::array<Vec6, kBodyCount>& net_required, const SpatialForce& f_env_required,
                     FrameSet* frames = nullptr, LeverSign sign = LeverSign::Minus);

//! Gravity in body coordinates.
Vec3 body_gravity(const ManipulatorModel& model, const Configuration& cfg, int body);

//! Actuator forces needed for the given joint motion (net wrenches from the model inertia).
Vec6 inverse_dynamics(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot,
                      const Vec6& theta_ddot, const SpatialForce& f_env, bool with_gravity = true);

//! f_c = H(theta) theta_ddot + b(theta, theta_dot).
struct JointSpaceDynamics {
  Eigen::Matrix<double, 6, 6> H;
  Vec6 b;
};
JointSpaceDynamics joint_space_dynamics(const ManipulatorModel& model, const Configuration& cfg,
                                        const Vec6& theta_dot, const SpatialForce& f_env);

//! Jacobian of every actuator rate on every body velocity: V_A = sum_k J[A].col(k) xdot_k.
std::array<Eigen::Matrix<double, 6, 6>, kFrameCount> actuator_velocity_jacobians(const ManipulatorModel& model,
                                                                                 const Configuration& cfg);

}  // namespace hhm
