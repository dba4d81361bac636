#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hhm/manipulator.hpp"

namespace hhm {

//! Rest-to-rest fifth-order blend from p0 to pf over tf.
struct QuinticSegment {
  Eigen::VectorXd p0, pf;
  double tf = 1.0;
};

struct QuinticSample {
  Eigen::VectorXd p, pdot, pddot;
};

//! t is clamped to [0, tf].
QuinticSample quintic_eval(const QuinticSegment& seg, double t);

using Jacobian6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kDlsDamping = 1e-6;
inline constexpr double kJacobianSigmaFloor = 1e-9;

//! (JᵀJ + mu² I)⁻¹ Jᵀ pose_rate; throws SingularityError when the smallest singular value is below the floor.
Vec6 joint_rates_from_cartesian(const Jacobian6& J, const Vec6& pose_rate, double mu = kDlsDamping);

//! End-effector pose in the ground frame.
struct Pose {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();
};

Pose end_effector_pose(const ManipulatorModel& model, const Configuration& cfg);
//! Maps joint rates to [linear velocity; angular velocity] of the end effector, both in ground coordinates.
Jacobian6 jacobian(const ManipulatorModel& model, const Configuration& cfg);

//! Rotation vector w with exp([w]) = R.
Vec3 rotation_log(const Mat3& R);
Mat3 rotation_exp(const Vec3& w);
//! Ground-frame orientation error taking R to R_d.
Vec3 orientation_error(const Mat3& R_d, const Mat3& R);
Mat3 euler_xyz(const Vec3& angles);

//! Desired joint motion at one instant.
struct JointReference {
  Vec6 theta = Vec6::Zero();
  Vec6 theta_dot = Vec6::Zero();
};

//! Quintic moves between joint-space set points, each followed by a hold.
struct JointWaypoint {
  Vec6 theta = Vec6::Zero();
  double move = 1.0;  // s
  double hold = 0.0;  // s
};

class JointPlan {
 public:
  JointPlan(const Vec6& start, std::vector<JointWaypoint> waypoints);
  JointReference at(double t) const;
  double duration() const;

 private:
  Vec6 start_;
  std::vector<JointWaypoint> wp_;
};

struct CartesianWaypoint {
  Vec3 position = Vec3::Zero();
  Vec3 euler_xyz = Vec3::Zero();  // rad
  double move = 1.0;
  double hold = 0.0;
};

struct PoseSample {
  Pose pose;
  Vec6 rate = Vec6::Zero();  // [pdot; omega] in ground coordinates
};

//! Pose interpolation: quintic on position and on the rotation-vector parameter between set points.
class CartesianPlan {
 public:
  CartesianPlan(const Pose& start, std::vector<CartesianWaypoint> waypoints);
  PoseSample at(double t) const;
  double duration() const;

 private:
  std::vector<Pose> poses_;
  std::vector<double> move_, hold_;
};

//! Closed-loop inverse kinematics: integrates the desired joints along a Cartesian plan.
class CartesianTracker {
 public:
  CartesianTracker(const ManipulatorModel& model, const Vec6& theta0, CartesianPlan plan, double k_pose = 20.0);
  //! Desired joints at the current time; then advances the internal state by one Euler step of dt.
  JointReference step(double dt);
  const PoseSample& last_sample() const { return sample_; }
  double time() const { return t_; }

 private:
  const ManipulatorModel* model_;
  CartesianPlan plan_;
  Vec6 theta_;
  double k_;
  double t_ = 0.0;
  PoseSample sample_;
};

}  // namespace hhm
