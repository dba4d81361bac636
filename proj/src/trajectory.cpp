#include "hhm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hhm/errors.hpp"

namespace hhm {

QuinticSample quintic_eval(const QuinticSegment& seg, double t) {
  if (!(seg.tf > 0.0)) throw std::invalid_argument("quintic: duration must be positive");
  const double tau = std::clamp(t / seg.tf, 0.0, 1.0);
  const double t2 = tau * tau, t3 = t2 * tau;
  const double s = t3 * (10.0 - 15.0 * tau + 6.0 * t2);
  const double ds = 30.0 * t2 * (1.0 - tau) * (1.0 - tau) / seg.tf;
  const double dds = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau) / (seg.tf * seg.tf);
  const Eigen::VectorXd d = seg.pf - seg.p0;
  return {seg.p0 + s * d, ds * d, dds * d};
}

Vec6 joint_rates_from_cartesian(const Jacobian6& J, const Vec6& pose_rate, double mu) {
  Eigen::JacobiSVD<Jacobian6> svd(J);
  if (!(svd.singularValues()(5) >= kJacobianSigmaFloor)) throw SingularityError("jacobian is singular");
  const Jacobian6 A = J.transpose() * J + mu * mu * Jacobian6::Identity();
  return A.ldlt().solve(J.transpose() * pose_rate);
}

Pose end_effector_pose(const ManipulatorModel&, const Configuration& cfg) { return {cfg.p_world[E], cfg.R_world[E]}; }

Jacobian6 jacobian(const ManipulatorModel& model, const Configuration& cfg) {
  Jacobian6 J;
  const Mat3& R = cfg.R_world[E];
  for (int k = 0; k < 6; ++k) {
    const MechanismRates r = mechanism_rates(model, cfg, Vec6::Unit(k));
    const auto V = propagate_velocities(model, cfg, r, SpatialVelocity());
    J.col(k) << R * V[E].linear(), R * V[E].angular();
  }
  return J;
}

Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 rotation_exp(const Vec3& w) {
  const double a = w.norm();
  if (a == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

Vec3 orientation_error(const Mat3& R_d, const Mat3& R) { return rotation_log(R_d * R.transpose()); }

Mat3 euler_xyz(const Vec3& a) { return rot_x(a(0)) * rot_y(a(1)) * rot_z(a(2)); }

JointPlan::JointPlan(const Vec6& start, std::vector<JointWaypoint> waypoints) : start_(start), wp_(std::move(waypoints)) {
  for (const auto& w : wp_)
    if (!(w.move > 0.0) || w.hold < 0.0) throw std::invalid_argument("joint plan: bad segment timing");
}

double JointPlan::duration() const {
  double d = 0.0;
  for (const auto& w : wp_) d += w.move + w.hold;
  return d;
}

JointReference JointPlan::at(double t) const {
  Vec6 from = start_;
  double t0 = 0.0;
  for (const auto& w : wp_) {
    if (t < t0 + w.move) {
      const QuinticSample q = quintic_eval({from, w.theta, w.move}, t - t0);
      return {q.p, q.pdot};
    }
    t0 += w.move;
    if (t < t0 + w.hold) return {w.theta, Vec6::Zero()};
    t0 += w.hold;
    from = w.theta;
  }
  return {from, Vec6::Zero()};
}

CartesianPlan::CartesianPlan(const Pose& start, std::vector<CartesianWaypoint> waypoints) {
  poses_.push_back(start);
  for (const auto& w : waypoints) {
    if (!(w.move > 0.0) || w.hold < 0.0) throw std::invalid_argument("cartesian plan: bad segment timing");
    poses_.push_back({w.position, euler_xyz(w.euler_xyz)});
    move_.push_back(w.move);
    hold_.push_back(w.hold);
  }
}

double CartesianPlan::duration() const {
  double d = 0.0;
  for (std::size_t i = 0; i < move_.size(); ++i) d += move_[i] + hold_[i];
  return d;
}

PoseSample CartesianPlan::at(double t) const {
  double t0 = 0.0;
  for (std::size_t i = 0; i < move_.size(); ++i) {
    const Pose& a = poses_[i];
    const Pose& b = poses_[i + 1];
    if (t < t0 + move_[i]) {
      // Scalar blend shared by position and rotation.
      Eigen::VectorXd zero(1), one(1);
      zero << 0.0;
      one << 1.0;
      const QuinticSample q = quintic_eval({zero, one, move_[i]}, t - t0);
      const double s = q.p(0), ds = q.pdot(0);
      const Vec3 w = rotation_log(a.R.transpose() * b.R);
      PoseSample out;
      out.pose.p = a.p + s * (b.p - a.p);
      out.pose.R = a.R * rotation_exp(s * w);
      out.rate << ds * (b.p - a.p), ds * (a.R * w);
      return out;
    }
    t0 += move_[i] + hold_[i];
    if (t < t0) return {b, Vec6::Zero()};
  }
  return {poses_.back(), Vec6::Zero()};
}

CartesianTracker::CartesianTracker(const ManipulatorModel& model, const Vec6& theta0, CartesianPlan plan, double k_pose)
    : model_(&model), plan_(std::move(plan)), theta_(theta0), k_(k_pose) {
  sample_ = plan_.at(0.0);
}

JointReference CartesianTracker::step(double dt) {
  const Configuration cfg = configure(*model_, JointState::from(theta_, Vec6::Zero()));
  const Pose pose = end_effector_pose(*model_, cfg);
  sample_ = plan_.at(t_);
  Vec6 cmd;
  cmd << sample_.rate.head<3>() + k_ * (sample_.pose.p - pose.p),
      sample_.rate.tail<3>() + k_ * orientation_error(sample_.pose.R, pose.R);
  const JointReference ref{theta_, joint_rates_from_cartesian(jacobian(*model_, cfg), cmd)};
  theta_ += dt * ref.theta_dot;
  t_ += dt;
  return ref;
}

}  // namespace hhm
