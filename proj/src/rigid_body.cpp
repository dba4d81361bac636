#include "hhm/rigid_body.hpp"

#include <cmath>

#include "hhm/errors.hpp"

namespace hhm {

InertialParams InertialParams::from_vector(const Vec10& phi) {
  InertialParams p;
  p.mass = phi(0);
  p.first_moment = phi.segment<3>(1);
  p.inertia6 = phi.segment<6>(4);
  return p;
}

Vec10 InertialParams::to_vector() const {
  Vec10 phi;
  phi << mass, first_moment, inertia6;
  return phi;
}

Mat3 InertialParams::inertia_matrix() const {
  const Vec6& I = inertia6;
  Mat3 M;
  M << I(0), I(3), I(5),
       I(3), I(1), I(4),
       I(5), I(4), I(2);
  return M;
}

InertialParams InertialParams::cuboid(double mass, const Vec3& size, const Vec3& com) {
  const double a2 = size.x() * size.x(), b2 = size.y() * size.y(), c2 = size.z() * size.z();
  Mat3 Ic = Mat3::Zero();
  Ic(0, 0) = mass * (b2 + c2) / 12.0;
  Ic(1, 1) = mass * (a2 + c2) / 12.0;
  Ic(2, 2) = mass * (a2 + b2) / 12.0;
  // Parallel-axis shift to the frame origin.
  const Mat3 Io = Ic + mass * (com.squaredNorm() * Mat3::Identity() - com * com.transpose());
  InertialParams p;
  p.mass = mass;
  p.first_moment = mass * com;
  p.inertia6 << Io(0, 0), Io(1, 1), Io(2, 2), Io(0, 1), Io(1, 2), Io(0, 2);
  return p;
}

Mat6 mass_matrix(const InertialParams& phi) {
  Mat6 M = Mat6::Zero();
  const Mat3 H = skew(phi.first_moment);
  M.topLeftCorner<3, 3>() = phi.mass * Mat3::Identity();
  M.topRightCorner<3, 3>() = -H;
  M.bottomLeftCorner<3, 3>() = H;
  M.bottomRightCorner<3, 3>() = phi.inertia_matrix();
  return M;
}

Mat6 coriolis_matrix(const InertialParams& phi, const Vec3& omega) {
  Mat6 C = Mat6::Zero();
  const Mat3 W = skew(omega);
  const Mat3 H = skew(phi.first_moment);
  const Mat3 I = phi.inertia_matrix();
  C.topLeftCorner<3, 3>() = phi.mass * W;
  C.topRightCorner<3, 3>() = -W * H;
  C.bottomLeftCorner<3, 3>() = H * W;
  C.bottomRightCorner<3, 3>() = W * I + I * W;
  return C;
}

Vec6 gravity_vector(const InertialParams& phi, const Vec3& gravity) {
  Vec6 G;
  G.head<3>() = -phi.mass * gravity;
  G.tail<3>() = -phi.first_moment.cross(gravity);
  return G;
}

SpatialForce net_wrench(const InertialParams& phi, const SpatialVelocity& v, const Vec6& dv, const Vec3& gravity) {
  return SpatialForce(mass_matrix(phi) * dv + coriolis_matrix(phi, v.angular()) * v.data +
                      gravity_vector(phi, gravity));
}

namespace {

// I·w = inertia_columns(w)·inertia6
Eigen::Matrix<double, 3, 6> inertia_columns(const Vec3& w) {
  Eigen::Matrix<double, 3, 6> L;
  L << w.x(), 0.0, 0.0, w.y(), 0.0, w.z(),
       0.0, w.y(), 0.0, w.x(), w.z(), 0.0,
       0.0, 0.0, w.z(), 0.0, w.y(), w.x();
  return L;
}

}  // namespace

Regressor regressor(const SpatialVelocity& v, const Vec6& dv, const Vec3& gravity) {
  const Vec3 w = v.angular();
  const Vec3 dw = dv.tail<3>();
  const Vec3 a = dv.head<3>() + w.cross(v.linear()) - gravity;
  const Mat3 W = skew(w);

  Regressor Y = Regressor::Zero();
  Y.block<3, 1>(0, 0) = a;
  Y.block<3, 3>(0, 1) = skew(dw) + W * W;
  Y.block<3, 3>(3, 1) = -skew(a);
  Y.block<3, 6>(3, 4) = inertia_columns(dw) + W * inertia_columns(w);
  return Y;
}

Regressor regressor(const Vec3& omega, const SpatialVelocity& v_ref, const Vec6& dv_ref, const Vec3& gravity) {
  const Vec3 w = v_ref.angular();
  const Vec3 dw = dv_ref.tail<3>();
  const Vec3 a = dv_ref.head<3>() + omega.cross(v_ref.linear()) - gravity;
  const Mat3 W = skew(omega);

  Regressor Y = Regressor::Zero();
  Y.block<3, 1>(0, 0) = a;
  Y.block<3, 3>(0, 1) = skew(dw) + W * skew(w);
  Y.block<3, 3>(3, 1) = -skew(a);
  Y.block<3, 6>(3, 4) = inertia_columns(dw + omega.cross(w)) + W * inertia_columns(w);
  return Y;
}

Mat4 pseudo_inertia_matrix(const Vec10& phi) {
  const InertialParams p = InertialParams::from_vector(phi);
  const Mat3 I = p.inertia_matrix();
  Mat4 L = Mat4::Zero();
  L.topLeftCorner<3, 3>() = 0.5 * I.trace() * Mat3::Identity() - I;
  L.topRightCorner<3, 1>() = p.first_moment;
  L.bottomLeftCorner<1, 3>() = p.first_moment.transpose();
  L(3, 3) = p.mass;
  return L;
}

Vec10 inertial_vector(const Mat4& L) {
  const Mat3 Sigma = 0.5 * (L.topLeftCorner<3, 3>() + L.topLeftCorner<3, 3>().transpose());
  const Mat3 I = Sigma.trace() * Mat3::Identity() - Sigma;
  const Vec3 h = 0.5 * (L.topRightCorner<3, 1>() + L.bottomLeftCorner<1, 3>().transpose());
  Vec10 phi;
  phi << L(3, 3), h, I(0, 0), I(1, 1), I(2, 2), I(0, 1), I(1, 2), I(0, 2);
  return phi;
}

namespace {

bool is_spd(const Mat4& L) {
  if ((L - L.transpose()).norm() > 1e-12 * std::max(1.0, L.norm())) return false;
  Eigen::LLT<Mat4> llt(L);
  return llt.info() == Eigen::Success;
}

}  // namespace

PseudoInertia phi_to_L(const InertialParams& phi) {
  PseudoInertia L{pseudo_inertia_matrix(phi.to_vector())};
  if (!is_spd(L.matrix)) throw PhysicalConsistencyError("inertial parameters are not physically consistent");
  return L;
}

InertialParams L_to_phi(const PseudoInertia& L) {
  if (!is_spd(L.matrix)) throw PhysicalConsistencyError("pseudo-inertia is not symmetric positive definite");
  return InertialParams::from_vector(inertial_vector(L.matrix));
}

double bregman_divergence(const PseudoInertia& L, const PseudoInertia& L_hat) {
  Eigen::LLT<Mat4> llt_hat(L_hat.matrix);
  Eigen::LLT<Mat4> llt(L.matrix);
  if (llt_hat.info() != Eigen::Success) throw PhysicalConsistencyError("bregman_divergence: estimate is not SPD");
  if (llt.info() != Eigen::Success) throw PhysicalConsistencyError("bregman_divergence: argument is not SPD");
  const Mat4 Lh_inv_L = llt_hat.solve(L.matrix);
  double logdet_hat = 0.0, logdet = 0.0;
  for (int i = 0; i < 4; ++i) {
    logdet_hat += 2.0 * std::log(llt_hat.matrixL()(i, i));
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return logdet_hat - logdet + Lh_inv_L.trace() - 4.0;
}

Mat4 adaptation_matrix(const Vec10& s) {
  const double sxx = s(4), syy = s(5), szz = s(6), sxy = s(7), syz = s(8), sxz = s(9);
  Mat4 S;
  S << syy + szz, -0.5 * sxy, -0.5 * sxz, 0.5 * s(1),
       -0.5 * sxy, sxx + szz, -0.5 * syz, 0.5 * s(2),
       -0.5 * sxz, -0.5 * syz, sxx + syy, 0.5 * s(3),
       0.5 * s(1), 0.5 * s(2), 0.5 * s(3), s(0);
  return S;
}

Mat4 spd_repair(const Mat4& L) {
  const Mat4 sym = 0.5 * (L + L.transpose());
  Eigen::SelfAdjointEigenSolver<Mat4> eig(sym);
  if (eig.eigenvalues().minCoeff() >= kSpdFloor) return sym;
  const Eigen::Vector4d lam = eig.eigenvalues().cwiseMax(kSpdFloor);
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

PseudoInertia natural_adaptation_step(const PseudoInertia& L_hat, const Mat4& S, double gamma, double gamma0,
                                      double dt) {
  const Mat4& L = L_hat.matrix;
  const Mat4 rate = (L * (S - gamma0 * L) * L) / gamma;
  return PseudoInertia{spd_repair(L + dt * rate)};
}

}  // namespace hhm
