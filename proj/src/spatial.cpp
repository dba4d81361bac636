#include "hhm/spatial.hpp"

#include <cmath>

#include "hhm/errors.hpp"

namespace hhm {

Mat3 skew(const Vec3& r) {
  Mat3 S;
  S << 0.0, -r.z(), r.y(),
       r.z(), 0.0, -r.x(),
       -r.y(), r.x(), 0.0;
  return S;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << 1, 0, 0, 0, c, -s, 0, s, c;
  return R;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, 0, s, 0, 1, 0, -s, 0, c;
  return R;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 R;
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return R;
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

Transform6::Transform6(const Mat3& R, const Vec3& r) : R_(R), r_(r) {
  const double drift = (R * R.transpose() - Mat3::Identity()).norm();
  if (!(drift <= kOrthonormalTol) || R.determinant() <= 0.0)
    throw GeometryError("rotation is not orthonormal (drift " + std::to_string(drift) + ")");
}

Mat6 Transform6::matrix() const { return assemble_transform(R_, r_); }

Vec6 Transform6::to_child(const Vec6& v) const {
  const Vec3 lin = v.head<3>();
  const Vec3 ang = v.tail<3>();
  Vec6 out;
  out.head<3>() = R_.transpose() * (lin + ang.cross(r_));
  out.tail<3>() = R_.transpose() * ang;
  return out;
}

SpatialVelocity Transform6::to_child(const SpatialVelocity& v) const { return SpatialVelocity(to_child(v.data)); }

Vec6 Transform6::to_parent(const Vec6& f) const {
  const Vec3 force = R_ * f.head<3>();
  Vec6 out;
  out.head<3>() = force;
  out.tail<3>() = r_.cross(force) + R_ * f.tail<3>();
  return out;
}

SpatialForce Transform6::to_parent(const SpatialForce& f) const { return SpatialForce(to_parent(f.data)); }

Transform6 Transform6::operator*(const Transform6& rhs) const {
  return Transform6(R_ * rhs.R_, r_ + R_ * rhs.r_, Unchecked{});
}

Transform6 Transform6::inverse() const {
  return Transform6(R_.transpose(), -(R_.transpose() * r_), Unchecked{});
}

void Transform6::reorthonormalize() {
  if ((R_ * R_.transpose() - Mat3::Identity()).norm() > kOrthonormalTol) R_ = orthonormalize(R_);
}

Mat6 assemble_transform(const Mat3& R, const Vec3& r) {
  if (!((R * R.transpose() - Mat3::Identity()).norm() <= Transform6::kOrthonormalTol) || R.determinant() <= 0.0)
    throw GeometryError("assemble_transform: rotation is not orthonormal");
  Mat6 U = Mat6::Zero();
  U.topLeftCorner<3, 3>() = R;
  U.bottomLeftCorner<3, 3>() = skew(r) * R;
  U.bottomRightCorner<3, 3>() = R;
  return U;
}

SpatialVelocity transform_velocity(const Transform6& U, const SpatialVelocity& v) { return U.to_child(v); }

SpatialForce transform_force(const Transform6& U, const SpatialForce& f) { return U.to_parent(f); }

Vec6 motion_cross(const Vec6& V, const Vec6& u) {
  const Vec3 v = V.head<3>();
  const Vec3 w = V.tail<3>();
  Vec6 out;
  out.head<3>() = w.cross(u.head<3>()) + v.cross(u.tail<3>());
  out.tail<3>() = w.cross(u.tail<3>());
  return out;
}

Vec6 unit6(int i) {
  Vec6 e = Vec6::Zero();
  e(i) = 1.0;
  return e;
}

}  // namespace hhm
