#pragma once

#include <Eigen/Dense>

namespace hhm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

//! Linear velocity of the frame origin and angular velocity, both in frame coordinates.
struct SpatialVelocity {
  Vec6 data = Vec6::Zero();

  SpatialVelocity() = default;
  explicit SpatialVelocity(const Vec6& v) : data(v) {}
  SpatialVelocity(const Vec3& linear, const Vec3& angular) { data << linear, angular; }

  Vec3 linear() const { return data.head<3>(); }
  Vec3 angular() const { return data.tail<3>(); }
};

//! Force and moment about the frame origin, both in frame coordinates.
struct SpatialForce {
  Vec6 data = Vec6::Zero();

  SpatialForce() = default;
  explicit SpatialForce(const Vec6& f) : data(f) {}
  SpatialForce(const Vec3& force, const Vec3& moment) { data << force, moment; }

  Vec3 force() const { return data.head<3>(); }
  Vec3 moment() const { return data.tail<3>(); }
};

Mat3 skew(const Vec3& r);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

//! Nearest rotation in the Frobenius sense (polar factor), sign-corrected to det +1.
Mat3 orthonormalize(const Mat3& R);

//! Rigid displacement ^A U_B: rotation ^A R_B and offset ^A r_AB.
class Transform6 {
 public:
  static constexpr double kOrthonormalTol = 1e-8;

  Transform6() = default;
  //! Throws GeometryError if R is not a proper rotation within kOrthonormalTol.
  Transform6(const Mat3& R, const Vec3& r);

  static Transform6 identity() { return {}; }
  static Transform6 translation(const Vec3& r) { return Transform6(Mat3::Identity(), r, Unchecked{}); }
  static Transform6 rotation(const Mat3& R) { return Transform6(R, Vec3::Zero()); }

  const Mat3& rotation() const { return R_; }
  const Vec3& offset() const { return r_; }

  //! [[R, 0], [skew(r) R, R]]
  Mat6 matrix() const;

  //! Uᵀ v: velocity at A expressed at B.
  SpatialVelocity to_child(const SpatialVelocity& v) const;
  Vec6 to_child(const Vec6& v) const;
  //! U f: force at B expressed at A.
  SpatialForce to_parent(const SpatialForce& f) const;
  Vec6 to_parent(const Vec6& f) const;

  Transform6 operator*(const Transform6& rhs) const;
  Transform6 inverse() const;

  //! Re-project R onto SO(3) when drift exceeds the construction tolerance.
  void reorthonormalize();

 private:
  struct Unchecked {};
  Transform6(const Mat3& R, const Vec3& r, Unchecked) : R_(R), r_(r) {}

  Mat3 R_ = Mat3::Identity();
  Vec3 r_ = Vec3::Zero();
};

Mat6 assemble_transform(const Mat3& R, const Vec3& r);
SpatialVelocity transform_velocity(const Transform6& U, const SpatialVelocity& v);
SpatialForce transform_force(const Transform6& U, const SpatialForce& f);

//! Motion cross product for [v; ω] ordering: crm(V)·u = [ω×u_v + v×u_ω; ω×u_ω].
Vec6 motion_cross(const Vec6& V, const Vec6& u);

// Unit directions of the 6D algebra.
Vec6 unit6(int i);
inline Vec6 x_f() { return unit6(0); }
inline Vec6 y_f() { return unit6(1); }
inline Vec6 z_f() { return unit6(2); }
inline Vec6 x_tau() { return unit6(3); }
inline Vec6 y_tau() { return unit6(4); }
inline Vec6 z_tau() { return unit6(5); }

}  // namespace hhm
