#pragma once

#include "hhm/spatial.hpp"

namespace hhm {

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat4 = Eigen::Matrix4d;
using Regressor = Eigen::Matrix<double, 6, 10>;

//! Inertial parameters about the body frame origin.
//! Vector layout: [m, h_x, h_y, h_z, Ixx, Iyy, Izz, Ixy, Iyz, Ixz].
//! Products of inertia are stored as the matrix entries, i.e. I = [[Ixx,Ixy,Ixz],[Ixy,Iyy,Iyz],[Ixz,Iyz,Izz]].
struct InertialParams {
  double mass = 0.0;
  Vec3 first_moment = Vec3::Zero();
  Vec6 inertia6 = Vec6::Zero();

  static InertialParams from_vector(const Vec10& phi);
  Vec10 to_vector() const;
  Mat3 inertia_matrix() const;

  //! Solid cuboid of side lengths `size` with its centroid at `com`.
  static InertialParams cuboid(double mass, const Vec3& size, const Vec3& com);
};

struct PseudoInertia {
  Mat4 matrix = Mat4::Zero();
};

Mat6 mass_matrix(const InertialParams& phi);
Mat6 coriolis_matrix(const InertialParams& phi, const Vec3& omega);
Vec6 gravity_vector(const InertialParams& phi, const Vec3& gravity);

//! M·dv + C(ω)·v + G, with `gravity` the gravitational acceleration in body coordinates.
SpatialForce net_wrench(const InertialParams& phi, const SpatialVelocity& v, const Vec6& dv, const Vec3& gravity);

//! Y such that Y·φ equals net_wrench for every φ.
Regressor regressor(const SpatialVelocity& v, const Vec6& dv, const Vec3& gravity);
//! Y such that Y·φ = M·dv_ref + C(ω)·v_ref + G: Coriolis matrix from the actual ω, applied to a reference velocity.
Regressor regressor(const Vec3& omega, const SpatialVelocity& v_ref, const Vec6& dv_ref, const Vec3& gravity);

//! Linear map of the inertial vector to its 4×4 pseudo-inertia, without a definiteness check.
Mat4 pseudo_inertia_matrix(const Vec10& phi);
//! Inverse of pseudo_inertia_matrix on symmetric matrices.
Vec10 inertial_vector(const Mat4& L);

//! Throws PhysicalConsistencyError when the image is not positive definite.
PseudoInertia phi_to_L(const InertialParams& phi);
//! Throws PhysicalConsistencyError when L is not symmetric positive definite.
InertialParams L_to_phi(const PseudoInertia& L);

//! Log-det Bregman divergence D(L ‖ L̂) = log(|L̂|/|L|) + tr(L̂⁻¹L) − 4.
double bregman_divergence(const PseudoInertia& L, const PseudoInertia& L_hat);

//! Symmetric S with tr(pseudo_inertia_matrix(φ)·S) = φᵀs for all φ.
Mat4 adaptation_matrix(const Vec10& s);

constexpr double kSpdFloor = 1e-9;

//! Symmetrize and floor the eigenvalues at kSpdFloor.
Mat4 spd_repair(const Mat4& L);

//! One explicit Euler step of L̇ = (1/γ)·L(S − γ₀L)L followed by spd_repair.
PseudoInertia natural_adaptation_step(const PseudoInertia& L_hat, const Mat4& S, double gamma, double gamma0,
                                      double dt);

}  // namespace hhm
