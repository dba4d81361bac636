#pragma once

// Hand-rolled generators for property tests.

#include <random>

#include "hhm/rigid_body.hpp"
#include "hhm/spatial.hpp"

namespace gen {

using hhm::Mat3;
using hhm::Vec3;
using hhm::Vec6;

struct Rng {
  explicit Rng(unsigned long long seed = 12345) : eng(seed) {}
  std::mt19937_64 eng;

  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }

  Vec3 vec3(double scale = 1.0) { return Vec3(uniform(), uniform(), uniform()) * scale; }
  Vec6 vec6(double scale = 1.0) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = uniform() * scale;
    return v;
  }

  // Uniform rotation from a normalized Gaussian quaternion.
  Mat3 rotation() {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(eng), n(eng), n(eng), n(eng));
    q.normalize();
    return q.toRotationMatrix();
  }

  // Rotated cuboid with offset centroid: always physically consistent.
  hhm::InertialParams body() {
    const double m = uniform(0.5, 5.0);
    const Vec3 size(uniform(0.1, 1.0), uniform(0.1, 1.0), uniform(0.1, 1.0));
    const Vec3 com = vec3(0.5);
    const Mat3 R = rotation();
    Mat3 Ic = Mat3::Zero();
    Ic(0, 0) = m * (size.y() * size.y() + size.z() * size.z()) / 12.0;
    Ic(1, 1) = m * (size.x() * size.x() + size.z() * size.z()) / 12.0;
    Ic(2, 2) = m * (size.x() * size.x() + size.y() * size.y()) / 12.0;
    Ic = R * Ic * R.transpose();
    const Mat3 Io = Ic + m * (com.squaredNorm() * Mat3::Identity() - com * com.transpose());
    hhm::InertialParams p;
    p.mass = m;
    p.first_moment = m * com;
    p.inertia6 << Io(0, 0), Io(1, 1), Io(2, 2), Io(0, 1), Io(1, 2), Io(0, 2);
    return p;
  }

  hhm::Mat4 spd4() {
    Eigen::Matrix4d A;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = uniform();
    return A * A.transpose() + 0.1 * Eigen::Matrix4d::Identity();
  }
};

}  // namespace gen
