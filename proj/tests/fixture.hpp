#pragma once

// In-code manipulator model for unit tests: nominal chain geometry, random mounts and inertias.

#include "gen.hpp"
#include "hhm/manipulator.hpp"

namespace fixture {

using namespace hhm;

inline ManipulatorModel model(gen::Rng& rng, bool random_mounts = true) {
  ManipulatorModel m;
  m.chain[0] = {0.8, 1.0, 0.6, 0.3, kChain1Offset, -1.0, 0.0, 1.0};
  m.chain[1] = {0.5, 0.6, 0.45, 0.2, kChain2Offset, 1.0, 0.0, 0.7};
  m.ratios.r_p = 0.1;
  m.ratios.r_w = Vec3(0.04, 0.05, 0.03);
  m.rack_offset = 0.2;
  auto mount = [&](const Mat3& R, const Vec3& r) {
    return random_mounts ? Transform6(rng.rotation(), rng.vec3(0.5)) : Transform6(R, r);
  };
  m.ground_to_rack = mount(Mat3::Identity(), Vec3(0.0, 0.3, 0.0));
  m.pillar_to_chain1 = mount(rot_z(2.248), Vec3(0.2, 1.5, 0.0));
  m.boom1_to_chain2 = mount(rot_z(0.7), Vec3(1.2, 0.1, 0.0));
  m.boom2_to_wrist = mount(Mat3::Identity(), Vec3(1.5, 0.0, 0.0));
  for (int i = 0; i < 3; ++i) m.wrist_link[i] = mount(Mat3::Identity(), Vec3(0.15, 0.0, 0.0));
  m.tool = mount(Mat3::Identity(), Vec3(0.1, 0.0, 0.0));
  for (auto& b : m.inertia) b = rng.body();
  m.theta_min << -1.0, -0.8, -1.8, -1.2, -1.2, -1.2;
  m.theta_max << 1.0, 0.3, -0.1, 1.2, 1.2, 1.2;
  return m;
}

inline Vec6 random_theta(gen::Rng& rng, const ManipulatorModel& m) {
  Vec6 t;
  for (int k = 0; k < 6; ++k) t(k) = rng.uniform(m.theta_min(k), m.theta_max(k));
  return t;
}

}  // namespace fixture
