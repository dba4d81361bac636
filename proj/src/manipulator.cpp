#include "hhm/manipulator.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <string>

#include "hhm/errors.hpp"

namespace hhm {

namespace {

constexpr int kGround = -1;

// Frames in parent-before-child order.
constexpr std::array<int, kFrameCount> kOrder = {P1,  Pp1, Pp2, B01, B11, T11, B21, B31, B41, T21, B02, B12,
                                                 T12, B22, B32, B42, T22, E1,  G1,  E2,  G2,  E3,  G3,  E4, E};

struct ChainFrames {
  int b0, b1, t1, b2, b3, b4, t2;
};
constexpr ChainFrames kChain[2] = {{B01, B11, T11, B21, B31, B41, T21}, {B02, B12, T12, B22, B32, B42, T22}};
constexpr int kWristBody[3] = {G1, G2, G3};
constexpr int kWristIn[3] = {E1, E2, E3};
constexpr int kWristOut[3] = {E2, E3, E4};

Mat3 axis_rotation(int axis, double angle) {
  switch (axis) {
    case 0: return rot_x(angle);
    case 1: return rot_y(angle);
    default: return rot_z(angle);
  }
}

Transform6 unchecked_rotation(const Mat3& R, const Vec3& r) { return Transform6::translation(r) * Transform6(R, Vec3::Zero()); }

// Joint axis (index into the 6D unit basis, -1 for rigid) and its rate.
struct JointMotion {
  int axis = -1;
  double rate = 0.0;
};

JointMotion joint_motion(const ManipulatorModel& model, int frame, const MechanismRates& r) {
  switch (frame) {
    case P1: return {4, r.zeta1};
    case Pp2: return {0, r.xp};
    case B11: return {5, r.q[0]};
    case B12: return {5, r.q[1]};
    case B31: return {5, r.q1[0]};
    case B32: return {5, r.q1[1]};
    case B41: return {0, r.x[0]};
    case B42: return {0, r.x[1]};
    case T21: return {5, r.q2[0]};
    case T22: return {5, r.q2[1]};
    case G1: return {3 + model.wrist_axis[0], r.xi(0)};
    case G2: return {3 + model.wrist_axis[1], r.xi(1)};
    case G3: return {3 + model.wrist_axis[2], r.xi(2)};
    default: return {};
  }
}

void check_chain(const ChainState& s, int j) {
  const std::string tag = "chain " + std::to_string(j + 1);
  if (std::abs(std::sin(s.q)) < kSingularGuard || std::abs(std::sin(s.q1)) < kSingularGuard ||
      std::abs(std::sin(s.q2)) < kSingularGuard || std::abs(std::tan(s.q2)) < kSingularGuard)
    throw SingularityError(tag + ": configuration inside the singular guard band");
}

// dq_a/dd = g(a, d, len) for the passive angle opposite to the side `len`.
double passive_gain(double a, double d, double len) { return -(d - len * std::cos(a)) / (d * len * std::sin(a)); }
double passive_gain_da(double a, double d, double len) {
  const double s = std::sin(a);
  return -(len - d * std::cos(a)) / (d * len * s * s);
}
double passive_gain_dd(double a, double d) { return -std::cos(a) / (d * d * std::sin(a)); }

}  // namespace

const char* frame_name(int frame) {
  static const char* names[kFrameCount] = {"P1",  "Pp2", "B01", "B11", "B31", "B41", "B02", "B12", "B32",
                                           "B42", "G1",  "G2",  "G3",  "Pp1", "B21", "B22", "T11", "T21",
                                           "T12", "T22", "E1",  "E2",  "E3",  "E4",  "E"};
  return (frame >= 0 && frame < kFrameCount) ? names[frame] : "?";
}

void ManipulatorModel::validate() const {
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& c = chain[j];
    if (!(c.L > 0 && c.L1 > 0 && c.x0 > 0 && c.lc > 0))
      throw ConfigError("chain " + std::to_string(j + 1) + ": lengths must be positive");
    if (!(c.stroke_max > c.stroke_min)) throw ConfigError("chain " + std::to_string(j + 1) + ": empty stroke range");
    if (c.zeta_sign != 1.0 && c.zeta_sign != -1.0) throw ConfigError("chain zeta_sign must be +1 or -1");
  }
  if (!(ratios.r_p > 0) || !(ratios.r_w.minCoeff() > 0)) throw ConfigError("gear ratios must be positive");
  for (int a : wrist_axis)
    if (a < 0 || a > 2) throw ConfigError("wrist axis must be 0, 1 or 2");
  for (int b = 0; b < kBodyCount; ++b) {
    try {
      phi_to_L(inertia[b]);
    } catch (const PhysicalConsistencyError& e) {
      throw ConfigError(std::string("body ") + frame_name(b) + ": " + e.what());
    }
  }
  if ((theta_max - theta_min).minCoeff() <= 0) throw ConfigError("joint limits: max must exceed min");
}

std::pair<double, double> passive_angles(double zeta2, double zeta3) {
  return {kChain1Offset - zeta2, zeta3 + kChain2Offset};
}

double chain_q(double zeta, const ChainGeometry& geom) { return geom.angle_offset + geom.zeta_sign * zeta; }

double chain_piston_position(double q, const ChainGeometry& g) {
  if (!(g.L > 0.0 && g.L1 > 0.0)) throw GeometryError("chain link lengths must be positive");
  const double disc = g.L * g.L + g.L1 * g.L1 + 2.0 * g.L * g.L1 * std::cos(q);
  if (!(disc >= 0.0)) throw GeometryError("chain triangle is degenerate");
  return std::sqrt(disc) - g.x0;
}

std::pair<double, double> chain_angles(double x, const ChainGeometry& g) {
  const double d = x + g.x0;
  if (!(d > 0.0)) throw GeometryError("chain length must be positive");
  auto safe_acos = [](double c) {
    if (c > 1.0 + kArccosSlack || c < -1.0 - kArccosSlack) throw GeometryError("chain triangle cannot close");
    return std::acos(std::clamp(c, -1.0, 1.0));
  };
  const double c1 = (d * d + g.L * g.L - g.L1 * g.L1) / (2.0 * d * g.L);
  const double c2 = (d * d + g.L1 * g.L1 - g.L * g.L) / (2.0 * d * g.L1);
  return {-safe_acos(c1), -safe_acos(c2)};
}

double chain_stroke_gain(double q, const ChainGeometry& g) {
  const double d = chain_piston_position(q, g) + g.x0;
  return -g.L * g.L1 * std::sin(q) / d;
}

ChainRates chain_rate_map(double q, double x, double qdot, const ChainGeometry& g) {
  const double d = x + g.x0;
  return chain_rate_from_stroke(q, x, -g.L * g.L1 * std::sin(q) / d * qdot, g);
}

ChainRates chain_rate_from_stroke(double q, double x, double xdot, const ChainGeometry& g) {
  const double d = x + g.x0;
  const auto [q1, q2] = chain_angles(x, g);
  check_chain({q, q1, q2, d, x}, 0);
  ChainRates r;
  r.xdot = xdot;
  r.q1dot = passive_gain(q1, d, g.L) * xdot;
  r.q2dot = passive_gain(q2, d, g.L1) * xdot;
  return r;
}

ChainRates chain_accel_map(const ChainState& s, double qdot, double qddot, const ChainGeometry& g) {
  const double k = -g.L * g.L1 * std::sin(s.q) / s.d;
  const double dk = -g.L * g.L1 * (std::cos(s.q) * s.d - std::sin(s.q) * k) / (s.d * s.d);
  const double ddot = k * qdot;
  const double dddot = k * qddot + dk * qdot * qdot;
  const double g1 = passive_gain(s.q1, s.d, g.L), g2 = passive_gain(s.q2, s.d, g.L1);
  const double q1dot = g1 * ddot, q2dot = g2 * ddot;
  ChainRates a;
  a.xdot = dddot;
  a.q1dot = g1 * dddot + (passive_gain_da(s.q1, s.d, g.L) * q1dot + passive_gain_dd(s.q1, s.d) * ddot) * ddot;
  a.q2dot = g2 * dddot + (passive_gain_da(s.q2, s.d, g.L1) * q2dot + passive_gain_dd(s.q2, s.d) * ddot) * ddot;
  return a;
}

Configuration configure(const ManipulatorModel& model, const JointState& joints) {
  Configuration cfg;
  cfg.joints = joints;
  cfg.xp = model.ratios.r_p * joints.zeta(0);
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& g = model.chain[j];
    ChainState& s = cfg.chain[j];
    s.q = chain_q(joints.zeta(1 + j), g);
    if (!(s.q > -M_PI && s.q < 0.0)) throw GeometryError("chain " + std::to_string(j + 1) + ": q outside (-pi, 0)");
    s.x = chain_piston_position(s.q, g);
    s.d = s.x + g.x0;
    std::tie(s.q1, s.q2) = chain_angles(s.x, g);
    check_chain(s, j);
  }

  auto& U = cfg.U;
  auto& parent = cfg.parent;
  parent.fill(kGround);
  auto set = [&](int f, int p, const Transform6& u) {
    parent[f] = p;
    U[f] = u;
  };
  set(P1, kGround, Transform6(rot_y(joints.zeta(0)), Vec3::Zero()));
  set(Pp1, kGround, model.ground_to_rack);
  set(Pp2, Pp1, Transform6::translation(Vec3(model.rack_offset + cfg.xp, 0.0, 0.0)));
  set(B01, P1, model.pillar_to_chain1);
  for (int j = 0; j < 2; ++j) {
    const ChainFrames& c = kChain[j];
    const ChainGeometry& g = model.chain[j];
    const ChainState& s = cfg.chain[j];
    set(c.b1, c.b0, Transform6(rot_z(s.q), Vec3::Zero()));
    set(c.t1, c.b1, Transform6::translation(Vec3(g.L1, 0.0, 0.0)));
    set(c.b2, c.b0, Transform6::translation(Vec3(-g.L, 0.0, 0.0)));
    set(c.b3, c.b2, Transform6(rot_z(s.q1), Vec3::Zero()));
    set(c.b4, c.b3, Transform6::translation(Vec3(s.d - g.lc, 0.0, 0.0)));
    set(c.t2, c.b4, unchecked_rotation(rot_z(s.q2), Vec3(g.lc, 0.0, 0.0)));
  }
  set(B02, T11, model.boom1_to_chain2);
  set(E1, T12, model.boom2_to_wrist);
  for (int i = 0; i < 3; ++i) {
    set(kWristBody[i], kWristIn[i], Transform6(axis_rotation(model.wrist_axis[i], joints.xi(i)), Vec3::Zero()));
    set(kWristOut[i], kWristBody[i], model.wrist_link[i]);
  }
  set(E, E4, model.tool);

  for (int f : kOrder) {
    const int p = parent[f];
    const Mat3 Rp = p == kGround ? Mat3::Identity() : cfg.R_world[p];
    const Vec3 pp = p == kGround ? Vec3::Zero() : cfg.p_world[p];
    cfg.R_world[f] = Rp * U[f].rotation();
    cfg.p_world[f] = pp + Rp * U[f].offset();
  }
  return cfg;
}

MechanismRates mechanism_rates(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot) {
  MechanismRates r;
  r.zeta1 = theta_dot(0);
  r.xp = model.ratios.r_p * theta_dot(0);
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& g = model.chain[j];
    const ChainState& s = cfg.chain[j];
    r.q[j] = g.zeta_sign * theta_dot(1 + j);
    const double k = -g.L * g.L1 * std::sin(s.q) / s.d;
    r.x[j] = k * r.q[j];
    r.q1[j] = passive_gain(s.q1, s.d, g.L) * r.x[j];
    r.q2[j] = passive_gain(s.q2, s.d, g.L1) * r.x[j];
  }
  r.xi = theta_dot.tail<3>();
  return r;
}

MechanismRates mechanism_rates_from_actuators(const ManipulatorModel& model, const Configuration& cfg,
                                              const Vec6& xdot) {
  MechanismRates r;
  r.xp = xdot(0);
  r.zeta1 = xdot(0) / model.ratios.r_p;
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& g = model.chain[j];
    const ChainState& s = cfg.chain[j];
    const double k = -g.L * g.L1 * std::sin(s.q) / s.d;
    r.x[j] = xdot(1 + j);
    r.q[j] = r.x[j] / k;
    r.q1[j] = passive_gain(s.q1, s.d, g.L) * r.x[j];
    r.q2[j] = passive_gain(s.q2, s.d, g.L1) * r.x[j];
  }
  r.xi = xdot.tail<3>().cwiseQuotient(model.ratios.r_w);
  return r;
}

Vec6 actuator_rates(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot) {
  const MechanismRates r = mechanism_rates(model, cfg, theta_dot);
  Vec6 out;
  out << r.xp, r.x[0], r.x[1], model.ratios.r_w.cwiseProduct(theta_dot.tail<3>());
  return out;
}

Vec6 actuator_positions(const ManipulatorModel& model, const Configuration& cfg) {
  Vec6 out;
  out << cfg.xp, cfg.chain[0].x, cfg.chain[1].x, model.ratios.r_w.cwiseProduct(cfg.joints.xi);
  return out;
}

std::array<SpatialVelocity, kFrameCount> propagate_velocities(const ManipulatorModel& model, const Configuration& cfg,
                                                             const MechanismRates& rates,
                                                             const SpatialVelocity& base_velocity) {
  std::array<SpatialVelocity, kFrameCount> V;
  for (int f : kOrder) {
    const int p = cfg.parent[f];
    Vec6 v = cfg.U[f].to_child(p == kGround ? base_velocity.data : V[p].data);
    const JointMotion m = joint_motion(model, f, rates);
    if (m.axis >= 0) v(m.axis) += m.rate;
    V[f].data = v;
  }
  return V;
}

void forward_velocities(const ManipulatorModel& model, const Configuration& cfg, const SpatialVelocity& base_velocity,
                        FrameSet& frames) {
  frames.V = propagate_velocities(model, cfg, mechanism_rates(model, cfg, cfg.joints.rates), base_velocity);
}

std::array<Vec6, kFrameCount> propagate_accelerations(const ManipulatorModel& model, const Configuration& cfg,
                                                      const MechanismRates& rates,
                                                      const std::array<SpatialVelocity, kFrameCount>& V,
                                                      const Vec6& theta_dot, const Vec6& theta_ddot) {
  MechanismRates acc;
  acc.zeta1 = theta_ddot(0);
  acc.xp = model.ratios.r_p * theta_ddot(0);
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& g = model.chain[j];
    const ChainRates a = chain_accel_map(cfg.chain[j], g.zeta_sign * theta_dot(1 + j),
                                         g.zeta_sign * theta_ddot(1 + j), g);
    acc.q[j] = g.zeta_sign * theta_ddot(1 + j);
    acc.x[j] = a.xdot;
    acc.q1[j] = a.q1dot;
    acc.q2[j] = a.q2dot;
  }
  acc.xi = theta_ddot.tail<3>();

  std::array<Vec6, kFrameCount> A;
  for (int f : kOrder) {
    const int p = cfg.parent[f];
    Vec6 a = p == kGround ? Vec6::Zero() : cfg.U[f].to_child(A[p]);
    const JointMotion m = joint_motion(model, f, rates);
    if (m.axis >= 0) {
      a(m.axis) += joint_motion(model, f, acc).rate;
      a += motion_cross(V[f].data, unit6(m.axis) * m.rate);
    }
    A[f] = a;
  }
  return A;
}

BackpropResult backpropagate_forces(const ManipulatorModel& model, const Configuration& cfg,
                                    const std::array<Vec6, kBodyCount>& net, const SpatialForce& f_env,
                                    LeverSign sign) {
  BackpropResult out;
  auto& F = out.F;
  const auto& U = cfg.U;

  F[E] = f_env;
  F[E4].data = U[E].to_parent(F[E].data);
  for (int i = 2; i >= 0; --i) {
    const int g = kWristBody[i];
    F[g].data = net[g] + U[kWristOut[i]].to_parent(F[kWristOut[i]].data);
    F[kWristIn[i]].data = U[g].to_parent(F[g].data);
    out.f_c(3 + i) = F[g].data(3 + model.wrist_axis[i]) / model.ratios.r_w(i);
  }

  for (int j = 1; j >= 0; --j) {
    const ChainFrames& c = kChain[j];
    const ChainGeometry& geo = model.chain[j];
    const ChainState& s = cfg.chain[j];
    const int downstream = j == 1 ? E1 : B02;
    const Vec6 down = U[downstream].to_parent(F[downstream].data);  // at T1j

    const Vec6 boom = net[c.b1] + U[c.t1].to_parent(down);
    const double M1 = boom(5);
    const double M3 = net[c.b3](5);
    const Vec6& F4 = net[c.b4];
    const double lever = s.d - geo.lc;
    const double sin2 = std::sin(s.q2), cos2 = std::cos(s.q2), tan2 = std::tan(s.q2);

    // In-plane pin force at T from the two free z-moments (boom about O, cylinder about A).
    const double Py = M1 / geo.L1;
    const double Px = (-(M3 + F4(5) + lever * F4(1)) / s.d - cos2 * Py) / sin2;
    Vec6 pin = Vec6::Zero();
    pin(0) = Px;
    pin(1) = Py;

    const double side = sign == LeverSign::Minus ? lever * F4(1) : -lever * F4(1);
    out.f_c(1 + j) = F4(0) - M1 / (geo.L1 * sin2) - (M3 + F4(5) + side) / (s.d * tan2);

    F[c.t2].data = pin;
    F[c.t1].data = down - pin;
    F[c.b4].data = F4 + U[c.t2].to_parent(pin);
    F[c.b3].data = net[c.b3] + U[c.b4].to_parent(F[c.b4].data);
    F[c.b2].data = U[c.b3].to_parent(F[c.b3].data);
    F[c.b1].data = net[c.b1] + U[c.t1].to_parent(F[c.t1].data);
    F[c.b0].data = net[c.b0] + U[c.b1].to_parent(F[c.b1].data) + U[c.b2].to_parent(F[c.b2].data);
  }

  F[P1].data = net[P1] + U[B01].to_parent(F[B01].data);
  F[Pp2].data = net[Pp2];
  F[Pp1].data = U[Pp2].to_parent(F[Pp2].data);
  out.f_c(0) = F[P1].data(4) / model.ratios.r_p + net[Pp2](0);
  return out;
}

Vec6 required_actuator_rates(const ManipulatorModel& model, const Configuration& cfg, const DesiredJoints& desired,
                             const RequiredGains& gains) {
  const Vec6 theta = cfg.joints.theta();
  Vec6 out;
  out(0) = model.ratios.r_p * (desired.theta_dot(0) + gains.lambda * (desired.theta(0) - theta(0)));
  for (int j = 0; j < 2; ++j) {
    const ChainGeometry& g = model.chain[j];
    const double qd = chain_q(desired.theta(1 + j), g);
    const double xd = chain_piston_position(qd, g);
    const double xd_dot = chain_stroke_gain(qd, g) * g.zeta_sign * desired.theta_dot(1 + j);
    out(1 + j) = xd_dot + gains.lambda_x[j] * (xd - cfg.chain[j].x);
  }
  for (int i = 0; i < 3; ++i)
    out(3 + i) = model.ratios.r_w(i) *
                 (desired.theta_dot(3 + i) + gains.sigma(i) * (desired.theta(3 + i) - theta(3 + i)));
  return out;
}

void required_velocities(const ManipulatorModel& model, const Configuration& cfg, const DesiredJoints& desired,
                         const RequiredGains& gains, const SpatialVelocity& base_velocity, FrameSet& frames) {
  const Vec6 xr = required_actuator_rates(model, cfg, desired, gains);
  frames.Vr = propagate_velocities(model, cfg, mechanism_rates_from_actuators(model, cfg, xr), base_velocity);
}

Vec6 required_forces(const ManipulatorModel& model, const Configuration& cfg,
                     const std::array<Vec6, kBodyCount>& net_required, const SpatialForce& f_env_required,
                     FrameSet* frames, LeverSign sign) {
  const BackpropResult r = backpropagate_forces(model, cfg, net_required, f_env_required, sign);
  if (frames) frames->Fr = r.F;
  return r.f_c;
}

Vec3 body_gravity(const ManipulatorModel& model, const Configuration& cfg, int body) {
  return cfg.R_world[body].transpose() * model.gravity;
}

Vec6 inverse_dynamics(const ManipulatorModel& model, const Configuration& cfg, const Vec6& theta_dot,
                      const Vec6& theta_ddot, const SpatialForce& f_env, bool with_gravity) {
  const MechanismRates rates = mechanism_rates(model, cfg, theta_dot);
  const auto V = propagate_velocities(model, cfg, rates, SpatialVelocity());
  const auto A = propagate_accelerations(model, cfg, rates, V, theta_dot, theta_ddot);
  std::array<Vec6, kBodyCount> net;
  for (int b = 0; b < kBodyCount; ++b) {
    const Vec3 g = with_gravity ? body_gravity(model, cfg, b) : Vec3::Zero();
    net[b] = net_wrench(model.inertia[b], V[b], A[b], g).data;
  }
  return backpropagate_forces(model, cfg, net, f_env).f_c;
}

JointSpaceDynamics joint_space_dynamics(const ManipulatorModel& model, const Configuration& cfg,
                                        const Vec6& theta_dot, const SpatialForce& f_env) {
  JointSpaceDynamics d;
  d.b = inverse_dynamics(model, cfg, theta_dot, Vec6::Zero(), f_env, true);
  for (int k = 0; k < 6; ++k)
    d.H.col(k) = inverse_dynamics(model, cfg, Vec6::Zero(), unit6(k), SpatialForce(), false);
  return d;
}

std::array<Eigen::Matrix<double, 6, 6>, kFrameCount> actuator_velocity_jacobians(const ManipulatorModel& model,
                                                                                 const Configuration& cfg) {
  std::array<Eigen::Matrix<double, 6, 6>, kFrameCount> J;
  for (int k = 0; k < 6; ++k) {
    const auto V = propagate_velocities(model, cfg, mechanism_rates_from_actuators(model, cfg, unit6(k)),
                                        SpatialVelocity());
    for (int f = 0; f < kFrameCount; ++f) J[f].col(k) = V[f].data;
  }
  return J;
}

}  // namespace hhm
