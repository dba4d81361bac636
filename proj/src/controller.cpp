#include "hhm/controller.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "hhm/errors.hpp"

namespace hhm {

const char* mode_name(ControlMode mode) {
  switch (mode) {
    case ControlMode::PD: return "PD";
    case ControlMode::VDC: return "VDC";
    case ControlMode::RVDC: return "RVDC";
  }
  return "?";
}

ControlMode parse_mode(const std::string& name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "PD") return ControlMode::PD;
  if (up == "VDC") return ControlMode::VDC;
  if (up == "RVDC") return ControlMode::RVDC;
  throw ConfigError("unknown control mode '" + name + "' (expected PD, VDC or RVDC)");
}

ControllerConfig::ControllerConfig() {
  for (auto& K : K_A) K = 50.0 * Mat6::Identity();
  for (auto& s : actuator_input_scale) s = Eigen::VectorXd::Ones(5);
}

void ControllerConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("controller: ") + what + " must be positive");
  };
  positive(required.lambda, "lambda");
  positive(required.lambda_x[0], "lambda_x");
  positive(required.lambda_x[1], "lambda_x");
  for (int i = 0; i < 3; ++i) positive(required.sigma(i), "sigma");
  positive(gamma, "gamma");
  if (gamma0 < 0.0) throw ConfigError("controller: gamma0 must be nonnegative");
  for (const auto& r : rigid_rbf) {
    positive(r.gamma, "rbf gamma");
    positive(r.pi, "rbf pi");
    if (r.tau0 < 0.0 || r.pi0 < 0.0) throw ConfigError("controller: rbf leakage must be nonnegative");
  }
  positive(diff_cutoff_hz, "differentiator cutoff");
  positive(u_max, "u_max");
  positive(rigid_width, "rigid rbf width");
  positive(actuator_width, "actuator rbf width");
  positive(db_inverse.c_floor, "db c_floor");
  positive(db_inverse.x0, "db x0");
  if (!(db_inverse.c_ceiling >= db_inverse.c_floor)) throw ConfigError("controller: db c_ceiling is below c_floor");
  if (!(db_inverse.offset_limit > 0.0)) throw ConfigError("controller: db offset_limit must be positive");
  if (rigid_nodes < 1) throw ConfigError("controller: rigid rbf needs at least one node");
  if (rigid_input_scale.size() != 18 || (rigid_input_scale.array() <= 0.0).any())
    throw ConfigError("controller: rigid rbf input scale must have 18 positive entries");
  for (int b = 0; b < kBodyCount; ++b) {
    const Mat6 sym = 0.5 * (K_A[b] + K_A[b].transpose());
    if (Eigen::SelfAdjointEigenSolver<Mat6>(sym).eigenvalues().minCoeff() <= 0.0)
      throw ConfigError(std::string("controller: K_A of ") + frame_name(b) + " is not positive definite");
  }
  for (int k = 0; k < 6; ++k) {
    const auto& g = actuator[k];
    positive(g.k_f, "k_f");
    positive(g.k_x, "k_x");
    if ((g.gamma_f.array() < 0).any() || (g.gamma_v.array() < 0).any() || (g.gamma_d.array() < 0).any() ||
        g.delta < 0.0)
      throw ConfigError("controller: adaptation gains must be nonnegative");
    if (actuator_nodes[k] < 1) throw ConfigError("controller: actuator rbf needs at least one node");
    if (actuator_input_scale[k].size() != 5 || (actuator_input_scale[k].array() <= 0.0).any())
      throw ConfigError("controller: actuator rbf input scale must have 5 positive entries");
  }
}

double vpf(const Vec6& V_r, const Vec6& V, const Vec6& F_r, const Vec6& F) { return (V_r - V).dot(F_r - F); }

double vpf_network_residual(const FrameSet& frames, const std::array<Vec6, kBodyCount>& net,
                            const std::array<Vec6, kBodyCount>& net_r, const Vec6& xdot, const Vec6& xdot_r,
                            const Vec6& f_c, const Vec6& f_cr, double base_vpf) {
  double bodies = 0.0;
  for (int b = 0; b < kBodyCount; ++b) bodies += vpf(frames.Vr[b].data, frames.V[b].data, net_r[b], net[b]);
  double actuators = 0.0;
  for (int k = 0; k < 6; ++k) actuators += (xdot_r(k) - xdot(k)) * (f_cr(k) - f_c(k));
  const double tip = vpf(frames.Vr[E].data, frames.V[E].data, frames.Fr[E].data, frames.F[E].data);
  return bodies - actuators + tip - base_vpf;
}

const Eigen::VectorXd& Differentiator::step(const Eigen::VectorXd& x, double dt, double cutoff_hz) {
  if (!primed_) {
    prev_ = x;
    out_ = Eigen::VectorXd::Zero(x.size());
    primed_ = true;
    return out_;
  }
  const double tau = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
  const double a = dt / (dt + tau);
  out_ += a * ((x - prev_) / dt - out_);
  prev_ = x;
  return out_;
}

InertialParams scaled_estimate(const InertialParams& truth, double scale) {
  const Mat4 L = spd_repair(scale * pseudo_inertia_matrix(truth.to_vector()));
  return InertialParams::from_vector(inertial_vector(L));
}

Controller::Controller(const ManipulatorModel& model, const std::array<ActuatorParams, 6>& nominal, ControllerConfig cfg,
                       const InitialEstimates& init)
    : model_(model), nominal_(nominal), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (int b = 0; b < kBodyCount; ++b) {
    L_hat_[b] = phi_to_L(init.inertia[b]);
    nets_[b] = RbfNetwork::random(cfg_.rigid_nodes, 18, 6, cfg_.rigid_width, cfg_.seed + b);
    nets_[b].input_scale = cfg_.rigid_input_scale;
    dVr_[b] = Differentiator(6);
  }
  for (int k = 0; k < 6; ++k) {
    est_[k] = init.actuator[k];
    est_[k].db.p = cfg_.db_inverse;
    if (est_[k].net.nodes() == 0) {
      est_[k].net = RbfNetwork::random(cfg_.actuator_nodes[k], 5, 1, cfg_.actuator_width, cfg_.seed + 100 + k);
      est_[k].net.input_scale = cfg_.actuator_input_scale[k];
    }
  }
}

Vec6 Controller::tick(const Observation& obs, const JointReference& ref, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("controller: dt must be positive");
  tel_ = Telemetry();
  tel_.error = ref.theta - obs.theta;
  Vec6 v = cfg_.mode == ControlMode::PD ? tick_pd(obs, ref) : tick_vdc(obs, ref, dt);
  for (int k = 0; k < 6; ++k) {
    if (!cfg_.active[k]) v(k) = 0.0;
    v(k) = std::clamp(v(k), -cfg_.u_max, cfg_.u_max);
  }
  tel_.v = v;
  return v;
}

Vec6 Controller::tick_pd(const Observation& obs, const JointReference& ref) {
  const Configuration c = configure(model_, JointState::from(obs.theta, obs.theta_dot));
  Vec6 v;
  for (int k = 0; k < 6; ++k) {
    // Joint k drives only actuator k; the sign of dx_k/dtheta_k orients the valve.
    const double gain = actuator_rates(model_, c, unit6(k))(k);
    const double dir = gain >= 0.0 ? 1.0 : -1.0;
    v(k) = dir * (cfg_.pd_kp(k) * (ref.theta(k) - obs.theta(k)) +
                  cfg_.pd_kd(k) * (ref.theta_dot(k) - obs.theta_dot(k)));
  }
  tel_.xdot = actuator_rates(model_, c, obs.theta_dot);
  for (int k = 0; k < 6; ++k) {
    ActuatorState s{obs.pa(k), obs.pb(k), 0.0, 0.0, 0.0};
    tel_.f_p(k) = piston_force(s, nominal_[k]);
  }
  return v;
}

Vec6 Controller::tick_vdc(const Observation& obs, const JointReference& ref, double dt) {
  const bool rbf = cfg_.rbf_enabled();
  const bool db = cfg_.db_enabled();
  const Configuration c = configure(model_, JointState::from(obs.theta, obs.theta_dot));
  const DesiredJoints desired{ref.theta, ref.theta_dot};

  frames_ = FrameSet();
  frames_.V = propagate_velocities(model_, c, mechanism_rates(model_, c, obs.theta_dot), SpatialVelocity());
  required_velocities(model_, c, desired, cfg_.required, SpatialVelocity(), frames_);
  const Vec6 xdot_r = required_actuator_rates(model_, c, desired, cfg_.required);
  const Vec6 xdot = actuator_rates(model_, c, obs.theta_dot);
  const Vec6 x_mech = actuator_positions(model_, c);

  // Rigid-body level: required net wrench of every body.
  std::array<Vec6, kBodyCount> net_r, net_a;
  std::array<Eigen::VectorXd, kBodyCount> psi;
  Eigen::VectorXd chi(18);
  for (int b = 0; b < kBodyCount; ++b) {
    const Vec6& V = frames_.V[b].data;
    const Vec6& Vr = frames_.Vr[b].data;
    const Vec6 dVr = dVr_[b].step(Vr, dt, cfg_.diff_cutoff_hz);
    const Vec3 g = body_gravity(model_, c, b);
    const Vec10 phi = inertial_vector(L_hat_[b].matrix);
    const Vec3 omega = V.tail<3>();
    net_r[b] = regressor(omega, frames_.Vr[b], dVr, g) * phi + cfg_.K_A[b] * (Vr - V);
    net_a[b] = regressor(omega, frames_.V[b], dVr, g) * phi;
    if (rbf) {
      chi << V, Vr, dVr;
      psi[b] = activation(nets_[b], chi);
      net_r[b] += predict_from(nets_[b], psi[b]);
    }
    const Vec10 s = regressor(omega, frames_.Vr[b], dVr, g).transpose() * (Vr - V);
    L_hat_[b] = natural_adaptation_step(L_hat_[b], adaptation_matrix(s), cfg_.gamma, cfg_.gamma0, dt);
    if (rbf) adapt_rigid_step(nets_[b], psi[b], Vr - V, cfg_.rigid_rbf[b], dt);
  }
  const Vec6 f_cr = required_forces(model_, c, net_r, SpatialForce(), &frames_);
  const BackpropResult actual = backpropagate_forces(model_, c, net_a, SpatialForce());
  frames_.F = actual.F;
  tel_.vpf_residual = vpf_network_residual(frames_, net_a, net_r, xdot, xdot_r, actual.f_c, f_cr);

  // Actuator level.
  Vec6 f_pr, f_p;
  std::array<ActuatorState, 6> st;
  for (int k = 0; k < 6; ++k) {
    const ActuatorParams& nom = nominal_[k];
    st[k] = {obs.pa(k), obs.pb(k), x_mech(k) + nom.x_offset, xdot(k), z_hat_(k)};
    f_pr(k) = f_cr(k) + friction_regressor(xdot(k), z_hat_(k), nom.friction).dot(est_[k].theta_f);
    f_p(k) = piston_force(st[k], nom);
  }
  const Vec6 fdot_pr = dfpr_.step(f_pr, dt, cfg_.diff_cutoff_hz);

  Vec6 u_d = Vec6::Zero();
  Vec6 u_fr = Vec6::Zero();
  for (int k = 0; k < 6; ++k) {
    if (!cfg_.active[k]) continue;
    const ActuatorParams& nom = nominal_[k];
    const ActuatorGains& g = cfg_.actuator[k];
    ActuatorEstimates& est = est_[k];
    const double e_f = f_pr(k) - f_p(k);
    Eigen::VectorXd psi_a;
    double rbf_pred = 0.0;
    if (rbf) {
      Eigen::VectorXd chi_a(5);
      chi_a << st[k].x, st[k].xdot, st[k].pa, st[k].pb, e_f;
      psi_a = activation(est.net, chi_a);
      rbf_pred = predict_from(est.net, psi_a)(0);
    }
    u_fr(k) = required_uf(f_pr(k), fdot_pr(k), xdot_r(k), st[k], nom, est, g, rbf_pred, f_p(k));
    const ValveCommand cmd = uf_to_valve(u_fr(k), st[k], nom, est.theta_v);
    u_d(k) = std::clamp(cmd.u, -cfg_.u_max, cfg_.u_max);
    tel_.valve_floored(k) = cmd.floored ? 1.0 : 0.0;
  }
  const Vec6 udot_d = dud_.step(u_d, dt, cfg_.diff_cutoff_hz);

  Vec6 v = u_d;
  for (int k = 0; k < 6; ++k) {
    if (!cfg_.active[k]) continue;
    ActuatorEstimates& est = est_[k];
    const ActuatorParams& nom = nominal_[k];
    const ActuatorGains& g = cfg_.actuator[k];
    ActuatorAdaptationInputs in;
    if (db) {
      v(k) = adaptive_inverse(u_d(k), udot_d(k), est.db, dt, cfg_.inverse_form);
      in.eta = db_error_regressor(v(k), udot_d(k), u_d(k), est.db);
      in.db_on = true;
    }
    const double e_f = f_pr(k) - f_p(k);
    in.Y_f = friction_regressor(xdot(k), z_hat_(k), nom.friction);
    in.Y_v = flow_regressor(u_d(k), st[k], nom);
    in.Y_d = force_rate_regressor(fdot_pr(k), st[k], nom);
    if (rbf) {
      Eigen::VectorXd chi_a(5);
      chi_a << st[k].x, st[k].xdot, st[k].pa, st[k].pb, e_f;
      in.psi = activation(est.net, chi_a);
    }
    adapt_actuator_step(est, {e_f, xdot_r(k) - xdot(k)}, in, g, dt);
    z_hat_(k) += dt * bristle_rate(xdot(k), z_hat_(k), nom.friction);
    e_f_(k) = e_f;
  }

  tel_.f_p = f_p;
  tel_.f_pr = f_pr;
  tel_.xdot = xdot;
  tel_.xdot_r = xdot_r;
  tel_.u_fr = u_fr;
  tel_.u_d = u_d;
  for (int b = 0; b < kBodyCount; ++b) {
    tel_.phi_norm += inertial_vector(L_hat_[b].matrix).norm();
    tel_.rigid_weight_norm += nets_[b].weights.norm() + nets_[b].bias.norm();
  }
  for (int k = 0; k < 6; ++k) {
    tel_.actuator_estimate_norm += est_[k].theta_f.norm() + est_[k].theta_d.norm() + est_[k].db.theta_hat.norm();
    tel_.actuator_weight_norm += est_[k].net.weights.norm() + est_[k].net.bias.norm();
  }
  return v;
}

AccompanyingFunction Controller::accompanying(const PlantTruth& truth) const {
  if (!truth.model || !truth.actuators || !truth.db) throw std::invalid_argument("accompanying: missing truth");
  const bool rbf = cfg_.rbf_enabled();
  const bool db = cfg_.db_enabled();
  AccompanyingFunction out;

  // Rigid level. Unknown ideal network weights and biases are taken as zero.
  double mu1 = cfg_.gamma, mu2 = cfg_.gamma0, mu0 = 0.0;
  for (int b = 0; b < kBodyCount; ++b) {
    const RigidRbfGains& rg = cfg_.rigid_rbf[b];
    if (rbf) {
      mu1 = std::max({mu1, 0.5 / rg.gamma, 0.5 / rg.pi});
      mu2 = std::min({mu2, 0.5 * rg.tau0, 0.5 * rg.pi0});
    }
    const Vec6 dV = frames_.Vr[b].data - frames_.V[b].data;
    const Mat6 M = mass_matrix(truth.model->inertia[b]);
    const PseudoInertia L = phi_to_L(truth.model->inertia[b]);
    out.nu += 0.5 * dV.dot(M * dV) + cfg_.gamma * bregman_divergence(L, L_hat_[b]);
    if (rbf)
      out.nu += 0.5 * nets_[b].weights.squaredNorm() / rg.gamma + 0.5 * nets_[b].bias.squaredNorm() / rg.pi;
    mu1 = std::max(mu1, Eigen::SelfAdjointEigenSolver<Mat6>(M).eigenvalues().maxCoeff());
    const Mat6 Ks = 0.5 * (cfg_.K_A[b] + cfg_.K_A[b].transpose());
    mu2 = std::min(mu2, Eigen::SelfAdjointEigenSolver<Mat6>(Ks).eigenvalues().minCoeff());
    mu0 += 0.5 * cfg_.gamma0 * (L.matrix * L.matrix).trace();
  }
  const double mu = mu2 / mu1;

  // Actuator level. Frozen estimates (zero gain) do not enter.
  double mu1a = 1e300, mu2a = 0.0, mua0 = 0.0;
  auto term = [&](double est, double tru, double gain, double leak) {
    if (gain <= 0.0) return;
    const double e = est - tru;
    out.nu += e * e / (2.0 * gain);
    mu1a = std::min(mu1a, 0.5 * leak);
    mu2a = std::max(mu2a, 1.0 / (2.0 * gain));
    mua0 += 0.5 * leak * tru * tru;
  };
  for (int k = 0; k < 6; ++k) {
    if (!cfg_.active[k]) continue;
    const ActuatorParams& p = (*truth.actuators)[k];
    const ActuatorGains& g = cfg_.actuator[k];
    const ActuatorEstimates& est = est_[k];
    out.nu += e_f_(k) * e_f_(k) / (2.0 * p.beta * g.k_x);
    mu1a = std::min(mu1a, g.k_f / g.k_x);
    mu2a = std::max(mu2a, 1.0 / (2.0 * p.beta * g.k_x));
    const Vec4 theta_d(1.0 / p.beta, p.A_a, p.A_b, p.c_l);
    for (int i = 0; i < 7; ++i) term(est.theta_f(i), p.friction_phi(i), g.gamma_f(i), g.gamma_f0);
    for (int i = 0; i < 4; ++i) term(est.theta_v(i), p.theta_v(i), g.gamma_v(i), g.gamma_v0);
    for (int i = 0; i < 4; ++i) term(est.theta_d(i), theta_d(i), g.gamma_d(i), g.gamma_d0);
    if (db) {
      const Vec5 th = (*truth.db)[k].theta();
      for (int i = 0; i < 5; ++i) term(est.db.theta_hat(i), th(i), g.delta, g.delta0);
    }
    if (rbf) {
      term(est.net.weights.norm(), 0.0, g.rbf.delta_a, g.rbf.delta_a0);
      term(est.net.bias(0), 0.0, g.rbf.bar_delta, g.rbf.bar_delta0);
    }
  }
  const double mua = mu2a > 0.0 ? mu1a / mu2a : mu;
  out.mu_bar = std::min(mu, mua);
  out.mu_bar0 = mu0 + mua0;
  return out;
}

}  // namespace hhm
