#include "hhm/actuator.hpp"

#include <algorithm>
#include <cmath>

#include "hhm/errors.hpp"

namespace hhm {

void ActuatorParams::validate() const {
  for (double v : {A_a, A_b, V0a, V0b, s, beta, m_piston, friction.v_s, friction.eps_v, friction.z_max})
    if (!(v > 0.0)) throw ConfigError("actuator constants must be positive");
  if (!(c_l >= 0.0)) throw ConfigError("actuator leakage must be nonnegative");
  if ((theta_v.array() <= 0.0).any()) throw ConfigError("flow coefficients must be positive");
  if (!(p_r > 0.0)) throw ConfigError("return pressure p_r must be positive");
  if (!(p_s > p_r)) throw ConfigError("supply pressure p_s must exceed return pressure p_r");
}

double bristle_rate(double xdot, double z, const FrictionShape& shape) {
  return xdot - std::abs(xdot) * z / shape.z_max;
}

Vec7 friction_regressor(double xdot, double z, const FrictionShape& shape) {
  const double t = std::tanh(xdot / shape.eps_v);
  const double r = xdot / shape.v_s;
  const double e = std::exp(-r * r);
  const double zd = bristle_rate(xdot, z, shape);
  Vec7 y;
  y << t, t * e, xdot, z, zd, zd * e, xdot * e;
  return y;
}

double friction_force(double xdot, double z, const Vec7& phi, const FrictionShape& shape) {
  return friction_regressor(xdot, z, shape).dot(phi);
}

double piston_force(const ActuatorState& s, const ActuatorParams& p) { return p.A_a * s.pa - p.A_b * s.pb; }

std::pair<double, double> flow_rates(double u, const ActuatorState& s, const ActuatorParams& p) {
  const auto& c = p.theta_v;
  const double pos = selector(u), neg = selector(-u);
  const double Qa = c(0) * upsilon(p.p_s - s.pa) * u * pos + c(2) * upsilon(s.pa - p.p_r) * u * neg;
  const double Qb = -c(3) * upsilon(s.pb - p.p_r) * u * pos - c(1) * upsilon(p.p_s - s.pb) * u * neg;
  return {Qa, Qb};
}

std::pair<double, double> pressure_derivatives(const ActuatorState& s, double Qa, double Qb, const ActuatorParams& p) {
  const double Ql = p.c_l * (s.pa - s.pb);
  const double dpa = p.beta / (p.V0a + p.A_a * s.x) * (Qa - p.A_a * s.xdot - Ql);
  const double dpb = p.beta / (p.V0b + p.A_b * (p.s - s.x)) * (Qb + p.A_b * s.xdot + Ql);
  return {dpa, dpb};
}

Vec4 flow_regressor(double u, const ActuatorState& s, const ActuatorParams& p) {
  const double ha = p.h_a(s.x), hb = p.h_b(s.x);
  const double pos = selector(u) * u, neg = selector(-u) * u;
  Vec4 y;
  y << -upsilon(p.p_s - s.pa) / ha * pos, -upsilon(p.p_s - s.pb) / hb * neg, -upsilon(s.pa - p.p_r) / ha * neg,
      -upsilon(s.pb - p.p_r) / hb * pos;
  return y;
}

Vec4 force_rate_regressor(double fdot_pr, const ActuatorState& s, const ActuatorParams& p) {
  const double va = p.V0a + p.A_a * s.x, vb = p.V0b + p.A_b * (p.s - s.x);
  Vec4 y;
  y << fdot_pr, s.xdot / p.h_a(s.x), s.xdot / p.h_b(s.x),
      (s.pa - s.pb) * (p.A_a * p.V0b + p.A_b * p.V0a + p.A_a * p.A_b * p.s) / (va * vb);
  return y;
}

double required_uf(double f_pr, double fdot_pr, double xdot_r, const ActuatorState& s, const ActuatorParams& nominal,
                   const ActuatorEstimates& est, const ActuatorGains& g, double rbf_prediction, double f_p) {
  return force_rate_regressor(fdot_pr, s, nominal).dot(est.theta_d) + g.k_f * (f_pr - f_p) +
         g.k_x * (xdot_r - s.xdot) + rbf_prediction;
}

ValveCommand uf_to_valve(double u_f, const ActuatorState& s, const ActuatorParams& nominal, const Vec4& theta_v) {
  ValveCommand out;
  if (u_f == 0.0) return out;
  const double ha = nominal.h_a(s.x), hb = nominal.h_b(s.x);
  double den;
  if (u_f > 0.0)
    den = theta_v(0) * upsilon(nominal.p_s - s.pa) / ha + theta_v(3) * upsilon(s.pb - nominal.p_r) / hb;
  else
    den = theta_v(2) * upsilon(s.pa - nominal.p_r) / ha + theta_v(1) * upsilon(nominal.p_s - s.pb) / hb;
  if (!(den > kValveDenominatorFloor)) {
    den = kValveDenominatorFloor;
    out.floored = true;
  }
  out.u = u_f / den;
  return out;
}

ActuatorDerivative hydraulic_rates(const ActuatorState& s, double u, const ActuatorParams& p) {
  const auto [Qa, Qb] = flow_rates(u, s, p);
  const auto [dpa, dpb] = pressure_derivatives(s, Qa, Qb, p);
  ActuatorDerivative d;
  d.xdot = s.xdot;
  d.pa = dpa;
  d.pb = dpb;
  d.z = bristle_rate(s.xdot, s.z, p.friction);
  return d;
}

void clamp_state(ActuatorState& s, const ActuatorParams& p) {
  s.pa = std::clamp(s.pa, p.p_r, p.p_s);
  s.pb = std::clamp(s.pb, p.p_r, p.p_s);
  if (s.x < 0.0) {
    s.x = 0.0;
    s.xdot = std::max(s.xdot, 0.0);
  } else if (s.x > p.s) {
    s.x = p.s;
    s.xdot = std::min(s.xdot, 0.0);
  }
}

namespace {

ActuatorDerivative bench_rates(const ActuatorState& s, double u, double f_load, const ActuatorParams& p) {
  ActuatorDerivative d = hydraulic_rates(s, u, p);
  const double ff = friction_force(s.xdot, s.z, p.friction_phi, p.friction);
  d.xddot = (piston_force(s, p) - ff - f_load) / p.m_piston;
  return d;
}

ActuatorState advance(const ActuatorState& s, const ActuatorDerivative& d, double h) {
  ActuatorState o = s;
  o.x += h * d.xdot;
  o.xdot += h * d.xddot;
  o.pa += h * d.pa;
  o.pb += h * d.pb;
  o.z += h * d.z;
  return o;
}

}  // namespace

ActuatorState plant_step(const ActuatorState& s, double u, double f_load, const ActuatorParams& p, double dt) {
  const auto k1 = bench_rates(s, u, f_load, p);
  const auto k2 = bench_rates(advance(s, k1, 0.5 * dt), u, f_load, p);
  const auto k3 = bench_rates(advance(s, k2, 0.5 * dt), u, f_load, p);
  const auto k4 = bench_rates(advance(s, k3, dt), u, f_load, p);
  ActuatorDerivative k;
  k.xdot = (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot) / 6.0;
  k.xddot = (k1.xddot + 2.0 * k2.xddot + 2.0 * k3.xddot + k4.xddot) / 6.0;
  k.pa = (k1.pa + 2.0 * k2.pa + 2.0 * k3.pa + k4.pa) / 6.0;
  k.pb = (k1.pb + 2.0 * k2.pb + 2.0 * k3.pb + k4.pb) / 6.0;
  k.z = (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z) / 6.0;
  ActuatorState out = advance(s, k, dt);
  if (!std::isfinite(out.x) || !std::isfinite(out.xdot) || !std::isfinite(out.pa) || !std::isfinite(out.pb) ||
      !std::isfinite(out.z))
    throw SimulationAbort("actuator state became non-finite", 0);
  clamp_state(out, p);
  return out;
}

void adapt_actuator_step(ActuatorEstimates& est, const ActuatorErrors& e, const ActuatorAdaptationInputs& in,
                         const ActuatorGains& g, double dt) {
  const double ef = e.e_f / g.k_x;
  est.theta_f += dt * g.gamma_f.cwiseProduct(in.Y_f * e.e_x / g.k_x - g.gamma_f0 * est.theta_f);
  est.theta_v += dt * g.gamma_v.cwiseProduct(in.Y_v * ef - g.gamma_v0 * est.theta_v);
  est.theta_v = est.theta_v.cwiseMax(kFlowCoefficientFloor);
  est.theta_d += dt * g.gamma_d.cwiseProduct(in.Y_d * ef - g.gamma_d0 * est.theta_d);
  if (in.db_on)
    adapt_db_step(est.db.theta_hat, in.eta, e.e_f, g.delta, g.delta0, g.k_x, dt, est.db.p);
  if (in.psi.size() > 0) adapt_actuator_step(est.net, in.psi, e.e_f, g.k_x, g.rbf, dt);
}

}  // namespace hhm
