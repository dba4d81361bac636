#include "hhm/constraint.hpp"

#include <algorithm>
#include <cmath>

#include "hhm/errors.hpp"

namespace hhm {

Vec5 DbParams::theta() const {
  Vec5 t;
  t << c(), c() * b_r, c() * b_l, d_r(), d_l();
  return t;
}

void DbParams::validate() const {
  if (!(m_d > 0.0) || !(k_b > 0.0)) throw ConfigError("deadzone-backlash slopes must be positive");
  if (!(b_r > 0.0) || !(b_l < 0.0)) throw ConfigError("deadzone break points must satisfy b_l < 0 < b_r");
  if (!(B_r >= 0.0) || !(B_l <= 0.0)) throw ConfigError("backlash widths must satisfy B_l <= 0 <= B_r");
}

double deadzone(double v, const DbParams& p) {
  if (v >= p.b_r) return p.m_d * (v - p.b_r);
  if (v <= p.b_l) return p.m_d * (v - p.b_l);
  return 0.0;
}

double backlash_step(double v1, DbState& s, const DbParams& p, BacklashModel model) {
  const double up = p.k_b * (v1 - p.B_r);
  const double down = p.k_b * (v1 - p.B_l);
  double u = s.u_prev;
  const double dv = v1 - s.v1_prev;
  s.direction = dv > kBacklashDeadBand ? 1 : (dv < -kBacklashDeadBand ? -1 : 0);
  if (model == BacklashModel::Literal) {
    if (s.direction > 0)
      u = up;
    else if (s.direction < 0)
      u = down;
  } else {
    if (up > s.u_prev)
      u = up;
    else if (down < s.u_prev)
      u = down;
  }
  s.v1_prev = v1;
  s.u_prev = u;
  return u;
}

double compound_db(double v, DbState& s, const DbParams& p, BacklashModel model) {
  return backlash_step(deadzone(v, p), s, p, model);
}

double phi_blend(double kappa, double kappa0, double x0) { return 0.5 * (std::tanh((kappa - kappa0) / x0) + 1.0); }

double inverse_offset(double u, double udot, const Vec5& th, double c_floor, double hold) {
  const double c = std::max(th(0), c_floor);
  const double b_r = th(1) / c, b_l = th(2) / c;
  const double d_r = th(3) / c, d_l = th(4) / c;
  if (udot > 0.0) return u > 0.0 ? d_r + b_r : (u < 0.0 ? d_r + b_l : d_r + b_r);
  if (udot < 0.0) return u < 0.0 ? d_l + b_l : (u > 0.0 ? d_l + b_r : d_l + b_l);
  if (u > 0.0) return b_r;
  if (u < 0.0) return b_l;
  return hold;
}

double adaptive_inverse(double u, double udot, DbInverseState& inv, double dt, InverseForm form) {
  const auto& th = inv.theta_hat;
  const auto& p = inv.p;
  const double c = std::max(th(0), p.c_floor);
  const double w_hat = inverse_offset(u, udot, th, p.c_floor, inv.w_bar_hat);
  double v;
  if (form == InverseForm::Smooth) {
    v = (u + phi_blend(udot, p.kappa0, p.x0) * th(3) + phi_blend(-udot, p.kappa0, p.x0) * th(4)) / c +
        phi_blend(u, p.kappa0, p.x0) * th(1) / c + phi_blend(-u, p.kappa0, p.x0) * th(2) / c;
  } else {
    v = u / c + inv.w_bar_hat;
  }
  inv.w_bar_hat += dt * p.alpha * (w_hat - inv.w_bar_hat);
  return v;
}

Vec5 db_error_regressor(double v, double udot, double u, const DbInverseState& inv) {
  const auto& p = inv.p;
  Vec5 eta;
  eta << -v, phi_blend(u, p.kappa0, p.x0), phi_blend(-u, p.kappa0, p.x0), phi_blend(udot, p.kappa0, p.x0),
      phi_blend(-udot, p.kappa0, p.x0);
  return eta;
}

void adapt_db_step(Vec5& theta_hat, const Vec5& eta, double force_error, double delta, double delta0, double k_x,
                   double dt, const DbInverseParams& p) {
  theta_hat += dt * delta * (eta * force_error / k_x - delta0 * theta_hat);
  theta_hat(0) = std::clamp(theta_hat(0), p.c_floor, p.c_ceiling);
  theta_hat.tail<4>() = theta_hat.tail<4>().cwiseMax(-p.offset_limit).cwiseMin(p.offset_limit);
}

}  // namespace hhm
