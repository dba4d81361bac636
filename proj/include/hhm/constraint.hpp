#pragma once

#include <limits>

#include <Eigen/Dense>

namespace hhm {

using Vec5 = Eigen::Matrix<double, 5, 1>;

struct DbParams {
  double m_d = 1.0;   // deadzone slope
  double b_r = 0.2;   // deadzone right break point
  double b_l = -0.2;  // deadzone left break point
  double k_b = 1.0;   // backlash slope
  double B_r = 0.2;   // backlash right width
  double B_l = -0.2;  // backlash left width

  double c() const { return m_d * k_b; }
  double d_r() const { return k_b * B_r; }
  double d_l() const { return k_b * B_l; }
  //! True parameters in the estimate layout [c, c b_r, c b_l, d_r, d_l].
  Vec5 theta() const;
  //! Throws ConfigError unless m_d, k_b > 0, b_l < 0 < b_r and B_l <= 0 <= B_r.
  void validate() const;
};

//! How the backlash decides the motion direction of its input between samples.
enum class BacklashModel {
  Literal,  // sign of the input increment selects the branch; zero increment holds
  Engaged,  // output only moves when the input pushes against one side of the gap
};

struct DbState {
  double v1_prev = 0.0;
  double u_prev = 0.0;
  int direction = 0;  // +1 rising, -1 falling, 0 held
};

inline constexpr double kBacklashDeadBand = 1e-12;

double deadzone(double v, const DbParams& p);
double backlash_step(double v1, DbState& state, const DbParams& p, BacklashModel model = BacklashModel::Literal);
double compound_db(double v, DbState& state, const DbParams& p, BacklashModel model = BacklashModel::Literal);

struct DbInverseParams {
  double alpha = 50.0;
  double kappa0 = 0.0;
  double x0 = 0.01;
  double c_floor = 1e-6;
  // Projection box for the adapted estimates; the offset bound applies to entries 1..4.
  double c_ceiling = std::numeric_limits<double>::infinity();
  double offset_limit = std::numeric_limits<double>::infinity();
};

//! Smooth blend (tanh((kappa - kappa0)/x0) + 1)/2.
double phi_blend(double kappa, double kappa0, double x0);

//! Which form of the inverse produces the command.
enum class InverseForm {
  Smooth,    // branch blend in u and udot
  Filtered,  // u/c + low-passed offset
};

struct DbInverseState {
  Vec5 theta_hat = (Vec5() << 1.0, 0.0, 0.0, 0.0, 0.0).finished();  // [c, c b_r, c b_l, d_r, d_l]
  double w_bar_hat = 0.0;
  DbInverseParams p;
};

//! Piecewise offset of the exact inverse; returns `hold` when the input is zero and not moving.
double inverse_offset(double u, double udot, const Vec5& theta_hat, double c_floor, double hold);

//! Command v for the desired constrained output u; advances the offset filter by one Euler step.
double adaptive_inverse(double u, double udot, DbInverseState& inv, double dt,
                        InverseForm form = InverseForm::Smooth);

//! eta = [-v, phi(u), phi(-u), phi(udot), phi(-udot)], paired entrywise with theta_hat so u = -theta_hatᵀ eta.
Vec5 db_error_regressor(double v, double udot, double u, const DbInverseState& inv);

//! Euler step of theta_hat' = delta (eta e_f / k_x - delta0 theta_hat), then projected onto the box in `p`.
void adapt_db_step(Vec5& theta_hat, const Vec5& eta, double force_error, double delta, double delta0, double k_x,
                   double dt, const DbInverseParams& p = {});

}  // namespace hhm
