#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "hhm/constraint.hpp"
#include "hhm/rbfnn.hpp"

namespace hhm {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;

//! Fixed shape constants of the friction regressor.
struct FrictionShape {
  double v_s = 0.02;     // Stribeck velocity
  double eps_v = 0.005;  // Coulomb smoothing velocity
  double z_max = 2e-4;   // steady bristle deflection
};

struct ActuatorParams {
  double A_a = 2e-3, A_b = 1e-3;     // m^2
  double V0a = 1e-4, V0b = 1e-4;     // dead volumes, m^3
  double s = 0.3;                    // stroke, m
  double beta = 1e9;                 // bulk modulus, Pa
  double c_l = 1e-13;                // leakage, m^3/(s Pa)
  Vec4 theta_v = Vec4::Constant(2e-8);  // [c_p1, c_p2, c_n1, c_n2]
  double p_s = 2e7, p_r = 1e5;       // Pa
  Vec7 friction_phi = Vec7::Zero();
  FrictionShape friction;
  double m_piston = 10.0;            // kg, standalone bench only
  double x_offset = 0.0;             // stroke = mechanism coordinate + x_offset

  double h_a(double x) const { return V0a / A_a + x; }
  double h_b(double x) const { return V0b / A_b + (s - x); }
  //! Throws ConfigError on nonpositive constants or p_s <= p_r.
  void validate() const;
};

struct ActuatorState {
  double pa = 0.0, pb = 0.0;  // chamber pressures
  double x = 0.0;             // stroke coordinate in [0, s]
  double xdot = 0.0;
  double z = 0.0;             // bristle deflection
};

//! Signed square root of a pressure drop.
inline double upsilon(double dp) { return dp >= 0.0 ? std::sqrt(dp) : -std::sqrt(-dp); }
//! 1 iff u > 0.
inline double selector(double u) { return u > 0.0 ? 1.0 : 0.0; }

double bristle_rate(double xdot, double z, const FrictionShape& shape);
//! [tanh, tanh e, xdot, z, zdot, zdot e, xdot e] with e = exp(-(xdot/v_s)^2).
Vec7 friction_regressor(double xdot, double z, const FrictionShape& shape);
double friction_force(double xdot, double z, const Vec7& phi, const FrictionShape& shape);

double piston_force(const ActuatorState& s, const ActuatorParams& p);
std::pair<double, double> flow_rates(double u, const ActuatorState& s, const ActuatorParams& p);
std::pair<double, double> pressure_derivatives(const ActuatorState& s, double Qa, double Qb, const ActuatorParams& p);

//! Flow regressor: u_f = -Y_v theta_v.
Vec4 flow_regressor(double u, const ActuatorState& s, const ActuatorParams& p);
//! Force-rate regressor: u_f = Y_d [1/beta, A_a, A_b, c_l] gives fdot_p = fdot_pr.
Vec4 force_rate_regressor(double fdot_pr, const ActuatorState& s, const ActuatorParams& p);

struct ActuatorGains {
  double k_f = 2e-8;
  double k_x = 0.02;
  Vec7 gamma_f = Vec7::Zero();
  double gamma_f0 = 0.01;
  Vec4 gamma_v = Vec4::Zero();
  double gamma_v0 = 0.01;
  Vec4 gamma_d = Vec4::Zero();
  double gamma_d0 = 0.01;
  double delta = 0.0;    // deadzone-backlash estimate rate
  double delta0 = 0.01;
  ActuatorRbfGains rbf;
};

inline constexpr double kFlowCoefficientFloor = 1e-12;

struct ActuatorEstimates {
  Vec7 theta_f = Vec7::Zero();
  Vec4 theta_v = Vec4::Constant(1e-8);
  Vec4 theta_d = Vec4::Zero();
  DbInverseState db;
  RbfNetwork net;
};

//! Required flow-normalized command: Y_d theta_d + k_f e_f + k_x e_x + rbf.
double required_uf(double f_pr, double fdot_pr, double xdot_r, const ActuatorState& s, const ActuatorParams& nominal,
                   const ActuatorEstimates& est, const ActuatorGains& g, double rbf_prediction, double f_p);

struct ValveCommand {
  double u = 0.0;
  bool floored = false;  // a denominator hit the floor
};
inline constexpr double kValveDenominatorFloor = 1e-14;

//! Exact inverse of u_f = -Y_v(u) theta_v for the valve voltage u.
ValveCommand uf_to_valve(double u_f, const ActuatorState& s, const ActuatorParams& nominal, const Vec4& theta_v);

struct ActuatorDerivative {
  double xdot = 0.0, xddot = 0.0, pa = 0.0, pb = 0.0, z = 0.0;
};

//! Pressure and bristle rates at valve voltage u (motion rates left to the caller).
ActuatorDerivative hydraulic_rates(const ActuatorState& s, double u, const ActuatorParams& p);

//! Clamp pressures to [p_r, p_s] and the stroke to [0, s] with a zero-velocity stop.
void clamp_state(ActuatorState& s, const ActuatorParams& p);

//! One RK4 step of the standalone cylinder with its own piston mass; throws SimulationAbort on NaN.
ActuatorState plant_step(const ActuatorState& s, double u, double f_load, const ActuatorParams& p, double dt);

struct ActuatorErrors {
  double e_f = 0.0;  // f_pr - f_p
  double e_x = 0.0;  // xdot_r - xdot
};

struct ActuatorAdaptationInputs {
  Vec7 Y_f = Vec7::Zero();
  Vec4 Y_v = Vec4::Zero();
  Vec4 Y_d = Vec4::Zero();
  Vec5 eta = Vec5::Zero();
  Eigen::VectorXd psi;  // empty when the network is off
  bool db_on = false;
};

//! Explicit-Euler step of every actuator-level adaptation law.
void adapt_actuator_step(ActuatorEstimates& est, const ActuatorErrors& e, const ActuatorAdaptationInputs& in,
                         const ActuatorGains& g, double dt);

}  // namespace hhm
