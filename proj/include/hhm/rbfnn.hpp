#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace hhm {

//! Gaussian radial-basis network: y = Wᵀ psi(chi / scale) + bias.
struct RbfNetwork {
  Eigen::MatrixXd centers;      // n x m
  Eigen::VectorXd widths;       // n
  Eigen::MatrixXd weights;      // n x d
  Eigen::VectorXd bias;         // d
  Eigen::VectorXd input_scale;  // m; chi is divided by this before activation

  int nodes() const { return static_cast<int>(centers.rows()); }
  int inputs() const { return static_cast<int>(centers.cols()); }
  int outputs() const { return static_cast<int>(weights.cols()); }

  //! Centers uniform in [-1, 1]^m from `seed`, zero weights and bias, unit scale.
  static RbfNetwork random(int nodes, int inputs, int outputs, double width, std::uint64_t seed);

  //! Throws std::invalid_argument on shape mismatch, nonpositive width or scale, or non-finite entries.
  void validate() const;
};

Eigen::VectorXd activation(const RbfNetwork& net, const Eigen::VectorXd& chi);
Eigen::VectorXd predict(const RbfNetwork& net, const Eigen::VectorXd& chi);
//! Prediction from an activation vector that was already computed.
Eigen::VectorXd predict_from(const RbfNetwork& net, const Eigen::VectorXd& psi);

struct RigidRbfGains {
  double gamma = 350.0;  // scalar Γ (Γ = gamma * I)
  double tau0 = 0.01;
  double pi = 20.0;
  double pi0 = 0.01;
};

struct ActuatorRbfGains {
  double delta_a = 1.0;
  double delta_a0 = 0.01;
  double bar_delta = 1.0;
  double bar_delta0 = 0.01;
};

//! Euler step of the weight and bias laws driven by the velocity error V_r - V.
void adapt_rigid_step(RbfNetwork& net, const Eigen::VectorXd& psi, const Eigen::VectorXd& velocity_error,
                      const RigidRbfGains& g, double dt);

//! Euler step of the actuator weight and bias laws driven by the force error f_pr - f_p.
void adapt_actuator_step(RbfNetwork& net, const Eigen::VectorXd& psi, double force_error, double k_x,
                         const ActuatorRbfGains& g, double dt);

}  // namespace hhm
