#include "hhm/rbfnn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hhm {

RbfNetwork RbfNetwork::random(int nodes, int inputs, int outputs, double width, std::uint64_t seed) {
  if (nodes < 1 || inputs < 1 || outputs < 1) throw std::invalid_argument("rbf: empty network");
  RbfNetwork net;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  net.centers.resize(nodes, inputs);
  for (int j = 0; j < nodes; ++j)
    for (int k = 0; k < inputs; ++k) net.centers(j, k) = u(gen);
  net.widths = Eigen::VectorXd::Constant(nodes, width);
  net.weights = Eigen::MatrixXd::Zero(nodes, outputs);
  net.bias = Eigen::VectorXd::Zero(outputs);
  net.input_scale = Eigen::VectorXd::Ones(inputs);
  net.validate();
  return net;
}

void RbfNetwork::validate() const {
  const auto n = centers.rows();
  const auto m = centers.cols();
  if (n < 1 || m < 1) throw std::invalid_argument("rbf: empty network");
  if (widths.size() != n || weights.rows() != n) throw std::invalid_argument("rbf: node count mismatch");
  if (bias.size() != weights.cols()) throw std::invalid_argument("rbf: output count mismatch");
  if (input_scale.size() != m) throw std::invalid_argument("rbf: input scale size mismatch");
  if ((widths.array() <= 0.0).any()) throw std::invalid_argument("rbf: widths must be positive");
  if ((input_scale.array() <= 0.0).any()) throw std::invalid_argument("rbf: input scale must be positive");
  if (!centers.allFinite() || !widths.allFinite() || !weights.allFinite() || !bias.allFinite())
    throw std::invalid_argument("rbf: non-finite entry");
}

Eigen::VectorXd activation(const RbfNetwork& net, const Eigen::VectorXd& chi) {
  if (chi.size() != net.inputs()) throw std::invalid_argument("rbf: input dimension mismatch");
  const Eigen::VectorXd z = chi.cwiseQuotient(net.input_scale);
  Eigen::VectorXd psi(net.nodes());
  for (int j = 0; j < net.nodes(); ++j) {
    const double r2 = (z.transpose() - net.centers.row(j)).squaredNorm();
    psi(j) = std::exp(-r2 / (net.widths(j) * net.widths(j)));
  }
  return psi;
}

Eigen::VectorXd predict_from(const RbfNetwork& net, const Eigen::VectorXd& psi) {
  if (psi.size() != net.nodes()) throw std::invalid_argument("rbf: activation dimension mismatch");
  return net.weights.transpose() * psi + net.bias;
}

Eigen::VectorXd predict(const RbfNetwork& net, const Eigen::VectorXd& chi) {
  return predict_from(net, activation(net, chi));
}

void adapt_rigid_step(RbfNetwork& net, const Eigen::VectorXd& psi, const Eigen::VectorXd& velocity_error,
                      const RigidRbfGains& g, double dt) {
  if (psi.size() != net.nodes() || velocity_error.size() != net.outputs())
    throw std::invalid_argument("rbf: adaptation dimension mismatch");
  const Eigen::MatrixXd w_dot = g.gamma * (psi * velocity_error.transpose() - g.tau0 * net.weights);
  const Eigen::VectorXd b_dot = g.pi * (velocity_error - g.pi0 * net.bias);
  net.weights += dt * w_dot;
  net.bias += dt * b_dot;
}

void adapt_actuator_step(RbfNetwork& net, const Eigen::VectorXd& psi, double force_error, double k_x,
                         const ActuatorRbfGains& g, double dt) {
  if (psi.size() != net.nodes() || net.outputs() != 1) throw std::invalid_argument("rbf: adaptation dimension mismatch");
  const Eigen::VectorXd w_dot = g.delta_a * (force_error * psi / k_x - g.delta_a0 * net.weights.col(0));
  const double b_dot = g.bar_delta * (force_error / k_x - g.bar_delta0 * net.bias(0));
  net.weights.col(0) += dt * w_dot;
  net.bias(0) += dt * b_dot;
}

}  // namespace hhm
