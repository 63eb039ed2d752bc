#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "dynvoi/errors.hpp"

namespace dynvoi {

// Quadrature rule for E[g(eps)], eps ~ N(0, 1): sum_k weights[k] g(nodes[k]).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1

  template <class F>
  double expectation(F&& g) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * g(nodes[k]);
    return acc;
  }
};

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
// polynomials: zero diagonal, off-diagonal sqrt(k).
inline GaussHermiteRule gauss_hermite_normal(int order) {
  if (order < 1) throw ConfigError("Gauss-Hermite order must be at least 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int k = 0; k < order; ++k) {
    rule.nodes[k] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[k] = v0 * v0;
  }
  // Exact symmetry about zero.
  for (int k = 0; k < order / 2; ++k) {
    const int j = order - 1 - k;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[j] = x;
    rule.weights[k] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace dynvoi
