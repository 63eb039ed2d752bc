#pragma once

// Long-run covariance of the demand filter.
//
// riccati_fixed_point() iterates the covariance recursion and is the
// reference computation. sigma_star_closed_form() is the positive root of the
// scalar fixed-point quadratic
//
//   g^2 S^2 - ((d^2 - 1) h^2 + f^2 g^2) S - f^2 h^2 = 0,
//
// written in the radical form used for the growth analysis.

#include <cmath>
#include <cstddef>
#include <optional>

#include "dynvoi/errors.hpp"
#include "dynvoi/filter.hpp"

namespace dynvoi {

struct SteadyState {
  Matrix Sigma_star;
  Matrix K_star;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct RiccatiOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
};

// One step of the covariance recursion (the measurement-updated prior).
inline Matrix riccati_step(const Matrix& Sigma, const StateSpaceModel& model) {
  const Matrix K = kalman_gain(Sigma, model);
  const Matrix next = model.D * Sigma * model.D.transpose() + model.F * model.F.transpose() -
                      K * model.G * Sigma * model.D.transpose();
  return detail::symmetrize(next);
}

inline SteadyState riccati_fixed_point(const StateSpaceModel& model, const Matrix& start,
                                       RiccatiOptions opts = {}) {
  if (!(opts.tol > 0.0)) throw ConfigError("riccati tolerance must be positive");
  if (opts.max_iter < 1) throw ConfigError("riccati max_iter must be at least 1");
  detail::require_square(start, model.n(), "start covariance");

  Matrix sigma = detail::symmetrize(start);
  double residual = INFINITY;
  std::size_t it = 0;
  while (it < opts.max_iter) {
    Matrix next = riccati_step(sigma, model);
    residual = (next - sigma).cwiseAbs().maxCoeff();
    sigma = std::move(next);
    ++it;
    if (residual <= opts.tol) {
      return SteadyState{sigma, kalman_gain(sigma, model), it, residual};
    }
  }
  throw NoConvergence("riccati iteration did not converge after " + std::to_string(it) +
                          " steps (residual " + std::to_string(residual) + ")",
                      residual);
}

// Starts from the zero matrix unless the innovation covariance is singular
// there (H singular), in which case the model prior is used.
inline SteadyState riccati_fixed_point(const StateSpaceModel& model, RiccatiOptions opts = {}) {
  const Matrix zero = Matrix::Zero(model.n(), model.n());
  if (detail::is_invertible(model.H * model.H.transpose()))
    return riccati_fixed_point(model, zero, opts);
  return riccati_fixed_point(model, model.Sigma0, opts);
}

inline double sigma_star_closed_form(double d, double f, double g, double h) {
  if (g == 0.0) throw DomainError("sigma_star_closed_form: g must be nonzero");
  if (d < 1.0) throw DomainError("sigma_star_closed_form: requires d >= 1");
  if (h < 0.0) throw DomainError("sigma_star_closed_form: requires h >= 0");
  const double h2 = h * h;
  const double f2g2 = f * f * g * g;
  const double growth = (d - 1.0) * (d + 1.0);
  const double radical =
      std::sqrt(h2 * (h2 * growth * growth + 2.0 * f2g2 * (d * d + 1.0)) + f2g2 * f2g2);
  return (radical + h2 * growth + f2g2) / (2.0 * g * g);
}

// Scalar steady-state gain d S g / (g^2 S + h^2).
inline double gain_star(double d, double g, double h, double sigma_star) {
  const double denom = g * g * sigma_star + h * h;
  if (denom == 0.0) throw DomainError("gain_star: g^2*Sigma + h^2 is zero");
  return d * sigma_star * g / denom;
}

inline bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

// Closed form per market when every system matrix is diagonal, iteration
// otherwise. Diagonal models outside the closed form's domain (d < 1) fall
// back to iteration as well.
inline SteadyState steady_state(const StateSpaceModel& model, RiccatiOptions opts = {}) {
  const auto n = model.n();
  const bool diag = is_diagonal(model.D) && is_diagonal(model.F) && is_diagonal(model.G) &&
                    is_diagonal(model.H);
  bool in_domain = diag;
  for (Eigen::Index i = 0; in_domain && i < n; ++i) in_domain = model.D(i, i) >= 1.0;
  if (!in_domain) return riccati_fixed_point(model, opts);

  Matrix sigma = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    sigma(i, i) = sigma_star_closed_form(model.D(i, i), std::abs(model.F(i, i)), model.G(i, i),
                                         std::abs(model.H(i, i)));
  const double residual = (riccati_step(sigma, model) - sigma).cwiseAbs().maxCoeff();
  return SteadyState{sigma, kalman_gain(sigma, model), 0, residual};
}

}  // namespace dynvoi
