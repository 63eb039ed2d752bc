#pragma once

// Multi-market linear-Gaussian demand model and its Kalman recursion.
//
//   theta_{t+1} = D theta_t + F e_{t+1}        market potentials
//   S_t         = G theta_t + H gamma_t         observed signal
//   q_i         = theta_i - p_i + gamma_i       linear demand, unit slope
//
// The gain K_t includes the growth matrix D, i.e. it maps a signal directly
// to next period's prior mean. D^-1 K_t is the Bayesian weight on the signal.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "dynvoi/errors.hpp"

namespace dynvoi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSingularConditionLimit = 1e14;

struct StateSpaceModel {
  Matrix D;       // growth
  Matrix F;       // state-noise loading
  Matrix G;       // signal loading
  Matrix H;       // signal-noise loading, may be singular
  Vector c;       // marginal cost per market
  Vector mu0;     // prior mean
  Matrix Sigma0;  // prior covariance

  Eigen::Index n() const { return D.rows(); }

  // Diagonal model with G = I, the usual single-market-per-coordinate setup.
  static StateSpaceModel diagonal(const Vector& d, const Vector& f, const Vector& g,
                                  const Vector& h, const Vector& c, const Vector& mu0,
                                  const Vector& sigma0_diag) {
    StateSpaceModel m;
    m.D = d.asDiagonal();
    m.F = f.asDiagonal();
    m.G = g.asDiagonal();
    m.H = h.asDiagonal();
    m.c = c;
    m.mu0 = mu0;
    m.Sigma0 = sigma0_diag.asDiagonal();
    return m;
  }

  static StateSpaceModel scalar(double d, double f, double g, double h, double c = 0.0,
                                double mu0 = 0.0, double sigma0 = 1.0) {
    auto v = [](double x) { return Vector::Constant(1, x); };
    return diagonal(v(d), v(f), v(g), v(h), v(c), v(mu0), v(sigma0));
  }
};

struct Belief {
  std::size_t t = 0;
  Vector mu;
  Matrix Sigma;
};

struct KalmanStep {
  Matrix gain;             // K_t
  Matrix normalized_gain;  // D^-1 K_t
  Belief next_belief;
};

namespace detail {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// 2-norm condition number; +inf for an exactly singular matrix.
inline double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return INFINITY;
  return s(0) / smin;
}

inline bool is_invertible(const Matrix& m) {
  return m.rows() == m.cols() && condition_number(m) <= kSingularConditionLimit;
}

inline void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n)
    throw ConfigError(std::string(name) + " must be " + std::to_string(n) + "x" +
                      std::to_string(n));
}

// G S G' + H H', checked for invertibility.
inline Matrix innovation_covariance(const Matrix& Sigma, const StateSpaceModel& model) {
  Matrix s = model.G * Sigma * model.G.transpose() + model.H * model.H.transpose();
  s = symmetrize(s);
  const double cond = condition_number(s);
  if (!(cond <= kSingularConditionLimit))
    throw SingularInnovation("innovation covariance G*Sigma*G' + H*H' is singular (condition " +
                             std::to_string(cond) + ")");
  return s;
}

}  // namespace detail

// Checks dimensions and the structural assumptions of the model. D and G
// must be invertible; F may be singular so that noiseless dynamics can be
// studied. When H is singular the prior must be positive definite.
inline void validate(const StateSpaceModel& m) {
  const auto n = m.n();
  if (n < 1) throw ConfigError("model needs at least one market");
  detail::require_square(m.D, n, "D");
  detail::require_square(m.F, n, "F");
  detail::require_square(m.G, n, "G");
  detail::require_square(m.H, n, "H");
  detail::require_square(m.Sigma0, n, "Sigma0");
  if (m.c.size() != n) throw ConfigError("c must have one entry per market");
  if (m.mu0.size() != n) throw ConfigError("mu0 must have one entry per market");
  if (!m.D.allFinite() || !m.F.allFinite() || !m.G.allFinite() || !m.H.allFinite() ||
      !m.c.allFinite() || !m.mu0.allFinite() || !m.Sigma0.allFinite())
    throw ConfigError("model contains non-finite entries");
  if (!detail::is_invertible(m.D)) throw ConfigError("D must be invertible");
  if (!detail::is_invertible(m.G)) throw ConfigError("G must be invertible");

  const double scale = std::max(1.0, m.Sigma0.cwiseAbs().maxCoeff());
  if ((m.Sigma0 - m.Sigma0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError("Sigma0 must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(detail::symmetrize(m.Sigma0));
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-12 * scale) throw ConfigError("Sigma0 must be positive semidefinite");
  if (!detail::is_invertible(m.H) && !(min_eig > 0.0))
    throw ConfigError("Sigma0 must be positive definite when H is singular");
}

inline Belief prior(const StateSpaceModel& m) { return Belief{0, m.mu0, m.Sigma0}; }

struct Prediction {
  Vector mean;
  Matrix covariance;
};

// One-step prior propagation without a measurement.
inline Prediction predict(const Belief& belief, const StateSpaceModel& model) {
  Matrix cov = model.D * belief.Sigma * model.D.transpose() + model.F * model.F.transpose();
  return {model.D * belief.mu, detail::symmetrize(cov)};
}

// K = D S G' (G S G' + H H')^-1
inline Matrix kalman_gain(const Matrix& Sigma, const StateSpaceModel& model) {
  const Matrix innov = detail::innovation_covariance(Sigma, model);
  // innov is symmetric, so K' = innov^-1 (G S D').
  const Matrix rhs = model.G * Sigma * model.D.transpose();
  return innov.partialPivLu().solve(rhs).transpose();
}

inline KalmanStep update(const Belief& belief, const Vector& signal, const StateSpaceModel& model) {
  if (signal.size() != model.n()) throw ConfigError("signal dimension does not match model");
  const Matrix K = kalman_gain(belief.Sigma, model);

  Belief next;
  next.t = belief.t + 1;
  next.mu = K * signal + (model.D - K * model.G) * belief.mu;
  const Matrix cov = model.D * belief.Sigma * model.D.transpose() +
                     model.F * model.F.transpose() -
                     K * model.G * belief.Sigma * model.D.transpose();
  next.Sigma = detail::symmetrize(cov);

  KalmanStep step;
  step.normalized_gain = model.D.partialPivLu().solve(K);
  step.gain = K;
  step.next_belief = std::move(next);
  return step;
}

// Observed demand plus the myopic price: q + (mu + c)/2 = theta + gamma.
inline Vector unbiased_signal(const Vector& q, const Vector& mu, const Vector& c) {
  return q + 0.5 * (mu + c);
}

// Variance of the signal G^-1 S_t around the state: S + G^-1 H H' G'^-1.
inline Matrix signal_variance(const Matrix& Sigma, const StateSpaceModel& model) {
  const auto lu = model.G.partialPivLu();
  const Matrix ginv_h = lu.solve(model.H);
  return detail::symmetrize(Sigma + ginv_h * ginv_h.transpose());
}

// Weight applied (from the left) to the unbiased signal G^-1 S_t:
// S G' (G S G' + H H')^-1 G. Equals D^-1 K G.
inline Matrix bayesian_weight(const Matrix& Sigma, const StateSpaceModel& model) {
  const Matrix innov = detail::innovation_covariance(Sigma, model);
  return Sigma * model.G.transpose() * innov.partialPivLu().solve(model.G);
}

}  // namespace dynvoi
