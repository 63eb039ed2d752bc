#pragma once

// Monte Carlo simulation of a myopic multi-market monopolist that learns its
// demand potentials through the Kalman filter.
//
// Per path and period t:
//   p_t = (mu_t + c) / 2
//   q_t = theta_t - p_t + gamma_t
//   S_t = G theta_t + H gamma_t
//   mu_{t+1} = K_t S_t + (D - K_t G) mu_t
//   theta_{t+1} = D theta_t + F e_{t+1}
//
// Random numbers: path i draws from its own mt19937_64 seeded by
// seed_seq{seed, i}, so a path does not depend on how many paths run.
// Normals come from boost.random's ziggurat sampler. Draw order per period
// is gamma_t (n values) then e_{t+1} (n values); theta_0 is drawn first.

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynvoi/errors.hpp"
#include "dynvoi/filter.hpp"

namespace dynvoi {

inline constexpr const char* kRngTag = "mt19937_64/seed_seq(seed,path)+boost-ziggurat-normal";

struct SimConfig {
  StateSpaceModel model;
  std::size_t horizon = 20;
  std::size_t paths = 1000;
  std::uint64_t seed = 42;
  std::uint64_t first_path = 0;  // stream index of the first path (for sharding)
};

// Cross-path summary of a single period.
struct PeriodStats {
  std::size_t t = 0;
  Vector mean_price, var_price;
  double mean_profit = 0.0, var_profit = 0.0;  // total over markets
  Vector mean_error, var_error;                // mu_t - theta_t
  Vector mean_sq_error, var_sq_error;
  Vector mean_belief;                          // path-averaged mu_t
  Matrix sigma_predicted;                      // filter Sigma_t
  Matrix gain;                                 // K_t applied after pricing at t
  // Per-path myopic expected profit sum_i (mu_t,i - c_i)^2 / 4 and its lagged
  // counterpart sum_i ((D mu_{t-1})_i - c_i)^2 / 4, averaged over paths, with
  // the variance of (profit - baseline) for paired standard errors.
  double mean_baseline_current = 0.0, var_profit_minus_current = 0.0;
  double mean_baseline_lagged = 0.0, var_profit_minus_lagged = 0.0;
};

struct InnovationStats {
  std::size_t samples = 0;         // (path, period) pairs
  double corr_with_belief = 0.0;   // market 0, innovation vs mu_t
  std::size_t lag_samples = 0;
  double lag1_autocorr = 0.0;      // market 0, standardized innovations
};

struct SimResult {
  std::vector<PeriodStats> periods;
  InnovationStats innovations;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
};

inline Vector myopic_price(const Vector& mu, const Vector& c) { return 0.5 * (mu + c); }

inline Vector realize_demand(const Vector& theta, const Vector& p, const Vector& gamma) {
  return theta - p + gamma;
}

struct ProfitDecomposition {
  Vector baseline;  // (D^t mu - c)^2 / 4
  Vector voi_term;  // diag(K Sigma K') / 4
};

inline ProfitDecomposition profit_decomposition(const Vector& mu, const Vector& c, std::size_t t,
                                                const StateSpaceModel& model, const Matrix& K,
                                                const Matrix& Sigma) {
  const auto n = model.n();
  if (mu.size() != n || c.size() != n || K.rows() != n || K.cols() != n || Sigma.rows() != n ||
      Sigma.cols() != n)
    throw ConfigError("profit_decomposition: dimension mismatch");
  Matrix power = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < t; ++i) power = model.D * power;
  const Vector markup = power * mu - c;
  return {0.25 * markup.array().square().matrix(),
          0.25 * (K * Sigma * K.transpose()).diagonal()};
}

// Deterministic covariance/gain sequence of the filter, Sigma_0..Sigma_T and
// K_0..K_{T-1}. It does not depend on realized signals.
struct FilterSchedule {
  std::vector<Matrix> sigma;
  std::vector<Matrix> gain;
};

inline FilterSchedule filter_schedule(const StateSpaceModel& model, std::size_t horizon) {
  FilterSchedule s;
  Belief b = prior(model);
  s.sigma.push_back(b.Sigma);
  const Vector zero = Vector::Zero(model.n());
  for (std::size_t t = 0; t < horizon; ++t) {
    KalmanStep step = update(b, zero, model);
    s.gain.push_back(step.gain);
    b = std::move(step.next_belief);
    s.sigma.push_back(b.Sigma);
  }
  return s;
}

namespace detail {

// Symmetric square root of a PSD matrix (works for singular covariances).
inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(double n) const { return sum / n; }
  // Unbiased sample variance; 0 for a single sample.
  double var(double n) const {
    if (n < 2.0) return 0.0;
    const double m = sum / n;
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  }
};

}  // namespace detail

inline void validate(const SimConfig& config) {
  validate(config.model);
  if (config.horizon < 1) throw ConfigError("simulation horizon must be at least 1");
  if (config.paths < 1) throw ConfigError("simulation needs at least one path");
}

inline SimResult simulate(const SimConfig& config) {
  validate(config);
  const StateSpaceModel& m = config.model;
  const auto n = m.n();
  const std::size_t T = config.horizon;
  const FilterSchedule sched = filter_schedule(m, T);
  const Matrix prior_root = detail::psd_sqrt(m.Sigma0);

  // Innovation standardization per period (market 0).
  std::vector<double> innov_sd(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Matrix iv = m.G * sched.sigma[t] * m.G.transpose() + m.H * m.H.transpose();
    innov_sd[t] = std::sqrt(iv(0, 0));
  }

  struct PeriodAccum {
    std::vector<detail::Moments> price, error, sq_error;
    detail::Moments profit, current, lagged;
    detail::Moments profit_minus_current, profit_minus_lagged;
    Vector belief_sum;
  };
  std::vector<PeriodAccum> acc(T);
  for (auto& a : acc) {
    a.price.resize(n);
    a.error.resize(n);
    a.sq_error.resize(n);
    a.belief_sum = Vector::Zero(n);
  }
  // Pooled innovation/belief moments for market 0.
  double sz = 0, szz = 0, smu = 0, smumu = 0, szmu = 0;
  double lag_sxy = 0, lag_sx = 0, lag_sy = 0, lag_sxx = 0, lag_syy = 0;
  std::size_t lag_n = 0;

  boost::random::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n), gamma(n), e(n);
  for (std::size_t path = 0; path < config.paths; ++path) {
    auto rng = detail::path_engine(config.seed, config.first_path + path);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    Vector theta = m.mu0 + prior_root * z;
    Vector mu = m.mu0;
    Vector mu_prev = mu;
    double prev_innov = 0.0;

    for (std::size_t t = 0; t < T; ++t) {
      for (Eigen::Index i = 0; i < n; ++i) gamma(i) = normal(rng);
      for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(rng);

      const Vector p = myopic_price(mu, m.c);
      const Vector q = realize_demand(theta, p, gamma);
      const double profit = (p - m.c).dot(q);
      const Vector signal = m.G * theta + m.H * gamma;
      const Vector err = mu - theta;

      auto& a = acc[t];
      for (Eigen::Index i = 0; i < n; ++i) {
        a.price[i].add(p(i));
        a.error[i].add(err(i));
        a.sq_error[i].add(err(i) * err(i));
      }
      a.belief_sum += mu;
      a.profit.add(profit);
      const double current = 0.25 * (mu - m.c).squaredNorm();
      a.current.add(current);
      a.profit_minus_current.add(profit - current);
      if (t > 0) {
        const double lagged = 0.25 * (m.D * mu_prev - m.c).squaredNorm();
        a.lagged.add(lagged);
        a.profit_minus_lagged.add(profit - lagged);
      }

      const double innov = (signal - m.G * mu)(0) / innov_sd[t];
      sz += innov;
      szz += innov * innov;
      smu += mu(0);
      smumu += mu(0) * mu(0);
      szmu += innov * mu(0);
      if (t > 0) {
        lag_sx += prev_innov;
        lag_sy += innov;
        lag_sxx += prev_innov * prev_innov;
        lag_syy += innov * innov;
        lag_sxy += prev_innov * innov;
        ++lag_n;
      }
      prev_innov = innov;

      mu_prev = mu;
      const Matrix& K = sched.gain[t];
      mu = K * signal + (m.D - K * m.G) * mu;
      theta = m.D * theta + m.F * e;
    }
  }

  SimResult out;
  out.seed = config.seed;
  out.paths = config.paths;
  const double N = static_cast<double>(config.paths);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& a = acc[t];
    PeriodStats s;
    s.t = t;
    s.mean_price = s.var_price = s.mean_error = s.var_error = s.mean_sq_error =
        s.var_sq_error = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s.mean_price(i) = a.price[i].mean(N);
      s.var_price(i) = a.price[i].var(N);
      s.mean_error(i) = a.error[i].mean(N);
      s.var_error(i) = a.error[i].var(N);
      s.mean_sq_error(i) = a.sq_error[i].mean(N);
      s.var_sq_error(i) = a.sq_error[i].var(N);
    }
    s.mean_belief = a.belief_sum / N;
    s.mean_profit = a.profit.mean(N);
    s.var_profit = a.profit.var(N);
    s.sigma_predicted = sched.sigma[t];
    s.gain = sched.gain[t];
    s.mean_baseline_current = a.current.mean(N);
    s.var_profit_minus_current = a.profit_minus_current.var(N);
    if (t > 0) {
      s.mean_baseline_lagged = a.lagged.mean(N);
      s.var_profit_minus_lagged = a.profit_minus_lagged.var(N);
    }
    out.periods.push_back(std::move(s));
  }

  const double NT = N * static_cast<double>(T);
  const double cov_zmu = szmu / NT - (sz / NT) * (smu / NT);
  const double var_z = szz / NT - (sz / NT) * (sz / NT);
  const double var_mu = smumu / NT - (smu / NT) * (smu / NT);
  out.innovations.samples = static_cast<std::size_t>(NT);
  out.innovations.corr_with_belief =
      (var_z > 0.0 && var_mu > 0.0) ? cov_zmu / std::sqrt(var_z * var_mu) : 0.0;
  if (lag_n > 0) {
    const double L = static_cast<double>(lag_n);
    const double cxy = lag_sxy / L - (lag_sx / L) * (lag_sy / L);
    const double vx = lag_sxx / L - (lag_sx / L) * (lag_sx / L);
    const double vy = lag_syy / L - (lag_sy / L) * (lag_sy / L);
    out.innovations.lag_samples = lag_n;
    out.innovations.lag1_autocorr = (vx > 0.0 && vy > 0.0) ? cxy / std::sqrt(vx * vy) : 0.0;
  }
  return out;
}

}  // namespace dynvoi
