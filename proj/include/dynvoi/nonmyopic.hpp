#pragma once

// Scalar non-myopic pricing with multiplicative slope noise.
//
//   q = theta - b beta p + h gamma,  beta ~ N(1, 1), gamma ~ N(0, 1)
//   theta_{t+1} = d theta_t + f e_{t+1}
//
// Prior-predictive signal variance X = Sigma + b^2 p^2 + h^2 couples the
// price to learning through the gain K = Sigma / X:
//
//   mu'    = d (K S + (1 - K) mu) = d (mu + K sqrt(X) eps),  eps ~ N(0, 1)
//   Sigma' = d^2 (1 - K) Sigma + f^2
//
// The Bellman problem over (mu, Sigma) is solved by value iteration with
// tensor cubic Hermite interpolation, Gauss-Hermite expectations over eps, and a
// golden-section price search at each node.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "dynvoi/errors.hpp"
#include "dynvoi/gauss_hermite.hpp"
#include "dynvoi/numerics.hpp"
#include "dynvoi/steady_state.hpp"

namespace dynvoi {

struct NonMyopicModel {
  double d = 1.0;
  double f = 1.0;
  double h = 1.0;
  double b = 1.0;
  double c = 0.0;
  double delta = 0.9;
};

// delta = 0 is admitted as the myopic boundary case.
inline void validate(const NonMyopicModel& m) {
  for (double x : {m.d, m.f, m.h, m.b, m.c, m.delta})
    if (!std::isfinite(x)) throw ConfigError("non-myopic model contains non-finite values");
  if (!(m.delta >= 0.0 && m.delta < 1.0)) throw ConfigError("delta must lie in [0, 1)");
  if (m.d < 1.0) throw ConfigError("growth d must be >= 1");
  if (m.f < 0.0 || m.h < 0.0) throw ConfigError("f and h must be non-negative");
  if (!(m.b > 0.0)) throw ConfigError("slope loading b must be positive");
}

inline double nm_signal_variance(double Sigma, double p, const NonMyopicModel& m) {
  return Sigma + m.b * m.b * p * p + m.h * m.h;
}

inline double nm_gain(double Sigma, double p, const NonMyopicModel& m) {
  const double x = nm_signal_variance(Sigma, p, m);
  if (x == 0.0) throw DomainError("nm_gain: signal variance is zero");
  return Sigma / x;
}

struct NmBelief {
  double mu;
  double Sigma;
};

inline NmBelief nm_update(double mu, double Sigma, double signal, double p,
                          const NonMyopicModel& m) {
  const double k = nm_gain(Sigma, p, m);
  return {m.d * (k * signal + (1.0 - k) * mu), m.d * m.d * (1.0 - k) * Sigma + m.f * m.f};
}

// Root of the expected marginal profit mu + b c - 2 b p.
inline double myopic_foc_price(double mu, const NonMyopicModel& m) {
  if (m.b == 0.0) throw DomainError("myopic_foc_price: b must be nonzero");
  return (mu + m.b * m.c) / (2.0 * m.b);
}

// E{Pi} = (p - c)(mu - b p) after integrating out beta and gamma.
inline double nm_expected_profit(double mu, double p, const NonMyopicModel& m) {
  return (p - m.c) * (mu - m.b * p);
}

// Long-run belief variance at a fixed price: the additive-noise closed form
// with g = 1 and h^2 replaced by h^2 + b^2 p^2.
inline double nm_sigma_star(double p, const NonMyopicModel& m) {
  return sigma_star_closed_form(m.d, m.f, 1.0, std::sqrt(m.h * m.h + m.b * m.b * p * p));
}

// Fixed-price iteration of the variance recursion, from Sigma = 0.
inline double nm_sigma_iterate(double p, const NonMyopicModel& m, double tol = 1e-13,
                               std::size_t max_iter = 10'000'000) {
  double s = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double x = nm_signal_variance(s, p, m);
    const double next = x == 0.0 ? m.f * m.f : m.d * m.d * (1.0 - s / x) * s + m.f * m.f;
    const double step = std::abs(next - s);
    s = next;
    if (step <= tol * std::max(1.0, s)) return s;
  }
  throw NoConvergence("fixed-price variance iteration did not converge", INFINITY);
}

// Simplified Euler-equation weight on the information trade-off:
// -2 b^2 p Sigma / (Sigma + 2 b^2 p^2 + 2 h^2).
inline double euler_term(double p, double Sigma, const NonMyopicModel& m) {
  const double b2 = m.b * m.b;
  const double denom = Sigma + 2.0 * b2 * p * p + 2.0 * m.h * m.h;
  if (denom == 0.0) throw DomainError("euler_term: denominator is zero");
  return -2.0 * b2 * p * Sigma / denom;
}

// Large-noise limit of euler_term at the long-run variance.
inline double euler_term_limit(double p, const NonMyopicModel& m) {
  if (m.d < 1.0) throw DomainError("euler_term_limit: requires d >= 1");
  const double d2 = m.d * m.d;
  return -2.0 * m.b * m.b * p * (m.d - 1.0) * (m.d + 1.0) / (d2 + 1.0);
}

// One grid axis with O(1) lookup for uniform and geometric spacing.
class GridAxis {
 public:
  struct Location {
    std::size_t index;  // left node of the bracketing segment
    double weight;      // weight on index + 1
    bool clamped;
  };

  GridAxis() = default;
  explicit GridAxis(std::vector<double> nodes) : x_(std::move(nodes)) {
    if (x_.empty()) throw ConfigError("grid axis needs at least one node");
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!std::isfinite(x_[i])) throw ConfigError("grid nodes must be finite");
      if (i > 0 && !(x_[i] > x_[i - 1])) throw ConfigError("grid nodes must be increasing");
    }
    detect_spacing();
  }

  static GridAxis linear(double lo, double hi, std::size_t n) {
    if (n == 1) return GridAxis({lo});
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = hi;
    return GridAxis(std::move(v));
  }

  static GridAxis geometric(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0)) throw ConfigError("geometric grid needs a positive lower end");
    if (n == 1) return GridAxis({lo});
    std::vector<double> v(n);
    const double ratio = std::log(hi / lo);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
    v.front() = lo;
    v.back() = hi;
    return GridAxis(std::move(v));
  }

  // Matrix mapping nodal values to nodal slopes of the not-a-knot cubic
  // spline through them. Three nodes give the interpolating parabola, two
  // the secant.
  Eigen::MatrixXd derivative_matrix() const {
    const std::size_t n = x_.size();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    if (n == 2) {
      const double w = 1.0 / (x_[1] - x_[0]);
      D << -w, w, -w, w;
      return D;
    }
    if (n == 3) {
      const double h0 = x_[1] - x_[0], h1 = x_[2] - x_[1];
      D.row(0) << -(2.0 * h0 + h1) / (h0 * (h0 + h1)), (h0 + h1) / (h0 * h1), -h0 / (h1 * (h0 + h1));
      D.row(1) << -h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1));
      D.row(2) << h1 / (h0 * (h0 + h1)), -(h0 + h1) / (h0 * h1), (2.0 * h1 + h0) / (h1 * (h0 + h1));
      return D;
    }
    if (n < 2) return D;
    // A m = B y, where B y holds the secant-slope combinations.
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    // Row r of B applied to y gives sum_k coef_k * secant_k.
    auto add_secant = [&](std::size_t r, std::size_t k, double coef) {
      B(r, k) -= coef / h[k];
      B(r, k + 1) += coef / h[k];
    };
    {
      const double h0 = h[0], h1 = h[1];
      A(0, 0) = h1;
      A(0, 1) = h0 + h1;
      add_secant(0, 0, (h0 + 2.0 * (h0 + h1)) * h1 / (h0 + h1));
      add_secant(0, 1, h0 * h0 / (h0 + h1));
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      A(i, i - 1) = h[i];
      A(i, i) = 2.0 * (h[i - 1] + h[i]);
      A(i, i + 1) = h[i - 1];
      add_secant(i, i - 1, 3.0 * h[i]);
      add_secant(i, i, 3.0 * h[i - 1]);
    }
    {
      const double ha = h[n - 3], hb = h[n - 2];
      A(n - 1, n - 2) = ha + hb;
      A(n - 1, n - 1) = ha;
      add_secant(n - 1, n - 3, hb * hb / (ha + hb));
      add_secant(n - 1, n - 2, (2.0 * (ha + hb) + hb) * ha / (ha + hb));
    }
    return A.partialPivLu().solve(B);
  }

  const std::vector<double>& nodes() const { return x_; }
  std::size_t size() const { return x_.size(); }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  double operator[](std::size_t i) const { return x_[i]; }

  Location locate(double v) const {
    const std::size_t n = x_.size();
    if (n == 1) return {0, 0.0, v != x_[0]};
    if (v <= x_.front()) return {0, 0.0, v < x_.front()};
    if (v >= x_.back()) return {n - 2, 1.0, v > x_.back()};
    std::size_t i = guess(v);
    while (i > 0 && x_[i] > v) --i;
    while (i + 2 < n && x_[i + 1] <= v) ++i;
    return {i, (v - x_[i]) / (x_[i + 1] - x_[i]), false};
  }

 private:
  enum class Spacing { Uniform, Geometric, General };

  void detect_spacing() {
    spacing_ = Spacing::General;
    const std::size_t n = x_.size();
    if (n < 3) return;
    const double step = (x_.back() - x_.front()) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n && uniform; ++i)
      uniform = std::abs((x_[i] - x_[i - 1]) - step) <= 1e-9 * std::abs(step);
    if (uniform) {
      spacing_ = Spacing::Uniform;
      inv_step_ = 1.0 / step;
      return;
    }
    if (x_.front() > 0.0) {
      const double lstep = std::log(x_.back() / x_.front()) / static_cast<double>(n - 1);
      bool geometric = true;
      for (std::size_t i = 1; i < n && geometric; ++i)
        geometric = std::abs(std::log(x_[i] / x_[i - 1]) - lstep) <= 1e-9 * std::abs(lstep);
      if (geometric) {
        spacing_ = Spacing::Geometric;
        inv_step_ = 1.0 / lstep;
      }
    }
  }

  std::size_t guess(double v) const {
    const std::size_t last = x_.size() - 2;
    double pos;
    switch (spacing_) {
      case Spacing::Uniform: pos = (v - x_.front()) * inv_step_; break;
      case Spacing::Geometric: pos = std::log(v / x_.front()) * inv_step_; break;
      default:
        return static_cast<std::size_t>(
            std::max<std::ptrdiff_t>(0, std::upper_bound(x_.begin(), x_.end(), v) - x_.begin() - 1));
    }
    if (!(pos > 0.0)) return 0;
    return std::min(last, static_cast<std::size_t>(pos));
  }

  std::vector<double> x_;
  Spacing spacing_ = Spacing::General;
  double inv_step_ = 0.0;
};

namespace detail {

// Cubic Hermite basis on a unit segment: weights on the two end values and
// the two end slopes (slopes already scaled by the segment width).
struct HermiteWeights {
  double v0, v1, s0, s1;
};

inline HermiteWeights hermite(double t, double width) {
  const double t2 = t * t, t3 = t2 * t;
  return {2.0 * t3 - 3.0 * t2 + 1.0, -2.0 * t3 + 3.0 * t2, (t3 - 2.0 * t2 + t) * width,
          (t3 - t2) * width};
}

}  // namespace detail

struct ValueFunctionGrid {
  GridAxis mu_grid;
  GridAxis sigma_grid;
  Eigen::MatrixXd values;  // [mu index, sigma index]
  Eigen::MatrixXd policy;
  double sweep_residual = INFINITY;
  std::size_t sweeps = 0;
  std::size_t clamp_count = 0;  // clamped next states at the final policy
  int quadrature_order = 9;
  std::vector<double> residual_history;

  // Nodal slopes for the interpolant; rebuilt by refresh_slopes().
  Eigen::MatrixXd d_mu, d_sigma, d_mu_sigma;

  void refresh_slopes() {
    const Eigen::MatrixXd Dm = mu_grid.derivative_matrix();
    const Eigen::MatrixXd Ds = sigma_grid.derivative_matrix();
    d_mu = Dm * values;
    d_sigma = values * Ds.transpose();
    d_mu_sigma = d_mu * Ds.transpose();
  }

  // Tensor cubic Hermite interpolation, holding the edge value outside the
  // grid. Call refresh_slopes() after changing `values`.
  double value_at(double mu, double sigma, bool* clamped = nullptr) const {
    const auto a = mu_grid.locate(mu);
    const auto s = sigma_grid.locate(sigma);
    if (clamped) *clamped = a.clamped || s.clamped;
    const std::size_t i = a.index, j = s.index;
    const bool mu_single = mu_grid.size() == 1, sig_single = sigma_grid.size() == 1;
    if (mu_single && sig_single) return values(0, 0);

    const auto hm = mu_single ? detail::HermiteWeights{1.0, 0.0, 0.0, 0.0}
                              : detail::hermite(a.weight, mu_grid[i + 1] - mu_grid[i]);
    const auto hs = sig_single ? detail::HermiteWeights{1.0, 0.0, 0.0, 0.0}
                               : detail::hermite(s.weight, sigma_grid[j + 1] - sigma_grid[j]);
    const std::size_t i1 = mu_single ? i : i + 1, j1 = sig_single ? j : j + 1;
    auto corner = [&](std::size_t r, std::size_t c, double wm, double sm, double ws, double ss) {
      return wm * ws * values(r, c) + sm * ws * d_mu(r, c) + wm * ss * d_sigma(r, c) +
             sm * ss * d_mu_sigma(r, c);
    };
    return corner(i, j, hm.v0, hm.s0, hs.v0, hs.s0) + corner(i1, j, hm.v1, hm.s1, hs.v0, hs.s0) +
           corner(i, j1, hm.v0, hm.s0, hs.v1, hs.s1) + corner(i1, j1, hm.v1, hm.s1, hs.v1, hs.s1);
  }
};

struct BellmanOptions {
  double tol = 1e-6;
  std::size_t max_sweeps = 10'000;
  int quadrature_order = 9;
  double price_halfwidth = 3.0;
  double price_tol = 1e-6;
};

struct GridSpec {
  GridAxis mu;
  GridAxis sigma;
};

// Default grids: mu over [c - 2s, c + 4 d^10 s] (linear) with s = 1 + f + h,
// Sigma geometric over [f^2 / 2, 4 nm_sigma_star(p_max)] where p_max is the
// myopic price at the top of the mu grid. With f = 0 the Sigma axis is {0}.
inline GridSpec default_grid(const NonMyopicModel& m, std::size_t n_mu, std::size_t n_sigma) {
  validate(m);
  if (n_mu < 1 || n_sigma < 1) throw ConfigError("grid sizes must be positive");
  const double s = 1.0 + m.f + m.h;
  const double lo = m.c - 2.0 * s;
  const double hi = m.c + 4.0 * std::pow(m.d, 10.0) * s;
  GridSpec g{GridAxis::linear(lo, hi, n_mu), GridAxis({0.0})};
  if (m.f > 0.0) {
    const double p_max = myopic_foc_price(hi, m);
    g.sigma = GridAxis::geometric(0.5 * m.f * m.f, 4.0 * nm_sigma_star(p_max, m), n_sigma);
  }
  return g;
}

struct NextState {
  double Sigma;
  double gain;
  double spread;  // K sqrt(X)
};

// Sigma = 0 means the state is known: nothing to learn, K = 0.
inline NextState nm_transition(double Sigma, double p, const NonMyopicModel& m) {
  if (Sigma == 0.0) return {m.f * m.f, 0.0, 0.0};
  const double x = nm_signal_variance(Sigma, p, m);
  const double k = Sigma / x;
  return {m.d * m.d * (1.0 - k) * Sigma + m.f * m.f, k, k * std::sqrt(x)};
}

// E{Pi(p) + delta V(mu', Sigma')} with V read from `table`.
inline double bellman_objective(const ValueFunctionGrid& table, const GaussHermiteRule& rule,
                                double mu, double Sigma, double p, const NonMyopicModel& m,
                                std::size_t* clamps = nullptr) {
  const NextState next = nm_transition(Sigma, p, m);
  double ev = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    bool clamped = false;
    ev += rule.weights[k] *
          table.value_at(m.d * (mu + next.spread * rule.nodes[k]), next.Sigma, &clamped);
    if (clamped && clamps) ++*clamps;
  }
  return nm_expected_profit(mu, p, m) + m.delta * ev;
}

inline ScalarMinimum best_price(const ValueFunctionGrid& table, const GaussHermiteRule& rule,
                                double mu, double Sigma, const NonMyopicModel& m,
                                const BellmanOptions& opts) {
  const double center = myopic_foc_price(mu, m);
  return golden_section_maximize(
      [&](double p) { return bellman_objective(table, rule, mu, Sigma, p, m); },
      center - opts.price_halfwidth, center + opts.price_halfwidth, opts.price_tol);
}

// Synchronous (Jacobi) value iteration starting from V = 0.
inline ValueFunctionGrid solve_bellman(const NonMyopicModel& m, const GridSpec& grid,
                                       BellmanOptions opts = {}) {
  validate(m);
  if (!(opts.tol > 0.0)) throw ConfigError("Bellman tolerance must be positive");
  if (opts.max_sweeps < 1) throw ConfigError("Bellman max_sweeps must be at least 1");
  if (grid.sigma.front() < 0.0) throw ConfigError("Sigma grid must be non-negative");

  const GaussHermiteRule rule = gauss_hermite_normal(opts.quadrature_order);
  const std::size_t nm = grid.mu.size(), ns = grid.sigma.size();

  ValueFunctionGrid cur;
  cur.mu_grid = grid.mu;
  cur.sigma_grid = grid.sigma;
  cur.quadrature_order = opts.quadrature_order;
  cur.values = Eigen::MatrixXd::Zero(nm, ns);
  cur.policy = Eigen::MatrixXd::Zero(nm, ns);
  cur.refresh_slopes();
  ValueFunctionGrid next = cur;

  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      for (std::size_t i = 0; i < nm; ++i) {
        const auto best = best_price(cur, rule, grid.mu[i], grid.sigma[j], m, opts);
        next.values(i, j) = best.value;
        next.policy(i, j) = best.x;
        change = std::max(change, std::abs(best.value - cur.values(i, j)));
      }
    }
    std::swap(cur.values, next.values);
    std::swap(cur.policy, next.policy);
    cur.refresh_slopes();
    cur.sweeps = sweep;
    cur.sweep_residual = change;
    cur.residual_history.push_back(change);
    if (change <= opts.tol) {
      std::size_t clamps = 0;
      for (std::size_t j = 0; j < ns; ++j)
        for (std::size_t i = 0; i < nm; ++i)
          bellman_objective(cur, rule, grid.mu[i], grid.sigma[j], cur.policy(i, j), m, &clamps);
      cur.clamp_count = clamps;
      return cur;
    }
  }
  throw NoConvergence("value iteration did not converge in " + std::to_string(opts.max_sweeps) +
                          " sweeps (residual " + std::to_string(cur.sweep_residual) + ")",
                      cur.sweep_residual);
}

// Centered difference of the interpolated V in Sigma, using the width of the
// grid segment that contains Sigma as the step.
inline double value_sigma_slope(const ValueFunctionGrid& V, double mu, double Sigma) {
  const auto& axis = V.sigma_grid;
  if (axis.size() < 2) throw GridEscape("Sigma derivative needs at least two Sigma nodes");
  const auto loc = axis.locate(Sigma);
  const double step = axis[loc.index + 1] - axis[loc.index];
  if (loc.clamped || Sigma - step < axis.front() || Sigma + step > axis.back())
    throw GridEscape("Sigma finite-difference stencil leaves the grid");
  return (V.value_at(mu, Sigma + step) - V.value_at(mu, Sigma - step)) / (2.0 * step);
}

// E{dPi/dp} + euler_term(p, Sigma) (dV/dSigma - delta d^2 E{dV/dSigma'}).
// Zero at an optimal price when V solves the Bellman equation.
inline double euler_residual(const ValueFunctionGrid& V, double mu, double Sigma, double p,
                             const NonMyopicModel& m) {
  const double marginal = mu + m.b * m.c - 2.0 * m.b * p;
  const double weight = euler_term(p, Sigma, m);
  // Without discounting V does not depend on Sigma, so both slopes vanish.
  if (m.delta == 0.0 || weight == 0.0) return marginal;

  const auto mloc = V.mu_grid.locate(mu);
  if (mloc.clamped) throw GridEscape("mu outside the value grid");
  const GaussHermiteRule rule = gauss_hermite_normal(V.quadrature_order);
  const NextState next = nm_transition(Sigma, p, m);
  const double expected_next_slope = rule.expectation([&](double eps) {
    const double mu_next = m.d * (mu + next.spread * eps);
    if (V.mu_grid.locate(mu_next).clamped) throw GridEscape("next-period mu leaves the grid");
    return value_sigma_slope(V, mu_next, next.Sigma);
  });
  return marginal +
         weight * (value_sigma_slope(V, mu, Sigma) - m.delta * m.d * m.d * expected_next_slope);
}

}  // namespace dynvoi
