#pragma once

// Stage value of information K Sigma K' and the growth region in which it is
// non-monotone in the signal noise.

#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "dynvoi/errors.hpp"
#include "dynvoi/filter.hpp"
#include "dynvoi/numerics.hpp"
#include "dynvoi/steady_state.hpp"

namespace dynvoi {

enum class Curvature { MaxAtZero, MinAtZero, Degenerate };

inline std::string_view to_string(Curvature c) {
  switch (c) {
    case Curvature::MaxAtZero: return "MaxAtZero";
    case Curvature::MinAtZero: return "MinAtZero";
    case Curvature::Degenerate: return "Degenerate";
  }
  return "Degenerate";
}

struct VoIPoint {
  double h;
  double voi;
};

struct VoICurve {
  std::vector<double> h_grid;
  std::vector<double> voi;
  std::vector<double> pro_rata;
  std::vector<double> sigma_star;
  std::vector<double> k_star;
  Curvature classification = Curvature::Degenerate;
  std::optional<VoIPoint> interior_min;
};

struct GrowthRegion {
  double g;
  double d_lower = 1.0;
  double d_upper;
};

inline Matrix voi_stage(const Matrix& K, const Matrix& Sigma) {
  if (K.cols() != Sigma.rows() || Sigma.rows() != Sigma.cols())
    throw ConfigError("voi_stage: dimension mismatch");
  return detail::symmetrize(K * Sigma * K.transpose());
}

inline Matrix voi_pro_rata(const Matrix& K, const Matrix& Sigma) {
  if (K.cols() != Sigma.rows()) throw ConfigError("voi_pro_rata: dimension mismatch");
  return K * Sigma;
}

// Upper end of the growth range with a VoI maximum at zero noise:
// sqrt(4g^4 + 8g^2 + 3) / (2g^2 + 1) = sqrt((2g^2 + 3) / (2g^2 + 1)).
inline GrowthRegion growth_threshold(double g) {
  if (!(g > 0.0)) throw DomainError("growth_threshold: g must be positive");
  const double g2 = g * g;
  return GrowthRegion{g, 1.0, std::sqrt(4.0 * g2 * g2 + 8.0 * g2 + 3.0) / (2.0 * g2 + 1.0)};
}

// Closed-form second derivative of K Sigma K' in the noise at h = 0, as used
// for the classification: (d^2/g^4)(2 g^2 (d^2 - 1) + d^2 - 3).
inline double curvature_at_zero(double d, double g) {
  if (!(g > 0.0)) throw DomainError("curvature_at_zero: g must be positive");
  const double d2 = d * d;
  return d2 / (g * g * g * g) * (2.0 * g * g * (d - 1.0) * (d + 1.0) + d2 - 3.0);
}

// Steady-state scalar quantities as functions of the noise loading h. They
// depend on h only through h^2, so negative h is accepted (finite-difference
// stencils around 0 use it).
inline double steady_sigma(double d, double f, double g, double h) {
  return sigma_star_closed_form(d, f, g, std::abs(h));
}

inline double steady_gain(double d, double f, double g, double h) {
  return gain_star(d, g, h, steady_sigma(d, f, g, h));
}

inline double steady_voi(double d, double f, double g, double h) {
  const double s = steady_sigma(d, f, g, h);
  const double k = gain_star(d, g, h, s);
  return k * k * s;
}

inline double steady_pro_rata(double d, double f, double g, double h) {
  const double s = steady_sigma(d, f, g, h);
  return gain_star(d, g, h, s) * s;
}

inline constexpr double kFiniteDifferenceStep = 1e-3;
inline constexpr double kNumericCurvatureThreshold = 1e-6;
inline constexpr double kAnalyticCurvatureThreshold = 1e-9;

// Numeric second derivative of the steady-state VoI in h at h = 0.
inline double voi_curvature_numeric(double d, double f, double g,
                                    double step = kFiniteDifferenceStep) {
  return second_derivative_richardson([&](double h) { return steady_voi(d, f, g, h); }, 0.0,
                                      step);
}

inline double pro_rata_curvature_numeric(double d, double f, double g,
                                         double step = kFiniteDifferenceStep) {
  return second_derivative_richardson([&](double h) { return steady_pro_rata(d, f, g, h); },
                                      0.0, step);
}

// Sign (-1, 0, +1) of the second derivative of K* Sigma* at h = 0.
inline int pro_rata_curvature_sign(double d, double f, double g) {
  if (d < 1.0 || !(f > 0.0) || !(g > 0.0))
    throw DomainError("pro_rata_curvature_sign: requires d >= 1, f > 0, g > 0");
  return sign_with_threshold(pro_rata_curvature_numeric(d, f, g), kNumericCurvatureThreshold);
}

inline Curvature classify(double d, double g) {
  const double k = curvature_at_zero(d, g);
  if (std::abs(k) < kAnalyticCurvatureThreshold) return Curvature::Degenerate;
  return k < 0.0 ? Curvature::MaxAtZero : Curvature::MinAtZero;
}

inline void validate_noise_grid(const std::vector<double>& h_grid) {
  if (h_grid.empty()) throw ConfigError("noise grid is empty");
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!std::isfinite(h_grid[i]) || h_grid[i] < 0.0)
      throw ConfigError("noise grid values must be finite and non-negative");
    if (i > 0 && !(h_grid[i] > h_grid[i - 1]))
      throw ConfigError("noise grid must be strictly increasing");
  }
}

inline constexpr double kInteriorMinTolerance = 1e-6;

inline VoICurve voi_curve(double d, double f, double g, const std::vector<double>& h_grid) {
  validate_noise_grid(h_grid);
  VoICurve curve;
  curve.h_grid = h_grid;
  for (double h : h_grid) {
    const double s = steady_sigma(d, f, g, h);
    const double k = gain_star(d, g, h, s);
    curve.sigma_star.push_back(s);
    curve.k_star.push_back(k);
    curve.voi.push_back(k * k * s);
    curve.pro_rata.push_back(k * s);
  }
  curve.classification = classify(d, g);

  if (curve.classification != Curvature::MaxAtZero || !(d > 1.0)) return curve;

  // First descending segment followed by the first ascending one brackets
  // the interior minimum.
  const auto& v = curve.voi;
  std::size_t i = 1;
  while (i < v.size() && !(v[i] < v[i - 1])) ++i;
  if (i >= v.size()) return curve;
  while (i + 1 < v.size() && !(v[i + 1] > v[i])) ++i;
  if (i + 1 >= v.size()) return curve;

  const auto best = golden_section_minimize([&](double h) { return steady_voi(d, f, g, h); },
                                            h_grid[i - 1], h_grid[i + 1],
                                            kInteriorMinTolerance);
  curve.interior_min = VoIPoint{best.x, best.value};
  return curve;
}

}  // namespace dynvoi
