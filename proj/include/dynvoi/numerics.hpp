#pragma once

#include <cmath>
#include <utility>

namespace dynvoi {

struct ScalarMinimum {
  double x;
  double value;
};

// Golden-section search for a minimum of a unimodal f on [lo, hi].
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  if (hi < lo) std::swap(lo, hi);
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  // Endpoints are checked too so that a minimum sitting on the bracket edge
  // is returned exactly.
  ScalarMinimum best{0.5 * (a + b), f(0.5 * (a + b))};
  for (double x : {lo, hi}) {
    const double v = f(x);
    if (v < best.value) best = {x, v};
  }
  return best;
}

template <class F>
ScalarMinimum golden_section_maximize(F&& f, double lo, double hi, double tol) {
  auto r = golden_section_minimize([&](double x) { return -f(x); }, lo, hi, tol);
  return {r.x, -r.value};
}

// Central second difference (f(x+s) - 2 f(x) + f(x-s)) / s^2.
template <class F>
double central_second_difference(F&& f, double x, double step) {
  return (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step);
}

// Second derivative by central differences at `step` and `step/2` combined
// with one Richardson extrapolation (error O(step^4)).
template <class F>
double second_derivative_richardson(F&& f, double x, double step = 1e-3) {
  const double coarse = central_second_difference(f, x, step);
  const double fine = central_second_difference(f, x, 0.5 * step);
  return (4.0 * fine - coarse) / 3.0;
}

inline int sign_with_threshold(double value, double threshold) {
  if (std::abs(value) < threshold) return 0;
  return value > 0.0 ? 1 : -1;
}

}  // namespace dynvoi
