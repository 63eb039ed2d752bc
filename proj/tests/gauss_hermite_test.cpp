#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dynvoi/gauss_hermite.hpp"
#include "oracles.hpp"

using namespace dynvoi;

TEST(GaussHermite, WeightsSumToOneAndNodesSymmetric) {
  for (int n : {1, 2, 5, 9, 17, 40}) {
    const auto r = gauss_hermite_normal(n);
    ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(n));
    EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-13);
    for (int k = 0; k < n; ++k) {
      EXPECT_EQ(r.nodes[k], -r.nodes[n - 1 - k]);
      EXPECT_GT(r.weights[k], 0.0);
    }
  }
  EXPECT_THROW(gauss_hermite_normal(0), ConfigError);
}

TEST(GaussHermite, NormalMomentsExactToDegree2nMinus1) {
  const auto r = gauss_hermite_normal(9);
  double double_factorial = 1.0;  // (k-1)!!
  for (int k = 0; k <= 17; ++k) {
    const double m = r.expectation([k](double x) { return std::pow(x, k); });
    if (k % 2) {
      EXPECT_NEAR(m, 0.0, 1e-10) << k;
    } else {
      if (k >= 2) double_factorial *= (k - 1);
      EXPECT_NEAR(m, double_factorial, 1e-11 * double_factorial) << k;
    }
  }
}

TEST(GaussHermite, KnownNodes) {
  const auto r = gauss_hermite_normal(3);
  EXPECT_NEAR(r.nodes[2], std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(r.weights[1], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.weights[0], 1.0 / 6.0, 1e-14);
}

TEST(GaussHermite, SmoothIntegrandsMatchSimpsonReference) {
  const auto r9 = gauss_hermite_normal(9);
  const auto r17 = gauss_hermite_normal(17);
  // E[exp(a eps)] = exp(a^2 / 2).
  EXPECT_NEAR(r17.expectation([](double x) { return std::exp(0.5 * x); }), std::exp(0.125), 1e-13);
  auto smooth = [](double x) { return std::cos(x) + 0.1 * x * x; };
  const double ref = oracle::normal_expectation_simpson(smooth);
  EXPECT_NEAR(ref, std::exp(-0.5) + 0.1, 1e-12);
  EXPECT_NEAR(r9.expectation(smooth), ref, 1e-6);
  EXPECT_NEAR(r17.expectation(smooth), ref, 1e-12);
}
