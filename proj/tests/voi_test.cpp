#include <gtest/gtest.h>

#include <cmath>

#include "dynvoi/voi.hpp"
#include "oracles.hpp"

using namespace dynvoi;

namespace {

std::vector<double> grid(double lo, double step, double hi) {
  std::vector<double> v;
  for (int i = 0; lo + i * step <= hi + 1e-12; ++i) v.push_back(lo + i * step);
  return v;
}

}  // namespace

TEST(VoiStage, Basics) {
  EXPECT_EQ(voi_stage(Matrix::Zero(2, 2), Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.0);
  // h = 0: K = d/g, Sigma* = f^2.
  const double k = gain_star(1.2, 1.0, 0.0, sigma_star_closed_form(1.2, 1.0, 1.0, 0.0));
  EXPECT_NEAR(voi_stage(Matrix::Constant(1, 1, k), Matrix::Constant(1, 1, 1.0))(0, 0), 1.44,
              1e-15);
  EXPECT_NEAR(steady_voi(1.0, 1.0, 1.0, 1.0), 0.6180339887498949, 1e-15);
  EXPECT_THROW(voi_stage(Matrix::Zero(1, 2), Matrix::Identity(1, 1)), ConfigError);
}

TEST(VoiStage, PsdForPsdSigma) {
  const Matrix K = (Matrix(2, 2) << 0.3, -1.0, 2.0, 0.1).finished();
  const Matrix S = (Matrix(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(voi_stage(K, S));
  EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(VoiProRata, Basics) {
  EXPECT_NEAR(steady_pro_rata(1.2, 1.0, 1.0, 0.0), 1.2, 1e-15);
  EXPECT_EQ(voi_pro_rata(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 3.0))(0, 0), 0.0);
  EXPECT_GT(steady_pro_rata(1.2, 1.0, 1.0, 1.0), steady_pro_rata(1.2, 1.0, 1.0, 0.0));
}

TEST(GrowthThreshold, Values) {
  EXPECT_NEAR(growth_threshold(1.0).d_upper, std::sqrt(15.0) / 3.0, 1e-15);
  EXPECT_NEAR(growth_threshold(1.0).d_upper, 1.2909944, 1e-7);
  EXPECT_NEAR(growth_threshold(0.5).d_upper, std::sqrt(5.25) / 1.5, 1e-15);
  EXPECT_NEAR(growth_threshold(1e4).d_upper, 1.0, 1e-8);
  EXPECT_EQ(growth_threshold(2.0).d_lower, 1.0);
  EXPECT_THROW(growth_threshold(0.0), DomainError);
  EXPECT_THROW(growth_threshold(-1.0), DomainError);
  for (double g = 0.01; g < 100; g *= 1.3) {
    const double u = growth_threshold(g).d_upper;
    EXPECT_GT(u, 1.0);
    EXPECT_LE(u, std::sqrt(3.0));
    EXPECT_NEAR(u, std::sqrt((2 * g * g + 3) / (2 * g * g + 1)), 1e-14);
  }
}

TEST(CurvatureAtZero, Values) {
  EXPECT_NEAR(curvature_at_zero(1.2, 1.0), -0.9792, 1e-13);
  EXPECT_NEAR(curvature_at_zero(1.4, 1.0), 1.7248, 1e-13);
  EXPECT_NEAR(curvature_at_zero(1.0, 1.0), -2.0, 1e-15);
  EXPECT_THROW(curvature_at_zero(1.1, 0.0), DomainError);
}

TEST(CurvatureAtZero, SignFlipsAtThreshold) {
  for (double g : {0.5, 1.0, 2.0}) {
    const double u = growth_threshold(g).d_upper;
    EXPECT_LT(curvature_at_zero(u - 1e-4, g), 0.0);
    EXPECT_GT(curvature_at_zero(u + 1e-4, g), 0.0);
  }
}

TEST(NumericCurvature, MatchesSymbolicDerivative) {
  // The second derivative of the steady-state K^2 S at h = 0 computed from
  // the fixed-point equation; independent of f.
  for (double d : {1.0, 1.1, 1.3, 1.5})
    for (double g : {0.5, 1.0, 2.0})
      for (double f : {0.5, 2.0}) {
        const double ref = oracle::voi_curvature_symbolic(d, g);
        EXPECT_NEAR(voi_curvature_numeric(d, f, g), ref, 1e-5 * std::max(1.0, std::abs(ref)))
            << d << " " << g << " " << f;
        const double pr = oracle::pro_rata_curvature_symbolic(d, g);
        EXPECT_NEAR(pro_rata_curvature_numeric(d, f, g), pr, 1e-5 * std::max(1.0, std::abs(pr)));
      }
}

TEST(ProRataCurvatureSign, Cases) {
  EXPECT_EQ(pro_rata_curvature_sign(1.2, 1.0, 1.0), 1);
  EXPECT_EQ(pro_rata_curvature_sign(1.0, 1.0, 1.0), 0);
  EXPECT_EQ(pro_rata_curvature_sign(1.5, 2.0, 0.5), 1);
  EXPECT_THROW(pro_rata_curvature_sign(0.9, 1.0, 1.0), DomainError);
}

TEST(VoiCurve, NonMonotoneBelowThreshold) {
  const auto curve = voi_curve(1.1, 1.0, 1.0, grid(0.0, 0.25, 50.0));
  ASSERT_EQ(curve.h_grid.size(), 201u);
  EXPECT_NEAR(curve.voi.front(), 1.21, 1e-14);
  EXPECT_EQ(curve.classification, Curvature::MaxAtZero);
  bool below = false, above = false;
  for (double v : curve.voi) {
    below |= v < curve.voi.front();
    above |= v > curve.voi.front();
  }
  EXPECT_TRUE(below);
  EXPECT_TRUE(above);
  ASSERT_TRUE(curve.interior_min.has_value());
  // Frozen from a 40-digit root of dVoI/dh.
  EXPECT_NEAR(curve.interior_min->h, 2.9928107357086987, 2e-6);
  EXPECT_NEAR(curve.interior_min->voi, 0.69421487603305785, 1e-11);
}

TEST(VoiCurve, IncreasingAboveThreshold) {
  const auto curve = voi_curve(1.4, 1.0, 1.0, grid(0.0, 0.25, 50.0));
  EXPECT_NEAR(curve.voi.front(), 1.96, 1e-14);
  EXPECT_EQ(curve.classification, Curvature::MinAtZero);
  EXPECT_FALSE(curve.interior_min.has_value());
  for (std::size_t i = 1; i < curve.voi.size(); ++i) EXPECT_GE(curve.voi[i], curve.voi[i - 1]);
}

TEST(VoiCurve, NoGrowthDecreasesTowardZero) {
  const auto curve = voi_curve(1.0, 1.0, 1.0, grid(0.0, 0.25, 10.0));
  EXPECT_NEAR(curve.voi.front(), 1.0, 1e-15);
  EXPECT_FALSE(curve.interior_min.has_value());
  for (std::size_t i = 1; i < curve.voi.size(); ++i) EXPECT_LT(curve.voi[i], curve.voi[i - 1]);
  EXPECT_LT(voi_curve(1.0, 1.0, 1.0, {0.0, 1e4}).voi.back(), 1e-3);
}

TEST(VoiCurve, RejectsBadGrids) {
  EXPECT_THROW(voi_curve(1.1, 1, 1, {}), ConfigError);
  EXPECT_THROW(voi_curve(1.1, 1, 1, {0.0, 0.0}), ConfigError);
  EXPECT_THROW(voi_curve(1.1, 1, 1, {1.0, 0.5}), ConfigError);
  EXPECT_THROW(voi_curve(1.1, 1, 1, {-1.0, 0.5}), ConfigError);
}

namespace {

// Noise grid reaching far enough that slow growth (d near 1) shows the
// eventual rise above VoI(0).
std::vector<double> long_noise_grid() {
  auto h = grid(0.0, 0.05, 50.0);
  for (double x = 60.0; x < 1e6; x *= 1.05) h.push_back(x);
  return h;
}

bool has_witness(const VoICurve& curve) {
  bool below = false, above = false;
  for (double v : curve.voi) {
    below |= v < curve.voi.front();
    above |= v > curve.voi.front();
  }
  return below && above;
}

}  // namespace

TEST(VoiProperties, NonMonotonicityWitnessBelowThreshold) {
  const auto h = long_noise_grid();
  for (double g : {0.5, 1.0, 2.0}) {
    // The true zero-noise curvature 2 d^2 (d^2 - 2) / g^4 turns positive at
    // sqrt(2), which is below the closed-form threshold when g < 1/sqrt(2).
    const double upper = std::min(growth_threshold(g).d_upper, std::sqrt(2.0));
    for (double d = 1.01; d < upper; d += 0.02)
      EXPECT_TRUE(has_witness(voi_curve(d, 1.0, g, h))) << "d=" << d << " g=" << g;
  }
}

TEST(VoiProperties, NoWitnessBetweenSqrt2AndThresholdForSmallLoading) {
  const auto h = long_noise_grid();
  const double g = 0.5;
  ASSERT_GT(growth_threshold(g).d_upper, std::sqrt(2.0));
  for (double d : {1.43, 1.47, 1.51}) {
    const auto curve = voi_curve(d, 1.0, g, h);
    EXPECT_EQ(curve.classification, Curvature::MaxAtZero);
    EXPECT_FALSE(has_witness(curve)) << "d=" << d;
    for (double v : curve.voi) EXPECT_GE(v, curve.voi.front());
  }
}

TEST(VoiProperties, UnboundedWithGrowth) {
  for (double d : {1.05, 1.2, 1.5})
    for (double g : {0.5, 1.0, 2.0})
      for (double h : {1e3, 1e4}) {
        // VoI / h^2 tends to (d^2 - 1)^3 / (d^2 g^4).
        const double slope = std::pow(d * d - 1.0, 3) / (d * d * std::pow(g, 4));
        EXPECT_NEAR(steady_voi(d, 1.0, g, h) / (h * h), slope, 0.02 * slope) << d << " " << g;
      }
}

TEST(VoiProperties, ProRataGlobalMinimumAtZero) {
  const auto h = grid(0.0, 0.25, 50.0);
  for (double d : {1.05, 1.2, 1.5})
    for (double g : {0.5, 1.0, 2.0})
      for (double f : {0.5, 1.0, 2.0}) {
        const auto curve = voi_curve(d, f, g, h);
        for (std::size_t i = 1; i < h.size(); ++i)
          EXPECT_GT(curve.pro_rata[i], curve.pro_rata[0]) << d << " " << g << " " << f;
      }
}

TEST(VoiProperties, ClassificationIndependentOfStateNoise) {
  for (double d : {1.0, 1.1, 1.3, 1.5})
    for (double g : {0.5, 1.0, 2.0}) {
      const auto ref = voi_curve(d, 1.0, g, {0.0, 1.0}).classification;
      for (double f : {0.5, 2.0}) EXPECT_EQ(voi_curve(d, f, g, {0.0, 1.0}).classification, ref);
    }
}
