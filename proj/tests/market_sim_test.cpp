#include <gtest/gtest.h>

#include <cmath>

#include "dynvoi/market_sim.hpp"

using namespace dynvoi;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Matrix m1(double x) { return Matrix::Constant(1, 1, x); }

SimConfig scalar_config(double d, std::size_t paths, std::size_t horizon, std::uint64_t seed) {
  SimConfig cfg;
  cfg.model = StateSpaceModel::scalar(d, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
  cfg.paths = paths;
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(MyopicPrice, Examples) {
  EXPECT_DOUBLE_EQ(myopic_price(v1(3.0), v1(1.0))(0), 2.0);
  EXPECT_DOUBLE_EQ(myopic_price(v1(0.0), v1(0.0))(0), 0.0);
  const Vector p = myopic_price(Eigen::Vector2d(4.0, -2.0), Eigen::Vector2d(0.0, 2.0));
  EXPECT_DOUBLE_EQ(p(0), 2.0);
  EXPECT_DOUBLE_EQ(p(1), 0.0);
}

TEST(RealizeDemand, Examples) {
  EXPECT_DOUBLE_EQ(realize_demand(v1(3.0), v1(2.0), v1(0.0))(0), 1.0);
  EXPECT_DOUBLE_EQ(realize_demand(v1(3.0), v1(2.0), v1(-0.5))(0), 0.5);
}

TEST(ProfitDecomposition, Examples) {
  const auto m = StateSpaceModel::scalar(1.1, 1.0, 1.0, 1.0);
  const auto r = profit_decomposition(v1(2.0), v1(0.0), 0, m, m1(0.5), m1(2.0));
  EXPECT_DOUBLE_EQ(r.baseline(0), 1.0);
  EXPECT_DOUBLE_EQ(r.voi_term(0), 0.125);
  const auto r2 = profit_decomposition(v1(2.0), v1(0.2), 2, m, m1(0.0), m1(2.0));
  EXPECT_NEAR(r2.baseline(0), std::pow(1.21 * 2.0 - 0.2, 2) / 4.0, 1e-15);
  EXPECT_EQ(r2.voi_term(0), 0.0);
  EXPECT_THROW(profit_decomposition(Vector::Zero(2), v1(0.0), 0, m, m1(0.5), m1(2.0)),
               ConfigError);
}

TEST(FilterSchedule, MatchesUpdateSequence) {
  const auto m = StateSpaceModel::scalar(1.0, 1.0, 1.0, 1.0);
  const auto s = filter_schedule(m, 3);
  ASSERT_EQ(s.sigma.size(), 4u);
  ASSERT_EQ(s.gain.size(), 3u);
  EXPECT_DOUBLE_EQ(s.sigma[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.gain[0](0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.sigma[1](0, 0), 1.5);
}

TEST(Simulate, DeterministicForSeed) {
  const auto a = simulate(scalar_config(1.1, 200, 5, 42));
  const auto b = simulate(scalar_config(1.1, 200, 5, 42));
  const auto c = simulate(scalar_config(1.1, 200, 5, 43));
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(a.periods[t].mean_profit, b.periods[t].mean_profit);
    EXPECT_EQ(a.periods[t].var_error(0), b.periods[t].var_error(0));
  }
  EXPECT_NE(a.periods[4].mean_profit, c.periods[4].mean_profit);
}

TEST(Simulate, PathStreamsDependOnlyOnSeedAndIndex) {
  EXPECT_EQ(detail::path_engine(9, 0)(), detail::path_engine(9, 0)());
  EXPECT_NE(detail::path_engine(9, 0)(), detail::path_engine(9, 1)());
  EXPECT_NE(detail::path_engine(9, 0)(), detail::path_engine(10, 0)());
  // A run over paths {0, 1, 2} equals the pooled single-path shards.
  const auto all = simulate(scalar_config(1.2, 3, 4, 5));
  for (std::size_t t = 0; t < 4; ++t) {
    double belief = 0.0, profit = 0.0;
    for (std::uint64_t i = 0; i < 3; ++i) {
      auto cfg = scalar_config(1.2, 1, 4, 5);
      cfg.first_path = i;
      const auto shard = simulate(cfg);
      belief += shard.periods[t].mean_belief(0);
      profit += shard.periods[t].mean_profit;
    }
    EXPECT_NEAR(all.periods[t].mean_belief(0), belief / 3.0, 1e-12);
    EXPECT_NEAR(all.periods[t].mean_profit, profit / 3.0, 1e-12);
  }
}

TEST(Simulate, DegenerateNoiseTracksState) {
  // No state noise, known initial state, noisy signal: beliefs stay exact.
  SimConfig cfg;
  cfg.model = StateSpaceModel::scalar(1.1, 0.0, 1.0, 1.0, 0.5, 2.0, 0.0);
  cfg.paths = 2000;
  cfg.horizon = 8;
  cfg.seed = 3;
  const auto r = simulate(cfg);
  for (const auto& s : r.periods) {
    EXPECT_EQ(s.sigma_predicted(0, 0), 0.0);
    EXPECT_NEAR(s.mean_sq_error(0), 0.0, 1e-24);
    const double expected = std::pow(std::pow(1.1, double(s.t)) * 2.0 - 0.5, 2) / 4.0;
    const double se = std::sqrt(s.var_profit / double(cfg.paths));
    EXPECT_NEAR(s.mean_profit, expected, 4.0 * se + 1e-12) << "t=" << s.t;
  }
}

TEST(Simulate, ErrorVarianceMatchesFilter) {
  const std::size_t N = 20000;
  for (double d : {1.0, 1.1}) {
    const auto r = simulate(scalar_config(d, N, 10, 11));
    for (const auto& s : r.periods) {
      const double se = std::sqrt(s.var_sq_error(0) / double(N));
      EXPECT_NEAR(s.var_error(0), s.sigma_predicted(0, 0), 4.0 * se) << "d=" << d << " t=" << s.t;
    }
  }
}

TEST(Simulate, InnovationsOrthogonalAndWhite) {
  const std::size_t N = 20000, T = 10;
  const auto r = simulate(scalar_config(1.1, N, T, 17));
  const double bound = 3.0 / std::sqrt(double(r.innovations.samples));
  EXPECT_LE(std::abs(r.innovations.corr_with_belief), bound);
  const double lag_bound = 3.0 / std::sqrt(double(r.innovations.lag_samples));
  EXPECT_LE(std::abs(r.innovations.lag1_autocorr), lag_bound);
}

TEST(Simulate, CurrentBeliefBaselineIsUnbiased) {
  // Given mu_t, expected profit at the myopic price is (mu_t - c)^2 / 4.
  const std::size_t N = 20000;
  const auto r = simulate(scalar_config(1.1, N, 10, 23));
  for (const auto& s : r.periods) {
    const double se = std::sqrt(s.var_profit_minus_current / double(N));
    EXPECT_NEAR(s.mean_profit, s.mean_baseline_current, 4.0 * se) << "t=" << s.t;
  }
}

TEST(Simulate, MultiMarket) {
  SimConfig cfg;
  cfg.model = StateSpaceModel::diagonal(Eigen::Vector2d(1.0, 1.1), Eigen::Vector2d(1, 1),
                                        Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1),
                                        Eigen::Vector2d(0, 0.5), Eigen::Vector2d(1, 1),
                                        Eigen::Vector2d(1, 1));
  cfg.paths = 500;
  cfg.horizon = 3;
  const auto r = simulate(cfg);
  ASSERT_EQ(r.periods.size(), 3u);
  EXPECT_EQ(r.periods[0].mean_price.size(), 2);
  EXPECT_DOUBLE_EQ(r.periods[0].mean_price(0), 0.5);
  EXPECT_DOUBLE_EQ(r.periods[0].mean_price(1), 0.75);
}

TEST(Simulate, RejectsBadConfig) {
  auto cfg = scalar_config(1.1, 0, 5, 1);
  EXPECT_THROW(simulate(cfg), ConfigError);
  cfg = scalar_config(1.1, 5, 0, 1);
  EXPECT_THROW(simulate(cfg), ConfigError);
  cfg = scalar_config(1.1, 5, 5, 1);
  cfg.model.H = m1(0.0);
  cfg.model.Sigma0 = m1(0.0);
  cfg.model.F = m1(0.0);
  EXPECT_THROW(simulate(cfg), Error);
}
