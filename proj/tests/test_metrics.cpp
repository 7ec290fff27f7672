#include "oracles.hpp"

#include "star/metrics.hpp"
#include "star/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

TEST(Waic, HandMatrix) {
  Eigen::MatrixXd L(3, 2);
  L << -1.0, -2.0,  //
      -1.5, -2.5,   //
      -0.5, -3.0;
  double lpd = 0.0, d = 0.0;
  for (int i = 0; i < 2; ++i) {
    double m = 0.0;
    for (int s = 0; s < 3; ++s) m += std::exp(L(s, i));
    lpd += std::log(m / 3.0);
    const double mean = L.col(i).mean();
    double v = 0.0;
    for (int s = 0; s < 3; ++s) v += (L(s, i) - mean) * (L(s, i) - mean);
    d += v / 2.0;
  }
  const auto w = star::waic(L);
  EXPECT_NEAR(w.lpd, lpd, 1e-12);
  EXPECT_NEAR(w.d_eff, d, 1e-12);
  EXPECT_NEAR(w.waic, -2.0 * (lpd - d), 1e-12);
  EXPECT_DOUBLE_EQ(w.waic, -2.0 * w.lpd + 2.0 * w.d_eff);
}

TEST(Waic, SingleDrawAndConstantColumns) {
  Eigen::MatrixXd one(1, 3);
  one << -1.0, -2.0, -0.25;
  const auto w = star::waic(one);
  EXPECT_DOUBLE_EQ(w.d_eff, 0.0);
  EXPECT_NEAR(w.waic, 6.5, 1e-14);
  const auto c = star::waic(Eigen::MatrixXd::Constant(10, 4, -3.0));
  EXPECT_DOUBLE_EQ(c.d_eff, 0.0);
  EXPECT_NEAR(c.lpd, -12.0, 1e-12);
}

TEST(Waic, NoUnderflowAndInfinitePoints) {
  const auto w = star::waic(Eigen::MatrixXd::Constant(50, 2, -700.0));
  EXPECT_NEAR(w.lpd, -1400.0, 1e-9);
  Eigen::MatrixXd L = Eigen::MatrixXd::Constant(4, 3, -1.0);
  L.col(1).setConstant(-INFINITY);
  const auto inf = star::waic(L);
  EXPECT_EQ(inf.infinite_points, std::vector<Eigen::Index>{1});
  EXPECT_TRUE(std::isinf(inf.waic));
}

TEST(PointwiseLoglik, EqualsLogPmf) {
  const std::vector<int> y{0, 2, 5, 9};
  const std::vector<star::Transformation> g{star::Transformation::box_cox(0.2), star::Transformation::sqrt()};
  Eigen::MatrixXd mu(2, 4);
  mu << 0.1, 0.8, 1.5, 2.0,  //
      -0.3, 1.0, 2.2, 3.9;
  const std::vector<double> sigma{0.7, 1.3};
  for (const auto& s : {star::RoundingScheme::floor(), star::RoundingScheme::bounded(9)}) {
    const auto L = star::star_pointwise_loglik(mu, sigma, g, y, s);
    for (int d = 0; d < 2; ++d) {
      for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(L(d, i), std::log(star::pmf(y[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(d)], s,
                                                mu(d, i), sigma[static_cast<std::size_t>(d)])),
                    1e-12);
      }
    }
    if (s.has_top()) {
      const double gk = g[1].evaluate(9.0);
      EXPECT_NEAR(L(1, 3), std::log(1.0 - oracle::Phi((gk - 3.9) / 1.3)), 1e-12);
    }
  }
}

TEST(PointwiseLoglik, TinySigmaInsideCell) {
  Eigen::MatrixXd mu(1, 1);
  mu << 2.5;  // g(3.5) for the identity, the middle of cell 3
  const auto L = star::star_pointwise_loglik(mu, std::vector<double>{1e-3}, {star::Transformation::identity()},
                                             std::vector<int>{3}, star::RoundingScheme::floor());
  EXPECT_NEAR(L(0, 0), 0.0, 1e-12);
}

TEST(LpdScore, TrivialCases) {
  EXPECT_DOUBLE_EQ(star::lpd_score(Eigen::MatrixXd::Zero(5, 7)).score, 0.0);
  EXPECT_NEAR(star::lpd_score(Eigen::MatrixXd::Constant(5, 7, std::log(0.1))).score, std::log(0.1), 1e-14);
}

TEST(LpdScore, ToyAndInvariance) {
  Eigen::MatrixXd L(2, 3);
  L << std::log(0.2), std::log(0.5), std::log(0.05),  //
      std::log(0.4), std::log(0.1), std::log(0.15);
  const double expect = (std::log(0.3) + std::log(0.3) + std::log(0.1)) / 3.0;
  EXPECT_NEAR(star::lpd_score(L).score, expect, 1e-14);
  Eigen::MatrixXd P = L.rowwise().reverse().colwise().reverse();
  EXPECT_NEAR(star::lpd_score(P).score, expect, 1e-14);
  L(0, 1) = L(1, 1) = -INFINITY;
  const auto r = star::lpd_score(L);
  EXPECT_EQ(r.infinite_points, std::vector<Eigen::Index>{1});
  EXPECT_NEAR(r.score, (std::log(0.3) + std::log(0.1)) / 2.0, 1e-14);
}

TEST(LogScoreNonzero, Cases) {
  const std::vector<int> y{0, 3, 1, 0};
  Eigen::MatrixXd perfect(2, 4);
  perfect << 1, 0, 0, 1,  //
      1, 0, 0, 1;
  EXPECT_NEAR(star::logarithmic_score_nonzero(perfect, y), 0.0, 1e-11);
  EXPECT_NEAR(star::logarithmic_score_nonzero(Eigen::MatrixXd::Constant(3, 4, 0.5), y), std::log(0.5), 1e-14);
  Eigen::MatrixXd toy(2, 4);
  toy << 0.2, 0.4, 0.1, 0.9,  //
      0.6, 0.2, 0.3, 0.5;
  const double expect = (std::log(0.4) + std::log(0.7) + std::log(0.8) + std::log(0.7)) / 4.0;
  EXPECT_NEAR(star::logarithmic_score_nonzero(toy, y), expect, 1e-14);
}

TEST(Intervals, ConstantDrawsAndTypeOneQuantiles) {
  const auto c = star::interval_metrics(Eigen::MatrixXd::Constant(40, 2, 3.0), std::vector<double>{3.0, 4.0});
  EXPECT_EQ(c.mpiw, 0.0);
  EXPECT_EQ(c.coverage, 0.5);

  // 20 draws 1..20: type-1 5% quantile is x_(1) = 1, 95% is x_(19) = 19.
  Eigen::MatrixXd pred(20, 1);
  for (int s = 0; s < 20; ++s) pred(19 - s, 0) = s + 1;
  const auto r = star::interval_metrics(pred, std::vector<double>{19.0});
  EXPECT_EQ(r.mpiw, 18.0);
  EXPECT_EQ(r.coverage, 1.0);
  EXPECT_EQ(star::interval_metrics(pred, std::vector<double>{19.5}).coverage, 0.0);
  EXPECT_ANY_THROW(star::interval_metrics(Eigen::MatrixXd::Zero(5, 1), std::vector<double>{0.0}));
}

TEST(Intervals, CalibratedPredictiveCovers) {
  star::RngStream rng(1);
  const int S = 1000, n = 2000;
  Eigen::MatrixXd pred(S, n);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    const double m = 1.0 + (i % 10);
    for (int s = 0; s < S; ++s) pred(s, i) = m + rng.normal();
    y[static_cast<std::size_t>(i)] = m + rng.normal();
  }
  const auto r = star::interval_metrics(pred, y);
  EXPECT_NEAR(r.coverage, 0.90, 0.03);
  EXPECT_NEAR(r.mpiw, 2.0 * 1.6448536, 0.1);
}

TEST(Rmse, Cases) {
  const std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 3.0, 3.0}, c{0.0, 4.0, 5.0};
  EXPECT_EQ(star::rmse_vs_truth(a, a), 0.0);
  EXPECT_EQ(star::rmse_vs_truth(b, a), 1.0);
  EXPECT_NEAR(star::rmse_vs_truth(c, a), 3.0, 1e-15);
}

TEST(Ess, IidAndAr1) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<double> iid(10000), ar(10000);
  for (auto& v : iid) v = nd(gen);
  EXPECT_NEAR(star::ess_univariate(iid).ess, 10000.0, 1500.0);
  double x = 0.0;
  for (auto& v : ar) v = x = 0.5 * x + std::sqrt(0.75) * nd(gen);
  EXPECT_NEAR(star::ess_univariate(ar).ess, 10000.0 / 3.0, 0.2 * 10000.0 / 3.0);
  const std::vector<double> flat(100, 2.0);
  EXPECT_TRUE(star::ess_univariate(flat).constant);
}

TEST(Ppc, Statistics) {
  Eigen::MatrixXd pred(3, 4);
  pred << 0, 0, 1, 3,  //
      1, 2, 3, 4,      //
      0, 0, 0, 0;
  const std::vector<double> y{0, 1, 0, 5};
  const auto t = star::posterior_predictive_checks(pred, y);
  EXPECT_DOUBLE_EQ(t.observed.mean, 1.5);
  EXPECT_DOUBLE_EQ(t.observed.zeros, 0.5);
  EXPECT_NEAR(t.observed.sd, std::sqrt(17.0 / 3.0), 1e-14);
  ASSERT_EQ(t.replicates.size(), 3u);
  for (const auto& r : t.replicates) {
    EXPECT_GE(r.zeros, 0.0);
    EXPECT_LE(r.zeros, 1.0);
  }
  EXPECT_DOUBLE_EQ(t.replicates[2].zeros, 1.0);
  EXPECT_NEAR(t.upper_tail.zeros, 2.0 / 3.0, 1e-15);
}
