#include "oracles.hpp"

#include "star/harness.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/negative_binomial.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using star::RngStream;

TEST(LinearDesign, Coefficients) {
  const auto& b = star::kLinearDesignBeta;
  EXPECT_DOUBLE_EQ(b[0], std::log(1.5));
  for (int k = 1; k <= 3; ++k) EXPECT_DOUBLE_EQ(b[static_cast<std::size_t>(k)], std::log(2.0));
  for (int k = 4; k <= 6; ++k) EXPECT_EQ(b[static_cast<std::size_t>(k)], 0.0);
}

TEST(LinearDesign, TruthMatchesPredictors) {
  RngStream rng(1);
  const auto d = star::simulate_negbin_linear(200, 1.0, rng);
  ASSERT_EQ(d.X.cols(), 6);
  ASSERT_EQ(d.size(), 200u);
  for (int i = 0; i < 200; ++i) {
    double eta = star::kLinearDesignBeta[0];
    for (int k = 0; k < 6; ++k) eta += star::kLinearDesignBeta[static_cast<std::size_t>(k) + 1] * d.X(i, k);
    EXPECT_NEAR(d.lambda_star[static_cast<std::size_t>(i)], std::exp(eta), 1e-12 * std::exp(eta));
  }
}

TEST(NegativeBinomial, PoissonLimit) {
  RngStream rng(2);
  std::vector<double> x(100000);
  for (auto& v : x) v = star::draw_negative_binomial(1.5, 1000.0, rng);
  const double m = oracle::mean(x), v = oracle::variance(x);
  EXPECT_NEAR(m, 1.5, 0.02);
  EXPECT_NEAR(v / m, 1.0, 0.05);
}

TEST(NegativeBinomial, ChiSquareAgainstPmf) {
  RngStream rng(3);
  const double mean = 4.0, r = 1.5;
  const boost::math::negative_binomial_distribution<double> nb(r, r / (r + mean));
  const int N = 50000, top = 20;
  std::vector<double> obs(top + 1, 0.0);
  for (int k = 0; k < N; ++k) ++obs[static_cast<std::size_t>(std::min(star::draw_negative_binomial(mean, r, rng), top))];
  double chi2 = 0.0;
  for (int j = 0; j <= top; ++j) {
    const double p = j < top ? boost::math::pdf(nb, j) : boost::math::cdf(boost::math::complement(nb, top - 1));
    const double e = N * p;
    chi2 += (obs[static_cast<std::size_t>(j)] - e) * (obs[static_cast<std::size_t>(j)] - e) / e;
  }
  const boost::math::chi_squared_distribution<double> ref(top);
  EXPECT_LT(chi2, boost::math::quantile(ref, 0.999));
}

TEST(Friedman, RawValueAtCentre) {
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(10, 0.5);
  EXPECT_NEAR(star::friedman_raw(x), 10.0 * std::sin(M_PI / 4.0) + 7.5, 1e-12);
  EXPECT_NEAR(star::friedman_raw(x), 14.571067811865476, 1e-12);
}

TEST(Friedman, StandardisedLogMeanAndSupport) {
  RngStream rng(4);
  const auto d = star::simulate_negbin_friedman(300, 1.0, rng);
  std::vector<double> eta;
  for (double l : d.lambda_star) eta.push_back(std::log(l));
  EXPECT_NEAR(oracle::mean(eta), std::log(1.5), 1e-10);
  EXPECT_NEAR(std::sqrt(oracle::variance(eta)), std::log(5.0), 1e-10);
  // Only x1..x5 matter: shuffling the other columns across rows changes nothing.
  Eigen::MatrixXd X = d.X;
  for (int i = 0; i < 300; ++i) {
    for (int k = 5; k < 10; ++k) X(i, k) = d.X((i * 7 + k) % 300, k);
  }
  for (int i = 0; i < 300; ++i) EXPECT_DOUBLE_EQ(star::friedman_raw(X.row(i)), star::friedman_raw(d.X.row(i)));
  RngStream tiny(5);
  EXPECT_ANY_THROW(star::simulate_negbin_friedman(1, 1.0, tiny));
}

TEST(Simulate, SeedDeterminism) {
  RngStream a(6, 2), b(6, 2), c(6, 3);
  const auto x = star::simulate("linear", 50, 1.0, a), y = star::simulate("linear", 50, 1.0, b);
  const auto z = star::simulate("linear", 50, 1.0, c);
  EXPECT_EQ(x.y, y.y);
  EXPECT_EQ(x.X, y.X);
  EXPECT_NE(x.X, z.X);
  EXPECT_ANY_THROW(star::simulate("circle", 10, 1.0, a));
}

TEST(Experiment, BaselineIsItsOwnReference) {
  star::ExperimentConfig c = star::ExperimentConfig::from_json(
      {{"design", "linear"},
       {"n", 60},
       {"dispersions", {1.0}},
       {"replicates", 2},
       {"models", {"star-bc"}},
       {"seed", 3},
       {"model_config", {{"mcmc", {{"burn", 100}, {"save", 100}, {"thin", 1}}}}}});
  ASSERT_EQ(c.models.front(), "lm-log");
  const auto r = star::run_experiment(c);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok) << row.error;
    if (row.model == "lm-log") {
      EXPECT_EQ(row.relative_waic, 1.0);
      EXPECT_EQ(row.relative_rmse, 1.0);
    }
    EXPECT_TRUE(std::isfinite(row.rmse));
  }
  ASSERT_EQ(r.summary.size(), 2u);
  EXPECT_EQ(r.summary[0].fits, 2);

  const auto again = star::run_experiment(c);
  for (std::size_t k = 0; k < r.rows.size(); ++k) EXPECT_EQ(r.rows[k].waic, again.rows[k].waic);
}

TEST(Experiment, UnknownModelIsRecordedNotFatal) {
  auto c = star::ExperimentConfig::from_json({{"n", 40},
                                              {"replicates", 1},
                                              {"models", {"no-such-model"}},
                                              {"model_config", {{"mcmc", {{"burn", 20}, {"save", 20}}}}}});
  const auto r = star::run_experiment(c);
  bool saw_failure = false;
  for (const auto& row : r.rows) saw_failure |= !row.ok;
  EXPECT_TRUE(saw_failure);
}
