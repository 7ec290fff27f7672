#include "oracles.hpp"

#include "star/error.hpp"
#include "star/rounding.hpp"

#include <gtest/gtest.h>

#include <random>

using star::RoundingScheme;
using star::Transformation;

TEST(RoundLatent, Examples) {
  EXPECT_EQ(star::round_latent(2.7, RoundingScheme::floor()), 2);
  EXPECT_EQ(star::round_latent(-1.3, RoundingScheme::floor()), 0);
  EXPECT_EQ(star::round_latent(9.4, RoundingScheme::bounded(5)), 5);
  EXPECT_EQ(star::round_latent(4.99, RoundingScheme::censored(5)), 4);
}

TEST(RoundLatent, PartitionConsistency) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-5.0, 30.0);
  for (const auto& s : {RoundingScheme::floor(), RoundingScheme::bounded(6), RoundingScheme::censored(10),
                        RoundingScheme::floor().with_left_censoring(2)}) {
    for (int k = 0; k < 20000; ++k) {
      const double y = u(gen);
      const int j = star::round_latent(y, s);
      EXPECT_GE(y, s.lower_edge(j, false));
      EXPECT_LT(y, s.upper_edge(j, false));
    }
  }
}

TEST(RoundLatent, EdgesNondecreasing) {
  for (const auto& s : {RoundingScheme::floor(), RoundingScheme::bounded(4)}) {
    for (bool lg : {false, true}) {
      for (int j = 0; j < 8; ++j) EXPECT_LE(s.lower_edge(j, lg), s.upper_edge(j, lg));
    }
  }
  EXPECT_EQ(RoundingScheme::floor().lower_edge(0, true), 0.0);
  EXPECT_TRUE(std::isinf(RoundingScheme::floor().lower_edge(0, false)));
}

TEST(Pmf, Examples) {
  const auto id = Transformation::identity();
  const auto fl = RoundingScheme::floor();
  EXPECT_NEAR(star::pmf(0, id, fl, 0.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(star::pmf(1, id, fl, 0.0, 1.0), oracle::Phi(1.0) - 0.5, 1e-15);
  EXPECT_NEAR(star::pmf(1, id, fl, 0.0, 1.0), 0.3413447460685429, 1e-15);
}

TEST(Pmf, NormalisesWithAnalyticTail) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> mu(-3.0, 6.0), sig(0.2, 3.0), lam(0.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto g = Transformation::box_cox(lam(gen));
    const double m = mu(gen), s = sig(gen);
    double total = 0.0;
    const int J = 400;
    for (int j = 0; j < J; ++j) total += star::pmf(j, g, RoundingScheme::floor(), m, s);
    total += 1.0 - oracle::Phi((g.evaluate(J) - m) / s);
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(Pmf, ZeroProbabilityIsPhiOfMinusMuOverSigma) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> mu(-4.0, 4.0), sig(0.1, 4.0), lam(0.0, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto g = Transformation::box_cox(lam(gen));
    const double m = mu(gen), s = sig(gen);
    EXPECT_NEAR(star::pmf(0, g, RoundingScheme::floor(), m, s), oracle::Phi(-m / s), 1e-15);
    EXPECT_NEAR(star::pmf(0, g, RoundingScheme::bounded(3), m, s), oracle::Phi(-m / s), 1e-15);
  }
}

TEST(Pmf, BoundedSchemeHasNoMassAboveK) {
  const auto g = Transformation::sqrt();
  const auto s = RoundingScheme::bounded(5);
  double total = 0.0;
  for (int j = 0; j <= 5; ++j) total += star::pmf(j, g, s, 2.0, 1.5);
  EXPECT_NEAR(total, 1.0, 1e-14);
  for (int j = 6; j < 20; ++j) EXPECT_EQ(star::pmf(j, g, s, 2.0, 1.5), 0.0);
  EXPECT_EQ(s.max_value().value(), 5);
}

TEST(Pmf, CensoredTopIsSurvivor) {
  const auto g = Transformation::box_cox(0.3);
  for (double m : {-1.0, 0.5, 3.0}) {
    const double expect = 1.0 - oracle::Phi((g.evaluate(5.0) - m) / 0.8);
    EXPECT_NEAR(star::pmf(5, g, RoundingScheme::censored(5), m, 0.8), expect, 1e-14);
  }
}

TEST(Pmf, CensoredTopEqualsUncensoredTail) {
  // Probability that an uncensored draw is >= K equals the censored pmf at K.
  const auto g = Transformation::box_cox(0.4);
  for (double m : {0.0, 1.0, 2.5}) {
    double tail = 1.0;
    for (int j = 0; j < 7; ++j) tail -= star::pmf(j, g, RoundingScheme::floor(), m, 1.2);
    EXPECT_NEAR(star::pmf(7, g, RoundingScheme::censored(7), m, 1.2), tail, 1e-12);
  }
}

TEST(Pmf, LogTransformZeroCell) {
  const auto g = Transformation::log();
  const auto cell = star::transformed_cell(0, g, RoundingScheme::floor());
  EXPECT_TRUE(std::isinf(cell.lower) && cell.lower < 0);
  EXPECT_DOUBLE_EQ(cell.upper, 0.0);
  EXPECT_NEAR(star::pmf(0, g, RoundingScheme::floor(), 0.3, 1.0), oracle::Phi(-0.3), 1e-15);
}

TEST(Pmf, LeftCensoringMergesBottomCells) {
  const auto g = Transformation::identity();
  const auto s = RoundingScheme::floor().with_left_censoring(2);
  // An observed 2 means "at most 2": the cell is [a_0, a_3).
  EXPECT_NEAR(star::pmf(2, g, s, 1.0, 1.0), oracle::Phi((g.evaluate(3.0) - 1.0) / 1.0), 1e-14);
  EXPECT_EQ(star::pmf(0, g, s, 1.0, 1.0), 0.0);
  EXPECT_EQ(star::pmf(1, g, s, 1.0, 1.0), 0.0);
  EXPECT_NEAR(star::pmf(3, g, s, 1.0, 1.0), star::pmf(3, g, RoundingScheme::floor(), 1.0, 1.0), 1e-15);
}

TEST(Pmf, LogPmfStaysFiniteFarInTail) {
  const double lp = star::log_pmf(0, Transformation::identity(), RoundingScheme::floor(), 45.0, 1.0);
  EXPECT_TRUE(std::isfinite(lp));
  // Mills ratio: log Phi(-x) ~ -x^2/2 - log(x sqrt(2 pi)).
  EXPECT_NEAR(lp, -0.5 * 45.0 * 45.0 - std::log(45.0 * std::sqrt(2.0 * M_PI)), 1e-3);
}

TEST(RoundTransformed, AgreesWithInverseThenRound) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> s(-3.0, 8.0);
  for (double l : {0.0, 0.5, 1.0}) {
    const auto g = Transformation::box_cox(l);
    for (int k = 0; k < 2000; ++k) {
      const double v = s(gen);
      EXPECT_EQ(star::round_transformed(v, g, RoundingScheme::floor()),
                star::round_latent(g.inverse(v), RoundingScheme::floor()));
    }
  }
}

TEST(ConditionalExpectation, BinarySupport) {
  const auto g = Transformation::sqrt();
  const auto s = RoundingScheme::bounded(1);
  EXPECT_DOUBLE_EQ(star::conditional_expectation(g, s, 0.4, 1.1), star::pmf(1, g, s, 0.4, 1.1));
}

TEST(ConditionalExpectation, MatchesLongSum) {
  const auto g = Transformation::identity();
  double brute = 0.0;
  for (int j = 1; j <= 1000000; ++j) {
    const double p = star::pmf(j, g, RoundingScheme::floor(), 3.0, 1.0);
    if (p == 0.0) break;
    brute += j * p;
  }
  EXPECT_NEAR(star::conditional_expectation(g, RoundingScheme::floor(), 3.0, 1.0, 1.0 - 1e-12), brute, 1e-6);
  // The default 99.99% truncation only drops far-tail mass.
  EXPECT_NEAR(star::conditional_expectation(g, RoundingScheme::floor(), 3.0, 1.0), brute, 5e-3);
}

TEST(Dispersion, ProfileProperties) {
  const auto rows = star::dispersion_profile(Transformation::sqrt(), RoundingScheme::floor(),
                                             {-1.0, 0.0, 2.0}, {0.5, 1.5});
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) EXPECT_NEAR(r.prob_zero, oracle::Phi(-r.mu / r.sigma), 1e-15);
  const auto over = star::dispersion_profile(Transformation::sqrt(), RoundingScheme::floor(), {2.0}, {1.5});
  EXPECT_GT(over[0].variance, over[0].mean);
  // Nearly a point mass on y = 3 (g(3.5) for the identity is 2.5).
  const auto point = star::dispersion_profile(Transformation::identity(), RoundingScheme::floor(), {2.5}, {1e-3});
  EXPECT_LT(point[0].variance, 1e-12);
  EXPECT_NEAR(point[0].mean, 3.0, 1e-12);
}

TEST(Scheme, ParseAndName) {
  for (const auto& s : {RoundingScheme::floor(), RoundingScheme::bounded(5), RoundingScheme::censored(9),
                        RoundingScheme::censored(9).with_left_censoring(1)}) {
    EXPECT_EQ(RoundingScheme::parse(s.name()), s);
  }
  EXPECT_THROW(RoundingScheme::parse("ceiling"), star::Error);
  EXPECT_THROW(RoundingScheme::bounded(0), star::Error);
}
