#pragma once

#include "star/dataset.hpp"
#include "star/draws.hpp"
#include "star/rounding.hpp"
#include "star/transform.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace star {

struct WaicResult {
  double waic;
  double lpd;
  double d_eff;
  /// Points whose log-likelihood is -inf in every draw; they make waic infinite.
  std::vector<Eigen::Index> infinite_points;
};

/// lpd = sum_i log mean_s exp(l_si), d = sum_i var_s(l_si) with the S - 1
/// denominator (0 when S = 1), waic = -2 (lpd - d). Input is S x n.
WaicResult waic(const Eigen::MatrixXd& loglik);

/// log P(y_i | g^s, mu^s_i, sigma^s) for every draw s and point i.
Eigen::MatrixXd star_pointwise_loglik(const Eigen::MatrixXd& mu, std::span<const double> sigma,
                                      const std::vector<Transformation>& g,
                                      std::span<const int> y, const RoundingScheme& scheme);

struct ScoreResult {
  double score;
  std::vector<Eigen::Index> infinite_points;  // excluded from the mean
};

/// Mean over points of log mean_s exp(l_si), excluding points whose
/// predictive probability is zero.
ScoreResult lpd_score(const Eigen::MatrixXd& loglik);

/// Log score of the event {y > 0}: p0 is S x n with P(y_i = 0) per draw.
double logarithmic_score_nonzero(const Eigen::MatrixXd& p0, std::span<const int> y);

struct IntervalResult {
  double mpiw;
  double coverage;
};

/// Equal-tailed intervals from type-1 empirical quantiles of each column of
/// `pred` (S x n). Needs S (1 - level) / 2 >= 1.
IntervalResult interval_metrics(const Eigen::MatrixXd& pred, std::span<const double> y,
                                double level = 0.90);

/// sqrt(sum_i (f_i - lambda_i)^2).
double rmse_vs_truth(std::span<const double> fitted, std::span<const double> truth);

struct EssResult {
  double ess;
  bool constant;
};

/// n / (1 + 2 sum rho_k) truncated by Geyer's initial positive sequence.
EssResult ess_univariate(std::span<const double> chain);

struct PpcRow {
  double mean;
  double sd;
  double zeros;
};

struct PpcTable {
  PpcRow observed;
  std::vector<PpcRow> replicates;
  /// Fraction of replicates with a statistic >= the observed one.
  PpcRow upper_tail;
};

PpcTable posterior_predictive_checks(const Eigen::MatrixXd& pred, std::span<const double> y);
void write_ppc_csv(std::ostream& out, const PpcTable& table);

/// Full evaluation of a saved fit: WAIC on its training data and, when a
/// test set is given, lpd score, log score of {y > 0}, MPIW and coverage.
nlohmann::json score_fit(const PosteriorDraws& draws, const Dataset* test, std::uint64_t seed,
                         double level = 0.90);

}  // namespace star
