#pragma once

#include "star/dataset.hpp"
#include "star/fit.hpp"
#include "star/rng.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace star {

/// Gamma-Poisson draw with mean `mean` and variance mean (1 + mean / r).
int draw_negative_binomial(double mean, double r, RngStream& rng);

/// Coefficients of the linear design: intercept then x1..x6.
inline constexpr std::array<double, 7> kLinearDesignBeta{
    0.4054651081081644, 0.6931471805599453, 0.6931471805599453, 0.6931471805599453, 0.0, 0.0, 0.0};

/// n rows, six N(0, 1) predictors, log lambda* = x'beta.
Dataset simulate_negbin_linear(int n, double r_star, RngStream& rng);

/// 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5.
double friedman_raw(const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// n rows, ten U(0, 1) predictors, log lambda* = log 1.5 + log 5 f~(x) with
/// f~ the Friedman function centred and scaled over the sample.
Dataset simulate_negbin_friedman(int n, double r_star, RngStream& rng);

/// Dispatch on "linear" | "friedman".
Dataset simulate(const std::string& design, int n, double r_star, RngStream& rng);

struct ExperimentConfig {
  std::string design = "linear";
  int n = 100;
  std::vector<double> dispersions{1.0};
  int replicates = 20;
  std::vector<std::string> models{"lm-log", "star-bc", "star-np"};
  std::string baseline = "lm-log";
  std::uint64_t seed = 1;
  nlohmann::json model_config = nlohmann::json::object();  // applied to every model
  std::string out_dir;  // empty: no files

  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ExperimentRow {
  int replicate;
  double dispersion;
  std::string model;
  bool ok;
  std::string error;
  double waic;
  double lpd;
  double d_eff;
  double rmse;
  double relative_waic;
  double relative_rmse;
  double seconds;
};

struct ExperimentSummaryRow {
  double dispersion;
  std::string model;
  int fits;
  int failures;
  double median_relative_waic;
  double share_relative_waic_below_one;
  double median_relative_rmse;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentSummaryRow> summary;
};

/// Simulate every replicate, fit every model and compare WAIC and RMSE with
/// the baseline. A failing fit is recorded and does not stop the run.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_experiment_rows(std::ostream& out, const std::vector<ExperimentRow>& rows);
void write_experiment_summary(std::ostream& out, const std::vector<ExperimentSummaryRow>& rows);

}  // namespace star
