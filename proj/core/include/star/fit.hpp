#pragma once

#include "star/additive.hpp"
#include "star/bart.hpp"
#include "star/dataset.hpp"
#include "star/draws.hpp"
#include "star/latent.hpp"
#include "star/rounding.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace star {

struct McmcSchedule {
  int burn = 5000;
  int save = 5000;  // saved draws per chain; the chain runs save * thin iterations after burn-in
  int thin = 3;
  int chains = 1;
  std::uint64_t seed = 0;
};

enum class ModelKind { Additive, Bart };
enum class Likelihood { Star, Gaussian };

struct FitConfig {
  ModelKind model = ModelKind::Additive;
  Likelihood likelihood = Likelihood::Star;
  /// id | log | sqrt | box-cox | np. The Gaussian likelihood accepts id and log.
  std::string transform = "box-cox";
  RoundingScheme scheme{};
  std::vector<std::string> nonlinear;
  int spline_size = 0;
  double lambda0 = 0.5;
  double ispline_prior_variance = 1.0;
  AdditivePriors additive_priors{};
  BartPriors bart{};
  int calibration_burn = 500;
  int calibration_save = 500;
  int stored_ensembles = 200;
  TransformUpdateSettings transform_settings{};
  McmcSchedule mcmc{};
  bool store_predictive = true;
  /// Posterior E[y | x_i] per draw; "auto" stores it when the data carry lambda_star.
  enum class Expected { Auto, Always, Never } expected = Expected::Auto;

  /// Short names used by the experiment driver: lm-log, lm-id, star-<t>,
  /// am-star-<t>, bart-log, bart-star-<t> with <t> in id|log|sqrt|bc|np.
  static FitConfig preset(const std::string& name);

  /// Read overrides from a JSON object; unknown keys are rejected.
  void apply_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Fit a STAR (or Gaussian baseline) linear/additive model.
PosteriorDraws fit_star_additive(const Dataset& data, const FitConfig& config);
/// Fit BART-STAR (or the Gaussian-on-link BART baseline).
PosteriorDraws fit_bart_star(const Dataset& data, const FitConfig& config);
/// Dispatch on config.model.
PosteriorDraws fit_model(const Dataset& data, const FitConfig& config);

/// Transformation of saved draw s.
Transformation draw_transformation(const PosteriorDraws& draws, Eigen::Index s);
Transformation base_transformation(const PosteriorDraws& draws);
RoundingScheme draw_scheme(const PosteriorDraws& draws);
bool is_gaussian(const PosteriorDraws& draws);
GaussianLink draw_link(const PosteriorDraws& draws);

/// Latent means at new predictor rows. Additive fits use every saved draw;
/// BART uses the stored ensemble subset. `rows` receives the draw indices.
Eigen::MatrixXd predict_latent_means(const PosteriorDraws& draws, const Eigen::MatrixXd& X,
                                     std::vector<Eigen::Index>& rows);

/// Posterior predictive E[y] under one draw, by the truncated sum.
std::vector<double> expected_counts(const Transformation& g, const RoundingScheme& scheme,
                                    std::span<const double> mu, double sigma);

}  // namespace star
