#pragma once

#include "star/dataset.hpp"
#include "star/latent.hpp"
#include "star/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace star {

/// Cubic B-spline basis on an extended equally spaced knot vector. Points
/// outside [knots[3], knots[K]] are clamped to that range.
Eigen::MatrixXd cubic_bspline_basis(const Eigen::VectorXd& v, const std::vector<double>& knots);

/// A reparametrised P-spline basis for one smooth term f_j.
///
/// K = L + 2 cubic B-splines with a second-difference penalty are mapped onto
/// the L penalised directions scaled to an identity penalty, the span of
/// {1, v} is removed, and the result is rotated so B'B is diagonal.
struct PSplineBlock {
  std::size_t column = 0;
  std::vector<double> knots;
  Eigen::MatrixXd coef;    // K x L: raw B-spline coefficients of each column
  Eigen::MatrixXd linear;  // 2 x L: removed [1, v] component
  Eigen::MatrixXd basis;   // n x L on the training points
  Eigen::VectorXd crossprod;  // diag(B'B)

  Eigen::Index size() const noexcept { return coef.cols(); }
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& v) const;

  nlohmann::json to_json() const;
  static PSplineBlock from_json(const nlohmann::json& j);
};

PSplineBlock build_pspline_block(const Eigen::VectorXd& v, int L);

/// Linear block U = [1, standardised predictors] plus one P-spline block per
/// nonlinear predictor. Nonlinear predictors keep their linear term in U.
struct AdditiveDesign {
  std::vector<std::string> names;  // predictor names, in U column order after the intercept
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::MatrixXd U;
  Eigen::MatrixXd UtU;
  std::vector<PSplineBlock> blocks;
  std::vector<std::string> demoted;  // requested smooth terms with < 10 unique values

  /// `spline_size` 0 selects min(ceil(n/4), 30).
  static AdditiveDesign build(const Dataset& data, const std::vector<std::string>& nonlinear,
                              int spline_size = 0);

  Eigen::Index linear_size() const noexcept { return U.cols(); }
  Eigen::MatrixXd linear_matrix(const Eigen::MatrixXd& X) const;

  nlohmann::json to_json() const;
  static AdditiveDesign from_json(const nlohmann::json& j);
};

struct AdditivePriors {
  double intercept_variance = 1e6;
  double ridge_upper = 1e4;  // sigma_beta ~ Uniform(0, ridge_upper)
  double sigma_shape = 0.001;
  double sigma_rate = 0.001;
  double smooth_shape = 0.1;
  double smooth_rate = 0.1;
};

struct AdditiveState {
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> alpha;
  double sigma2 = 1.0;
  double ridge_variance = 1.0;
  std::vector<double> smooth_variance;
  TransformationState transform;
  std::vector<double> z;
  /// Gaussian baseline: z is link(y), fixed, and the transformation unused.
  bool gaussian = false;

  Eigen::VectorXd mean(const AdditiveDesign& design) const;
  double sigma() const { return std::sqrt(sigma2); }

  static AdditiveState initial(const AdditiveDesign& design, std::span<const int> y,
                               const RoundingScheme& scheme, TransformationState transform);
  static AdditiveState initial_gaussian(const AdditiveDesign& design, std::span<const int> y,
                                        GaussianLink link);
};

/// One sweep: impute z*, draw beta, the ridge scale, each alpha_j, sigma^2,
/// each smoothing variance, then the transformation when it is learnable.
void gibbs_sweep_additive(AdditiveState& state, const AdditiveDesign& design,
                          std::span<const int> y, const RoundingScheme& scheme, RngStream& rng,
                          const AdditivePriors& priors = {});

/// mu(x) for new predictor rows given flattened (beta, alpha) coefficients.
Eigen::VectorXd additive_mean(const AdditiveDesign& design, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha);

}  // namespace star
