#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace star {

/// Quadratic I-spline basis on [0, R] built from integrated B-splines.
///
/// The basis functions are the integrals of degree-2 M-splines, so each one is
/// a nondecreasing piecewise cubic that equals 0 at t = 0 and 1 for t >= R.
/// Integer points 0..R+1 are cached because every likelihood evaluation of the
/// rounding cells only needs g at integer edges.
class ISplineBasis {
 public:
  static constexpr int kDegree = 2;

  ISplineBasis(std::vector<double> interior_knots, double right_boundary);

  /// Knot placement from observed counts: boundary knots at 0 and max(y), an
  /// interior knot at 1 and the rest at sample quantiles of the counts
  /// strictly between 1 and max(y).
  static ISplineBasis from_counts(std::span<const int> counts);

  /// L = 2 + min(#unique / 4, 10) with integer division, at least 4.
  static int basis_size_for(std::size_t unique_values);

  std::size_t size() const noexcept { return size_; }
  double right_boundary() const noexcept { return right_; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }

  /// Basis values at t. t <= 0 gives all zeros, t >= R all ones.
  Eigen::VectorXd evaluate(double t) const;
  void evaluate(double t, std::span<double> out) const;

  /// Basis matrix at t = 0, 1, ..., R + 1 (one row per integer).
  const Eigen::MatrixXd& integer_grid() const noexcept { return grid_; }

 private:
  std::vector<double> interior_;
  double right_;
  std::vector<double> full_knots_;  // boundary knots repeated to order 4
  std::size_t size_;
  Eigen::MatrixXd grid_;  // (R + 2) x L
};

struct BoxCoxPrior {
  double mean = 0.5;
  double sd = 1.0;
  double lower = 0.0;
  double upper = 3.0;

  double log_density(double lambda) const;
};

enum class TransformKind { BoxCoxFixed, BoxCoxLearned, ISpline };

/// The monotone map g between the latent count scale and the Gaussian scale.
/// Values are immutable; the `with_*` members return updated copies so a
/// sampler can propose without touching shared state.
class Transformation {
 public:
  struct BoxCox {
    double lambda;
  };
  struct LearnedBoxCox {
    double lambda;
    BoxCoxPrior prior;
  };
  struct ISpline {
    std::shared_ptr<const ISplineBasis> basis;
    std::vector<double> weights;     // simplex
    std::vector<double> prior_mean;  // simplex
    double prior_variance;
  };

  static Transformation box_cox(double lambda);
  static Transformation identity() { return box_cox(1.0); }
  static Transformation log() { return box_cox(0.0); }
  static Transformation sqrt() { return box_cox(0.5); }
  static Transformation learned_box_cox(double lambda, BoxCoxPrior prior = {});
  static Transformation ispline(std::shared_ptr<const ISplineBasis> basis,
                                std::vector<double> weights, std::vector<double> prior_mean,
                                double prior_variance);

  TransformKind kind() const noexcept;
  bool learnable() const noexcept { return kind() != TransformKind::BoxCoxFixed; }
  bool is_box_cox() const noexcept { return kind() != TransformKind::ISpline; }
  /// Box-Cox exponent; throws for the I-spline kind.
  double lambda() const;
  /// True for the Box-Cox log case, whose zero cell starts at 0 rather than -inf.
  bool is_log() const;
  const BoxCoxPrior& box_cox_prior() const;
  const ISpline& ispline_params() const;

  /// g(t). Box-Cox: (sgn(t)|t|^lambda - 1)/lambda, log(t) for lambda = 0.
  /// I-spline: b(t)'gamma, constant 1 beyond the right boundary knot.
  double evaluate(double t) const;

  /// g evaluated at a rounding-cell edge. Infinite edges map to infinities;
  /// for the I-spline, edges above the right boundary map to +inf so the
  /// largest observed count owns [1, inf).
  double edge_value(double edge) const;

  /// g^{-1}(s). Closed form for Box-Cox; for the I-spline, the argmin of
  /// |s - g(t)| over `grid` refined once around the minimiser.
  double inverse(double s, std::span<const double> grid) const;
  /// Same, using the default grid of 10 points per unit on [0, R + 1].
  double inverse(double s) const;
  std::vector<double> default_inverse_grid() const;

  Transformation with_lambda(double lambda) const;
  Transformation with_weights(std::vector<double> weights) const;
  Transformation with_prior_variance(double variance) const;

  nlohmann::json to_json() const;
  static Transformation from_json(const nlohmann::json& j);

 private:
  using Variant = std::variant<BoxCox, LearnedBoxCox, ISpline>;
  explicit Transformation(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Box-Cox g(t; lambda) with the |lambda| < 1e-8 snap to log.
double box_cox_forward(double t, double lambda);
double box_cox_inverse(double s, double lambda);

/// Positive simplex weights whose I-spline curve best matches the Box-Cox
/// curve g(.; lambda0) rescaled to [0, 1] on the integer grid 0..R.
/// Solved by accelerated projected gradient with a 1e-6 floor.
std::vector<double> prior_mean_weights(const ISplineBasis& basis, double lambda0 = 0.5);

/// The rescaled Box-Cox target used by `prior_mean_weights`.
double rescaled_box_cox_target(double t, double lambda0, double right_boundary);

/// Parse the CLI names id | log | sqrt | box-cox | np. The I-spline case
/// needs the observed counts to place knots.
Transformation make_transformation(const std::string& name, std::span<const int> counts,
                                   double lambda0 = 0.5, double prior_variance = 1.0);

}  // namespace star
