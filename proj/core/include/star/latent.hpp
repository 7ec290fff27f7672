#pragma once

// Pieces shared by every STAR regression: the latent data augmentation step,
// the marginal count likelihood given the latent mean, and the updates of a
// learnable transformation.

#include "star/rng.hpp"
#include "star/rounding.hpp"
#include "star/samplers.hpp"
#include "star/transform.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace star {

/// Transformed cell edges g(A_j) for j = 0..max_count, computed once per
/// transformation so per-observation work is two lookups.
class CellTable {
 public:
  CellTable(const Transformation& g, const RoundingScheme& scheme, int max_count);

  const Interval& operator[](int j) const { return cells_[static_cast<std::size_t>(j)]; }
  int max_count() const noexcept { return static_cast<int>(cells_.size()) - 1; }

 private:
  std::vector<Interval> cells_;
};

/// Sum over i of log P(y_i | g, mu_i, sigma).
double total_log_likelihood(std::span<const int> y, const Transformation& g,
                            const RoundingScheme& scheme, std::span<const double> mu, double sigma);

/// z*_i ~ N(mu_i, sigma^2) truncated to g(A_{y_i}), independently over i.
void impute_latents(std::span<const int> y, const Transformation& g, const RoundingScheme& scheme,
                    std::span<const double> mu, double sigma, RngStream& rng, std::span<double> z);

/// Starting latent values: g(y + 1/2), which lies inside every cell g(A_y).
std::vector<double> initial_latents(std::span<const int> y, const Transformation& g,
                                    const RoundingScheme& scheme);

struct TransformUpdateSettings {
  SliceSettings slice{};
  double ram_target = 0.30;
  double ram_adapt_rate = 0.75;
  double ram_initial_scale = 0.1;
  // Gamma(a, b) prior on the I-spline precision 1/sigma_gamma^2.
  double precision_shape = 0.001;
  double precision_rate = 0.001;
};

/// Sampler state for the transformation: the current g and, for the I-spline,
/// the unnormalised weights plus the adaptive proposal.
class TransformationState {
 public:
  TransformationState() : TransformationState(Transformation::identity()) {}
  explicit TransformationState(Transformation g, TransformUpdateSettings settings = {});

  const Transformation& current() const noexcept { return g_; }
  bool learnable() const noexcept { return g_.learnable(); }

  /// One update of the transformation given mu and sigma, marginal over z*:
  /// a slice step on lambda for Box-Cox, or a RAM step on log(unnormalised
  /// weights) followed by the conjugate prior-variance draw for the I-spline.
  void update(std::span<const int> y, const RoundingScheme& scheme, std::span<const double> mu,
              double sigma, RngStream& rng);

  void set_adapting(bool on) { ram_.adapting = on; }
  const RamState& ram() const noexcept { return ram_; }
  long accepted() const noexcept { return accepted_; }
  long proposed() const noexcept { return proposed_; }

  /// Flat parameter vector for storage: [lambda] or the L weights.
  std::vector<double> parameters() const;
  static Transformation with_parameters(const Transformation& base, std::span<const double> params);

 private:
  Transformation g_;
  TransformUpdateSettings settings_;
  Eigen::VectorXd log_unnormalised_;
  RamState ram_;
  long accepted_ = 0;
  long proposed_ = 0;
};

/// Continuous-data baseline: a Gaussian model for link(y) with no rounding.
enum class GaussianLink { Identity, Log1p };

double gaussian_link(int y, GaussianLink link);
double gaussian_inverse_link(double z, GaussianLink link);
/// log density of y under link(y) ~ N(mu, sigma^2), including the Jacobian.
double gaussian_log_density(int y, GaussianLink link, double mu, double sigma);
/// E[y] under link(y) ~ N(mu, sigma^2).
double gaussian_expected_count(GaussianLink link, double mu, double sigma);

}  // namespace star
