#pragma once

#include "star/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>

namespace star {

/// Draw from N(mu, sigma^2) restricted to (lower, upper).
///
/// Moderate regions use the inverse CDF on whichever tail keeps precision.
/// When the interval starts more than 6 standard deviations out, an
/// exponential proposal (or a uniform one for very narrow intervals) with
/// rejection is used, which keeps the expected number of proposals bounded.
double sample_truncated_normal(double mu, double sigma, double lower, double upper, RngStream& rng);

/// Standard-normal version on (a, b); exposed for tests and benchmarks.
double sample_truncated_standard_normal(double a, double b, RngStream& rng);

struct SliceSettings {
  double width = 1.0;
  int max_steps = 100;
};

/// Univariate slice sampler with stepping out and shrinkage. `log_density`
/// may return -inf; the returned point always lies in [lower, upper].
double slice_sample(const std::function<double(double)>& log_density, double current,
                    RngStream& rng, SliceSettings settings = {},
                    double lower = -std::numeric_limits<double>::infinity(),
                    double upper = std::numeric_limits<double>::infinity());

/// Robust adaptive Metropolis state: the proposal is x + S u with u ~ N(0, I)
/// and S lower triangular.
struct RamState {
  Eigen::MatrixXd factor;
  double target_accept = 0.30;
  double adapt_rate = 0.75;
  long steps = 0;
  bool adapting = true;

  static RamState initial(Eigen::Index dim, double scale = 1.0);
};

struct RamResult {
  Eigen::VectorXd point;
  double log_density;
  bool accepted;
  /// The rank-one update would have lost positive definiteness; S was kept.
  bool adaptation_rejected;
};

/// One random-walk Metropolis step with the current factor and, when
/// adapting, the Vihola update SS' <- S(I + eta (alpha - alpha*) uu'/|u|^2)S'
/// with eta = min(1, d n^{-adapt_rate}). `current_log_density` avoids
/// recomputing the density at the current point.
RamResult ram_step(RamState& state, const Eigen::VectorXd& current, double current_log_density,
                   const std::function<double(const Eigen::VectorXd&)>& log_density,
                   RngStream& rng);

/// sigma^2 such that 1/sigma^2 ~ Gamma(shape, rate).
double draw_inverse_gamma_variance(double shape, double rate, RngStream& rng);

/// Gamma(shape, rate) restricted to [lower, inf), by inverse CDF on the upper tail.
double draw_truncated_gamma(double shape, double rate, double lower, RngStream& rng);

/// x ~ N(Q^{-1} b, Q^{-1}) for a symmetric positive definite precision Q.
Eigen::VectorXd draw_gaussian_canonical(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear, RngStream& rng);

}  // namespace star
