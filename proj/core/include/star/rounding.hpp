#pragma once

#include "star/transform.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace star {

/// The partition {A_j = [a_j, a_{j+1})} of the latent count scale.
///
/// Edges are a_j = j for j >= 1. The bottom edge a_0 is -inf, or 0 when the
/// transformation is the log (which needs t > 0). Bounded and censored
/// schemes merge everything at or above a_K into the top cell [a_K, inf); they
/// differ only in how the observed K is interpreted, so the cell algebra is
/// identical. An optional left-censoring point L merges [a_0, a_{L+1}) into
/// the bottom cell.
struct RoundingScheme {
  enum class Kind { Floor, FloorBounded, FloorCensored };

  Kind kind = Kind::Floor;
  int top = 0;          // K for bounded/censored schemes
  int left_censor = 0;  // L; 0 disables left censoring

  static RoundingScheme floor() { return {}; }
  static RoundingScheme bounded(int K);
  static RoundingScheme censored(int K);
  RoundingScheme with_left_censoring(int L) const;

  bool has_top() const noexcept { return kind != Kind::Floor; }
  /// Largest attainable value, or nullopt when unbounded.
  std::optional<int> max_value() const;

  /// Lower edge a_j of cell j on the count scale (the log flag sets a_0 = 0).
  double lower_edge(int j, bool log_transform) const;
  /// Upper edge a_{j+1}; +inf for the top cell.
  double upper_edge(int j, bool log_transform) const;

  std::string name() const;
  static RoundingScheme parse(const std::string& text);

  friend bool operator==(const RoundingScheme&, const RoundingScheme&) = default;
};

/// h(y*): the unique j with y* in A_j, clamped at 0 below.
int round_latent(double y_star, const RoundingScheme& scheme);

/// The cell interval g(A_j) = [g(a_j), g(a_{j+1})) on the Gaussian scale.
struct Interval {
  double lower;
  double upper;
};
Interval transformed_cell(int j, const Transformation& g, const RoundingScheme& scheme);

/// h(g^{-1}(s)) computed by locating s among the transformed edges. This is
/// exact for every transformation, including the I-spline whose grid inverse
/// is only approximate.
int round_transformed(double s, const Transformation& g, const RoundingScheme& scheme);

/// P(y = j) = Phi((g(a_{j+1}) - mu)/sigma) - Phi((g(a_j) - mu)/sigma).
double pmf(int j, const Transformation& g, const RoundingScheme& scheme, double mu, double sigma);
double log_pmf(int j, const Transformation& g, const RoundingScheme& scheme, double mu,
               double sigma);
/// log P(y = j) from precomputed transformed edges.
double log_pmf_from_cell(const Interval& cell, double mu, double sigma);

/// Truncated E[y] = sum_{j=1}^{J} j P(y = j), J = h(g^{-1}(z_q)) with z_q the
/// `tail_quantile` point of N(mu, sigma^2).
double conditional_expectation(const Transformation& g, const RoundingScheme& scheme, double mu,
                               double sigma, double tail_quantile = 0.9999);

struct DispersionRow {
  double mu;
  double sigma;
  double mean;
  double variance;
  double prob_zero;
};

/// E[y], Var(y) and P(y = 0) over a (mu, sigma) grid. Moments use a truncated
/// sum whose leftover tail mass is credited to the last summed cell.
std::vector<DispersionRow> dispersion_profile(const Transformation& g, const RoundingScheme& scheme,
                                              const std::vector<double>& mu_grid,
                                              const std::vector<double>& sigma_grid);
void write_dispersion_csv(std::ostream& out, const std::vector<DispersionRow>& rows);

/// Largest count whose cell needs to be considered for (mu, sigma): the
/// rounded inverse of the `tail_quantile` point, capped by the scheme's top.
int truncation_point(const Transformation& g, const RoundingScheme& scheme, double mu, double sigma,
                     double tail_quantile);

}  // namespace star
