#pragma once

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace star {

/// Count responses with a predictor matrix, as read from or written to CSV.
///
/// CSV layout: a header row, the response column (default `y`), any number
/// of numeric predictor columns and an optional `lambda_star` column with
/// the true conditional means of simulated data.
struct Dataset {
  std::vector<std::string> predictor_names;
  Eigen::MatrixXd X;  // n x p
  std::vector<int> y;
  std::vector<double> lambda_star;  // empty when unknown

  std::size_t size() const noexcept { return y.size(); }
  std::size_t predictors() const noexcept { return predictor_names.size(); }
  bool has_truth() const noexcept { return !lambda_star.empty(); }

  /// Index of a predictor by name; throws an input error when absent.
  std::size_t column(const std::string& name) const;

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  /// Parse CSV. Responses must be nonnegative integers.
  static Dataset read_csv(std::istream& in, const std::string& response = "y");
  static Dataset read_csv_file(const std::string& path, const std::string& response = "y");

  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
};

}  // namespace star
