#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace star {

/// Saved MCMC output: named matrices with one row per saved draw plus a JSON
/// block of metadata (model settings, transformation, design, ensembles).
///
/// On disk this is `<stem>.json`, holding the metadata and a matrix table of
/// {name, rows, cols, offset}, and `<stem>.bin`, the column-major doubles.
/// Both are written deterministically.
class PosteriorDraws {
 public:
  nlohmann::json meta = nlohmann::json::object();

  bool has(const std::string& name) const { return matrices_.count(name) != 0; }
  const Eigen::MatrixXd& get(const std::string& name) const;
  Eigen::MatrixXd& get(const std::string& name);
  void set(const std::string& name, Eigen::MatrixXd m);
  std::vector<std::string> names() const;

  /// Rows of the draw matrices (all share it); 0 when empty.
  Eigen::Index draws() const;

  void save(const std::string& json_path) const;
  static PosteriorDraws load(const std::string& json_path);

  /// Stack the draw matrices of several chains. Metadata comes from the first.
  static PosteriorDraws concatenate(const std::vector<PosteriorDraws>& chains);

  /// Path of the binary sidecar that accompanies `json_path`.
  static std::string binary_path(const std::string& json_path);

 private:
  std::map<std::string, Eigen::MatrixXd> matrices_;
};

}  // namespace star
