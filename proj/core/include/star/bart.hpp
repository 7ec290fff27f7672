#pragma once

#include "star/additive.hpp"
#include "star/latent.hpp"
#include "star/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace star {

struct BartPriors {
  int trees = 50;
  double alpha = 0.95;  // split probability alpha (1 + depth)^(-beta)
  double beta = 2.0;
  double k = 2.0;       // leaf shrinkage
  double nu = 3.0;      // sigma^2 ~ nu lambda / chi^2_nu
  double q = 0.9;       // prior P(sigma < sigma_hat)
  int min_leaf = 5;
  double p_grow = 0.25;
  double p_prune = 0.25;  // change takes the rest

  double split_probability(int depth) const;
};

/// Binary regression tree. Observations with x[var] <= cut go left.
class RegressionTree {
 public:
  struct Node {
    int var = -1;
    double cut = 0.0;
    int left = -1;
    int right = -1;
    int parent = -1;
    int depth = 0;
    double value = 0.0;
    bool alive = true;

    bool leaf() const noexcept { return left < 0; }
  };

  RegressionTree() : nodes_{Node{}} {}
  explicit RegressionTree(double value) : nodes_{Node{}} { nodes_[0].value = value; }

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  /// Leaf reached by routing a predictor row.
  template <class Row>
  int route(const Row& x) const {
    int id = 0;
    while (!node(id).leaf()) {
      const Node& nd = node(id);
      id = x(nd.var) <= nd.cut ? nd.left : nd.right;
    }
    return id;
  }
  template <class Row>
  double predict(const Row& x) const {
    return node(route(x)).value;
  }

  std::vector<int> leaves() const;
  /// Internal nodes whose two children are leaves.
  std::vector<int> nog_nodes() const;
  int leaf_count() const;
  int max_depth() const;
  bool is_stump() const noexcept { return node(0).leaf(); }

  /// Split leaf `id`; returns the ids of the new (left, right) children.
  std::pair<int, int> grow(int id, int var, double cut);
  /// Collapse a nog node back to a leaf.
  void prune(int id);

  /// Pre-order list of [var, cut, value]; var = -1 marks a leaf.
  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  int allocate();
  std::vector<Node> nodes_;
  std::vector<int> free_;
};

/// Per-tree bookkeeping for one training set: the leaf of every observation.
struct TreeFit {
  RegressionTree tree;
  std::vector<int> leaf_of;
  Eigen::VectorXd fitted;

  void refresh(const Eigen::MatrixXd& X);
};

/// Log marginal likelihood (up to terms shared by all trees) of a leaf with
/// `count` residuals summing to `sum`, leaf prior N(0, tau).
double leaf_log_marginal(double count, double sum, double sigma2, double tau);

enum class TreeMove { Grow, Prune, Change, None };

struct TreeUpdateResult {
  TreeMove move = TreeMove::None;
  bool accepted = false;
};

/// One grow/prune/change Metropolis-Hastings step on tree k given the partial
/// residual, then a redraw of every leaf value from its Gaussian conditional.
TreeUpdateResult tree_update(TreeFit& fit, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& residual, double sigma2, double leaf_sd,
                             const BartPriors& priors, RngStream& rng);

/// The sum-of-trees state inside the STAR Gibbs loop.
struct TreeEnsemble {
  std::vector<TreeFit> trees;
  double offset = 0.0;   // fixed centring of the latent scale
  double leaf_sd = 1.0;  // sigma_mu
  double sigma2 = 1.0;
  double sigma_scale = 1.0;  // lambda of the scaled inverse-chi-square prior
  BartPriors priors;
  Eigen::VectorXd total;  // sum of the per-tree fits on the training rows

  template <class Row>
  double predict(const Row& x) const {
    double s = offset;
    for (const auto& t : trees) s += t.tree.predict(x);
    return s;
  }
  Eigen::VectorXd training_mean() const { return total.array() + offset; }
};

/// mu(x) for a row: offset plus the sum of leaf values reached.
double predict_ensemble(const TreeEnsemble& ensemble, const Eigen::RowVectorXd& x);

/// Build an ensemble of stumps. sigma_mu is scaled to the range of the
/// starting latent values so the prior on mu(x) spans it.
TreeEnsemble initial_ensemble(const Eigen::MatrixXd& X, std::span<const double> z0,
                              const BartPriors& priors, double sigma_hat);

/// Backfit every tree, then draw sigma^2. `z` holds the current latents.
void bart_sweep(TreeEnsemble& ensemble, const Eigen::MatrixXd& X, std::span<const double> z,
                RngStream& rng);

struct SigmaPrior {
  double nu;
  double scale;  // lambda: sigma^2 ~ nu lambda / chi^2_nu
  double sigma_hat;
};

/// lambda such that P(sigma < sigma_hat) = q under sigma^2 ~ nu lambda / chi^2_nu.
SigmaPrior sigma_prior_from_estimate(double sigma_hat, double nu, double q);

/// Short linear fit on the same latent scale (STAR with the given
/// transformation, or the Gaussian baseline when `gaussian` is set); sigma_hat
/// is the posterior median of sigma.
SigmaPrior calibrate_sigma_prior(const Dataset& data, const TransformationState& transform,
                                 const RoundingScheme& scheme, const BartPriors& priors,
                                 int burn, int save, RngStream& rng, bool gaussian = false,
                                 GaussianLink link = GaussianLink::Log1p);

}  // namespace star
