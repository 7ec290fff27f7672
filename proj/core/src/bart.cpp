#include "star/bart.hpp"

#include "star/error.hpp"
#include "star/samplers.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace star {

double BartPriors::split_probability(int depth) const {
  return alpha * std::pow(1.0 + depth, -beta);
}

// ------------------------------------------------------------------- tree

int RegressionTree::allocate() {
  if (!free_.empty()) {
    const int id = free_.back();
    free_.pop_back();
    nodes_[static_cast<std::size_t>(id)] = Node{};
    return id;
  }
  nodes_.push_back(Node{});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<int> RegressionTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].alive && nodes_[i].leaf()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> RegressionTree::nog_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (nd.alive && !nd.leaf() && node(nd.left).leaf() && node(nd.right).leaf()) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(leaves().size());
}

int RegressionTree::max_depth() const {
  int d = 0;
  for (const auto& nd : nodes_) {
    if (nd.alive) d = std::max(d, nd.depth);
  }
  return d;
}

std::pair<int, int> RegressionTree::grow(int id, int var, double cut) {
  if (!node(id).leaf()) throw Error(ErrorKind::State, "grow at an internal node");
  const int l = allocate();
  const int r = allocate();
  Node& nd = node(id);
  nd.var = var;
  nd.cut = cut;
  nd.left = l;
  nd.right = r;
  for (int c : {l, r}) {
    node(c).parent = id;
    node(c).depth = node(id).depth + 1;
    node(c).value = node(id).value;
  }
  return {l, r};
}

void RegressionTree::prune(int id) {
  Node& nd = node(id);
  if (nd.leaf() || !node(nd.left).leaf() || !node(nd.right).leaf()) {
    throw Error(ErrorKind::State, "prune needs a node with two leaf children");
  }
  for (int c : {nd.left, nd.right}) {
    node(c).alive = false;
    free_.push_back(c);
  }
  nd.left = nd.right = -1;
  nd.var = -1;
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& nd = node(id);
    if (nd.leaf()) {
      out.push_back({-1, 0.0, nd.value});
    } else {
      out.push_back({nd.var, nd.cut, 0.0});
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }
  return out;
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree t;
  std::size_t pos = 0;
  // Rebuild in pre-order: each entry fills the next open slot.
  std::vector<int> open{0};
  while (!open.empty()) {
    if (pos >= j.size()) throw Error(ErrorKind::Input, "truncated tree");
    const int id = open.back();
    open.pop_back();
    const auto& e = j[pos++];
    const int var = e[0].get<int>();
    if (var < 0) {
      t.node(id).value = e[2].get<double>();
    } else {
      const auto [l, r] = t.grow(id, var, e[1].get<double>());
      open.push_back(r);
      open.push_back(l);
    }
  }
  if (pos != j.size()) throw Error(ErrorKind::Input, "trailing entries in tree");
  return t;
}

void TreeFit::refresh(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  leaf_of.resize(static_cast<std::size_t>(n));
  fitted.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int leaf = tree.route(X.row(i));
    leaf_of[static_cast<std::size_t>(i)] = leaf;
    fitted(i) = tree.node(leaf).value;
  }
}

// ------------------------------------------------------------------ moves

double leaf_log_marginal(double count, double sum, double sigma2, double tau) {
  const double denom = sigma2 + count * tau;
  return 0.5 * std::log(sigma2 / denom) + 0.5 * tau * sum * sum / (sigma2 * denom);
}

namespace {

struct SplitOptions {
  std::vector<int> vars;
  std::vector<std::vector<double>> cuts;  // per entry of vars

  std::size_t cut_count(int var) const {
    for (std::size_t k = 0; k < vars.size(); ++k) {
      if (vars[k] == var) return cuts[k].size();
    }
    return 0;
  }
};

SplitOptions split_options(const Eigen::MatrixXd& X, const std::vector<int>& obs, int min_leaf) {
  SplitOptions out;
  const auto n = obs.size();
  if (n < 2 * static_cast<std::size_t>(min_leaf)) return out;
  std::vector<double> vals(n);
  for (Eigen::Index v = 0; v < X.cols(); ++v) {
    for (std::size_t k = 0; k < n; ++k) vals[k] = X(obs[k], v);
    std::sort(vals.begin(), vals.end());
    std::vector<double> cuts;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      // Cut at vals[k] sends k + 1 observations left when vals[k] < vals[k+1].
      if (vals[k] == vals[k + 1]) continue;
      const std::size_t left = k + 1;
      if (left >= static_cast<std::size_t>(min_leaf) && n - left >= static_cast<std::size_t>(min_leaf)) {
        cuts.push_back(vals[k]);
      }
    }
    if (!cuts.empty()) {
      out.vars.push_back(static_cast<int>(v));
      out.cuts.push_back(std::move(cuts));
    }
  }
  return out;
}

std::vector<int> observations(const TreeFit& fit, int a, int b = -2) {
  std::vector<int> out;
  for (std::size_t i = 0; i < fit.leaf_of.size(); ++i) {
    const int l = fit.leaf_of[i];
    if (l == a || l == b) out.push_back(static_cast<int>(i));
  }
  return out;
}

struct SideStats {
  double n_left = 0, s_left = 0, n_right = 0, s_right = 0;
};

SideStats split_stats(const Eigen::MatrixXd& X, const Eigen::VectorXd& residual,
                      const std::vector<int>& obs, int var, double cut) {
  SideStats s;
  for (int i : obs) {
    if (X(i, var) <= cut) {
      s.n_left += 1;
      s.s_left += residual(i);
    } else {
      s.n_right += 1;
      s.s_right += residual(i);
    }
  }
  return s;
}

double log_split_prior_ratio(const BartPriors& p, int depth) {
  const double ps = p.split_probability(depth);
  const double child = p.split_probability(depth + 1);
  return std::log(ps) + 2.0 * std::log1p(-child) - std::log1p(-ps);
}

}  // namespace

TreeUpdateResult tree_update(TreeFit& fit, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& residual, double sigma2, double leaf_sd,
                             const BartPriors& priors, RngStream& rng) {
  RegressionTree& tree = fit.tree;
  const double tau = leaf_sd * leaf_sd;
  const int min_leaf = priors.min_leaf;
  TreeUpdateResult result;

  const auto leaves = tree.leaves();
  const auto nogs = tree.nog_nodes();
  const bool stump = tree.is_stump();
  const double u = rng.uniform();
  if (stump || u < priors.p_grow) {
    result.move = TreeMove::Grow;
  } else if (u < priors.p_grow + priors.p_prune) {
    result.move = TreeMove::Prune;
  } else {
    result.move = TreeMove::Change;
  }

  auto lm = [&](double n, double s) { return leaf_log_marginal(n, s, sigma2, tau); };

  if (result.move == TreeMove::Grow) {
    const int leaf = leaves[rng.index(leaves.size())];
    const auto obs = observations(fit, leaf);
    const auto opts = split_options(X, obs, min_leaf);
    if (!opts.vars.empty()) {
      const std::size_t vi = rng.index(opts.vars.size());
      const int var = opts.vars[vi];
      const double cut = opts.cuts[vi][rng.index(opts.cuts[vi].size())];
      const SideStats s = split_stats(X, residual, obs, var, cut);
      const double log_lik = lm(s.n_left, s.s_left) + lm(s.n_right, s.s_right) -
                             lm(s.n_left + s.n_right, s.s_left + s.s_right);
      const int depth = tree.node(leaf).depth;
      // Nog count after growing: the new node joins, its parent may leave.
      std::size_t nogs_after = nogs.size() + 1;
      const int parent = tree.node(leaf).parent;
      if (parent >= 0) {
        const auto& pn = tree.node(parent);
        const int sibling = pn.left == leaf ? pn.right : pn.left;
        if (tree.node(sibling).leaf()) --nogs_after;
      }
      const double log_forward = std::log(stump ? 1.0 : priors.p_grow) -
                                 std::log(static_cast<double>(leaves.size())) -
                                 std::log(static_cast<double>(opts.vars.size())) -
                                 std::log(static_cast<double>(opts.cuts[vi].size()));
      const double log_reverse = std::log(priors.p_prune) - std::log(static_cast<double>(nogs_after));
      const double log_ratio = log_lik + log_split_prior_ratio(priors, depth) + log_reverse - log_forward;
      if (std::log(rng.uniform()) < log_ratio) {
        const auto [l, r] = tree.grow(leaf, var, cut);
        for (int i : obs) fit.leaf_of[static_cast<std::size_t>(i)] = X(i, var) <= cut ? l : r;
        result.accepted = true;
      }
    }
  } else if (result.move == TreeMove::Prune) {
    const int id = nogs[rng.index(nogs.size())];
    const auto& nd = tree.node(id);
    const auto obs = observations(fit, nd.left, nd.right);
    const auto opts = split_options(X, obs, min_leaf);
    const SideStats s = split_stats(X, residual, obs, nd.var, nd.cut);
    const double log_lik = lm(s.n_left + s.n_right, s.s_left + s.s_right) - lm(s.n_left, s.s_left) -
                           lm(s.n_right, s.s_right);
    const std::size_t cuts = opts.cut_count(nd.var);
    if (cuts > 0) {
      const double leaves_after = static_cast<double>(leaves.size() - 1);
      const double log_forward = std::log(priors.p_prune) - std::log(static_cast<double>(nogs.size()));
      const double log_reverse = std::log(id == 0 ? 1.0 : priors.p_grow) - std::log(leaves_after) -
                                 std::log(static_cast<double>(opts.vars.size())) -
                                 std::log(static_cast<double>(cuts));
      const double log_ratio =
          log_lik - log_split_prior_ratio(priors, nd.depth) + log_reverse - log_forward;
      if (std::log(rng.uniform()) < log_ratio) {
        for (int i : obs) fit.leaf_of[static_cast<std::size_t>(i)] = id;
        tree.prune(id);
        result.accepted = true;
      }
    }
  } else {
    const int id = nogs[rng.index(nogs.size())];
    auto& nd = tree.node(id);
    const auto obs = observations(fit, nd.left, nd.right);
    const auto opts = split_options(X, obs, min_leaf);
    if (!opts.vars.empty()) {
      const std::size_t vi = rng.index(opts.vars.size());
      const int var = opts.vars[vi];
      const double cut = opts.cuts[vi][rng.index(opts.cuts[vi].size())];
      const SideStats old_s = split_stats(X, residual, obs, nd.var, nd.cut);
      const SideStats new_s = split_stats(X, residual, obs, var, cut);
      const double log_lik = lm(new_s.n_left, new_s.s_left) + lm(new_s.n_right, new_s.s_right) -
                             lm(old_s.n_left, old_s.s_left) - lm(old_s.n_right, old_s.s_right);
      const std::size_t old_cuts = opts.cut_count(nd.var);
      if (old_cuts > 0) {
        const double log_q = std::log(static_cast<double>(opts.cuts[vi].size())) -
                             std::log(static_cast<double>(old_cuts));
        if (std::log(rng.uniform()) < log_lik + log_q) {
          nd.var = var;
          nd.cut = cut;
          for (int i : obs) fit.leaf_of[static_cast<std::size_t>(i)] = X(i, var) <= cut ? nd.left : nd.right;
          result.accepted = true;
        }
      }
    }
  }

  // Leaf values from their conjugate Gaussian conditionals.
  std::size_t slots = 0;
  for (int l : tree.leaves()) slots = std::max(slots, static_cast<std::size_t>(l) + 1);
  std::vector<double> count(slots, 0.0);
  std::vector<double> sum(slots, 0.0);
  for (std::size_t i = 0; i < fit.leaf_of.size(); ++i) {
    count[static_cast<std::size_t>(fit.leaf_of[i])] += 1.0;
    sum[static_cast<std::size_t>(fit.leaf_of[i])] += residual(static_cast<Eigen::Index>(i));
  }
  for (int l : tree.leaves()) {
    const double n = count[static_cast<std::size_t>(l)];
    const double denom = sigma2 + n * tau;
    const double mean = tau * sum[static_cast<std::size_t>(l)] / denom;
    const double sd = std::sqrt(sigma2 * tau / denom);
    tree.node(l).value = mean + sd * rng.normal();
  }
  for (std::size_t i = 0; i < fit.leaf_of.size(); ++i) {
    fit.fitted(static_cast<Eigen::Index>(i)) = tree.node(fit.leaf_of[i]).value;
  }
  return result;
}

// --------------------------------------------------------------- ensemble

double predict_ensemble(const TreeEnsemble& ensemble, const Eigen::RowVectorXd& x) {
  return ensemble.predict(x);
}

TreeEnsemble initial_ensemble(const Eigen::MatrixXd& X, std::span<const double> z0,
                              const BartPriors& priors, double sigma_hat) {
  if (priors.trees < 1) throw Error(ErrorKind::Parameter, "BART needs at least one tree");
  if (z0.empty()) throw Error(ErrorKind::Input, "BART needs data");
  TreeEnsemble e;
  e.priors = priors;
  const auto [lo, hi] = std::minmax_element(z0.begin(), z0.end());
  e.offset = 0.5 * (*lo + *hi);
  const double range = *hi > *lo ? *hi - *lo : 1.0;
  e.leaf_sd = range * 0.5 / (priors.k * std::sqrt(static_cast<double>(priors.trees)));
  e.sigma2 = sigma_hat * sigma_hat;
  e.trees.resize(static_cast<std::size_t>(priors.trees));
  for (auto& t : e.trees) t.refresh(X);
  e.total = Eigen::VectorXd::Zero(X.rows());
  return e;
}

void bart_sweep(TreeEnsemble& ensemble, const Eigen::MatrixXd& X, std::span<const double> z,
                RngStream& rng) {
  const auto n = X.rows();
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);
  for (auto& t : ensemble.trees) {
    const Eigen::VectorXd residual = zv.array() - ensemble.offset - (ensemble.total - t.fitted).array();
    const Eigen::VectorXd before = t.fitted;
    tree_update(t, X, residual, ensemble.sigma2, ensemble.leaf_sd, ensemble.priors, rng);
    ensemble.total += t.fitted - before;
  }
  const double rss = (zv.array() - ensemble.offset - ensemble.total.array()).square().sum();
  const double nu = ensemble.priors.nu;
  ensemble.sigma2 = draw_inverse_gamma_variance(0.5 * (nu + static_cast<double>(n)),
                                                0.5 * (nu * ensemble.sigma_scale + rss), rng);
}

SigmaPrior sigma_prior_from_estimate(double sigma_hat, double nu, double q) {
  if (!(sigma_hat > 0.0) || !(nu > 0.0) || !(q > 0.0 && q < 1.0)) {
    throw Error(ErrorKind::Parameter, "sigma prior needs sigma_hat > 0, nu > 0, q in (0, 1)");
  }
  const boost::math::chi_squared chi(nu);
  const double scale = sigma_hat * sigma_hat * boost::math::quantile(chi, 1.0 - q) / nu;
  return {nu, scale, sigma_hat};
}

SigmaPrior calibrate_sigma_prior(const Dataset& data, const TransformationState& transform,
                                 const RoundingScheme& scheme, const BartPriors& priors, int burn,
                                 int save, RngStream& rng, bool gaussian, GaussianLink link) {
  if (save < 1) throw Error(ErrorKind::Parameter, "calibration needs saved draws");
  const auto design = AdditiveDesign::build(data, {});
  AdditiveState state = gaussian ? AdditiveState::initial_gaussian(design, data.y, link)
                                 : AdditiveState::initial(design, data.y, scheme, transform);
  std::vector<double> sigmas;
  sigmas.reserve(static_cast<std::size_t>(save));
  for (int it = 0; it < burn + save; ++it) {
    state.transform.set_adapting(it < burn / 2);
    gibbs_sweep_additive(state, design, data.y, scheme, rng);
    if (it >= burn) sigmas.push_back(state.sigma());
  }
  const auto mid = sigmas.begin() + static_cast<std::ptrdiff_t>(sigmas.size() / 2);
  std::nth_element(sigmas.begin(), mid, sigmas.end());
  double median = *mid;
  if (sigmas.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(sigmas.begin(), mid));
  }
  return sigma_prior_from_estimate(median, priors.nu, priors.q);
}

}  // namespace star
