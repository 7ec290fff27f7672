#include "star/transform.hpp"

#include "star/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace star {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaSnap = 1e-8;
constexpr int kOrder = ISplineBasis::kDegree + 2;  // B-spline order of the integrated basis

// Nonzero B-splines of order kOrder at t for knot span `span` (de Boor).
void bspline_values(const std::vector<double>& knots, std::size_t span, double t,
                    std::array<double, kOrder>& out) {
  std::array<double, kOrder> left{}, right{};
  out[0] = 1.0;
  for (int j = 1; j < kOrder; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double term = denom > 0.0 ? out[r] / denom : 0.0;
      out[r] = saved + right[r + 1] * term;
      saved = left[j - r] * term;
    }
    out[j] = saved;
  }
}

double type7_quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

// ---------------------------------------------------------------- ISplineBasis

ISplineBasis::ISplineBasis(std::vector<double> interior_knots, double right_boundary)
    : interior_(std::move(interior_knots)), right_(right_boundary) {
  if (!(right_ > 0.0) || !std::isfinite(right_)) {
    throw Error(ErrorKind::Parameter, "I-spline right boundary must be positive and finite");
  }
  double prev = 0.0;
  for (double k : interior_) {
    if (!(k > prev) || !(k < right_)) {
      throw Error(ErrorKind::Parameter, "I-spline interior knots must increase strictly inside (0, R)");
    }
    prev = k;
  }
  full_knots_.assign(kOrder, 0.0);
  full_knots_.insert(full_knots_.end(), interior_.begin(), interior_.end());
  full_knots_.insert(full_knots_.end(), kOrder, right_);
  // kOrder-th order B-splines: n_int + kOrder of them; the cumulative sum from
  // the first one is identically 1 and is dropped.
  size_ = interior_.size() + kOrder - 1;

  const auto top = static_cast<int>(std::ceil(right_)) + 1;
  grid_.resize(top + 1, static_cast<Eigen::Index>(size_));
  std::vector<double> row(size_);
  for (int t = 0; t <= top; ++t) {
    evaluate(static_cast<double>(t), row);
    for (std::size_t l = 0; l < size_; ++l) grid_(t, static_cast<Eigen::Index>(l)) = row[l];
  }
}

int ISplineBasis::basis_size_for(std::size_t unique_values) {
  const auto extra = std::min<std::size_t>(unique_values / 4, 10);
  return std::max(4, 2 + static_cast<int>(extra));
}

ISplineBasis ISplineBasis::from_counts(std::span<const int> counts) {
  if (counts.empty()) throw Error(ErrorKind::Input, "no counts to place I-spline knots");
  std::set<int> unique;
  for (int y : counts) {
    if (y < 0) throw Error(ErrorKind::Input, "counts must be nonnegative");
    unique.insert(y);
  }
  if (unique.size() == 1) throw Error(ErrorKind::DegenerateData, "all counts are equal");
  if (unique.size() < 3) {
    throw Error(ErrorKind::DegenerateData, "I-spline transformation needs at least 3 unique counts");
  }
  const int max_y = *unique.rbegin();
  const int L = basis_size_for(unique.size());
  const int n_quantile = L - 4;  // L - 3 interior knots, one of them at 1

  std::vector<double> interior{1.0};
  if (n_quantile > 0) {
    std::vector<double> pool;
    for (int y : counts)
      if (y > 1 && y < max_y) pool.push_back(y);
    std::sort(pool.begin(), pool.end());
    std::vector<double> q;
    if (!pool.empty()) {
      for (int k = 1; k <= n_quantile; ++k) {
        q.push_back(type7_quantile(pool, static_cast<double>(k) / (n_quantile + 1)));
      }
    }
    bool ok = q.size() == static_cast<std::size_t>(n_quantile);
    for (std::size_t k = 0; ok && k < q.size(); ++k) {
      const double prev = k == 0 ? 1.0 : q[k - 1];
      ok = q[k] > prev + 1e-9 && q[k] < max_y - 1e-9;
    }
    if (!ok) {
      // Ties in the quantiles: spread the knots evenly over (1, max y) instead.
      q.clear();
      for (int k = 1; k <= n_quantile; ++k) {
        q.push_back(1.0 + (max_y - 1.0) * static_cast<double>(k) / (n_quantile + 1));
      }
    }
    interior.insert(interior.end(), q.begin(), q.end());
  }
  return ISplineBasis(std::move(interior), static_cast<double>(max_y));
}

void ISplineBasis::evaluate(double t, std::span<double> out) const {
  if (out.size() != size_) throw Error(ErrorKind::Parameter, "I-spline output size mismatch");
  if (!std::isfinite(t) && !std::isinf(t)) throw Error(ErrorKind::Input, "I-spline at NaN");
  if (t <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (t >= right_) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  // knot span: full_knots_[span] <= t < full_knots_[span + 1]
  const auto it = std::upper_bound(full_knots_.begin(), full_knots_.end(), t);
  const auto span = static_cast<std::size_t>(it - full_knots_.begin()) - 1;
  std::array<double, kOrder> b{};
  bspline_values(full_knots_, span, t, b);
  // b[r] is B-spline number span - (kOrder - 1) + r. The I-spline with index l
  // (0-based, B-spline l + 1 onwards) is the tail sum of B-splines.
  const std::size_t first = span + 1 - kOrder;
  double tail = 0.0;
  std::vector<double> bfull(size_ + 1, 0.0);
  for (int r = 0; r < kOrder; ++r) bfull[first + r] = b[r];
  for (std::size_t j = size_ + 1; j-- > 1;) {
    tail += bfull[j];
    out[j - 1] = tail;
  }
}

Eigen::VectorXd ISplineBasis::evaluate(double t) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size_));
  evaluate(t, std::span<double>(v.data(), size_));
  return v;
}

// ----------------------------------------------------------------- Box-Cox

double BoxCoxPrior::log_density(double lambda) const {
  if (lambda < lower || lambda > upper) return -kInf;
  const double z = (lambda - mean) / sd;
  return -0.5 * z * z;
}

double box_cox_forward(double t, double lambda) {
  if (!std::isfinite(t)) {
    if (std::isinf(t)) {
      if (std::abs(lambda) < kLambdaSnap) {
        if (t > 0) return kInf;
        throw Error(ErrorKind::Domain, "log transformation needs t > 0");
      }
      return t;  // signed power preserves the sign of an infinite argument
    }
    throw Error(ErrorKind::Input, "transformation argument is not finite");
  }
  if (lambda < 0.0) throw Error(ErrorKind::Parameter, "Box-Cox lambda must be nonnegative");
  if (lambda < kLambdaSnap) {
    if (!(t > 0.0)) throw Error(ErrorKind::Domain, "log transformation needs t > 0");
    return std::log(t);
  }
  if (lambda == 1.0) return t - 1.0;
  if (lambda == 0.5) return 2.0 * std::copysign(std::sqrt(std::abs(t)), t) - 2.0;
  return (std::copysign(std::pow(std::abs(t), lambda), t) - 1.0) / lambda;
}

double box_cox_inverse(double s, double lambda) {
  if (lambda < 0.0) throw Error(ErrorKind::Parameter, "Box-Cox lambda must be nonnegative");
  if (lambda < kLambdaSnap) return std::exp(s);
  if (lambda == 1.0) return s + 1.0;
  const double u = lambda * s + 1.0;
  if (lambda == 0.5) return std::copysign(u * u, u);
  return std::copysign(std::pow(std::abs(u), 1.0 / lambda), u);
}

// ---------------------------------------------------------- Transformation

Transformation Transformation::box_cox(double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::Parameter, "Box-Cox lambda must be nonnegative");
  return Transformation(BoxCox{lambda < kLambdaSnap ? 0.0 : lambda});
}

Transformation Transformation::learned_box_cox(double lambda, BoxCoxPrior prior) {
  if (!(lambda >= prior.lower && lambda <= prior.upper)) {
    throw Error(ErrorKind::Parameter, "initial lambda outside its prior support");
  }
  return Transformation(LearnedBoxCox{lambda, prior});
}

Transformation Transformation::ispline(std::shared_ptr<const ISplineBasis> basis,
                                       std::vector<double> weights,
                                       std::vector<double> prior_mean, double prior_variance) {
  if (!basis) throw Error(ErrorKind::Parameter, "I-spline transformation needs a basis");
  if (weights.size() != basis->size() || prior_mean.size() != basis->size()) {
    throw Error(ErrorKind::Parameter, "I-spline weight length does not match the basis");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::Parameter, "I-spline weights must be positive");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::Parameter, "I-spline weights must sum to 1");
  }
  if (!(prior_variance > 0.0)) throw Error(ErrorKind::Parameter, "prior variance must be positive");
  return Transformation(ISpline{std::move(basis), std::move(weights), std::move(prior_mean),
                                prior_variance});
}

TransformKind Transformation::kind() const noexcept {
  switch (v_.index()) {
    case 0: return TransformKind::BoxCoxFixed;
    case 1: return TransformKind::BoxCoxLearned;
    default: return TransformKind::ISpline;
  }
}

double Transformation::lambda() const {
  if (const auto* b = std::get_if<BoxCox>(&v_)) return b->lambda;
  if (const auto* b = std::get_if<LearnedBoxCox>(&v_)) return b->lambda;
  throw Error(ErrorKind::Parameter, "I-spline transformation has no lambda");
}

bool Transformation::is_log() const { return is_box_cox() && lambda() < kLambdaSnap; }

const BoxCoxPrior& Transformation::box_cox_prior() const {
  if (const auto* b = std::get_if<LearnedBoxCox>(&v_)) return b->prior;
  throw Error(ErrorKind::Parameter, "transformation has no lambda prior");
}

const Transformation::ISpline& Transformation::ispline_params() const {
  if (const auto* s = std::get_if<ISpline>(&v_)) return *s;
  throw Error(ErrorKind::Parameter, "not an I-spline transformation");
}

double Transformation::evaluate(double t) const {
  if (std::isnan(t)) throw Error(ErrorKind::Input, "transformation argument is NaN");
  if (is_box_cox()) {
    if (!std::isfinite(t)) throw Error(ErrorKind::Input, "transformation argument is not finite");
    return box_cox_forward(t, lambda());
  }
  if (!std::isfinite(t)) throw Error(ErrorKind::Input, "transformation argument is not finite");
  const auto& sp = std::get<ISpline>(v_);
  if (t < 0.0) throw Error(ErrorKind::Domain, "I-spline transformation is defined for t >= 0");
  if (t >= sp.basis->right_boundary()) return 1.0;
  const auto L = sp.basis->size();
  const auto& grid = sp.basis->integer_grid();
  const double r = std::round(t);
  double g = 0.0;
  if (r == t) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t l = 0; l < L; ++l) g += grid(row, static_cast<Eigen::Index>(l)) * sp.weights[l];
    return g;
  }
  std::vector<double> b(L);
  sp.basis->evaluate(t, b);
  for (std::size_t l = 0; l < L; ++l) g += b[l] * sp.weights[l];
  return g;
}

double Transformation::edge_value(double edge) const {
  if (std::isnan(edge)) throw Error(ErrorKind::Input, "cell edge is NaN");
  if (edge == -kInf) return -kInf;
  if (edge == kInf) return kInf;
  if (is_box_cox()) {
    if (is_log() && edge <= 0.0) return -kInf;
    return box_cox_forward(edge, lambda());
  }
  const auto& sp = std::get<ISpline>(v_);
  if (edge < 0.0) return -kInf;
  if (edge > sp.basis->right_boundary()) return kInf;
  return evaluate(edge);
}

std::vector<double> Transformation::default_inverse_grid() const {
  const auto& sp = ispline_params();
  const double top = sp.basis->right_boundary() + 1.0;
  const auto n = static_cast<std::size_t>(std::ceil(top * 10.0)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = std::min(top, static_cast<double>(i) / 10.0);
  return grid;
}

double Transformation::inverse(double s) const {
  if (is_box_cox()) return box_cox_inverse(s, lambda());
  return inverse(s, default_inverse_grid());
}

double Transformation::inverse(double s, std::span<const double> grid) const {
  if (std::isnan(s)) throw Error(ErrorKind::Input, "inverse argument is NaN");
  if (is_box_cox()) return box_cox_inverse(s, lambda());
  if (grid.empty()) throw Error(ErrorKind::Parameter, "inverse needs a nonempty grid");
  std::size_t best = 0;
  double best_gap = kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double gap = std::abs(s - evaluate(grid[i]));
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  // One refinement pass of 10 sub-steps between the neighbouring grid points.
  const double lo = grid[best > 0 ? best - 1 : best];
  const double hi = grid[best + 1 < grid.size() ? best + 1 : best];
  double best_t = grid[best];
  if (hi > lo) {
    constexpr int kSub = 20;
    for (int k = 0; k <= kSub; ++k) {
      const double t = lo + (hi - lo) * k / kSub;
      const double gap = std::abs(s - evaluate(t));
      if (gap < best_gap) {
        best_gap = gap;
        best_t = t;
      }
    }
  }
  return best_t;
}

Transformation Transformation::with_lambda(double lambda) const {
  if (const auto* b = std::get_if<LearnedBoxCox>(&v_)) return learned_box_cox(lambda, b->prior);
  if (std::holds_alternative<BoxCox>(v_)) return box_cox(lambda);
  throw Error(ErrorKind::Parameter, "I-spline transformation has no lambda");
}

Transformation Transformation::with_weights(std::vector<double> weights) const {
  const auto& sp = ispline_params();
  return ispline(sp.basis, std::move(weights), sp.prior_mean, sp.prior_variance);
}

Transformation Transformation::with_prior_variance(double variance) const {
  const auto& sp = ispline_params();
  return ispline(sp.basis, sp.weights, sp.prior_mean, variance);
}

nlohmann::json Transformation::to_json() const {
  nlohmann::json j;
  switch (kind()) {
    case TransformKind::BoxCoxFixed:
      j["kind"] = "box-cox-fixed";
      j["lambda"] = lambda();
      break;
    case TransformKind::BoxCoxLearned: {
      const auto& p = box_cox_prior();
      j["kind"] = "box-cox";
      j["lambda"] = lambda();
      j["prior"] = {{"mean", p.mean}, {"sd", p.sd}, {"lower", p.lower}, {"upper", p.upper}};
      break;
    }
    case TransformKind::ISpline: {
      const auto& sp = ispline_params();
      std::vector<double> knots{0.0};
      knots.insert(knots.end(), sp.basis->interior_knots().begin(), sp.basis->interior_knots().end());
      knots.push_back(sp.basis->right_boundary());
      j["kind"] = "ispline";
      j["knots"] = knots;
      j["weights"] = sp.weights;
      j["prior_mean"] = sp.prior_mean;
      j["prior_variance"] = sp.prior_variance;
      break;
    }
  }
  return j;
}

Transformation Transformation::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "box-cox-fixed") return box_cox(j.at("lambda").get<double>());
  if (kind == "box-cox") {
    BoxCoxPrior prior;
    if (j.contains("prior")) {
      const auto& p = j["prior"];
      prior = BoxCoxPrior{p.at("mean"), p.at("sd"), p.at("lower"), p.at("upper")};
    }
    return learned_box_cox(j.at("lambda").get<double>(), prior);
  }
  if (kind == "ispline") {
    auto knots = j.at("knots").get<std::vector<double>>();
    if (knots.size() < 2) throw Error(ErrorKind::Input, "I-spline knots need both boundaries");
    std::vector<double> interior(knots.begin() + 1, knots.end() - 1);
    auto basis = std::make_shared<const ISplineBasis>(std::move(interior), knots.back());
    auto weights = j.at("weights").get<std::vector<double>>();
    auto mean = j.contains("prior_mean") ? j["prior_mean"].get<std::vector<double>>() : weights;
    const double var = j.value("prior_variance", 1.0);
    return ispline(std::move(basis), std::move(weights), std::move(mean), var);
  }
  throw Error(ErrorKind::Input, "unknown transformation kind '" + kind + "'");
}

// ------------------------------------------------------ prior mean weights

double rescaled_box_cox_target(double t, double lambda0, double right_boundary) {
  if (lambda0 < kLambdaSnap) return std::log1p(t) / std::log1p(right_boundary);
  const double lo = box_cox_forward(0.0, lambda0);
  const double hi = box_cox_forward(right_boundary, lambda0);
  return (box_cox_forward(t, lambda0) - lo) / (hi - lo);
}

std::vector<double> prior_mean_weights(const ISplineBasis& basis, double lambda0) {
  if (!(lambda0 >= 0.0)) throw Error(ErrorKind::Parameter, "lambda0 must be nonnegative");
  constexpr double kFloor = 1e-6;
  const auto R = static_cast<Eigen::Index>(std::round(basis.right_boundary()));
  const Eigen::MatrixXd B = basis.integer_grid().topRows(R + 1);
  Eigen::VectorXd target(R + 1);
  for (Eigen::Index t = 0; t <= R; ++t) {
    target(t) = rescaled_box_cox_target(static_cast<double>(t), lambda0, basis.right_boundary());
  }
  const Eigen::MatrixXd BtB = B.transpose() * B;
  const Eigen::VectorXd Bty = B.transpose() * target;
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(BtB).eigenvalues().maxCoeff();
  const double step = 1.0 / lipschitz;

  const auto L = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(L, 1.0 / static_cast<double>(L));
  Eigen::VectorXd y = x;
  double momentum = 1.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd next = (y - step * (BtB * y - Bty)).cwiseMax(kFloor);
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = next + ((momentum - 1.0) / m_next) * (next - x);
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    momentum = m_next;
    if (change < 1e-14) break;
  }
  std::vector<double> w(static_cast<std::size_t>(L));
  double total = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    if (!(x(l) > 0.0) || !std::isfinite(x(l))) {
      throw Error(ErrorKind::Numerical, "prior-mean fit produced a nonpositive weight");
    }
    total += x(l);
  }
  for (Eigen::Index l = 0; l < L; ++l) w[static_cast<std::size_t>(l)] = x(l) / total;
  return w;
}

Transformation make_transformation(const std::string& name, std::span<const int> counts,
                                   double lambda0, double prior_variance) {
  if (name == "id") return Transformation::identity();
  if (name == "log") return Transformation::log();
  if (name == "sqrt") return Transformation::sqrt();
  if (name == "box-cox" || name == "bc") return Transformation::learned_box_cox(0.5);
  if (name == "np" || name == "ispline") {
    auto basis = std::make_shared<const ISplineBasis>(ISplineBasis::from_counts(counts));
    auto mean = prior_mean_weights(*basis, lambda0);
    return Transformation::ispline(basis, mean, mean, prior_variance);
  }
  throw Error(ErrorKind::Input, "unknown transformation '" + name + "' (id|log|sqrt|box-cox|np)");
}

}  // namespace star
