#include "star/additive.hpp"

#include "star/error.hpp"
#include "star/samplers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace star {

namespace {

constexpr int kMinUnique = 10;

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

std::size_t unique_count(const Eigen::VectorXd& v) {
  std::set<double> s(v.data(), v.data() + v.size());
  return s.size();
}

}  // namespace

Eigen::MatrixXd cubic_bspline_basis(const Eigen::VectorXd& v, const std::vector<double>& knots) {
  const int K = static_cast<int>(knots.size()) - 4;
  if (K < 4) throw Error(ErrorKind::Design, "cubic B-spline basis needs at least 8 knots");
  const double lo = knots[3];
  const double hi = knots[static_cast<std::size_t>(K)];
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(v.size(), K);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = std::clamp(v(i), lo, hi);
    // Knot span m with knots[m] <= x < knots[m+1], the last span closed.
    int m = 3;
    while (m < K - 1 && x >= knots[static_cast<std::size_t>(m) + 1]) ++m;
    // Nonzero functions m-3..m by the triangular recurrence.
    std::array<double, 4> N{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> left{}, right{};
    for (int j = 1; j <= 3; ++j) {
      left[static_cast<std::size_t>(j)] = x - knots[static_cast<std::size_t>(m + 1 - j)];
      right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(m + j)] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        const double temp = N[ru] / (right[ru + 1] + left[static_cast<std::size_t>(j - r)]);
        N[ru] = saved + right[ru + 1] * temp;
        saved = left[static_cast<std::size_t>(j - r)] * temp;
      }
      N[static_cast<std::size_t>(j)] = saved;
    }
    for (int r = 0; r < 4; ++r) B(i, m - 3 + r) = N[static_cast<std::size_t>(r)];
  }
  return B;
}

Eigen::MatrixXd PSplineBlock::evaluate(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd P(v.size(), 2);
  P.col(0).setOnes();
  P.col(1) = v;
  return cubic_bspline_basis(v, knots) * coef - P * linear;
}

nlohmann::json PSplineBlock::to_json() const {
  return {{"column", column}, {"knots", knots}, {"coef", matrix_json(coef)},
          {"linear", matrix_json(linear)}};
}

PSplineBlock PSplineBlock::from_json(const nlohmann::json& j) {
  PSplineBlock b;
  b.column = j.at("column").get<std::size_t>();
  b.knots = j.at("knots").get<std::vector<double>>();
  b.coef = matrix_from_json(j.at("coef"));
  b.linear = matrix_from_json(j.at("linear"));
  return b;
}

PSplineBlock build_pspline_block(const Eigen::VectorXd& v, int L) {
  if (L < 2) throw Error(ErrorKind::Design, "P-spline block needs L >= 2");
  if (unique_count(v) < static_cast<std::size_t>(L)) {
    throw Error(ErrorKind::Design, "P-spline block needs at least L distinct values");
  }
  const int K = L + 2;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  const double h = (hi - lo) / (K - 3);
  PSplineBlock b;
  b.knots.resize(static_cast<std::size_t>(K) + 4);
  for (int k = 0; k < K + 4; ++k) b.knots[static_cast<std::size_t>(k)] = lo + (k - 3) * h;
  b.knots[3] = lo;
  b.knots[static_cast<std::size_t>(K)] = hi;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
  for (int r = 0; r < K - 2; ++r) {
    D(r, r) = 1.0;
    D(r, r + 1) = -2.0;
    D(r, r + 2) = 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D.transpose() * D);
  // Eigenvalues ascend; the first two span the null space {1, k}.
  const Eigen::VectorXd values = eig.eigenvalues().tail(L);
  Eigen::MatrixXd Z = eig.eigenvectors().rightCols(L);
  for (int l = 0; l < L; ++l) Z.col(l) /= std::sqrt(values(l));

  const Eigen::MatrixXd raw = cubic_bspline_basis(v, b.knots);
  const Eigen::MatrixXd X = raw * Z;
  Eigen::MatrixXd P(v.size(), 2);
  P.col(0).setOnes();
  P.col(1) = v;
  const Eigen::MatrixXd C = P.colPivHouseholderQr().solve(X);
  const Eigen::MatrixXd Xc = X - P * C;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() < L || !(s(L - 1) > 1e-9 * s(0))) {
    throw Error(ErrorKind::Design, "P-spline basis is rank deficient after orthogonalisation");
  }
  const Eigen::MatrixXd W = svd.matrixV();
  b.coef = Z * W;
  b.linear = C * W;
  b.basis = Xc * W;
  b.crossprod = b.basis.colwise().squaredNorm().transpose();
  return b;
}

// ----------------------------------------------------------------- design

AdditiveDesign AdditiveDesign::build(const Dataset& data, const std::vector<std::string>& nonlinear,
                                     int spline_size) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n == 0) throw Error(ErrorKind::Input, "dataset is empty");
  const Eigen::Index p = data.X.cols();
  AdditiveDesign d;
  d.names = data.predictor_names;
  d.center.resize(p);
  d.scale.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto col = data.X.col(k);
    const double m = col.mean();
    const double var = n > 1 ? (col.array() - m).square().sum() / static_cast<double>(n - 1) : 0.0;
    if (!(var > 0.0)) {
      throw Error(ErrorKind::Design, "predictor '" + d.names[static_cast<std::size_t>(k)] + "' is constant");
    }
    d.center(k) = m;
    d.scale(k) = std::sqrt(var);
  }
  d.U = d.linear_matrix(data.X);
  d.UtU = d.U.transpose() * d.U;

  const int auto_size = std::min(static_cast<int>((n + 3) / 4), 30);
  for (const auto& name : nonlinear) {
    const std::size_t col = data.column(name);
    const Eigen::VectorXd v = data.X.col(static_cast<Eigen::Index>(col));
    const auto unique = static_cast<int>(unique_count(v));
    if (unique < kMinUnique) {
      d.demoted.push_back(name);
      continue;
    }
    PSplineBlock block;
    if (spline_size > 0) {
      block = build_pspline_block(v, spline_size);
    } else {
      // Sparse tails leave some equally spaced knot intervals nearly empty;
      // shrink L until the block has full rank.
      for (int L = std::min(auto_size, unique - 2);; --L) {
        try {
          block = build_pspline_block(v, L);
          break;
        } catch (const Error&) {
          if (L <= 4) throw;
        }
      }
    }
    block.column = col;
    d.blocks.push_back(std::move(block));
  }
  return d;
}

Eigen::MatrixXd AdditiveDesign::linear_matrix(const Eigen::MatrixXd& X) const {
  if (X.cols() != center.size()) throw Error(ErrorKind::Input, "predictor count mismatch");
  Eigen::MatrixXd U(X.rows(), X.cols() + 1);
  U.col(0).setOnes();
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    U.col(k + 1) = (X.col(k).array() - center(k)) / scale(k);
  }
  return U;
}

nlohmann::json AdditiveDesign::to_json() const {
  nlohmann::json blocks_json = nlohmann::json::array();
  for (const auto& b : blocks) blocks_json.push_back(b.to_json());
  return {{"names", names},
          {"center", std::vector<double>(center.data(), center.data() + center.size())},
          {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())},
          {"blocks", blocks_json},
          {"demoted", demoted}};
}

AdditiveDesign AdditiveDesign::from_json(const nlohmann::json& j) {
  AdditiveDesign d;
  d.names = j.at("names").get<std::vector<std::string>>();
  const auto c = j.at("center").get<std::vector<double>>();
  const auto s = j.at("scale").get<std::vector<double>>();
  d.center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  d.scale = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  for (const auto& b : j.at("blocks")) d.blocks.push_back(PSplineBlock::from_json(b));
  d.demoted = j.value("demoted", std::vector<std::string>{});
  return d;
}

Eigen::VectorXd additive_mean(const AdditiveDesign& design, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd mu = design.linear_matrix(X) * beta;
  Eigen::Index offset = 0;
  for (const auto& b : design.blocks) {
    mu += b.evaluate(X.col(static_cast<Eigen::Index>(b.column))) * alpha.segment(offset, b.size());
    offset += b.size();
  }
  return mu;
}

// ------------------------------------------------------------------ state

Eigen::VectorXd AdditiveState::mean(const AdditiveDesign& design) const {
  Eigen::VectorXd mu = design.U * beta;
  for (std::size_t j = 0; j < design.blocks.size(); ++j) mu += design.blocks[j].basis * alpha[j];
  return mu;
}

namespace {

void initialise_common(AdditiveState& s, const AdditiveDesign& design) {
  const double n = static_cast<double>(s.z.size());
  const Eigen::Map<const Eigen::VectorXd> z(s.z.data(), static_cast<Eigen::Index>(s.z.size()));
  s.beta = Eigen::VectorXd::Zero(design.linear_size());
  const double m = z.mean();
  s.beta(0) = m;
  const double var = n > 1 ? (z.array() - m).square().sum() / (n - 1.0) : 1.0;
  s.sigma2 = var > 0.0 ? var : 1.0;
  s.ridge_variance = 1.0;
  for (const auto& b : design.blocks) {
    s.alpha.push_back(Eigen::VectorXd::Zero(b.size()));
    s.smooth_variance.push_back(1.0);
  }
}

}  // namespace

AdditiveState AdditiveState::initial(const AdditiveDesign& design, std::span<const int> y,
                                     const RoundingScheme& scheme, TransformationState transform) {
  AdditiveState s;
  s.transform = std::move(transform);
  if (y.empty()) {
    s.beta = Eigen::VectorXd::Zero(design.linear_size());
    for (const auto& b : design.blocks) {
      s.alpha.push_back(Eigen::VectorXd::Zero(b.size()));
      s.smooth_variance.push_back(1.0);
    }
    return s;
  }
  s.z = initial_latents(y, s.transform.current(), scheme);
  initialise_common(s, design);
  return s;
}

AdditiveState AdditiveState::initial_gaussian(const AdditiveDesign& design, std::span<const int> y,
                                              GaussianLink link) {
  AdditiveState s;
  s.gaussian = true;
  s.z.reserve(y.size());
  for (int v : y) s.z.push_back(gaussian_link(v, link));
  initialise_common(s, design);
  return s;
}

void gibbs_sweep_additive(AdditiveState& state, const AdditiveDesign& design,
                          std::span<const int> y, const RoundingScheme& scheme, RngStream& rng,
                          const AdditivePriors& priors) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (design.U.rows() != n || static_cast<Eigen::Index>(state.z.size()) != n) {
    throw Error(ErrorKind::State, "design, state and response sizes disagree");
  }
  Eigen::Map<Eigen::VectorXd> z(state.z.data(), n);
  const std::size_t J = design.blocks.size();

  Eigen::VectorXd smooth_sum = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < J; ++j) smooth_sum += design.blocks[j].basis * state.alpha[j];

  // 1. latent data
  if (!state.gaussian && n > 0) {
    const Eigen::VectorXd mu = design.U * state.beta + smooth_sum;
    impute_latents(y, state.transform.current(), scheme, std::span<const double>(mu.data(), mu.size()),
                   state.sigma(), rng, std::span<double>(state.z.data(), state.z.size()));
  }

  // 2. linear coefficients, then the ridge scale
  const double prec = 1.0 / state.sigma2;
  const Eigen::Index pu = design.linear_size();
  Eigen::MatrixXd Q = prec * design.UtU;
  Q(0, 0) += 1.0 / priors.intercept_variance;
  for (Eigen::Index k = 1; k < pu; ++k) Q(k, k) += 1.0 / state.ridge_variance;
  const Eigen::VectorXd ell = prec * (design.U.transpose() * (z - smooth_sum));
  try {
    state.beta = draw_gaussian_canonical(Q, ell, rng);
  } catch (const Error&) {
    throw Error(ErrorKind::Numerical,
                "Cholesky of Q_beta failed (sigma2 = " + std::to_string(state.sigma2) +
                    ", ridge variance = " + std::to_string(state.ridge_variance) + ")");
  }
  if (pu > 1) {
    const double ss = state.beta.tail(pu - 1).squaredNorm();
    const double lower = 1.0 / (priors.ridge_upper * priors.ridge_upper);
    const double shape = 0.5 * static_cast<double>(pu - 2);
    double tau;
    if (shape > 0.0 && ss > 0.0) {
      tau = draw_truncated_gamma(shape, 0.5 * ss, lower, rng);
    } else {
      // One ridge coefficient: density tau^{-1} exp(-ss tau / 2) on [lower, inf),
      // sampled on log tau where it is bounded.
      auto logf = [&](double u) { return -0.5 * ss * std::exp(u); };
      const double start = std::max(std::log(1.0 / state.ridge_variance), std::log(lower));
      tau = std::exp(slice_sample(logf, start, rng, {}, std::log(lower)));
    }
    state.ridge_variance = 1.0 / tau;
  }

  // 3. smooth terms, one block at a time (each has diagonal crossproduct)
  Eigen::VectorXd linear_fit = design.U * state.beta;
  for (std::size_t j = 0; j < J; ++j) {
    const auto& B = design.blocks[j].basis;
    smooth_sum -= B * state.alpha[j];
    const Eigen::VectorXd r = z - linear_fit - smooth_sum;
    const Eigen::VectorXd bt = B.transpose() * r;
    Eigen::VectorXd& a = state.alpha[j];
    for (Eigen::Index l = 0; l < a.size(); ++l) {
      const double q = prec * design.blocks[j].crossprod(l) + 1.0 / state.smooth_variance[j];
      a(l) = prec * bt(l) / q + rng.normal() / std::sqrt(q);
    }
    smooth_sum += B * a;
  }

  // 4. observation variance
  const Eigen::VectorXd mu = linear_fit + smooth_sum;
  const double rss = (z - mu).squaredNorm();
  state.sigma2 = draw_inverse_gamma_variance(priors.sigma_shape + 0.5 * static_cast<double>(n),
                                             priors.sigma_rate + 0.5 * rss, rng);

  // 5. smoothing variances
  for (std::size_t j = 0; j < J; ++j) {
    const double L = static_cast<double>(state.alpha[j].size());
    state.smooth_variance[j] = draw_inverse_gamma_variance(
        priors.smooth_shape + 0.5 * L, priors.smooth_rate + 0.5 * state.alpha[j].squaredNorm(), rng);
  }

  // 6. transformation, marginal over z*
  if (!state.gaussian && state.transform.learnable() && n > 0) {
    state.transform.update(y, scheme, std::span<const double>(mu.data(), mu.size()), state.sigma(),
                           rng);
  }
}

}  // namespace star
