#include "star/metrics.hpp"

#include "star/error.hpp"
#include "star/fit.hpp"
#include "star/latent.hpp"
#include "star/normal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

namespace star {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log mean_s exp(x_s); -inf when every entry is -inf.
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double m = x.maxCoeff();
  if (m == -kInf) return -kInf;
  return m + std::log((x.array() - m).exp().sum()) - std::log(static_cast<double>(x.size()));
}

double sample_variance(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

PpcRow stats_of(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  const double var = v.size() > 1 ? (v.array() - m).square().sum() / (n - 1.0) : 0.0;
  const double zeros = static_cast<double>((v.array() == 0.0).count()) / n;
  return {m, std::sqrt(var), zeros};
}

}  // namespace

WaicResult waic(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() < 1) throw Error(ErrorKind::Parameter, "WAIC needs at least one draw");
  WaicResult r{0.0, 0.0, 0.0, {}};
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    const auto col = loglik.col(i);
    if (col.maxCoeff() == -kInf || std::isnan(col.sum())) {
      r.infinite_points.push_back(i);
      r.lpd = -kInf;
      continue;
    }
    r.lpd += log_mean_exp(col);
    // Variance over draws; -inf entries in some draws make it infinite.
    r.d_eff += col.allFinite() ? sample_variance(col) : kInf;
  }
  r.waic = -2.0 * (r.lpd - r.d_eff);
  if (!r.infinite_points.empty()) r.waic = kInf;
  return r;
}

Eigen::MatrixXd star_pointwise_loglik(const Eigen::MatrixXd& mu, std::span<const double> sigma,
                                      const std::vector<Transformation>& g,
                                      std::span<const int> y, const RoundingScheme& scheme) {
  const auto S = mu.rows();
  const auto n = mu.cols();
  if (static_cast<Eigen::Index>(sigma.size()) != S || static_cast<Eigen::Index>(g.size()) != S ||
      static_cast<Eigen::Index>(y.size()) != n) {
    throw Error(ErrorKind::Parameter, "pointwise log-likelihood inputs disagree in size");
  }
  int ymax = 0;
  for (int v : y) {
    if (v < 0) throw Error(ErrorKind::Input, "counts must be nonnegative");
    ymax = std::max(ymax, v);
  }
  Eigen::MatrixXd out(S, n);
  for (Eigen::Index s = 0; s < S; ++s) {
    const CellTable cells(g[static_cast<std::size_t>(s)], scheme, ymax);
    for (Eigen::Index i = 0; i < n; ++i) {
      out(s, i) = log_pmf_from_cell(cells[y[static_cast<std::size_t>(i)]], mu(s, i),
                                    sigma[static_cast<std::size_t>(s)]);
    }
  }
  return out;
}

ScoreResult lpd_score(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() < 1) throw Error(ErrorKind::Parameter, "lpd score needs at least one draw");
  ScoreResult r{0.0, {}};
  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    const double v = log_mean_exp(loglik.col(i));
    if (!std::isfinite(v)) {
      r.infinite_points.push_back(i);
      continue;
    }
    r.score += v;
    ++used;
  }
  r.score = used > 0 ? r.score / static_cast<double>(used) : -kInf;
  return r;
}

double logarithmic_score_nonzero(const Eigen::MatrixXd& p0, std::span<const int> y) {
  if (static_cast<Eigen::Index>(y.size()) != p0.cols()) {
    throw Error(ErrorKind::Parameter, "log score inputs disagree in size");
  }
  if (y.empty()) throw Error(ErrorKind::Parameter, "log score needs test points");
  constexpr double eps = 1e-12;
  double total = 0.0;
  for (Eigen::Index i = 0; i < p0.cols(); ++i) {
    const double p_pos = std::clamp(1.0 - p0.col(i).mean(), eps, 1.0 - eps);
    total += y[static_cast<std::size_t>(i)] > 0 ? std::log(p_pos) : std::log1p(-p_pos);
  }
  return total / static_cast<double>(y.size());
}

IntervalResult interval_metrics(const Eigen::MatrixXd& pred, std::span<const double> y,
                                double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Parameter, "level must lie in (0, 1)");
  if (static_cast<Eigen::Index>(y.size()) != pred.cols() || y.empty()) {
    throw Error(ErrorKind::Parameter, "interval inputs disagree in size");
  }
  const auto S = static_cast<double>(pred.rows());
  const double tail = 0.5 * (1.0 - level);
  if (S * tail < 1.0 - 1e-9) {
    throw Error(ErrorKind::Parameter, "too few predictive draws for the requested interval level");
  }
  // Type 1: the smallest order statistic x_(k) with k / S >= p.
  auto index_for = [&](double p) {
    const auto k = static_cast<Eigen::Index>(std::ceil(p * S - 1e-9));
    return std::clamp<Eigen::Index>(k, 1, pred.rows()) - 1;
  };
  const Eigen::Index lo = index_for(tail);
  const Eigen::Index hi = index_for(1.0 - tail);
  double width = 0.0, covered = 0.0;
  std::vector<double> col(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    for (Eigen::Index s = 0; s < pred.rows(); ++s) col[static_cast<std::size_t>(s)] = pred(s, i);
    std::sort(col.begin(), col.end());
    const double a = col[static_cast<std::size_t>(lo)];
    const double b = col[static_cast<std::size_t>(hi)];
    width += b - a;
    const double yi = y[static_cast<std::size_t>(i)];
    if (yi >= a && yi <= b) covered += 1.0;
  }
  const auto n = static_cast<double>(pred.cols());
  return {width / n, covered / n};
}

double rmse_vs_truth(std::span<const double> fitted, std::span<const double> truth) {
  if (fitted.size() != truth.size()) throw Error(ErrorKind::Parameter, "RMSE inputs differ in length");
  double ss = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    const double d = fitted[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

EssResult ess_univariate(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw Error(ErrorKind::Parameter, "ESS needs a chain of length >= 10");
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += c[i] * c[i + k];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return {static_cast<double>(n), true};
  // Geyer: sum consecutive pairs while they stay positive.
  double sum_rho = 0.0;
  for (std::size_t k = 1; k + 1 < n; k += 2) {
    const double pair = (autocov(k) + autocov(k + 1)) / g0;
    if (pair <= 0.0) break;
    sum_rho += pair;
  }
  // tau = 1 + 2 sum_{k>=1} rho_k = -1 + 2 sum_{m>=0} (rho_2m + rho_2m+1).
  const double tau = std::max(1.0 + 2.0 * sum_rho, 1e-12);
  return {static_cast<double>(n) / tau, false};
}

PpcTable posterior_predictive_checks(const Eigen::MatrixXd& pred, std::span<const double> y) {
  if (static_cast<Eigen::Index>(y.size()) != pred.cols() || y.empty()) {
    throw Error(ErrorKind::Parameter, "predictive check inputs disagree in size");
  }
  PpcTable t;
  const Eigen::Map<const Eigen::RowVectorXd> obs(y.data(), static_cast<Eigen::Index>(y.size()));
  t.observed = stats_of(obs);
  t.upper_tail = {0.0, 0.0, 0.0};
  for (Eigen::Index s = 0; s < pred.rows(); ++s) {
    const PpcRow r = stats_of(pred.row(s));
    t.replicates.push_back(r);
    t.upper_tail.mean += r.mean >= t.observed.mean;
    t.upper_tail.sd += r.sd >= t.observed.sd;
    t.upper_tail.zeros += r.zeros >= t.observed.zeros;
  }
  const auto S = static_cast<double>(std::max<Eigen::Index>(pred.rows(), 1));
  t.upper_tail.mean /= S;
  t.upper_tail.sd /= S;
  t.upper_tail.zeros /= S;
  return t;
}

void write_ppc_csv(std::ostream& out, const PpcTable& table) {
  out << "replicate,mean,sd,prop_zero\n" << std::setprecision(17);
  out << "observed," << table.observed.mean << ',' << table.observed.sd << ','
      << table.observed.zeros << '\n';
  for (std::size_t s = 0; s < table.replicates.size(); ++s) {
    const auto& r = table.replicates[s];
    out << s << ',' << r.mean << ',' << r.sd << ',' << r.zeros << '\n';
  }
}

nlohmann::json score_fit(const PosteriorDraws& draws, const Dataset* test, std::uint64_t seed,
                         double level) {
  nlohmann::json report;
  const WaicResult w = waic(draws.get("loglik"));
  report["waic"] = w.waic;
  report["lpd"] = w.lpd;
  report["d_eff"] = w.d_eff;
  report["waic_infinite_points"] = w.infinite_points;
  report["draws"] = draws.draws();
  if (test == nullptr) return report;

  std::vector<Eigen::Index> rows;
  const Eigen::MatrixXd mu = predict_latent_means(draws, test->X, rows);
  const auto S = mu.rows();
  const auto n = mu.cols();
  const auto& sigma = draws.get("sigma");
  const bool gaussian = is_gaussian(draws);
  const RoundingScheme scheme = draw_scheme(draws);
  RngStream rng(seed, 7);

  Eigen::MatrixXd loglik(S, n), p0(S, n), pred(S, n);
  if (gaussian) {
    const GaussianLink link = draw_link(draws);
    const double zero_edge = gaussian_link(0, link) + (link == GaussianLink::Log1p ? std::log(1.5) : 0.5);
    for (Eigen::Index s = 0; s < S; ++s) {
      const double sd = sigma(rows[static_cast<std::size_t>(s)], 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        loglik(s, i) = gaussian_log_density(test->y[static_cast<std::size_t>(i)], link, mu(s, i), sd);
        // A continuous forecast counts as zero when it rounds to zero.
        p0(s, i) = normal::cdf((zero_edge - mu(s, i)) / sd);
        pred(s, i) = gaussian_inverse_link(mu(s, i) + sd * rng.normal(), link);
      }
    }
  } else {
    std::vector<Transformation> g;
    std::vector<double> sd;
    for (Eigen::Index r : rows) {
      g.push_back(draw_transformation(draws, r));
      sd.push_back(sigma(r, 0));
    }
    loglik = star_pointwise_loglik(mu, sd, g, test->y, scheme);
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto& gs = g[static_cast<std::size_t>(s)];
      const double ss = sd[static_cast<std::size_t>(s)];
      const Interval zero = transformed_cell(0, gs, scheme);
      for (Eigen::Index i = 0; i < n; ++i) {
        p0(s, i) = std::exp(log_pmf_from_cell(zero, mu(s, i), ss));
        pred(s, i) = round_transformed(mu(s, i) + ss * rng.normal(), gs, scheme);
      }
    }
  }
  const ScoreResult lpd = lpd_score(loglik);
  std::vector<double> ytest(test->y.begin(), test->y.end());
  const IntervalResult iv = interval_metrics(pred, ytest, level);
  report["lpd_score"] = lpd.score;
  report["lpd_infinite_points"] = lpd.infinite_points;
  report["log_score_nonzero"] = logarithmic_score_nonzero(p0, test->y);
  report["mpiw"] = iv.mpiw;
  report["coverage"] = iv.coverage;
  report["level"] = level;
  report["n_test"] = n;
  report["draws_used"] = S;
  report["quantile_method"] = "type-1 inverse empirical CDF";
  return report;
}

}  // namespace star
