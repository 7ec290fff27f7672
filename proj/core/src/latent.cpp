#include "star/latent.hpp"

#include "star/error.hpp"
#include "star/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace star {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int max_of(std::span<const int> y) {
  int m = 0;
  for (int v : y) {
    if (v < 0) throw Error(ErrorKind::Input, "counts must be nonnegative");
    m = std::max(m, v);
  }
  return m;
}

}  // namespace

CellTable::CellTable(const Transformation& g, const RoundingScheme& scheme, int max_count) {
  cells_.reserve(static_cast<std::size_t>(max_count) + 1);
  // Neighbouring cells share an edge, so evaluate each edge once.
  const bool log = g.is_log();
  double lower = g.edge_value(scheme.lower_edge(0, log));
  for (int j = 0; j <= max_count; ++j) {
    if (j < scheme.left_censor || (scheme.has_top() && j > scheme.top)) {
      cells_.push_back({kInf, kInf});
      continue;
    }
    if (j == scheme.left_censor) lower = g.edge_value(scheme.lower_edge(j, log));
    const double upper = g.edge_value(scheme.upper_edge(j, log));
    cells_.push_back({lower, upper});
    lower = upper;
  }
}

double total_log_likelihood(std::span<const int> y, const Transformation& g,
                            const RoundingScheme& scheme, std::span<const double> mu, double sigma) {
  if (y.size() != mu.size()) throw Error(ErrorKind::Parameter, "y and mu lengths differ");
  const CellTable cells(g, scheme, max_of(y));
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    total += log_pmf_from_cell(cells[y[i]], mu[i], sigma);
    if (total == -kInf) return total;
  }
  return total;
}

void impute_latents(std::span<const int> y, const Transformation& g, const RoundingScheme& scheme,
                    std::span<const double> mu, double sigma, RngStream& rng, std::span<double> z) {
  if (y.size() != mu.size() || y.size() != z.size()) {
    throw Error(ErrorKind::Parameter, "impute_latents: length mismatch");
  }
  if (!(sigma > 0.0)) throw Error(ErrorKind::Parameter, "sigma must be positive");
  const CellTable cells(g, scheme, max_of(y));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Interval& c = cells[y[i]];
    if (!(c.lower < c.upper)) {
      throw Error(ErrorKind::TransformDegeneracy,
                  "empty truncation cell for y = " + std::to_string(y[i]));
    }
    z[i] = sample_truncated_normal(mu[i], sigma, c.lower, c.upper, rng);
  }
}

std::vector<double> initial_latents(std::span<const int> y, const Transformation& g,
                                    const RoundingScheme& scheme) {
  std::vector<double> z(y.size());
  const CellTable cells(g, scheme, max_of(y));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Interval& c = cells[y[i]];
    double v = g.evaluate(y[i] + 0.5);
    if (!(v >= c.lower && v < c.upper)) {
      // Censored or top cells: step inside from the finite edge.
      if (std::isfinite(c.lower) && std::isfinite(c.upper)) {
        v = 0.5 * (c.lower + c.upper);
      } else if (std::isfinite(c.lower)) {
        v = c.lower + 0.5;
      } else {
        v = c.upper - 0.5;
      }
    }
    z[i] = v;
  }
  return z;
}

// ------------------------------------------------------ TransformationState

TransformationState::TransformationState(Transformation g, TransformUpdateSettings settings)
    : g_(std::move(g)), settings_(settings) {
  if (g_.kind() == TransformKind::ISpline) {
    const auto& w = g_.ispline_params().weights;
    log_unnormalised_.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t l = 0; l < w.size(); ++l) log_unnormalised_(static_cast<Eigen::Index>(l)) = std::log(w[l]);
    ram_ = RamState::initial(log_unnormalised_.size(), settings_.ram_initial_scale);
    ram_.target_accept = settings_.ram_target;
    ram_.adapt_rate = settings_.ram_adapt_rate;
  }
}

namespace {

std::vector<double> normalised_weights(const Eigen::VectorXd& log_w) {
  const double m = log_w.maxCoeff();
  std::vector<double> w(static_cast<std::size_t>(log_w.size()));
  double total = 0.0;
  for (Eigen::Index l = 0; l < log_w.size(); ++l) {
    w[static_cast<std::size_t>(l)] = std::exp(log_w(l) - m);
    total += w[static_cast<std::size_t>(l)];
  }
  for (auto& v : w) v /= total;
  // Renormalise once more so the simplex check passes to the last ulp.
  double again = 0.0;
  for (double v : w) again += v;
  for (auto& v : w) v /= again;
  return w;
}

}  // namespace

void TransformationState::update(std::span<const int> y, const RoundingScheme& scheme,
                                  std::span<const double> mu, double sigma, RngStream& rng) {
  switch (g_.kind()) {
    case TransformKind::BoxCoxFixed:
      return;
    case TransformKind::BoxCoxLearned: {
      const auto& prior = g_.box_cox_prior();
      const Transformation base = g_;
      auto log_post = [&](double lambda) {
        const double lp = prior.log_density(lambda);
        if (lp == -kInf) return lp;
        return lp + total_log_likelihood(y, base.with_lambda(lambda), scheme, mu, sigma);
      };
      const double next =
          slice_sample(log_post, g_.lambda(), rng, settings_.slice, prior.lower, prior.upper);
      g_ = g_.with_lambda(next);
      ++proposed_;
      ++accepted_;
      return;
    }
    case TransformKind::ISpline: {
      const auto& sp = g_.ispline_params();
      const double var = sp.prior_variance;
      const auto& mean = sp.prior_mean;
      const Transformation base = g_;
      auto log_post = [&](const Eigen::VectorXd& xi) {
        double lp = 0.0;
        for (Eigen::Index l = 0; l < xi.size(); ++l) {
          const double w = std::exp(xi(l));
          const double d = w - mean[static_cast<std::size_t>(l)];
          lp += -0.5 * d * d / var + xi(l);  // half-normal prior plus log Jacobian
        }
        if (!std::isfinite(lp)) return -kInf;
        return lp + total_log_likelihood(y, base.with_weights(normalised_weights(xi)), scheme, mu,
                                         sigma);
      };
      const double current_lp = log_post(log_unnormalised_);
      const auto result = ram_step(ram_, log_unnormalised_, current_lp, log_post, rng);
      ++proposed_;
      if (result.accepted) {
        ++accepted_;
        log_unnormalised_ = result.point;
      }
      // Conjugate update of the prior variance around the prior mean.
      double ss = 0.0;
      for (Eigen::Index l = 0; l < log_unnormalised_.size(); ++l) {
        const double d = std::exp(log_unnormalised_(l)) - mean[static_cast<std::size_t>(l)];
        ss += d * d;
      }
      const double L = static_cast<double>(log_unnormalised_.size());
      const double new_var = draw_inverse_gamma_variance(settings_.precision_shape + 0.5 * L,
                                                         settings_.precision_rate + 0.5 * ss, rng);
      g_ = Transformation::ispline(sp.basis, normalised_weights(log_unnormalised_), mean, new_var);
      return;
    }
  }
}

std::vector<double> TransformationState::parameters() const {
  if (g_.is_box_cox()) return {g_.lambda()};
  return g_.ispline_params().weights;
}

Transformation TransformationState::with_parameters(const Transformation& base,
                                                    std::span<const double> params) {
  if (base.is_box_cox()) {
    if (params.size() != 1) throw Error(ErrorKind::Input, "Box-Cox draw needs one parameter");
    return base.with_lambda(params[0]);
  }
  std::vector<double> w(params.begin(), params.end());
  double total = 0.0;
  for (double v : w) total += v;
  for (auto& v : w) v /= total;
  return base.with_weights(std::move(w));
}

// ---------------------------------------------------------------- Gaussian

double gaussian_link(int y, GaussianLink link) {
  return link == GaussianLink::Log1p ? std::log1p(static_cast<double>(y)) : static_cast<double>(y);
}

double gaussian_inverse_link(double z, GaussianLink link) {
  return link == GaussianLink::Log1p ? std::expm1(z) : z;
}

double gaussian_log_density(int y, GaussianLink link, double mu, double sigma) {
  const double z = (gaussian_link(y, link) - mu) / sigma;
  double lp = -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  if (link == GaussianLink::Log1p) lp -= std::log1p(static_cast<double>(y));
  return lp;
}

double gaussian_expected_count(GaussianLink link, double mu, double sigma) {
  if (link == GaussianLink::Log1p) return std::exp(mu + 0.5 * sigma * sigma) - 1.0;
  return mu;
}

}  // namespace star
