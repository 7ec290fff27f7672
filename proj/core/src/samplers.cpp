#include "star/samplers.hpp"

#include "star/error.hpp"
#include "star/normal.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace star {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailStart = 6.0;

// a >= kTailStart, a < b <= inf.
double sample_far_tail(double a, double b, RngStream& rng) {
  if (b - a < 1.0 / a) {
    // Narrow interval: uniform proposal, acceptance >= exp(-1 - 1/(2a^2)).
    for (;;) {
      const double x = a + (b - a) * rng.uniform();
      if (std::log(rng.uniform()) <= -0.5 * (x - a) * (x + a)) return x;
    }
  }
  // Translated exponential proposal with the optimal rate.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a + rng.exponential(rate);
    if (x >= b) continue;
    const double d = x - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
  }
}

}  // namespace

double sample_truncated_standard_normal(double a, double b, RngStream& rng) {
  if (std::isnan(a) || std::isnan(b)) throw Error(ErrorKind::Parameter, "truncation bound is NaN");
  if (!(a < b)) throw Error(ErrorKind::Parameter, "truncation interval has zero width");
  if (a >= kTailStart) return sample_far_tail(a, b, rng);
  if (b <= -kTailStart) return -sample_far_tail(-b, -a, rng);

  const double u = rng.uniform();
  double x;
  if (a >= 0.0) {
    const double pa = normal::sf(a), pb = normal::sf(b);
    x = -normal::quantile(pb + u * (pa - pb));
  } else if (b <= 0.0) {
    const double pa = normal::cdf(a), pb = normal::cdf(b);
    x = normal::quantile(pa + u * (pb - pa));
  } else {
    const double pa = normal::cdf(a), pb = normal::cdf(b);
    x = normal::quantile(pa + u * (pb - pa));
  }
  return std::clamp(x, a, b);
}

double sample_truncated_normal(double mu, double sigma, double lower, double upper,
                               RngStream& rng) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Parameter, "truncated normal needs a positive finite sigma");
  }
  const double a = (lower - mu) / sigma;
  const double b = (upper - mu) / sigma;
  const double z = sample_truncated_standard_normal(a, b, rng);
  return std::clamp(mu + sigma * z, lower, upper);
}

double slice_sample(const std::function<double(double)>& log_density, double current,
                    RngStream& rng, SliceSettings settings, double lower, double upper) {
  if (!(current >= lower && current <= upper)) {
    throw Error(ErrorKind::State, "slice sampler started outside its bounds");
  }
  const double f0 = log_density(current);
  if (!(f0 > -kInf)) throw Error(ErrorKind::State, "slice sampler started at zero density");
  const double level = f0 - rng.exponential(1.0);

  const double w = settings.width;
  double left = current - w * rng.uniform();
  double right = left + w;
  int j = static_cast<int>(std::floor(settings.max_steps * rng.uniform()));
  int k = settings.max_steps - 1 - j;
  while (j > 0 && left > lower && log_density(left) > level) {
    left -= w;
    --j;
  }
  while (k > 0 && right < upper && log_density(right) > level) {
    right += w;
    --k;
  }
  left = std::max(left, lower);
  right = std::min(right, upper);

  for (;;) {
    const double x = left + (right - left) * rng.uniform();
    if (log_density(x) > level) return x;
    if (x < current) {
      left = x;
    } else {
      right = x;
    }
    if (!(right - left > 1e-14 * (1.0 + std::abs(current)))) return current;
  }
}

RamState RamState::initial(Eigen::Index dim, double scale) {
  RamState s;
  s.factor = Eigen::MatrixXd::Identity(dim, dim) * scale;
  return s;
}

RamResult ram_step(RamState& state, const Eigen::VectorXd& current, double current_log_density,
                   const std::function<double(const Eigen::VectorXd&)>& log_density,
                   RngStream& rng) {
  const Eigen::Index d = current.size();
  if (state.factor.rows() != d || state.factor.cols() != d) {
    throw Error(ErrorKind::Parameter, "RAM factor dimension mismatch");
  }
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u(i) = rng.normal();
  const Eigen::VectorXd su = state.factor.triangularView<Eigen::Lower>() * u;
  Eigen::VectorXd proposal = current + su;
  const double lp = log_density(proposal);
  const double log_ratio = lp - current_log_density;
  const double accept_prob = log_ratio >= 0.0 ? 1.0 : (std::isfinite(lp) ? std::exp(log_ratio) : 0.0);
  const bool accepted = std::log(rng.uniform()) < log_ratio;

  ++state.steps;
  bool rejected_update = false;
  if (state.adapting) {
    const double eta = std::min(1.0, static_cast<double>(d) *
                                         std::pow(static_cast<double>(state.steps), -state.adapt_rate));
    const double c = eta * (accept_prob - state.target_accept);
    const double unorm2 = u.squaredNorm();
    if (unorm2 > 0.0) {
      const Eigen::MatrixXd S = state.factor.triangularView<Eigen::Lower>();
      Eigen::MatrixXd M = S * S.transpose() + (c / unorm2) * su * su.transpose();
      M = 0.5 * (M + M.transpose());
      Eigen::LLT<Eigen::MatrixXd> llt(M);
      const Eigen::MatrixXd L = llt.matrixL();
      if (llt.info() == Eigen::Success && L.diagonal().minCoeff() > 0.0 && L.allFinite()) {
        state.factor = L;
      } else {
        rejected_update = true;
      }
    }
  }
  if (accepted) return {std::move(proposal), lp, true, rejected_update};
  return {current, current_log_density, false, rejected_update};
}

double draw_inverse_gamma_variance(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw Error(ErrorKind::Parameter, "inverse-gamma draw needs shape > 0 and rate > 0");
  }
  return 1.0 / rng.gamma(shape, rate);
}

double draw_truncated_gamma(double shape, double rate, double lower, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !(lower >= 0.0)) {
    throw Error(ErrorKind::Parameter, "truncated gamma needs shape, rate > 0 and lower >= 0");
  }
  const double q = boost::math::gamma_q(shape, rate * lower);
  if (q < 1e-300) {
    // Lower bound far beyond the mode: the density is essentially exponential there.
    return lower + rng.exponential(rate);
  }
  const double u = q * rng.uniform();
  const double x = boost::math::gamma_q_inv(shape, u) / rate;
  return std::max(x, lower);
}

Eigen::VectorXd draw_gaussian_canonical(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear, RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "Cholesky factorisation of the posterior precision failed");
  }
  Eigen::VectorXd z(linear.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return llt.solve(linear) + llt.matrixU().solve(z);
}

}  // namespace star
