#include "star/normal.hpp"

#include "star/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace star::normal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double log_sf(double x) {
  if (x == kInf) return -kInf;
  if (x == -kInf) return 0.0;
  if (x < -5.0) return std::log1p(-sf(-x));
  if (x < 35.0) return std::log(sf(x));
  // Asymptotic Mills-ratio series; the truncation error is below 1e-13 here.
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double log_cdf(double x) { return log_sf(-x); }

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw Error(ErrorKind::Parameter, "normal quantile needs p in [0, 1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log1mexp(double x) {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

double log_diff_cdf(double a, double b) {
  if (!(a < b)) return -kInf;
  if (b <= 0.0) {
    const double hi = log_cdf(b);
    const double lo = log_cdf(a);
    return hi + log1mexp(lo - hi);
  }
  if (a >= 0.0) {
    const double hi = log_sf(a);
    const double lo = log_sf(b);
    return hi + log1mexp(lo - hi);
  }
  return std::log1p(-(cdf(a) + sf(b)));
}

}  // namespace star::normal
