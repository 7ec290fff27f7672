#include "star/rounding.hpp"

#include "star/error.hpp"
#include "star/normal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace star {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Parameter, "sigma must be positive and finite");
  }
}

}  // namespace

RoundingScheme RoundingScheme::bounded(int K) {
  if (K < 1) throw Error(ErrorKind::Parameter, "bounded scheme needs K >= 1");
  return {Kind::FloorBounded, K, 0};
}

RoundingScheme RoundingScheme::censored(int K) {
  if (K < 1) throw Error(ErrorKind::Parameter, "censored scheme needs K >= 1");
  return {Kind::FloorCensored, K, 0};
}

RoundingScheme RoundingScheme::with_left_censoring(int L) const {
  if (L < 0 || (has_top() && L >= top)) {
    throw Error(ErrorKind::Parameter, "left-censoring point must lie in [0, K)");
  }
  RoundingScheme s = *this;
  s.left_censor = L;
  return s;
}

std::optional<int> RoundingScheme::max_value() const {
  if (has_top()) return top;
  return std::nullopt;
}

double RoundingScheme::lower_edge(int j, bool log_transform) const {
  if (j <= left_censor) return log_transform ? 0.0 : -kInf;
  return static_cast<double>(j);
}

double RoundingScheme::upper_edge(int j, bool /*log_transform*/) const {
  if (has_top() && j >= top) return kInf;
  return static_cast<double>(j + 1);
}

std::string RoundingScheme::name() const {
  std::string base;
  switch (kind) {
    case Kind::Floor: base = "floor"; break;
    case Kind::FloorBounded: base = "bounded:" + std::to_string(top); break;
    case Kind::FloorCensored: base = "censored:" + std::to_string(top); break;
  }
  if (left_censor > 0) base += ",left:" + std::to_string(left_censor);
  return base;
}

RoundingScheme RoundingScheme::parse(const std::string& text) {
  RoundingScheme s;
  std::string head = text;
  int left = 0;
  if (const auto comma = text.find(",left:"); comma != std::string::npos) {
    head = text.substr(0, comma);
    left = std::stoi(text.substr(comma + 6));
  }
  if (head == "floor") {
    s = floor();
  } else if (head.rfind("bounded:", 0) == 0) {
    s = bounded(std::stoi(head.substr(8)));
  } else if (head.rfind("censored:", 0) == 0) {
    s = censored(std::stoi(head.substr(9)));
  } else {
    throw Error(ErrorKind::Input, "unknown rounding scheme '" + text + "'");
  }
  return left > 0 ? s.with_left_censoring(left) : s;
}

int round_latent(double y_star, const RoundingScheme& scheme) {
  if (!std::isfinite(y_star)) throw Error(ErrorKind::Input, "latent value must be finite");
  double j = std::floor(y_star);
  if (j < 0.0) j = 0.0;
  if (scheme.has_top() && j > scheme.top) j = scheme.top;
  if (j > static_cast<double>(std::numeric_limits<int>::max())) {
    throw Error(ErrorKind::Input, "latent value too large to round to an int");
  }
  return std::max(static_cast<int>(j), scheme.left_censor);
}

Interval transformed_cell(int j, const Transformation& g, const RoundingScheme& scheme) {
  if (j < scheme.left_censor || (scheme.has_top() && j > scheme.top)) {
    return {kInf, kInf};  // unattainable value: empty cell
  }
  const bool log = g.is_log();
  return {g.edge_value(scheme.lower_edge(j, log)), g.edge_value(scheme.upper_edge(j, log))};
}

int round_transformed(double s, const Transformation& g, const RoundingScheme& scheme) {
  if (std::isnan(s)) throw Error(ErrorKind::Input, "latent value is NaN");
  int j = 0;
  if (g.is_box_cox()) {
    if (s == -kInf) return std::max(0, scheme.left_censor);
    const double t = g.inverse(s);
    if (!std::isfinite(t) || t > 2e9) {
      j = scheme.has_top() ? scheme.top : std::numeric_limits<int>::max() - 1;
    } else {
      j = std::max(0, static_cast<int>(std::floor(t)));
      // Guard against rounding at the edges: enforce g(j) <= s < g(j+1).
      while (j > 0 && s < g.edge_value(static_cast<double>(j))) --j;
      while (s >= g.edge_value(static_cast<double>(j + 1))) ++j;
    }
  } else {
    // I-spline: the edges g(1) <= ... <= g(R) = 1 are finite, above R is +inf.
    const auto R = static_cast<int>(std::round(g.ispline_params().basis->right_boundary()));
    int lo = 0, hi = R;  // find largest j in [0, R] with g(a_j) <= s
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (g.edge_value(static_cast<double>(mid)) <= s) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    j = lo;
  }
  if (scheme.has_top()) j = std::min(j, scheme.top);
  return std::max(j, scheme.left_censor);
}

double log_pmf_from_cell(const Interval& cell, double mu, double sigma) {
  check_sigma(sigma);
  if (!(cell.lower < cell.upper)) return -kInf;
  return normal::log_diff_cdf((cell.lower - mu) / sigma, (cell.upper - mu) / sigma);
}

double log_pmf(int j, const Transformation& g, const RoundingScheme& scheme, double mu,
               double sigma) {
  check_sigma(sigma);
  if (j < 0) return -kInf;
  return log_pmf_from_cell(transformed_cell(j, g, scheme), mu, sigma);
}

double pmf(int j, const Transformation& g, const RoundingScheme& scheme, double mu, double sigma) {
  return std::exp(log_pmf(j, g, scheme, mu, sigma));
}

int truncation_point(const Transformation& g, const RoundingScheme& scheme, double mu, double sigma,
                     double tail_quantile) {
  if (!(tail_quantile > 0.5 && tail_quantile < 1.0)) {
    throw Error(ErrorKind::Parameter, "tail quantile must lie in (0.5, 1)");
  }
  check_sigma(sigma);
  const double zq = mu + sigma * normal::quantile(tail_quantile);
  return round_transformed(zq, g, scheme);
}

double conditional_expectation(const Transformation& g, const RoundingScheme& scheme, double mu,
                               double sigma, double tail_quantile) {
  const int J = truncation_point(g, scheme, mu, sigma, tail_quantile);
  double total = 0.0;
  for (int j = 1; j <= J; ++j) total += j * pmf(j, g, scheme, mu, sigma);
  return total;
}

std::vector<DispersionRow> dispersion_profile(const Transformation& g, const RoundingScheme& scheme,
                                              const std::vector<double>& mu_grid,
                                              const std::vector<double>& sigma_grid) {
  std::vector<DispersionRow> rows;
  rows.reserve(mu_grid.size() * sigma_grid.size());
  for (double sigma : sigma_grid) {
    for (double mu : mu_grid) {
      if (!std::isfinite(mu) || !std::isfinite(sigma)) {
        throw Error(ErrorKind::Input, "dispersion grid values must be finite");
      }
      const int J = truncation_point(g, scheme, mu, sigma, 1.0 - 1e-12);
      double mass = 0.0, m1 = 0.0, m2 = 0.0;
      const double p0 = pmf(0, g, scheme, mu, sigma);
      for (int j = 0; j <= J; ++j) {
        double p = j == 0 ? p0 : pmf(j, g, scheme, mu, sigma);
        if (j == J) p = std::max(0.0, 1.0 - mass);
        mass += p;
        m1 += j * p;
        m2 += static_cast<double>(j) * j * p;
      }
      rows.push_back({mu, sigma, m1, std::max(0.0, m2 - m1 * m1), p0});
    }
  }
  return rows;
}

void write_dispersion_csv(std::ostream& out, const std::vector<DispersionRow>& rows) {
  out << "mu,sigma,mean,variance,prob_zero\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.mu << ',' << r.sigma << ',' << r.mean << ',' << r.variance << ',' << r.prob_zero << '\n';
  }
}

}  // namespace star
