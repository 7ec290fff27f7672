#include "oracles.hpp"

#include "star/error.hpp"
#include "star/fit.hpp"
#include "star/harness.hpp"
#include "star/latent.hpp"
#include "star/metrics.hpp"
#include "star/rounding.hpp"
#include "star/samplers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using star::RngStream;
using star::RoundingScheme;
using star::PpcRow;
using star::Transformation;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ------------------------------------------------------------ 1

Outcome distributional_identities() {
  RngStream rng(101);
  double worst_sum = 0.0, worst_zero = 0.0, above = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double mu = rng.uniform() * 8.0 - 3.0;
    const double sigma = 0.1 + rng.uniform() * 3.0;
    const auto g = Transformation::box_cox(rng.uniform() * 3.0);
    double total = 0.0;
    const int J = 2000;
    for (int j = 0; j < J; ++j) total += star::pmf(j, g, RoundingScheme::floor(), mu, sigma);
    total += oracle::Phi(-(g.evaluate(J) - mu) / sigma);
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    for (const auto& s : {RoundingScheme::floor(), RoundingScheme::bounded(4)}) {
      worst_zero = std::max(worst_zero, std::abs(star::pmf(0, g, s, mu, sigma) - oracle::Phi(-mu / sigma)));
    }
    const auto b = RoundingScheme::bounded(4);
    double inside = 0.0;
    for (int j = 0; j <= 4; ++j) inside += star::pmf(j, g, b, mu, sigma);
    for (int j = 5; j < 60; ++j) above = std::max(above, star::pmf(j, g, b, mu, sigma));
    worst_sum = std::max(worst_sum, std::abs(inside - 1.0));
  }
  return {worst_sum < 1e-10 && worst_zero < 1e-15 && above == 0.0,
          fmt("max |sum - 1| = %.2e, max |P(0) - Phi| = %.2e", worst_sum, worst_zero) +
              fmt(", max mass above K = %g", above)};
}

// ------------------------------------------------------------ 2

Outcome censoring_coherence() {
  RngStream rng(202);
  const int n = 200, K = 5;
  const double lambda = 0.3, sigma = 0.9;
  const auto g = Transformation::box_cox(lambda);
  std::vector<int> y(n);
  std::vector<double> mu(n);
  for (int i = 0; i < n; ++i) {
    mu[static_cast<std::size_t>(i)] = rng.normal(1.0, 1.0);
    const int raw = star::draw_negative_binomial(4.0, 2.0, rng);
    y[static_cast<std::size_t>(i)] = std::min(raw, K);
  }
  const double got = star::total_log_likelihood(y, g, RoundingScheme::censored(K), mu, sigma);
  auto bc = [&](double t) { return (std::pow(t, lambda) - 1.0) / lambda; };
  double expect = 0.0;
  int censored = 0;
  for (int i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    const double m = mu[static_cast<std::size_t>(i)];
    if (yi >= K) {
      expect += std::log(oracle::Phi(-(bc(K) - m) / sigma));
      ++censored;
    } else {
      const double lo = yi == 0 ? 0.0 : oracle::Phi((bc(yi) - m) / sigma);
      expect += std::log(oracle::Phi((bc(yi + 1) - m) / sigma) - lo);
    }
  }
  const double err = std::abs(got - expect);
  return {err < 1e-10, fmt("|difference| = %.2e over %g censored points", err, censored)};
}

// ------------------------------------------------------------ 3

Outcome sampler_correctness() {
  RngStream rng(303);
  const int N = 100000;
  int tn_fail = 0;
  double worst_z = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double mu = rng.uniform() * 4.0 - 2.0, sigma = 0.5 + rng.uniform() * 1.5;
    double a, b;
    switch (k % 5) {
      case 0: a = mu + sigma * (rng.uniform() * 4.0 - 2.0), b = a + sigma * (0.2 + rng.uniform() * 2.0); break;
      case 1: a = mu + sigma * (rng.uniform() * 3.0 - 1.0), b = INFINITY; break;
      case 2: a = -INFINITY, b = mu + sigma * (rng.uniform() * 3.0 - 2.0); break;
      case 3: a = mu + 8.0 * sigma, b = k % 2 ? INFINITY : a + sigma; break;
      default: a = -INFINITY, b = mu - 8.0 * sigma; break;
    }
    std::vector<double> x(N);
    for (auto& v : x) v = star::sample_truncated_normal(mu, sigma, a, b, rng);
    const auto m = oracle::truncated_normal_moments(mu, sigma, a, b);
    const double mean = oracle::mean(x), var = oracle::variance(x);
    double m4 = 0.0;
    for (double v : x) m4 += std::pow(v - mean, 4);
    m4 /= N;
    const double z_mean = std::abs(mean - m.mean) / std::sqrt(var / N);
    const double z_var = std::abs(var - m.variance) / std::sqrt((m4 - var * var) / N);
    worst_z = std::max({worst_z, z_mean, z_var});
    if (z_mean > 3.0 || z_var > 3.0) ++tn_fail;
  }

  auto ram_rate = [&](int dim, long steps) {
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) prec(i, i + 1) = prec(i + 1, i) = 0.4;
    const auto ld = [&](const Eigen::VectorXd& v) { return -0.5 * v.dot(prec * v); };
    auto state = star::RamState::initial(dim);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    double lx = ld(x);
    long acc = 0;
    for (long s = 0; s < steps; ++s) {
      const auto r = star::ram_step(state, x, lx, ld, rng);
      x = r.point;
      lx = r.log_density;
      if (s >= steps / 2 && r.accepted) ++acc;
    }
    return static_cast<double>(acc) / static_cast<double>(steps - steps / 2);
  };
  const double ram1 = ram_rate(1, 40000), ram5 = ram_rate(5, 100000);

  // Slice-sampled lambda target N(0.5, 1) on [0, 3] against exact draws.
  const auto ld = [](double l) { return -0.5 * (l - 0.5) * (l - 0.5); };
  std::vector<double> chain, exact;
  double l = 1.0;
  for (int it = 0; it < 50000; ++it) {
    l = star::slice_sample(ld, l, rng, {}, 0.0, 3.0);
    if (it % 10 == 9) chain.push_back(l);
  }
  for (int i = 0; i < 5000; ++i) exact.push_back(star::sample_truncated_normal(0.5, 1.0, 0.0, 3.0, rng));
  const double D = oracle::ks_two_sample(chain, exact), crit = oracle::ks_critical_two(chain.size(), exact.size());

  const bool ok = tn_fail == 0 && std::abs(ram1 - 0.30) <= 0.05 && std::abs(ram5 - 0.30) <= 0.05 && D < crit;
  return {ok, fmt("truncated normal: %g/20 outside 3 SE (worst %.2f SE)", tn_fail, worst_z) +
                  fmt("; RAM acceptance d=1 %.3f, d=5 %.3f", ram1, ram5) +
                  fmt("; slice KS D = %.4f (critical %.4f)", D, crit)};
}

// ------------------------------------------------------------ 4

Outcome posterior_oracle() {
  RngStream rng(404);
  star::Dataset d;
  d.X.resize(50, 0);
  const auto g = Transformation::sqrt();
  for (int i = 0; i < 50; ++i) d.y.push_back(star::round_transformed(rng.normal(1.2, 0.9), g, RoundingScheme::floor()));
  star::FitConfig c;
  c.transform = "sqrt";
  c.mcmc = {1000, 5000, 5, 2, 41};
  c.store_predictive = false;
  const auto draws = star::fit_model(d, c);
  std::vector<double> mu, sigma;
  for (Eigen::Index s = 0; s < draws.draws(); ++s) {
    mu.push_back(draws.get("mu")(s, 0));
    sigma.push_back(draws.get("sigma")(s, 0));
  }
  const oracle::SqrtStarGridPosterior grid(d.y, c.additive_priors.sigma_shape, c.additive_priors.sigma_rate, 600);
  const double Dm = oracle::ks_one_sample(mu, [&](double x) { return grid.mu_cdf(x); });
  const double Ds = oracle::ks_one_sample(sigma, [&](double x) { return grid.sigma_cdf(x); });
  return {Dm < 0.02 && Ds < 0.02,
          fmt("%g saved draws; ", static_cast<double>(mu.size())) + fmt("KS mu %.4f, KS sigma %.4f", Dm, Ds)};
}

// ------------------------------------------------------------ 5, 6

nlohmann::json desk_schedule(std::uint64_t seed) {
  return {{"burn", 1000}, {"save", 1000}, {"thin", 2}, {"seed", seed}};
}

Outcome linear_replication() {
  star::ExperimentConfig c;
  c.design = "linear";
  c.n = 100;
  c.dispersions = {1.0, 1000.0};
  c.replicates = 20;
  c.models = {"lm-log", "star-bc", "star-np"};
  c.baseline = "lm-log";
  c.seed = 505;
  c.model_config = {{"mcmc", desk_schedule(0)}, {"store_predictive", false}};
  const auto res = star::run_experiment(c);
  std::map<std::pair<double, std::string>, std::pair<int, int>> tally;
  for (const auto& r : res.rows) {
    if (r.model == c.baseline) continue;
    auto& t = tally[{r.dispersion, r.model}];
    ++t.second;
    if (r.ok && r.relative_waic < 1.0) ++t.first;
  }
  bool ok = true;
  std::string detail;
  for (const auto& [key, t] : tally) {
    const double share = static_cast<double>(t.first) / t.second;
    ok = ok && share >= 0.70;
    detail += (detail.empty() ? "" : ", ") + key.second + fmt(" r=%g: %.2f", key.first, share);
  }
  return {ok && !tally.empty(), "share with relative WAIC < 1: " + detail};
}

Outcome friedman_replication() {
  star::ExperimentConfig c;
  c.design = "friedman";
  c.n = 100;
  c.dispersions = {1.0};
  c.replicates = 20;
  c.models = {"bart-log", "star-bc", "bart-star-bc"};
  c.baseline = "bart-log";
  c.seed = 606;
  c.model_config = {{"mcmc", desk_schedule(0)}, {"bart", {{"trees", 50}}}, {"store_predictive", false}};
  const auto res = star::run_experiment(c);
  std::map<int, std::map<std::string, double>> waic;
  for (const auto& r : res.rows) waic[r.replicate][r.model] = r.ok ? r.waic : INFINITY;
  int wins = 0;
  for (auto& [rep, w] : waic) {
    if (w["bart-star-bc"] < w["bart-log"] && w["bart-star-bc"] < w["star-bc"]) ++wins;
  }
  const double share = static_cast<double>(wins) / static_cast<double>(waic.size());
  return {share >= 0.70, fmt("bart-star-bc beats both in %g of %g replicates", wins, static_cast<double>(waic.size()))};
}

// ------------------------------------------------------------ 7

Outcome self_consistency() {
  RngStream rng(707);
  // Counts in the tens so the integer grid does not dominate the intervals.
  auto base = star::simulate_negbin_linear(200, 2.0, rng);
  for (Eigen::Index i = 0; i < base.X.rows(); ++i) {
    const double m = 30.0 * std::exp(0.4 * base.X(i, 0) + 0.5 * std::sin(base.X(i, 1)));
    base.y[static_cast<std::size_t>(i)] = star::draw_negative_binomial(m, 3.0, rng);
  }
  auto c = star::FitConfig::preset("am-star-bc");
  c.nonlinear = {"x1", "x2"};
  c.mcmc = {1000, 1000, 2, 1, 71};
  const auto first = star::fit_model(base, c);

  // The last saved draw is the truth.
  const auto truth_test = star::simulate_negbin_linear(2000, 2.0, rng);
  std::vector<Eigen::Index> rows;
  const Eigen::MatrixXd mu_train = star::predict_latent_means(first, base.X, rows);
  const Eigen::Index s = mu_train.rows() - 1;
  const Eigen::MatrixXd mu_test = star::predict_latent_means(first, truth_test.X, rows);
  const auto g = star::draw_transformation(first, rows[static_cast<std::size_t>(s)]);
  const double sigma = first.get("sigma")(rows[static_cast<std::size_t>(s)], 0);
  const auto scheme = star::draw_scheme(first);
  auto generate = [&](const star::Dataset& from, const Eigen::RowVectorXd& mu) {
    star::Dataset d;
    d.predictor_names = from.predictor_names;
    d.X = from.X;
    for (Eigen::Index i = 0; i < mu.size(); ++i) d.y.push_back(star::round_transformed(rng.normal(mu(i), sigma), g, scheme));
    return d;
  };
  const auto train = generate(base, mu_train.row(s));
  const auto test = generate(truth_test, mu_test.row(s));

  // Coverage of the same type-1 interval under the true predictive law; with
  // integer outcomes it exceeds the nominal level.
  double oracle_cover = 0.0;
  for (Eigen::Index i = 0; i < mu_test.cols(); ++i) {
    std::vector<double> cdf;
    for (int j = 0; cdf.empty() || cdf.back() < 0.95; ++j) {
      cdf.push_back((cdf.empty() ? 0.0 : cdf.back()) + star::pmf(j, g, scheme, mu_test(s, i), sigma));
    }
    int lo = 0;
    while (cdf[static_cast<std::size_t>(lo)] < 0.05) ++lo;
    const int hi = static_cast<int>(cdf.size()) - 1;
    oracle_cover += cdf[static_cast<std::size_t>(hi)] - (lo > 0 ? cdf[static_cast<std::size_t>(lo - 1)] : 0.0);
  }
  oracle_cover /= static_cast<double>(mu_test.cols());

  c.mcmc.seed = 72;
  const auto refit = star::fit_model(train, c);
  const auto report = star::score_fit(refit, &test, 73, 0.90);
  const double coverage = report["coverage"].get<double>();
  const std::vector<double> y(train.y.begin(), train.y.end());
  const auto ppc = star::posterior_predictive_checks(refit.get("predictive"), y);
  // Observed statistic within the central 95% band of the replicates.
  auto inside = [&](double PpcRow::*field, double& lo, double& hi) {
    std::vector<double> r;
    for (const auto& row : ppc.replicates) r.push_back(row.*field);
    std::sort(r.begin(), r.end());
    const auto at = [&](double p) { return r[static_cast<std::size_t>(std::ceil(p * r.size())) - 1]; };
    lo = at(0.025);
    hi = at(0.975);
    return ppc.observed.*field >= lo && ppc.observed.*field <= hi;
  };
  double lo[3], hi[3];
  const bool ppc_ok = inside(&PpcRow::mean, lo[0], hi[0]) & inside(&PpcRow::sd, lo[1], hi[1]) &
                      inside(&PpcRow::zeros, lo[2], hi[2]);
  std::string bands;
  const double* obs[3] = {&ppc.observed.mean, &ppc.observed.sd, &ppc.observed.zeros};
  const char* names[3] = {"mean", "sd", "zeros"};
  for (int k = 0; k < 3; ++k) {
    bands += std::string(k ? ", " : "") + names[k] + fmt(" %.3f in ", *obs[k]) + fmt("[%.3f, %.3f]", lo[k], hi[k]);
  }
  return {std::abs(coverage - 0.90) <= 0.03 && ppc_ok,
          fmt("90%% interval coverage %.3f (true-model %.3f); ", coverage, oracle_cover) +
              "PPC " + bands};
}

// ------------------------------------------------------------ 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli given"};
  fs::create_directories(work);
  auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const auto data = work / "sim.csv", fit = work / "fit.json", bart = work / "bart.json";
  const auto bin = fs::path(star::PosteriorDraws::binary_path(fit.string()));
  const auto bart_bin = fs::path(star::PosteriorDraws::binary_path(bart.string()));
  const std::string exe = "'" + cli + "'";
  const std::vector<std::pair<std::string, std::vector<fs::path>>> steps{
      {exe + " simulate --design friedman --n 80 --dispersion 2 --seed 5 --out " + q(data), {data}},
      {exe + " fit --data " + q(data) + " --transform box-cox --nonlinear x1 --burn 150 --save 150 --thin 1 --chains 2 --seed 9 --out " + q(fit), {fit, bin}},
      {exe + " fit --data " + q(data) + " --model bart --trees 20 --burn 100 --save 100 --seed 9 --out " + q(bart), {bart, bart_bin}},
      {exe + " score " + q(fit) + " --test " + q(data) + " --seed 3 --out " + q(work / "score.json"), {work / "score.json"}},
      {exe + " score " + q(bart) + " --test " + q(data) + " --seed 3 --out " + q(work / "score_bart.json"), {work / "score_bart.json"}},
      {exe + " ppc " + q(fit) + " --data " + q(data) + " > " + q(work / "ppc.csv"), {work / "ppc.csv"}},
      {exe + " waic " + q(fit) + " > " + q(work / "waic.json"), {work / "waic.json"}},
      {exe + " pmf --mu 1.5 --sigma 0.7 --transform bc:0.4 --scheme censored:6 > " + q(work / "pmf.csv"), {work / "pmf.csv"}},
      {exe + " dispersion --transform sqrt > " + q(work / "dispersion.csv"), {work / "dispersion.csv"}},
  };
  // Run everything twice; the second pass writes the same paths so files
  // that name their sidecar compare exactly.
  std::map<std::string, std::string> first;
  int compared = 0;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& [cmd, outputs] : steps) {
      if (std::system((cmd + " 2>/dev/null").c_str()) != 0) return {false, "command failed: " + cmd};
      for (const auto& p : outputs) {
        if (!fs::exists(p)) return {false, "missing output " + p.string()};
        const std::string bytes = slurp(p);
        if (pass == 0) {
          first[p.string()] = bytes;
        } else {
          ++compared;
          if (bytes != first[p.string()]) return {false, "differs between runs: " + p.filename().string()};
        }
      }
    }
  }
  return {true, fmt("%g output files byte-identical across two runs", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "star_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the star executable");
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "distributional identities", 1.0, distributional_identities},
      {2, "censoring coherence", 1.0, censoring_coherence},
      {3, "sampler correctness", 30.0, sampler_correctness},
      {4, "posterior oracle equivalence", 60.0, posterior_oracle},
      {5, "linear design replication", 900.0, linear_replication},
      {6, "Friedman design replication", 2700.0, friedman_replication},
      {7, "self-consistency coverage", 600.0, self_consistency},
      {8, "CLI determinism", 0.0, [&] { return cli_determinism(cli, work); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = out.ok;
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_seconds > 0.0) {
      timing += fmt(" (limit %g s)", c.limit_seconds);
      ok = ok && secs < c.limit_seconds;
    }
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << out.detail << " ["
              << timing << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
