#include "star/harness.hpp"

#include "star/error.hpp"
#include "star/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>

namespace star {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_n(int n) {
  if (n < 1) throw Error(ErrorKind::Parameter, "simulation needs n >= 1");
}

void emit(Dataset& d, RngStream& rng, double r_star) {
  d.y.resize(d.lambda_star.size());
  for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = draw_negative_binomial(d.lambda_star[i], r_star, rng);
}

}  // namespace

int draw_negative_binomial(double mean, double r, RngStream& rng) {
  if (!(mean > 0.0) || !(r > 0.0)) throw Error(ErrorKind::Parameter, "negative binomial needs mean, r > 0");
  const double rate = rng.gamma(r, r / mean);
  const auto y = rng.poisson(rate);
  if (y > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorKind::Numerical, "negative binomial draw overflows int");
  }
  return static_cast<int>(y);
}

Dataset simulate_negbin_linear(int n, double r_star, RngStream& rng) {
  check_n(n);
  Dataset d;
  for (int k = 1; k <= 6; ++k) d.predictor_names.push_back("x" + std::to_string(k));
  d.X.resize(n, 6);
  d.lambda_star.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double eta = kLinearDesignBeta[0];
    for (int k = 0; k < 6; ++k) {
      d.X(i, k) = rng.normal();
      eta += kLinearDesignBeta[static_cast<std::size_t>(k) + 1] * d.X(i, k);
    }
    d.lambda_star[static_cast<std::size_t>(i)] = std::exp(eta);
  }
  emit(d, rng, r_star);
  return d;
}

double friedman_raw(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return 10.0 * std::sin(std::numbers::pi * x(0) * x(1)) + 20.0 * (x(2) - 0.5) * (x(2) - 0.5) +
         10.0 * x(3) + 5.0 * x(4);
}

Dataset simulate_negbin_friedman(int n, double r_star, RngStream& rng) {
  check_n(n);
  if (n < 2) throw Error(ErrorKind::Parameter, "the Friedman design needs n >= 2 to centre and scale");
  Dataset d;
  for (int k = 1; k <= 10; ++k) d.predictor_names.push_back("x" + std::to_string(k));
  d.X.resize(n, 10);
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 10; ++k) d.X(i, k) = rng.uniform();
    f(i) = friedman_raw(d.X.row(i));
  }
  const double m = f.mean();
  const double sd = std::sqrt((f.array() - m).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateData, "Friedman function is constant over the sample");
  d.lambda_star.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    d.lambda_star[static_cast<std::size_t>(i)] = std::exp(std::log(1.5) + std::log(5.0) * (f(i) - m) / sd);
  }
  emit(d, rng, r_star);
  return d;
}

Dataset simulate(const std::string& design, int n, double r_star, RngStream& rng) {
  if (design == "linear") return simulate_negbin_linear(n, r_star, rng);
  if (design == "friedman") return simulate_negbin_friedman(n, r_star, rng);
  throw Error(ErrorKind::Input, "unknown design '" + design + "' (linear|friedman)");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.design = j.value("design", c.design);
    c.n = j.value("n", c.n);
    c.dispersions = j.value("dispersions", c.dispersions);
    c.replicates = j.value("replicates", c.replicates);
    c.models = j.value("models", c.models);
    c.baseline = j.value("baseline", c.baseline);
    c.seed = j.value("seed", c.seed);
    c.model_config = j.value("model_config", c.model_config);
    c.out_dir = j.value("out", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad experiment configuration: ") + e.what());
  }
  if (std::find(c.models.begin(), c.models.end(), c.baseline) == c.models.end()) {
    c.models.insert(c.models.begin(), c.baseline);
  }
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.replicates < 1) throw Error(ErrorKind::Parameter, "experiment needs replicates >= 1");
  ExperimentResult result;
  for (std::size_t di = 0; di < config.dispersions.size(); ++di) {
    const double r = config.dispersions[di];
    for (int rep = 0; rep < config.replicates; ++rep) {
      const std::uint64_t cell = (static_cast<std::uint64_t>(di) << 32) | static_cast<std::uint64_t>(rep);
      RngStream data_rng(config.seed, cell);
      const Dataset data = simulate(config.design, config.n, r, data_rng);

      std::vector<ExperimentRow> rows;
      for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        const auto& name = config.models[mi];
        ExperimentRow row{rep, r, name, false, "", kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, 0.0};
        const auto start = std::chrono::steady_clock::now();
        try {
          FitConfig fc = FitConfig::preset(name);
          fc.apply_json(config.model_config);
          fc.expected = FitConfig::Expected::Always;
          fc.store_predictive = false;
          RngStream seeder(config.seed, cell);
          fc.mcmc.seed = seeder.split(mi + 1)();
          const PosteriorDraws draws = fit_model(data, fc);
          const WaicResult w = waic(draws.get("loglik"));
          const Eigen::VectorXd fitted = draws.get("expected").colwise().mean().transpose();
          row.waic = w.waic;
          row.lpd = w.lpd;
          row.d_eff = w.d_eff;
          row.rmse = rmse_vs_truth(std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())),
                                   data.lambda_star);
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
      }
      const auto base = std::find_if(rows.begin(), rows.end(),
                                     [&](const ExperimentRow& x) { return x.model == config.baseline; });
      for (auto& row : rows) {
        if (base != rows.end() && base->ok && row.ok) {
          row.relative_waic = row.waic / base->waic;
          row.relative_rmse = row.rmse / base->rmse;
        }
        result.rows.push_back(row);
      }
    }
  }

  for (double r : config.dispersions) {
    for (const auto& name : config.models) {
      ExperimentSummaryRow s{r, name, 0, 0, kNaN, kNaN, kNaN};
      std::vector<double> rw, rr;
      int below = 0;
      for (const auto& row : result.rows) {
        if (row.dispersion != r || row.model != name) continue;
        if (!row.ok) {
          ++s.failures;
          continue;
        }
        ++s.fits;
        if (std::isfinite(row.relative_waic)) {
          rw.push_back(row.relative_waic);
          if (row.relative_waic < 1.0) ++below;
        }
        if (std::isfinite(row.relative_rmse)) rr.push_back(row.relative_rmse);
      }
      s.median_relative_waic = median(rw);
      s.median_relative_rmse = median(rr);
      if (!rw.empty()) s.share_relative_waic_below_one = static_cast<double>(below) / static_cast<double>(rw.size());
      result.summary.push_back(s);
    }
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream rows_out(std::filesystem::path(config.out_dir) / "replicates.csv");
    write_experiment_rows(rows_out, result.rows);
    std::ofstream summary_out(std::filesystem::path(config.out_dir) / "summary.csv");
    write_experiment_summary(summary_out, result.summary);
  }
  return result;
}

void write_experiment_rows(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "replicate,dispersion,model,ok,waic,lpd,d_eff,rmse,relative_waic,relative_rmse,error\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.replicate << ',' << r.dispersion << ',' << r.model << ',' << (r.ok ? 1 : 0) << ','
        << r.waic << ',' << r.lpd << ',' << r.d_eff << ',' << r.rmse << ',' << r.relative_waic << ','
        << r.relative_rmse << ',' << err << '\n';
  }
}

void write_experiment_summary(std::ostream& out, const std::vector<ExperimentSummaryRow>& rows) {
  out << "dispersion,model,fits,failures,median_relative_waic,share_relative_waic_below_one,"
         "median_relative_rmse\n";
  out << std::setprecision(10);
  for (const auto& s : rows) {
    out << s.dispersion << ',' << s.model << ',' << s.fits << ',' << s.failures << ','
        << s.median_relative_waic << ',' << s.share_relative_waic_below_one << ','
        << s.median_relative_rmse << '\n';
  }
}

}  // namespace star
