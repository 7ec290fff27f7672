#include "star/dataset.hpp"
#include "star/error.hpp"
#include "star/fit.hpp"
#include "star/harness.hpp"
#include "star/metrics.hpp"
#include "star/rounding.hpp"
#include "star/transform.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using star::Error;
using star::ErrorKind;

// id | log | sqrt | bc:<lambda>
star::Transformation parse_fixed_transform(const std::string& name) {
  if (name == "id") return star::Transformation::identity();
  if (name == "log") return star::Transformation::log();
  if (name == "sqrt") return star::Transformation::sqrt();
  if (name.rfind("bc:", 0) == 0) return star::Transformation::box_cox(std::stod(name.substr(3)));
  throw Error(ErrorKind::Input, "transform must be id, log, sqrt or bc:<lambda>");
}

std::vector<double> parse_grid(const std::string& spec) {
  // from:to:count or a comma list
  std::vector<double> out;
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    const double from = std::stod(spec.substr(0, a));
    const double to = std::stod(spec.substr(a + 1, b - a - 1));
    const int count = std::stoi(spec.substr(b + 1));
    if (count < 1) throw Error(ErrorKind::Input, "grid needs at least one point");
    for (int k = 0; k < count; ++k) out.push_back(count == 1 ? from : from + (to - from) * k / (count - 1));
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian STAR regression for count data"};
  app.require_subcommand(1);

  // pmf
  auto* pmf = app.add_subcommand("pmf", "Print P(y = j) for j = 0..max-j as CSV");
  double mu = 0.0, sigma = 1.0;
  std::string transform = "id", scheme_text = "floor";
  int max_j = 20;
  pmf->add_option("--mu", mu, "Latent mean")->required();
  pmf->add_option("--sigma", sigma, "Latent standard deviation")->required();
  pmf->add_option("--transform", transform, "id | log | sqrt | bc:<lambda>");
  pmf->add_option("--scheme", scheme_text, "floor | bounded:K | censored:K [,left:L]");
  pmf->add_option("--max-j", max_j, "Largest count printed");

  // dispersion
  auto* disp = app.add_subcommand("dispersion", "Mean, variance and P(y = 0) over a (mu, sigma) grid");
  std::string mu_grid = "-2:4:13", sigma_grid = "0.5,1,2";
  disp->add_option("--transform", transform, "id | log | sqrt | bc:<lambda>");
  disp->add_option("--scheme", scheme_text, "Rounding scheme");
  disp->add_option("--mu-grid", mu_grid, "from:to:count or comma list");
  disp->add_option("--sigma-grid", sigma_grid, "from:to:count or comma list");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model and write fit.json plus its .bin draws");
  std::string model = "additive", likelihood = "star", data_path, response = "y", nonlinear;
  std::string config_path, out_path = "fit.json";
  int trees = -1, chains = -1, burn = -1, save = -1, thin = -1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  fit->add_option("--model", model, "additive | bart")->check(CLI::IsMember({"additive", "linear", "bart"}));
  fit->add_option("--transform", transform, "id | log | sqrt | box-cox | np");
  fit->add_option("--likelihood", likelihood, "star | gaussian")->check(CLI::IsMember({"star", "gaussian"}));
  fit->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--response", response, "Response column");
  fit->add_option("--nonlinear", nonlinear, "Comma-separated smooth predictors");
  fit->add_option("--scheme", scheme_text, "Rounding scheme");
  fit->add_option("--trees", trees, "Number of trees (bart)");
  fit->add_option("--chains", chains, "Number of chains");
  fit->add_option("--burn", burn, "Burn-in iterations");
  fit->add_option("--save", save, "Saved draws per chain");
  fit->add_option("--thin", thin, "Thinning");
  fit->add_option("--seed", seed, "Random seed")->each([&](const std::string&) { seed_given = true; });
  fit->add_option("--config", config_path, "JSON configuration")->check(CLI::ExistingFile);
  fit->add_option("--out", out_path, "Output JSON path");

  // waic
  auto* waic_cmd = app.add_subcommand("waic", "WAIC of a saved fit");
  std::string fit_path;
  waic_cmd->add_option("fit", fit_path, "fit.json")->required()->check(CLI::ExistingFile);

  // score
  auto* score = app.add_subcommand("score", "WAIC plus held-out predictive scores");
  std::string test_path, report_path;
  double level = 0.90;
  score->add_option("fit", fit_path, "fit.json")->required()->check(CLI::ExistingFile);
  score->add_option("--test", test_path, "Test CSV")->required()->check(CLI::ExistingFile);
  score->add_option("--response", response, "Response column");
  score->add_option("--level", level, "Prediction interval level");
  score->add_option("--seed", seed, "Seed for predictive draws");
  score->add_option("--out", report_path, "Report path (stdout by default)");

  // ppc
  auto* ppc = app.add_subcommand("ppc", "Posterior predictive checks from a fit's stored draws");
  ppc->add_option("fit", fit_path, "fit.json")->required()->check(CLI::ExistingFile);
  ppc->add_option("--data", data_path, "The training CSV")->required()->check(CLI::ExistingFile);
  ppc->add_option("--response", response, "Response column");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a negative-binomial synthetic design");
  std::string design = "linear";
  int n = 100;
  double dispersion = 1.0;
  sim->add_option("--design", design, "linear | friedman")->check(CLI::IsMember({"linear", "friedman"}));
  sim->add_option("--n", n, "Rows");
  sim->add_option("--dispersion", dispersion, "Negative-binomial r*");
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--out", out_path, "Output CSV")->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Replicated model comparison on a synthetic design");
  std::string exp_out;
  exp->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", exp_out, "Output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto scheme = star::RoundingScheme::parse(scheme_text);
    if (*pmf) {
      const auto g = parse_fixed_transform(transform);
      std::cout << "j,probability\n" << std::setprecision(17);
      for (int j = 0; j <= max_j; ++j) std::cout << j << ',' << star::pmf(j, g, scheme, mu, sigma) << '\n';
    } else if (*disp) {
      const auto g = parse_fixed_transform(transform);
      star::write_dispersion_csv(std::cout,
                                 star::dispersion_profile(g, scheme, parse_grid(mu_grid), parse_grid(sigma_grid)));
    } else if (*fit) {
      star::FitConfig config;
      if (!config_path.empty()) config.apply_json(read_json(config_path));
      if (fit->count("--model")) config.model = model == "bart" ? star::ModelKind::Bart : star::ModelKind::Additive;
      if (fit->count("--likelihood")) {
        config.likelihood = likelihood == "star" ? star::Likelihood::Star : star::Likelihood::Gaussian;
      }
      if (fit->count("--transform")) config.transform = transform;
      if (fit->count("--scheme")) config.scheme = scheme;
      if (!nonlinear.empty()) {
        config.nonlinear.clear();
        std::stringstream ss(nonlinear);
        std::string item;
        while (std::getline(ss, item, ',')) config.nonlinear.push_back(item);
      }
      if (trees > 0) config.bart.trees = trees;
      if (chains > 0) config.mcmc.chains = chains;
      if (burn >= 0) config.mcmc.burn = burn;
      if (save > 0) config.mcmc.save = save;
      if (thin > 0) config.mcmc.thin = thin;
      if (seed_given) config.mcmc.seed = seed;
      const auto data = star::Dataset::read_csv_file(data_path, response);
      const auto draws = star::fit_model(data, config);
      draws.save(out_path);
    } else if (*waic_cmd) {
      const auto draws = star::PosteriorDraws::load(fit_path);
      const auto w = star::waic(draws.get("loglik"));
      write_json({{"waic", w.waic}, {"lpd", w.lpd}, {"d_eff", w.d_eff}, {"infinite_points", w.infinite_points}},
                 "");
    } else if (*score) {
      const auto draws = star::PosteriorDraws::load(fit_path);
      const auto test = star::Dataset::read_csv_file(test_path, response);
      write_json(star::score_fit(draws, &test, seed, level), report_path);
    } else if (*ppc) {
      const auto draws = star::PosteriorDraws::load(fit_path);
      const auto data = star::Dataset::read_csv_file(data_path, response);
      if (!draws.has("predictive")) throw Error(ErrorKind::Input, "fit stored no predictive draws");
      std::vector<double> y(data.y.begin(), data.y.end());
      star::write_ppc_csv(std::cout, star::posterior_predictive_checks(draws.get("predictive"), y));
    } else if (*sim) {
      star::RngStream rng(seed, 0);
      star::simulate(design, n, dispersion, rng).write_csv_file(out_path);
    } else if (*exp) {
      auto config = star::ExperimentConfig::from_json(read_json(config_path));
      if (!exp_out.empty()) config.out_dir = exp_out;
      const auto result = star::run_experiment(config);
      star::write_experiment_summary(std::cout, result.summary);
    }
  } catch (const star::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
