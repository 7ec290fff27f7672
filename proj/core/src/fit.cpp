#include "star/fit.hpp"

#include "star/error.hpp"
#include "star/normal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace star {

namespace {

constexpr int kMaxTruncation = 1000000;

std::string short_transform(const std::string& t) {
  return t == "bc" ? "box-cox" : t;
}

void check_schedule(const McmcSchedule& m) {
  if (m.burn < 0 || m.save < 1 || m.thin < 1 || m.chains < 1) {
    throw Error(ErrorKind::Parameter, "MCMC schedule needs burn >= 0, save >= 1, thin >= 1, chains >= 1");
  }
}

GaussianLink link_for(const std::string& transform) {
  if (transform == "log") return GaussianLink::Log1p;
  if (transform == "id") return GaussianLink::Identity;
  throw Error(ErrorKind::Parameter, "the Gaussian baseline supports the id and log links only");
}

void check_responses(const Dataset& data, const RoundingScheme& scheme) {
  if (data.size() == 0) throw Error(ErrorKind::Input, "dataset is empty");
  for (int v : data.y) {
    if (v < 0) throw Error(ErrorKind::Input, "responses must be nonnegative");
    if (scheme.has_top() && v > scheme.top) {
      throw Error(ErrorKind::Input, "response " + std::to_string(v) + " exceeds the scheme maximum " +
                                        std::to_string(scheme.top));
    }
    if (v < scheme.left_censor) {
      throw Error(ErrorKind::Input, "response below the left-censoring point");
    }
  }
}

bool want_expected(const FitConfig& c, const Dataset& data) {
  switch (c.expected) {
    case FitConfig::Expected::Always: return true;
    case FitConfig::Expected::Never: return false;
    case FitConfig::Expected::Auto: break;
  }
  return data.has_truth();
}

TransformationState make_transform_state(const FitConfig& c, const Dataset& data) {
  if (c.likelihood == Likelihood::Gaussian) return TransformationState{};
  return TransformationState(
      make_transformation(short_transform(c.transform), data.y, c.lambda0, c.ispline_prior_variance),
      c.transform_settings);
}

// Per-chain storage of everything saved at each retained iteration.
class Recorder {
 public:
  Recorder(const Dataset& data, const FitConfig& config, Eigen::Index transform_params)
      : data_(data), config_(config), expected_(want_expected(config, data)) {
    const auto S = static_cast<Eigen::Index>(config.mcmc.save);
    const auto n = static_cast<Eigen::Index>(data.size());
    loglik_.resize(S, n);
    mu_.resize(S, n);
    sigma_.resize(S, 1);
    transform_.resize(S, transform_params);
    if (config.store_predictive) predictive_.resize(S, n);
    if (expected_) expected_draws_.resize(S, n);
    if (config.likelihood == Likelihood::Gaussian) link_ = link_for(config.transform);
  }

  void record(Eigen::Index s, const TransformationState& transform, const Eigen::VectorXd& mu,
              double sigma, RngStream& rng) {
    const auto n = mu.size();
    mu_.row(s) = mu.transpose();
    sigma_(s, 0) = sigma;
    const auto& y = data_.y;
    const auto& scheme = config_.scheme;
    if (config_.likelihood == Likelihood::Gaussian) {
      for (Eigen::Index i = 0; i < n; ++i) {
        loglik_(s, i) = gaussian_log_density(y[static_cast<std::size_t>(i)], link_, mu(i), sigma);
        if (config_.store_predictive) {
          predictive_(s, i) = gaussian_inverse_link(mu(i) + sigma * rng.normal(), link_);
        }
        if (expected_) expected_draws_(s, i) = gaussian_expected_count(link_, mu(i), sigma);
      }
      return;
    }
    const Transformation& g = transform.current();
    const auto params = transform.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) transform_(s, static_cast<Eigen::Index>(k)) = params[k];
    const int ymax = *std::max_element(y.begin(), y.end());
    const CellTable cells(g, scheme, ymax);
    for (Eigen::Index i = 0; i < n; ++i) {
      loglik_(s, i) = log_pmf_from_cell(cells[y[static_cast<std::size_t>(i)]], mu(i), sigma);
      if (config_.store_predictive) {
        predictive_(s, i) = round_transformed(mu(i) + sigma * rng.normal(), g, scheme);
      }
    }
    if (expected_) {
      const auto e = expected_counts(g, scheme, std::span<const double>(mu.data(), mu.size()), sigma);
      for (Eigen::Index i = 0; i < n; ++i) expected_draws_(s, i) = e[static_cast<std::size_t>(i)];
    }
  }

  void finish(PosteriorDraws& d) {
    d.set("loglik", std::move(loglik_));
    d.set("mu", std::move(mu_));
    d.set("sigma", std::move(sigma_));
    if (config_.likelihood == Likelihood::Star) d.set("transform", std::move(transform_));
    if (config_.store_predictive) d.set("predictive", std::move(predictive_));
    if (expected_) d.set("expected", std::move(expected_draws_));
  }

 private:
  const Dataset& data_;
  const FitConfig& config_;
  bool expected_;
  GaussianLink link_ = GaussianLink::Identity;
  Eigen::MatrixXd loglik_, mu_, sigma_, transform_, predictive_, expected_draws_;
};

struct ChainOutput {
  PosteriorDraws draws;
  nlohmann::json ensembles = nlohmann::json::array();
  nlohmann::json diagnostics = nlohmann::json::object();
};

template <class Runner>
std::vector<ChainOutput> run_chains(int chains, Runner runner) {
  std::vector<ChainOutput> out(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::vector<std::thread> threads;
  for (int c = 1; c < chains; ++c) {
    threads.emplace_back([&, c] {
      try {
        out[static_cast<std::size_t>(c)] = runner(c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  try {
    out[0] = runner(0);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Eigen::Index transform_param_count(const TransformationState& t, const FitConfig& c) {
  if (c.likelihood == Likelihood::Gaussian) return 0;
  return static_cast<Eigen::Index>(t.parameters().size());
}

nlohmann::json base_meta(const Dataset& data, const FitConfig& config,
                         const TransformationState& transform) {
  nlohmann::json meta;
  meta["model"] = config.model == ModelKind::Additive ? "additive" : "bart";
  meta["likelihood"] = config.likelihood == Likelihood::Star ? "star" : "gaussian";
  if (config.likelihood == Likelihood::Gaussian) {
    meta["link"] = config.transform;
  } else {
    meta["transformation"] = transform.current().to_json();
  }
  meta["scheme"] = config.scheme.name();
  meta["n"] = data.size();
  meta["predictors"] = data.predictor_names;
  meta["config"] = config.to_json();
  meta["quantile_method"] = "type-1 inverse empirical CDF";
  return meta;
}

PosteriorDraws assemble(std::vector<ChainOutput> chains, nlohmann::json meta) {
  std::vector<PosteriorDraws> parts;
  nlohmann::json ensembles = nlohmann::json::array();
  nlohmann::json diagnostics = nlohmann::json::array();
  Eigen::Index offset = 0;
  for (auto& c : chains) {
    for (auto& e : c.ensembles) {
      e["draw"] = e["draw"].get<Eigen::Index>() + offset;
      ensembles.push_back(std::move(e));
    }
    diagnostics.push_back(std::move(c.diagnostics));
    offset += c.draws.draws();
    parts.push_back(std::move(c.draws));
  }
  PosteriorDraws out = PosteriorDraws::concatenate(parts);
  out.meta = std::move(meta);
  out.meta["chains"] = chains.size();
  out.meta["draws"] = out.draws();
  out.meta["diagnostics"] = diagnostics;
  if (!ensembles.empty()) out.meta["ensembles"] = ensembles;
  return out;
}

nlohmann::json transform_diagnostics(const TransformationState& t) {
  nlohmann::json d;
  if (t.proposed() > 0) {
    d["transform_acceptance"] = static_cast<double>(t.accepted()) / static_cast<double>(t.proposed());
  }
  return d;
}

}  // namespace

// ------------------------------------------------------------------ config

FitConfig FitConfig::preset(const std::string& name) {
  FitConfig c;
  auto tail_transform = [&](const std::string& t) {
    static const std::set<std::string> ok{"id", "log", "sqrt", "bc", "box-cox", "np"};
    if (!ok.count(t)) throw Error(ErrorKind::Input, "unknown model preset '" + name + "'");
    return short_transform(t);
  };
  if (name.rfind("bart-star-", 0) == 0) {
    c.model = ModelKind::Bart;
    c.transform = tail_transform(name.substr(10));
  } else if (name.rfind("bart-", 0) == 0) {
    c.model = ModelKind::Bart;
    c.likelihood = Likelihood::Gaussian;
    c.transform = name.substr(5);
    link_for(c.transform);
  } else if (name.rfind("am-star-", 0) == 0) {
    c.transform = tail_transform(name.substr(8));
  } else if (name.rfind("star-", 0) == 0) {
    c.transform = tail_transform(name.substr(5));
  } else if (name.rfind("lm-", 0) == 0) {
    c.likelihood = Likelihood::Gaussian;
    c.transform = name.substr(3);
    link_for(c.transform);
  } else {
    throw Error(ErrorKind::Input, "unknown model preset '" + name + "'");
  }
  return c;
}

void FitConfig::apply_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{
      "model", "likelihood", "transform", "scheme", "nonlinear", "spline_size", "lambda0",
      "ispline_prior_variance", "bart", "calibration_burn", "calibration_save",
      "stored_ensembles", "mcmc", "store_predictive", "expected", "slice_width",
      "ram_target", "ram_initial_scale"};
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw Error(ErrorKind::Input, "unknown configuration key '" + k + "'");
  }
  try {
    if (j.contains("model")) {
      const auto m = j["model"].get<std::string>();
      if (m == "additive" || m == "linear") {
        model = ModelKind::Additive;
      } else if (m == "bart") {
        model = ModelKind::Bart;
      } else {
        throw Error(ErrorKind::Input, "model must be additive or bart");
      }
    }
    if (j.contains("likelihood")) {
      const auto l = j["likelihood"].get<std::string>();
      if (l != "star" && l != "gaussian") throw Error(ErrorKind::Input, "likelihood must be star or gaussian");
      likelihood = l == "star" ? Likelihood::Star : Likelihood::Gaussian;
    }
    if (j.contains("transform")) transform = short_transform(j["transform"].get<std::string>());
    if (j.contains("scheme")) scheme = RoundingScheme::parse(j["scheme"].get<std::string>());
    if (j.contains("nonlinear")) nonlinear = j["nonlinear"].get<std::vector<std::string>>();
    spline_size = j.value("spline_size", spline_size);
    lambda0 = j.value("lambda0", lambda0);
    ispline_prior_variance = j.value("ispline_prior_variance", ispline_prior_variance);
    calibration_burn = j.value("calibration_burn", calibration_burn);
    calibration_save = j.value("calibration_save", calibration_save);
    stored_ensembles = j.value("stored_ensembles", stored_ensembles);
    store_predictive = j.value("store_predictive", store_predictive);
    transform_settings.slice.width = j.value("slice_width", transform_settings.slice.width);
    transform_settings.ram_target = j.value("ram_target", transform_settings.ram_target);
    transform_settings.ram_initial_scale =
        j.value("ram_initial_scale", transform_settings.ram_initial_scale);
    if (j.contains("expected")) {
      const auto e = j["expected"].get<std::string>();
      if (e == "auto") {
        expected = Expected::Auto;
      } else if (e == "always") {
        expected = Expected::Always;
      } else if (e == "never") {
        expected = Expected::Never;
      } else {
        throw Error(ErrorKind::Input, "expected must be auto, always or never");
      }
    }
    if (j.contains("mcmc")) {
      const auto& m = j["mcmc"];
      for (const auto& [k, v] : m.items()) {
        static const std::set<std::string> mk{"burn", "save", "thin", "chains", "seed"};
        if (!mk.count(k)) throw Error(ErrorKind::Input, "unknown mcmc key '" + k + "'");
      }
      mcmc.burn = m.value("burn", mcmc.burn);
      mcmc.save = m.value("save", mcmc.save);
      mcmc.thin = m.value("thin", mcmc.thin);
      mcmc.chains = m.value("chains", mcmc.chains);
      mcmc.seed = m.value("seed", mcmc.seed);
    }
    if (j.contains("bart")) {
      const auto& b = j["bart"];
      for (const auto& [k, v] : b.items()) {
        static const std::set<std::string> bk{"trees", "alpha", "beta", "k", "nu", "q", "min_leaf",
                                              "p_grow", "p_prune"};
        if (!bk.count(k)) throw Error(ErrorKind::Input, "unknown bart key '" + k + "'");
      }
      bart.trees = b.value("trees", bart.trees);
      bart.alpha = b.value("alpha", bart.alpha);
      bart.beta = b.value("beta", bart.beta);
      bart.k = b.value("k", bart.k);
      bart.nu = b.value("nu", bart.nu);
      bart.q = b.value("q", bart.q);
      bart.min_leaf = b.value("min_leaf", bart.min_leaf);
      bart.p_grow = b.value("p_grow", bart.p_grow);
      bart.p_prune = b.value("p_prune", bart.p_prune);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad configuration value: ") + e.what());
  }
}

nlohmann::json FitConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model == ModelKind::Additive ? "additive" : "bart";
  j["likelihood"] = likelihood == Likelihood::Star ? "star" : "gaussian";
  j["transform"] = transform;
  j["scheme"] = scheme.name();
  j["nonlinear"] = nonlinear;
  j["spline_size"] = spline_size;
  j["lambda0"] = lambda0;
  j["mcmc"] = {{"burn", mcmc.burn}, {"save", mcmc.save}, {"thin", mcmc.thin},
               {"chains", mcmc.chains}, {"seed", mcmc.seed}};
  if (model == ModelKind::Bart) {
    j["bart"] = {{"trees", bart.trees}, {"alpha", bart.alpha}, {"beta", bart.beta},
                 {"k", bart.k},         {"nu", bart.nu},       {"q", bart.q},
                 {"min_leaf", bart.min_leaf}, {"p_grow", bart.p_grow}, {"p_prune", bart.p_prune}};
    j["calibration_burn"] = calibration_burn;
    j["calibration_save"] = calibration_save;
    j["stored_ensembles"] = stored_ensembles;
  }
  return j;
}

// ---------------------------------------------------------------- additive

PosteriorDraws fit_star_additive(const Dataset& data, const FitConfig& config) {
  check_schedule(config.mcmc);
  check_responses(data, config.scheme);
  const bool gaussian = config.likelihood == Likelihood::Gaussian;
  const GaussianLink link = gaussian ? link_for(config.transform) : GaussianLink::Identity;
  const AdditiveDesign design = AdditiveDesign::build(data, config.nonlinear, config.spline_size);
  const TransformationState start = make_transform_state(config, data);

  auto runner = [&](int chain) {
    RngStream rng(config.mcmc.seed, static_cast<std::uint64_t>(chain) + 1);
    AdditiveState state = gaussian ? AdditiveState::initial_gaussian(design, data.y, link)
                                   : AdditiveState::initial(design, data.y, config.scheme, start);
    Recorder rec(data, config, transform_param_count(start, config));
    const auto S = static_cast<Eigen::Index>(config.mcmc.save);
    Eigen::Index total_alpha = 0;
    for (const auto& b : design.blocks) total_alpha += b.size();
    Eigen::MatrixXd beta_std(S, design.linear_size());
    Eigen::MatrixXd beta(S, design.linear_size());
    Eigen::MatrixXd alpha(S, total_alpha);

    const long iterations = config.mcmc.burn + static_cast<long>(config.mcmc.save) * config.mcmc.thin;
    Eigen::Index s = 0;
    for (long it = 0; it < iterations; ++it) {
      state.transform.set_adapting(it < config.mcmc.burn / 2);
      gibbs_sweep_additive(state, design, data.y, config.scheme, rng, config.additive_priors);
      if (it < config.mcmc.burn || (it - config.mcmc.burn + 1) % config.mcmc.thin != 0) continue;
      const Eigen::VectorXd mu = state.mean(design);
      rec.record(s, state.transform, mu, state.sigma(), rng);
      beta_std.row(s) = state.beta.transpose();
      Eigen::VectorXd orig = state.beta;
      for (Eigen::Index k = 1; k < orig.size(); ++k) {
        orig(k) = state.beta(k) / design.scale(k - 1);
        orig(0) -= state.beta(k) * design.center(k - 1) / design.scale(k - 1);
      }
      beta.row(s) = orig.transpose();
      Eigen::Index off = 0;
      for (const auto& a : state.alpha) {
        alpha.row(s).segment(off, a.size()) = a.transpose();
        off += a.size();
      }
      ++s;
    }
    ChainOutput out;
    rec.finish(out.draws);
    out.draws.set("beta", std::move(beta));
    out.draws.set("beta_std", std::move(beta_std));
    out.draws.set("alpha", std::move(alpha));
    out.diagnostics = transform_diagnostics(state.transform);
    return out;
  };

  auto meta = base_meta(data, config, start);
  meta["design"] = design.to_json();
  std::vector<std::string> coef_names{"(intercept)"};
  coef_names.insert(coef_names.end(), design.names.begin(), design.names.end());
  meta["coefficients"] = coef_names;
  return assemble(run_chains(config.mcmc.chains, runner), std::move(meta));
}

// -------------------------------------------------------------------- bart

PosteriorDraws fit_bart_star(const Dataset& data, const FitConfig& config) {
  check_schedule(config.mcmc);
  check_responses(data, config.scheme);
  const bool gaussian = config.likelihood == Likelihood::Gaussian;
  const GaussianLink link = gaussian ? link_for(config.transform) : GaussianLink::Identity;
  const TransformationState start = make_transform_state(config, data);

  RngStream calib_rng(config.mcmc.seed, 0);
  const SigmaPrior sprior =
      calibrate_sigma_prior(data, start, config.scheme, config.bart, config.calibration_burn,
                            config.calibration_save, calib_rng, gaussian, link);
  const Eigen::Index stride = std::max<Eigen::Index>(
      1, (config.mcmc.save + config.stored_ensembles - 1) / std::max(1, config.stored_ensembles));

  auto runner = [&](int chain) {
    RngStream rng(config.mcmc.seed, static_cast<std::uint64_t>(chain) + 1);
    TransformationState transform = start;
    std::vector<double> z;
    if (gaussian) {
      for (int v : data.y) z.push_back(gaussian_link(v, link));
    } else {
      z = initial_latents(data.y, transform.current(), config.scheme);
    }
    TreeEnsemble ens = initial_ensemble(data.X, z, config.bart, sprior.sigma_hat);
    ens.sigma_scale = sprior.scale;
    Recorder rec(data, config, transform_param_count(start, config));
    ChainOutput out;
    double leaf_sum = 0.0;

    const long iterations = config.mcmc.burn + static_cast<long>(config.mcmc.save) * config.mcmc.thin;
    Eigen::Index s = 0;
    for (long it = 0; it < iterations; ++it) {
      transform.set_adapting(it < config.mcmc.burn / 2);
      if (!gaussian) {
        const Eigen::VectorXd mu = ens.training_mean();
        impute_latents(data.y, transform.current(), config.scheme,
                       std::span<const double>(mu.data(), mu.size()), std::sqrt(ens.sigma2), rng, z);
      }
      bart_sweep(ens, data.X, z, rng);
      const Eigen::VectorXd mu = ens.training_mean();
      if (!gaussian && transform.learnable()) {
        transform.update(data.y, config.scheme, std::span<const double>(mu.data(), mu.size()),
                         std::sqrt(ens.sigma2), rng);
      }
      if (it < config.mcmc.burn || (it - config.mcmc.burn + 1) % config.mcmc.thin != 0) continue;
      rec.record(s, transform, mu, std::sqrt(ens.sigma2), rng);
      if (s % stride == 0) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : ens.trees) trees.push_back(t.tree.to_json());
        out.ensembles.push_back({{"draw", s}, {"offset", ens.offset}, {"trees", std::move(trees)}});
      }
      double leaves = 0.0;
      for (const auto& t : ens.trees) leaves += t.tree.leaf_count();
      leaf_sum += leaves / static_cast<double>(ens.trees.size());
      ++s;
    }
    rec.finish(out.draws);
    out.diagnostics = transform_diagnostics(transform);
    out.diagnostics["mean_leaves_per_tree"] = leaf_sum / static_cast<double>(std::max<Eigen::Index>(s, 1));
    return out;
  };

  auto meta = base_meta(data, config, start);
  meta["trees"] = config.bart.trees;
  meta["sigma_prior"] = {{"nu", sprior.nu}, {"scale", sprior.scale}, {"sigma_hat", sprior.sigma_hat}};
  return assemble(run_chains(config.mcmc.chains, runner), std::move(meta));
}

PosteriorDraws fit_model(const Dataset& data, const FitConfig& config) {
  return config.model == ModelKind::Additive ? fit_star_additive(data, config)
                                             : fit_bart_star(data, config);
}

// ------------------------------------------------------ reading the draws

bool is_gaussian(const PosteriorDraws& draws) {
  return draws.meta.value("likelihood", "star") == "gaussian";
}

GaussianLink draw_link(const PosteriorDraws& draws) {
  return link_for(draws.meta.at("link").get<std::string>());
}

Transformation base_transformation(const PosteriorDraws& draws) {
  if (is_gaussian(draws)) throw Error(ErrorKind::Input, "Gaussian fits carry no transformation");
  return Transformation::from_json(draws.meta.at("transformation"));
}

Transformation draw_transformation(const PosteriorDraws& draws, Eigen::Index s) {
  const Transformation base = base_transformation(draws);
  const auto& t = draws.get("transform");
  std::vector<double> params(static_cast<std::size_t>(t.cols()));
  for (Eigen::Index k = 0; k < t.cols(); ++k) params[static_cast<std::size_t>(k)] = t(s, k);
  return TransformationState::with_parameters(base, params);
}

RoundingScheme draw_scheme(const PosteriorDraws& draws) {
  return RoundingScheme::parse(draws.meta.value("scheme", "floor"));
}

Eigen::MatrixXd predict_latent_means(const PosteriorDraws& draws, const Eigen::MatrixXd& X,
                                     std::vector<Eigen::Index>& rows) {
  rows.clear();
  const auto model = draws.meta.at("model").get<std::string>();
  const auto p = draws.meta.at("predictors").size();
  if (static_cast<std::size_t>(X.cols()) != p) {
    throw Error(ErrorKind::Input, "test data have " + std::to_string(X.cols()) +
                                      " predictors, the fit used " + std::to_string(p));
  }
  if (model == "additive") {
    const AdditiveDesign design = AdditiveDesign::from_json(draws.meta.at("design"));
    const auto& beta = draws.get("beta_std");
    const auto& alpha = draws.get("alpha");
    Eigen::MatrixXd mu = beta * design.linear_matrix(X).transpose();
    Eigen::Index off = 0;
    for (const auto& b : design.blocks) {
      const Eigen::MatrixXd B = b.evaluate(X.col(static_cast<Eigen::Index>(b.column)));
      mu += alpha.middleCols(off, b.size()) * B.transpose();
      off += b.size();
    }
    for (Eigen::Index s = 0; s < mu.rows(); ++s) rows.push_back(s);
    return mu;
  }
  const auto& ens = draws.meta.at("ensembles");
  Eigen::MatrixXd mu(static_cast<Eigen::Index>(ens.size()), X.rows());
  Eigen::Index r = 0;
  for (const auto& e : ens) {
    std::vector<RegressionTree> trees;
    for (const auto& t : e.at("trees")) trees.push_back(RegressionTree::from_json(t));
    const double offset = e.at("offset").get<double>();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double v = offset;
      for (const auto& t : trees) v += t.predict(X.row(i));
      mu(r, i) = v;
    }
    rows.push_back(e.at("draw").get<Eigen::Index>());
    ++r;
  }
  return mu;
}

std::vector<double> expected_counts(const Transformation& g, const RoundingScheme& scheme,
                                    std::span<const double> mu, double sigma) {
  std::vector<int> J(mu.size());
  int jmax = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    J[i] = std::min(truncation_point(g, scheme, mu[i], sigma, 0.9999), kMaxTruncation);
    jmax = std::max(jmax, J[i]);
  }
  const CellTable cells(g, scheme, jmax);
  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double total = 0.0;
    for (int j = std::max(1, scheme.left_censor); j <= J[i]; ++j) {
      const Interval& c = cells[j];
      if (!(c.lower < c.upper)) continue;
      const double a = (c.lower - mu[i]) / sigma;
      const double b = (c.upper - mu[i]) / sigma;
      // Difference on whichever side of the mean keeps precision.
      const double p = a > 0.0 ? normal::sf(a) - normal::sf(b) : normal::cdf(b) - normal::cdf(a);
      total += j * p;
    }
    out[i] = total;
  }
  return out;
}

}  // namespace star
