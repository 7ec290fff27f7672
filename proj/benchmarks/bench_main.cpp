#include "star/additive.hpp"
#include "star/bart.hpp"
#include "star/harness.hpp"
#include "star/latent.hpp"
#include "star/rounding.hpp"
#include "star/samplers.hpp"

#include <benchmark/benchmark.h>

using star::RngStream;
using star::RoundingScheme;
using star::Transformation;

static void BM_Pmf(benchmark::State& state) {
  const auto g = Transformation::box_cox(0.4);
  int j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(star::pmf(j, g, RoundingScheme::floor(), 1.3, 0.8));
    j = (j + 1) % 50;
  }
}
BENCHMARK(BM_Pmf);

static void BM_TotalLogLikelihood(benchmark::State& state) {
  RngStream rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<int> y(n);
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = rng.normal(1.0, 0.5);
    y[i] = star::draw_negative_binomial(5.0, 2.0, rng);
  }
  const auto g = Transformation::box_cox(0.4);
  for (auto _ : state) benchmark::DoNotOptimize(star::total_log_likelihood(y, g, RoundingScheme::floor(), mu, 0.8));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TotalLogLikelihood)->Arg(100)->Arg(1000);

static void BM_TruncatedNormal(benchmark::State& state) {
  RngStream rng(2);
  const double a = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(star::sample_truncated_standard_normal(a, a + 1.0, rng));
}
BENCHMARK(BM_TruncatedNormal)->Arg(-1)->Arg(3)->Arg(8)->Arg(30);

static void BM_AdditiveSweep(benchmark::State& state) {
  RngStream rng(3);
  const auto d = star::simulate_negbin_linear(static_cast<int>(state.range(0)), 1.0, rng);
  const auto design = star::AdditiveDesign::build(d, {"x1", "x2"});
  star::TransformationState ts(star::make_transformation("box-cox", d.y));
  auto s = star::AdditiveState::initial(design, d.y, RoundingScheme::floor(), ts);
  for (auto _ : state) star::gibbs_sweep_additive(s, design, d.y, RoundingScheme::floor(), rng);
}
BENCHMARK(BM_AdditiveSweep)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

static void BM_TreeUpdate(benchmark::State& state) {
  RngStream rng(4);
  const auto d = star::simulate_negbin_friedman(static_cast<int>(state.range(0)), 1.0, rng);
  std::vector<double> z(d.y.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::log1p(d.y[i]);
  star::BartPriors p;
  p.trees = 50;
  auto e = star::initial_ensemble(d.X, z, p, 0.5);
  for (int k = 0; k < 20; ++k) star::bart_sweep(e, d.X, z, rng);
  const Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  const Eigen::VectorXd residual = zv.array() - e.offset;
  auto& fit = e.trees.front();
  for (auto _ : state) star::tree_update(fit, d.X, residual - (e.total - fit.fitted), e.sigma2, e.leaf_sd, e.priors, rng);
}
BENCHMARK(BM_TreeUpdate)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_BartSweep(benchmark::State& state) {
  RngStream rng(5);
  const auto d = star::simulate_negbin_friedman(100, 1.0, rng);
  std::vector<double> z(d.y.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::log1p(d.y[i]);
  star::BartPriors p;
  p.trees = static_cast<int>(state.range(0));
  auto e = star::initial_ensemble(d.X, z, p, 0.5);
  for (auto _ : state) star::bart_sweep(e, d.X, z, rng);
}
BENCHMARK(BM_BartSweep)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
