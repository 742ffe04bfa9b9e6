#include <benchmark/benchmark.h>

#include <cmath>

#include "ght/causal.hpp"
#include "ght/hypertransformer.hpp"
#include "ght/network.hpp"
#include "ght/qas.hpp"
#include "ght/rng.hpp"
#include "ght/transport.hpp"

using namespace ght;

namespace {

DiscreteMeasure random_measure(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Vec> atoms(n, Vec(d));
  Vec w(n);
  double s = 0;
  for (auto& a : atoms)
    for (double& x : a) x = rng.uniform(-2, 2);
  for (double& x : w) s += (x = rng.uniform(0.05, 1.0));
  for (double& x : w) x /= s;
  return DiscreteMeasure(d, atoms, w);
}

PathMeasure random_tree(Rng& rng, std::size_t T, std::size_t n) {
  std::vector<Vec> atoms(n, Vec(T));
  for (auto& a : atoms)
    for (double& x : a) x = std::floor(rng.uniform(0, 3));
  return PathMeasure(1, T, DiscreteMeasure(T, atoms, Vec(n, 1.0 / static_cast<double>(n))));
}

FiniteComplexityMap sine_kernel(int k) {
  return sde_kernel_map([](double t, const Vec& x) { return Vec{0.1 * std::sin(t + x[0])}; },
                        [](double, const Vec&) { return Eigen::MatrixXd::Constant(1, 1, 0.2); }, 1.0,
                        DiscreteMeasure::dirac({0.0}), k);
}

std::vector<PathWindow> uniform_paths(int count, int N) {
  Rng rng(7);
  const TimeGrid g = unit_grid(-N, N);
  std::vector<PathWindow> out;
  for (int i = 0; i < count; ++i) {
    std::vector<Vec> v;
    for (std::size_t j = 0; j < g.times.size(); ++j) v.push_back({rng.uniform(-1, 1)});
    out.push_back(make_window(g, v));
  }
  return out;
}

}  // namespace

static void BM_Wasserstein(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto mu = random_measure(rng, n, 2), nu = random_measure(rng, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_p(mu, nu, 2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Wasserstein)->RangeMultiplier(2)->Range(4, 128)->Complexity();

static void BM_AdaptedWasserstein(benchmark::State& state) {
  Rng rng(2);
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto mu = random_tree(rng, T, 12), nu = random_tree(rng, T, 12);
  for (auto _ : state) benchmark::DoNotOptimize(adapted_wasserstein_p(mu, nu, 1));
}
BENCHMARK(BM_AdaptedWasserstein)->DenseRange(1, 4);

static void BM_ProjectSimplex(benchmark::State& state) {
  Rng rng(3);
  Vec u(static_cast<std::size_t>(state.range(0)));
  for (double& x : u) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(u));
}
BENCHMARK(BM_ProjectSimplex)->RangeMultiplier(4)->Range(8, 2048);

static void BM_Forward(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const MultiIndex md({8, w, w, 4});
  Rng rng(4);
  Vec theta(param_count(md)), x(8);
  for (double& t : theta) t = rng.normal();
  for (double& t : x) t = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(forward(md, ActivationSpec::singular(), theta, x));
}
BENCHMARK(BM_Forward)->RangeMultiplier(2)->Range(16, 256);

static void BM_StaticFitAndEval(benchmark::State& state) {
  const auto W = make_wasserstein_convex(1, 1.0, 2.0);
  const auto f = [](const Vec& x) -> QasPoint { return DiscreteMeasure(1, {{-x[0]}, {x[0]}}, {0.5, 0.5}); };
  std::vector<Vec> xs;
  for (int i = 0; i <= 200; ++i) xs.push_back({i / 200.0});
  const int N = static_cast<int>(state.range(0));
  const auto fit = fit_static_constructive(f, xs, W, N, 2);
  for (auto _ : state) benchmark::DoNotOptimize(gt_eval(fit.gt, {0.37}));
}
BENCHMARK(BM_StaticFitAndEval)->RangeMultiplier(2)->Range(4, 64);

static void BM_FitDynamic(benchmark::State& state) {
  const auto map = sine_kernel(8);
  const auto paths = uniform_paths(100, 4);
  DynamicFitConfig cfg;
  cfg.decoder_N = 32;
  cfg.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_dynamic(map, paths, 4, 0.1, cfg));
}
BENCHMARK(BM_FitDynamic)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_GhtEval(benchmark::State& state) {
  const auto map = sine_kernel(8);
  const auto paths = uniform_paths(100, 4);
  DynamicFitConfig cfg;
  cfg.decoder_N = 32;
  cfg.threads = 4;
  const auto res = fit_dynamic(map, paths, 4, 0.1, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ght_eval(res.ght, paths.front(), 2));
}
BENCHMARK(BM_GhtEval);
BENCHMARK_MAIN();
