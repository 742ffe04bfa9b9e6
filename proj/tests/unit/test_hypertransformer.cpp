#include <gtest/gtest.h>

#include <cmath>

#include "ght/causal.hpp"
#include "ght/errors.hpp"
#include "ght/hypertransformer.hpp"
#include "ght/rng.hpp"

using namespace ght;

namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

FiniteComplexityMap sine_kernel(int k) {
  return sde_kernel_map([](double t, const Vec& x) { return Vec{0.1 * std::sin(t + x[0])}; },
                        [](double, const Vec&) { return scalar(0.2); }, 1.0, DiscreteMeasure::dirac({0.0}), k);
}

std::vector<PathWindow> uniform_paths(int count, int a, int b, std::uint64_t seed) {
  Rng rng(seed);
  const TimeGrid g = unit_grid(a, b);
  std::vector<PathWindow> out;
  for (int i = 0; i < count; ++i) {
    std::vector<Vec> v;
    for (std::size_t j = 0; j < g.times.size(); ++j) v.push_back({rng.uniform(-1.0, 1.0)});
    out.push_back(make_window(g, v));
  }
  return out;
}

// h(theta) = relu(theta) + shift, a one-hidden-layer ReLU network.
Network shift_network(int P, double shift) {
  const MultiIndex md({P, P, P});
  DecodedParameters p;
  Vec eye(static_cast<std::size_t>(P * P), 0.0);
  for (int i = 0; i < P; ++i) eye[i * P + i] = 1.0;
  p.A = {eye};
  p.b = {Vec(P, 0.0)};
  Vec alpha;
  for (int i = 0; i < P; ++i) {
    alpha.push_back(1.0);
    alpha.push_back(0.0);
  }
  p.alpha = {alpha};
  p.A_out = eye;
  p.c = Vec(P, shift);
  return {md, ActivationSpec::singular(), encode(md, p)};
}

// Affine encoder R -> R^2, theta = (A_out, c).
struct Hand {
  Ght g;
  FiniteComplexityMap map;
};

Hand hand_built(double shift) {
  auto map = sine_kernel(4);
  std::vector<Vec> latent;
  for (int i = 0; i <= 40; ++i) latent.push_back({-2.0 + 0.25 * i, 0.2});
  auto dec = fit_static_constructive(map.rho, latent, map.space, 12, 4);
  const MultiIndex md({1, 2});
  Ght g = make_ght(std::move(dec.gt), shift_network(4, shift), Vec{1.0, 0.0, 0.5, 0.2}, 3, md,
                   ActivationSpec::singular(), 0, 1);
  return {std::move(g), std::move(map)};
}

}  // namespace

TEST(Schedule, HandUnrolledShift) {
  const auto h = hand_built(0.25);
  const Vec init{1.0, 0.0, 0.5, 0.2};
  for (int n = -6; n <= 6; ++n) {
    const int steps = std::clamp(n, -3, 3) + 3;
    const Vec& th = theta_unroll(h.g, n);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(th[i], init[i] + 0.25 * steps) << n;
  }
}

TEST(Schedule, RecursionInvariants) {
  const auto h = hand_built(0.125);
  const int N = h.g.horizon;
  for (int n = -N - 4; n <= -N; ++n) EXPECT_EQ(theta_unroll(h.g, n), h.g.theta_init);
  for (int n = -N; n < N; ++n) EXPECT_EQ(theta_unroll(h.g, n + 1), forward(h.g.hyper, theta_unroll(h.g, n)));
  for (int n = N; n <= N + 4; ++n) EXPECT_EQ(theta_unroll(h.g, n + 1), theta_unroll(h.g, n));
}

TEST(Schedule, UnbuiltScheduleThrows) {
  auto h = hand_built(0.1);
  h.g.schedule.clear();
  EXPECT_THROW(theta_unroll(h.g, 0), DomainError);
}

TEST(Schedule, ValidateRejectsMismatchedShapes) {
  auto h = hand_built(0.1);
  Ght bad = h.g;
  bad.theta_init.push_back(0.0);
  EXPECT_THROW(validate(bad), DomainError);
  bad = h.g;
  bad.memory = 2;
  EXPECT_THROW(validate(bad), DomainError);
}

TEST(GhtEval, HandUnrolledLatent) {
  const auto h = hand_built(0.25);
  const auto p = uniform_paths(1, -5, 5, 3).front();
  for (int n = -5; n <= 5; ++n) {
    const int steps = std::clamp(n, -3, 3) + 3;
    const double a = 1.0 + 0.25 * steps, c0 = 0.5 + 0.25 * steps, s = 0.2 + 0.25 * steps;
    const Vec z = ght_latent(h.g, p, n);
    EXPECT_NEAR(z[0], a * p.at(n)[0] + c0, 1e-14);
    EXPECT_NEAR(z[1], 0.25 * steps * p.at(n)[0] + s, 1e-14);
    EXPECT_EQ(distance(h.map.space, ght_eval(h.g, p, n), gt_eval(h.g.decoder, z)), 0.0);
  }
}

TEST(GhtEval, IdentityHypernetworkIsStatic) {
  auto h = hand_built(0.0);
  const auto p = uniform_paths(1, -4, 4, 9).front();
  const auto c = make_window(p.grid, std::vector<Vec>(p.values.size(), Vec{0.3}));
  for (int n = -4; n <= 4; ++n) {
    EXPECT_EQ(theta_unroll(h.g, n), h.g.theta_init);
    EXPECT_EQ(distance(h.map.space, ght_eval(h.g, c, n), ght_eval(h.g, c, 0)), 0.0);
  }
}

TEST(GhtEval, CausalUnderFuturePerturbation) {
  const auto h = hand_built(0.25);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = uniform_paths(1, -5, 5, 100 + trial).front();
    const int n = trial % 11 - 5;
    auto q = p;
    for (int k = n + 1; k <= p.last(); ++k) q.values[k - p.offset()][0] += rng.uniform(-3, 3);
    EXPECT_EQ(distance(h.map.space, ght_eval(h.g, p, n), ght_eval(h.g, q, n)), 0.0);
  }
}

TEST(GhtEval, OutOfWindowThrows) {
  const auto h = hand_built(0.25);
  const auto p = uniform_paths(1, -2, 2, 1).front();
  EXPECT_THROW(ght_eval(h.g, p, 3), OutOfWindowError);
}

TEST(HorizonIndex, Examples) {
  EXPECT_EQ(horizon_index(unit_grid(-5, 5), 3.0), 3);
  EXPECT_EQ(horizon_index(unit_grid(-5, 5), 2.5), 3);
  EXPECT_EQ(horizon_index(uniform_grid(-8, 8, 0.5), 1.0), 2);
  EXPECT_EQ(horizon_index(grid_validate({-3, -1, 0, 0.5, 1, 2}), 1.0), 1);
  EXPECT_THROW(horizon_index(unit_grid(0, 5), 1.0), OutOfWindowError);
  EXPECT_THROW(horizon_index(unit_grid(-2, 2), 0.0), DomainError);
}

class SineKernelFit : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    paths_ = new std::vector<PathWindow>(uniform_paths(200, -4, 4, 11));
    map_ = new FiniteComplexityMap(sine_kernel(8));
    DynamicFitConfig cfg;
    cfg.threads = 4;
    result_ = new DynamicFitResult(fit_dynamic(*map_, *paths_, 4, 0.1, cfg));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete map_;
    delete paths_;
  }
  static std::vector<PathWindow>* paths_;
  static FiniteComplexityMap* map_;
  static DynamicFitResult* result_;
};

std::vector<PathWindow>* SineKernelFit::paths_ = nullptr;
FiniteComplexityMap* SineKernelFit::map_ = nullptr;
DynamicFitResult* SineKernelFit::result_ = nullptr;

TEST_F(SineKernelFit, WithinWindowError) {
  const auto& rep = result_->report;
  EXPECT_EQ(rep.N_T, 4);
  ASSERT_EQ(rep.within_errors.size(), 9u);
  EXPECT_LE(rep.within_sup, 0.1);
  const auto held_out = uniform_paths(50, -4, 4, 999);
  for (const auto& p : held_out)
    for (int n = -4; n <= 4; ++n)
      EXPECT_LE(distance(map_->space, eval_finite_complexity(*map_, p, n), ght_eval(result_->ght, p, n)), 0.1);
}

TEST_F(SineKernelFit, HypernetworkReplay) {
  const auto& rep = result_->report;
  EXPECT_LE(rep.hyper_residual, 1e-6);
  EXPECT_LE(rep.replay_deviation, 1e-6);
  EXPECT_EQ(rep.hyper_width_formula, hypernetwork_size(rep.P, 4));
  EXPECT_GE(rep.hyper_width, rep.hyper_width_formula);
}

TEST_F(SineKernelFit, EvaluationMatchesStoredParameters) {
  const auto& g = result_->ght;
  const auto& rep = result_->report;
  for (int n = -4; n <= 4; ++n) {
    const Vec& th = rep.thetas[static_cast<std::size_t>(n + 4)];
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& p = (*paths_)[i];
      const auto direct = gt_eval(g.decoder, forward(g.encoder_md, g.encoder_act, th, history(p, n, g.memory)));
      EXPECT_LE(distance(map_->space, direct, ght_eval(g, p, n)), 1e-6);
    }
  }
}

TEST_F(SineKernelFit, TimeVaryingTargetNeedsNoPerturbation) {
  EXPECT_TRUE(result_->report.distinct_before);
  EXPECT_EQ(result_->report.perturbation, 0.0);
  EXPECT_EQ(result_->report.perturb_attempts, 1);
}

TEST_F(SineKernelFit, NormalizedErrorAgainstItself) {
  const auto self = as_causal(result_->ght);
  const auto ne = normalized_error(self, result_->ght, *paths_, nullptr, nullptr, 4, 0.1, 0);
  EXPECT_EQ(ne.value, 0.0);
  EXPECT_EQ(ne.rows.size(), 9u);
}

TEST_F(SineKernelFit, NormalizedErrorBoundedByRaw) {
  const auto wide = uniform_paths(20, -8, 8, 21);
  const auto ne = normalized_error(as_causal(*map_), result_->ght, wide, [](int) { return 1.0; },
                                   [](int n) { return 1.0 + std::abs(n); }, 4, 0.1, 0, 0.0, 2);
  EXPECT_EQ(ne.rows.size(), 17u);
  for (const auto& r : ne.rows) {
    EXPECT_GE(r.denominator, 1.0);
    EXPECT_GE(r.denominator, 1.0 + std::abs(r.n));
    EXPECT_LE(r.normalized, r.raw);
    if (std::abs(r.n) <= 4) {
      EXPECT_LE(r.raw, 0.1);
    }
  }
  EXPECT_LE(ne.value, ne.raw_sup);
}

TEST_F(SineKernelFit, SelfCompressionInsideAndOutside) {
  const auto wide = uniform_paths(10, -8, 8, 31);
  EXPECT_EQ(self_compression(result_->ght, wide, 4, 80.0, 4), 1.0);
  EXPECT_EQ(self_compression(result_->ght, wide, 4, 80.0, -4), 1.0);
  EXPECT_GE(self_compression(result_->ght, wide, 4, 80.0, 7), 1.0);
  EXPECT_THROW(self_compression(result_->ght, wide, 4, 0.0, 1), DomainError);
}

TEST(FitDynamic, ConstantTargetTriggersPerturbation) {
  FiniteComplexityMap map = sine_kernel(4);
  map.f = [](double, const Vec&) { return Vec{0.0, 0.2}; };
  map.time_homogeneous = true;
  const TimeGrid g = unit_grid(-3, 3);
  std::vector<PathWindow> paths;
  for (double v : {-0.5, 0.0, 0.5}) paths.push_back(make_window(g, std::vector<Vec>(g.times.size(), Vec{v})));
  DynamicFitConfig cfg;
  cfg.encoder_hidden = {4};
  cfg.decoder_N = 4;
  const auto res = fit_dynamic(map, paths, 2, 0.1, cfg);
  const auto& rep = res.report;
  EXPECT_FALSE(rep.distinct_before);
  EXPECT_GT(rep.perturbation, 0.0);
  // Bias step keeps the induced error inside eps / 8.
  EXPECT_LT(rep.perturbation * std::sqrt(2.0), 0.1 / 8.0);
  EXPECT_LE(rep.hyper_residual, 1e-6);
  EXPECT_LE(rep.within_sup, 0.1);
}

TEST(FitDynamic, AcFamilyUsesQuarterEps) {
  double seen = 0.0;
  AcMapSpec ac;
  ac.family = [&](double e) {
    seen = e;
    return sine_kernel(4);
  };
  ac.c_ac = [](int, double) { return 1.0; };
  DynamicFitConfig cfg;
  cfg.encoder_hidden = {8};
  cfg.decoder_N = 8;
  fit_dynamic(ac, uniform_paths(20, -2, 2, 4), 1, 0.2, cfg);
  EXPECT_DOUBLE_EQ(seen, 0.05);
}

TEST(FitDynamic, RejectsShortPaths) {
  EXPECT_THROW(fit_dynamic(sine_kernel(4), uniform_paths(5, -1, 1, 1), 2, 0.1), OutOfWindowError);
  EXPECT_THROW(fit_dynamic(sine_kernel(4), uniform_paths(5, -3, 3, 1), 0, 0.1), DomainError);
}

TEST(FitDynamic, DeterministicAcrossThreads) {
  const auto paths = uniform_paths(30, -3, 3, 8);
  DynamicFitConfig a, b;
  a.encoder_hidden = b.encoder_hidden = {8};
  a.decoder_N = b.decoder_N = 8;
  b.threads = 4;
  const auto ra = fit_dynamic(sine_kernel(4), paths, 2, 0.1, a);
  const auto rb = fit_dynamic(sine_kernel(4), paths, 2, 0.1, b);
  EXPECT_EQ(ra.report.thetas, rb.report.thetas);
  EXPECT_EQ(ra.ght.hyper.theta, rb.ght.hyper.theta);
  EXPECT_EQ(ra.report.within_errors, rb.report.within_errors);
}

TEST(SelfCompression, FrozenScheduleOnConstantPaths) {
  const auto h = hand_built(0.0);
  const TimeGrid g = unit_grid(-6, 6);
  std::vector<PathWindow> paths;
  for (double v : {-0.7, 0.1, 0.9}) paths.push_back(make_window(g, std::vector<Vec>(g.times.size(), Vec{v})));
  for (int n = -6; n <= 6; ++n) EXPECT_EQ(self_compression(h.g, paths, 3, 1e6, n), 1.0);
}

TEST(SelfCompression, MatchesTwoEvaluationOracle) {
  const auto h = hand_built(0.25);
  const auto paths = uniform_paths(8, -6, 6, 77);
  const double lambda = 40.0;
  for (int n = -6; n <= 6; ++n) {
    const int ref = n < 0 ? -3 : 3;
    double expect = 1.0;
    for (const auto& p : paths) {
      const auto a = gt_eval(h.g.decoder, ght_latent(h.g, p, n));
      const auto b = gt_eval(h.g.decoder, ght_latent(h.g, p, ref));
      expect = std::max(expect, lambda * distance(h.map.space, a, b));
    }
    EXPECT_EQ(self_compression(h.g, paths, 3, lambda, n), expect) << n;
  }
}
