#include <gtest/gtest.h>

#include <cmath>

#include "ght/causal.hpp"
#include "ght/errors.hpp"
#include "ght/rng.hpp"
#include "ght/special.hpp"
#include "ght/transport.hpp"
#include "oracles.hpp"
#include "qas_fixtures.hpp"

using namespace ght;

namespace {

PathWindow constant_path(int a, int b, const Vec& x) {
  const TimeGrid g = unit_grid(a, b);
  return make_window(g, std::vector<Vec>(g.times.size(), x));
}

PathWindow random_path(Rng& rng, int a, int b, std::size_t d, double scale = 1.0) {
  const TimeGrid g = unit_grid(a, b);
  std::vector<Vec> v;
  for (std::size_t i = 0; i < g.times.size(); ++i) {
    Vec x(d);
    for (auto& c : x) c = rng.uniform(-scale, scale);
    v.push_back(x);
  }
  return make_window(g, v);
}

// Same window with every value after index n redrawn.
PathWindow perturb_future(const PathWindow& p, int n, Rng& rng) {
  PathWindow q = p;
  for (int k = n + 1; k <= p.last(); ++k)
    for (auto& c : q.values[k - p.offset()]) c += rng.uniform(-3, 3);
  return q;
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

FiniteComplexityMap sine_kernel(int k) {
  return sde_kernel_map([](double t, const Vec& x) { return Vec{0.1 * std::sin(t + x[0])}; },
                        [](double, const Vec&) { return scalar(0.2); }, 1.0, DiscreteMeasure::dirac({0.0}), k);
}

}  // namespace

TEST(TimeGrid, Examples) {
  const auto g = unit_grid(-5, 5);
  EXPECT_EQ(g.delta_minus, 1.0);
  EXPECT_EQ(g.delta_plus, 1.0);
  EXPECT_EQ(g.first, -5);
  EXPECT_EQ(g.t(3), 3.0);

  const auto h = grid_validate({-1, 0, 0.5, 2});
  EXPECT_EQ(h.delta_minus, 0.5);
  EXPECT_EQ(h.delta_plus, 1.5);
  EXPECT_EQ(h.first, -1);
  EXPECT_EQ(h.t(2), 2.0);

  EXPECT_THROW(grid_validate({0, 0}), DomainError);
  EXPECT_THROW(grid_validate({1, 2}), DomainError);
  EXPECT_THROW(grid_validate({0, 2, 1}), DomainError);
  EXPECT_THROW(h.t(3), OutOfWindowError);
}

TEST(PathWindow, EvaluationOutsideWindowThrows) {
  const auto p = constant_path(-2, 3, {1.0});
  EXPECT_EQ(p.at(-2)[0], 1.0);
  EXPECT_THROW(p.at(-3), OutOfWindowError);
  EXPECT_THROW(p.at(4), OutOfWindowError);
  EXPECT_THROW(history(p, -1, 2), OutOfWindowError);
  EXPECT_EQ(history(p, 1, 3).size(), 4u);
  EXPECT_THROW(make_window(unit_grid(0, 2), {{1.0}, {2.0}}), DomainError);
  EXPECT_THROW(make_window(unit_grid(0, 1), {{1.0}, {2.0, 3.0}}), DomainError);
}

TEST(Membership, ConstantPathIsInKInf) {
  const auto p = constant_path(-4, 4, {0.3, -0.2});
  const Region K = Region::box({-1, -1}, {1, 1});
  for (double C : {0.01, 1.0, 50.0})
    for (double pp : {0.5, 1.0, 3.0}) {
      const auto r = path_membership(KInf{K, C, pp}, p);
      EXPECT_TRUE(r.member);
      EXPECT_FALSE(r.violating_index.has_value());
    }
}

TEST(Membership, SingleLargeStepViolatesKInf) {
  const double C = 2.0, p = 2.0, margin = 1e-3;
  const auto g = grid_validate({-1, 0, 0.5, 2});
  const double step = std::pow(C * g.delta_minus, 1.0 / p) + margin;
  // The jump sits on the shortest interval, between indices 0 and 1.
  const auto path = make_window(g, {{0.0}, {0.0}, {step}, {step}});
  const auto r = path_membership(KInf{Region::ball({0.0}, 1.0), C, p}, path);
  EXPECT_FALSE(r.member);
  ASSERT_TRUE(r.violating_index.has_value());
  EXPECT_EQ(*r.violating_index, 1);
  EXPECT_EQ(r.worst_index, 1);
  EXPECT_NEAR(r.worst_slack, C * 0.5 - step * step, 1e-15);

  const auto ok = make_window(g, {{0.0}, {0.0}, {step - 2 * margin}, {step - 2 * margin}});
  EXPECT_TRUE(path_membership(KInf{Region::ball({0.0}, 1.0), C, p}, ok).member);
}

TEST(Membership, ZeroPathInEveryClass) {
  const auto p = constant_path(-3, 6, {0.0, 0.0});
  const Region K = Region::ball({0.0, 0.0}, 0.5);
  KExp e;
  e.C0 = 1.0;
  e.C_star = 1.0;
  e.C = Vec(7, 0.5);
  e.eps = 0.1;
  e.delta_minus = 1.0;
  const std::vector<PathClassSpec> specs{KZ{K}, KInf{K, 1.0, 2.0}, KAlpha{K, 1.0, 2.0, -1.5},
                                         KW{K, [](int) { return 0.0; }}, e};
  for (const auto& s : specs) EXPECT_TRUE(path_membership(s, p).member) << class_name(s);
}

TEST(Membership, KAlphaWeightedSum) {
  // Increments 1, 2, 1 at n = -1, 0, 1 on the unit grid; weights |n|_{++}^alpha.
  const auto path = make_window(unit_grid(-2, 1), {{0.0}, {1.0}, {3.0}, {4.0}});
  const Region K = Region::box({-5}, {5});
  const double alpha = -1.5, p = 2.0;
  const double sum = 1.0 / std::pow(1.0, alpha) + 4.0 / std::pow(1.0, alpha) + 1.0 / std::pow(1.0, alpha);
  EXPECT_TRUE(path_membership(KAlpha{K, sum + 1e-9, p, alpha}, path).member);
  const auto r = path_membership(KAlpha{K, sum - 1e-9, p, alpha}, path);
  EXPECT_FALSE(r.member);
  EXPECT_EQ(*r.violating_index, 1);

  const auto longer = make_window(unit_grid(0, 3), {{0.0}, {0.0}, {0.0}, {1.0}});
  const auto rl = path_membership(KAlpha{K, 10.0, p, alpha}, longer);
  EXPECT_NEAR(rl.worst_slack, 10.0 - 1.0 / std::pow(3.0, alpha), 1e-12);
  EXPECT_THROW(path_membership(KAlpha{K, 1.0, 2.0, -0.5}, longer), DomainError);
}

TEST(Membership, KWAndKExp) {
  const Region K = Region::box({0.0}, {1.0});
  const auto path = make_window(unit_grid(-2, 2), {{3.5}, {1.5}, {0.5}, {1.2}, {-1.0}});
  const auto r = path_membership(KW{K, [](int n) { return 0.2 * n; }}, path);
  EXPECT_FALSE(r.member);
  EXPECT_EQ(*r.violating_index, -2);
  EXPECT_EQ(r.worst_index, -2);
  EXPECT_DOUBLE_EQ(r.worst_slack, 0.4 - 2.5);
  EXPECT_TRUE(path_membership(KW{K, [](int n) { return 1.5 * n; }}, path).member);

  KExp e;
  e.C0 = 0.6;
  e.C_star = 1.0;
  e.eps = 1.0;
  e.delta_minus = 1.0;
  e.C = {1.0, 2.0, 0.1};
  const double env1 = std::sqrt(2.0) * std::exp(-1.0 * 2.0 / 2.0);
  const double env2 = std::sqrt(0.1) * std::exp(-2.0 * 0.1 / 2.0);
  const auto re = path_membership(e, path);
  ASSERT_EQ(re.slacks.size(), 3u);
  EXPECT_EQ(re.slacks[0].first, 0);
  EXPECT_DOUBLE_EQ(re.slacks[0].second, 0.1);
  EXPECT_DOUBLE_EQ(re.slacks[1].second, env1 - 1.2);
  EXPECT_DOUBLE_EQ(re.slacks[2].second, env2 - 1.0);
  EXPECT_FALSE(re.member);
}

TEST(FiniteComplexity, IdentityDiracMap) {
  FiniteComplexityMap map;
  map.space = make_wasserstein_convex(2, 1.0, 2.0);
  map.input_dim = 2;
  map.latent_dim = 2;
  map.f = [](double, const Vec& x) { return x; };
  map.rho = [](const Vec& z) -> QasPoint { return DiscreteMeasure::dirac(z); };
  Rng rng(3);
  const auto p = random_path(rng, -3, 3, 2);
  for (int n = -3; n <= 3; ++n) {
    const auto y = std::get<DiscreteMeasure>(eval_finite_complexity(map, p, n));
    EXPECT_EQ(y.atoms(), std::vector<Vec>{p.at(n)});
  }
  map.memory = 2;
  map.latent_dim = 6;
  EXPECT_THROW(eval_finite_complexity(map, p, -2), OutOfWindowError);
}

TEST(FiniteComplexity, CausalityUnderFuturePerturbation) {
  Rng rng(11);
  FiniteComplexityMap memory2;
  memory2.space = make_wasserstein_convex(1, 1.0, 2.0);
  memory2.memory = 2;
  memory2.latent_dim = 2;
  memory2.f = [](double t, const Vec& w) { return Vec{w[0] - 2 * w[1] + w[2] * t, std::abs(w[2])}; };
  memory2.rho = [](const Vec& z) -> QasPoint { return gaussian_discretization({z[0]}, scalar(z[1]), 5); };

  const auto trunc = infinite_memory_truncation(
      [](double, const Vec& x) { return Vec{1.0 / (1.0 + std::exp(-x[0]))}; },
      [](double, const Vec& x) { return scalar(0.5 + 0.25 * std::tanh(x[0])); },
      [](int n) { return std::pow(2.0, n); }, [](int m) { return std::pow(2.0, -m); }, 3, 6);
  const auto two = sde_two_step_adapted([](double t, double x) { return 0.1 * std::sin(t + x); },
                                        [](double, double x) { return 0.2 + 0.1 * std::cos(x); }, 4);
  const std::vector<FiniteComplexityMap> maps{memory2, sine_kernel(7), trunc.map, two};
  for (const auto& map : maps)
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_path(rng, -5, 5, 1);
      const int n = static_cast<int>(rng.index(6));
      const auto q = perturb_future(p, n, rng);
      EXPECT_EQ(distance(map.space, eval_finite_complexity(map, p, n), eval_finite_complexity(map, q, n)), 0.0);
    }
}

TEST(FiniteComplexity, KernelMapUsesOnlyPresentValue) {
  Rng rng(5);
  const auto map = sine_kernel(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_path(rng, -5, 5, 1);
    const int n = static_cast<int>(rng.index(6)) - 2;
    PathWindow q = p;
    for (int k = p.offset(); k < n; ++k) q.values[k - p.offset()][0] += rng.uniform(-2, 2);
    EXPECT_EQ(distance(map.space, eval_finite_complexity(map, p, n), eval_finite_complexity(map, q, n)), 0.0);
  }
}

TEST(FiniteComplexity, TimeHomogeneousCommutesWithShift) {
  const auto map = sde_kernel_map([](double, const Vec& x) { return Vec{-0.5 * x[0]}; },
                                  [](double, const Vec& x) { return scalar(0.3 + 0.1 * x[0] * x[0]); }, 0.5,
                                  DiscreteMeasure::dirac({0.0}), 5, true);
  Rng rng(9);
  // Periodic values with period 2 so shifting by 2 leaves the window invariant.
  const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
  std::vector<Vec> v;
  for (int n = -4; n <= 4; ++n) v.push_back({(n % 2 == 0) ? a : b});
  const auto p = make_window(unit_grid(-4, 4), v);
  for (int n = -4; n <= 2; ++n)
    EXPECT_EQ(distance(map.space, eval_finite_complexity(map, p, n), eval_finite_complexity(map, p, n + 2)), 0.0);
}

TEST(SdeKernel, StandardNormalQuantiles) {
  const int k = 8;
  const auto map = sde_kernel_map([](double, const Vec&) { return Vec{0.0}; },
                                  [](double, const Vec&) { return scalar(1.0); }, 1.0, DiscreteMeasure::dirac({0.0}), k);
  const auto p = constant_path(0, 0, {0.7});
  const auto y = std::get<DiscreteMeasure>(eval_finite_complexity(map, p, 0));
  ASSERT_EQ(y.size(), static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double u = (2.0 * i + 1.0) / (2.0 * k);
    EXPECT_NEAR(y.atom(i)[0], 0.7 + normal_quantile(u), 1e-14);
    EXPECT_DOUBLE_EQ(y.weight(i), 1.0 / k);
  }
}

TEST(SdeKernel, DiracNoiseShiftsAtoms) {
  auto mu = [](double t, const Vec& x) { return Vec{0.1 * std::sin(t + x[0]), -x[1]}; };
  auto sigma = [](double, const Vec& x) {
    Eigen::MatrixXd s(2, 2);
    s << 0.3, 0.1 * x[0], 0.0, 0.2;
    return s;
  };
  const Vec c{0.25, -1.5};
  const auto plain = sde_kernel_map(mu, sigma, 0.5, DiscreteMeasure::dirac({0.0, 0.0}), 4);
  const auto shifted = sde_kernel_map(mu, sigma, 0.5, DiscreteMeasure::dirac(c), 4);
  const auto p = constant_path(-1, 1, {0.4, 0.9});
  const auto a = std::get<DiscreteMeasure>(eval_finite_complexity(plain, p, 1));
  const auto b = std::get<DiscreteMeasure>(eval_finite_complexity(shifted, p, 1));
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b.atom(i)[0], a.atom(i)[0] + c[0], 1e-14);
    EXPECT_NEAR(b.atom(i)[1], a.atom(i)[1] + c[1], 1e-14);
    EXPECT_EQ(a.weight(i), b.weight(i));
  }
}

TEST(SdeKernel, RefinementConvergesToNormal) {
  const auto p = constant_path(-1, 1, {0.3});
  const double m = 0.3 + 0.1 * std::sin(1.0 + 0.3), s = 0.2;
  double prev = 1e9;
  for (int k : {2, 4, 8, 16, 32, 64}) {
    const auto y = std::get<DiscreteMeasure>(eval_finite_complexity(sine_kernel(k), p, 1));
    const double w = oracle::w1_to_normal(y, m, s);
    EXPECT_LT(w, prev) << k;
    prev = w;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(SdeKernel, SingularSigmaCollapses) {
  auto sigma = [](double, const Vec&) {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.0, 1.0, 0.0;
    return s;
  };
  const auto map = sde_kernel_map([](double, const Vec&) { return Vec{0.0, 0.0}; }, sigma, 1.0,
                                  DiscreteMeasure::dirac({0.0, 0.0}), 3);
  const auto y = std::get<DiscreteMeasure>(eval_finite_complexity(map, constant_path(0, 0, {0.0, 0.0}), 0));
  EXPECT_EQ(y.size(), 3u);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y.atom(i)[0], y.atom(i)[1]);
}

TEST(TwoStep, ZeroDiffusionIsDeterministic) {
  const auto map = sde_two_step_adapted([](double t, double x) { return 0.5 * std::cos(t) - 0.2 * x; },
                                        [](double, double) { return 0.0; }, 5);
  const auto p = constant_path(-1, 2, {0.8});
  const auto y = std::get<PathMeasure>(eval_finite_complexity(map, p, 1));
  ASSERT_EQ(y.base().size(), 1u);
  const double x1 = 0.8 + 0.5 * std::cos(1.0) - 0.16;
  const double x2 = x1 + 0.5 * std::cos(2.0) - 0.2 * x1;
  EXPECT_NEAR(y.base().atom(0)[0], x1, 1e-15);
  EXPECT_NEAR(y.base().atom(0)[1], x2, 1e-15);
  EXPECT_THROW(sde_two_step_adapted([](double, double) { return 0.0; }, [](double, double) { return 0.0; }, 0),
               DomainError);
}

TEST(TwoStep, SingleCellHasConstantConditional) {
  auto mu = [](double, double x) { return 0.3 * x; };
  auto sigma = [](double, double x) { return 0.5 + 0.2 * x * x; };
  const auto map = sde_two_step_adapted(mu, sigma, 1, 1.0, 6);
  const auto y = std::get<PathMeasure>(eval_finite_complexity(map, constant_path(0, 0, {0.4}), 0));
  const auto tree = build_tree(y);
  ASSERT_EQ(tree.levels[1].size(), 2u);  // cells I_0 and I_1
  // Every first-step node carries the same conditional law N(mu_1, sigma_1^2).
  const double q1 = 0.0;  // the single mid-quantile
  const double y1 = 0.4 + 0.12 + (0.5 + 0.032) * q1;
  const double m1 = y1 + 0.3 * y1, s1 = 0.5 + 0.2 * y1 * y1;
  for (const auto& node : tree.levels[1]) {
    EXPECT_DOUBLE_EQ(node.mass, 0.5);
    ASSERT_EQ(node.children.size(), 6u);
    for (std::size_t c = 0; c < 6; ++c) {
      const double z = normal_quantile((2.0 * c + 1.0) / 12.0);
      EXPECT_NEAR(tree.levels[2][node.children[c]].value[0], m1 + s1 * z, 1e-14);
      EXPECT_NEAR(node.cond[c], 1.0 / 6.0, 1e-15);
    }
  }
}

TEST(TwoStep, OutputTreeIsAdapted) {
  const auto map = sde_two_step_adapted([](double t, double x) { return 0.1 * std::sin(t + x); },
                                        [](double, double x) { return 0.2 + 0.1 * std::cos(x); }, 6, 1.0, 4);
  const auto y = std::get<PathMeasure>(eval_finite_complexity(map, constant_path(0, 0, {0.1}), 0));
  const auto tree = build_tree(y);
  ASSERT_EQ(tree.levels.size(), 3u);
  EXPECT_EQ(tree.levels[1].size(), 7u);
  double total = 0;
  for (const auto& node : tree.levels[1]) {
    total += node.mass;
    double s = 0;
    for (double c : node.cond) s += c;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  const Vec q = two_step_quantiles(6);
  for (std::size_t k = 1; k < q.size(); ++k) EXPECT_LT(q[k - 1], q[k]);
}

TEST(Truncation, MissingTailRejected) {
  auto M = [](double, const Vec& x) { return Vec{0.5 + 0.5 * std::tanh(x[0])}; };
  auto S = [](double, const Vec&) { return scalar(0.3); };
  EXPECT_THROW(infinite_memory_truncation(M, S, [](int) { return 1.0; }, {}, 2, 4), DomainError);
}

TEST(Truncation, ZeroPastKernelIsExact) {
  auto M = [](double t, const Vec& x) { return Vec{0.5 + 0.5 * std::tanh(x[0] + t)}; };
  auto S = [](double, const Vec& x) { return scalar(0.2 + 0.1 * std::abs(std::sin(x[0]))); };
  auto k = [](int n) { return n == 0 ? 0.7 : 0.0; };
  const auto short_map = infinite_memory_truncation(M, S, k, [](int) { return 0.0; }, 0, 5);
  const auto long_map = infinite_memory_truncation(M, S, k, [](int) { return 0.0; }, 4, 5);
  EXPECT_EQ(short_map.tail, 0.0);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_path(rng, -6, 2, 1);
    const int n = static_cast<int>(rng.index(3));
    EXPECT_EQ(encode_window(short_map.map, p, n), encode_window(long_map.map, p, n));
  }
}

TEST(Truncation, GeometricKernelTail) {
  auto M = [](double, const Vec& x) { return Vec{0.5 + 0.5 * std::tanh(x[0])}; };
  auto S = [](double, const Vec&) { return scalar(0.3); };
  auto k = [](int n) { return std::pow(2.0, n); };
  auto tail = [](int m) { return std::pow(2.0, -m); };
  Rng rng(4);
  for (double eps : {0.5, 0.1, 0.01, 1e-3}) {
    const int m = static_cast<int>(std::ceil(std::log2(1.0 / eps)));
    const auto trunc = infinite_memory_truncation(M, S, k, tail, m, 5);
    EXPECT_LE(trunc.tail, eps);
    // Direct sum of the dropped terms, with |M| <= 1.
    double dropped = 0;
    for (int j = m + 1; j < 200; ++j) dropped += std::pow(2.0, -j);
    EXPECT_LE(dropped, trunc.tail);

    const auto longer = infinite_memory_truncation(M, S, k, tail, m + 12, 5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_path(rng, -m - 14, 0, 1, 3.0);
      const double gap = std::abs(encode_window(trunc.map, p, 0)[0] - encode_window(longer.map, p, 0)[0]);
      EXPECT_LE(gap, trunc.tail - longer.tail + 1e-12);
    }
  }
}

namespace {

Table3Params base_params() {
  Table3Params P;
  P.eps = 0.5;
  P.L_rho = 1.5;
  P.L_f = 2.0;
  P.holder_alpha = 0.7;
  P.m = 2;
  P.d = 1;
  P.delta_plus = 1.0;
  P.N_T = 3;
  P.diam_K = 2.0;
  P.w = [](int n) { return 0.1 * n; };
  P.C = 1.5;
  P.p = 2.0;
  P.class_alpha = -2.5;
  KExp e;
  e.C0 = 1.0;
  e.C_star = 1.0;
  e.eps = 0.1;
  e.delta_minus = 1.0;
  for (int n = 0; n <= 40; ++n) e.C.push_back(0.05 + 1.0 / (1.0 + n));
  P.exp = e;
  P.worst_case = [](int n) { return std::sqrt(static_cast<double>(n)); };
  return P;
}

const std::vector<Table3Row> kRows{Table3Row::KW, Table3Row::KExp, Table3Row::KInf, Table3Row::KAlpha,
                                   Table3Row::KZ, Table3Row::Corollary, Table3Row::WorstCase};

}  // namespace

TEST(Table3, OneInsideHorizon) {
  const auto P = base_params();
  for (auto row : kRows)
    for (int n = -P.N_T; n <= P.N_T; ++n) EXPECT_EQ(compression_rate_table3(row, P, n), 1.0) << to_string(row);
}

TEST(Table3, KZRowByHand) {
  Table3Params P;
  P.eps = 4.0;
  P.m = 3;
  P.d = 2;
  P.delta_plus = 0.5;
  P.N_T = 2;
  P.diam_K = 1.25;
  for (int n : {3, -3, 7, -10}) {
    const double expect = (std::abs(n) - 2) * 0.5 + (2 * 3 + 1) * 1.25;
    EXPECT_NEAR(compression_rate_table3(Table3Row::KZ, P, n), expect, 1e-12);
  }
}

TEST(Table3, RowsNondecreasingInAbsN) {
  const auto P = base_params();
  for (auto row : kRows) {
    double prev = 1.0;
    for (int a = 0; a <= 40; ++a) {
      const double v = compression_rate_table3(row, P, a);
      EXPECT_EQ(v, compression_rate_table3(row, P, -a));
      EXPECT_GE(v, prev) << to_string(row) << " at " << a;
      EXPECT_GE(v, 1.0);
      prev = v;
    }
  }
}

TEST(Table3, CorollaryConstantOutsideHorizon) {
  const auto P = base_params();
  const double c = compression_rate_table3(Table3Row::Corollary, P, P.N_T + 1);
  const double expect = 4.0 / P.eps * P.L_rho * std::pow(P.L_f, 0.7) * std::pow((2.0 + 1.0) * 2.0, 0.49);
  EXPECT_NEAR(c, expect, 1e-12);
  for (int n = P.N_T + 1; n < 60; ++n) EXPECT_EQ(compression_rate_table3(Table3Row::Corollary, P, n), c);
}

TEST(Table3, KAlphaUsesPowerSum) {
  auto P = base_params();
  P.holder_alpha = 1.0;
  P.L_rho = P.L_f = 1.0;
  P.eps = 4.0;
  P.p = 3.0;
  P.class_alpha = -4.0;  // s = -2
  const double zeta2 = M_PI * M_PI / 6.0;
  EXPECT_NEAR(convergent_power_sum(-2.0), zeta2, 1e-6);
  EXPECT_NEAR(convergent_power_sum(-4.0), std::pow(M_PI, 4) / 90.0, 1e-6);
  const int n = 6;
  const double expect = (n - P.N_T) * P.delta_plus +
                        (P.d * P.m + 1.0) * std::cbrt(P.C) * std::cbrt(P.delta_plus) * std::pow(1.0 + 2.0 * zeta2, 2.0 / 3.0);
  EXPECT_NEAR(compression_rate_table3(Table3Row::KAlpha, P, n), expect, 1e-6);

  P.class_alpha = -1.0;  // s = -1/2
  EXPECT_THROW(compression_rate_table3(Table3Row::KAlpha, P, n), DomainError);
}

TEST(Table3, KExpUsesEnvelopeWeight) {
  auto P = base_params();
  P.holder_alpha = 1.0;
  P.L_rho = P.L_f = 1.0;
  P.eps = 4.0;
  const auto& e = *P.exp;
  auto w = [&](int n) {
    double r = 0;
    for (int i = 0; i <= n; ++i)
      r = std::max({r, e.C0, e.C_star / std::sqrt(e.eps) * std::sqrt(e.C[i]) * std::exp(-i * e.C[i] / 2.0)});
    return r;
  };
  const int n = 9;
  const double expect = (n - P.N_T) + P.m * (P.diam_K + w(n) + w(P.N_T));
  EXPECT_NEAR(compression_rate_table3(Table3Row::KExp, P, n), expect, 1e-12);
  EXPECT_THROW(compression_rate_table3(Table3Row::KExp, P, 100), DomainError);
}

TEST(Euler, ConstantPath) {
  const auto paths = euler_simulate([](double, const Vec&) { return Vec{0.0, 0.0}; },
                                    [](double, const Vec&) { return Eigen::MatrixXd::Zero(2, 2); },
                                    {{1.5, -0.5}, 0.0}, unit_grid(-2, 10), 10, 5, 42);
  ASSERT_EQ(paths.size(), 5u);
  for (const auto& p : paths) {
    EXPECT_EQ(p.offset(), 0);
    EXPECT_EQ(p.last(), 10);
    for (int n = 0; n <= 10; ++n) EXPECT_EQ(p.at(n), (Vec{1.5, -0.5}));
  }
}

TEST(Euler, IncrementsReplayNormalStream) {
  const auto grid = grid_validate({0, 0.1, 0.3, 0.35, 1.0, 2.0});
  const auto paths = euler_simulate([](double, const Vec&) { return Vec{0.0}; },
                                    [](double, const Vec&) { return scalar(1.0); }, {{0.0}, 0.0}, grid, 5, 4, 77);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Rng rng(77 + i);
    for (int n = 0; n < 5; ++n) {
      const double dt = grid.times[n + 1] - grid.times[n];
      EXPECT_EQ(paths[i].at(n + 1)[0], paths[i].at(n)[0] + std::sqrt(dt) * rng.normal());
    }
  }
}

TEST(Euler, DeterministicAcrossThreads) {
  auto a = [](double, const Vec& x) { return Vec{-x[0]}; };
  auto b = [](double, const Vec&) { return scalar(0.5); };
  const auto one = euler_simulate(a, b, {{1.0}, 0.3}, unit_grid(0, 20), 20, 64, 9, 1);
  const auto many = euler_simulate(a, b, {{1.0}, 0.3}, unit_grid(0, 20), 20, 64, 9, 8);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].values, many[i].values);
}

TEST(ExpEnvelope, ZeroDynamicsFullContainment) {
  const auto paths = euler_simulate([](double, const Vec&) { return Vec{0.0}; },
                                    [](double, const Vec&) { return scalar(0.0); }, {{0.0}, 0.0}, unit_grid(0, 10), 10,
                                    20, 1);
  const auto fit = fit_exp_envelope(paths, 0.1);
  EXPECT_EQ(fit.containment, 1.0);
  validate(PathClassSpec(fit.spec));
}

TEST(ExpEnvelope, OrnsteinUhlenbeckContainment) {
  const auto grid = uniform_grid(0, 50, 0.2);
  const auto paths = euler_simulate([](double, const Vec& x) { return Vec{-x[0]}; },
                                    [](double, const Vec&) { return scalar(0.5); }, {{1.0}, 0.0}, grid, 50, 1000, 2024, 4);
  const auto fit = fit_exp_envelope(paths, 0.1);
  EXPECT_GE(fit.containment, 0.9);
  // The envelope radius at each step equals the Chebyshev radius or exceeds it.
  for (int n = 1; n <= 50; ++n)
    EXPECT_GE(exp_envelope(fit.spec, n) * (1 + 1e-12), std::sqrt(51.0 * fit.second_moments[n] / 0.1)) << n;
}
