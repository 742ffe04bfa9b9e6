#include <gtest/gtest.h>

#include <cmath>

#include "ght/errors.hpp"
#include "ght/network.hpp"
#include "ght/rng.hpp"
#include "oracles.hpp"

using namespace ght;

namespace {

MultiIndex random_md(Rng& rng) {
  std::vector<int> dims(2 + rng.index(4));
  for (int& d : dims) d = 1 + static_cast<int>(rng.index(5));
  return MultiIndex(dims);
}

Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

TEST(ParamCount, Examples) {
  EXPECT_EQ(param_count(MultiIndex({1, 1})), 2u);
  EXPECT_EQ(param_count(MultiIndex({2, 3, 1})), 19u);
  for (int n = 1; n < 6; ++n)
    for (int m = 1; m < 6; ++m) EXPECT_EQ(param_count(MultiIndex({n, m})), static_cast<std::size_t>(m * (n + 1)));
  EXPECT_THROW(MultiIndex({3}), DomainError);
  EXPECT_THROW(MultiIndex({3, 0}), DomainError);
}

TEST(Activation, Examples) {
  auto S = ActivationSpec::singular();
  EXPECT_EQ(activation_eval(S, 1, 0, -2), 0.0);
  EXPECT_EQ(activation_eval(S, 0, 0, 1.7), 1.0);
  EXPECT_EQ(activation_eval(S, 0, 0, 3.0), 3.0);
  for (double x : {-2.5, -1.0, 0.0, 0.3, 4.0}) {
    EXPECT_EQ(activation_eval(S, 1, 1, x), x);
    EXPECT_EQ(activation_eval(ActivationSpec::smooth(), 1, 1, x), x);
  }
  auto C = ActivationSpec::classical("tanh");
  EXPECT_EQ(activation_eval(C, 1, 1, 0.5), std::tanh(0.5));
}

TEST(Forward, Examples) {
  MultiIndex md({2, 3, 1});
  Vec zero(param_count(md), 0.0);
  EXPECT_EQ(forward(md, ActivationSpec::singular(), zero, {1.0, 2.0}), Vec{0.0});
  // 2x + 1 through one identity hidden layer.
  MultiIndex one({1, 1, 1});
  DecodedParameters p;
  p.A = {{2.0}};
  p.b = {{1.0}};
  p.alpha = {{1.0, 1.0}};
  p.A_out = {1.0};
  p.c = {0.0};
  EXPECT_EQ(forward(one, ActivationSpec::singular(), encode(one, p), {3.0}), Vec{7.0});
  EXPECT_THROW(forward(md, ActivationSpec::singular(), zero, {1.0}), DomainError);
}

TEST(Forward, ReluMatchesReference) {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    MultiIndex md = random_md(rng);
    auto p = decode(md, random_vec(rng, param_count(md)));
    for (auto& a : p.alpha)
      for (std::size_t r = 0; r < a.size(); r += 2) {
        a[r] = 1.0;
        a[r + 1] = 0.0;
      }
    const Vec theta = encode(md, p);
    const Vec x = random_vec(rng, md.input_dim());
    const Vec got = forward(md, ActivationSpec::singular(), theta, x);
    const Vec want = oracle::relu_reference(md.dims(), theta, x);
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
  }
}

TEST(Codec, RoundTripIsIdentity) {
  Rng rng(37);
  for (int t = 0; t < 1000; ++t) {
    MultiIndex md = random_md(rng);
    const Vec theta = random_vec(rng, param_count(md), 10.0);
    const auto p = decode(md, theta);
    std::size_t total = p.A_out.size() + p.c.size();
    for (std::size_t j = 0; j < p.A.size(); ++j) total += p.A[j].size() + p.b[j].size() + p.alpha[j].size();
    EXPECT_EQ(total, param_count(md));
    EXPECT_EQ(encode(md, p), theta);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(41);
  for (const auto& spec : {ActivationSpec::smooth("sigmoid"), ActivationSpec::smooth("tanh"),
                           ActivationSpec::classical("tanh"), ActivationSpec::smooth("softplus")}) {
    for (int t = 0; t < 10; ++t) {
      MultiIndex md({2, 3, 2, 2});
      Vec theta = random_vec(rng, param_count(md));
      const Vec x = random_vec(rng, 2), g = random_vec(rng, 2);
      Vec grad;
      forward_backward(md, spec, theta, x, g, grad);
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double h = 1e-6;
        Vec tp = theta, tm = theta;
        tp[k] += h;
        tm[k] -= h;
        const Vec fp = forward(md, spec, tp, x), fm = forward(md, spec, tm, x);
        double fd = 0;
        for (std::size_t r = 0; r < fp.size(); ++r) fd += g[r] * (fp[r] - fm[r]) / (2 * h);
        EXPECT_NEAR(grad[k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Padding, IdentityLayersPreserveFunction) {
  Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    MultiIndex md = random_md(rng);
    const auto spec = t % 2 ? ActivationSpec::singular() : ActivationSpec::smooth();
    Network net{md, spec, random_vec(rng, param_count(md))};
    Network deep = pad_depth(net, 1 + static_cast<int>(rng.index(3)));
    std::vector<int> wide = md.dims();
    for (std::size_t j = 1; j + 1 < wide.size(); ++j) wide[j] += static_cast<int>(rng.index(3));
    Network broad = pad_width(net, MultiIndex(wide));
    for (int k = 0; k < 5; ++k) {
      const Vec x = random_vec(rng, md.input_dim());
      EXPECT_EQ(forward(deep, x), forward(net, x));
      EXPECT_EQ(forward(broad, x), forward(net, x));
    }
  }
}

TEST(Training, SinglePair) {
  MultiIndex md({2, 1, 1});
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 5000;
  cfg.target_loss = 1e-8;
  auto r = train_regression(md, ActivationSpec::smooth(), {{0.3, -0.2}}, {{0.7}}, Loss::Squared, cfg);
  EXPECT_LT(r.loss, 1e-6);
}

TEST(Training, XorWithTanh) {
  MultiIndex md({2, 4, 1});
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.epochs = 20000;
  cfg.target_loss = 1e-4;
  cfg.seed = 3;
  std::vector<Vec> xs{{0, 0}, {0, 1}, {1, 0}, {1, 1}}, ys{{0}, {1}, {1}, {0}};
  auto r = train_regression(md, ActivationSpec::classical("tanh"), xs, ys, Loss::Squared, cfg);
  EXPECT_LT(r.loss, 1e-3);
  auto again = train_regression(md, ActivationSpec::classical("tanh"), xs, ys, Loss::Squared, cfg);
  EXPECT_EQ(again.theta, r.theta);
}

TEST(Training, LinearTarget) {
  MultiIndex md({2, 2});
  Rng rng(47);
  std::vector<Vec> xs, ys;
  for (int i = 0; i < 20; ++i) {
    Vec x = random_vec(rng, 2);
    xs.push_back(x);
    ys.push_back({2 * x[0] - x[1], 0.5 * x[1]});
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 5000;
  auto r = train_regression(md, ActivationSpec::smooth(), xs, ys, Loss::Squared, cfg);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vec f = forward(md, ActivationSpec::smooth(), r.theta, xs[i]);
    EXPECT_NEAR(f[0], ys[i][0], 1e-4);
    EXPECT_NEAR(f[1], ys[i][1], 1e-4);
  }
}

TEST(Training, CrossEntropyAndSingularRejected) {
  MultiIndex md({1, 4, 2});
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 3000;
  std::vector<Vec> xs{{-1}, {-0.5}, {0.5}, {1}}, ys{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  auto r = train_regression(md, ActivationSpec::smooth("tanh"), xs, ys, Loss::CrossEntropy, cfg);
  EXPECT_LT(r.loss, 0.05);
  EXPECT_THROW(train_regression(md, ActivationSpec::singular(), xs, ys, Loss::Squared, cfg), UnsupportedError);
}

TEST(Hypernetwork, SizeMatchesDirectSearch) {
  EXPECT_EQ(hypernetwork_size(10, 5), 40);
  EXPECT_EQ(hypernetwork_size(1, 1), 4);
  EXPECT_THROW(hypernetwork_size(3, 0), DomainError);
  for (int P = 1; P <= 40; P += 3)
    for (int N = 1; N <= 20; ++N) {
      int M = 1;
      while (2 * (M / 2) * (M / (4 * P)) < N) ++M;
      EXPECT_EQ(hypernetwork_size(P, N), M);
    }
}

TEST(Memorize, Examples) {
  auto one = memorize_sequence({{1.0, 2.0}}, {{3.0, -4.0}}, 1);
  EXPECT_EQ(one.net.md.dims(), (std::vector<int>{2, one.width, one.width, 2}));
  EXPECT_LE(one.max_residual, 1e-12);
  EXPECT_THROW(memorize_sequence({{1.0}, {1.0}}, {{1.0}, {1.0}}, 1), DomainError);
  Rng rng(53);
  std::vector<Vec> k, v;
  for (int i = 0; i < 5; ++i) {
    k.push_back(random_vec(rng, 3));
    v.push_back(random_vec(rng, 3));
  }
  auto h = memorize_sequence(k, v, 5);
  for (int i = 0; i < 5; ++i) {
    const Vec out = forward(h.net, k[i]);
    for (int p = 0; p < 3; ++p) EXPECT_NEAR(out[p], v[i][p], 1e-6);
  }
}

TEST(Memorize, SequenceReplayIsStable) {
  Rng rng(59);
  for (int P : {1, 7, 50, 200})
    for (int NT : {1, 4, 8}) {
      std::vector<Vec> seq;
      for (int n = 0; n <= 2 * NT; ++n) seq.push_back(random_vec(rng, P));
      std::vector<Vec> keys(seq.begin(), seq.end() - 1), vals(seq.begin() + 1, seq.end());
      auto h = memorize_sequence(keys, vals, NT);
      EXPECT_LE(h.max_residual, 1e-6);
      EXPECT_GE(h.width, h.width_formula);
      Vec cur = seq[0];
      for (int n = 1; n <= 2 * NT; ++n) {
        cur = forward(h.net, cur);
        for (int p = 0; p < P; ++p) EXPECT_NEAR(cur[p], seq[n][p], 1e-6);
      }
    }
}
