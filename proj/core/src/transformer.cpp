#include "ght/transformer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ght/errors.hpp"
#include "ght/parallel.hpp"
#include "ght/rng.hpp"

namespace ght {

namespace {

double sq_norm_diff(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

void check_inputs(const std::vector<Vec>& xs, int N, int q) {
  if (xs.empty()) throw DomainError("fit: empty training set");
  if (N < 1 || q < 1) throw DomainError("fit: budgets must be positive");
  for (const auto& x : xs) {
    if (x.size() != xs.front().size() || x.empty()) throw DomainError("fit: inputs must share a positive dimension");
    for (double v : x)
      if (!std::isfinite(v)) throw DomainError("fit: non-finite input");
  }
}

std::vector<QuantizationCode> encode_centers(const TargetFn& f, const QasSpace& space, const std::vector<Vec>& pts,
                                             int q, Vec& errors) {
  std::vector<QuantizationCode> codes;
  errors.clear();
  for (const auto& c : pts) {
    const auto r = encode_point(space, f(c), q);
    codes.push_back(r.code);
    errors.push_back(r.error);
  }
  return codes;
}

// Fills the error decomposition of `rep` for a fitted model.
void evaluate_fit(const GeometricTransformer& gt, const TargetFn& f, const std::vector<Vec>& eval_x,
                  const FitConfig& cfg, FitReport& rep) {
  const std::size_t G = eval_x.size();
  std::vector<QasPoint> center_targets;
  for (const auto& c : rep.center_points) center_targets.push_back(f(c));
  std::vector<QasPoint> center_quantized;
  for (const auto& code : gt.codes) center_quantized.push_back(quantize(gt.space, code));

  Vec err(G), defect(G), ratio(G, 0.0), radius(G);
  const double a = cfg.holder_alpha;
  parallel_for(G, cfg.threads, [&](std::size_t g) {
    const Vec& x = eval_x[g];
    const QasPoint fx = f(x);
    const QasPoint out = gt_eval(gt, x);
    const std::size_t i = nearest_center(rep.center_points, x);
    err[g] = distance(gt.space, fx, out);
    defect[g] = distance(gt.space, out, center_quantized[i]);
    const double dx = std::sqrt(sq_norm_diff(x, rep.center_points[i]));
    radius[g] = dx;
    if (dx > 0) ratio[g] = distance(gt.space, fx, center_targets[i]) / std::pow(dx, a);
  });
  rep.sup_error = 0;
  rep.mean_loss = 0;
  rep.classification_defect = 0;
  double lip = 0, r = 0;
  for (std::size_t g = 0; g < G; ++g) {
    rep.sup_error = std::max(rep.sup_error, err[g]);
    rep.mean_loss += std::pow(err[g], cfg.loss_exponent) / G;
    rep.classification_defect = std::max(rep.classification_defect, defect[g]);
    lip = std::max(lip, ratio[g]);
    r = std::max(r, radius[g]);
  }
  rep.covering_radius = r;
  rep.holder_alpha = a;
  rep.lipschitz = cfg.lipschitz ? *cfg.lipschitz : lip;
  rep.center_errors.clear();
  for (std::size_t i = 0; i < rep.center_points.size(); ++i)
    rep.center_errors.push_back(distance(gt.space, center_targets[i], gt_eval(gt, rep.center_points[i])));
  double eq = 0;
  for (double e : rep.quantization_errors) eq = std::max(eq, e);
  rep.bound = rep.lipschitz * std::pow(r, a) + eq + rep.classification_defect;
  rep.bound_holds = rep.sup_error <= rep.bound + 1e-9 * (1.0 + rep.bound);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void validate(const GeometricTransformer& gt) {
  if (gt.codes.empty()) throw DomainError("geometric transformer: no codes");
  if (static_cast<std::size_t>(gt.encoder.md.output_dim()) != gt.codes.size())
    throw DomainError("geometric transformer: encoder output width differs from the number of codes");
  if (gt.encoder.theta.size() != param_count(gt.encoder.md))
    throw DomainError("geometric transformer: encoder parameter vector has the wrong length");
  for (const auto& c : gt.codes) {
    if (c.q != gt.q) throw DomainError("geometric transformer: codes use different levels");
    if (c.z.size() != code_length(gt.space, gt.q)) throw DomainError("geometric transformer: invalid code length");
  }
}

QasPoint gt_eval(const GeometricTransformer& gt, const Vec& x) {
  if (static_cast<int>(x.size()) != gt.encoder.md.input_dim())
    throw DomainError("gt_eval: input dimension mismatch");
  return attention(gt.space, forward(gt.encoder, x), gt.codes);
}

double sup_error(const GeometricTransformer& gt, const TargetFn& f, const std::vector<Vec>& xs, int threads) {
  Vec err(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t g) { err[g] = distance(gt.space, f(xs[g]), gt_eval(gt, xs[g])); });
  double s = 0;
  for (double e : err) s = std::max(s, e);
  return s;
}

std::vector<std::size_t> farthest_point_net(const std::vector<Vec>& xs, int N, double* radius) {
  if (xs.empty()) throw DomainError("farthest_point_net: empty point set");
  if (N < 1) throw DomainError("farthest_point_net: N must be positive");
  std::size_t first = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] < xs[first]) first = i;
  std::vector<std::size_t> centers{first};
  Vec dmin(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dmin[i] = sq_norm_diff(xs[i], xs[first]);
  while (static_cast<int>(centers.size()) < N) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (dmin[i] > dmin[far]) far = i;
    if (dmin[far] == 0.0) break;
    centers.push_back(far);
    for (std::size_t i = 0; i < xs.size(); ++i) dmin[i] = std::min(dmin[i], sq_norm_diff(xs[i], xs[far]));
  }
  if (radius) *radius = std::sqrt(*std::max_element(dmin.begin(), dmin.end()));
  return centers;
}

std::size_t nearest_center(const std::vector<Vec>& centers, const Vec& x) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = sq_norm_diff(centers[i], x);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

Network nearest_center_encoder(const std::vector<Vec>& centers, double beta, const ActivationSpec& act) {
  if (centers.empty()) throw DomainError("nearest_center_encoder: no centres");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("nearest_center_encoder: beta must be positive");
  const int n = static_cast<int>(centers.front().size());
  const int N = static_cast<int>(centers.size());
  const MultiIndex md({n, N});
  DecodedParameters p;
  p.A_out.assign(static_cast<std::size_t>(n) * N, 0.0);
  p.c.assign(N, 0.0);
  for (int j = 0; j < N; ++j) {
    double sq = 0;
    for (int k = 0; k < n; ++k) {
      p.A_out[j * n + k] = 2.0 * beta * centers[j][k];
      sq += centers[j][k] * centers[j][k];
    }
    p.c[j] = -beta * sq;
  }
  return Network{md, act, encode(md, p)};
}

FitResult fit_static_constructive(const TargetFn& f, const std::vector<Vec>& train_x, const QasSpace& space, int N,
                                  int q, const FitConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  check_inputs(train_x, N, q);
  const std::vector<Vec>& eval_x = cfg.test_x.empty() ? train_x : cfg.test_x;

  FitReport rep;
  rep.centers = farthest_point_net(train_x, N);
  for (auto i : rep.centers) rep.center_points.push_back(train_x[i]);
  rep.N = static_cast<int>(rep.centers.size());

  std::vector<QuantizationCode> codes = encode_centers(f, space, rep.center_points, q, rep.quantization_errors);
  rep.q = codes.front().q;

  double beta = cfg.beta;
  if (!(beta > 0.0)) {
    // Smallest positive squared-distance margin between nearest and runner-up centre.
    double margin = std::numeric_limits<double>::infinity(), scale = 1.0;
    for (const auto& x : eval_x) {
      double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
      for (const auto& c : rep.center_points) {
        const double d = sq_norm_diff(c, x);
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      if (d2 - d1 > 0 && std::isfinite(d2)) margin = std::min(margin, d2 - d1);
      for (double v : x) scale = std::max(scale, v * v);
    }
    beta = std::isfinite(margin) ? std::min(1.0 / margin, 1e10 / scale) : 1.0;
  }
  rep.beta = beta;

  GeometricTransformer gt{space, nearest_center_encoder(rep.center_points, beta, cfg.activation), codes, rep.q};
  validate(gt);
  evaluate_fit(gt, f, eval_x, cfg, rep);
  rep.wall_seconds = seconds_since(t0);
  return {std::move(gt), std::move(rep)};
}

FitResult fit_static_end2end(const TargetFn& f, const std::vector<Vec>& train_x, const QasSpace& space, int N, int q,
                             const FitConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.activation.kind == ActivationKind::Singular)
    throw UnsupportedError("fit_static_end2end: singular activations cannot be trained by gradients");
  check_inputs(train_x, N, q);
  if (!(cfg.loss_exponent >= 1.0)) throw DomainError("fit_static_end2end: loss exponent must be >= 1");
  const std::vector<Vec>& eval_x = cfg.test_x.empty() ? train_x : cfg.test_x;

  FitReport rep;
  rep.centers = farthest_point_net(train_x, N);
  for (auto i : rep.centers) rep.center_points.push_back(train_x[i]);
  rep.N = static_cast<int>(rep.centers.size());

  std::vector<QuantizationCode> codes;
  if (!cfg.fixed_codes.empty()) {
    codes = cfg.fixed_codes;
    rep.N = static_cast<int>(codes.size());
    for (std::size_t i = 0; i < codes.size() && i < rep.center_points.size(); ++i)
      rep.quantization_errors.push_back(
          distance(space, f(rep.center_points[i]), quantize(space, codes[i])));
    rep.center_points.resize(std::min(rep.center_points.size(), codes.size()));
    rep.centers.resize(rep.center_points.size());
  } else {
    codes = encode_centers(f, space, rep.center_points, q, rep.quantization_errors);
  }
  rep.q = codes.front().q;
  const std::size_t Nc = codes.size();

  std::vector<int> dims{static_cast<int>(train_x.front().size())};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(static_cast<int>(Nc));
  const MultiIndex md(dims);

  // Stage 1: regress logits onto scaled one-hot labels of the nearest centre.
  std::vector<Vec> labels;
  for (const auto& x : train_x) {
    Vec y(Nc, 0.0);
    y[nearest_center(rep.center_points, x)] = cfg.label_scale;
    labels.push_back(std::move(y));
  }
  const double gain = cfg.feature_gain > 0 ? cfg.feature_gain
                                           : 2.0 * std::pow(static_cast<double>(Nc), 1.0 / train_x.front().size());
  Vec theta = ramp_least_squares(md, cfg.activation, train_x, labels, gain, cfg.pretrain);
  if (cfg.pretrain.epochs > 0)
    theta = train_regression(md, cfg.activation, train_x, labels, Loss::Squared, cfg.pretrain, theta).theta;

  // Stage 2: descend the metric loss; gradients in logit space by central differences.
  std::vector<bool> trainable(theta.size(), true);
  if (cfg.activation.kind == ActivationKind::Classical || !cfg.pretrain.train_alpha) {
    const auto lay = layout(md);
    for (std::size_t j = 0; j < lay.hidden.size(); ++j)
      for (int k = 0; k < 2 * md[j + 1]; ++k) trainable[lay.hidden[j].alpha + k] = false;
  }
  std::vector<QasPoint> targets(train_x.size());
  parallel_for(train_x.size(), cfg.threads, [&](std::size_t i) { targets[i] = f(train_x[i]); });
  std::vector<QasPoint> qpts;
  for (const auto& c : codes) qpts.push_back(quantize(space, c));
  const double pe = cfg.loss_exponent;
  auto sample_loss = [&](std::size_t i, const Vec& u) {
    return std::pow(distance(space, targets[i], attention_points(space, u, qpts)), pe);
  };
  auto total_loss = [&](const Vec& th) {
    Vec l(train_x.size());
    parallel_for(train_x.size(), cfg.threads,
                 [&](std::size_t i) { l[i] = sample_loss(i, forward(md, cfg.activation, th, train_x[i])); });
    double s = 0;
    for (double v : l) s += v;
    return s / train_x.size();
  };

  Vec best = theta;
  double best_loss = total_loss(theta);
  std::vector<Vec> grads(train_x.size());
  for (int epoch = 0; epoch < cfg.fd_epochs; ++epoch) {
    parallel_for(train_x.size(), cfg.threads, [&](std::size_t i) {
      Vec u = forward(md, cfg.activation, theta, train_x[i]);
      Vec gu(Nc);
      for (std::size_t k = 0; k < Nc; ++k) {
        const double keep = u[k];
        u[k] = keep + cfg.fd_step;
        const double lp = sample_loss(i, u);
        u[k] = keep - cfg.fd_step;
        const double lm = sample_loss(i, u);
        u[k] = keep;
        gu[k] = (lp - lm) / (2 * cfg.fd_step);
      }
      grads[i].assign(theta.size(), 0.0);
      forward_backward(md, cfg.activation, theta, train_x[i], gu, grads[i]);
    });
    const double scale = cfg.fd_learning_rate / train_x.size();
    for (std::size_t i = 0; i < train_x.size(); ++i)
      for (std::size_t k = 0; k < theta.size(); ++k)
        if (trainable[k]) theta[k] -= scale * grads[i][k];
    const double l = total_loss(theta);
    if (l < best_loss) {
      best_loss = l;
      best = theta;
    }
  }

  GeometricTransformer gt{space, Network{md, cfg.activation, best}, codes, rep.q};
  validate(gt);
  evaluate_fit(gt, f, eval_x, cfg, rep);
  rep.wall_seconds = seconds_since(t0);
  return {std::move(gt), std::move(rep)};
}

}  // namespace ght
