#include "ght/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ght/errors.hpp"
#include "ght/rng.hpp"

#include <Eigen/Dense>

namespace ght {

MultiIndex::MultiIndex(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw DomainError("multi-index: needs at least input and output widths");
  for (int d : dims_)
    if (d < 1) throw DomainError("multi-index: widths must be positive");
}

std::size_t param_count(const MultiIndex& md) {
  const auto& d = md.dims();
  long total = 0;
  for (std::size_t j = 0; j + 1 < d.size(); ++j) total += static_cast<long>(d[j + 1]) * (d[j] + 3);
  return static_cast<std::size_t>(total - 2L * d.back());
}

ActivationSpec ActivationSpec::singular() { return {ActivationKind::Singular, "none", 0.01}; }
ActivationSpec ActivationSpec::smooth(std::string sigma) { return {ActivationKind::Smooth, std::move(sigma), 0.01}; }
ActivationSpec ActivationSpec::classical(std::string sigma, double leak) {
  return {ActivationKind::Classical, std::move(sigma), leak};
}

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Singular:
      return "singular";
    case ActivationKind::Smooth:
      return "smooth";
    case ActivationKind::Classical:
      return "classical";
  }
  return "?";
}

ActivationKind activation_kind_from_string(const std::string& s) {
  if (s == "singular") return ActivationKind::Singular;
  if (s == "smooth") return ActivationKind::Smooth;
  if (s == "classical") return ActivationKind::Classical;
  throw DomainError("unknown activation kind '" + s + "'");
}

double sigma_star(const ActivationSpec& spec, double x) {
  if (spec.kind == ActivationKind::Singular) return std::floor(x);
  const std::string& s = spec.sigma;
  if (s == "sigmoid") return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  if (s == "tanh") return std::tanh(x);
  if (s == "softplus") return x > 30 ? x : std::log1p(std::exp(x));
  if (s == "relu") return x > 0 ? x : 0.0;
  if (s == "leaky_relu") return x >= 0 ? x : spec.leak * x;
  if (s == "swish") return x * (x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
  throw DomainError("unknown activation function '" + s + "'");
}

double sigma_star_derivative(const ActivationSpec& spec, double x) {
  if (spec.kind == ActivationKind::Singular) return 0.0;
  const std::string& s = spec.sigma;
  if (s == "sigmoid") {
    const double v = sigma_star(spec, x);
    return v * (1 - v);
  }
  if (s == "tanh") {
    const double t = std::tanh(x);
    return 1 - t * t;
  }
  if (s == "softplus") return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  if (s == "relu") return x > 0 ? 1.0 : 0.0;
  if (s == "leaky_relu") return x >= 0 ? 1.0 : spec.leak;
  if (s == "swish") {
    const double g = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return g + x * g * (1 - g);
  }
  throw DomainError("unknown activation function '" + s + "'");
}

double activation_eval(const ActivationSpec& spec, double a1, double a2, double x) {
  if (spec.kind == ActivationKind::Classical) return sigma_star(spec, x);
  return a1 * std::max(x, a2 * x) + (1 - a1) * sigma_star(spec, x);
}

ParameterLayout layout(const MultiIndex& md) {
  ParameterLayout L;
  const auto& d = md.dims();
  const int J = md.depth();
  std::size_t off = 0;
  for (int j = 0; j < J; ++j) {
    ParameterLayout::Hidden h;
    h.A = off;
    off += static_cast<std::size_t>(d[j + 1]) * d[j];
    h.b = off;
    off += d[j + 1];
    h.alpha = off;
    off += 2 * static_cast<std::size_t>(d[j + 1]);
    L.hidden.push_back(h);
  }
  L.A_out = off;
  off += static_cast<std::size_t>(d[J + 1]) * d[J];
  L.c = off;
  off += d[J + 1];
  L.total = off;
  return L;
}

DecodedParameters decode(const MultiIndex& md, const Vec& theta) {
  const auto L = layout(md);
  if (theta.size() != L.total) throw DomainError("decode: parameter vector has wrong length");
  const auto& d = md.dims();
  DecodedParameters p;
  auto slice = [&](std::size_t off, std::size_t n) { return Vec(theta.begin() + off, theta.begin() + off + n); };
  for (int j = 0; j < md.depth(); ++j) {
    p.A.push_back(slice(L.hidden[j].A, static_cast<std::size_t>(d[j + 1]) * d[j]));
    p.b.push_back(slice(L.hidden[j].b, d[j + 1]));
    p.alpha.push_back(slice(L.hidden[j].alpha, 2 * static_cast<std::size_t>(d[j + 1])));
  }
  const int J = md.depth();
  p.A_out = slice(L.A_out, static_cast<std::size_t>(d[J + 1]) * d[J]);
  p.c = slice(L.c, d[J + 1]);
  return p;
}

Vec encode(const MultiIndex& md, const DecodedParameters& p) {
  const auto& d = md.dims();
  const int J = md.depth();
  if (static_cast<int>(p.A.size()) != J || p.b.size() != p.A.size() || p.alpha.size() != p.A.size())
    throw DomainError("encode: wrong number of layers");
  Vec theta;
  theta.reserve(param_count(md));
  for (int j = 0; j < J; ++j) {
    if (p.A[j].size() != static_cast<std::size_t>(d[j + 1]) * d[j] || p.b[j].size() != static_cast<std::size_t>(d[j + 1]) ||
        p.alpha[j].size() != 2 * static_cast<std::size_t>(d[j + 1]))
      throw DomainError("encode: block size mismatch");
    theta.insert(theta.end(), p.A[j].begin(), p.A[j].end());
    theta.insert(theta.end(), p.b[j].begin(), p.b[j].end());
    theta.insert(theta.end(), p.alpha[j].begin(), p.alpha[j].end());
  }
  if (p.A_out.size() != static_cast<std::size_t>(d[J + 1]) * d[J] || p.c.size() != static_cast<std::size_t>(d[J + 1]))
    throw DomainError("encode: output block size mismatch");
  theta.insert(theta.end(), p.A_out.begin(), p.A_out.end());
  theta.insert(theta.end(), p.c.begin(), p.c.end());
  return theta;
}

namespace {

void affine(const double* A, const double* b, const Vec& x, int rows, Vec& out) {
  const int cols = static_cast<int>(x.size());
  out.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double s = b ? b[r] : 0.0;
    const double* row = A + static_cast<std::size_t>(r) * cols;
    for (int k = 0; k < cols; ++k) s += row[k] * x[k];
    out[r] = s;
  }
}

struct Tape {
  std::vector<Vec> x;  // x^(0..J)
  std::vector<Vec> z;  // pre-activations of hidden layers
};

Vec run(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x, Tape* tape) {
  const auto L = layout(md);
  if (theta.size() != L.total) throw DomainError("forward: parameter vector has wrong length");
  if (static_cast<int>(x.size()) != md.input_dim()) throw DomainError("forward: input dimension mismatch");
  const auto& d = md.dims();
  Vec cur = x, z;
  if (tape) tape->x.push_back(cur);
  for (int j = 0; j < md.depth(); ++j) {
    affine(theta.data() + L.hidden[j].A, theta.data() + L.hidden[j].b, cur, d[j + 1], z);
    const double* al = theta.data() + L.hidden[j].alpha;
    Vec next(d[j + 1]);
    for (int r = 0; r < d[j + 1]; ++r) next[r] = activation_eval(spec, al[2 * r], al[2 * r + 1], z[r]);
    if (tape) {
      tape->z.push_back(z);
      tape->x.push_back(next);
    }
    cur = std::move(next);
  }
  Vec out;
  affine(theta.data() + L.A_out, theta.data() + L.c, cur, md.output_dim(), out);
  return out;
}

// Backward pass; fills grad (if non-null) and returns d/dx.
Vec backward(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Tape& tape, const Vec& g_out,
             Vec* grad) {
  const auto L = layout(md);
  const auto& d = md.dims();
  const int J = md.depth();
  if (static_cast<int>(g_out.size()) != md.output_dim()) throw DomainError("backward: gradient size mismatch");
  if (grad) grad->assign(L.total, 0.0);
  // Output layer.
  Vec g(d[J], 0.0);
  {
    const double* A = theta.data() + L.A_out;
    const Vec& xin = tape.x[J];
    for (int r = 0; r < d[J + 1]; ++r) {
      if (grad) {
        (*grad)[L.c + r] += g_out[r];
        for (int k = 0; k < d[J]; ++k) (*grad)[L.A_out + static_cast<std::size_t>(r) * d[J] + k] += g_out[r] * xin[k];
      }
      for (int k = 0; k < d[J]; ++k) g[k] += A[static_cast<std::size_t>(r) * d[J] + k] * g_out[r];
    }
  }
  const bool classical = spec.kind == ActivationKind::Classical;
  for (int j = J - 1; j >= 0; --j) {
    const double* al = theta.data() + L.hidden[j].alpha;
    const Vec& z = tape.z[j];
    Vec gz(d[j + 1]);
    for (int r = 0; r < d[j + 1]; ++r) {
      const double a1 = al[2 * r], a2 = al[2 * r + 1], zr = z[r];
      if (classical) {
        gz[r] = g[r] * sigma_star_derivative(spec, zr);
        continue;
      }
      const bool lin = zr >= a2 * zr;
      const double m = lin ? zr : a2 * zr;
      gz[r] = g[r] * (a1 * (lin ? 1.0 : a2) + (1 - a1) * sigma_star_derivative(spec, zr));
      if (grad) {
        (*grad)[L.hidden[j].alpha + 2 * r] += g[r] * (m - sigma_star(spec, zr));
        (*grad)[L.hidden[j].alpha + 2 * r + 1] += g[r] * (lin ? 0.0 : a1 * zr);
      }
    }
    const double* A = theta.data() + L.hidden[j].A;
    const Vec& xin = tape.x[j];
    Vec gin(d[j], 0.0);
    for (int r = 0; r < d[j + 1]; ++r) {
      if (grad) {
        (*grad)[L.hidden[j].b + r] += gz[r];
        for (int k = 0; k < d[j]; ++k) (*grad)[L.hidden[j].A + static_cast<std::size_t>(r) * d[j] + k] += gz[r] * xin[k];
      }
      for (int k = 0; k < d[j]; ++k) gin[k] += A[static_cast<std::size_t>(r) * d[j] + k] * gz[r];
    }
    g = std::move(gin);
  }
  return g;
}

}  // namespace

Vec forward(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x) {
  return run(md, spec, theta, x, nullptr);
}

Vec forward_backward(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x,
                     const Vec& g_out, Vec& grad) {
  Tape tape;
  Vec out = run(md, spec, theta, x, &tape);
  backward(md, spec, theta, tape, g_out, &grad);
  return out;
}

Vec input_gradient(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x,
                   const Vec& g_out) {
  Tape tape;
  run(md, spec, theta, x, &tape);
  return backward(md, spec, theta, tape, g_out, nullptr);
}

Network pad_depth(const Network& net, int extra) {
  if (extra < 0) throw DomainError("pad_depth: negative padding");
  if (extra == 0) return net;
  if (net.act.kind == ActivationKind::Classical)
    throw UnsupportedError("pad_depth: classical activations have no identity parameter");
  auto p = decode(net.md, net.theta);
  std::vector<int> dims = net.md.dims();
  const int w = dims[dims.size() - 2];
  for (int e = 0; e < extra; ++e) {
    Vec I(static_cast<std::size_t>(w) * w, 0.0);
    for (int k = 0; k < w; ++k) I[static_cast<std::size_t>(k) * w + k] = 1.0;
    p.A.push_back(I);
    p.b.push_back(Vec(w, 0.0));
    p.alpha.push_back(Vec(2 * static_cast<std::size_t>(w), 1.0));
    dims.insert(dims.end() - 1, w);
  }
  MultiIndex md(dims);
  return Network{md, net.act, encode(md, p)};
}

Network pad_width(const Network& net, const MultiIndex& wider) {
  const auto& a = net.md.dims();
  const auto& b = wider.dims();
  if (a.size() != b.size() || a.front() != b.front() || a.back() != b.back())
    throw DomainError("pad_width: incompatible multi-index");
  for (std::size_t j = 0; j < a.size(); ++j)
    if (b[j] < a[j]) throw DomainError("pad_width: target is narrower");
  const auto p = decode(net.md, net.theta);
  DecodedParameters q;
  const int J = net.md.depth();
  for (int j = 0; j < J; ++j) {
    Vec A(static_cast<std::size_t>(b[j + 1]) * b[j], 0.0), bb(b[j + 1], 0.0), al(2 * static_cast<std::size_t>(b[j + 1]), 0.0);
    for (int r = 0; r < a[j + 1]; ++r) {
      for (int k = 0; k < a[j]; ++k) A[static_cast<std::size_t>(r) * b[j] + k] = p.A[j][static_cast<std::size_t>(r) * a[j] + k];
      bb[r] = p.b[j][r];
      al[2 * r] = p.alpha[j][2 * r];
      al[2 * r + 1] = p.alpha[j][2 * r + 1];
    }
    q.A.push_back(A);
    q.b.push_back(bb);
    q.alpha.push_back(al);
  }
  Vec Ao(static_cast<std::size_t>(b[J + 1]) * b[J], 0.0);
  for (int r = 0; r < a[J + 1]; ++r)
    for (int k = 0; k < a[J]; ++k) Ao[static_cast<std::size_t>(r) * b[J] + k] = p.A_out[static_cast<std::size_t>(r) * a[J] + k];
  q.A_out = Ao;
  q.c = p.c;
  return Network{wider, net.act, encode(wider, q)};
}

Network pad_to(const Network& net, const MultiIndex& target) {
  const auto& a = net.md.dims();
  const auto& t = target.dims();
  if (t.size() < a.size()) throw DomainError("pad_to: target is shallower");
  const int extra = static_cast<int>(t.size() - a.size());
  std::vector<int> same_depth(t.begin(), t.begin() + static_cast<long>(a.size()) - 1);
  same_depth.push_back(t.back());
  Network wide = pad_width(net, MultiIndex(same_depth));
  Network deep = pad_depth(wide, extra);
  // Identity layers take the width of the last hidden layer; widen them too.
  return deep.md == target ? deep : pad_width(deep, target);
}

double dataset_loss(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const std::vector<Vec>& xs,
                    const std::vector<Vec>& ys, Loss loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vec f = forward(md, spec, theta, xs[i]);
    if (loss == Loss::Squared) {
      for (std::size_t k = 0; k < f.size(); ++k) total += (f[k] - ys[i][k]) * (f[k] - ys[i][k]);
    } else {
      const double mx = *std::max_element(f.begin(), f.end());
      double z = 0;
      for (double v : f) z += std::exp(v - mx);
      const double lz = mx + std::log(z);
      for (std::size_t k = 0; k < f.size(); ++k) total -= ys[i][k] * (f[k] - lz);
    }
  }
  return total / static_cast<double>(xs.size());
}

Vec random_init(const MultiIndex& md, const TrainConfig& cfg) {
  Rng rng(cfg.seed, 0x1417);
  const auto L = layout(md);
  const auto& d = md.dims();
  Vec theta(L.total, 0.0);
  for (int j = 0; j < md.depth(); ++j) {
    const double s = cfg.init_scale / std::sqrt(static_cast<double>(d[j]));
    for (std::size_t k = 0; k < static_cast<std::size_t>(d[j + 1]) * d[j]; ++k) theta[L.hidden[j].A + k] = s * rng.normal();
    for (int r = 0; r < d[j + 1]; ++r) {
      theta[L.hidden[j].b + r] = 0.1 * s * rng.normal();
      theta[L.hidden[j].alpha + 2 * r] = cfg.alpha_init[0];
      theta[L.hidden[j].alpha + 2 * r + 1] = cfg.alpha_init[1];
    }
  }
  const int J = md.depth();
  const double s = cfg.init_scale / std::sqrt(static_cast<double>(d[J]));
  for (std::size_t k = 0; k < static_cast<std::size_t>(d[J + 1]) * d[J]; ++k) theta[L.A_out + k] = s * rng.normal();
  return theta;
}

TrainResult train_regression(const MultiIndex& md, const ActivationSpec& spec, const std::vector<Vec>& xs,
                             const std::vector<Vec>& ys, Loss loss, const TrainConfig& cfg, const Vec& init) {
  if (spec.kind == ActivationKind::Singular)
    throw UnsupportedError(
        "train_regression: singular activations are not gradient-trainable; use memorize_sequence or the constructive fit");
  if (xs.empty() || xs.size() != ys.size()) throw DomainError("train_regression: empty or mismatched dataset");
  for (const auto& y : ys)
    if (static_cast<int>(y.size()) != md.output_dim()) throw DomainError("train_regression: target dimension mismatch");
  const auto L = layout(md);
  Vec theta = init.empty() ? random_init(md, cfg) : init;
  if (theta.size() != L.total) throw DomainError("train_regression: initial parameters have wrong length");

  const std::size_t n = xs.size();
  const std::size_t bs = cfg.batch_size <= 0 ? n : std::min<std::size_t>(n, cfg.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed, 0x7a11);
  Vec grad(L.total), g_sample, g_out;
  std::vector<char> trainable(L.total, 1);
  if (!cfg.train_alpha || spec.kind == ActivationKind::Classical)
    for (int j = 0; j < md.depth(); ++j)
      for (int r = 0; r < 2 * md[j + 1]; ++r) trainable[L.hidden[j].alpha + r] = 0;
  TrainResult res;
  double lr = cfg.learning_rate;
  res.loss = dataset_loss(md, spec, theta, xs, ys, loss);
  int epoch = 0;
  for (; epoch < cfg.epochs && res.loss > cfg.target_loss; ++epoch) {
    if (epoch > 0 && cfg.decay_every > 0 && epoch % cfg.decay_every == 0) lr *= cfg.decay;
    if (bs < n)
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t stop = std::min(n, start + bs);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t t = start; t < stop; ++t) {
        const std::size_t i = order[t];
        Tape tape;
        const Vec f = run(md, spec, theta, xs[i], &tape);
        g_out.assign(f.size(), 0.0);
        if (loss == Loss::Squared) {
          for (std::size_t k = 0; k < f.size(); ++k) g_out[k] = 2.0 * (f[k] - ys[i][k]);
        } else {
          const double mx = *std::max_element(f.begin(), f.end());
          double z = 0, ysum = 0;
          for (double v : f) z += std::exp(v - mx);
          for (double v : ys[i]) ysum += v;
          for (std::size_t k = 0; k < f.size(); ++k) g_out[k] = ysum * std::exp(f[k] - mx) / z - ys[i][k];
        }
        backward(md, spec, theta, tape, g_out, &g_sample);
        for (std::size_t k = 0; k < L.total; ++k) grad[k] += g_sample[k];
      }
      const double scale = lr / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < L.total; ++k)
        if (trainable[k]) theta[k] -= scale * grad[k];
    }
    res.loss = dataset_loss(md, spec, theta, xs, ys, loss);
    if (!std::isfinite(res.loss)) throw NumericError("train_regression: loss diverged");
  }
  res.theta = std::move(theta);
  res.epochs_run = epoch;
  return res;
}

int hypernetwork_size(int P, int N_T) {
  if (P < 1 || N_T < 1) throw DomainError("hypernetwork_size: P and N_T must be positive");
  for (long M = 1;; ++M) {
    if (2L * (M / 2) * (M / (4L * P)) >= N_T) return static_cast<int>(M);
  }
}

Vec ramp_least_squares(const MultiIndex& md, const ActivationSpec& act, const std::vector<Vec>& xs,
                 const std::vector<Vec>& ys, double gain, const TrainConfig& tc) {
  Rng rng(tc.seed, 0xfea7);
  const auto lay = layout(md);
  const auto& d = md.dims();
  Vec theta(lay.total, 0.0);
  std::vector<Vec> H = xs;
  for (int j = 0; j < md.depth(); ++j) {
    const int in = d[j], out = d[j + 1];
    Vec mean(in, 0.0);
    for (const auto& h : H)
      for (int k = 0; k < in; ++k) mean[k] += h[k] / H.size();
    double spread = 0;
    for (const auto& h : H)
      for (int k = 0; k < in; ++k) spread += (h[k] - mean[k]) * (h[k] - mean[k]) / H.size();
    spread = std::sqrt(spread);
    if (!(spread > 0)) spread = 1.0;
    for (int r = 0; r < out; ++r) {
      Vec w(in);
      double nw = 0;
      for (double& v : w) {
        v = rng.normal();
        nw += v * v;
      }
      nw = std::sqrt(nw);
      const Vec& anchor = H[rng.index(H.size())];
      double b = 0;
      for (int k = 0; k < in; ++k) {
        w[k] *= gain / (spread * nw);
        theta[lay.hidden[j].A + static_cast<std::size_t>(r) * in + k] = w[k];
        b -= w[k] * anchor[k];
      }
      theta[lay.hidden[j].b + r] = b;
      theta[lay.hidden[j].alpha + 2 * r] = tc.alpha_init[0];
      theta[lay.hidden[j].alpha + 2 * r + 1] = tc.alpha_init[1];
    }
    std::vector<Vec> next;
    for (const auto& h : H) {
      Vec z(out);
      for (int r = 0; r < out; ++r) {
        double a = theta[lay.hidden[j].b + r];
        for (int k = 0; k < in; ++k) a += theta[lay.hidden[j].A + static_cast<std::size_t>(r) * in + k] * h[k];
        z[r] = activation_eval(act, tc.alpha_init[0], tc.alpha_init[1], a);
      }
      next.push_back(std::move(z));
    }
    H = std::move(next);
  }
  const int J = md.depth(), in = d[J], out = d[J + 1];
  Eigen::MatrixXd X(H.size(), in + 1), Y(H.size(), out);
  for (std::size_t i = 0; i < H.size(); ++i) {
    for (int k = 0; k < in; ++k) X(i, k) = H[i][k];
    X(i, in) = 1.0;
    for (int r = 0; r < out; ++r) Y(i, r) = ys[i][r];
  }
  Eigen::MatrixXd G = X.transpose() * X;
  const double ridge = 1e-10 * std::max(1.0, G.trace() / G.rows());
  G.diagonal().array() += ridge;
  const Eigen::MatrixXd B = G.ldlt().solve(X.transpose() * Y);
  if (!B.allFinite()) throw NumericError("ramp_least_squares: readout least squares failed");
  for (int r = 0; r < out; ++r) {
    for (int k = 0; k < in; ++k) theta[lay.A_out + static_cast<std::size_t>(r) * in + k] = B(k, r);
    theta[lay.c + r] = B(in, r);
  }
  return theta;
}

}  // namespace ght
