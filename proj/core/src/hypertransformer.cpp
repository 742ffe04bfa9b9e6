#include "ght/hypertransformer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "ght/errors.hpp"
#include "ght/parallel.hpp"
#include "ght/rng.hpp"

namespace ght {

namespace {

bool pairwise_distinct(const std::vector<Vec>& v) {
  const std::set<Vec> s(v.begin(), v.end());
  return s.size() == v.size();
}

double sup_norm_diff(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s = std::max(s, std::abs(a[k] - b[k]));
  return s;
}

// Largest power of two strictly below x.
double power_of_two_below(double x) {
  double e = std::pow(2.0, std::floor(std::log2(x)));
  if (e >= x) e /= 2.0;
  return e;
}

ActivationSpec relu_family() { return ActivationSpec::singular(); }

}  // namespace

void validate(const Ght& g) {
  validate(g.decoder);
  if (g.horizon < 1) throw DomainError("ght: horizon must be positive");
  if (g.memory < 0 || g.input_dim < 1) throw DomainError("ght: invalid memory or input dimension");
  if (g.encoder_md.dims().size() < 2) throw DomainError("ght: encoder multi-index is empty");
  if (g.encoder_md.input_dim() != (g.memory + 1) * g.input_dim)
    throw DomainError("ght: encoder input width must be (m+1) d");
  if (g.encoder_md.output_dim() != g.decoder.encoder.md.input_dim())
    throw DomainError("ght: encoder output width differs from the decoder input width");
  const auto P = static_cast<int>(param_count(g.encoder_md));
  if (static_cast<int>(g.theta_init.size()) != P) throw DomainError("ght: theta_init has the wrong length");
  if (g.hyper.md.input_dim() != P || g.hyper.md.output_dim() != P)
    throw DomainError("ght: hypernetwork must map R^P to itself");
  if (g.hyper.theta.size() != param_count(g.hyper.md)) throw DomainError("ght: hypernetwork parameter length");
}

void build_schedule(Ght& g) {
  validate(g);
  g.schedule.assign(2 * static_cast<std::size_t>(g.horizon) + 1, Vec{});
  g.schedule[0] = g.theta_init;
  for (std::size_t k = 1; k < g.schedule.size(); ++k) g.schedule[k] = forward(g.hyper, g.schedule[k - 1]);
}

Ght make_ght(GeometricTransformer decoder, Network hyper, Vec theta_init, int horizon, MultiIndex encoder_md,
             ActivationSpec encoder_act, int memory, int input_dim) {
  Ght g{std::move(decoder), std::move(hyper), std::move(theta_init), horizon, std::move(encoder_md),
        std::move(encoder_act), memory, input_dim, {}};
  build_schedule(g);
  return g;
}

const Vec& theta_unroll(const Ght& g, int n) {
  if (g.schedule.size() != 2 * static_cast<std::size_t>(g.horizon) + 1)
    throw DomainError("theta_unroll: schedule has not been built");
  if (n <= -g.horizon) return g.schedule.front();
  if (n >= g.horizon) return g.schedule.back();
  return g.schedule[static_cast<std::size_t>(n + g.horizon)];
}

Vec ght_latent(const Ght& g, const PathWindow& path, int n) {
  if (static_cast<int>(path.dim()) != g.input_dim) throw DomainError("ght_eval: path dimension mismatch");
  return forward(g.encoder_md, g.encoder_act, theta_unroll(g, n), history(path, n, g.memory));
}

QasPoint ght_eval(const Ght& g, const PathWindow& path, int n) { return gt_eval(g.decoder, ght_latent(g, path, n)); }

CausalMap as_causal(const FiniteComplexityMap& map) {
  return [map](const PathWindow& p, int n) { return eval_finite_complexity(map, p, n); };
}

CausalMap as_causal(const Ght& g) {
  return [g](const PathWindow& p, int n) { return ght_eval(g, p, n); };
}

int horizon_index(const TimeGrid& grid, double T) {
  if (!(T > 0.0)) throw DomainError("horizon_index: T must be positive");
  int pos = -1, neg = -1;
  for (int n = 1; n <= grid.last(); ++n)
    if (grid.t(n) >= T) {
      pos = n;
      break;
    }
  for (int n = -1; n >= grid.first; --n)
    if (grid.t(n) <= -T) {
      neg = -n;
      break;
    }
  if (pos < 0 || neg < 0) throw OutOfWindowError("horizon_index: the grid window does not reach +-T");
  return std::min(pos, neg);
}

DynamicFitResult fit_dynamic(const FiniteComplexityMap& target, const std::vector<PathWindow>& paths, int N_T,
                             double eps, const DynamicFitConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (N_T < 1) throw DomainError("fit_dynamic: N_T must be positive");
  if (!(eps > 0.0)) throw DomainError("fit_dynamic: eps must be positive");
  if (paths.empty()) throw DomainError("fit_dynamic: no paths");
  if (!target.f || !target.rho) throw DomainError("fit_dynamic: target map is incomplete");
  if (!(cfg.decoder_lipschitz > 0.0)) throw DomainError("fit_dynamic: decoder Lipschitz constant must be positive");
  if (!(cfg.holder_alpha > 0.0 && cfg.holder_alpha <= 1.0)) throw DomainError("fit_dynamic: Hoelder exponent in (0, 1]");
  const int m = target.memory, d = target.input_dim, L = target.latent_dim;
  for (const auto& p : paths) {
    if (static_cast<int>(p.dim()) != d) throw DomainError("fit_dynamic: path dimension mismatch");
    if (p.offset() > -N_T - m || p.last() < N_T)
      throw OutOfWindowError("fit_dynamic: paths must cover indices -N_T - m .. N_T");
  }

  DynamicFitReport rep;
  rep.N_T = N_T;
  std::vector<int> dims{(m + 1) * d};
  dims.insert(dims.end(), cfg.encoder_hidden.begin(), cfg.encoder_hidden.end());
  dims.push_back(L);
  const MultiIndex md(dims);
  const ActivationSpec act = relu_family();
  const auto lay = layout(md);
  rep.P = static_cast<int>(lay.total);

  // (i) one encoder per step, all on the same multi-index.
  const std::size_t steps = 2 * static_cast<std::size_t>(N_T) + 1;
  std::vector<Vec> thetas(steps);
  rep.encoder_errors.assign(steps, 0.0);
  parallel_for(steps, cfg.threads, [&](std::size_t k) {
    const int n = static_cast<int>(k) - N_T;
    std::vector<Vec> xs, ys;
    for (const auto& p : paths) {
      xs.push_back(history(p, n, m));
      ys.push_back(target.f(p.grid.t(n), xs.back()));
      if (static_cast<int>(ys.back().size()) != L) throw DomainError("fit_dynamic: encoder target has the wrong length");
    }
    TrainConfig tc;
    tc.seed = cfg.seed;
    tc.alpha_init[0] = 1.0;
    tc.alpha_init[1] = 0.0;
    thetas[k] = ramp_least_squares(md, act, xs, ys, cfg.encoder_gain, tc);
    double e = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) e = std::max(e, sup_norm_diff(forward(md, act, thetas[k], xs[i]), ys[i]));
    rep.encoder_errors[k] = e;
  });
  rep.thetas = thetas;

  // (iii) + (v): bias perturbation until the parameters are distinct and the
  // hypernetwork interpolates the transitions.
  rep.distinct_before = pairwise_distinct(thetas);
  const double eta0 =
      power_of_two_below(std::pow(eps / (8.0 * cfg.decoder_lipschitz), 1.0 / cfg.holder_alpha) / std::sqrt(L));
  std::vector<Vec> cand;
  MemorizedNetwork mem;
  bool ok = false;
  std::string last_error = "parameters coincide";
  for (int attempt = 0; attempt <= cfg.perturb_retries && !ok; ++attempt) {
    const int halvings = attempt - (rep.distinct_before ? 1 : 0);
    const double eta = halvings < 0 ? 0.0 : eta0 / std::pow(2.0, halvings);
    cand = thetas;
    if (eta > 0.0)
      for (std::size_t k = 0; k < steps; ++k)
        for (int r = 0; r < L; ++r) cand[k][lay.c + r] += eta * (k + 1.0) / (steps + 1.0);
    rep.perturb_attempts = attempt + 1;
    rep.perturbation = eta;
    if (!pairwise_distinct(cand)) continue;
    try {
      std::vector<Vec> keys(cand.begin(), cand.end() - 1), values(cand.begin() + 1, cand.end());
      mem = memorize_sequence(keys, values, N_T, cfg.seed);
      ok = true;
    } catch (const DomainError& e) {
      last_error = e.what();
    } catch (const NumericError& e) {
      last_error = e.what();
    }
  }
  if (!ok)
    throw NumericError("fit_dynamic: no pairwise distinct parameter sequence after " +
                       std::to_string(rep.perturb_attempts) + " attempts (last: " + last_error + ")");
  rep.hyper_width = mem.width;
  rep.hyper_width_formula = mem.width_formula;
  rep.hyper_residual = mem.max_residual;

  // (iv) shared decoder on the union of encoder outputs.
  std::vector<Vec> latent;
  for (std::size_t k = 0; k < steps; ++k) {
    const int n = static_cast<int>(k) - N_T;
    for (const auto& p : paths) latent.push_back(forward(md, act, cand[k], history(p, n, m)));
  }
  FitConfig dc = cfg.decoder;
  dc.threads = cfg.threads;
  const TargetFn rho = target.rho;
  auto dec = fit_static_constructive(rho, latent, target.space, cfg.decoder_N, cfg.decoder_q, dc);
  rep.decoder = dec.report;

  Ght g = make_ght(std::move(dec.gt), mem.net, cand.front(), N_T, md, act, m, d);
  for (std::size_t k = 0; k < steps; ++k)
    rep.replay_deviation = std::max(rep.replay_deviation, sup_norm_diff(g.schedule[k], cand[k]));
  rep.thetas = cand;

  rep.within_errors.assign(steps, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const int n = static_cast<int>(k) - N_T;
    Vec err(paths.size());
    parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
      err[i] = distance(target.space, eval_finite_complexity(target, paths[i], n), ght_eval(g, paths[i], n));
    });
    for (double e : err) rep.within_errors[k] = std::max(rep.within_errors[k], e);
    rep.within_sup = std::max(rep.within_sup, rep.within_errors[k]);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(g), std::move(rep)};
}

DynamicFitResult fit_dynamic(const AcMapSpec& target, const std::vector<PathWindow>& paths, int N_T, double eps,
                             const DynamicFitConfig& cfg) {
  if (!target.family) throw DomainError("fit_dynamic: AC map without a family");
  return fit_dynamic(target.family(eps / 4.0), paths, N_T, eps, cfg);
}

DynamicFitResult fit_dynamic_span(const FiniteComplexityMap& target, const std::vector<PathWindow>& paths, double T,
                                  double eps, const DynamicFitConfig& cfg) {
  if (paths.empty()) throw DomainError("fit_dynamic: no paths");
  return fit_dynamic(target, paths, horizon_index(paths.front().grid, T), eps, cfg);
}

double self_compression(const Ght& g, const std::vector<PathWindow>& paths, int N_T, double lambda, int n) {
  if (!(lambda > 0.0)) throw DomainError("self_compression: lambda must be positive");
  const int ref = (n < 0 ? -1 : 1) * N_T;
  double c = 1.0;
  for (const auto& p : paths)
    c = std::max(c, lambda * distance(g.decoder.space, ght_eval(g, p, n), ght_eval(g, p, ref)));
  return c;
}

NormalizedError normalized_error(const CausalMap& target, const Ght& g, const std::vector<PathWindow>& paths,
                                 const std::function<double(int)>& c_ac, const std::function<double(int)>& c_table3,
                                 int N_T, double eps, int target_memory, double lambda, int threads) {
  if (!(eps > 0.0)) throw DomainError("normalized_error: eps must be positive");
  if (paths.empty()) throw DomainError("normalized_error: no paths");
  if (!(lambda > 0.0)) lambda = 8.0 / eps;
  const int mem = std::max(target_memory, g.memory);
  int lo = std::numeric_limits<int>::min(), hi = std::numeric_limits<int>::max();
  for (const auto& p : paths) {
    lo = std::max(lo, p.offset() + mem);
    hi = std::min(hi, p.last());
  }
  if (lo > -N_T || hi < N_T) throw OutOfWindowError("normalized_error: paths do not cover the window -N_T..N_T");

  NormalizedError out;
  for (int n = lo; n <= hi; ++n) {
    Vec raw(paths.size()), self(paths.size());
    const int ref = (n < 0 ? -1 : 1) * N_T;
    parallel_for(paths.size(), threads, [&](std::size_t i) {
      const QasPoint y = ght_eval(g, paths[i], n);
      raw[i] = distance(g.decoder.space, target(paths[i], n), y);
      self[i] = lambda * distance(g.decoder.space, y, ght_eval(g, paths[i], ref));
    });
    NormalizedRow row;
    row.n = n;
    double sc = 1.0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      row.raw = std::max(row.raw, raw[i]);
      sc = std::max(sc, self[i]);
    }
    row.denominator = std::max({1.0, c_ac ? c_ac(n) : 1.0, c_table3 ? c_table3(n) : 1.0, sc});
    row.normalized = row.raw / row.denominator;
    out.value = std::max(out.value, row.normalized);
    out.raw_sup = std::max(out.raw_sup, row.raw);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace ght
