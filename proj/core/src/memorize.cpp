#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ght/errors.hpp"
#include "ght/network.hpp"
#include "ght/rng.hpp"

namespace ght {

namespace {

struct Line {
  double a = -1.0, b = 0.0;  // a + b s
  double at(double s) const { return a + b * s; }
};

// Capacity of the construction at width M: groups x points per group.
long capacity(int M, int P) {
  const int U = M / P;
  if (U < 1) return 0;
  const long groups = (M + 1) / 2;
  const long per_group = (U + 1) / 2;
  return groups * per_group;
}

}  // namespace

MemorizedNetwork memorize_sequence(const std::vector<Vec>& keys, const std::vector<Vec>& values, int N_T,
                                   std::uint64_t seed) {
  const std::size_t K = keys.size();
  if (K == 0 || values.size() != K) throw DomainError("memorize_sequence: empty or mismatched pairs");
  const int P = static_cast<int>(keys.front().size());
  if (P < 1) throw DomainError("memorize_sequence: empty key vectors");
  for (std::size_t k = 0; k < K; ++k)
    if (static_cast<int>(keys[k].size()) != P || static_cast<int>(values[k].size()) != P)
      throw DomainError("memorize_sequence: all vectors must have length P");
  {
    std::set<Vec> uniq(keys.begin(), keys.end());
    if (uniq.size() != K) throw DomainError("memorize_sequence: keys are not pairwise distinct");
  }

  // Projection direction with the best separated images.
  Vec dir;
  Vec s(K);
  double best_ratio = -1.0;
  for (int trial = 0; trial < 32; ++trial) {
    Rng rng(seed, 0xd1ec + static_cast<std::uint64_t>(trial));
    Vec a(P);
    double nrm = 0;
    for (double& x : a) {
      x = rng.normal();
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    for (double& x : a) x /= nrm;
    Vec proj(K);
    for (std::size_t k = 0; k < K; ++k) proj[k] = std::inner_product(a.begin(), a.end(), keys[k].begin(), 0.0);
    Vec sorted = proj;
    std::sort(sorted.begin(), sorted.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < K; ++k) gap = std::min(gap, sorted[k] - sorted[k - 1]);
    const double range = K > 1 ? sorted.back() - sorted.front() : 1.0;
    const double ratio = K > 1 ? gap / range : 1.0;
    const double scale = std::abs(sorted.back()) + std::abs(sorted.front()) + 1.0;
    if (ratio > best_ratio && (K == 1 || gap > 1e-12 * scale)) {
      best_ratio = ratio;
      dir = a;
      s = proj;
    }
  }
  if (best_ratio <= 0.0) throw NumericError("memorize_sequence: could not separate keys by a linear functional");

  const double smin = *std::min_element(s.begin(), s.end());
  const double range = K > 1 ? *std::max_element(s.begin(), s.end()) - smin : 1.0;
  Vec sh(K);
  for (std::size_t k = 0; k < K; ++k) sh[k] = (s[k] - smin) / range;
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return sh[x] < sh[y]; });
  double min_gap = 1.0;
  for (std::size_t k = 1; k < K; ++k) min_gap = std::min(min_gap, sh[order[k]] - sh[order[k - 1]]);
  const double w = min_gap / 4.0;

  MemorizedNetwork out;
  out.width_formula = hypernetwork_size(P, N_T);
  int M = std::max(out.width_formula, P);
  while (capacity(M, P) < static_cast<long>(K)) ++M;
  out.width = M;
  out.plateau = w;
  out.direction = dir;

  const int U = M / P;
  const int Upos = (U + 1) / 2;
  const int B = Upos;
  const std::size_t G = (K + B - 1) / B;

  // Groups of consecutive sorted keys and the transition knots between them.
  std::vector<std::size_t> gstart(G + 1);
  for (std::size_t g = 0; g <= G; ++g) gstart[g] = std::min(K, g * B);
  Vec knot_e(G > 0 ? G - 1 : 0), knot_a(G > 0 ? G - 1 : 0);
  for (std::size_t g = 0; g + 1 < G; ++g) {
    const double lo = sh[order[gstart[g + 1] - 1]], hi = sh[order[gstart[g + 1]]];
    knot_e[g] = lo + (hi - lo) / 3.0;
    knot_a[g] = hi - (hi - lo) / 3.0;
  }

  // lines[unit][g]: line followed by layer-2 unit `unit` on group g.
  const int units2 = P * U;
  std::vector<std::vector<Line>> lines(units2, std::vector<Line>(G));
  std::vector<double> sign(units2), lambda(P);
  for (int p = 0; p < P; ++p) {
    double mx = 0;
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, std::abs(values[k][p]));
    lambda[p] = mx + 1.0;
    for (int r = 0; r < U; ++r) sign[p * U + r] = r < Upos ? 1.0 : -1.0;
    for (std::size_t g = 0; g < G; ++g) {
      int next_pos = 1, next_neg = Upos;
      const std::size_t first = gstart[g], last = gstart[g + 1];
      lines[p * U + 0][g] = Line{values[order[first]][p] + lambda[p], 0.0};
      for (std::size_t i = first; i + 1 < last; ++i) {
        const double k1 = sh[order[i]] + w, k2 = sh[order[i + 1]] - w;
        const double delta = (values[order[i + 1]][p] - values[order[i]][p]) / (k2 - k1);
        const double mag = std::abs(delta);
        const double start_pos = delta >= 0 ? k1 : k2, start_neg = delta >= 0 ? k2 : k1;
        lines[p * U + next_pos++][g] = Line{-mag * start_pos, mag};
        lines[p * U + next_neg++][g] = Line{-mag * start_neg, mag};
      }
    }
  }

  // Assemble [P, M, M, P].
  MultiIndex md({P, M, M, P});
  DecodedParameters prm;
  prm.A = {Vec(static_cast<std::size_t>(M) * P, 0.0), Vec(static_cast<std::size_t>(M) * M, 0.0)};
  prm.b = {Vec(M, 0.0), Vec(M, 0.0)};
  prm.alpha = {Vec(2 * static_cast<std::size_t>(M), 0.0), Vec(2 * static_cast<std::size_t>(M), 0.0)};
  for (int r = 0; r < M; ++r) {
    prm.alpha[0][2 * r] = prm.alpha[1][2 * r] = 1.0;  // ReLU: alpha = (1, 0)
  }
  // Layer 1: unit 0 = s + 1, then ReLU(s - e_g), ReLU(s - a_g).
  auto set_feature = [&](int unit, double shift) {
    for (int k = 0; k < P; ++k) prm.A[0][static_cast<std::size_t>(unit) * P + k] = dir[k] / range;
    prm.b[0][unit] = -smin / range - shift;
  };
  set_feature(0, -1.0);
  for (std::size_t g = 0; g + 1 < G; ++g) {
    set_feature(static_cast<int>(1 + 2 * g), knot_e[g]);
    set_feature(static_cast<int>(2 + 2 * g), knot_a[g]);
  }
  // Layer 2: piecewise-linear combination following lines[u][g] on group g.
  for (int u = 0; u < units2; ++u) {
    const auto& L = lines[u];
    double* row = prm.A[1].data() + static_cast<std::size_t>(u) * M;
    row[0] = L[0].b;
    prm.b[1][u] = L[0].a - L[0].b;
    for (std::size_t g = 0; g + 1 < G; ++g) {
      const double ve = L[g].at(knot_e[g]), va = L[g + 1].at(knot_a[g]);
      const double m = (va - ve) / (knot_a[g] - knot_e[g]);
      row[1 + 2 * g] = m - L[g].b;
      row[2 + 2 * g] = L[g + 1].b - m;
    }
  }
  prm.A_out.assign(static_cast<std::size_t>(P) * M, 0.0);
  prm.c.assign(P, 0.0);
  for (int p = 0; p < P; ++p) {
    for (int r = 0; r < U; ++r) prm.A_out[static_cast<std::size_t>(p) * M + p * U + r] = sign[p * U + r];
    prm.c[p] = -lambda[p];
  }
  out.net = Network{md, ActivationSpec::singular(), encode(md, prm)};

  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const Vec h = forward(out.net, keys[k]);
    for (int p = 0; p < P; ++p) worst = std::max(worst, std::abs(h[p] - values[k][p]));
  }
  out.max_residual = worst;
  if (!(worst <= 1e-6)) throw NumericError("memorize_sequence: interpolation residual exceeds 1e-6");
  return out;
}

}  // namespace ght
