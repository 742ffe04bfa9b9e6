#include "ght/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ght/errors.hpp"

namespace ght {

namespace {

double norm_pow(const double* x, const double* y, std::size_t d, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  if (p == 2.0) return s;
  const double r = std::sqrt(s);
  return p == 1.0 ? r : std::pow(r, p);
}

// Monotone coupling on the line; optimal for every convex cost |x - y|^p.
double transport_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  std::vector<std::size_t> ia(mu.size()), ib(nu.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::stable_sort(ia.begin(), ia.end(), [&](auto x, auto y) { return mu.atom(x)[0] < mu.atom(y)[0]; });
  std::stable_sort(ib.begin(), ib.end(), [&](auto x, auto y) { return nu.atom(x)[0] < nu.atom(y)[0]; });
  std::size_t i = 0, j = 0;
  double ra = mu.weight(ia[0]), rb = nu.weight(ib[0]);
  double total = 0.0;
  while (i < ia.size() && j < ib.size()) {
    const double m = std::min(ra, rb);
    const double gap = std::abs(mu.atom(ia[i])[0] - nu.atom(ib[j])[0]);
    if (m > 0.0 && gap > 0.0) total += m * (p == 1.0 ? gap : std::pow(gap, p));
    ra -= m;
    rb -= m;
    const bool adv_i = ra <= rb;
    if (adv_i) {
      if (++i < ia.size()) ra = mu.weight(ia[i]);
    } else if (++j < ib.size()) {
      rb = nu.weight(ib[j]);
    }
  }
  return total;
}

}  // namespace

TransportPlan solve_transport(const Vec& a, const Vec& b, const Vec& cost) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  if (n == 0 || m == 0) throw DomainError("transport: empty marginal");
  if (cost.size() != a.size() * b.size()) throw DomainError("transport: cost matrix has wrong size");
  auto C = [&](int i, int j) { return cost[static_cast<std::size_t>(i) * m + j]; };

  TransportPlan plan;
  // North-west corner start: always n + m - 1 basic cells forming a tree.
  std::vector<char> basic(static_cast<std::size_t>(n) * m, 0);
  {
    int i = 0, j = 0;
    double ra = a[0], rb = b[0];
    while (true) {
      const double x = std::min(ra, rb);
      plan.cells.push_back({i, j, std::max(x, 0.0)});
      basic[static_cast<std::size_t>(i) * m + j] = 1;
      ra -= x;
      rb -= x;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1 || (j < m - 1 && rb < ra)) {
        ++j;
        rb = b[j];
      } else {
        ++i;
        ra = a[i];
      }
    }
  }

  double scale = 0.0;
  for (double c : cost) scale = std::max(scale, std::abs(c));
  const double tol = 1e-13 * std::max(scale, 1.0);
  const int nodes = n + m;
  std::vector<double> pot(nodes);
  std::vector<int> parent_edge(nodes), parent_node(nodes), queue(nodes);
  std::vector<char> seen(nodes);
  std::vector<std::vector<int>> adj(nodes);
  const long max_iter = 50L * (n + m) * (n + m) + 1000;

  for (long iter = 0;; ++iter) {
    if (iter > max_iter) throw NumericError("transport: simplex iteration cap reached");
    for (auto& l : adj) l.clear();
    for (int e = 0; e < static_cast<int>(plan.cells.size()); ++e) {
      adj[plan.cells[e].i].push_back(e);
      adj[n + plan.cells[e].j].push_back(e);
    }
    // Potentials: u_i + v_j = c_ij on basic cells, u_0 = 0.
    std::fill(seen.begin(), seen.end(), 0);
    int head = 0, tail = 0;
    queue[tail++] = 0;
    seen[0] = 1;
    pot[0] = 0.0;
    while (head < tail) {
      const int k = queue[head++];
      for (int e : adj[k]) {
        const auto& c = plan.cells[e];
        const int other = k < n ? n + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        pot[other] = C(c.i, c.j) - pot[k];
        queue[tail++] = other;
      }
    }
    if (tail != nodes) throw NumericError("transport: basis is not a spanning tree");

    int ei = -1, ej = -1;
    double best = -tol;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (basic[static_cast<std::size_t>(i) * m + j]) continue;
        const double r = C(i, j) - pot[i] - pot[n + j];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
        }
      }
    if (ei < 0) break;

    // Tree path from column node ej back to row node ei.
    std::fill(seen.begin(), seen.end(), 0);
    head = tail = 0;
    queue[tail++] = n + ej;
    seen[n + ej] = 1;
    parent_edge[n + ej] = -1;
    while (head < tail && !seen[ei]) {
      const int k = queue[head++];
      for (int e : adj[k]) {
        const auto& c = plan.cells[e];
        const int other = k < n ? n + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_edge[other] = e;
        parent_node[other] = k;
        queue[tail++] = other;
      }
    }
    // Walk from ei to ej; edges nearest ej get sign -, then alternate.
    std::vector<int> path;
    for (int k = ei; k != n + ej; k = parent_node[k]) path.push_back(parent_edge[k]);
    std::reverse(path.begin(), path.end());
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const double x = plan.cells[path[s]].mass;
      if (x < theta) {
        theta = x;
        leave = path[s];
      }
    }
    for (std::size_t s = 0; s < path.size(); ++s) {
      auto& c = plan.cells[path[s]];
      c.mass = (s % 2 == 0) ? std::max(c.mass - theta, 0.0) : c.mass + theta;
    }
    auto& lc = plan.cells[leave];
    basic[static_cast<std::size_t>(lc.i) * m + lc.j] = 0;
    lc = {ei, ej, theta};
    basic[static_cast<std::size_t>(ei) * m + ej] = 1;
  }

  double total = 0.0;
  for (const auto& c : plan.cells)
    if (c.mass > 0.0) total += c.mass * C(c.i, c.j);
  plan.cost = total;
  return plan;
}

double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (mu.dim() != nu.dim()) throw DomainError("wasserstein_p: dimension mismatch");
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("wasserstein_p: p must be >= 1");
  const DiscreteMeasure a = mu.canonical(), b = nu.canonical();
  if (a.atoms() == b.atoms() && a.weights() == b.weights()) return 0.0;
  double opt;
  if (a.dim() == 1) {
    opt = transport_1d(a, b, p);
  } else {
    const std::size_t d = a.dim();
    Vec cost(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        cost[i * b.size() + j] = norm_pow(a.atom(i).data(), b.atom(j).data(), d, p);
    opt = solve_transport(a.weights(), b.weights(), cost).cost;
  }
  return std::pow(std::max(opt, 0.0), 1.0 / p);
}

double path_wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p) {
  if (mu.step_dim() != nu.step_dim() || mu.horizon() != nu.horizon())
    throw DomainError("path_wasserstein_p: shape mismatch");
  if (!(p >= 1.0)) throw DomainError("path_wasserstein_p: p must be >= 1");
  const DiscreteMeasure a = mu.base().canonical(), b = nu.base().canonical();
  const std::size_t d = mu.step_dim(), T = mu.horizon();
  Vec cost(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += norm_pow(a.atom(i).data() + t * d, b.atom(j).data() + t * d, d, p);
      cost[i * b.size() + j] = s;
    }
  const double opt = solve_transport(a.weights(), b.weights(), cost).cost;
  return std::pow(std::max(opt, 0.0), 1.0 / p);
}

double adapted_wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p) {
  if (mu.step_dim() != nu.step_dim()) throw DomainError("adapted_wasserstein_p: step dimension mismatch");
  if (mu.horizon() != nu.horizon()) throw DomainError("adapted_wasserstein_p: horizon mismatch");
  if (!(p >= 1.0)) throw DomainError("adapted_wasserstein_p: p must be >= 1");
  if (same_measure(mu.base(), nu.base())) return 0.0;
  const PathTree tx = build_tree(mu), ty = build_tree(nu);
  const std::size_t d = mu.step_dim(), T = mu.horizon();
  // value[u * ny + v] for nodes u, v on the current level.
  Vec next;  // level t + 1
  for (std::size_t t = T; t-- > 0;) {
    const auto& lx = tx.levels[t];
    const auto& ly = ty.levels[t];
    const auto& cx = tx.levels[t + 1];
    const auto& cy = ty.levels[t + 1];
    Vec cur(lx.size() * ly.size());
    for (std::size_t u = 0; u < lx.size(); ++u)
      for (std::size_t v = 0; v < ly.size(); ++v) {
        const auto& nu_ = lx[u];
        const auto& nv = ly[v];
        Vec cost(nu_.children.size() * nv.children.size());
        for (std::size_t a = 0; a < nu_.children.size(); ++a)
          for (std::size_t b = 0; b < nv.children.size(); ++b) {
            const int ca = nu_.children[a], cb = nv.children[b];
            double c = norm_pow(cx[ca].value.data(), cy[cb].value.data(), d, p);
            if (t + 1 < T) c += next[static_cast<std::size_t>(ca) * cy.size() + cb];
            cost[a * nv.children.size() + b] = c;
          }
        cur[u * ly.size() + v] = solve_transport(nu_.cond, nv.cond, cost).cost;
      }
    next = std::move(cur);
  }
  return std::pow(std::max(next[0], 0.0), 1.0 / p);
}

double total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw DomainError("total_variation: dimension mismatch");
  const DiscreteMeasure a = mu.canonical(), b = nu.canonical();
  std::size_t i = 0, j = 0;
  double s = 0.0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a.atom(i) < b.atom(j))) {
      s += a.weight(i++);
    } else if (i == a.size() || b.atom(j) < a.atom(i)) {
      s += b.weight(j++);
    } else {
      s += std::abs(a.weight(i++) - b.weight(j++));
    }
  }
  return std::min(s, 2.0);
}

}  // namespace ght
