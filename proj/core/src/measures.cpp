#include "ght/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "ght/errors.hpp"

namespace ght {

namespace {

constexpr double kSumTol = 1e-12;

void check_finite(const Vec& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite entry");
}

}  // namespace

SimplexWeight::SimplexWeight(Vec entries) : w_(std::move(entries)) {
  if (w_.empty()) throw DomainError("simplex weight: empty");
  double s = 0.0;
  for (double x : w_) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("simplex weight: negative or non-finite entry");
    s += x;
  }
  if (std::abs(s - 1.0) > kSumTol * std::max<double>(1.0, static_cast<double>(w_.size())))
    throw DomainError("simplex weight: entries do not sum to 1");
}

SimplexWeight SimplexWeight::vertex(std::size_t n, std::size_t i) {
  if (i >= n) throw DomainError("simplex vertex: index out of range");
  Vec w(n, 0.0);
  w[i] = 1.0;
  return SimplexWeight(std::move(w));
}

SimplexWeight SimplexWeight::uniform(std::size_t n) {
  if (n == 0) throw DomainError("simplex weight: empty");
  return SimplexWeight(Vec(n, 1.0 / static_cast<double>(n)));
}

SimplexWeight project_simplex(const Vec& u) {
  if (u.empty()) throw DomainError("project_simplex: empty input");
  check_finite(u, "project_simplex");
  const std::size_t n = u.size();
  // Shifting by a constant does not change the projection; centring on the
  // maximum keeps the threshold arithmetic well scaled.
  const double top = *std::max_element(u.begin(), u.end());
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = u[i] - top;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

  double cum = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += v[order[j]];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (v[order[j]] - t > 0.0) tau = t;
  }
  Vec w(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::max(v[i] - tau, 0.0);
    s += w[i];
  }
  if (s != 1.0)
    for (double& x : w) x /= s;
  return SimplexWeight(std::move(w));
}

Vec project_cube(const Vec& u, const Vec& lower, const Vec& upper) {
  if (u.size() != lower.size() || u.size() != upper.size())
    throw DomainError("project_cube: dimension mismatch");
  Vec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (lower[i] > upper[i]) throw DomainError("project_cube: lower bound exceeds upper bound");
    out[i] = std::min(std::max(lower[i], u[i]), upper[i]);
  }
  return out;
}

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<Vec> atoms, Vec weights)
    : dim_(dim), atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (dim_ == 0) throw DomainError("measure: dimension must be positive");
  if (atoms_.empty()) throw DomainError("measure: no atoms");
  if (atoms_.size() != weights_.size()) throw DomainError("measure: atoms/weights length mismatch");
  for (const auto& a : atoms_) {
    if (a.size() != dim_) throw DomainError("measure: atom dimension mismatch");
    check_finite(a, "measure atom");
  }
  SimplexWeight check(weights_);
  (void)check;
}

DiscreteMeasure DiscreteMeasure::dirac(const Vec& x) { return DiscreteMeasure(x.size(), {x}, {1.0}); }

DiscreteMeasure DiscreteMeasure::uniform(std::size_t dim, std::vector<Vec> atoms) {
  const std::size_t n = atoms.size();
  if (n == 0) throw DomainError("measure: no atoms");
  return DiscreteMeasure(dim, std::move(atoms), Vec(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::canonical() const {
  std::map<Vec, double> merged;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if (weights_[i] > 0.0) merged[atoms_[i]] += weights_[i];
  DiscreteMeasure out;
  out.dim_ = dim_;
  for (auto& [a, w] : merged) {
    out.atoms_.push_back(a);
    out.weights_.push_back(w);
  }
  return out;
}

DiscreteMeasure DiscreteMeasure::mixture(const std::vector<DiscreteMeasure>& ms, const Vec& w) {
  if (ms.empty() || ms.size() != w.size()) throw DomainError("mixture: length mismatch");
  const std::size_t d = ms.front().dim();
  std::vector<Vec> atoms;
  Vec weights;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    if (ms[k].dim() != d) throw DomainError("mixture: dimension mismatch");
    if (w[k] == 0.0) continue;
    for (std::size_t i = 0; i < ms[k].size(); ++i) {
      atoms.push_back(ms[k].atom(i));
      weights.push_back(w[k] * ms[k].weight(i));
    }
  }
  if (atoms.empty()) throw DomainError("mixture: all weights zero");
  double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& x : weights) x /= s;
  return DiscreteMeasure(d, std::move(atoms), std::move(weights)).canonical();
}

bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) return false;
  const auto ca = a.canonical(), cb = b.canonical();
  return ca.atoms() == cb.atoms() && ca.weights() == cb.weights();
}

PathMeasure::PathMeasure(std::size_t step_dim, std::size_t horizon, DiscreteMeasure base)
    : d_(step_dim), T_(horizon), base_(std::move(base)) {
  if (d_ == 0 || T_ == 0) throw DomainError("path measure: step dimension and horizon must be positive");
  if (base_.dim() != d_ * T_) throw DomainError("path measure: base dimension must equal d*T");
}

PathMeasure PathMeasure::mixture(const std::vector<PathMeasure>& ms, const Vec& w) {
  if (ms.empty()) throw DomainError("mixture: empty");
  std::vector<DiscreteMeasure> bases;
  for (const auto& m : ms) {
    if (m.step_dim() != ms.front().step_dim() || m.horizon() != ms.front().horizon())
      throw DomainError("mixture: path measure shape mismatch");
    bases.push_back(m.base());
  }
  return PathMeasure(ms.front().step_dim(), ms.front().horizon(), DiscreteMeasure::mixture(bases, w));
}

PathTree build_tree(const PathMeasure& mu) {
  const std::size_t d = mu.step_dim(), T = mu.horizon();
  const DiscreteMeasure base = mu.base().canonical();
  PathTree tree;
  tree.step_dim = d;
  tree.levels.resize(T + 1);
  tree.levels[0].push_back(PathTree::Node{{}, {}, {}, 1.0});
  // Prefix -> node index, one map per level.
  std::vector<std::map<Vec, int>> index(T + 1);
  index[0][Vec{}] = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const Vec& x = base.atom(i);
    int parent = 0;
    for (std::size_t t = 1; t <= T; ++t) {
      Vec prefix(x.begin(), x.begin() + static_cast<long>(t * d));
      auto [it, inserted] = index[t].try_emplace(prefix, static_cast<int>(tree.levels[t].size()));
      if (inserted) {
        PathTree::Node node;
        node.value.assign(x.begin() + static_cast<long>((t - 1) * d), x.begin() + static_cast<long>(t * d));
        tree.levels[t].push_back(std::move(node));
        tree.levels[t - 1][parent].children.push_back(it->second);
      }
      tree.levels[t][it->second].mass += base.weight(i);
      parent = it->second;
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (auto& node : tree.levels[t]) {
      double total = 0.0;
      for (int c : node.children) total += tree.levels[t + 1][c].mass;
      node.cond.clear();
      for (int c : node.children) node.cond.push_back(tree.levels[t + 1][c].mass / total);
    }
  }
  return tree;
}

}  // namespace ght
