#pragma once

#include <cstddef>
#include <vector>

namespace ght {

using Vec = std::vector<double>;

// Point of the probability simplex.
class SimplexWeight {
 public:
  SimplexWeight() = default;
  // Validates nonnegativity and unit sum (tolerance 1e-12).
  explicit SimplexWeight(Vec entries);

  static SimplexWeight vertex(std::size_t n, std::size_t i);
  static SimplexWeight uniform(std::size_t n);

  const Vec& entries() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  Vec w_;
};

// Euclidean projection onto the simplex (sort-and-threshold).
SimplexWeight project_simplex(const Vec& u);

// Componentwise clamp into [lower, upper].
Vec project_cube(const Vec& u, const Vec& lower, const Vec& upper);

// Finitely supported probability measure on R^d.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::size_t dim, std::vector<Vec> atoms, Vec weights);

  static DiscreteMeasure dirac(const Vec& x);
  static DiscreteMeasure uniform(std::size_t dim, std::vector<Vec> atoms);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Vec>& atoms() const { return atoms_; }
  const Vec& weights() const { return weights_; }
  const Vec& atom(std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  // Duplicate atoms merged (exact equality), zero weights dropped, atoms
  // sorted lexicographically.
  DiscreteMeasure canonical() const;

  // Weighted mixture of measures of equal dimension.
  static DiscreteMeasure mixture(const std::vector<DiscreteMeasure>& ms, const Vec& w);

 private:
  std::size_t dim_ = 0;
  std::vector<Vec> atoms_;
  Vec weights_;
};

bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b);

// Law of a path (x_1, ..., x_T), x_t in R^d, stored as a measure on R^{dT}.
class PathMeasure {
 public:
  PathMeasure() = default;
  PathMeasure(std::size_t step_dim, std::size_t horizon, DiscreteMeasure base);

  std::size_t step_dim() const { return d_; }
  std::size_t horizon() const { return T_; }
  const DiscreteMeasure& base() const { return base_; }

  static PathMeasure mixture(const std::vector<PathMeasure>& ms, const Vec& w);

 private:
  std::size_t d_ = 0;
  std::size_t T_ = 0;
  DiscreteMeasure base_;
};

// Conditional-law tree of a path measure. Level t holds the distinct
// length-t prefixes; each node lists its children with conditional weights.
struct PathTree {
  struct Node {
    Vec value;                  // last block (empty for the root)
    std::vector<int> children;  // node indices on the next level
    Vec cond;                   // conditional weights of the children
    double mass = 0.0;          // marginal mass of the prefix
  };
  std::size_t step_dim = 0;
  std::vector<std::vector<Node>> levels;  // levels[0] = {root}
};

PathTree build_tree(const PathMeasure& mu);

}  // namespace ght
