#pragma once

#include <functional>
#include <vector>

#include "ght/measures.hpp"

namespace ght {

struct TransportPlan {
  struct Cell {
    int i;
    int j;
    double mass;
  };
  double cost = 0.0;
  std::vector<Cell> cells;  // basic cells of the optimal tree, zero-mass ones included
};

// Exact solution of min <C, pi> over couplings of a and b (both summing to 1)
// by the transportation simplex (network simplex on the bipartite graph).
// `cost` is row-major with a.size() rows.
TransportPlan solve_transport(const Vec& a, const Vec& b, const Vec& cost);

// (min_pi  sum ||x - y||^p pi(x, y))^(1/p).
double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

// Transport between joint path laws with the additive cost sum_t |x_t - y_t|^p,
// i.e. the unconstrained counterpart of the adapted distance.
double path_wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p);

// Nested (bicausal) distance by backward recursion on the conditional trees.
double adapted_wasserstein_p(const PathMeasure& mu, const PathMeasure& nu, double p);

// l1 distance between weight vectors over the union of supports, in [0, 2].
double total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace ght
