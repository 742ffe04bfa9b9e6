#pragma once

#include "ght/measures.hpp"

namespace ght {

// sum_{k >= 1} k^s for s < -1, absolute error below 1e-9.
double convergent_power_sum(double s);

double normal_cdf(double x);
// Inverse of the standard normal distribution function on (0, 1).
double normal_quantile(double u);

// Exact W2 barycenter on the line: the weighted average of quantile functions.
DiscreteMeasure wasserstein2_barycenter_1d(const std::vector<DiscreteMeasure>& measures, const SimplexWeight& w);

// Quantile function of a one-dimensional discrete measure (left-continuous).
double quantile_1d(const DiscreteMeasure& mu, double u);

}  // namespace ght
