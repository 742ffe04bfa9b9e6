#include "ght/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ght/errors.hpp"

namespace ght {

double convergent_power_sum(double s) {
  if (!(s < -1.0) || !std::isfinite(s)) throw DomainError("convergent_power_sum: requires s < -1");
  // Partial sum to K - 1, then Euler-Maclaurin for the tail starting at K:
  //   int_K^inf x^s dx + K^s / 2 - sum_j B_2j/(2j)! f^(2j-1)(K) + R.
  // Derivatives of x^s alternate in sign and decrease in magnitude, so the
  // remainder is bounded by the first omitted correction.
  const long K = 64;
  double head = 0.0;
  for (long k = K - 1; k >= 1; --k) head += std::pow(static_cast<double>(k), s);
  const double k = static_cast<double>(K);
  double tail = std::pow(k, s + 1.0) / (-s - 1.0) + 0.5 * std::pow(k, s);
  // f^(2j-1)(K) = s (s-1) ... (s-2j+2) K^(s-2j+1).
  static const double bern[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730};
  double fact = 1.0;  // (2j)!
  double falling = s;  // s (s-1) ... (s-2j+2)
  double last = 0.0;
  for (int j = 1; j <= 6; ++j) {
    fact *= (2.0 * j - 1.0) * (2.0 * j);
    if (j > 1) falling *= (s - (2.0 * j - 3.0)) * (s - (2.0 * j - 2.0));
    const double term = bern[j - 1] / fact * falling * std::pow(k, s - 2.0 * j + 1.0);
    tail -= term;
    last = std::abs(term);
  }
  if (last > 1e-10) throw NumericError("convergent_power_sum: tail correction did not converge");
  return head + tail;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal_quantile: argument must lie in (0, 1)");
  // Acklam's rational approximation followed by two Newton steps.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (u <= 1 - plow) {
    const double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - u;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2 * 3.14159265358979323846);
    if (pdf <= 0) break;
    x -= e / pdf;
  }
  return x;
}

double quantile_1d(const DiscreteMeasure& mu, double u) {
  if (mu.dim() != 1) throw UnsupportedError("quantile_1d: measure must be one-dimensional");
  std::vector<std::size_t> idx(mu.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return mu.atom(a)[0] < mu.atom(b)[0]; });
  double cum = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    cum += mu.weight(idx[k]);
    if (u <= cum) return mu.atom(idx[k])[0];
  }
  return mu.atom(idx.back())[0];
}

DiscreteMeasure wasserstein2_barycenter_1d(const std::vector<DiscreteMeasure>& measures, const SimplexWeight& w) {
  if (measures.empty() || measures.size() != w.size()) throw DomainError("barycenter: length mismatch");
  struct Sorted {
    Vec x, cum;
  };
  std::vector<Sorted> qs;
  Vec breaks{0.0, 1.0};
  for (const auto& m : measures) {
    if (m.dim() != 1) throw UnsupportedError("barycenter: only one-dimensional measures are supported");
    const DiscreteMeasure c = m.canonical();  // sorted atoms
    Sorted s;
    double cum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      cum += c.weight(i);
      s.x.push_back(c.atom(i)[0]);
      s.cum.push_back(cum);
      if (i + 1 < c.size()) breaks.push_back(cum);
    }
    s.cum.back() = 1.0;
    qs.push_back(std::move(s));
  }
  std::sort(breaks.begin(), breaks.end());
  Vec cuts;
  for (double b : breaks)
    if (cuts.empty() || b - cuts.back() > 1e-15) cuts.push_back(b);
  cuts.back() = 1.0;
  std::vector<Vec> atoms;
  Vec weights;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    double v = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const auto& s = qs[i];
      const auto pos = std::lower_bound(s.cum.begin(), s.cum.end(), mid) - s.cum.begin();
      v += w[i] * s.x[std::min<std::size_t>(static_cast<std::size_t>(pos), s.x.size() - 1)];
    }
    atoms.push_back({v});
    weights.push_back(cuts[k + 1] - cuts[k]);
  }
  double tot = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& x : weights) x /= tot;
  return DiscreteMeasure(1, std::move(atoms), std::move(weights)).canonical();
}

}  // namespace ght
