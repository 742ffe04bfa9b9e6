#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the solvers it checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "ght/measures.hpp"

namespace oracle {

using ght::Vec;

// min c.x subject to A x = b, x >= 0, by enumerating basic solutions.
inline double lp_vertex_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const int n = static_cast<int>(A.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  const int r = static_cast<int>(lu.rank());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(r);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == r) {
      Eigen::MatrixXd As(A.rows(), r);
      for (int k = 0; k < r; ++k) As.col(k) = A.col(pick[k]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
      if (qr.rank() < r) return;
      Eigen::VectorXd xs = qr.solve(b);
      if ((As * xs - b).norm() > 1e-9) return;
      double val = 0.0;
      for (int k = 0; k < r; ++k) {
        if (xs[k] < -1e-11) return;
        val += c[pick[k]] * xs[k];
      }
      best = std::min(best, val);
      return;
    }
    for (int j = start; j <= n - (r - depth); ++j) {
      pick[depth] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

inline double norm_p(const Vec& x, const Vec& y, std::size_t off, std::size_t d, double p) {
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += (x[off + k] - y[off + k]) * (x[off + k] - y[off + k]);
  return std::pow(std::sqrt(s), p);
}

// W_p by enumerating vertices of the transportation polytope.
inline double wasserstein_bruteforce(const ght::DiscreteMeasure& mu, const ght::DiscreteMeasure& nu, double p) {
  const int n = static_cast<int>(mu.size()), m = static_cast<int>(nu.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
  Eigen::VectorXd b(n + m), c(n * m);
  for (int i = 0; i < n; ++i) b[i] = mu.weight(i);
  for (int j = 0; j < m; ++j) b[n + j] = nu.weight(j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      A(i, i * m + j) = 1;
      A(n + j, i * m + j) = 1;
      c[i * m + j] = norm_p(mu.atom(i), nu.atom(j), 0, mu.dim(), p);
    }
  return std::pow(std::max(lp_vertex_min(A, b, c), 0.0), 1.0 / p);
}

// AW_p for T = 2 by enumerating vertices of the bicausal coupling polytope
// written as linear constraints on the joint coupling matrix.
inline double adapted_bruteforce_t2(const ght::PathMeasure& mu, const ght::PathMeasure& nu, double p) {
  const auto a = mu.base().canonical(), b = nu.base().canonical();
  const std::size_t d = mu.step_dim();
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  auto first = [&](const Vec& x) { return Vec(x.begin(), x.begin() + static_cast<long>(d)); };
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  auto var = [&](int i, int j) { return i * m + j; };
  for (int i = 0; i < n; ++i) {
    std::vector<double> r(n * m, 0);
    for (int j = 0; j < m; ++j) r[var(i, j)] = 1;
    rows.push_back(r);
    rhs.push_back(a.weight(i));
  }
  for (int j = 0; j < m; ++j) {
    std::vector<double> r(n * m, 0);
    for (int i = 0; i < n; ++i) r[var(i, j)] = 1;
    rows.push_back(r);
    rhs.push_back(b.weight(j));
  }
  // mu(x1) pi(x1 x2, y1) - mu(x1 x2) pi(x1, y1) = 0 and the mirror condition.
  for (int side = 0; side < 2; ++side) {
    const auto& P = side == 0 ? a : b;
    const auto& Q = side == 0 ? b : a;
    const int np = static_cast<int>(P.size()), nq = static_cast<int>(Q.size());
    std::map<Vec, double> prefix_mass;
    for (int i = 0; i < np; ++i) prefix_mass[first(P.atom(i))] += P.weight(i);
    std::vector<Vec> qfirst;
    for (int j = 0; j < nq; ++j) qfirst.push_back(first(Q.atom(j)));
    std::sort(qfirst.begin(), qfirst.end());
    qfirst.erase(std::unique(qfirst.begin(), qfirst.end()), qfirst.end());
    for (int i = 0; i < np; ++i)
      for (const auto& y1 : qfirst) {
        std::vector<double> r(n * m, 0);
        const Vec x1 = first(P.atom(i));
        for (int i2 = 0; i2 < np; ++i2) {
          if (first(P.atom(i2)) != x1) continue;
          for (int j = 0; j < nq; ++j) {
            if (first(Q.atom(j)) != y1) continue;
            double coef = -P.weight(i);
            if (i2 == i) coef += prefix_mass[x1];
            const int v = side == 0 ? var(i2, j) : var(j, i2);
            r[v] += coef;
          }
        }
        rows.push_back(r);
        rhs.push_back(0.0);
      }
  }
  Eigen::MatrixXd A(rows.size(), n * m);
  Eigen::VectorXd B(rows.size()), C(n * m);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (int v = 0; v < n * m; ++v) A(k, v) = rows[k][v];
    B[k] = rhs[k];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      C[var(i, j)] = norm_p(a.atom(i), b.atom(j), 0, d, p) + norm_p(a.atom(i), b.atom(j), d, d, p);
  return std::pow(std::max(lp_vertex_min(A, B, C), 0.0), 1.0 / p);
}

// Euclidean projection onto the simplex by trying every support set.
inline Vec simplex_qp_bruteforce(const Vec& u) {
  const int n = static_cast<int>(u.size());
  Vec best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n); ++mask) {
    double s = 0;
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) {
        s += u[i];
        ++k;
      }
    const double tau = (s - 1.0) / k;
    Vec w(n, 0.0);
    bool ok = true;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) {
        w[i] = u[i] - tau;
        if (w[i] < -1e-15) ok = false;
      }
    if (!ok) continue;
    double dist = 0;
    for (int i = 0; i < n; ++i) dist += (w[i] - u[i]) * (w[i] - u[i]);
    if (dist < best_d) {
      best_d = dist;
      best = w;
    }
  }
  return best;
}

// W_1 on the line as the integral of |F - G| over the merged breakpoints.
inline double w1_cdf_1d(const ght::DiscreteMeasure& mu, const ght::DiscreteMeasure& nu) {
  std::vector<std::pair<double, double>> ev;  // (position, signed mass)
  for (std::size_t i = 0; i < mu.size(); ++i) ev.push_back({mu.atom(i)[0], mu.weight(i)});
  for (std::size_t j = 0; j < nu.size(); ++j) ev.push_back({nu.atom(j)[0], -nu.weight(j)});
  std::sort(ev.begin(), ev.end());
  double diff = 0, total = 0;
  for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
    diff += ev[k].second;
    total += std::abs(diff) * (ev[k + 1].first - ev[k].first);
  }
  return total;
}

// Partial sum to K plus the midpoint of the integral tail bracket.
inline double power_sum_oracle(double s, long K = 2000000) {
  double head = 0;
  for (long k = K; k >= 1; --k) head += std::pow(static_cast<double>(k), s);
  const double lo = std::pow(K + 1.0, s + 1) / (-s - 1), hi = std::pow(static_cast<double>(K), s + 1) / (-s - 1);
  return head + 0.5 * (lo + hi);
}

}  // namespace oracle

namespace oracle {

// Plain ReLU network evaluation written independently of the codec: reads
// the blocks in order (A, b, alpha) per hidden layer, then (A, c).
inline Vec relu_reference(const std::vector<int>& dims, const Vec& theta, const Vec& x) {
  std::size_t pos = 0;
  Vec h = x;
  const std::size_t J = dims.size() - 2;
  for (std::size_t j = 0; j < J; ++j) {
    const int in = dims[j], out = dims[j + 1];
    Vec z(out, 0.0);
    for (int r = 0; r < out; ++r)
      for (int k = 0; k < in; ++k) z[r] += theta[pos + r * in + k] * h[k];
    pos += static_cast<std::size_t>(in) * out;
    for (int r = 0; r < out; ++r) z[r] = std::max(0.0, z[r] + theta[pos + r]);
    pos += out;
    pos += 2 * static_cast<std::size_t>(out);
    h = z;
  }
  const int in = dims[J], out = dims[J + 1];
  Vec y(out, 0.0);
  for (int r = 0; r < out; ++r)
    for (int k = 0; k < in; ++k) y[r] += theta[pos + r * in + k] * h[k];
  pos += static_cast<std::size_t>(in) * out;
  for (int r = 0; r < out; ++r) y[r] += theta[pos + r];
  return y;
}

// Metric capacity of a small cloud by exhaustive search over x0, every radius
// at which a ball changes, and every subset of candidate centres.
inline int capacity_bruteforce(const std::vector<Vec>& cloud, double delta) {
  const std::size_t n = cloud.size();
  auto d = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = 0; k < cloud[a].size(); ++k) s += (cloud[a][k] - cloud[b][k]) * (cloud[a][k] - cloud[b][k]);
    return std::sqrt(s);
  };
  int best = 0;
  for (std::size_t x0 = 0; x0 < n; ++x0) {
    std::vector<double> radii;
    double top = 0;
    for (std::size_t a = 0; a < n; ++a) {
      radii.push_back(d(x0, a));
      for (std::size_t b = 0; b < n; ++b) radii.push_back(d(a, b) / delta);
    }
    for (double r : radii) top = std::max(top, r);
    radii.push_back(2 * top + 1);
    for (double r : radii) {
      if (!(r > 0)) continue;
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        const int k = __builtin_popcount(mask);
        if (k <= best) continue;
        bool ok = true;
        std::vector<int> hits(n, 0);
        for (std::size_t c = 0; c < n && ok; ++c) {
          if (!(mask >> c & 1u)) continue;
          for (std::size_t z = 0; z < n && ok; ++z)
            if (d(c, z) < delta * r) ok = d(x0, z) < r && ++hits[z] == 1;
        }
        if (ok) best = k;
      }
    }
  }
  return best;
}

}  // namespace oracle

namespace oracle {

// W_1 between a discrete measure on the line and N(m, s^2): trapezoid rule for
// the integral of |F - Phi| on a fine grid over +-12 s around the support.
inline double w1_to_normal(const ght::DiscreteMeasure& mu, double m, double s, int steps = 400000) {
  std::vector<std::pair<double, double>> at;
  for (std::size_t i = 0; i < mu.size(); ++i) at.push_back({mu.atom(i)[0], mu.weight(i)});
  std::sort(at.begin(), at.end());
  const double lo = std::min(at.front().first, m - 12 * s), hi = std::max(at.back().first, m + 12 * s);
  const double h = (hi - lo) / steps;
  std::size_t k = 0;
  double F = 0, total = 0, prev = 0;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    while (k < at.size() && at[k].first <= x) F += at[k++].second;
    const double phi = 0.5 * std::erfc(-(x - m) / (s * std::sqrt(2.0)));
    const double g = std::abs(F - phi);
    if (i > 0) total += 0.5 * h * (g + prev);
    prev = g;
  }
  return total;
}

}  // namespace oracle
