#include "ght/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ght/errors.hpp"
#include "ght/rng.hpp"

namespace ght {

namespace {

double resolve_c(const std::optional<double>& c, bool strict, std::vector<std::string>& notes) {
  if (c) {
    if (!(*c > 0.0)) throw DomainError("complexity: absolute constant c must be positive");
    return *c;
  }
  if (strict) throw DomainError("complexity: absolute constant c is not set (required in strict mode)");
  notes.push_back("absolute constant c not given; using c = 1");
  return 1.0;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string("complexity: ") + what + " must be positive");
}

void check_alpha(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("complexity: alpha must lie in (0, 1]");
}

double ceil_inv(double alpha) { return std::ceil(1.0 / alpha); }

double smooth_term(double eps_tilde, double L, int n, double alpha, double power) {
  const double e = power * n / alpha;
  return std::pow(eps_tilde, -e) * std::pow(L, e) * std::pow(1.0 + n / 4.0, e);
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

double sq(double x) { return x * x; }

}  // namespace

double static_log_exponent(double alpha, double diam, double eps_A, double lipschitz, double C_eta, double c,
                           double kappa) {
  const double inner = C_eta * 2.0 * c * ceil_inv(alpha) * std::log2(kappa);
  const double bracket =
      (std::log2(diam) - std::log2(eps_A / (3.0 * lipschitz)) + std::log2(std::max(1.0, inner))) / alpha;
  return std::max(0.0, std::ceil(bracket));
}

double implicit_depth_parameter(double scale, int n, double alpha, double W, double eps) {
  require_positive(eps, "accuracy");
  if (!(W >= 1.0)) throw DomainError("complexity: width parameter W must be >= 1");
  const double pre = scale * std::pow(static_cast<double>(n), alpha / 2.0);
  auto g = [&](double s) { return pre * (std::pow(W, -alpha * s) + 2.0 * std::pow(W, -s)); };
  if (g(0.0) <= eps) return 1.0;
  if (W == 1.0) throw DomainError("complexity: no depth parameter D reaches the accuracy with W = 1");
  double lo = 0.0, hi = 1.0;
  while (g(hi) > eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("complexity: implicit depth parameter out of range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= eps ? hi : lo) = mid;
  }
  double D = std::max(1.0, std::ceil(hi * hi - 1e-9 * hi * hi));
  while (D > 1.0 && g(std::sqrt(D - 1.0)) <= eps) D -= 1.0;
  while (g(std::sqrt(D)) > eps) D += 1.0;
  return D;
}

double capacity_constant(double c, int m, double alpha, double kappa, double diam) {
  return c * std::sqrt(static_cast<double>(m)) * ceil_inv(alpha) * std::log2(kappa) * std::pow(diam, alpha);
}

ComplexityReport complexity_static(const StaticComplexityInput& in) {
  ComplexityReport r;
  r.kind = in.kind;
  if (in.n < 1) throw DomainError("complexity: input dimension must be positive");
  check_alpha(in.alpha);
  require_positive(in.lipschitz, "Lipschitz constant");
  require_positive(in.diam, "diameter");
  require_positive(in.eps_A, "eps_A");
  require_positive(in.eps_Q, "eps_Q");
  if (!(in.kappa >= 1.0)) throw DomainError("complexity: metric capacity must be >= 1");
  if (!(in.C_eta >= 1.0)) throw DomainError("complexity: C_eta must be >= 1");
  r.c = resolve_c(in.c, in.strict, r.notes);

  const double k = static_log_exponent(in.alpha, in.diam, in.eps_A, in.lipschitz, in.C_eta, r.c, in.kappa);
  r.ln_N = std::log(in.kappa) * k;
  r.N = std::round(std::pow(in.kappa, k));
  if (in.modulus) {
    r.q = in.modulus(in.eps_Q);
  } else if (in.q) {
    r.q = *in.q;
  } else {
    throw DomainError("complexity: need a quantization level q or a modulus estimator");
  }
  if (r.q < 1) throw DomainError("complexity: quantization level must be positive");

  const double n = in.n, N = r.N;
  switch (in.kind) {
    case ActivationKind::Singular: {
      if (!in.W) throw DomainError("complexity: singular activations need the width parameter W");
      require_positive(*in.W, "W");
      r.W = in.W;
      r.D = in.D ? *in.D : implicit_depth_parameter(std::sqrt(N), in.n, in.alpha, *in.W, in.eps_A);
      require_positive(*r.D, "D");
      const double W = *in.W, D = *r.D;
      r.depth = (N - 1) * (1 + (64 * n * D + 3));
      r.width = n * (N - 2) + std::max(n, 5 * W + 13);
      r.param_count =
          (11.0 / 4.0 * n * n * sq(N - 1) - 1) * (N - 1) * sq(std::max(n + 3, 5 * W + 16)) * (64 * n * D + 4);
      break;
    }
    case ActivationKind::Smooth: {
      if (!in.eps_tilde) throw DomainError("complexity: smooth activations need eps_tilde");
      require_positive(*in.eps_tilde, "eps_tilde");
      r.eps_tilde = in.eps_tilde;
      r.depth = (N - 1) * (1 + smooth_term(*in.eps_tilde, in.lipschitz, in.n, in.alpha, 2.0));
      r.width = n * (N - 1) + 3;
      r.param_count = (11.0 / 4.0 * n * n * sq(N - 1) - 1) * (N - 1) * sq(n + 6) *
                      (smooth_term(*in.eps_tilde, in.lipschitz, in.n, in.alpha, 4.0) + 1);
      r.notes.push_back("smooth rows are order bounds evaluated with leading constant 1");
      break;
    }
    case ActivationKind::Classical: {
      r.width = n + N + 1;
      if (in.depth) {
        require_positive(*in.depth, "depth");
        r.depth = in.depth;
        r.param_count = sq(N + n + 1) * (*in.depth + 1);
      } else {
        r.notes.push_back("classical depth not given; parameter count left undefined");
      }
      break;
    }
  }
  return r;
}

ComplexityReport complexity_ffnn(const FfnnComplexityInput& in) {
  ComplexityReport r;
  r.kind = in.kind;
  if (in.n < 1 || in.m < 1) throw DomainError("complexity: dimensions must be positive");
  check_alpha(in.alpha);
  require_positive(in.lipschitz, "Lipschitz constant");
  require_positive(in.diam, "diameter");
  if (!(in.kappa >= 1.0)) throw DomainError("complexity: metric capacity must be >= 1");
  r.c = resolve_c(in.c, in.strict, r.notes);
  r.C_K = capacity_constant(r.c, in.m, in.alpha, in.kappa, in.diam);
  r.N = 1.0;
  r.ln_N = 0.0;

  const double n = in.n, m = in.m;
  switch (in.kind) {
    case ActivationKind::Singular: {
      if (!in.W) throw DomainError("complexity: singular activations need the width parameter W");
      require_positive(*in.W, "W");
      r.W = in.W;
      if (in.D) {
        r.D = in.D;
      } else if (in.eps) {
        r.D = implicit_depth_parameter(1.0, in.n, in.alpha, *in.W, *in.eps);
      } else {
        throw DomainError("complexity: need D or an accuracy eps to solve for D");
      }
      require_positive(*r.D, "D");
      const double W = *in.W, D = *r.D;
      r.depth = m * (1 + (64 * n * D + 3));
      r.width = n * (m - 1) + std::max(n, 5 * W + 13);
      r.param_count = (11.0 / 4.0 * n * n * m * m - 1) * m * sq(std::max(n + 3, 5 * W + 16)) * (64 * n * D + 4);
      break;
    }
    case ActivationKind::Smooth: {
      if (!in.eps_tilde) throw DomainError("complexity: smooth activations need eps_tilde");
      require_positive(*in.eps_tilde, "eps_tilde");
      r.eps_tilde = in.eps_tilde;
      r.depth = m * (1 + smooth_term(*in.eps_tilde, in.lipschitz, in.n, in.alpha, 2.0));
      r.width = n * m + 3;
      r.param_count = (11.0 / 4.0 * n * n * m * m - 1) * m * sq(n + 6) *
                      (smooth_term(*in.eps_tilde, in.lipschitz, in.n, in.alpha, 4.0) + 1);
      r.notes.push_back("smooth rows are order bounds evaluated with leading constant 1");
      break;
    }
    case ActivationKind::Classical: {
      r.width = n + m + 2;
      if (in.depth) {
        require_positive(*in.depth, "depth");
        r.depth = in.depth;
        r.param_count = sq(n + m + 2) * (*in.depth + 1);
      } else {
        r.notes.push_back("classical depth not given; parameter count left undefined");
      }
      break;
    }
  }
  return r;
}

std::vector<std::string> complexity_csv_header() {
  return {"activation", "depth", "width", "parameters", "implicit_D", "ln_N", "N", "q", "C_K"};
}

std::vector<std::string> complexity_csv_row(const ComplexityReport& r) {
  return {to_string(r.kind), fmt(r.depth), fmt(r.width), fmt(r.param_count), fmt(r.D), fmt(r.ln_N),
          fmt(r.N),          r.q > 0 ? std::to_string(r.q) : "-", fmt(r.C_K)};
}

namespace {

double dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += sq(a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

bool verify_packing(const std::vector<Vec>& cloud, std::size_t x0, double r, double delta,
                    const std::vector<std::size_t>& centers) {
  std::vector<int> owner(cloud.size(), -1);
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t z = 0; z < cloud.size(); ++z) {
      if (!(dist(cloud[z], cloud[centers[c]]) < delta * r)) continue;
      if (!(dist(cloud[z], cloud[x0]) < r)) return false;
      if (owner[z] >= 0) return false;
      owner[z] = static_cast<int>(c);
    }
  return true;
}

CapacityEstimate metric_capacity_estimate(const std::vector<Vec>& cloud, double delta, int trials,
                                          std::uint64_t seed) {
  if (cloud.size() < 2) throw DomainError("metric_capacity_estimate: need at least two points");
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("metric_capacity_estimate: delta must lie in (0, 1]");
  if (trials < 1) throw DomainError("metric_capacity_estimate: trials must be positive");
  for (const auto& x : cloud)
    if (x.size() != cloud.front().size()) throw DomainError("metric_capacity_estimate: mixed dimensions");
  const std::size_t n = cloud.size();
  Rng rng(seed);
  CapacityEstimate best;
  std::vector<char> used(n);
  for (int t = 0; t < trials; ++t) {
    const std::size_t x0 = rng.index(n);
    // Radii at which some ball changes: d(x0, z) or d(x_i, z) / delta.
    const std::size_t z = rng.index(n);
    double r = rng.uniform() < 0.5 ? dist(cloud[x0], cloud[z]) : dist(cloud[rng.index(n)], cloud[z]) / delta;
    if (!(r > 0.0)) continue;
    std::vector<std::size_t> order;
    for (std::size_t z = 0; z < n; ++z)
      if (dist(cloud[z], cloud[x0]) < r) order.push_back(z);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::fill(used.begin(), used.end(), 0);
    std::vector<std::size_t> centers;
    for (std::size_t c : order) {
      bool ok = true;
      for (std::size_t z = 0; z < n && ok; ++z)
        if (dist(cloud[z], cloud[c]) < delta * r) ok = !used[z] && dist(cloud[z], cloud[x0]) < r;
      if (!ok) continue;
      for (std::size_t z = 0; z < n; ++z)
        if (dist(cloud[z], cloud[c]) < delta * r) used[z] = 1;
      centers.push_back(c);
    }
    if (static_cast<int>(centers.size()) > best.k) {
      if (!verify_packing(cloud, x0, r, delta, centers))
        throw NumericError("metric_capacity_estimate: greedy packing failed verification");
      best = {static_cast<int>(centers.size()), x0, r, centers};
    }
  }
  return best;
}

}  // namespace ght
