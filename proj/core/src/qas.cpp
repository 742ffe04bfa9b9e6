#include "ght/qas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ght/errors.hpp"
#include "ght/special.hpp"
#include "ght/transport.hpp"

namespace ght {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class P>
const P& as(const QasPoint& y, const char* what) {
  if (const P* v = std::get_if<P>(&y)) return *v;
  throw DomainError(std::string(what) + ": point type does not match the space");
}

// Largest-remainder rounding of masses to integer counts summing to q.
std::vector<int> apportion(const Vec& mass, int q) {
  const std::size_t n = mass.size();
  std::vector<int> cnt(n);
  Vec rem(n);
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = mass[i] * q;
    cnt[i] = static_cast<int>(std::floor(x + 1e-12));
    rem[i] = x - cnt[i];
    used += cnt[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < q; k = (k + 1) % n, ++used) cnt[order[k]]++;
  for (std::size_t k = n; used > q && k-- > 0;)
    while (used > q && cnt[order[k]] > 0) {
      cnt[order[k]]--;
      --used;
    }
  return cnt;
}

double sq_dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// Farthest-point selection of at most q atoms; returns code atoms with
// multiplicities from the snapped masses.
std::vector<Vec> kcenter_code(const DiscreteMeasure& y, int q) {
  const DiscreteMeasure c = y.canonical();
  const std::size_t n = c.size();
  std::vector<std::size_t> centers;
  if (static_cast<int>(n) <= q) {
    for (std::size_t i = 0; i < n; ++i) centers.push_back(i);
  } else {
    std::size_t first = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (c.weight(i) > c.weight(first)) first = i;
    centers.push_back(first);
    Vec dmin(n);
    for (std::size_t i = 0; i < n; ++i) dmin[i] = sq_dist(c.atom(i), c.atom(first));
    while (static_cast<int>(centers.size()) < q) {
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (dmin[i] > dmin[far]) far = i;
      if (dmin[far] == 0.0) break;
      centers.push_back(far);
      for (std::size_t i = 0; i < n; ++i) dmin[i] = std::min(dmin[i], sq_dist(c.atom(i), c.atom(far)));
    }
  }
  Vec mass(centers.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double dd = sq_dist(c.atom(i), c.atom(centers[k]));
      if (dd < bd) {
        bd = dd;
        best = k;
      }
    }
    mass[best] += c.weight(i);
  }
  const auto cnt = apportion(mass, q);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < centers.size(); ++k)
    for (int r = 0; r < cnt[k]; ++r) out.push_back(c.atom(centers[k]));
  return out;
}

Vec flatten(const std::vector<Vec>& atoms) {
  Vec z;
  for (const auto& a : atoms) z.insert(z.end(), a.begin(), a.end());
  return z;
}

// Uniform empirical measure with repeated atoms merged as count / q.
DiscreteMeasure counted_uniform(std::size_t dim, const std::vector<Vec>& atoms) {
  std::map<Vec, int> cnt;
  for (const auto& a : atoms) cnt[a]++;
  std::vector<Vec> xs;
  Vec w;
  const double q = static_cast<double>(atoms.size());
  for (const auto& [a, c] : cnt) {
    xs.push_back(a);
    w.push_back(c / q);
  }
  return DiscreteMeasure(dim, std::move(xs), std::move(w));
}

double coef(const Vec& c, std::size_t s) { return s < c.size() ? c[s] : 0.0; }

bool is_vertex(const SimplexWeight& w, std::size_t& idx) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] == 1.0) {
      idx = i;
      return true;
    }
  return false;
}

}  // namespace

QasSpace make_wasserstein_convex(int d, double p, double moment, bool bounded, Vec lower, Vec upper,
                                 bool barycenter_mixer) {
  if (d < 1) throw DomainError("wasserstein_convex: dimension must be positive");
  if (!(p >= 1.0)) throw DomainError("wasserstein_convex: p must be >= 1");
  if (bounded) {
    if (lower.size() != static_cast<std::size_t>(d) || upper.size() != static_cast<std::size_t>(d))
      throw DomainError("wasserstein_convex: box bounds must have length d");
    for (int k = 0; k < d; ++k)
      if (!(lower[k] <= upper[k])) throw DomainError("wasserstein_convex: lower bound exceeds upper bound");
    if (!(moment >= p)) throw DomainError("wasserstein_convex: bounded base set requires moment order >= p");
  } else if (!(moment > p)) {
    throw DomainError("wasserstein_convex: unbounded base set requires moment order > p");
  }
  if (barycenter_mixer && (d != 1 || p != 2.0))
    throw DomainError("wasserstein_convex: barycenter mixing requires d = 1 and p = 2");
  return WassersteinConvexSpace{d, p, moment, bounded, std::move(lower), std::move(upper), barycenter_mixer};
}

QasSpace make_adapted_empirical(int d, int T, double p) {
  if (d < 1 || T < 1) throw DomainError("adapted_empirical: d and T must be positive");
  if (!(p >= 1.0)) throw DomainError("adapted_empirical: p must be >= 1");
  return AdaptedEmpiricalSpace{d, T, p};
}

QasSpace make_linear_schauder(double exponent, double weight_decay) {
  if (!(exponent >= 1.0)) throw DomainError("linear_schauder: norm exponent must be >= 1");
  return LinearSchauderSpace{exponent, weight_decay};
}

Vec default_knots(double horizon) {
  Vec k;
  for (double t = 0.1; t <= horizon; t *= 2.0) k.push_back(t);
  return k;
}

QasSpace make_forward_rate(double alpha, Vec knots, Vec grid, double horizon) {
  if (!(alpha > 3.0)) throw DomainError("forward_rate: alpha must exceed 3");
  if (knots.empty()) knots = default_knots(horizon);
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i] > 0.0)) throw DomainError("forward_rate: knot times must be positive");
    if (i > 0 && !(knots[i] > knots[i - 1])) throw DomainError("forward_rate: knot times must increase");
  }
  if (grid.empty())
    for (int i = 0; i <= 100; ++i) grid.push_back(horizon * i / 100.0);
  return ForwardRateRkhsSpace{alpha, std::move(knots), std::move(grid)};
}

QasSpace make_gaussian_spd(int d) {
  if (d < 1) throw DomainError("gaussian_spd: dimension must be positive");
  return GaussianSpdSpace{d};
}

QasSpace make_exponential_family(int d, std::vector<std::function<double(const Vec&)>> statistics) {
  if (d < 1) throw DomainError("exponential_family: dimension must be positive");
  if (!statistics.empty() && statistics.size() != static_cast<std::size_t>(d))
    throw DomainError("exponential_family: need one statistic per parameter");
  return ExponentialFamilySpace{d, std::move(statistics)};
}

std::string space_kind(const QasSpace& space) {
  return std::visit(overloaded{[](const WassersteinConvexSpace&) { return std::string("wasserstein_convex"); },
                               [](const AdaptedEmpiricalSpace&) { return std::string("adapted_empirical"); },
                               [](const LinearSchauderSpace&) { return std::string("linear_schauder"); },
                               [](const ForwardRateRkhsSpace&) { return std::string("forward_rate_rkhs"); },
                               [](const GaussianSpdSpace&) { return std::string("gaussian_spd"); },
                               [](const ExponentialFamilySpace&) { return std::string("exponential_family"); }},
                    space);
}

double forward_rate_kernel(double alpha, double t, double s) {
  const double m = std::min(t, s);
  if (m <= 0.0) return 0.0;
  return std::pow(m + 1.0, -alpha) * (std::pow(m + 1.0, alpha) - m - 1.0) / (alpha - 1.0);
}

double forward_rate_curve(const ForwardRateRkhsSpace& space, const Coefficients& c, double t) {
  double v = 0;
  for (std::size_t s = 0; s < c.c.size(); ++s) v += c.c[s] * forward_rate_kernel(space.alpha, space.knots.at(s), t);
  return v;
}

std::size_t code_length(const QasSpace& space, int q) {
  if (q < 1) throw DomainError("code_length: level must be positive");
  return std::visit(overloaded{[&](const WassersteinConvexSpace& s) { return static_cast<std::size_t>(s.d) * q; },
                               [&](const AdaptedEmpiricalSpace& s) { return static_cast<std::size_t>(s.d * s.T) * q; },
                               [&](const LinearSchauderSpace&) { return static_cast<std::size_t>(q); },
                               [&](const ForwardRateRkhsSpace&) { return static_cast<std::size_t>(q); },
                               [&](const GaussianSpdSpace& s) {
                                 return static_cast<std::size_t>(s.d + s.d * (s.d + 1) / 2);
                               },
                               [&](const ExponentialFamilySpace& s) { return static_cast<std::size_t>(s.d); }},
                    space);
}

MixingConstant mixing_constant(const QasSpace& space) {
  return std::visit(overloaded{[](const WassersteinConvexSpace& s) {
                                 return s.barycenter_mixer ? MixingConstant{2.0, 2.0} : MixingConstant{1.0, s.p};
                               },
                               [](const AdaptedEmpiricalSpace& s) { return MixingConstant{1.0, s.p}; },
                               [](const LinearSchauderSpace&) { return MixingConstant{1.0, 1.0}; },
                               [](const ForwardRateRkhsSpace&) { return MixingConstant{1.0, 1.0}; },
                               [](const GaussianSpdSpace&) { return MixingConstant{2.0, 2.0}; },
                               [](const ExponentialFamilySpace&) { return MixingConstant{1.0, 1.0}; }},
                    space);
}

void check_point(const QasSpace& space, const QasPoint& y) {
  std::visit(overloaded{[&](const WassersteinConvexSpace& s) {
                          const auto& m = as<DiscreteMeasure>(y, "wasserstein_convex");
                          if (static_cast<int>(m.dim()) != s.d) throw DomainError("wasserstein_convex: measure dimension mismatch");
                        },
                        [&](const AdaptedEmpiricalSpace& s) {
                          const auto& m = as<PathMeasure>(y, "adapted_empirical");
                          if (static_cast<int>(m.step_dim()) != s.d || static_cast<int>(m.horizon()) != s.T)
                            throw DomainError("adapted_empirical: path measure shape mismatch");
                        },
                        [&](const LinearSchauderSpace&) { as<Coefficients>(y, "linear_schauder"); },
                        [&](const ForwardRateRkhsSpace& s) {
                          if (as<Coefficients>(y, "forward_rate_rkhs").c.size() > s.knots.size())
                            throw DomainError("forward_rate_rkhs: more coefficients than knots");
                        },
                        [&](const GaussianSpdSpace& s) {
                          if (static_cast<int>(as<GaussianMeasure>(y, "gaussian_spd").dim()) != s.d)
                            throw DomainError("gaussian_spd: dimension mismatch");
                        },
                        [&](const ExponentialFamilySpace& s) {
                          const auto& t = as<NaturalParameter>(y, "exponential_family").theta;
                          if (static_cast<int>(t.size()) != s.d) throw DomainError("exponential_family: dimension mismatch");
                        }},
             space);
}

double distance(const QasSpace& space, const QasPoint& a, const QasPoint& b) {
  check_point(space, a);
  check_point(space, b);
  return std::visit(
      overloaded{[&](const WassersteinConvexSpace& s) {
                   return wasserstein_p(std::get<DiscreteMeasure>(a), std::get<DiscreteMeasure>(b), s.p);
                 },
                 [&](const AdaptedEmpiricalSpace& s) {
                   return adapted_wasserstein_p(std::get<PathMeasure>(a), std::get<PathMeasure>(b), s.p);
                 },
                 [&](const LinearSchauderSpace& s) {
                   const Vec& x = std::get<Coefficients>(a).c;
                   const Vec& y = std::get<Coefficients>(b).c;
                   double acc = 0;
                   for (std::size_t k = 0; k < std::max(x.size(), y.size()); ++k)
                     acc += std::pow(1.0 + k, s.weight_decay) * std::pow(std::abs(coef(x, k) - coef(y, k)), s.exponent);
                   return std::pow(acc, 1.0 / s.exponent);
                 },
                 [&](const ForwardRateRkhsSpace& s) {
                   const Vec& x = std::get<Coefficients>(a).c;
                   const Vec& y = std::get<Coefficients>(b).c;
                   const std::size_t n = std::max(x.size(), y.size());
                   double acc = 0;
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       acc += (coef(x, i) - coef(y, i)) * (coef(x, j) - coef(y, j)) *
                              forward_rate_kernel(s.alpha, s.knots[i], s.knots[j]);
                   return std::sqrt(std::max(acc, 0.0));
                 },
                 [&](const GaussianSpdSpace&) {
                   return gaussian_distance(std::get<GaussianMeasure>(a), std::get<GaussianMeasure>(b));
                 },
                 [&](const ExponentialFamilySpace&) {
                   return std::sqrt(sq_dist(std::get<NaturalParameter>(a).theta, std::get<NaturalParameter>(b).theta));
                 }},
      space);
}

QasPoint mix(const QasSpace& space, const SimplexWeight& w, const std::vector<QasPoint>& points) {
  if (points.empty()) throw DomainError("mix: no points");
  if (points.size() != w.size()) throw DomainError("mix: weight and point counts differ");
  for (const auto& y : points) check_point(space, y);
  std::size_t vtx;
  if (is_vertex(w, vtx)) return points[vtx];
  const Vec& wv = w.entries();
  return std::visit(
      overloaded{[&](const WassersteinConvexSpace& s) -> QasPoint {
                   std::vector<DiscreteMeasure> ms;
                   for (const auto& y : points) ms.push_back(std::get<DiscreteMeasure>(y));
                   if (s.barycenter_mixer) return wasserstein2_barycenter_1d(ms, w);
                   return DiscreteMeasure::mixture(ms, wv);
                 },
                 [&](const AdaptedEmpiricalSpace&) -> QasPoint {
                   std::vector<PathMeasure> ms;
                   for (const auto& y : points) ms.push_back(std::get<PathMeasure>(y));
                   return PathMeasure::mixture(ms, wv);
                 },
                 [&](const auto&) -> QasPoint {
                   return std::visit(
                       overloaded{[&](const Coefficients&) -> QasPoint {
                                    std::size_t n = 0;
                                    for (const auto& y : points) n = std::max(n, std::get<Coefficients>(y).c.size());
                                    Vec c(n, 0.0);
                                    for (std::size_t i = 0; i < points.size(); ++i) {
                                      const Vec& ci = std::get<Coefficients>(points[i]).c;
                                      for (std::size_t k = 0; k < ci.size(); ++k) c[k] += wv[i] * ci[k];
                                    }
                                    return Coefficients{c};
                                  },
                                  [&](const GaussianMeasure& g0) -> QasPoint {
                                    Eigen::VectorXd m = Eigen::VectorXd::Zero(g0.mean().size());
                                    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g0.cov().rows(), g0.cov().cols());
                                    for (std::size_t i = 0; i < points.size(); ++i) {
                                      const auto& g = std::get<GaussianMeasure>(points[i]);
                                      m += wv[i] * g.mean();
                                      L += wv[i] * spd_log(g.cov());
                                    }
                                    Eigen::MatrixXd S = sym_exp(L);
                                    S = 0.5 * (S + S.transpose());
                                    return GaussianMeasure(m, S);
                                  },
                                  [&](const NaturalParameter& t0) -> QasPoint {
                                    Vec t(t0.theta.size(), 0.0);
                                    for (std::size_t i = 0; i < points.size(); ++i) {
                                      const Vec& ti = std::get<NaturalParameter>(points[i]).theta;
                                      for (std::size_t k = 0; k < t.size(); ++k) t[k] += wv[i] * ti[k];
                                    }
                                    return NaturalParameter{t};
                                  },
                                  [&](const auto&) -> QasPoint { throw DomainError("mix: unexpected point type"); }},
                       points.front());
                 }},
      space);
}

int adapted_cells_per_axis(const AdaptedEmpiricalSpace& s, int q) {
  const double r = s.d == 1 ? 1.0 / (s.T + 1) : 1.0 / (s.d * s.T);
  return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(q), r) + 1e-9)));
}

double adapted_snap(int cells, double x) {
  const double c = std::min(std::max(x, 0.0), 1.0);
  const int i = std::min(cells - 1, static_cast<int>(std::floor(c * cells)));
  return (i + 0.5) / cells;
}

QasPoint quantize(const QasSpace& space, const QuantizationCode& code) {
  if (code.q < 1) throw DomainError("quantize: level must be positive");
  if (code.z.size() != code_length(space, code.q)) throw DomainError("quantize: code length does not match the level");
  for (double v : code.z)
    if (!std::isfinite(v)) throw DomainError("quantize: non-finite code entry");
  const Vec& z = code.z;
  return std::visit(
      overloaded{[&](const WassersteinConvexSpace& s) -> QasPoint {
                   std::vector<Vec> atoms;
                   for (int k = 0; k < code.q; ++k) {
                     Vec a(z.begin() + k * s.d, z.begin() + (k + 1) * s.d);
                     if (s.bounded) a = project_cube(a, s.lower, s.upper);
                     atoms.push_back(std::move(a));
                   }
                   return counted_uniform(s.d, atoms);
                 },
                 [&](const AdaptedEmpiricalSpace& s) -> QasPoint {
                   const int cells = adapted_cells_per_axis(s, code.q);
                   const std::size_t len = static_cast<std::size_t>(s.d * s.T);
                   std::vector<Vec> atoms;
                   for (int k = 0; k < code.q; ++k) {
                     Vec a(len);
                     for (std::size_t i = 0; i < len; ++i) a[i] = adapted_snap(cells, z[k * len + i]);
                     atoms.push_back(std::move(a));
                   }
                   return PathMeasure(s.d, s.T, counted_uniform(len, atoms));
                 },
                 [&](const LinearSchauderSpace&) -> QasPoint { return Coefficients{z}; },
                 [&](const ForwardRateRkhsSpace& s) -> QasPoint {
                   if (z.size() > s.knots.size()) throw DomainError("quantize: level exceeds the number of knots");
                   return Coefficients{z};
                 },
                 [&](const GaussianSpdSpace& s) -> QasPoint {
                   Eigen::VectorXd m(s.d);
                   for (int k = 0; k < s.d; ++k) m[k] = z[k];
                   Eigen::MatrixXd S = sym_exp(vec_to_sym(Vec(z.begin() + s.d, z.end()), s.d));
                   S = 0.5 * (S + S.transpose());
                   return GaussianMeasure(m, S);
                 },
                 [&](const ExponentialFamilySpace& s) -> QasPoint {
                   return NaturalParameter{project_cube(z, Vec(s.d, 0.0), Vec(s.d, 1.0))};
                 }},
      space);
}

QasPoint attention_points(const QasSpace& space, const Vec& u, const std::vector<QasPoint>& quantized) {
  if (u.size() != quantized.size()) throw DomainError("attention: logits and codes differ in length");
  return mix(space, project_simplex(u), quantized);
}

QasPoint attention(const QasSpace& space, const Vec& u, const std::vector<QuantizationCode>& codes) {
  if (codes.empty()) throw DomainError("attention: no codes");
  for (const auto& c : codes)
    if (c.q != codes.front().q) throw DomainError("attention: codes use different levels");
  std::vector<QasPoint> pts;
  for (const auto& c : codes) pts.push_back(quantize(space, c));
  return attention_points(space, u, pts);
}

EncodeResult encode_point(const QasSpace& space, const QasPoint& y, int q) {
  if (q < 1) throw DomainError("encode_point: level must be positive");
  check_point(space, y);
  QuantizationCode code;
  code.q = q;
  std::visit(overloaded{[&](const WassersteinConvexSpace& s) {
                          const auto& m = std::get<DiscreteMeasure>(y);
                          if (s.d == 1) {
                            for (int k = 1; k <= q; ++k) code.z.push_back(quantile_1d(m, (2.0 * k - 1.0) / (2.0 * q)));
                          } else {
                            code.z = flatten(kcenter_code(m, q));
                          }
                        },
                        [&](const AdaptedEmpiricalSpace& s) {
                          const auto& m = std::get<PathMeasure>(y).base();
                          const int cells = adapted_cells_per_axis(s, q);
                          std::vector<Vec> atoms;
                          for (const auto& a : m.atoms()) {
                            Vec b(a.size());
                            for (std::size_t i = 0; i < a.size(); ++i) b[i] = adapted_snap(cells, a[i]);
                            atoms.push_back(std::move(b));
                          }
                          const DiscreteMeasure snapped = DiscreteMeasure(m.dim(), atoms, m.weights()).canonical();
                          const auto cnt = apportion(snapped.weights(), q);
                          for (std::size_t k = 0; k < snapped.size(); ++k)
                            for (int r = 0; r < cnt[k]; ++r)
                              code.z.insert(code.z.end(), snapped.atom(k).begin(), snapped.atom(k).end());
                        },
                        [&](const LinearSchauderSpace&) {
                          const Vec& c = std::get<Coefficients>(y).c;
                          for (int k = 0; k < q; ++k) code.z.push_back(coef(c, k));
                        },
                        [&](const ForwardRateRkhsSpace& s) {
                          const Vec& c = std::get<Coefficients>(y).c;
                          const int qq = std::min<int>(q, static_cast<int>(s.knots.size()));
                          code.q = qq;
                          for (int k = 0; k < qq; ++k) code.z.push_back(coef(c, k));
                        },
                        [&](const GaussianSpdSpace& s) {
                          const auto& g = std::get<GaussianMeasure>(y);
                          for (int k = 0; k < s.d; ++k) code.z.push_back(g.mean()[k]);
                          const Vec l = sym_to_vec(spd_log(g.cov()));
                          code.z.insert(code.z.end(), l.begin(), l.end());
                        },
                        [&](const ExponentialFamilySpace& s) {
                          code.z = project_cube(std::get<NaturalParameter>(y).theta, Vec(s.d, 0.0), Vec(s.d, 1.0));
                        }},
             space);
  EncodeResult r{code, 0.0};
  r.error = distance(space, quantize(space, code), y);
  return r;
}

int quantization_modulus_estimate(const QasSpace& space, const std::vector<QasPoint>& sample, double eps, int q_max) {
  if (!(eps > 0.0)) throw DomainError("quantization_modulus_estimate: eps must be positive");
  if (sample.empty()) throw DomainError("quantization_modulus_estimate: empty sample");
  int best_q = 1;
  double best_err = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= q_max; ++q) {
    double worst = 0;
    for (const auto& y : sample) {
      worst = std::max(worst, encode_point(space, y, q).error);
      if (worst >= eps && worst >= best_err) break;
    }
    if (worst < eps) return q;
    if (worst < best_err) {
      best_err = worst;
      best_q = q;
    }
  }
  throw CappedSearchError("quantization_modulus_estimate: no level up to the cap reaches the requested accuracy", best_q);
}

double simplicial_defect(const QasSpace& space, const SimplexWeight& w, const std::vector<QasPoint>& points) {
  const QasPoint eta = mix(space, w, points);
  const auto [C, p] = mixing_constant(space);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < points.size(); ++j)
      if (w[j] > 0) acc += w[j] * std::pow(distance(space, points[i], points[j]), p);
    best = std::min(best, C * std::pow(acc, 1.0 / p) - distance(space, eta, points[i]));
  }
  return best;
}

QuantizationCode refine_code(const QasSpace& space, const QuantizationCode& code) {
  if (code.z.size() != code_length(space, code.q)) throw DomainError("refine_code: invalid code");
  return std::visit(
      overloaded{[&](const WassersteinConvexSpace&) {
                   QuantizationCode r{{}, 2 * code.q};
                   r.z.reserve(2 * code.z.size());
                   r.z.insert(r.z.end(), code.z.begin(), code.z.end());
                   r.z.insert(r.z.end(), code.z.begin(), code.z.end());
                   return r;
                 },
                 [&](const AdaptedEmpiricalSpace& s) {
                   // Finer grids whose cell count is an odd multiple keep the old centres.
                   const int cells = adapted_cells_per_axis(s, code.q);
                   for (long k = 2; k < 1000000; ++k) {
                     const long q2 = k * code.q;
                     if (q2 > std::numeric_limits<int>::max()) break;
                     const int c2 = adapted_cells_per_axis(s, static_cast<int>(q2));
                     if (c2 % cells != 0 || (c2 / cells) % 2 == 0) continue;
                     const std::size_t len = static_cast<std::size_t>(s.d * s.T);
                     QuantizationCode r{{}, static_cast<int>(q2)};
                     for (int j = 0; j < code.q; ++j) {
                       Vec snapped(len);
                       for (std::size_t i = 0; i < len; ++i) snapped[i] = adapted_snap(cells, code.z[j * len + i]);
                       for (long rep = 0; rep < k; ++rep) r.z.insert(r.z.end(), snapped.begin(), snapped.end());
                     }
                     return r;
                   }
                   throw NumericError("refine_code: no nested grid level found");
                 },
                 [&](const ForwardRateRkhsSpace& s) {
                   if (code.q + 1 > static_cast<int>(s.knots.size()))
                     throw DomainError("refine_code: no further knots available");
                   QuantizationCode r{code.z, code.q + 1};
                   r.z.push_back(0.0);
                   return r;
                 },
                 [&](const LinearSchauderSpace&) {
                   QuantizationCode r{code.z, code.q + 1};
                   r.z.push_back(0.0);
                   return r;
                 },
                 [&](const auto&) { return QuantizationCode{code.z, code.q + 1}; }},
      space);
}

double exponential_family_energy(const ExponentialFamilySpace& s, const NaturalParameter& theta, const Vec& path) {
  if (s.statistics.size() != theta.theta.size()) throw DomainError("exponential_family_energy: statistics not configured");
  double e = 0;
  for (std::size_t k = 0; k < s.statistics.size(); ++k) e -= theta.theta[k] * s.statistics[k](path);
  return e;
}

}  // namespace ght
