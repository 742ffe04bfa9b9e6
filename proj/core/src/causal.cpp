#include "ght/causal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ght/errors.hpp"
#include "ght/parallel.hpp"
#include "ght/rng.hpp"
#include "ght/special.hpp"

namespace ght {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double norm(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double diff_norm(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

void check_region(const Region& K, std::size_t d, const char* who) {
  if (K.dim() != d) throw DomainError(std::string(who) + ": region dimension does not match the path");
}

Vec mid_quantiles(int k) {
  Vec z(k);
  for (int i = 0; i < k; ++i) z[i] = normal_quantile((2.0 * i + 1.0) / (2.0 * k));
  return z;
}

}  // namespace

double TimeGrid::t(int n) const {
  if (!contains(n)) throw OutOfWindowError("time grid: index " + std::to_string(n) + " outside the stored window");
  return times[static_cast<std::size_t>(n - first)];
}

TimeGrid grid_validate(const Vec& times) {
  if (times.empty()) throw DomainError("time grid: empty");
  for (double t : times)
    if (!std::isfinite(t)) throw DomainError("time grid: non-finite time");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("time grid: times must be strictly increasing");
  const auto zero = std::find(times.begin(), times.end(), 0.0);
  if (zero == times.end()) throw DomainError("time grid: t_0 = 0 is missing");
  TimeGrid g;
  g.times = times;
  g.first = -static_cast<int>(zero - times.begin());
  if (times.size() == 1) {
    g.delta_minus = g.delta_plus = 0.0;
    return g;
  }
  g.delta_minus = std::numeric_limits<double>::infinity();
  g.delta_plus = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double gap = times[i] - times[i - 1];
    g.delta_minus = std::min(g.delta_minus, gap);
    g.delta_plus = std::max(g.delta_plus, gap);
  }
  return g;
}

TimeGrid unit_grid(int a, int b) { return uniform_grid(a, b, 1.0); }

TimeGrid uniform_grid(int a, int b, double step) {
  if (a > 0 || b < 0) throw DomainError("uniform_grid: need a <= 0 <= b");
  if (!(step > 0.0)) throw DomainError("uniform_grid: step must be positive");
  Vec t;
  for (int n = a; n <= b; ++n) t.push_back(n * step);
  return grid_validate(t);
}

const Vec& PathWindow::at(int n) const {
  if (!grid.contains(n)) throw OutOfWindowError("path: index " + std::to_string(n) + " outside the stored window");
  return values[static_cast<std::size_t>(n - grid.first)];
}

PathWindow make_window(const TimeGrid& grid, std::vector<Vec> values) {
  if (values.size() != grid.times.size()) throw DomainError("path window: values and times differ in length");
  if (values.empty()) throw DomainError("path window: empty");
  const std::size_t d = values.front().size();
  if (d == 0) throw DomainError("path window: zero-dimensional points");
  for (const auto& v : values) {
    if (v.size() != d) throw DomainError("path window: points of different dimension");
    for (double x : v)
      if (!std::isfinite(x)) throw DomainError("path window: non-finite value");
  }
  return PathWindow{grid, std::move(values)};
}

Vec history(const PathWindow& path, int n, int m) {
  if (m < 0) throw DomainError("history: negative memory");
  if (!path.grid.contains(n - m) || !path.grid.contains(n))
    throw OutOfWindowError("history: indices " + std::to_string(n - m) + ".." + std::to_string(n) +
                           " are not covered by the window");
  Vec out;
  out.reserve(static_cast<std::size_t>(m + 1) * path.dim());
  for (int k = n - m; k <= n; ++k) {
    const Vec& x = path.at(k);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

Region Region::box(Vec lower, Vec upper) {
  if (lower.empty() || lower.size() != upper.size()) throw DomainError("region: box bounds of different length");
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (!(lower[k] <= upper[k])) throw DomainError("region: box lower bound exceeds upper bound");
  Region r;
  r.kind = Kind::Box;
  r.lower = std::move(lower);
  r.upper = std::move(upper);
  return r;
}

Region Region::ball(Vec center, double radius) {
  if (center.empty()) throw DomainError("region: empty ball centre");
  if (!(radius >= 0.0)) throw DomainError("region: negative radius");
  Region r;
  r.kind = Kind::Ball;
  r.center = std::move(center);
  r.radius = radius;
  return r;
}

double Region::distance(const Vec& x) const {
  if (kind == Kind::Ball) return std::max(0.0, diff_norm(x, center) - radius);
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = std::max({lower[k] - x[k], x[k] - upper[k], 0.0});
    s += e * e;
  }
  return std::sqrt(s);
}

double Region::slack(const Vec& x) const {
  const double out = distance(x);
  if (out > 0.0) return -out;
  if (kind == Kind::Ball) return radius - diff_norm(x, center);
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) s = std::min({s, x[k] - lower[k], upper[k] - x[k]});
  return s;
}

double Region::diameter() const {
  if (kind == Kind::Ball) return 2.0 * radius;
  return diff_norm(lower, upper);
}

std::string class_name(const PathClassSpec& spec) {
  return std::visit(overloaded{[](const KZ&) { return std::string("KZ"); },
                               [](const KInf&) { return std::string("KInf"); },
                               [](const KAlpha&) { return std::string("KAlpha"); },
                               [](const KW&) { return std::string("KW"); },
                               [](const KExp&) { return std::string("KExp"); }},
                    spec);
}

void validate(const PathClassSpec& spec) {
  std::visit(overloaded{[](const KZ&) {},
                        [](const KInf& k) {
                          if (!(k.C > 0.0) || !(k.p > 0.0)) throw DomainError("KInf: C and p must be positive");
                        },
                        [](const KAlpha& k) {
                          if (!(k.C > 0.0)) throw DomainError("KAlpha: C must be positive");
                          if (!(k.p >= 1.0)) throw DomainError("KAlpha: p must be >= 1");
                          if (!(k.alpha < 1.0 - k.p)) throw DomainError("KAlpha: need alpha < 1 - p");
                        },
                        [](const KW& k) {
                          if (!k.w) throw DomainError("KW: missing weight function");
                        },
                        [](const KExp& k) {
                          if (!(k.C0 > 0.0) || !(k.C_star > 0.0)) throw DomainError("KExp: C_0 and C* must be positive");
                          if (!(k.eps > 0.0 && k.eps <= 1.0)) throw DomainError("KExp: eps must lie in (0, 1]");
                          if (!(k.delta_minus > 0.0)) throw DomainError("KExp: delta_- must be positive");
                          for (double c : k.C)
                            if (!(c > 0.0)) throw DomainError("KExp: C_n must be positive");
                        }},
             spec);
}

double exp_envelope(const KExp& k, int n) {
  if (n < 0 || static_cast<std::size_t>(n) >= k.C.size())
    throw DomainError("KExp: no constant C_" + std::to_string(n));
  const double c = k.C[static_cast<std::size_t>(n)];
  return k.C_star / std::sqrt(k.eps) * std::sqrt(c) * std::exp(-n * c * k.delta_minus / 2.0);
}

MembershipReport path_membership(const PathClassSpec& spec, const PathWindow& path) {
  validate(spec);
  const std::size_t d = path.dim();
  MembershipReport rep;
  auto push = [&](int n, double s) { rep.slacks.emplace_back(n, s); };
  auto increment = [&](int n) { return diff_norm(path.at(n), path.at(n - 1)); };
  auto gap = [&](int n) { return path.grid.t(n) - path.grid.t(n - 1); };

  std::visit(overloaded{[&](const KZ& k) {
                          check_region(k.K, d, "KZ");
                          for (int n = path.offset(); n <= path.last(); ++n) push(n, k.K.slack(path.at(n)));
                        },
                        [&](const KInf& k) {
                          check_region(k.K, d, "KInf");
                          for (int n = path.offset(); n <= path.last(); ++n) {
                            double s = std::numeric_limits<double>::infinity();
                            if (n > path.offset()) s = k.C * gap(n) - std::pow(increment(n), k.p);
                            if (n == 0) s = std::min(s, k.K.slack(path.at(0)));
                            if (std::isfinite(s)) push(n, s);
                          }
                        },
                        [&](const KAlpha& k) {
                          check_region(k.K, d, "KAlpha");
                          double sum = 0.0;
                          double x0 = k.K.slack(path.at(0));
                          for (int n = path.offset(); n <= path.last(); ++n) {
                            if (n > path.offset()) {
                              const double nn = std::max(1.0, static_cast<double>(std::abs(n)));
                              sum += std::pow(increment(n), k.p) / (gap(n) * std::pow(nn, k.alpha));
                            }
                            double s = k.C - sum;
                            if (n == 0) s = std::min(s, x0);
                            if (n > path.offset() || n == 0) push(n, s);
                          }
                        },
                        [&](const KW& k) {
                          check_region(k.K, d, "KW");
                          for (int n = path.offset(); n <= path.last(); ++n)
                            push(n, k.w(std::abs(n)) - k.K.distance(path.at(n)));
                        },
                        [&](const KExp& k) {
                          for (int n = std::max(0, path.offset()); n <= path.last(); ++n) {
                            const double bound = n == 0 ? k.C0 : exp_envelope(k, n);
                            push(n, bound - norm(path.at(n)));
                          }
                        }},
             spec);

  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& [n, s] : rep.slacks) {
    if (s < rep.worst_slack) {
      rep.worst_slack = s;
      rep.worst_index = n;
    }
    if (s < 0.0 && !rep.violating_index) rep.violating_index = n;
  }
  if (rep.slacks.empty()) rep.worst_slack = 0.0;
  rep.member = !rep.violating_index.has_value();
  return rep;
}

Vec encode_window(const FiniteComplexityMap& map, const PathWindow& path, int n) {
  if (static_cast<int>(path.dim()) != map.input_dim) throw DomainError("finite complexity map: path dimension mismatch");
  const Vec z = map.f(path.grid.t(n), history(path, n, map.memory));
  if (static_cast<int>(z.size()) != map.latent_dim) throw DomainError("finite complexity map: encoder output length");
  return z;
}

QasPoint eval_finite_complexity(const FiniteComplexityMap& map, const PathWindow& path, int n) {
  return map.rho(encode_window(map, path, n));
}

DiscreteMeasure gaussian_discretization(const Vec& mean, const Eigen::MatrixXd& s, int k, const DiscreteMeasure* nu) {
  const std::size_t d = mean.size();
  if (d == 0) throw DomainError("gaussian_discretization: empty mean");
  if (k < 1) throw DomainError("gaussian_discretization: need at least one quantile");
  if (static_cast<std::size_t>(s.rows()) != d || static_cast<std::size_t>(s.cols()) != d)
    throw DomainError("gaussian_discretization: scale matrix shape");
  if (nu && nu->dim() != d) throw DomainError("gaussian_discretization: noise dimension mismatch");
  const Vec z = mid_quantiles(k);
  std::size_t cells = 1;
  for (std::size_t j = 0; j < d; ++j) cells *= static_cast<std::size_t>(k);
  std::vector<Vec> atoms;
  Vec weights;
  const std::size_t noise = nu ? nu->size() : 1;
  atoms.reserve(cells * noise);
  weights.reserve(cells * noise);
  std::vector<int> idx(d, 0);
  Eigen::VectorXd zz(static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t j = 0; j < d; ++j) zz[static_cast<Eigen::Index>(j)] = z[static_cast<std::size_t>(idx[j])];
    const Eigen::VectorXd sz = s * zz;
    for (std::size_t a = 0; a < noise; ++a) {
      Vec x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = mean[j] + sz[static_cast<Eigen::Index>(j)] + (nu ? nu->atom(a)[j] : 0.0);
      atoms.push_back(std::move(x));
      weights.push_back((nu ? nu->weight(a) : 1.0) / static_cast<double>(cells));
    }
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < k) break;
      idx[j] = 0;
    }
  }
  return DiscreteMeasure(d, std::move(atoms), std::move(weights)).canonical();
}

FiniteComplexityMap sde_kernel_map(DriftFn mu, MatrixFn sigma, double delta, const DiscreteMeasure& nu, int k,
                                   bool time_homogeneous) {
  if (!(delta > 0.0)) throw DomainError("sde_kernel_map: delta must be positive");
  if (k < 1) throw DomainError("sde_kernel_map: need at least one quantile");
  if (nu.size() == 0) throw DomainError("sde_kernel_map: empty noise measure");
  const int d = static_cast<int>(nu.dim());
  FiniteComplexityMap map;
  map.space = make_wasserstein_convex(d, 1.0, 2.0);
  map.input_dim = d;
  map.memory = 0;
  map.latent_dim = d + d * d;
  map.time_homogeneous = time_homogeneous;
  const double rd = std::sqrt(delta);
  map.f = [mu, sigma, delta, rd, d](double t, const Vec& x) {
    const Vec drift = mu(t, x);
    const Eigen::MatrixXd s = sigma(t, x);
    if (static_cast<int>(drift.size()) != d || s.rows() != d || s.cols() != d)
      throw DomainError("sde_kernel_map: coefficient shape mismatch");
    Vec z(static_cast<std::size_t>(d + d * d));
    for (int j = 0; j < d; ++j) z[j] = x[j] + delta * drift[j];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) z[d + r * d + c] = rd * s(r, c);
    return z;
  };
  map.rho = [nu, k, d](const Vec& z) -> QasPoint {
    Vec m(z.begin(), z.begin() + d);
    Eigen::MatrixXd s(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) s(r, c) = z[d + r * d + c];
    return gaussian_discretization(m, s, k, &nu);
  };
  return map;
}

Vec two_step_quantiles(int m) {
  if (m < 1) throw DomainError("two_step_quantiles: need m >= 1");
  return mid_quantiles(m);
}

FiniteComplexityMap sde_two_step_adapted(ScalarFn mu, ScalarFn sigma, int m, double step, int inner) {
  if (m < 1) throw DomainError("sde_two_step_adapted: need m >= 1");
  if (!(step > 0.0)) throw DomainError("sde_two_step_adapted: step must be positive");
  const int r = inner > 0 ? inner : m;
  const Vec q = two_step_quantiles(m);
  // Cell I_k = (q_k, q_{k+1}) with q_0 = -inf for the first cell and
  // q_{m+1} = +inf; its mass and the standard-normal point splitting it.
  Vec mass(m + 1), rep(m + 1);
  for (int k = 0; k <= m; ++k) {
    const double lo = k == 0 ? 0.0 : normal_cdf(q[k - 1]);
    const double hi = k == m ? 1.0 : normal_cdf(q[k]);
    mass[k] = hi - lo;
    rep[k] = normal_quantile(0.5 * (lo + hi));
  }
  const Vec inner_z = mid_quantiles(r);

  FiniteComplexityMap map;
  map.space = make_adapted_empirical(1, 2, 1.0);
  map.input_dim = 1;
  map.memory = 0;
  map.latent_dim = 2 * (m + 1);
  map.f = [mu, sigma, q, m, step](double t, const Vec& x) {
    const double x0 = x[0];
    const double s0 = sigma(t, x0);
    const double mean0 = x0 + mu(t, x0);
    Vec z(static_cast<std::size_t>(2 * (m + 1)));
    z[0] = mean0;
    z[static_cast<std::size_t>(m + 1)] = s0;
    for (int k = 1; k <= m; ++k) {
      const double y = mean0 + s0 * q[k - 1];  // q_k^n(x)
      z[k] = y + mu(t + step, y);
      z[static_cast<std::size_t>(m + 1 + k)] = sigma(t + step, y);
    }
    return z;
  };
  map.rho = [m, mass, rep, inner_z](const Vec& z) -> QasPoint {
    const double mean0 = z[0], s0 = z[static_cast<std::size_t>(m + 1)];
    std::vector<Vec> atoms;
    Vec weights;
    for (int k = 0; k <= m; ++k) {
      const int kk = std::max(k, 1);
      const double x1 = mean0 + s0 * rep[k];
      const double mk = z[kk], sk = z[static_cast<std::size_t>(m + 1 + kk)];
      for (double w : inner_z) {
        atoms.push_back({x1, mk + sk * w});
        weights.push_back(mass[k] / static_cast<double>(inner_z.size()));
      }
    }
    return PathMeasure(1, 2, DiscreteMeasure(2, std::move(atoms), std::move(weights)).canonical());
  };
  return map;
}

TruncatedMap infinite_memory_truncation(DriftFn M, MatrixFn Sigma, std::function<double(int)> kernel,
                                        std::function<double(int)> tail, int m, int quantiles, int d) {
  if (!tail) throw DomainError("infinite_memory_truncation: a certified kernel tail bound is required");
  if (!kernel) throw DomainError("infinite_memory_truncation: missing kernel");
  if (m < 0) throw DomainError("infinite_memory_truncation: negative memory");
  if (quantiles < 1) throw DomainError("infinite_memory_truncation: need at least one quantile");
  if (d < 1) throw DomainError("infinite_memory_truncation: need d >= 1");
  const double tb = tail(m);
  if (!(tb >= 0.0) || !std::isfinite(tb)) throw DomainError("infinite_memory_truncation: invalid tail bound");
  Vec k(static_cast<std::size_t>(m + 1));
  for (int j = 0; j <= m; ++j) k[j] = kernel(-j);

  TruncatedMap out;
  out.tail = tb;
  auto& map = out.map;
  map.space = make_wasserstein_convex(d, 1.0, 2.0);
  map.input_dim = d;
  map.memory = m;
  map.latent_dim = d + d * d;
  map.f = [M, Sigma, k, m](double t, const Vec& w) {
    const std::size_t d = w.size() / static_cast<std::size_t>(m + 1);
    const Vec x0(w.end() - static_cast<long>(d), w.end());
    Vec mean = x0;
    // w holds x_{-m}, ..., x_0; x_{-j} starts at (m - j) d.
    for (int j = 0; j <= m; ++j) {
      const Vec xj(w.begin() + static_cast<long>((m - j) * d), w.begin() + static_cast<long>((m - j + 1) * d));
      const Vec mj = M(t, xj);
      if (mj.size() != d) throw DomainError("infinite_memory_truncation: M output dimension");
      for (std::size_t r = 0; r < d; ++r) mean[r] += k[j] * mj[r];
    }
    const Eigen::MatrixXd S = Sigma(t, x0);
    if (static_cast<std::size_t>(S.rows()) != d || static_cast<std::size_t>(S.cols()) != d)
      throw DomainError("infinite_memory_truncation: Sigma shape");
    Vec z = mean;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) z.push_back(S(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    return z;
  };
  map.rho = [quantiles, dd = static_cast<std::size_t>(d)](const Vec& z) -> QasPoint {
    const std::size_t d = dd;
    Vec mean(z.begin(), z.begin() + static_cast<long>(d));
    Eigen::MatrixXd s(d, d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z[d + r * d + c];
    return gaussian_discretization(mean, s, quantiles);
  };
  return out;
}

std::string to_string(Table3Row r) {
  switch (r) {
    case Table3Row::KW: return "KW";
    case Table3Row::KExp: return "KExp";
    case Table3Row::KInf: return "KInf";
    case Table3Row::KAlpha: return "KAlpha";
    case Table3Row::KZ: return "KZ";
    case Table3Row::Corollary: return "Corollary";
    case Table3Row::WorstCase: return "WorstCase";
  }
  return "?";
}

Table3Row table3_row_from_string(const std::string& s) {
  for (auto r : {Table3Row::KW, Table3Row::KExp, Table3Row::KInf, Table3Row::KAlpha, Table3Row::KZ,
                 Table3Row::Corollary, Table3Row::WorstCase})
    if (to_string(r) == s) return r;
  throw DomainError("unknown compression row '" + s + "'");
}

double exp_weight(const KExp& k, int n) {
  return std::max(k.C0, exp_envelope(k, n));
}

double compression_rate_table3(Table3Row row, const Table3Params& P, int n) {
  if (!(P.eps > 0.0)) throw DomainError("compression rate: eps must be positive");
  if (!(P.holder_alpha > 0.0 && P.holder_alpha <= 1.0)) throw DomainError("compression rate: Hoelder exponent in (0, 1]");
  if (!(P.L_rho >= 0.0) || !(P.L_f >= 0.0)) throw DomainError("compression rate: negative Hoelder constant");
  if (P.N_T < 0 || P.m < 0 || P.d < 1) throw DomainError("compression rate: invalid N_T, m or d");
  if (!(P.delta_plus > 0.0)) throw DomainError("compression rate: delta_+ must be positive");
  if (row == Table3Row::KAlpha) {
    if (!(P.p >= 1.0)) throw DomainError("compression rate: KAlpha needs p >= 1");
    if (P.p > 1.0 && !(P.class_alpha / (P.p - 1.0) < -1.0))
      throw DomainError("compression rate: KAlpha series diverges (alpha/(p-1) >= -1)");
  }
  const int an = std::abs(n);
  if (an <= P.N_T) return 1.0;

  const double a = P.holder_alpha;
  const double lead = 4.0 / P.eps * P.L_rho * std::pow(P.L_f, a);
  const double dm = static_cast<double>(P.d) * P.m;
  const double far = (an - P.N_T) * P.delta_plus;
  double value = 0.0;
  switch (row) {
    case Table3Row::KW:
    case Table3Row::KExp: {
      std::function<double(int)> w;
      if (row == Table3Row::KW) {
        if (!P.w) throw DomainError("compression rate: KW row needs a weight function");
        w = P.w;
      } else {
        if (!P.exp) throw DomainError("compression rate: KExp row needs envelope constants");
        const KExp k = *P.exp;
        w = [k](int j) {
          double r = 0.0;
          for (int i = 0; i <= j; ++i) r = std::max(r, exp_weight(k, i));
          return r;
        };
      }
      const double u = far + dm * (P.diam_K + w(an) + w(P.N_T));
      value = lead * std::pow(u, a * a);
      break;
    }
    case Table3Row::KInf:
      if (!(P.C > 0.0) || !(P.p > 0.0)) throw DomainError("compression rate: KInf needs C, p > 0");
      value = lead * std::pow(far * (1.0 + (dm + 1.0) * std::pow(P.C, 1.0 / P.p) *
                                               std::pow(P.delta_plus, (1.0 - P.p) / P.p)),
                              a * a);
      break;
    case Table3Row::KAlpha: {
      if (!(P.C > 0.0)) throw DomainError("compression rate: KAlpha needs C > 0");
      const double series =
          P.p > 1.0 ? std::pow(1.0 + 2.0 * convergent_power_sum(P.class_alpha / (P.p - 1.0)), (P.p - 1.0) / P.p) : 1.0;
      value = lead * std::pow(far + (dm + 1.0) * std::pow(P.C, 1.0 / P.p) * std::pow(P.delta_plus, 1.0 / P.p) * series,
                              a * a);
      break;
    }
    case Table3Row::KZ:
      value = lead * std::pow(far + (dm + 1.0) * P.diam_K, a * a);
      break;
    case Table3Row::Corollary:
      value = lead * std::pow((dm + 1.0) * P.diam_K, a * a);
      break;
    case Table3Row::WorstCase:
      if (!P.worst_case) throw DomainError("compression rate: worst-case row needs a distance function");
      value = 4.0 / P.eps * std::max(1.0, P.worst_case(an));
      break;
  }
  return std::max(1.0, value);
}

std::vector<PathWindow> euler_simulate(DriftFn alpha, MatrixFn beta, const InitialCondition& x0, const TimeGrid& grid,
                                       int horizon, int n_paths, std::uint64_t seed, int threads) {
  if (horizon < 0) throw DomainError("euler_simulate: negative horizon");
  if (n_paths < 0) throw DomainError("euler_simulate: negative path count");
  if (!grid.contains(0) || !grid.contains(horizon)) throw OutOfWindowError("euler_simulate: grid does not cover 0..horizon");
  if (x0.mean.empty()) throw DomainError("euler_simulate: empty initial mean");
  if (!(x0.sd >= 0.0)) throw DomainError("euler_simulate: negative initial spread");
  const std::size_t d = x0.mean.size();
  Vec times;
  for (int n = 0; n <= horizon; ++n) times.push_back(grid.t(n));
  const TimeGrid sub = grid_validate(times);

  std::vector<PathWindow> out(static_cast<std::size_t>(n_paths));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    Rng rng(seed + i);
    std::vector<Vec> xs;
    xs.reserve(static_cast<std::size_t>(horizon) + 1);
    Vec x = x0.mean;
    if (x0.sd > 0.0)
      for (std::size_t j = 0; j < d; ++j) x[j] += x0.sd * rng.normal();
    xs.push_back(x);
    for (int n = 0; n < horizon; ++n) {
      const double t = sub.times[n], dt = sub.times[n + 1] - t;
      const Vec a = alpha(t, x);
      const Eigen::MatrixXd b = beta(t, x);
      if (a.size() != d || static_cast<std::size_t>(b.rows()) != d)
        throw DomainError("euler_simulate: coefficient shape mismatch");
      Eigen::VectorXd dw(b.cols());
      for (Eigen::Index j = 0; j < b.cols(); ++j) dw[j] = std::sqrt(dt) * rng.normal();
      const Eigen::VectorXd noise = b * dw;
      Vec next(d);
      for (std::size_t j = 0; j < d; ++j) next[j] = x[j] + a[j] * dt + noise[static_cast<Eigen::Index>(j)];
      x = std::move(next);
      xs.push_back(x);
    }
    out[i] = make_window(sub, std::move(xs));
  });
  return out;
}

ExpFit fit_exp_envelope(const std::vector<PathWindow>& paths, double eps) {
  if (paths.empty()) throw DomainError("fit_exp_envelope: no paths");
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("fit_exp_envelope: eps must lie in (0, 1]");
  int H = std::numeric_limits<int>::max();
  for (const auto& p : paths) {
    if (p.offset() > 0) throw DomainError("fit_exp_envelope: paths must start at index <= 0");
    H = std::min(H, p.last());
  }
  const double delta = paths.front().grid.delta_minus > 0.0 ? paths.front().grid.delta_minus : 1.0;
  constexpr double kFloor = 1e-300;

  ExpFit fit;
  fit.second_moments.assign(static_cast<std::size_t>(H) + 1, 0.0);
  for (int n = 0; n <= H; ++n) {
    double s = 0.0;
    for (const auto& p : paths) {
      const double r = norm(p.at(n));
      s += r * r;
    }
    fit.second_moments[n] = std::max(s / static_cast<double>(paths.size()), kFloor);
  }
  const double count = H + 1.0;
  double scale = std::sqrt(kFloor);
  for (int n = 1; n <= H; ++n) scale = std::max(scale, std::sqrt(std::exp(1.0) * n * delta * fit.second_moments[n]));
  fit.scale = scale;

  KExp& k = fit.spec;
  k.eps = eps;
  k.delta_minus = delta;
  k.C_star = scale * std::sqrt(count);
  k.C0 = std::sqrt(count * fit.second_moments[0] / eps);
  k.C.assign(static_cast<std::size_t>(H) + 1, 0.0);
  k.C[0] = 1.0;
  for (int n = 1; n <= H; ++n) {
    const double target = std::sqrt(fit.second_moments[n]) / scale;
    const double rate = n * delta / 2.0;
    auto g = [&](double c) { return std::sqrt(c) * std::exp(-rate * c); };
    double lo = 0.0, hi = 1.0 / (2.0 * rate);
    if (g(hi) <= target) {
      k.C[n] = hi;
      continue;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < target ? lo : hi) = mid;
    }
    k.C[n] = std::max(hi, kFloor);
  }
  fit.containment = containment_fraction(k, paths);
  return fit;
}

double containment_fraction(const PathClassSpec& spec, const std::vector<PathWindow>& paths) {
  if (paths.empty()) return 0.0;
  std::size_t in = 0;
  for (const auto& p : paths)
    if (path_membership(spec, p).member) ++in;
  return static_cast<double>(in) / static_cast<double>(paths.size());
}

}  // namespace ght
