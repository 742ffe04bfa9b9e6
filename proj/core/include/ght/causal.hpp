#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ght/measures.hpp"
#include "ght/qas.hpp"

namespace ght {

// Finite window t_a < ... < t_b of a time grid with t_0 = 0. Index n maps to
// times[n - first].
struct TimeGrid {
  Vec times;
  int first = 0;
  double delta_minus = 0.0;
  double delta_plus = 0.0;

  int last() const { return first + static_cast<int>(times.size()) - 1; }
  bool contains(int n) const { return n >= first && n <= last(); }
  double t(int n) const;
};

// Validates a strictly increasing list containing 0 and computes the gaps.
TimeGrid grid_validate(const Vec& times);
// Integer times a..b (a <= 0 <= b).
TimeGrid unit_grid(int a, int b);
TimeGrid uniform_grid(int a, int b, double step);

struct PathWindow {
  TimeGrid grid;
  std::vector<Vec> values;  // values[i] = x_{t_{grid.first + i}}

  int offset() const { return grid.first; }
  int last() const { return grid.last(); }
  std::size_t dim() const { return values.empty() ? 0 : values.front().size(); }
  const Vec& at(int n) const;  // OutOfWindowError outside the window
};

PathWindow make_window(const TimeGrid& grid, std::vector<Vec> values);

// x_{t_{n-m}}, ..., x_{t_n} concatenated.
Vec history(const PathWindow& path, int n, int m);

// Box [lower, upper] or closed ball B(center, radius).
struct Region {
  enum class Kind { Box, Ball };
  Kind kind = Kind::Box;
  Vec lower, upper;
  Vec center;
  double radius = 0.0;

  static Region box(Vec lower, Vec upper);
  static Region ball(Vec center, double radius);
  std::size_t dim() const { return kind == Kind::Box ? lower.size() : center.size(); }
  // Signed: >= 0 inside, the negated distance to the region outside.
  double slack(const Vec& x) const;
  double distance(const Vec& x) const;
  double diameter() const;
};

struct KZ {
  Region K;
};
struct KInf {
  Region K;
  double C = 1.0;
  double p = 1.0;
};
struct KAlpha {
  Region K;
  double C = 1.0;
  double p = 1.0;
  double alpha = -1.0;  // alpha < 1 - p
};
struct KW {
  Region K;
  std::function<double(int)> w;  // nondecreasing on N
};
struct KExp {
  double C0 = 1.0;
  double C_star = 1.0;
  Vec C;  // C_n for n = 0, 1, ...
  double eps = 1.0;
  double delta_minus = 1.0;
};

using PathClassSpec = std::variant<KZ, KInf, KAlpha, KW, KExp>;

std::string class_name(const PathClassSpec& spec);
void validate(const PathClassSpec& spec);

struct MembershipReport {
  bool member = true;
  double worst_slack = 0.0;
  std::optional<int> violating_index;      // first index with negative slack
  int worst_index = 0;
  std::vector<std::pair<int, double>> slacks;  // (index, slack), window order
};

// Slack is rhs - lhs of the defining inequality at each index. KAlpha reports
// C minus the running weighted sum.
MembershipReport path_membership(const PathClassSpec& spec, const PathWindow& path);

// (C*/sqrt(eps)) sqrt(C_n) exp(-n C_n delta_- / 2) for n >= 1.
double exp_envelope(const KExp& k, int n);

using Encoder = std::function<Vec(double t, const Vec& window)>;
using Decoder = std::function<QasPoint(const Vec& latent)>;

struct FiniteComplexityMap {
  QasSpace space;
  int input_dim = 1;   // d
  int memory = 0;      // m
  int latent_dim = 1;  // L
  double holder_alpha = 1.0;
  Encoder f;
  Decoder rho;
  bool time_homogeneous = false;
};

Vec encode_window(const FiniteComplexityMap& map, const PathWindow& path, int n);
QasPoint eval_finite_complexity(const FiniteComplexityMap& map, const PathWindow& path, int n);

// Family eps -> map plus the compression function c_AC(n, eps) >= 1.
struct AcMapSpec {
  std::function<FiniteComplexityMap(double eps)> family;
  std::function<double(int n, double eps)> c_ac;
};

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using MatrixFn = std::function<Eigen::MatrixXd(double t, const Vec& x)>;

// Atoms mean + s z (+ c_j) for z on the product grid of the k mid-quantiles
// Phi^{-1}((2i-1)/(2k)) of N(0,1), convolved with nu when given.
DiscreteMeasure gaussian_discretization(const Vec& mean, const Eigen::MatrixXd& s, int k,
                                        const DiscreteMeasure* nu = nullptr);

// f(t, x) = (x + delta mu, sqrt(delta) sigma), rho(m, s) = N(m, s s^T) * nu.
// Latent layout: m (d entries) then s row-major (d*d entries).
FiniteComplexityMap sde_kernel_map(DriftFn mu, MatrixFn sigma, double delta, const DiscreteMeasure& nu, int k,
                                   bool time_homogeneous = false);

using ScalarFn = std::function<double(double t, double x)>;

// Two-step conditional law (X_{n+1}, X_{n+2}) given X_n of a scalar SDE with
// m Gaussian quantile cells. Latent layout: (mu_0..mu_m, sigma_0..sigma_m).
// `inner` quantiles discretize each conditional Gaussian (m when <= 0).
FiniteComplexityMap sde_two_step_adapted(ScalarFn mu, ScalarFn sigma, int m, double step = 1.0, int inner = 0);

// The quantiles q_1 < ... < q_m used by sde_two_step_adapted.
Vec two_step_quantiles(int m);

struct TruncatedMap {
  FiniteComplexityMap map;
  double tail = 0.0;  // sup_x |mu - mu_truncated| <= tail * sup |M|
};

// Kernel k(n) for n <= 0; tail(m) certifies sum_{n < -m} |k_n|.
TruncatedMap infinite_memory_truncation(DriftFn M, MatrixFn Sigma, std::function<double(int)> kernel,
                                        std::function<double(int)> tail, int m, int quantiles, int d = 1);

enum class Table3Row { KW, KExp, KInf, KAlpha, KZ, Corollary, WorstCase };

std::string to_string(Table3Row r);
Table3Row table3_row_from_string(const std::string& s);

struct Table3Params {
  double eps = 1.0;
  double L_rho = 1.0;         // Hoelder constants of rho and f
  double L_f = 1.0;
  double holder_alpha = 1.0;  // exponent of both moduli
  int m = 0;                  // memory m(eps/4)
  int d = 1;
  double delta_plus = 1.0;
  int N_T = 0;
  double diam_K = 0.0;

  std::function<double(int)> w;  // KW
  double C = 1.0;                // KInf, KAlpha
  double p = 1.0;
  double class_alpha = -1.0;     // KAlpha
  std::optional<KExp> exp;       // KExp
  std::function<double(int)> worst_case;  // sup_x max_{k <= |n|} d(F(x)_{t_k}, F(x)_{t_n})
};

// 1 for |n| <= N_T; otherwise the selected row, floored at 1.
double compression_rate_table3(Table3Row row, const Table3Params& params, int n);

// max{C_0, eps^{-1/2} C* C_n^{1/2} e^{-n C_n delta_-/2}}.
double exp_weight(const KExp& k, int n);

struct InitialCondition {
  Vec mean;
  double sd = 0.0;  // isotropic Gaussian spread
};

// Euler-Maruyama on grid indices 0..horizon. Path i draws from Rng(seed + i):
// first d normals for x_0 when sd > 0, then one block of noise per step.
std::vector<PathWindow> euler_simulate(DriftFn alpha, MatrixFn beta, const InitialCondition& x0, const TimeGrid& grid,
                                       int horizon, int n_paths, std::uint64_t seed, int threads = 1);

struct ExpFit {
  KExp spec;
  Vec second_moments;  // empirical E|X_n|^2
  double scale = 0.0;  // s, with C* = s sqrt(H + 1)
  double containment = 0.0;
};

// Chebyshev over the H + 1 constraints, each bound at sqrt((H+1) m_n / eps):
// C_0 is that radius, and for n >= 1 C_n is the smaller root of
// sqrt(C) e^{-n C delta_-/2} = sqrt(m_n)/s.
ExpFit fit_exp_envelope(const std::vector<PathWindow>& paths, double eps);

double containment_fraction(const PathClassSpec& spec, const std::vector<PathWindow>& paths);

}  // namespace ght
