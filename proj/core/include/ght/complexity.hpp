#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ght/measures.hpp"
#include "ght/network.hpp"

namespace ght {

// Entries left empty are not defined for the activation kind.
struct ComplexityReport {
  ActivationKind kind = ActivationKind::Singular;
  std::optional<double> depth, width, param_count;
  double N = 1.0;
  double ln_N = 0.0;
  int q = 0;
  std::optional<double> D;          // implicit parameter (Singular only)
  std::optional<double> W;
  std::optional<double> eps_tilde;
  std::optional<double> C_K;
  double c = 1.0;
  std::vector<std::string> notes;
};

struct StaticComplexityInput {
  ActivationKind kind = ActivationKind::Singular;
  int n = 1;
  double alpha = 1.0;
  double lipschitz = 1.0;
  double diam = 1.0;
  double kappa = 2.0;                  // estimate of kappa_X(1/5)
  double C_eta = 1.0;
  std::optional<double> c;             // absolute constant
  double eps_A = 0.1;
  double eps_Q = 0.1;
  std::optional<double> W;             // Singular
  std::optional<double> D;             // Singular; solved from eps_A when absent
  std::optional<double> eps_tilde;     // Smooth
  std::optional<double> depth;         // Classical
  std::optional<int> q;                // used when no modulus hook is given
  std::function<int(double)> modulus;  // eps_Q -> q
  bool strict = false;
};

struct FfnnComplexityInput {
  ActivationKind kind = ActivationKind::Singular;
  int n = 1;
  int m = 1;
  double alpha = 1.0;
  double lipschitz = 1.0;
  double diam = 1.0;
  double kappa = 2.0;
  std::optional<double> c;
  std::optional<double> W;
  std::optional<double> D;
  std::optional<double> eps;           // solves D when D is absent
  std::optional<double> eps_tilde;
  std::optional<double> depth;
  bool strict = false;
};

// N as the power of kappa from the ln(N) row; exponent clamped at 0.
double static_log_exponent(double alpha, double diam, double eps_A, double lipschitz, double C_eta, double c,
                           double kappa);

// Smallest positive integer D with scale * n^(alpha/2) W^(-sqrt D) (W^((1-alpha) sqrt D) + 2) <= eps.
double implicit_depth_parameter(double scale, int n, double alpha, double W, double eps);

double capacity_constant(double c, int m, double alpha, double kappa, double diam);

ComplexityReport complexity_static(const StaticComplexityInput& in);
ComplexityReport complexity_ffnn(const FfnnComplexityInput& in);

std::vector<std::string> complexity_csv_header();
std::vector<std::string> complexity_csv_row(const ComplexityReport& r);

struct CapacityEstimate {
  int k = 0;
  std::size_t x0 = 0;
  double r = 0.0;
  std::vector<std::size_t> centers;
};

// True when the delta*r balls around `centers` are pairwise disjoint in the
// cloud and contained in the r ball around x0.
bool verify_packing(const std::vector<Vec>& cloud, std::size_t x0, double r, double delta,
                    const std::vector<std::size_t>& centers);

// Greedy packing over seeded (x0, r, order) trials; a certified lower bound.
CapacityEstimate metric_capacity_estimate(const std::vector<Vec>& cloud, double delta, int trials,
                                          std::uint64_t seed = 0);

}  // namespace ght
