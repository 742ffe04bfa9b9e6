#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ght/causal.hpp"
#include "ght/network.hpp"
#include "ght/transformer.hpp"

namespace ght {

// Geometric hypertransformer: a shared decoder over R^L, an encoder family
// f_theta : R^{(m+1)d} -> R^L, and a ReLU hypernetwork h on R^P generating the
// encoder parameters.
struct Ght {
  GeometricTransformer decoder;
  Network hyper;
  Vec theta_init;
  int horizon = 1;  // N
  MultiIndex encoder_md;
  ActivationSpec encoder_act;
  int memory = 0;
  int input_dim = 1;

  std::vector<Vec> schedule;  // theta_{-N}, ..., theta_N, filled by build_schedule
};

void validate(const Ght& g);

// theta_n = theta for n <= -N, theta_{n+1} = h(theta_n) for -N <= n < N, and
// theta_n = theta_N for n >= N.
void build_schedule(Ght& g);

Ght make_ght(GeometricTransformer decoder, Network hyper, Vec theta_init, int horizon, MultiIndex encoder_md,
             ActivationSpec encoder_act, int memory, int input_dim);

const Vec& theta_unroll(const Ght& g, int n);

Vec ght_latent(const Ght& g, const PathWindow& path, int n);
QasPoint ght_eval(const Ght& g, const PathWindow& path, int n);

using CausalMap = std::function<QasPoint(const PathWindow& path, int n)>;

CausalMap as_causal(const FiniteComplexityMap& map);
CausalMap as_causal(const Ght& g);

// N_T = min{ min{n > 0 : t_n >= T}, |max{n < 0 : t_n <= -T}| } on the grid.
int horizon_index(const TimeGrid& grid, double T);

struct DynamicFitConfig {
  std::vector<int> encoder_hidden = {32};
  double encoder_gain = 1.0;
  int decoder_N = 32;
  int decoder_q = 8;
  FitConfig decoder;
  double decoder_lipschitz = 1.0;  // L of rho in the perturbation budget
  double holder_alpha = 1.0;
  int perturb_retries = 20;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct DynamicFitReport {
  int N_T = 0;
  int P = 0;
  int hyper_width = 0;
  int hyper_width_formula = 0;
  double hyper_residual = 0.0;
  double perturbation = 0.0;  // per-coordinate bias step, 0 when none was needed
  int perturb_attempts = 0;
  bool distinct_before = true;
  Vec encoder_errors;         // per n = -N_T..N_T, sup-norm on the samples
  Vec within_errors;          // per n, sup over paths of d(F(x)_n, ght(x)_n)
  double within_sup = 0.0;
  FitReport decoder;
  std::vector<Vec> thetas;    // fitted theta_n, n = -N_T..N_T
  double replay_deviation = 0.0;
  double wall_seconds = 0.0;
};

struct DynamicFitResult {
  Ght ght;
  DynamicFitReport report;
};

// Paths must cover indices -N_T - m .. N_T.
DynamicFitResult fit_dynamic(const FiniteComplexityMap& target, const std::vector<PathWindow>& paths, int N_T,
                             double eps, const DynamicFitConfig& cfg = {});
// Fits the member of the family at eps/4 and measures errors against it.
DynamicFitResult fit_dynamic(const AcMapSpec& target, const std::vector<PathWindow>& paths, int N_T, double eps,
                             const DynamicFitConfig& cfg = {});
// Horizon given as a time span T.
DynamicFitResult fit_dynamic_span(const FiniteComplexityMap& target, const std::vector<PathWindow>& paths, double T,
                                  double eps, const DynamicFitConfig& cfg = {});

// sup over paths of max{1, lambda d(ght(x)_n, ght(x)_{sgn(n) N_T})}, sgn(0) = 1.
double self_compression(const Ght& g, const std::vector<PathWindow>& paths, int N_T, double lambda, int n);

struct NormalizedRow {
  int n = 0;
  double raw = 0.0;
  double denominator = 1.0;
  double normalized = 0.0;
};

struct NormalizedError {
  std::vector<NormalizedRow> rows;
  double value = 0.0;    // sup of normalized errors
  double raw_sup = 0.0;
};

// Over every n for which all paths cover both maps' histories; lambda <= 0
// means 8/eps.
NormalizedError normalized_error(const CausalMap& target, const Ght& g, const std::vector<PathWindow>& paths,
                                 const std::function<double(int)>& c_ac, const std::function<double(int)>& c_table3,
                                 int N_T, double eps, int target_memory, double lambda = 0.0, int threads = 1);

}  // namespace ght
