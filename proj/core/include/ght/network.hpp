#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ght/measures.hpp"

namespace ght {

// Layer widths (d_0, ..., d_{J+1}); J hidden layers.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int depth() const { return static_cast<int>(dims_.size()) - 2; }  // J
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int operator[](std::size_t j) const { return dims_[j]; }
  bool operator==(const MultiIndex& o) const { return dims_ == o.dims_; }

 private:
  std::vector<int> dims_;
};

std::size_t param_count(const MultiIndex& md);

enum class ActivationKind { Singular, Smooth, Classical };

// Scalar nonlinearity sigma* by name: sigmoid, tanh, softplus, relu,
// leaky_relu (slope `leak` for x < 0, derivative 1 taken at 0), swish.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::Singular;
  std::string sigma = "none";
  double leak = 0.01;

  static ActivationSpec singular();
  static ActivationSpec smooth(std::string sigma = "sigmoid");
  static ActivationSpec classical(std::string sigma = "leaky_relu", double leak = 0.01);
};

std::string to_string(ActivationKind k);
ActivationKind activation_kind_from_string(const std::string& s);

double sigma_star(const ActivationSpec& spec, double x);
double sigma_star_derivative(const ActivationSpec& spec, double x);

// a1 max(x, a2 x) + (1 - a1) sigma*(x); sigma*(x) alone for Classical.
double activation_eval(const ActivationSpec& spec, double a1, double a2, double x);

// Offsets of each block inside the flat parameter vector.
struct ParameterLayout {
  struct Hidden {
    std::size_t A, b, alpha;  // A is d_{j+1} x d_j row-major, alpha is d_{j+1} x 2
  };
  std::vector<Hidden> hidden;
  std::size_t A_out = 0, c = 0, total = 0;
};

ParameterLayout layout(const MultiIndex& md);

// Structured view of theta.
struct DecodedParameters {
  std::vector<Vec> A, b, alpha;
  Vec A_out, c;
};

DecodedParameters decode(const MultiIndex& md, const Vec& theta);
Vec encode(const MultiIndex& md, const DecodedParameters& p);

struct Network {
  MultiIndex md;
  ActivationSpec act;
  Vec theta;
};

Vec forward(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x);
inline Vec forward(const Network& net, const Vec& x) { return forward(net.md, net.act, net.theta, x); }

// Gradient of <g, f_theta(x)> with respect to theta (g = dLoss/dOutput).
// Floor contributes zero derivative. Returns the network output.
Vec forward_backward(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x,
                     const Vec& g_out, Vec& grad);

// Vector-Jacobian product with respect to the input.
Vec input_gradient(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta, const Vec& x,
                   const Vec& g_out);

// Inserts `extra` hidden identity layers (width d_J, alpha = (1,1)) before the
// output map. Only valid for families where alpha = (1,1) gives the identity.
Network pad_depth(const Network& net, int extra);

// Embeds into a wider multi-index of equal depth with zero rows/columns.
Network pad_width(const Network& net, const MultiIndex& wider);

// Pads to the target shape: width first, then identity layers for depth.
Network pad_to(const Network& net, const MultiIndex& target);

enum class Loss { Squared, CrossEntropy };

struct TrainConfig {
  double learning_rate = 0.1;
  double decay = 1.0;       // multiply rate by `decay` every `decay_every` epochs
  int decay_every = 1000;
  int epochs = 2000;
  int batch_size = 0;       // 0: full batch
  double target_loss = 0.0;
  double init_scale = 1.0;
  double alpha_init[2] = {0.0, 0.0};
  bool train_alpha = true;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Vec theta;
  double loss = 0.0;
  int epochs_run = 0;
};

double dataset_loss(const MultiIndex& md, const ActivationSpec& spec, const Vec& theta,
                    const std::vector<Vec>& xs, const std::vector<Vec>& ys, Loss loss);

Vec random_init(const MultiIndex& md, const TrainConfig& cfg);

// Plain mini-batch gradient descent. Starts from `init` when non-empty.
TrainResult train_regression(const MultiIndex& md, const ActivationSpec& spec, const std::vector<Vec>& xs,
                             const std::vector<Vec>& ys, Loss loss, const TrainConfig& cfg, const Vec& init = {});

// Hidden units are ramps through randomly chosen inputs (gain over the data
// spread, alpha from tc.alpha_init); the readout is a ridge least-squares fit.
Vec ramp_least_squares(const MultiIndex& md, const ActivationSpec& act, const std::vector<Vec>& xs,
                       const std::vector<Vec>& ys, double gain, const TrainConfig& tc);

// min M with 2 floor(M/2) floor(M/(4P)) >= N_T.
int hypernetwork_size(int P, int N_T);

struct MemorizedNetwork {
  Network net;            // ReLU network of shape [P, M, M, P]
  int width_formula = 0;  // hypernetwork_size(P, N_T)
  int width = 0;          // M actually used
  double max_residual = 0.0;
  double plateau = 0.0;   // half-width, in the projected coordinate, of the flat region around each key
  Vec direction;          // projection functional
};

// ReLU network h with h(keys[k]) = values[k]. h is locally constant around
// every key, so replaying h on its own outputs does not amplify rounding.
MemorizedNetwork memorize_sequence(const std::vector<Vec>& keys, const std::vector<Vec>& values, int N_T,
                                   std::uint64_t seed = 0);

}  // namespace ght
