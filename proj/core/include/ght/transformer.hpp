#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ght/network.hpp"
#include "ght/qas.hpp"

namespace ght {

struct GeometricTransformer {
  QasSpace space;
  Network encoder;  // output width N
  std::vector<QuantizationCode> codes;
  int q = 1;
};

// Checks encoder/code consistency; throws DomainError.
void validate(const GeometricTransformer& gt);

QasPoint gt_eval(const GeometricTransformer& gt, const Vec& x);

using TargetFn = std::function<QasPoint(const Vec&)>;

struct FitConfig {
  ActivationSpec activation = ActivationSpec::singular();
  std::vector<Vec> test_x;             // sup-error grid; train_x when empty
  std::optional<double> lipschitz;     // estimated from the data when absent
  double holder_alpha = 1.0;
  double beta = 0.0;                   // logit sharpness; chosen from the data when <= 0
  int threads = 1;

  // end-to-end only
  std::vector<int> hidden = {32};
  TrainConfig pretrain = [] {          // gradient refinement after the feature initialisation
    TrainConfig t;
    t.epochs = 0;
    return t;
  }();
  double feature_gain = 0.0;           // hidden ramp steepness; 2 N^(1/n) when <= 0
  double label_scale = 2.0;
  int fd_epochs = 200;
  double fd_learning_rate = 0.05;
  double fd_step = 1e-4;
  double loss_exponent = 1.0;
  std::vector<QuantizationCode> fixed_codes;  // replaces encoded centre codes when nonempty
};

struct FitReport {
  int N = 0;
  int q = 0;
  std::vector<std::size_t> centers;  // indices into train_x
  std::vector<Vec> center_points;
  double covering_radius = 0.0;
  Vec quantization_errors;           // per centre
  Vec center_errors;                 // d(f(x_i), gt(x_i))
  double sup_error = 0.0;            // over the test grid
  double mean_loss = 0.0;
  double classification_defect = 0.0;
  double lipschitz = 0.0;
  double holder_alpha = 1.0;
  double bound = 0.0;                // L r^alpha + max eps_Q + defect
  bool bound_holds = true;
  double beta = 0.0;
  double wall_seconds = 0.0;
};

// Farthest-point traversal from the lexicographically smallest point; at most
// N centres, stopping early once every point is a centre.
std::vector<std::size_t> farthest_point_net(const std::vector<Vec>& xs, int N, double* radius = nullptr);

std::size_t nearest_center(const std::vector<Vec>& centers, const Vec& x);

// Affine encoder [n, N] whose logits are beta (2 c_j.x - |c_j|^2).
Network nearest_center_encoder(const std::vector<Vec>& centers, double beta, const ActivationSpec& act);

struct FitResult {
  GeometricTransformer gt;
  FitReport report;
};

FitResult fit_static_constructive(const TargetFn& f, const std::vector<Vec>& train_x, const QasSpace& space, int N,
                                  int q, const FitConfig& cfg = {});

FitResult fit_static_end2end(const TargetFn& f, const std::vector<Vec>& train_x, const QasSpace& space, int N,
                             int q, const FitConfig& cfg = {});

// max over xs of d(f(x), gt(x)), evaluated in parallel with a fixed reduction order.
double sup_error(const GeometricTransformer& gt, const TargetFn& f, const std::vector<Vec>& xs, int threads = 1);

}  // namespace ght
