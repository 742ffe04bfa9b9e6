#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "ght/gaussian.hpp"
#include "ght/measures.hpp"

namespace ght {

// P_q(Z) with W_p, Z = R^d or a box.
struct WassersteinConvexSpace {
  int d = 1;
  double p = 1.0;
  double moment = 2.0;  // the q of P_q(Z)
  bool bounded = false;
  Vec lower, upper;
  bool barycenter_mixer = false;  // 1-D W2 barycenter instead of convex combination
};

// Adapted empirical measures on [0,1]^{dT} with AW_p.
struct AdaptedEmpiricalSpace {
  int d = 1;
  int T = 1;
  double p = 1.0;
};

// Sequence space with canonical Schauder basis and weighted l^r norm
// (sum_s (1+s)^gamma |c_s|^r)^(1/r).
struct LinearSchauderSpace {
  double exponent = 2.0;
  double weight_decay = 0.0;
};

// Span of kernel sections K(t*_s, .) in the forward-rate RKHS.
struct ForwardRateRkhsSpace {
  double alpha = 4.0;
  Vec knots;
  Vec grid;  // evaluation grid for curves
};

struct GaussianSpdSpace {
  int d = 1;
};

// Natural parameters in [0,1]^d; statistics act on a flattened path.
struct ExponentialFamilySpace {
  int d = 1;
  std::vector<std::function<double(const Vec&)>> statistics;
};

using QasSpace = std::variant<WassersteinConvexSpace, AdaptedEmpiricalSpace, LinearSchauderSpace, ForwardRateRkhsSpace,
                              GaussianSpdSpace, ExponentialFamilySpace>;

struct Coefficients {
  Vec c;
};

struct NaturalParameter {
  Vec theta;
};

using QasPoint = std::variant<DiscreteMeasure, PathMeasure, Coefficients, GaussianMeasure, NaturalParameter>;

struct QuantizationCode {
  Vec z;
  int q = 1;
};

struct MixingConstant {
  double C = 1.0;
  double p = 1.0;
};

// Validating constructors.
QasSpace make_wasserstein_convex(int d, double p, double moment, bool bounded = false, Vec lower = {}, Vec upper = {},
                                 bool barycenter_mixer = false);
QasSpace make_adapted_empirical(int d, int T, double p);
QasSpace make_linear_schauder(double exponent = 2.0, double weight_decay = 0.0);
QasSpace make_forward_rate(double alpha, Vec knots = {}, Vec grid = {}, double horizon = 30.0);
QasSpace make_gaussian_spd(int d);
QasSpace make_exponential_family(int d, std::vector<std::function<double(const Vec&)>> statistics = {});

std::string space_kind(const QasSpace& space);

// Geometric-grid knots 0.1 * 2^n up to the horizon.
Vec default_knots(double horizon);
double forward_rate_kernel(double alpha, double t, double s);
double forward_rate_curve(const ForwardRateRkhsSpace& space, const Coefficients& c, double t);

std::size_t code_length(const QasSpace& space, int q);
MixingConstant mixing_constant(const QasSpace& space);

void check_point(const QasSpace& space, const QasPoint& y);
double distance(const QasSpace& space, const QasPoint& a, const QasPoint& b);

QasPoint mix(const QasSpace& space, const SimplexWeight& w, const std::vector<QasPoint>& points);
QasPoint quantize(const QasSpace& space, const QuantizationCode& code);
QasPoint attention(const QasSpace& space, const Vec& u, const std::vector<QuantizationCode>& codes);
// Same as attention with quantized points supplied directly.
QasPoint attention_points(const QasSpace& space, const Vec& u, const std::vector<QasPoint>& quantized);

struct EncodeResult {
  QuantizationCode code;
  double error = 0.0;
};
EncodeResult encode_point(const QasSpace& space, const QasPoint& y, int q);

int quantization_modulus_estimate(const QasSpace& space, const std::vector<QasPoint>& sample, double eps,
                                  int q_max = 256);

// min_i [ C (sum_j w_j d(y_i, y_j)^p)^(1/p) - d(eta(w, Y), y_i) ].
double simplicial_defect(const QasSpace& space, const SimplexWeight& w, const std::vector<QasPoint>& points);

// A code at a higher level with the same image under quantize.
QuantizationCode refine_code(const QasSpace& space, const QuantizationCode& code);

// Grid map of the adapted empirical quantizer: cells per axis and snapping.
int adapted_cells_per_axis(const AdaptedEmpiricalSpace& s, int q);
double adapted_snap(int cells, double x);

double exponential_family_energy(const ExponentialFamilySpace& s, const NaturalParameter& theta, const Vec& path);

}  // namespace ght
