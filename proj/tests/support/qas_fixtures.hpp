#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ght/qas.hpp"
#include "ght/rng.hpp"

namespace fixture {

using ght::QasPoint;
using ght::QasSpace;
using ght::QuantizationCode;
using ght::Rng;
using ght::Vec;

// One instance of each variant, in a fixed order.
inline std::vector<QasSpace> all_spaces() {
  return {ght::make_wasserstein_convex(2, 1.0, 2.0),       ght::make_adapted_empirical(1, 2, 1.0),
          ght::make_linear_schauder(2.0, 0.5),              ght::make_forward_rate(4.0),
          ght::make_gaussian_spd(2),                        ght::make_exponential_family(3)};
}

inline QuantizationCode random_code(const QasSpace& s, Rng& rng, int q) {
  QuantizationCode c;
  c.q = q;
  const std::size_t n = ght::code_length(s, q);
  const bool unit = std::holds_alternative<ght::AdaptedEmpiricalSpace>(s);
  for (std::size_t k = 0; k < n; ++k) c.z.push_back(unit ? rng.uniform() : rng.uniform(-1.5, 1.5));
  return c;
}

inline Eigen::MatrixXd random_spd(Rng& rng, int d) {
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  Eigen::MatrixXd S = A * A.transpose() + 0.2 * Eigen::MatrixXd::Identity(d, d);
  return 0.5 * (S + S.transpose());
}

inline ght::DiscreteMeasure random_measure(Rng& rng, std::size_t d, std::size_t n, double lo, double hi,
                                           bool grid = false) {
  std::vector<Vec> atoms(n, Vec(d));
  Vec w(n);
  double s = 0;
  for (auto& a : atoms)
    for (double& x : a) x = grid ? lo + std::floor(rng.uniform(0, 3)) * (hi - lo) / 2 : rng.uniform(lo, hi);
  for (double& x : w) s += (x = rng.uniform(0.05, 1.0));
  for (double& x : w) x /= s;
  return ght::DiscreteMeasure(d, atoms, w);
}

// Random point of the space, not necessarily in the image of a quantizer.
inline QasPoint random_point(const QasSpace& space, Rng& rng) {
  return std::visit(
      [&](const auto& s) -> QasPoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ght::WassersteinConvexSpace>) {
          return random_measure(rng, s.d, 1 + rng.index(3), -2, 2);
        } else if constexpr (std::is_same_v<S, ght::AdaptedEmpiricalSpace>) {
          return ght::PathMeasure(s.d, s.T, random_measure(rng, s.d * s.T, 1 + rng.index(3), 0, 1, true));
        } else if constexpr (std::is_same_v<S, ght::LinearSchauderSpace>) {
          Vec c(1 + rng.index(6));
          for (double& x : c) x = rng.normal();
          return ght::Coefficients{c};
        } else if constexpr (std::is_same_v<S, ght::ForwardRateRkhsSpace>) {
          Vec c(1 + rng.index(s.knots.size()));
          for (double& x : c) x = rng.normal();
          return ght::Coefficients{c};
        } else if constexpr (std::is_same_v<S, ght::GaussianSpdSpace>) {
          Eigen::VectorXd m(s.d);
          for (int k = 0; k < s.d; ++k) m[k] = rng.normal();
          return ght::GaussianMeasure(m, random_spd(rng, s.d));
        } else {
          Vec t(s.d);
          for (double& x : t) x = rng.uniform();
          return ght::NaturalParameter{t};
        }
      },
      space);
}

inline ght::SimplexWeight random_weight(Rng& rng, std::size_t n) {
  Vec w(n);
  double s = 0;
  for (double& x : w) s += (x = -std::log(1.0 - rng.uniform()));
  for (double& x : w) x /= s;
  return ght::SimplexWeight(w);
}

// Exact equality of two points of the same variant.
inline bool identical(const QasPoint& a, const QasPoint& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<ght::DiscreteMeasure>(&a)) {
    const auto& y = std::get<ght::DiscreteMeasure>(b);
    return x->atoms() == y.atoms() && x->weights() == y.weights();
  }
  if (auto* x = std::get_if<ght::PathMeasure>(&a)) {
    const auto& y = std::get<ght::PathMeasure>(b);
    return x->base().atoms() == y.base().atoms() && x->base().weights() == y.base().weights();
  }
  if (auto* x = std::get_if<ght::Coefficients>(&a)) return x->c == std::get<ght::Coefficients>(b).c;
  if (auto* x = std::get_if<ght::GaussianMeasure>(&a)) {
    const auto& y = std::get<ght::GaussianMeasure>(b);
    return x->mean() == y.mean() && x->cov() == y.cov();
  }
  return std::get<ght::NaturalParameter>(a).theta == std::get<ght::NaturalParameter>(b).theta;
}

}  // namespace fixture
