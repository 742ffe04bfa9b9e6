#include "ght/gaussian.hpp"

#include <cmath>

#include "ght/errors.hpp"

namespace ght {

namespace {

constexpr double kRelClamp = 1e-14;

template <class F>
Eigen::MatrixXd apply_spectral(const Eigen::MatrixXd& s, F f, bool require_pd) {
  if (s.rows() != s.cols()) throw DomainError("matrix function: not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("matrix function: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  if (require_pd) {
    const double top = ev.cwiseAbs().maxCoeff();
    const double floor = kRelClamp * (top > 0 ? top : 1.0);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev[i] < -floor || (ev[i] <= 0.0 && top == 0.0)) throw DomainError("matrix function: matrix is not positive definite");
      if (ev[i] < floor) ev[i] = floor;
    }
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = f(ev[i]);
  const Eigen::MatrixXd& v = es.eigenvectors();
  return v * ev.asDiagonal() * v.transpose();
}

}  // namespace

GaussianMeasure::GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto d = mean_.size();
  if (d == 0) throw DomainError("gaussian: empty mean");
  if (cov_.rows() != d || cov_.cols() != d) throw DomainError("gaussian: covariance shape mismatch");
  if (!mean_.allFinite() || !cov_.allFinite()) throw DomainError("gaussian: non-finite entries");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("gaussian: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw DomainError("gaussian: covariance not positive definite");
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double x) { return std::sqrt(x); }, true);
}

Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double x) { return 1.0 / std::sqrt(x); }, true);
}

Eigen::MatrixXd spd_log(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double x) { return std::log(x); }, true);
}

Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s) {
  return apply_spectral(s, [](double x) { return std::exp(x); }, false);
}

Vec sym_to_vec(const Eigen::MatrixXd& s) {
  const auto d = s.rows();
  Vec v;
  v.reserve(static_cast<std::size_t>(d * (d + 1) / 2));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) v.push_back(s(i, j));
  return v;
}

Eigen::MatrixXd vec_to_sym(const Vec& v, std::size_t d) {
  if (v.size() != d * (d + 1) / 2) throw DomainError("vec_to_sym: wrong length");
  Eigen::MatrixXd s(d, d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      s(i, j) = v[k];
      s(j, i) = v[k];
      ++k;
    }
  return s;
}

double gaussian_distance(const GaussianMeasure& a, const GaussianMeasure& b) {
  if (a.dim() != b.dim()) throw DomainError("gaussian_distance: dimension mismatch");
  if (a.mean() == b.mean() && a.cov() == b.cov()) return 0.0;
  const double mean_sq = (a.mean() - b.mean()).squaredNorm();
  const Eigen::MatrixXd w = spd_inv_sqrt(a.cov());
  const Eigen::MatrixXd m = w * b.cov() * w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  double cov_sq = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = std::log(std::max(es.eigenvalues()[i], 1e-300));
    cov_sq += l * l;
  }
  return std::sqrt(mean_sq + cov_sq);
}

}  // namespace ght
