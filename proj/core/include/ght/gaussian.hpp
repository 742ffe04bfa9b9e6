#pragma once

#include <Eigen/Dense>

#include "ght/measures.hpp"

namespace ght {

class GaussianMeasure {
 public:
  GaussianMeasure() = default;
  // Checks symmetry (1e-12, relative) and positive definiteness.
  GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

// f(S) for symmetric S via eigendecomposition.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& s);
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& s);
Eigen::MatrixXd spd_log(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s);

// Upper triangle, row by row: d(d+1)/2 entries.
Vec sym_to_vec(const Eigen::MatrixXd& s);
Eigen::MatrixXd vec_to_sym(const Vec& v, std::size_t d);

// sqrt(|m1 - m2|^2 + |log(S1^-1/2 S2 S1^-1/2)|_F^2).
double gaussian_distance(const GaussianMeasure& a, const GaussianMeasure& b);

}  // namespace ght
