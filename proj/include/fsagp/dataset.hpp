#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "fsagp/covariance.hpp"
#include "fsagp/geometry.hpp"

namespace fsagp {

/// Multivariate observations at a set of sites.
///
/// The mean of response r at site i is x_i^T beta_r with x_i = X.row(i); the stacked
/// coefficient vector is beta = (beta_1, ..., beta_R), so p = R * X.cols().
struct SpatialDataset {
  LocationSet sites;
  Eigen::MatrixXd Y;   // n x R
  Eigen::MatrixXd X;   // n x p0 mean covariates
  Eigen::MatrixXd XA;  // n x pA transform covariates (empty for a constant transform)
  SiteAux aux;

  std::size_t n() const noexcept { return sites.size(); }
  std::size_t R() const noexcept { return static_cast<std::size_t>(Y.cols()); }

  SpatialDataset subset(const std::vector<std::size_t>& idx) const;
  void validate() const;
};

/// Y stacked site-major: index i*R + r.
Eigen::VectorXd stack_responses(const Eigen::MatrixXd& Y);
Eigen::MatrixXd unstack_responses(const Eigen::VectorXd& y, std::size_t R);

/// (nR) x (R p0) design with row i*R + r holding x_i in columns [r p0, (r+1) p0).
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& X, std::size_t R);

/// R x (R p0) block for a single site.
Eigen::MatrixXd site_design(const Eigen::VectorXd& x, std::size_t R);

}  // namespace fsagp
