#include "fsagp/dataset.hpp"

#include "fsagp/error.hpp"

namespace fsagp {

SpatialDataset SpatialDataset::subset(const std::vector<std::size_t>& idx) const {
  SpatialDataset out;
  out.sites = sites.subset(idx);
  std::vector<Eigen::Index> rows(idx.begin(), idx.end());
  out.Y = Y(rows, Eigen::all);
  out.X = X(rows, Eigen::all);
  if (XA.size() > 0) out.XA = XA(rows, Eigen::all);
  out.aux = aux.subset(idx);
  return out;
}

void SpatialDataset::validate() const {
  const auto n = static_cast<Eigen::Index>(sites.size());
  if (Y.rows() != n) throw DomainError("dataset: response rows do not match site count");
  if (X.rows() != n) throw DomainError("dataset: covariate rows do not match site count");
  if (XA.size() > 0 && XA.rows() != n) {
    throw DomainError("dataset: transform covariate rows do not match site count");
  }
}

Eigen::VectorXd stack_responses(const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd t = Y.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

Eigen::MatrixXd unstack_responses(const Eigen::VectorXd& y, std::size_t R) {
  const auto r = static_cast<Eigen::Index>(R);
  if (y.size() % r != 0) throw DomainError("unstack_responses: length not a multiple of R");
  Eigen::MatrixXd t = Eigen::Map<const Eigen::MatrixXd>(y.data(), r, y.size() / r);
  return t.transpose();
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& X, std::size_t R) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p0 = X.cols();
  const auto r = static_cast<Eigen::Index>(R);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n * r, p0 * r);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < r; ++k) D.block(i * r + k, k * p0, 1, p0) = X.row(i);
  }
  return D;
}

Eigen::MatrixXd site_design(const Eigen::VectorXd& x, std::size_t R) {
  const auto r = static_cast<Eigen::Index>(R);
  const Eigen::Index p0 = x.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(r, p0 * r);
  for (Eigen::Index k = 0; k < r; ++k) D.block(k, k * p0, 1, p0) = x.transpose();
  return D;
}

}  // namespace fsagp
