#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fsagp/geometry.hpp"

namespace fsagp {

enum class CorrelationFamily { Exponential, Matern };

/// Isotropic correlation of one latent process. Exponential is Matern with smoothness 0.5.
struct CorrelationSpec {
  CorrelationFamily family = CorrelationFamily::Exponential;
  double range = 1.0;
  double smoothness = 0.5;

  static CorrelationSpec exponential(double range) {
    return {CorrelationFamily::Exponential, range, 0.5};
  }
  static CorrelationSpec matern(double range, double smoothness) {
    return {CorrelationFamily::Matern, range, smoothness};
  }
};

double correlation(const CorrelationSpec& spec, double d);

/// Spherical taper, one range per response variable (or one shared range).
struct TaperSpec {
  std::vector<double> ranges;

  double range_for(std::size_t response) const;
};

/// (1 - d/gamma)_+^2 (1 + d/(2 gamma)); exactly zero for d >= gamma.
double taper(double gamma, double d);
double taper(const TaperSpec& spec, std::size_t response, double d);

/// Columns of a covariate matrix X(s), in order.
struct CovariateTerm {
  enum class Kind { Intercept, LegendreLatitude, LandOcean, Longitude, AltitudeScaled, Custom };
  Kind kind = Kind::Intercept;
  int order = 0;       // LegendreLatitude
  std::string column;  // Custom

  static CovariateTerm intercept() { return {Kind::Intercept, 0, {}}; }
  static CovariateTerm legendre(int order) { return {Kind::LegendreLatitude, order, {}}; }
  static CovariateTerm land_ocean() { return {Kind::LandOcean, 0, {}}; }
  static CovariateTerm longitude() { return {Kind::Longitude, 0, {}}; }
  static CovariateTerm altitude() { return {Kind::AltitudeScaled, 0, {}}; }
  static CovariateTerm custom(std::string name) { return {Kind::Custom, 0, std::move(name)}; }
};

struct CovariateSpec {
  std::vector<CovariateTerm> terms;

  std::size_t p() const noexcept { return terms.size(); }
};

/// Per-site auxiliary columns: land flag (1 land, 0 ocean), altitude in metres, and
/// named custom columns.
struct SiteAux {
  std::vector<double> land;
  std::vector<double> altitude;
  std::map<std::string, std::vector<double>> custom;

  SiteAux subset(const std::vector<std::size_t>& idx) const;
};

/// Legendre polynomial P_k(x) by the three-term recurrence.
double legendre(int order, double x);

/// n x p matrix, columns in `spec.terms` order. Latitude terms use the site's x coordinate
/// (degrees) and require a Chordal location set.
Eigen::MatrixXd build_covariates(const CovariateSpec& spec, const LocationSet& sites,
                                 const SiteAux& aux = {});

struct ConstantTransform {
  Eigen::MatrixXd A;  // R x Q, lower triangular with positive diagonal
};

/// a_ij(s) = X_A(s)^T eta_ij for i >= j; the diagonal is taken in absolute value.
struct VaryingTransform {
  CovariateSpec covariates;
  /// One coefficient vector per lower-triangular entry, ordered (0,0),(1,0),(1,1),(2,0),...
  std::vector<Eigen::VectorXd> eta;
};

/// Linear model of co-regionalization: w(s) = A(s) U(s) with independent unit-variance U_q.
struct LmcSpec {
  std::size_t R = 1;
  std::vector<CorrelationSpec> latent;
  std::variant<ConstantTransform, VaryingTransform> transform;

  std::size_t Q() const noexcept { return latent.size(); }
  bool varying() const noexcept { return std::holds_alternative<VaryingTransform>(transform); }
  /// Length of X_A(s), zero for a constant transform.
  std::size_t transform_dim() const;

  void validate() const;
};

/// Lower-triangular (i >= j, j < Q) entry list in the order used by VaryingTransform::eta.
std::vector<std::pair<std::size_t, std::size_t>> lower_entries(std::size_t R, std::size_t Q);

/// Diagonal measurement-error covariance; an empty vector means no nugget.
struct NuggetSpec {
  Eigen::VectorXd variances;

  bool present() const noexcept { return variances.size() > 0; }
  static NuggetSpec none() { return {}; }
  static NuggetSpec shared(std::size_t R, double tau2) {
    return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(R), tau2)};
  }
};

/// Everything that determines the data covariance besides the approximation scheme.
struct CovarianceParams {
  LmcSpec lmc;
  NuggetSpec nugget;
};

Eigen::MatrixXd transform_at(const LmcSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xa);

/// A(s) for every row of `xa` (or the constant matrix repeated when not varying).
std::vector<Eigen::MatrixXd> transforms_at_sites(const LmcSpec& spec, const Eigen::MatrixXd& xa,
                                                 std::size_t n);

/// A_s diag(rho_1(d), ..., rho_Q(d)) A_t^T.
Eigen::MatrixXd cross_cov_block(const LmcSpec& spec, const Eigen::MatrixXd& A_s,
                                const Eigen::MatrixXd& A_t, double d);

/// Writes the R x R block into `out` at (row, col) without temporaries.
void add_cross_cov_block(const LmcSpec& spec, const Eigen::MatrixXd& A_s,
                         const Eigen::MatrixXd& A_t, double d, Eigen::Ref<Eigen::MatrixXd> out);

/// (na R) x (nb R) cross-covariance between two site lists with precomputed transforms
/// and distances (na x nb).
Eigen::MatrixXd cross_cov_matrix(const LmcSpec& spec, const std::vector<Eigen::MatrixXd>& A_a,
                                 const std::vector<Eigen::MatrixXd>& A_b,
                                 const Eigen::MatrixXd& dist);

/// Symmetric version of cross_cov_matrix for one site list.
Eigen::MatrixXd cov_matrix(const LmcSpec& spec, const std::vector<Eigen::MatrixXd>& A,
                           const Eigen::MatrixXd& dist);

/// nR x nR Sigma_w, site-major ordering (index i*R + r).
Eigen::MatrixXd assemble_sigma_w(const LmcSpec& spec, const LocationSet& sites,
                                 const Eigen::MatrixXd& covariates_A = {});

Eigen::MatrixXd distance_matrix(const LocationSet& a, const LocationSet& b);
Eigen::MatrixXd distance_matrix(const LocationSet& a);

}  // namespace fsagp
