#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/dataset.hpp"
#include "fsagp/inference.hpp"

namespace fsagp {

/// A prediction location with its mean covariates x(s0) (length p0) and, for a varying
/// transform, X_A(s0).
struct PredictionSite {
  Point site;
  Eigen::VectorXd x;
  Eigen::VectorXd xa;
};

std::vector<PredictionSite> prediction_sites(const LocationSet& sites, const Eigen::MatrixXd& X,
                                             const Eigen::MatrixXd& XA = {});

struct PredictionResult {
  Point site;
  Eigen::VectorXd mean;  // R
  Eigen::MatrixXd cov;   // R x R
};

/// Fixed-parameter cokriging against one workspace. h(s0) follows the workspace's scheme:
/// low-rank cross-covariances, plus the exact residual on the nearest block (FsaBlock) or the
/// tapered residual (FsaTaper); exact everywhere for Full, block-local for IndependentBlocks.
class Cokriger {
 public:
  Cokriger(const LikelihoodWorkspace& ws, const Eigen::VectorXd& beta, const Eigen::VectorXd& y,
           const Eigen::MatrixXd& X);

  /// R x nR cross-covariance between Y(s0) and the training data.
  Eigen::MatrixXd cross_to_data(const PredictionSite& s0) const;
  /// Covariance of the approximating process at s0, plus the nugget.
  Eigen::MatrixXd prior_cov(const PredictionSite& s0) const;
  PredictionResult predict(const PredictionSite& s0, bool with_cov = true) const;
  std::vector<PredictionResult> predict(const std::vector<PredictionSite>& sites,
                                        bool with_cov = true) const;

 private:
  Eigen::MatrixXd transform_for(const PredictionSite& s0) const;
  /// L*^{-1} C(S*, s0): mR x R.
  Eigen::MatrixXd whitened_knot_cross(const PredictionSite& s0, const Eigen::MatrixXd& A0) const;

  const LikelihoodWorkspace& ws_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd alpha_;  // Sigma_Y^{-1} (y - X beta)
  std::size_t p0_ = 0;
};

PredictionResult cokrige(const PredictionSite& s0, const CovarianceParams& params,
                         const Eigen::VectorXd& beta, const SpatialDataset& train,
                         const Scheme& scheme, const Eigen::MatrixXd& xa_knots = {});

/// Mean over sites and responses of the squared error; `truth` is sites x R.
double mspe(const std::vector<PredictionResult>& predictions, const Eigen::MatrixXd& truth);
double mspe(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

Eigen::MatrixXd prediction_means(const std::vector<PredictionResult>& predictions);

struct PluginBlupResult {
  double mspe = 0.0;
  double seconds = 0.0;
  std::vector<PredictionResult> predictions;
};

/// Cokriging at the test sites with fixed (true) parameters; `seconds` covers the workspace
/// build and all predictions.
PluginBlupResult plugin_blup_mspe(const CovarianceParams& true_params, const Eigen::VectorXd& beta,
                                  const SpatialDataset& train, const SpatialDataset& test,
                                  const Scheme& scheme, const Eigen::MatrixXd& xa_knots = {},
                                  bool with_cov = false);

/// Posterior predictive summary: per-sample cokriging means averaged over `max_samples`
/// evenly spaced stored draws (0 means all); covariance is the mean within-sample covariance
/// plus the between-sample dispersion of the means.
std::vector<PredictionResult> posterior_predict(const PosteriorChain& chain,
                                                const FitProblem& problem, const ParameterMap& map,
                                                const ModelState& shape,
                                                const std::vector<PredictionSite>& sites,
                                                std::size_t max_samples = 0,
                                                FactorOptions factor = {});

}  // namespace fsagp
