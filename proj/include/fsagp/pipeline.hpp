#pragma once

#include <optional>

#include "fsagp/config.hpp"
#include "fsagp/dataset.hpp"
#include "fsagp/inference.hpp"
#include "fsagp/prediction.hpp"

namespace fsagp {

/// Fills data.X (and data.XA for a varying transform) from the configured covariates.
void attach_covariates(const ModelConfig& cfg, SpatialDataset& data);

/// Everything run_mcmc needs, derived deterministically from a config and training data.
struct PreparedFit {
  ModelConfig config;
  SpatialDataset data;
  Scheme scheme;
  Eigen::MatrixXd xa_knots;
  FitProblem problem;
  PriorSpec priors;
  ModelState init;
  std::optional<ParameterMap> map;
};

PreparedFit prepare_fit(ModelConfig cfg, SpatialDataset data);

struct FitOutcome {
  PosteriorChain chain;
  DicResult dic;
};

FitOutcome fit(const PreparedFit& prep);

}  // namespace fsagp
