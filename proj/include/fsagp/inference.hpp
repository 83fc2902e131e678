#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/covariance.hpp"
#include "fsagp/dataset.hpp"
#include "fsagp/random.hpp"

namespace fsagp {

/// Univariate prior density.
struct ScalarPrior {
  enum class Kind { Flat, Uniform, InvGamma, TruncatedNormal, Normal };
  Kind kind = Kind::Flat;
  double a = 0.0;  // lo | shape | mean
  double b = 0.0;  // hi | scale | variance

  static ScalarPrior flat() { return {}; }
  static ScalarPrior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static ScalarPrior inv_gamma(double shape, double scale) { return {Kind::InvGamma, shape, scale}; }
  /// Normal(mean, variance) restricted to (0, inf).
  static ScalarPrior truncated_normal(double mean, double var) {
    return {Kind::TruncatedNormal, mean, var};
  }
  static ScalarPrior normal(double mean, double var) { return {Kind::Normal, mean, var}; }

  bool in_support(double x) const noexcept;
  /// Log density up to an additive constant; -inf outside the support.
  double log_density(double x) const noexcept;
  void validate(const std::string& name) const;
};

struct PriorSpec {
  /// Normal prior on beta with diagonal variance; one value broadcasts to every coefficient.
  Eigen::VectorXd beta_mean = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd beta_var = Eigen::VectorXd::Constant(1, 1000.0);
  /// One per latent process, or one shared.
  std::vector<ScalarPrior> ranges = {ScalarPrior::uniform(1.0, 100.0)};
  ScalarPrior diag_A = ScalarPrior::inv_gamma(2.0, 1.0);
  ScalarPrior offdiag_A = ScalarPrior::normal(0.0, 1000.0);
  ScalarPrior eta = ScalarPrior::normal(0.0, 1000.0);
  ScalarPrior nugget = ScalarPrior::inv_gamma(2.0, 1.0);

  const ScalarPrior& range_prior(std::size_t q) const;
  double beta_mean_at(Eigen::Index k) const;
  double beta_var_at(Eigen::Index k) const;
  void validate() const;
};

enum class NuggetMode { None, Shared, PerResponse };

/// Current values of every model parameter.
struct ModelState {
  Eigen::VectorXd beta;
  CovarianceParams cov;
};

/// Named scalar coordinates of the covariance parameters, the scale each is sampled on,
/// and the Metropolis blocks they are grouped into.
class ParameterMap {
 public:
  enum class Role { Range, DiagA, OffdiagA, Eta, Nugget };

  struct Scalar {
    std::string name;
    Role role;
    bool log_scale;
    std::size_t q = 0;      // Range
    std::size_t i = 0;      // A row / response
    std::size_t j = 0;      // A column
    std::size_t entry = 0;  // Eta: lower-triangular entry index
    std::size_t coef = 0;   // Eta: coefficient index
  };

  struct Block {
    std::string name;
    std::vector<std::size_t> scalars;
  };

  /// `fixed` names scalars (or whole blocks) that are held at their initial values.
  ParameterMap(const LmcSpec& shape, NuggetMode nugget_mode, const PriorSpec& priors,
               const std::set<std::string>& fixed = {});

  const std::vector<Scalar>& scalars() const noexcept { return scalars_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  NuggetMode nugget_mode() const noexcept { return nugget_mode_; }

  Eigen::VectorXd natural(const CovarianceParams& params) const;
  void assign(CovarianceParams& params, const Eigen::VectorXd& natural) const;
  Eigen::VectorXd to_sampling(const Eigen::VectorXd& natural) const;
  Eigen::VectorXd from_sampling(const Eigen::VectorXd& sampling) const;

  /// Sum of log prior densities plus log-Jacobian of the sampling transform, evaluated at
  /// natural values; -inf outside the support.
  double log_prior_with_jacobian(const Eigen::VectorXd& natural) const;
  const ScalarPrior& prior_for(std::size_t k) const;

 private:
  std::vector<Scalar> scalars_;
  std::vector<Block> blocks_;
  std::vector<ScalarPrior> priors_;
  NuggetMode nugget_mode_;
  std::size_t R_;
};

struct McmcConfig {
  std::size_t iterations = 2000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t adapt_interval = 50;
  double target_acceptance = 0.3;
  double default_proposal_scale = 0.1;
  /// Initial random-walk scale per block name (on the sampling scale).
  std::map<std::string, double> proposal_scales;
  FactorOptions factor;

  void validate() const;
  std::size_t stored_samples() const noexcept;
};

struct PosteriorChain {
  std::vector<std::string> names;  // beta_*, then covariance scalars (natural scale)
  Eigen::MatrixXd samples;         // stored samples x names
  std::vector<double> loglik_trace;
  std::map<std::string, double> acceptance_rates;  // post burn-in
  std::map<std::string, double> final_scales;
  std::size_t numerical_rejections = 0;
  McmcConfig config;
  double seconds = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  Eigen::Index column(const std::string& name) const;
  double mean(const std::string& name) const;
  double sd(const std::string& name) const;
};

/// Response, design and geometry for one fit.
struct FitProblem {
  Eigen::VectorXd y;  // nR stacked site-major
  Eigen::MatrixXd X;  // nR x p
  std::shared_ptr<const ApproxLayout> layout;

  /// `xa_knots` supplies X_A at the knots when the transform varies over space.
  static FitProblem make(const SpatialDataset& data, const Scheme& scheme,
                         const Eigen::MatrixXd& xa_knots = {});
};

/// Full conditional of beta given the covariance workspace.
struct BetaConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

BetaConditional beta_conditional(const FitProblem& problem, const LikelihoodWorkspace& ws,
                                 const PriorSpec& priors);

/// One draw of beta from its Gaussian full conditional.
Eigen::VectorXd gibbs_beta(const FitProblem& problem, const LikelihoodWorkspace& ws,
                           const PriorSpec& priors, Rng& rng);

/// Generic random-walk Metropolis step on `z`: proposes z + scale * N(0, I) and accepts with
/// probability min(1, exp(target(z') - current)). `target` returns nullopt for a zero
/// density (outside support or failed evaluation). Updates z and current on acceptance.
bool metropolis_step(Eigen::VectorXd& z, double& current_log_target,
                     const std::function<std::optional<double>(const Eigen::VectorXd&)>& target,
                     double scale, Rng& rng);

/// Metropolis-within-Gibbs sampler for one fit. Holds the state and its workspace.
class SpatialSampler {
 public:
  SpatialSampler(FitProblem problem, ParameterMap map, PriorSpec priors, ModelState init,
                 McmcConfig config);

  void gibbs_beta();
  /// Returns true when the proposal was accepted (the workspace is then rebuilt).
  bool mh_update(std::size_t block);
  /// One sweep: beta, then every block in order.
  void sweep();
  /// Adapts block scales toward the target acceptance from the current window.
  void adapt();

  const ModelState& state() const noexcept { return state_; }
  const LikelihoodWorkspace& workspace() const noexcept { return *ws_; }
  const ParameterMap& map() const noexcept { return map_; }
  double loglik() const;
  double scale(std::size_t block) const { return blocks_.at(block).scale; }
  void set_scale(std::size_t block, double s) { blocks_.at(block).scale = s; }
  std::size_t accepted(std::size_t block) const { return blocks_.at(block).accepted; }
  std::size_t attempted(std::size_t block) const { return blocks_.at(block).attempted; }
  void reset_counts();
  std::size_t numerical_rejections() const noexcept { return numerical_rejections_; }
  Eigen::RowVectorXd sample_row() const;
  std::vector<std::string> column_names() const;

 private:
  struct BlockStats {
    double scale = 0.1;
    std::size_t accepted = 0;
    std::size_t attempted = 0;
    std::size_t window_accepted = 0;
    std::size_t window_attempted = 0;
  };

  FitProblem problem_;
  ParameterMap map_;
  PriorSpec priors_;
  ModelState state_;
  McmcConfig config_;
  Rng rng_;
  std::unique_ptr<LikelihoodWorkspace> ws_;
  std::vector<BlockStats> blocks_;
  double current_loglik_ = 0.0;
  std::size_t numerical_rejections_ = 0;
};

PosteriorChain run_mcmc(const FitProblem& problem, const ParameterMap& map, const PriorSpec& priors,
                        const ModelState& init, const McmcConfig& config);

/// Heuristic starting point: OLS for beta, Cholesky of the residual covariance for A, a
/// small nugget, and ranges a quarter into their prior support.
ModelState initial_state(const SpatialDataset& data, const LmcSpec& shape, NuggetMode mode,
                         const PriorSpec& priors);

/// ModelState for stored sample `row` of a chain.
ModelState state_from_sample(const PosteriorChain& chain, Eigen::Index row, const ParameterMap& map,
                             const ModelState& shape);

struct DicResult {
  double mean_deviance = 0.0;     // Dbar
  double deviance_at_mean = 0.0;  // D(theta_bar)
  double p_d = 0.0;
  double dic = 0.0;
};

/// DIC = Dbar + pD with the plug-in at the posterior mean of the sampling-scale parameters.
DicResult dic(const PosteriorChain& chain, const FitProblem& problem, const ParameterMap& map,
              const ModelState& shape, FactorOptions factor = {});

}  // namespace fsagp
