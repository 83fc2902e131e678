#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/dataset.hpp"
#include "fsagp/inference.hpp"
#include "fsagp/prediction.hpp"
#include "fsagp/random.hpp"

namespace fsagp {

/// Disc {(x, y) : (x - cx)^2 + (y - cy)^2 < r2}.
struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r2 = 1.0;

  bool contains(Point p) const noexcept {
    return (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy) < r2;
  }
};

struct SimulationScenario {
  std::size_t n_train = 500;
  std::size_t n_test = 100;
  double domain = 100.0;  // square [0, domain]^2
  CovarianceParams truth;
  /// Stacked per-response intercepts (length R).
  Eigen::VectorXd beta;
  std::vector<Circle> holes;
  /// Share of the hole test set drawn inside the circles (split evenly between them).
  double hole_fraction = 0.2;
  bool exclude_holes_from_training = true;
  std::uint64_t seed = 1;
  /// Largest joint site count simulated by dense Cholesky.
  std::size_t dense_cap = 5000;

  /// Bivariate LMC with ranges (10, 20), A = [[1, 0], [0.5, 0.5]], tau2 = 0.01.
  static SimulationScenario paper();
  /// paper() shrunk to 500 training and 100 test sites.
  static SimulationScenario desk();

  std::size_t hole_count() const;
  void validate() const;
};

struct SimulatedData {
  SpatialDataset train;
  SpatialDataset test_random;
  SpatialDataset test_hole;
};

std::vector<Point> uniform_sites(std::size_t n, double domain, Rng& rng,
                                 const std::vector<Circle>& exclude = {});
/// Uniform within circle ∩ [0, domain]^2 by rejection.
std::vector<Point> sites_in_circle(std::size_t n, const Circle& c, double domain, Rng& rng);

/// Y(s) = X(s) beta + A(s) U(s) + eps(s) at the given sites; U_q drawn by dense Cholesky.
Eigen::MatrixXd simulate_responses(const CovarianceParams& params, const LocationSet& sites,
                                   const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                   const Eigen::MatrixXd& XA, Rng& rng,
                                   std::size_t dense_cap = 5000);

/// Joint draw over training and both test designs so the test truth shares the latent field.
SimulatedData simulate_lmc(const SimulationScenario& scenario);

/// Approximation hyperparameters; unused fields are ignored for a given kind.
struct SchemeConfig {
  SchemeKind kind = SchemeKind::FsaBlock;
  std::size_t m = 225;
  std::size_t k_per_axis = 6;
  double gamma = 10.0;

  std::string label() const;
};

/// Knots from K-means on `sites` (seeded), grid partition over [0, domain]^2 (or Voronoi over
/// K-means centers when `voronoi_blocks` > 0).
Scheme build_scheme(const SchemeConfig& cfg, const LocationSet& sites, std::uint64_t seed,
                    std::optional<BoundingBox> box = std::nullopt,
                    std::size_t voronoi_blocks = 0);

double max_pairwise_distance(const LocationSet& sites);

/// Unif(1, d_max/3) ranges, IG(2, 1) diagonal A and nugget, N(0, 1000) otherwise.
PriorSpec default_priors(const LocationSet& sites, std::size_t Q);

struct SchemeReport;

struct ExperimentOptions {
  McmcConfig mcmc;
  /// Posterior draws used for predictions (evenly spaced; 0 means all).
  std::size_t prediction_samples = 50;
  std::map<std::string, double> proposal_scales = {
      {"phi_0", 0.2}, {"phi_1", 0.2}, {"A", 0.05}, {"tau2", 0.2}};
  /// Called after each scheme finishes.
  std::function<void(const SchemeReport&)> on_scheme;
};

struct SchemeReport {
  SchemeConfig config;
  PosteriorChain chain;
  std::map<std::string, double> posterior_mean;
  std::map<std::string, double> posterior_sd;
  DicResult dic;
  double mspe_random = 0.0;
  double mspe_hole = 0.0;
  std::vector<PredictionResult> predictions_random;
  std::vector<PredictionResult> predictions_hole;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct ExperimentReport {
  SimulationScenario scenario;
  std::vector<SchemeReport> schemes;

  const SchemeReport& find(SchemeKind kind) const;
};

/// The five schemes of the simulation study at the stated hyperparameters.
std::vector<SchemeConfig> paper_schemes();

ExperimentReport run_experiment(const SimulationScenario& scenario,
                                const std::vector<SchemeConfig>& schemes,
                                const ExperimentOptions& options);

/// Same as above with pre-simulated data.
ExperimentReport run_experiment(const SimulationScenario& scenario, const SimulatedData& data,
                                const std::vector<SchemeConfig>& schemes,
                                const ExperimentOptions& options);

struct BenchmarkRow {
  SchemeConfig config;
  double mspe = 0.0;
  double seconds = 0.0;
};

/// Plug-in BLUP MSPE on the hole test design and wall time (workspace + prediction; knot
/// selection excluded) for every sweep configuration. `on_row` fires after each one.
std::vector<BenchmarkRow> benchmark_mspe_time(
    const SimulationScenario& scenario, const std::vector<SchemeConfig>& sweep,
    const std::function<void(const BenchmarkRow&)>& on_row = {});

std::vector<BenchmarkRow> benchmark_mspe_time(
    const SimulationScenario& scenario, const SimulatedData& data,
    const std::vector<SchemeConfig>& sweep,
    const std::function<void(const BenchmarkRow&)>& on_row = {});

/// Default sweep over m (PredictiveProcess), (m, K) (FsaBlock) and (m, gamma) (FsaTaper).
std::vector<SchemeConfig> default_sweep();

struct DominanceSummary {
  /// Challenger points with strictly lower MSPE than every baseline point at most as slow.
  std::size_t wins = 0;
  /// Challenger points for which at least one baseline point fits the time budget.
  std::size_t comparable = 0;
};

DominanceSummary assess_dominance(const std::vector<BenchmarkRow>& rows, SchemeKind challenger,
                                  SchemeKind baseline);

/// Rectilinear grid: x ascending (latitude), y ascending (longitude, optionally periodic
/// with period 360).
struct RegularGrid {
  std::vector<double> x;
  std::vector<double> y;
  bool periodic_y = true;
};

/// Bilinear interpolation of `field` (x.size() x y.size()) onto every (x, y) node of `dst`.
Eigen::MatrixXd bilinear_regrid(const Eigen::MatrixXd& field, const RegularGrid& src,
                                const RegularGrid& dst);
double bilinear_at(const Eigen::MatrixXd& field, const RegularGrid& src, double x, double y);

/// Chordal sites on a lat/lon lattice, latitude-major.
LocationSet globe_grid(double lat0, double dlat, std::size_t nlat, double lon0, double dlon,
                       std::size_t nlon);

/// Covariates at knots; auxiliary columns (land, altitude, custom) come from the nearest
/// data site.
Eigen::MatrixXd knot_covariates(const CovariateSpec& spec, const LocationSet& knots,
                                const LocationSet& sites, const SiteAux& aux);

}  // namespace fsagp
