#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsagp/covariance.hpp"
#include "fsagp/geometry.hpp"

namespace fsagp {

enum class SchemeKind { Full, PredictiveProcess, IndependentBlocks, FsaBlock, FsaTaper };

std::string to_string(SchemeKind kind);
/// Accepts "full", "pp"/"predictive_process", "ib"/"independent_blocks", "fsa_block",
/// "fsa_taper" (case-insensitive, '-' or '_').
SchemeKind scheme_kind_from_string(const std::string& name);

/// Which covariance engine evaluates likelihoods and predictions.
struct Scheme {
  SchemeKind kind = SchemeKind::Full;
  LocationSet knots;    // PredictiveProcess, FsaBlock, FsaTaper
  Partition partition;  // IndependentBlocks, FsaBlock
  TaperSpec taper;      // FsaTaper

  static Scheme full() { return {}; }
  static Scheme predictive_process(LocationSet knots);
  static Scheme independent_blocks(Partition partition);
  static Scheme fsa_block(LocationSet knots, Partition partition);
  static Scheme fsa_taper(LocationSet knots, TaperSpec taper);

  bool has_knots() const noexcept;
  bool has_blocks() const noexcept;
};

struct FactorOptions {
  /// Relative diagonal jitter (times the mean diagonal) tried when a factor is not PD.
  double jitter = 1e-8;
  /// Second and last attempt.
  double retry_jitter = 1e-6;
};

/// Parameter-independent geometry for one (scheme, sites) pair: block membership,
/// distances and taper neighbour lists. Built once per fit and shared by every workspace.
class ApproxLayout {
 public:
  struct TaperPair {
    std::uint32_t i;
    std::uint32_t j;
    double d;
    double weight;
  };

  /// `xa_sites` / `xa_knots` hold X_A(s) rows when the transform varies over space.
  ApproxLayout(Scheme scheme, LocationSet sites, std::size_t R, Eigen::MatrixXd xa_sites = {},
               Eigen::MatrixXd xa_knots = {});

  const Scheme& scheme() const noexcept { return scheme_; }
  SchemeKind kind() const noexcept { return scheme_.kind; }
  const LocationSet& sites() const noexcept { return sites_; }
  const LocationSet& knots() const noexcept { return scheme_.knots; }
  std::size_t n() const noexcept { return sites_.size(); }
  std::size_t m() const noexcept { return scheme_.knots.size(); }
  std::size_t R() const noexcept { return R_; }
  std::size_t dim() const noexcept { return n() * R_; }
  const Eigen::MatrixXd& xa_sites() const noexcept { return xa_sites_; }
  const Eigen::MatrixXd& xa_knots() const noexcept { return xa_knots_; }

  bool has_knots() const noexcept { return scheme_.has_knots(); }
  /// Dense diagonal blocks of D (Full uses a single block holding every site).
  bool has_dense_blocks() const noexcept;

  const std::vector<std::vector<std::size_t>>& blocks() const noexcept { return blocks_; }
  const std::vector<Eigen::MatrixXd>& block_distances() const noexcept { return block_dist_; }
  /// Site block index (IndependentBlocks, FsaBlock, Full); empty otherwise.
  const std::vector<std::size_t>& block_of_site() const noexcept { return block_of_site_; }
  const Eigen::MatrixXd& site_knot_distances() const noexcept { return site_knot_dist_; }
  const Eigen::MatrixXd& knot_distances() const noexcept { return knot_dist_; }
  /// Strictly-upper neighbour pairs (d < gamma_r) for response r.
  const std::vector<TaperPair>& taper_pairs(std::size_t r) const { return taper_pairs_.at(r); }

 private:
  Scheme scheme_;
  LocationSet sites_;
  std::size_t R_;
  Eigen::MatrixXd xa_sites_;
  Eigen::MatrixXd xa_knots_;
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<Eigen::MatrixXd> block_dist_;
  std::vector<std::size_t> block_of_site_;
  Eigen::MatrixXd site_knot_dist_;
  Eigen::MatrixXd knot_dist_;
  std::vector<std::vector<TaperPair>> taper_pairs_;
};

/// Diagonal jitter actually added (absolute amounts), per factor.
struct AppliedJitter {
  double knot = 0.0;
  double capacitance = 0.0;
  double diagonal = 0.0;
  std::vector<double> blocks;
  std::vector<double> taper;
};

/// Factored approximate data covariance
///   Sigma_Y = C Cstar^{-1} C^T + D,   D = Sigma_residual + I (x) Sigma_eps,
/// supporting quadratic forms, solves and the log-determinant through the
/// Sherman-Woodbury-Morrison identity. Immutable once built; safe to share across threads.
class LikelihoodWorkspace {
 public:
  LikelihoodWorkspace(std::shared_ptr<const ApproxLayout> layout, const CovarianceParams& params,
                      FactorOptions options = {});

  /// v^T Sigma_Y^{-1} v.
  double quad_form(const Eigen::VectorXd& v) const;
  double logdet() const noexcept { return logdet_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  std::uint64_t param_hash() const noexcept { return hash_; }
  /// Throws StaleWorkspaceError unless `params` are the ones this workspace was built from.
  void require_current(const CovarianceParams& params) const;

  const ApproxLayout& layout() const noexcept { return *layout_; }
  std::shared_ptr<const ApproxLayout> layout_ptr() const noexcept { return layout_; }
  const CovarianceParams& params() const noexcept { return params_; }
  const AppliedJitter& jitter() const noexcept { return jitter_; }

  const std::vector<Eigen::MatrixXd>& site_transforms() const noexcept { return A_sites_; }
  const std::vector<Eigen::MatrixXd>& knot_transforms() const noexcept { return A_knots_; }
  bool has_lowrank() const noexcept { return layout_->has_knots(); }
  /// Cholesky factor of the knot covariance Cstar (mR x mR).
  const Eigen::LLT<Eigen::MatrixXd>& knot_factor() const noexcept { return knot_llt_; }
  /// C(S, S*), nR x mR.
  const Eigen::MatrixXd& cross() const noexcept { return cross_; }
  /// L*^{-1} C^T, mR x nR; Sigma_wtilde = V^T V.
  const Eigen::MatrixXd& whitened_cross() const noexcept { return whitened_; }

  /// Largest square dense factor held (for checking that no nR x nR matrix is formed).
  std::size_t max_dense_factor_dim() const noexcept;

  /// Dense Sigma_Y rebuilt from the stored pieces. Test and debugging use only.
  Eigen::MatrixXd reconstruct_dense() const;

 private:
  Eigen::VectorXd apply_dinv(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply_dinv(const Eigen::MatrixXd& B) const;
  void build_diagonal(const FactorOptions& options);
  void build_blocks(const FactorOptions& options);
  void build_taper(const FactorOptions& options);

  std::shared_ptr<const ApproxLayout> layout_;
  CovarianceParams params_;
  std::uint64_t hash_ = 0;
  AppliedJitter jitter_;

  std::vector<Eigen::MatrixXd> A_sites_;
  std::vector<Eigen::MatrixXd> A_knots_;

  Eigen::LLT<Eigen::MatrixXd> knot_llt_;
  Eigen::MatrixXd cross_;
  Eigen::MatrixXd whitened_;
  Eigen::LLT<Eigen::MatrixXd> cap_llt_;

  Eigen::VectorXd diag_;  // diagonal D
  std::vector<Eigen::LLT<Eigen::MatrixXd>> block_llt_;
  std::vector<std::vector<Eigen::Index>> block_index_;
  using SparseFactor = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>;
  std::vector<std::unique_ptr<SparseFactor>> taper_llt_;
  std::vector<Eigen::SparseMatrix<double>> taper_mat_;

  double logdet_ = 0.0;
};

std::uint64_t hash_params(const CovarianceParams& params);

/// Dense predictive-process covariance C Cstar^{-1} C^T (nR x nR), for tests and small n.
Eigen::MatrixXd predictive_process_cov(const LmcSpec& spec, const LocationSet& sites,
                                       const LocationSet& knots,
                                       const Eigen::MatrixXd& xa_sites = {},
                                       const Eigen::MatrixXd& xa_knots = {});

/// Modulated residual covariance (no nugget) as a sparse nR x nR matrix; FsaBlock or FsaTaper.
Eigen::SparseMatrix<double> residual_cov(const Scheme& scheme, const LmcSpec& spec,
                                         const LocationSet& sites,
                                         const Eigen::MatrixXd& xa_sites = {},
                                         const Eigen::MatrixXd& xa_knots = {});

/// Convenience: layout + workspace in one call.
LikelihoodWorkspace data_cov(const Scheme& scheme, const CovarianceParams& params,
                             const LocationSet& sites, const Eigen::MatrixXd& xa_sites = {},
                             const Eigen::MatrixXd& xa_knots = {}, FactorOptions options = {});

double quad_form(const LikelihoodWorkspace& ws, const Eigen::VectorXd& v);
double logdet(const LikelihoodWorkspace& ws);

/// Gaussian log-density of Y (nR, site-major) with mean X beta under the workspace.
double loglik(const LikelihoodWorkspace& ws, const Eigen::VectorXd& beta, const Eigen::VectorXd& Y,
              const Eigen::MatrixXd& X);

}  // namespace fsagp
