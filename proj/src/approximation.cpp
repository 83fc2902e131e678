#include "fsagp/approximation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "fsagp/error.hpp"

namespace fsagp {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Full: return "full";
    case SchemeKind::PredictiveProcess: return "predictive_process";
    case SchemeKind::IndependentBlocks: return "independent_blocks";
    case SchemeKind::FsaBlock: return "fsa_block";
    case SchemeKind::FsaTaper: return "fsa_taper";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(c)));
  if (s == "full") return SchemeKind::Full;
  if (s == "pp" || s == "predictive_process") return SchemeKind::PredictiveProcess;
  if (s == "ib" || s == "independent_blocks") return SchemeKind::IndependentBlocks;
  if (s == "fsa_block" || s == "fsablock") return SchemeKind::FsaBlock;
  if (s == "fsa_taper" || s == "fsataper") return SchemeKind::FsaTaper;
  throw DomainError("unknown scheme '" + name + "'");
}

Scheme Scheme::predictive_process(LocationSet knots) {
  Scheme s;
  s.kind = SchemeKind::PredictiveProcess;
  s.knots = std::move(knots);
  return s;
}

Scheme Scheme::independent_blocks(Partition partition) {
  Scheme s;
  s.kind = SchemeKind::IndependentBlocks;
  s.partition = std::move(partition);
  return s;
}

Scheme Scheme::fsa_block(LocationSet knots, Partition partition) {
  Scheme s;
  s.kind = SchemeKind::FsaBlock;
  s.knots = std::move(knots);
  s.partition = std::move(partition);
  return s;
}

Scheme Scheme::fsa_taper(LocationSet knots, TaperSpec taper) {
  Scheme s;
  s.kind = SchemeKind::FsaTaper;
  s.knots = std::move(knots);
  s.taper = std::move(taper);
  return s;
}

bool Scheme::has_knots() const noexcept {
  return kind == SchemeKind::PredictiveProcess || kind == SchemeKind::FsaBlock ||
         kind == SchemeKind::FsaTaper;
}

bool Scheme::has_blocks() const noexcept {
  return kind == SchemeKind::IndependentBlocks || kind == SchemeKind::FsaBlock;
}

// ---------------------------------------------------------------------------------------
// Layout

ApproxLayout::ApproxLayout(Scheme scheme, LocationSet sites, std::size_t R,
                           Eigen::MatrixXd xa_sites, Eigen::MatrixXd xa_knots)
    : scheme_(std::move(scheme)),
      sites_(std::move(sites)),
      R_(R),
      xa_sites_(std::move(xa_sites)),
      xa_knots_(std::move(xa_knots)) {
  const std::size_t n = sites_.size();
  if (n == 0) throw DomainError("ApproxLayout: no sites");
  if (R_ == 0) throw DomainError("ApproxLayout: R must be positive");
  if (xa_sites_.size() > 0 && static_cast<std::size_t>(xa_sites_.rows()) != n) {
    throw DomainError("ApproxLayout: site covariate rows do not match site count");
  }

  if (scheme_.has_knots()) {
    if (scheme_.knots.empty()) throw DomainError("ApproxLayout: scheme needs knots");
    if (scheme_.knots.metric() != sites_.metric()) {
      throw DomainError("ApproxLayout: knots and sites use different metrics");
    }
    if (xa_sites_.size() > 0 && static_cast<std::size_t>(xa_knots_.rows()) != scheme_.knots.size()) {
      throw DomainError("ApproxLayout: knot covariates required for a varying transform");
    }
    site_knot_dist_ = distance_matrix(sites_, scheme_.knots);
    knot_dist_ = distance_matrix(scheme_.knots);
  }

  switch (scheme_.kind) {
    case SchemeKind::Full: {
      blocks_.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) blocks_[0][i] = i;
      block_of_site_.assign(n, 0);
      break;
    }
    case SchemeKind::IndependentBlocks:
    case SchemeKind::FsaBlock: {
      const auto& part = scheme_.partition;
      if (part.assignment.size() != n) {
        throw DomainError("ApproxLayout: partition does not cover the sites");
      }
      for (auto b : part.assignment) {
        if (b >= part.K) throw DomainError("ApproxLayout: block index out of range");
      }
      blocks_ = part.members();
      block_of_site_ = part.assignment;
      break;
    }
    case SchemeKind::FsaTaper: {
      const auto& ranges = scheme_.taper.ranges;
      if (ranges.size() != 1 && ranges.size() != R_) {
        throw DomainError("ApproxLayout: taper needs one range or one per response");
      }
      for (double g : ranges) {
        if (!(g > 0.0)) throw DomainError("ApproxLayout: taper range must be positive");
      }
      taper_pairs_.resize(R_);
      const double gmax = *std::max_element(ranges.begin(), ranges.end());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double d = sites_.distance(i, j);
          if (d >= gmax) continue;
          for (std::size_t r = 0; r < R_; ++r) {
            const double w = taper(scheme_.taper, r, d);
            if (w > 0.0) {
              taper_pairs_[r].push_back(
                  {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), d, w});
            }
          }
        }
      }
      break;
    }
    case SchemeKind::PredictiveProcess:
      break;
  }

  for (const auto& blk : blocks_) {
    Eigen::MatrixXd D(static_cast<Eigen::Index>(blk.size()), static_cast<Eigen::Index>(blk.size()));
    for (std::size_t a = 0; a < blk.size(); ++a) {
      D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = 0.0;
      for (std::size_t b = a + 1; b < blk.size(); ++b) {
        const double d = sites_.distance(blk[a], blk[b]);
        D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d;
        D(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = d;
      }
    }
    block_dist_.push_back(std::move(D));
  }
}

bool ApproxLayout::has_dense_blocks() const noexcept {
  return scheme_.kind == SchemeKind::Full || scheme_.has_blocks();
}

// ---------------------------------------------------------------------------------------
// Helpers

namespace {

std::uint64_t fnv_mix(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv_double(std::uint64_t h, double v) { return fnv_mix(h, &v, sizeof v); }

std::uint64_t fnv_matrix(std::uint64_t h, const Eigen::MatrixXd& m) {
  const Eigen::Index dims[2] = {m.rows(), m.cols()};
  h = fnv_mix(h, dims, sizeof dims);
  return fnv_mix(h, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

double mean_diagonal(const Eigen::MatrixXd& m) {
  return m.rows() > 0 ? m.diagonal().mean() : 0.0;
}

// LLT with the escalating-jitter policy: plain, then +jitter*mean(diag), then
// +retry_jitter*mean(diag). `m` receives the jitter that was finally used.
Eigen::LLT<Eigen::MatrixXd> factor_spd(Eigen::MatrixXd& m, const std::string& name,
                                       const FactorOptions& options, double& applied,
                                       double fallback_scale = 1.0) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  applied = 0.0;
  if (llt.info() == Eigen::Success) return llt;
  double scale = std::abs(mean_diagonal(m));
  if (!(scale > 0.0)) scale = fallback_scale;
  for (double rel : {options.jitter, options.retry_jitter}) {
    const double add = rel * scale - applied;
    m.diagonal().array() += add;
    applied += add;
    llt.compute(m);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError(name, "not positive definite after jitter " + std::to_string(applied));
}

double llt_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::vector<Eigen::Index> expand(const std::vector<std::size_t>& sites, std::size_t R) {
  std::vector<Eigen::Index> idx;
  idx.reserve(sites.size() * R);
  for (auto s : sites) {
    for (std::size_t r = 0; r < R; ++r) idx.push_back(static_cast<Eigen::Index>(s * R + r));
  }
  return idx;
}

std::vector<Eigen::MatrixXd> gather_transforms(const std::vector<Eigen::MatrixXd>& A,
                                               const std::vector<std::size_t>& idx) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(A[i]);
  return out;
}

// Exact within-block covariance minus (optionally) the low-rank part.
Eigen::MatrixXd residual_block(const LmcSpec& lmc, const std::vector<Eigen::MatrixXd>& A_sites,
                               const std::vector<std::size_t>& block,
                               const Eigen::MatrixXd& dist, const Eigen::MatrixXd* whitened,
                               std::size_t R) {
  Eigen::MatrixXd Db = cov_matrix(lmc, gather_transforms(A_sites, block), dist);
  if (whitened != nullptr) {
    const auto idx = expand(block, R);
    Eigen::MatrixXd Vb = (*whitened)(Eigen::all, idx);
    Db.noalias() -= Vb.transpose() * Vb;
  }
  return Db;
}

// Entry (i, j) of response r in Sigma_w: sum_q A_i(r,q) A_j(r,q) rho_q(d).
double sigma_w_entry(const LmcSpec& lmc, const Eigen::MatrixXd& Ai, const Eigen::MatrixXd& Aj,
                     std::size_t r, double d) {
  double acc = 0.0;
  const auto rr = static_cast<Eigen::Index>(r);
  for (std::size_t q = 0; q < lmc.Q(); ++q) {
    const auto qq = static_cast<Eigen::Index>(q);
    if (Ai(rr, qq) == 0.0 || Aj(rr, qq) == 0.0) continue;
    acc += Ai(rr, qq) * Aj(rr, qq) * correlation(lmc.latent[q], d);
  }
  return acc;
}

// Tapered residual triplets for response r (no nugget), both triangles.
std::vector<Eigen::Triplet<double>> taper_triplets(const ApproxLayout& layout, const LmcSpec& lmc,
                                                   const std::vector<Eigen::MatrixXd>& A_sites,
                                                   const Eigen::MatrixXd& V, std::size_t r) {
  const std::size_t R = layout.R();
  const std::size_t n = layout.n();
  std::vector<Eigen::Triplet<double>> trip;
  const auto& pairs = layout.taper_pairs(r);
  trip.reserve(n + 2 * pairs.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i * R + r);
    const double v = sigma_w_entry(lmc, A_sites[i], A_sites[i], r, 0.0) - V.col(col).squaredNorm();
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), v);
  }
  for (const auto& p : pairs) {
    const auto ci = static_cast<Eigen::Index>(p.i * R + r);
    const auto cj = static_cast<Eigen::Index>(p.j * R + r);
    const double s = sigma_w_entry(lmc, A_sites[p.i], A_sites[p.j], r, p.d) - V.col(ci).dot(V.col(cj));
    const double v = s * p.weight;
    trip.emplace_back(static_cast<int>(p.i), static_cast<int>(p.j), v);
    trip.emplace_back(static_cast<int>(p.j), static_cast<int>(p.i), v);
  }
  return trip;
}

void check_params(const ApproxLayout& layout, const CovarianceParams& params) {
  params.lmc.validate();
  if (params.lmc.R != layout.R()) throw DomainError("workspace: R does not match the layout");
  if (params.nugget.present()) {
    if (static_cast<std::size_t>(params.nugget.variances.size()) != layout.R()) {
      throw DomainError("workspace: nugget needs one variance per response");
    }
    if ((params.nugget.variances.array() < 0.0).any()) {
      throw DomainError("workspace: nugget variances must be nonnegative");
    }
  }
  if (params.lmc.varying() && static_cast<std::size_t>(layout.xa_sites().cols()) != params.lmc.transform_dim()) {
    throw DomainError("workspace: varying transform needs X_A covariates for every site");
  }
}

double nugget_at(const CovarianceParams& params, std::size_t r) {
  return params.nugget.present() ? params.nugget.variances(static_cast<Eigen::Index>(r)) : 0.0;
}

}  // namespace

std::uint64_t hash_params(const CovarianceParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto R = static_cast<std::uint64_t>(params.lmc.R);
  h = fnv_mix(h, &R, sizeof R);
  for (const auto& c : params.lmc.latent) {
    const int fam = static_cast<int>(c.family);
    h = fnv_mix(h, &fam, sizeof fam);
    h = fnv_double(h, c.range);
    h = fnv_double(h, c.smoothness);
  }
  if (const auto* ct = std::get_if<ConstantTransform>(&params.lmc.transform)) {
    h = fnv_matrix(h, ct->A);
  } else {
    for (const auto& e : std::get<VaryingTransform>(params.lmc.transform).eta) h = fnv_matrix(h, e);
  }
  h = fnv_matrix(h, params.nugget.variances);
  return h;
}

// ---------------------------------------------------------------------------------------
// Workspace

LikelihoodWorkspace::LikelihoodWorkspace(std::shared_ptr<const ApproxLayout> layout,
                                         const CovarianceParams& params, FactorOptions options)
    : layout_(std::move(layout)), params_(params) {
  const ApproxLayout& L = *layout_;
  check_params(L, params_);
  hash_ = hash_params(params_);
  const auto& lmc = params_.lmc;

  A_sites_ = transforms_at_sites(lmc, L.xa_sites(), L.n());
  Eigen::MatrixXd cstar;
  if (L.has_knots()) {
    A_knots_ = transforms_at_sites(lmc, L.xa_knots(), L.m());
    cstar = cov_matrix(lmc, A_knots_, L.knot_distances());
    knot_llt_ = factor_spd(cstar, "knot covariance", options, jitter_.knot);
    cross_ = cross_cov_matrix(lmc, A_sites_, A_knots_, L.site_knot_distances());
    whitened_ = knot_llt_.matrixL().solve(cross_.transpose());
  }

  switch (L.kind()) {
    case SchemeKind::PredictiveProcess: build_diagonal(options); break;
    case SchemeKind::FsaTaper: build_taper(options); break;
    default: build_blocks(options); break;
  }

  if (L.has_knots()) {
    // Capacitance Cstar + C^T D^{-1} C.
    Eigen::MatrixXd cap = cstar;
    if (L.kind() == SchemeKind::PredictiveProcess) {
      const Eigen::MatrixXd G = diag_.cwiseSqrt().cwiseInverse().asDiagonal() * cross_;
      cap.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose());
    } else if (L.has_dense_blocks()) {
      for (std::size_t k = 0; k < block_llt_.size(); ++k) {
        if (block_index_[k].empty()) continue;
        Eigen::MatrixXd G = cross_(block_index_[k], Eigen::all);
        block_llt_[k].matrixL().solveInPlace(G);
        cap.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose());
      }
    } else {
      cap.noalias() += cross_.transpose() * apply_dinv(cross_);
    }
    cap.triangularView<Eigen::StrictlyUpper>() = cap.transpose();
    cap_llt_ = factor_spd(cap, "capacitance", options, jitter_.capacitance);
    logdet_ += llt_logdet(cap_llt_) - llt_logdet(knot_llt_);
  }
}

void LikelihoodWorkspace::build_diagonal(const FactorOptions& options) {
  const std::size_t R = layout_->R();
  diag_.resize(static_cast<Eigen::Index>(layout_->dim()));
  for (std::size_t i = 0; i < layout_->n(); ++i) {
    for (std::size_t r = 0; r < R; ++r) diag_(static_cast<Eigen::Index>(i * R + r)) = nugget_at(params_, r);
  }
  if ((diag_.array() <= 0.0).any()) {
    // Nugget-free predictive process: D is singular, so fall back to jitter scaled by the
    // process variance.
    const double scale = whitened_.colwise().squaredNorm().mean();
    const double add = options.jitter * (scale > 0.0 ? scale : 1.0);
    diag_.array() += add;
    jitter_.diagonal = add;
  }
  logdet_ = diag_.array().log().sum();
}

void LikelihoodWorkspace::build_blocks(const FactorOptions& options) {
  const ApproxLayout& L = *layout_;
  const std::size_t R = L.R();
  const auto& blocks = L.blocks();
  const bool subtract = L.kind() == SchemeKind::FsaBlock;
  block_llt_.resize(blocks.size());
  block_index_.resize(blocks.size());
  jitter_.blocks.assign(blocks.size(), 0.0);
  logdet_ = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].empty()) continue;
    block_index_[k] = expand(blocks[k], R);
    Eigen::MatrixXd Db = residual_block(params_.lmc, A_sites_, blocks[k], L.block_distances()[k],
                                        subtract ? &whitened_ : nullptr, R);
    for (Eigen::Index a = 0; a < Db.rows(); ++a) {
      Db(a, a) += nugget_at(params_, static_cast<std::size_t>(a) % R);
    }
    const std::string name = L.kind() == SchemeKind::Full ? "full covariance"
                                                           : "residual block " + std::to_string(k);
    block_llt_[k] = factor_spd(Db, name, options, jitter_.blocks[k]);
    logdet_ += llt_logdet(block_llt_[k]);
  }
}

void LikelihoodWorkspace::build_taper(const FactorOptions& options) {
  const ApproxLayout& L = *layout_;
  const std::size_t R = L.R();
  const auto n = static_cast<int>(L.n());
  taper_llt_.clear();
  taper_mat_.clear();
  jitter_.taper.assign(R, 0.0);
  logdet_ = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    auto trip = taper_triplets(L, params_.lmc, A_sites_, whitened_, r);
    const double tau2 = nugget_at(params_, r);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, tau2);
    Eigen::SparseMatrix<double> S(n, n);
    S.setFromTriplets(trip.begin(), trip.end());
    S.makeCompressed();

    auto factor = std::make_unique<SparseFactor>(S);
    if (factor->info() != Eigen::Success) {
      const double scale = std::abs(S.diagonal().mean());
      for (double rel : {options.jitter, options.retry_jitter}) {
        const double add = rel * (scale > 0.0 ? scale : 1.0) - jitter_.taper[r];
        for (int i = 0; i < n; ++i) S.coeffRef(i, i) += add;
        jitter_.taper[r] += add;
        factor->compute(S);
        if (factor->info() == Eigen::Success) break;
      }
      if (factor->info() != Eigen::Success) {
        throw NumericalError("tapered residual " + std::to_string(r),
                             "not positive definite after jitter");
      }
    }
    Eigen::SparseMatrix<double> Lf = factor->matrixL();
    logdet_ += 2.0 * Lf.diagonal().array().log().sum();
    taper_llt_.push_back(std::move(factor));
    taper_mat_.push_back(std::move(S));
  }
}

Eigen::VectorXd LikelihoodWorkspace::apply_dinv(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd m = v;
  return apply_dinv(m).col(0);
}

Eigen::MatrixXd LikelihoodWorkspace::apply_dinv(const Eigen::MatrixXd& B) const {
  const ApproxLayout& L = *layout_;
  const std::size_t R = L.R();
  if (static_cast<std::size_t>(B.rows()) != L.dim()) {
    throw DomainError("workspace: vector length does not match nR");
  }
  switch (L.kind()) {
    case SchemeKind::PredictiveProcess:
      return diag_.cwiseInverse().asDiagonal() * B;
    case SchemeKind::FsaTaper: {
      Eigen::MatrixXd out(B.rows(), B.cols());
      const auto n = static_cast<Eigen::Index>(L.n());
      for (std::size_t r = 0; r < R; ++r) {
        Eigen::MatrixXd part = B(Eigen::seqN(static_cast<Eigen::Index>(r), n, static_cast<Eigen::Index>(R)),
                                 Eigen::all);
        Eigen::MatrixXd sol = taper_llt_[r]->solve(part);
        out(Eigen::seqN(static_cast<Eigen::Index>(r), n, static_cast<Eigen::Index>(R)), Eigen::all) = sol;
      }
      return out;
    }
    default: {
      Eigen::MatrixXd out(B.rows(), B.cols());
      for (std::size_t k = 0; k < block_llt_.size(); ++k) {
        if (block_index_[k].empty()) continue;
        Eigen::MatrixXd part = B(block_index_[k], Eigen::all);
        block_llt_[k].solveInPlace(part);
        out(block_index_[k], Eigen::all) = part;
      }
      return out;
    }
  }
}

double LikelihoodWorkspace::quad_form(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd z = apply_dinv(v);
  double q = v.dot(z);
  if (has_lowrank()) {
    const Eigen::VectorXd t = cross_.transpose() * z;
    q -= t.dot(cap_llt_.solve(t));
  }
  return q;
}

Eigen::VectorXd LikelihoodWorkspace::solve(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd m = v;
  return solve(m).col(0);
}

Eigen::MatrixXd LikelihoodWorkspace::solve(const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd z = apply_dinv(B);
  if (has_lowrank()) {
    const Eigen::MatrixXd t = cap_llt_.solve(cross_.transpose() * z);
    z -= apply_dinv(Eigen::MatrixXd(cross_ * t));
  }
  return z;
}

void LikelihoodWorkspace::require_current(const CovarianceParams& params) const {
  if (hash_params(params) != hash_) {
    throw StaleWorkspaceError("workspace was built for different covariance parameters");
  }
}

std::size_t LikelihoodWorkspace::max_dense_factor_dim() const noexcept {
  std::size_t d = 0;
  if (has_lowrank()) d = static_cast<std::size_t>(knot_llt_.matrixLLT().rows());
  for (const auto& b : block_llt_) d = std::max(d, static_cast<std::size_t>(b.matrixLLT().rows()));
  return d;
}

Eigen::MatrixXd LikelihoodWorkspace::reconstruct_dense() const {
  const ApproxLayout& L = *layout_;
  const auto N = static_cast<Eigen::Index>(L.dim());
  const std::size_t R = L.R();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, N);
  if (has_lowrank()) S.noalias() += whitened_.transpose() * whitened_;
  switch (L.kind()) {
    case SchemeKind::PredictiveProcess:
      S.diagonal() += diag_;
      break;
    case SchemeKind::FsaTaper: {
      for (std::size_t r = 0; r < R; ++r) {
        Eigen::MatrixXd dense = taper_mat_[r];
        for (Eigen::Index i = 0; i < dense.rows(); ++i) {
          for (Eigen::Index j = 0; j < dense.cols(); ++j) {
            S(i * static_cast<Eigen::Index>(R) + static_cast<Eigen::Index>(r),
              j * static_cast<Eigen::Index>(R) + static_cast<Eigen::Index>(r)) += dense(i, j);
          }
        }
      }
      break;
    }
    default:
      for (std::size_t k = 0; k < block_llt_.size(); ++k) {
        if (block_index_[k].empty()) continue;
        S(block_index_[k], block_index_[k]) += block_llt_[k].reconstructedMatrix();
      }
      break;
  }
  return S;
}

// ---------------------------------------------------------------------------------------
// Free functions

Eigen::MatrixXd predictive_process_cov(const LmcSpec& spec, const LocationSet& sites,
                                       const LocationSet& knots, const Eigen::MatrixXd& xa_sites,
                                       const Eigen::MatrixXd& xa_knots) {
  spec.validate();
  const auto A_s = transforms_at_sites(spec, xa_sites, sites.size());
  const auto A_k = transforms_at_sites(spec, xa_knots, knots.size());
  Eigen::MatrixXd cstar = cov_matrix(spec, A_k, distance_matrix(knots));
  double applied = 0.0;
  const auto llt = factor_spd(cstar, "knot covariance", FactorOptions{}, applied);
  const Eigen::MatrixXd C = cross_cov_matrix(spec, A_s, A_k, distance_matrix(sites, knots));
  const Eigen::MatrixXd V = llt.matrixL().solve(C.transpose());
  return V.transpose() * V;
}

Eigen::SparseMatrix<double> residual_cov(const Scheme& scheme, const LmcSpec& spec,
                                         const LocationSet& sites, const Eigen::MatrixXd& xa_sites,
                                         const Eigen::MatrixXd& xa_knots) {
  if (scheme.kind != SchemeKind::FsaBlock && scheme.kind != SchemeKind::FsaTaper) {
    throw DomainError("residual_cov: scheme must be fsa_block or fsa_taper");
  }
  spec.validate();
  const ApproxLayout layout(scheme, sites, spec.R, xa_sites, xa_knots);
  const std::size_t R = spec.R;
  const auto A_s = transforms_at_sites(spec, layout.xa_sites(), layout.n());
  const auto A_k = transforms_at_sites(spec, layout.xa_knots(), layout.m());
  Eigen::MatrixXd cstar = cov_matrix(spec, A_k, layout.knot_distances());
  double applied = 0.0;
  const auto llt = factor_spd(cstar, "knot covariance", FactorOptions{}, applied);
  const Eigen::MatrixXd C = cross_cov_matrix(spec, A_s, A_k, layout.site_knot_distances());
  const Eigen::MatrixXd V = llt.matrixL().solve(C.transpose());

  const auto N = static_cast<int>(layout.dim());
  std::vector<Eigen::Triplet<double>> trip;
  if (scheme.kind == SchemeKind::FsaBlock) {
    for (std::size_t k = 0; k < layout.blocks().size(); ++k) {
      const auto& blk = layout.blocks()[k];
      if (blk.empty()) continue;
      const Eigen::MatrixXd Db = residual_block(spec, A_s, blk, layout.block_distances()[k], &V, R);
      const auto idx = expand(blk, R);
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          trip.emplace_back(static_cast<int>(idx[a]), static_cast<int>(idx[b]),
                            Db(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
        }
      }
    }
  } else {
    for (std::size_t r = 0; r < R; ++r) {
      for (const auto& t : taper_triplets(layout, spec, A_s, V, r)) {
        trip.emplace_back(static_cast<int>(t.row() * R + r), static_cast<int>(t.col() * R + r),
                          t.value());
      }
    }
  }
  Eigen::SparseMatrix<double> S(N, N);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

LikelihoodWorkspace data_cov(const Scheme& scheme, const CovarianceParams& params,
                             const LocationSet& sites, const Eigen::MatrixXd& xa_sites,
                             const Eigen::MatrixXd& xa_knots, FactorOptions options) {
  auto layout = std::make_shared<const ApproxLayout>(scheme, sites, params.lmc.R, xa_sites, xa_knots);
  return LikelihoodWorkspace(std::move(layout), params, options);
}

double quad_form(const LikelihoodWorkspace& ws, const Eigen::VectorXd& v) { return ws.quad_form(v); }

double logdet(const LikelihoodWorkspace& ws) { return ws.logdet(); }

double loglik(const LikelihoodWorkspace& ws, const Eigen::VectorXd& beta, const Eigen::VectorXd& Y,
              const Eigen::MatrixXd& X) {
  const auto N = static_cast<Eigen::Index>(ws.layout().dim());
  if (Y.size() != N || X.rows() != N || X.cols() != beta.size()) {
    throw DomainError("loglik: inconsistent dimensions");
  }
  const Eigen::VectorXd resid = Y - X * beta;
  return -0.5 * (static_cast<double>(N) * std::log(2.0 * M_PI) + ws.logdet() + ws.quad_form(resid));
}

}  // namespace fsagp
