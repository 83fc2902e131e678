#include "fsagp/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "fsagp/error.hpp"

namespace fsagp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string entry_suffix(std::size_t i, std::size_t j) {
  return std::to_string(i) + std::to_string(j);
}

}  // namespace

bool ScalarPrior::in_support(double x) const noexcept {
  if (!std::isfinite(x)) return false;
  switch (kind) {
    case Kind::Uniform:
      return x >= a && x <= b;
    case Kind::InvGamma:
    case Kind::TruncatedNormal:
      return x > 0.0;
    case Kind::Flat:
    case Kind::Normal:
      return true;
  }
  return false;
}

double ScalarPrior::log_density(double x) const noexcept {
  if (!in_support(x)) return kNegInf;
  switch (kind) {
    case Kind::Flat:
      return 0.0;
    case Kind::Uniform:
      return -std::log(b - a);
    case Kind::InvGamma:
      return -(a + 1.0) * std::log(x) - b / x;
    case Kind::TruncatedNormal:
    case Kind::Normal:
      return -0.5 * (x - a) * (x - a) / b;
  }
  return kNegInf;
}

void ScalarPrior::validate(const std::string& name) const {
  switch (kind) {
    case Kind::Uniform:
      if (!(a < b)) throw ConfigError(name, "uniform prior needs lo < hi");
      break;
    case Kind::InvGamma:
      if (!(a > 0.0 && b > 0.0)) throw ConfigError(name, "inverse-gamma needs shape, scale > 0");
      break;
    case Kind::TruncatedNormal:
    case Kind::Normal:
      if (!(b > 0.0)) throw ConfigError(name, "normal prior needs variance > 0");
      break;
    case Kind::Flat:
      break;
  }
}

const ScalarPrior& PriorSpec::range_prior(std::size_t q) const {
  if (ranges.empty()) throw ConfigError("priors.range", "no range prior given");
  return ranges.size() == 1 ? ranges.front() : ranges.at(q);
}

double PriorSpec::beta_mean_at(Eigen::Index k) const {
  return beta_mean.size() == 1 ? beta_mean(0) : beta_mean(k);
}

double PriorSpec::beta_var_at(Eigen::Index k) const {
  return beta_var.size() == 1 ? beta_var(0) : beta_var(k);
}

void PriorSpec::validate() const {
  if (beta_mean.size() == 0 || beta_var.size() == 0) {
    throw ConfigError("priors.beta", "mean and variance must be non-empty");
  }
  if ((beta_var.array() <= 0.0).any()) throw ConfigError("priors.beta", "variance must be > 0");
  for (std::size_t q = 0; q < ranges.size(); ++q) {
    ranges[q].validate("priors.range");
    if (ranges[q].kind == ScalarPrior::Kind::Normal) {
      throw ConfigError("priors.range", "range prior must be supported on (0, inf)");
    }
  }
  diag_A.validate("priors.diag_A");
  if (diag_A.kind == ScalarPrior::Kind::Normal) {
    throw ConfigError("priors.diag_A", "diagonal prior must be supported on (0, inf)");
  }
  offdiag_A.validate("priors.offdiag_A");
  eta.validate("priors.eta");
  nugget.validate("priors.nugget");
  if (nugget.kind == ScalarPrior::Kind::Normal) {
    throw ConfigError("priors.nugget", "nugget prior must be supported on (0, inf)");
  }
}

ParameterMap::ParameterMap(const LmcSpec& shape, NuggetMode nugget_mode, const PriorSpec& priors,
                           const std::set<std::string>& fixed)
    : nugget_mode_(nugget_mode), R_(shape.R) {
  shape.validate();
  priors.validate();
  std::vector<Block> candidate_blocks;

  auto add = [&](Scalar s, const ScalarPrior& prior) {
    scalars_.push_back(std::move(s));
    priors_.push_back(prior);
    return scalars_.size() - 1;
  };

  for (std::size_t q = 0; q < shape.Q(); ++q) {
    Scalar s{"phi_" + std::to_string(q), Role::Range, true};
    s.q = q;
    candidate_blocks.push_back({s.name, {add(s, priors.range_prior(q))}});
  }

  const auto entries = lower_entries(shape.R, shape.Q());
  if (!shape.varying()) {
    Block a_block{"A", {}};
    for (const auto& [i, j] : entries) {
      const bool diag = i == j;
      Scalar s{"A_" + entry_suffix(i, j), diag ? Role::DiagA : Role::OffdiagA, diag};
      s.i = i;
      s.j = j;
      a_block.scalars.push_back(add(s, diag ? priors.diag_A : priors.offdiag_A));
    }
    candidate_blocks.push_back(std::move(a_block));
  } else {
    const std::size_t pa = shape.transform_dim();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto [i, j] = entries[e];
      Block b{"eta_" + entry_suffix(i, j), {}};
      for (std::size_t c = 0; c < pa; ++c) {
        Scalar s{b.name + "_" + std::to_string(c), Role::Eta, false};
        s.i = i;
        s.j = j;
        s.entry = e;
        s.coef = c;
        b.scalars.push_back(add(s, priors.eta));
      }
      candidate_blocks.push_back(std::move(b));
    }
  }

  if (nugget_mode == NuggetMode::Shared) {
    Scalar s{"tau2", Role::Nugget, true};
    candidate_blocks.push_back({s.name, {add(s, priors.nugget)}});
  } else if (nugget_mode == NuggetMode::PerResponse) {
    for (std::size_t r = 0; r < shape.R; ++r) {
      Scalar s{"tau2_" + std::to_string(r), Role::Nugget, true};
      s.i = r;
      candidate_blocks.push_back({s.name, {add(s, priors.nugget)}});
    }
  }

  for (auto& b : candidate_blocks) {
    if (fixed.count(b.name)) continue;
    std::vector<std::size_t> kept;
    for (auto k : b.scalars) {
      if (!fixed.count(scalars_[k].name)) kept.push_back(k);
    }
    if (!kept.empty()) blocks_.push_back({b.name, std::move(kept)});
  }
}

const ScalarPrior& ParameterMap::prior_for(std::size_t k) const { return priors_.at(k); }

Eigen::VectorXd ParameterMap::natural(const CovarianceParams& params) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(scalars_.size()));
  for (std::size_t k = 0; k < scalars_.size(); ++k) {
    const auto& s = scalars_[k];
    double v = 0.0;
    switch (s.role) {
      case Role::Range:
        v = params.lmc.latent.at(s.q).range;
        break;
      case Role::DiagA:
      case Role::OffdiagA:
        v = std::get<ConstantTransform>(params.lmc.transform).A(static_cast<Eigen::Index>(s.i),
                                                                 static_cast<Eigen::Index>(s.j));
        break;
      case Role::Eta:
        v = std::get<VaryingTransform>(params.lmc.transform)
                .eta.at(s.entry)(static_cast<Eigen::Index>(s.coef));
        break;
      case Role::Nugget:
        if (!params.nugget.present()) throw DomainError("parameter map: nugget missing");
        v = params.nugget.variances(nugget_mode_ == NuggetMode::Shared
                                        ? 0
                                        : static_cast<Eigen::Index>(s.i));
        break;
    }
    out(static_cast<Eigen::Index>(k)) = v;
  }
  return out;
}

void ParameterMap::assign(CovarianceParams& params, const Eigen::VectorXd& natural) const {
  if (natural.size() != static_cast<Eigen::Index>(scalars_.size())) {
    throw DomainError("parameter map: wrong parameter vector length");
  }
  for (std::size_t k = 0; k < scalars_.size(); ++k) {
    const auto& s = scalars_[k];
    const double v = natural(static_cast<Eigen::Index>(k));
    switch (s.role) {
      case Role::Range:
        params.lmc.latent.at(s.q).range = v;
        break;
      case Role::DiagA:
      case Role::OffdiagA:
        std::get<ConstantTransform>(params.lmc.transform)
            .A(static_cast<Eigen::Index>(s.i), static_cast<Eigen::Index>(s.j)) = v;
        break;
      case Role::Eta:
        std::get<VaryingTransform>(params.lmc.transform)
            .eta.at(s.entry)(static_cast<Eigen::Index>(s.coef)) = v;
        break;
      case Role::Nugget:
        if (nugget_mode_ == NuggetMode::Shared) {
          params.nugget.variances = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(R_), v);
        } else {
          if (params.nugget.variances.size() != static_cast<Eigen::Index>(R_)) {
            params.nugget.variances = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(R_));
          }
          params.nugget.variances(static_cast<Eigen::Index>(s.i)) = v;
        }
        break;
    }
  }
}

Eigen::VectorXd ParameterMap::to_sampling(const Eigen::VectorXd& natural) const {
  Eigen::VectorXd z = natural;
  for (std::size_t k = 0; k < scalars_.size(); ++k) {
    if (scalars_[k].log_scale) z(static_cast<Eigen::Index>(k)) = std::log(natural(static_cast<Eigen::Index>(k)));
  }
  return z;
}

Eigen::VectorXd ParameterMap::from_sampling(const Eigen::VectorXd& sampling) const {
  Eigen::VectorXd x = sampling;
  for (std::size_t k = 0; k < scalars_.size(); ++k) {
    if (scalars_[k].log_scale) x(static_cast<Eigen::Index>(k)) = std::exp(sampling(static_cast<Eigen::Index>(k)));
  }
  return x;
}

double ParameterMap::log_prior_with_jacobian(const Eigen::VectorXd& natural) const {
  double lp = 0.0;
  for (std::size_t k = 0; k < scalars_.size(); ++k) {
    const double x = natural(static_cast<Eigen::Index>(k));
    const double d = priors_[k].log_density(x);
    if (d == kNegInf) return kNegInf;
    lp += d;
    if (scalars_[k].log_scale) lp += std::log(x);
  }
  return lp;
}

void McmcConfig::validate() const {
  if (iterations == 0) throw ConfigError("mcmc.iterations", "must be positive");
  if (burn_in >= iterations) throw ConfigError("mcmc.burn_in", "must be below iterations");
  if (thin == 0) throw ConfigError("mcmc.thin", "must be positive");
  if (adapt_interval == 0) throw ConfigError("mcmc.adapt_interval", "must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ConfigError("mcmc.target_acceptance", "must lie in (0, 1)");
  }
  if (!(default_proposal_scale > 0.0)) {
    throw ConfigError("mcmc.proposal_scale", "must be positive");
  }
  for (const auto& [name, s] : proposal_scales) {
    if (!(s > 0.0)) throw ConfigError("mcmc.proposal_scales." + name, "must be positive");
  }
}

std::size_t McmcConfig::stored_samples() const noexcept {
  if (burn_in >= iterations || thin == 0) return 0;
  return (iterations - burn_in + thin - 1) / thin;
}

Eigen::Index PosteriorChain::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError("chain has no column '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

double PosteriorChain::mean(const std::string& name) const {
  return samples.col(column(name)).mean();
}

double PosteriorChain::sd(const std::string& name) const {
  const auto c = samples.col(column(name));
  if (c.size() < 2) return 0.0;
  const double mu = c.mean();
  return std::sqrt((c.array() - mu).square().sum() / static_cast<double>(c.size() - 1));
}

FitProblem FitProblem::make(const SpatialDataset& data, const Scheme& scheme,
                            const Eigen::MatrixXd& xa_knots) {
  data.validate();
  FitProblem p;
  p.y = stack_responses(data.Y);
  p.X = design_matrix(data.X, data.R());
  p.layout = std::make_shared<ApproxLayout>(scheme, data.sites, data.R(), data.XA, xa_knots);
  return p;
}

BetaConditional beta_conditional(const FitProblem& problem, const LikelihoodWorkspace& ws,
                                 const PriorSpec& priors) {
  const Eigen::Index p = problem.X.cols();
  if (priors.beta_mean.size() != 1 && priors.beta_mean.size() != p) {
    throw ConfigError("priors.beta.mean", "length must be 1 or " + std::to_string(p));
  }
  if (priors.beta_var.size() != 1 && priors.beta_var.size() != p) {
    throw ConfigError("priors.beta.var", "length must be 1 or " + std::to_string(p));
  }
  const Eigen::MatrixXd sinv_x = ws.solve(problem.X);
  Eigen::MatrixXd prec = problem.X.transpose() * sinv_x;
  Eigen::VectorXd rhs = sinv_x.transpose() * problem.y;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double v = priors.beta_var_at(k);
    prec(k, k) += 1.0 / v;
    rhs(k) += priors.beta_mean_at(k) / v;
  }
  prec = 0.5 * (prec + prec.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericalError("beta precision", "not positive definite");
  BetaConditional out;
  out.mean = llt.solve(rhs);
  out.cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  return out;
}

Eigen::VectorXd gibbs_beta(const FitProblem& problem, const LikelihoodWorkspace& ws,
                           const PriorSpec& priors, Rng& rng) {
  const BetaConditional cond = beta_conditional(problem, ws, priors);
  Eigen::LLT<Eigen::MatrixXd> llt(cond.cov);
  if (llt.info() != Eigen::Success) throw NumericalError("beta covariance", "not positive definite");
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(cond.mean.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
  return cond.mean + llt.matrixL() * z;
}

bool metropolis_step(Eigen::VectorXd& z, double& current_log_target,
                     const std::function<std::optional<double>(const Eigen::VectorXd&)>& target,
                     double scale, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd prop(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) prop(k) = z(k) + scale * normal(rng);
  const std::optional<double> t = target(prop);
  if (!t || !std::isfinite(*t)) return false;
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  if (log_u < *t - current_log_target) {
    z = std::move(prop);
    current_log_target = *t;
    return true;
  }
  return false;
}

SpatialSampler::SpatialSampler(FitProblem problem, ParameterMap map, PriorSpec priors,
                               ModelState init, McmcConfig config)
    : problem_(std::move(problem)),
      map_(std::move(map)),
      priors_(std::move(priors)),
      state_(std::move(init)),
      config_(std::move(config)),
      rng_(make_rng(config_.seed, 0x6d636d63)) {
  config_.validate();
  if (!problem_.layout) throw DomainError("sampler: fit problem has no layout");
  if (state_.beta.size() != problem_.X.cols()) {
    throw DomainError("sampler: beta length does not match the design");
  }
  if (!std::isfinite(map_.log_prior_with_jacobian(map_.natural(state_.cov)))) {
    throw DomainError("sampler: initial state lies outside the prior support");
  }
  ws_ = std::make_unique<LikelihoodWorkspace>(problem_.layout, state_.cov, config_.factor);
  current_loglik_ = fsagp::loglik(*ws_, state_.beta, problem_.y, problem_.X);
  blocks_.resize(map_.blocks().size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    auto it = config_.proposal_scales.find(map_.blocks()[b].name);
    blocks_[b].scale = it != config_.proposal_scales.end() ? it->second
                                                           : config_.default_proposal_scale;
  }
}

double SpatialSampler::loglik() const { return current_loglik_; }

void SpatialSampler::gibbs_beta() {
  state_.beta = fsagp::gibbs_beta(problem_, *ws_, priors_, rng_);
  current_loglik_ = fsagp::loglik(*ws_, state_.beta, problem_.y, problem_.X);
}

bool SpatialSampler::mh_update(std::size_t block) {
  const auto& idx = map_.blocks().at(block).scalars;
  const Eigen::VectorXd natural = map_.natural(state_.cov);
  const Eigen::VectorXd sampling = map_.to_sampling(natural);

  Eigen::VectorXd z(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) z(static_cast<Eigen::Index>(k)) = sampling(static_cast<Eigen::Index>(idx[k]));

  double current = current_loglik_ + map_.log_prior_with_jacobian(natural);
  std::unique_ptr<LikelihoodWorkspace> cand_ws;
  CovarianceParams cand_params;
  double cand_loglik = 0.0;

  auto target = [&](const Eigen::VectorXd& zp) -> std::optional<double> {
    Eigen::VectorXd s = sampling;
    for (std::size_t k = 0; k < idx.size(); ++k) s(static_cast<Eigen::Index>(idx[k])) = zp(static_cast<Eigen::Index>(k));
    const Eigen::VectorXd x = map_.from_sampling(s);
    const double lp = map_.log_prior_with_jacobian(x);
    if (!std::isfinite(lp)) return std::nullopt;
    cand_params = state_.cov;
    map_.assign(cand_params, x);
    try {
      cand_ws = std::make_unique<LikelihoodWorkspace>(problem_.layout, cand_params, config_.factor);
      cand_loglik = fsagp::loglik(*cand_ws, state_.beta, problem_.y, problem_.X);
      beta_conditional(problem_, *cand_ws, priors_);
    } catch (const NumericalError&) {
      ++numerical_rejections_;
      return std::nullopt;
    }
    if (!std::isfinite(cand_loglik)) return std::nullopt;
    return cand_loglik + lp;
  };

  auto& stats = blocks_[block];
  const bool accepted = metropolis_step(z, current, target, stats.scale, rng_);
  ++stats.attempted;
  ++stats.window_attempted;
  if (accepted) {
    ++stats.accepted;
    ++stats.window_accepted;
    state_.cov = std::move(cand_params);
    ws_ = std::move(cand_ws);
    current_loglik_ = cand_loglik;
  }
  return accepted;
}

void SpatialSampler::sweep() {
  gibbs_beta();
  for (std::size_t b = 0; b < blocks_.size(); ++b) mh_update(b);
}

void SpatialSampler::adapt() {
  for (auto& s : blocks_) {
    if (s.window_attempted == 0) continue;
    const double rate =
        static_cast<double>(s.window_accepted) / static_cast<double>(s.window_attempted);
    s.scale = std::clamp(s.scale * std::exp(2.0 * (rate - config_.target_acceptance)), 1e-5, 50.0);
    s.window_accepted = 0;
    s.window_attempted = 0;
  }
}

void SpatialSampler::reset_counts() {
  for (auto& s : blocks_) s = BlockStats{s.scale};
}

Eigen::RowVectorXd SpatialSampler::sample_row() const {
  const Eigen::VectorXd nat = map_.natural(state_.cov);
  Eigen::RowVectorXd row(state_.beta.size() + nat.size());
  row << state_.beta.transpose(), nat.transpose();
  return row;
}

std::vector<std::string> SpatialSampler::column_names() const {
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < state_.beta.size(); ++k) names.push_back("beta_" + std::to_string(k));
  for (const auto& s : map_.scalars()) names.push_back(s.name);
  return names;
}

PosteriorChain run_mcmc(const FitProblem& problem, const ParameterMap& map, const PriorSpec& priors,
                        const ModelState& init, const McmcConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  SpatialSampler sampler(problem, map, priors, init, config);

  PosteriorChain chain;
  chain.config = config;
  chain.names = sampler.column_names();
  chain.samples.resize(static_cast<Eigen::Index>(config.stored_samples()),
                       static_cast<Eigen::Index>(chain.names.size()));
  chain.loglik_trace.reserve(config.stored_samples());

  Eigen::Index row = 0;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    sampler.sweep();
    if (t < config.burn_in) {
      if ((t + 1) % config.adapt_interval == 0) sampler.adapt();
      if (t + 1 == config.burn_in) sampler.reset_counts();
      continue;
    }
    if ((t - config.burn_in) % config.thin == 0) {
      chain.samples.row(row++) = sampler.sample_row();
      chain.loglik_trace.push_back(sampler.loglik());
    }
  }

  for (std::size_t b = 0; b < map.blocks().size(); ++b) {
    const auto& name = map.blocks()[b].name;
    const auto att = sampler.attempted(b);
    chain.acceptance_rates[name] =
        att == 0 ? 0.0 : static_cast<double>(sampler.accepted(b)) / static_cast<double>(att);
    chain.final_scales[name] = sampler.scale(b);
  }
  chain.numerical_rejections = sampler.numerical_rejections();
  chain.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return chain;
}

ModelState initial_state(const SpatialDataset& data, const LmcSpec& shape, NuggetMode mode,
                         const PriorSpec& priors) {
  data.validate();
  const Eigen::Index n = data.Y.rows();
  const Eigen::Index R = data.Y.cols();
  const Eigen::Index p0 = data.X.cols();
  if (static_cast<std::size_t>(R) != shape.R) throw DomainError("initial_state: R mismatch");

  const Eigen::MatrixXd B = data.X.colPivHouseholderQr().solve(data.Y);  // p0 x R
  ModelState st;
  st.beta.resize(R * p0);
  for (Eigen::Index r = 0; r < R; ++r) st.beta.segment(r * p0, p0) = B.col(r);

  const Eigen::MatrixXd E = data.Y - data.X * B;
  Eigen::MatrixXd S = E.transpose() * E / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  S.diagonal().array() += 1e-9 * std::max(1.0, S.diagonal().mean());
  const double nugget0 = 0.1 * S.diagonal().mean();

  Eigen::LLT<Eigen::MatrixXd> llt(0.9 * S);
  Eigen::MatrixXd L = llt.info() == Eigen::Success
                          ? Eigen::MatrixXd(llt.matrixL())
                          : Eigen::MatrixXd(S.diagonal().cwiseSqrt().asDiagonal());
  const auto Q = static_cast<Eigen::Index>(shape.Q());
  Eigen::MatrixXd A0 = L.leftCols(Q);

  st.cov.lmc = shape;
  for (std::size_t q = 0; q < shape.Q(); ++q) {
    const auto& pr = priors.range_prior(q);
    if (pr.kind == ScalarPrior::Kind::Uniform) {
      st.cov.lmc.latent[q].range = pr.a + 0.25 * (pr.b - pr.a);
    }
  }
  if (!shape.varying()) {
    st.cov.lmc.transform = ConstantTransform{A0};
  } else {
    VaryingTransform vt = std::get<VaryingTransform>(shape.transform);
    const auto entries = lower_entries(shape.R, shape.Q());
    const auto pa = static_cast<Eigen::Index>(shape.transform_dim());
    vt.eta.assign(entries.size(), Eigen::VectorXd::Zero(pa));
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (pa > 0) {
        vt.eta[e](0) = A0(static_cast<Eigen::Index>(entries[e].first),
                          static_cast<Eigen::Index>(entries[e].second));
      }
    }
    st.cov.lmc.transform = std::move(vt);
  }
  switch (mode) {
    case NuggetMode::None:
      st.cov.nugget = NuggetSpec::none();
      break;
    case NuggetMode::Shared:
      st.cov.nugget = NuggetSpec::shared(shape.R, nugget0);
      break;
    case NuggetMode::PerResponse:
      st.cov.nugget.variances = 0.1 * S.diagonal();
      break;
  }
  return st;
}

ModelState state_from_sample(const PosteriorChain& chain, Eigen::Index row, const ParameterMap& map,
                             const ModelState& shape) {
  const Eigen::Index p = shape.beta.size();
  const auto k = static_cast<Eigen::Index>(map.scalars().size());
  if (chain.samples.cols() != p + k) throw DomainError("state_from_sample: column count mismatch");
  ModelState st = shape;
  st.beta = chain.samples.row(row).head(p).transpose();
  map.assign(st.cov, chain.samples.row(row).tail(k).transpose());
  return st;
}

DicResult dic(const PosteriorChain& chain, const FitProblem& problem, const ParameterMap& map,
              const ModelState& shape, FactorOptions factor) {
  if (chain.size() == 0) throw DomainError("dic: empty chain");
  DicResult out;
  double sum = 0.0;
  for (double ll : chain.loglik_trace) sum += -2.0 * ll;
  out.mean_deviance = sum / static_cast<double>(chain.loglik_trace.size());

  const Eigen::Index p = shape.beta.size();
  const auto k = static_cast<Eigen::Index>(map.scalars().size());
  Eigen::VectorXd beta_bar = chain.samples.leftCols(p).colwise().mean().transpose();
  Eigen::VectorXd z_bar = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < chain.samples.rows(); ++r) {
    z_bar += map.to_sampling(chain.samples.row(r).tail(k).transpose());
  }
  z_bar /= static_cast<double>(chain.samples.rows());

  ModelState bar = shape;
  bar.beta = beta_bar;
  map.assign(bar.cov, map.from_sampling(z_bar));
  LikelihoodWorkspace ws(problem.layout, bar.cov, factor);
  out.deviance_at_mean = -2.0 * loglik(ws, bar.beta, problem.y, problem.X);
  out.p_d = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.mean_deviance + out.p_d;
  return out;
}

}  // namespace fsagp
