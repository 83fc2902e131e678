#include "fsagp/prediction.hpp"

#include <chrono>

#include "fsagp/error.hpp"

namespace fsagp {

std::vector<PredictionSite> prediction_sites(const LocationSet& sites, const Eigen::MatrixXd& X,
                                             const Eigen::MatrixXd& XA) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  if (X.rows() != n) throw DomainError("prediction_sites: covariate rows do not match sites");
  if (XA.size() > 0 && XA.rows() != n) {
    throw DomainError("prediction_sites: transform covariate rows do not match sites");
  }
  std::vector<PredictionSite> out;
  out.reserve(sites.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    PredictionSite s;
    s.site = sites[static_cast<std::size_t>(i)];
    s.x = X.row(i).transpose();
    if (XA.size() > 0) s.xa = XA.row(i).transpose();
    out.push_back(std::move(s));
  }
  return out;
}

Cokriger::Cokriger(const LikelihoodWorkspace& ws, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& y, const Eigen::MatrixXd& X)
    : ws_(ws), beta_(beta) {
  const auto dim = static_cast<Eigen::Index>(ws.layout().dim());
  if (y.size() != dim || X.rows() != dim || X.cols() != beta.size()) {
    throw DomainError("cokrige: data, design and beta dimensions disagree");
  }
  const auto R = static_cast<Eigen::Index>(ws.layout().R());
  if (beta.size() % R != 0) throw DomainError("cokrige: beta length not a multiple of R");
  p0_ = static_cast<std::size_t>(beta.size() / R);
  alpha_ = ws.solve(Eigen::VectorXd(y - X * beta));
}

Eigen::MatrixXd Cokriger::transform_for(const PredictionSite& s0) const {
  const auto& lmc = ws_.params().lmc;
  if (lmc.varying()) {
    if (static_cast<std::size_t>(s0.xa.size()) != lmc.transform_dim()) {
      throw DomainError("cokrige: X_A(s0) length does not match the transform");
    }
    return transform_at(lmc, s0.xa);
  }
  return std::get<ConstantTransform>(lmc.transform).A;
}

Eigen::MatrixXd Cokriger::whitened_knot_cross(const PredictionSite& s0,
                                              const Eigen::MatrixXd& A0) const {
  const ApproxLayout& L = ws_.layout();
  const auto& lmc = ws_.params().lmc;
  const auto R = static_cast<Eigen::Index>(L.R());
  Eigen::MatrixXd c0(static_cast<Eigen::Index>(L.m()) * R, R);
  for (std::size_t k = 0; k < L.m(); ++k) {
    const double d = L.sites().distance(L.knots()[k], s0.site);
    c0.middleRows(static_cast<Eigen::Index>(k) * R, R) =
        cross_cov_block(lmc, ws_.knot_transforms()[k], A0, d);
  }
  ws_.knot_factor().matrixL().solveInPlace(c0);
  return c0;
}

Eigen::MatrixXd Cokriger::cross_to_data(const PredictionSite& s0) const {
  const ApproxLayout& L = ws_.layout();
  const auto& lmc = ws_.params().lmc;
  const std::size_t R = L.R();
  const auto Ri = static_cast<Eigen::Index>(R);
  const Eigen::MatrixXd A0 = transform_for(s0);
  const auto& A = ws_.site_transforms();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(Ri, static_cast<Eigen::Index>(L.dim()));
  Eigen::MatrixXd u0;
  if (L.has_knots()) {
    u0 = whitened_knot_cross(s0, A0);
    h.noalias() = u0.transpose() * ws_.whitened_cross();
  }

  auto exact_block = [&](std::size_t i) {
    const double d = L.sites().distance(s0.site, L.sites()[i]);
    return cross_cov_block(lmc, A0, A[i], d);
  };

  switch (L.kind()) {
    case SchemeKind::Full:
      for (std::size_t i = 0; i < L.n(); ++i) {
        h.middleCols(static_cast<Eigen::Index>(i) * Ri, Ri) = exact_block(i);
      }
      break;
    case SchemeKind::PredictiveProcess:
      break;
    case SchemeKind::IndependentBlocks:
    case SchemeKind::FsaBlock: {
      const std::size_t b = L.scheme().partition.block_of(s0.site);
      for (std::size_t i : L.blocks().at(b)) {
        h.middleCols(static_cast<Eigen::Index>(i) * Ri, Ri) = exact_block(i);
      }
      break;
    }
    case SchemeKind::FsaTaper: {
      const auto& V = ws_.whitened_cross();
      for (std::size_t i = 0; i < L.n(); ++i) {
        const double d = L.sites().distance(s0.site, L.sites()[i]);
        bool any = false;
        for (std::size_t r = 0; r < R; ++r) any = any || d < L.scheme().taper.range_for(r);
        if (!any) continue;
        const Eigen::MatrixXd G = cross_cov_block(lmc, A0, A[i], d);
        for (std::size_t r = 0; r < R; ++r) {
          const double w = taper(L.scheme().taper, r, d);
          if (w == 0.0) continue;
          const auto rr = static_cast<Eigen::Index>(r);
          const auto col = static_cast<Eigen::Index>(i) * Ri + rr;
          const double lowrank = u0.col(rr).dot(V.col(col));
          h(rr, col) += w * (G(rr, rr) - lowrank);
        }
      }
      break;
    }
  }
  return h;
}

Eigen::MatrixXd Cokriger::prior_cov(const PredictionSite& s0) const {
  const ApproxLayout& L = ws_.layout();
  const Eigen::MatrixXd A0 = transform_for(s0);
  Eigen::MatrixXd exact = A0 * A0.transpose();
  Eigen::MatrixXd out;
  switch (L.kind()) {
    case SchemeKind::PredictiveProcess: {
      const Eigen::MatrixXd u0 = whitened_knot_cross(s0, A0);
      out = u0.transpose() * u0;
      break;
    }
    case SchemeKind::FsaTaper: {
      const Eigen::MatrixXd u0 = whitened_knot_cross(s0, A0);
      out = u0.transpose() * u0;
      out.diagonal() = exact.diagonal();
      break;
    }
    default:
      out = std::move(exact);
      break;
  }
  if (ws_.params().nugget.present()) out.diagonal() += ws_.params().nugget.variances;
  return out;
}

PredictionResult Cokriger::predict(const PredictionSite& s0, bool with_cov) const {
  if (static_cast<std::size_t>(s0.x.size()) != p0_) {
    throw DomainError("cokrige: x(s0) length does not match the mean design");
  }
  const Eigen::MatrixXd h = cross_to_data(s0);
  PredictionResult out;
  out.site = s0.site;
  out.mean = site_design(s0.x, ws_.layout().R()) * beta_ + h * alpha_;
  if (with_cov) {
    const Eigen::MatrixXd sinv_ht = ws_.solve(Eigen::MatrixXd(h.transpose()));
    Eigen::MatrixXd c = prior_cov(s0) - h * sinv_ht;
    out.cov = 0.5 * (c + c.transpose());
  }
  return out;
}

std::vector<PredictionResult> Cokriger::predict(const std::vector<PredictionSite>& sites,
                                                bool with_cov) const {
  std::vector<PredictionResult> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(predict(s, with_cov));
  return out;
}

PredictionResult cokrige(const PredictionSite& s0, const CovarianceParams& params,
                         const Eigen::VectorXd& beta, const SpatialDataset& train,
                         const Scheme& scheme, const Eigen::MatrixXd& xa_knots) {
  const FitProblem problem = FitProblem::make(train, scheme, xa_knots);
  const LikelihoodWorkspace ws(problem.layout, params);
  return Cokriger(ws, beta, problem.y, problem.X).predict(s0);
}

double mspe(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw DomainError("mspe: prediction and truth shapes differ");
  }
  if (truth.size() == 0) throw DomainError("mspe: empty test set");
  return (predicted - truth).squaredNorm() / static_cast<double>(truth.size());
}

Eigen::MatrixXd prediction_means(const std::vector<PredictionResult>& predictions) {
  if (predictions.empty()) return {};
  Eigen::MatrixXd M(static_cast<Eigen::Index>(predictions.size()), predictions.front().mean.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    M.row(static_cast<Eigen::Index>(i)) = predictions[i].mean.transpose();
  }
  return M;
}

double mspe(const std::vector<PredictionResult>& predictions, const Eigen::MatrixXd& truth) {
  if (static_cast<Eigen::Index>(predictions.size()) != truth.rows()) {
    throw DomainError("mspe: prediction count does not match truth rows");
  }
  return mspe(prediction_means(predictions), truth);
}

PluginBlupResult plugin_blup_mspe(const CovarianceParams& true_params, const Eigen::VectorXd& beta,
                                  const SpatialDataset& train, const SpatialDataset& test,
                                  const Scheme& scheme, const Eigen::MatrixXd& xa_knots,
                                  bool with_cov) {
  const auto t0 = std::chrono::steady_clock::now();
  const FitProblem problem = FitProblem::make(train, scheme, xa_knots);
  const LikelihoodWorkspace ws(problem.layout, true_params);
  const Cokriger ck(ws, beta, problem.y, problem.X);
  PluginBlupResult out;
  out.predictions = ck.predict(prediction_sites(test.sites, test.X, test.XA), with_cov);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.mspe = mspe(out.predictions, test.Y);
  return out;
}

std::vector<PredictionResult> posterior_predict(const PosteriorChain& chain,
                                                const FitProblem& problem, const ParameterMap& map,
                                                const ModelState& shape,
                                                const std::vector<PredictionSite>& sites,
                                                std::size_t max_samples, FactorOptions factor) {
  const std::size_t total = chain.size();
  if (total == 0) throw DomainError("posterior_predict: empty chain");
  std::vector<Eigen::Index> rows;
  if (max_samples == 0 || max_samples >= total) {
    for (std::size_t k = 0; k < total; ++k) rows.push_back(static_cast<Eigen::Index>(k));
  } else {
    for (std::size_t k = 0; k < max_samples; ++k) {
      rows.push_back(static_cast<Eigen::Index>(k * total / max_samples));
    }
  }

  const auto R = static_cast<Eigen::Index>(problem.layout->R());
  std::vector<Eigen::VectorXd> mean_sum(sites.size(), Eigen::VectorXd::Zero(R));
  std::vector<Eigen::MatrixXd> second_sum(sites.size(), Eigen::MatrixXd::Zero(R, R));
  for (Eigen::Index row : rows) {
    const ModelState st = state_from_sample(chain, row, map, shape);
    const LikelihoodWorkspace ws(problem.layout, st.cov, factor);
    const Cokriger ck(ws, st.beta, problem.y, problem.X);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const PredictionResult p = ck.predict(sites[s], true);
      mean_sum[s] += p.mean;
      second_sum[s] += p.cov + p.mean * p.mean.transpose();
    }
  }

  const double k = static_cast<double>(rows.size());
  std::vector<PredictionResult> out(sites.size());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    out[s].site = sites[s].site;
    out[s].mean = mean_sum[s] / k;
    Eigen::MatrixXd c = second_sum[s] / k - out[s].mean * out[s].mean.transpose();
    out[s].cov = 0.5 * (c + c.transpose());
  }
  return out;
}

}  // namespace fsagp
