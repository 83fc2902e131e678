#include "fsagp/pipeline.hpp"

#include "fsagp/error.hpp"
#include "fsagp/simulation.hpp"

namespace fsagp {

void attach_covariates(const ModelConfig& cfg, SpatialDataset& data) {
  if (data.sites.metric() != cfg.metric) {
    throw ConfigError("model.metric", "data coordinates do not match the configured metric");
  }
  try {
    data.X = build_covariates(cfg.mean_covariates, data.sites, data.aux);
    if (cfg.lmc.varying()) {
      data.XA = build_covariates(std::get<VaryingTransform>(cfg.lmc.transform).covariates,
                                 data.sites, data.aux);
    }
  } catch (const DomainError& e) {
    throw ConfigError("model.covariates", e.what());
  }
}

PreparedFit prepare_fit(ModelConfig cfg, SpatialDataset data) {
  if (data.R() != cfg.lmc.R) {
    throw ConfigError("model.R", "data has " + std::to_string(data.R()) + " responses, model expects " +
                                     std::to_string(cfg.lmc.R));
  }
  attach_covariates(cfg, data);

  PreparedFit p;
  const auto& sc = cfg.scheme;
  const std::size_t vor = sc.blocks == "voronoi" ? sc.voronoi_blocks : 0;
  p.scheme = build_scheme(sc.scheme, data.sites, cfg.seed, std::nullopt, vor);
  if (cfg.lmc.varying() && p.scheme.has_knots()) {
    p.xa_knots = knot_covariates(std::get<VaryingTransform>(cfg.lmc.transform).covariates,
                                 p.scheme.knots, data.sites, data.aux);
  }
  p.problem = FitProblem::make(data, p.scheme, p.xa_knots);

  p.priors = cfg.priors;
  if (cfg.auto_range_prior) {
    p.priors.ranges = default_priors(data.sites, cfg.lmc.Q()).ranges;
  }

  p.init = initial_state(data, cfg.lmc, cfg.nugget_mode, p.priors);
  if (cfg.init_from_config) {
    p.init.cov.lmc = cfg.lmc;
    p.init.cov.nugget = cfg.nugget;
    if (cfg.nugget_mode == NuggetMode::None) p.init.cov.nugget = NuggetSpec::none();
  }
  p.map.emplace(p.init.cov.lmc, cfg.nugget_mode, p.priors, cfg.fixed);
  p.config = std::move(cfg);
  p.data = std::move(data);
  return p;
}

FitOutcome fit(const PreparedFit& prep) {
  FitOutcome out;
  out.chain = run_mcmc(prep.problem, *prep.map, prep.priors, prep.init, prep.config.mcmc);
  out.dic = dic(out.chain, prep.problem, *prep.map, prep.init, prep.config.mcmc.factor);
  return out;
}

}  // namespace fsagp
