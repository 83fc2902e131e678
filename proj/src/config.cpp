#include "fsagp/config.hpp"

#include <fstream>

#include "fsagp/error.hpp"

namespace fsagp {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <class T>
T value_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(join(path, key), std::string("wrong type: ") + e.what());
  }
}

template <class T>
T value_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return value_at<T>(j, key, path);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected a JSON object");
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw ConfigError(path, "every row must be an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(path, "rows have different lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw ConfigError(path, "entries must be numbers");
      M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

Eigen::VectorXd vector_from(const json& j, const std::string& path) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError(path, "expected a number or an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path, "entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ScalarPrior parse_prior(const json& j, const std::string& path) {
  require_object(j, path);
  const auto type = value_at<std::string>(j, "type", path);
  ScalarPrior p;
  if (type == "uniform") {
    p = ScalarPrior::uniform(value_at<double>(j, "lo", path), value_at<double>(j, "hi", path));
  } else if (type == "inv_gamma") {
    p = ScalarPrior::inv_gamma(value_at<double>(j, "shape", path), value_at<double>(j, "scale", path));
  } else if (type == "truncated_normal") {
    p = ScalarPrior::truncated_normal(value_at<double>(j, "mean", path), value_at<double>(j, "var", path));
  } else if (type == "normal") {
    p = ScalarPrior::normal(value_at<double>(j, "mean", path), value_at<double>(j, "var", path));
  } else if (type == "flat") {
    p = ScalarPrior::flat();
  } else {
    throw ConfigError(join(path, "type"), "unknown prior type '" + type + "'");
  }
  p.validate(path);
  return p;
}

json prior_json(const ScalarPrior& p) {
  switch (p.kind) {
    case ScalarPrior::Kind::Flat: return {{"type", "flat"}};
    case ScalarPrior::Kind::Uniform: return {{"type", "uniform"}, {"lo", p.a}, {"hi", p.b}};
    case ScalarPrior::Kind::InvGamma: return {{"type", "inv_gamma"}, {"shape", p.a}, {"scale", p.b}};
    case ScalarPrior::Kind::TruncatedNormal:
      return {{"type", "truncated_normal"}, {"mean", p.a}, {"var", p.b}};
    case ScalarPrior::Kind::Normal: return {{"type", "normal"}, {"mean", p.a}, {"var", p.b}};
  }
  return {};
}

CovariateTerm parse_term(const json& j, const std::string& path) {
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else {
    require_object(j, path);
    name = value_at<std::string>(j, "term", path);
  }
  if (name == "intercept") return CovariateTerm::intercept();
  if (name == "land_ocean") return CovariateTerm::land_ocean();
  if (name == "longitude") return CovariateTerm::longitude();
  if (name == "altitude") return CovariateTerm::altitude();
  if (name == "legendre") return CovariateTerm::legendre(value_at<int>(j, "order", path));
  if (name == "custom") return CovariateTerm::custom(value_at<std::string>(j, "column", path));
  throw ConfigError(path, "unknown covariate term '" + name + "'");
}

json term_json(const CovariateTerm& t) {
  switch (t.kind) {
    case CovariateTerm::Kind::Intercept: return "intercept";
    case CovariateTerm::Kind::LandOcean: return "land_ocean";
    case CovariateTerm::Kind::Longitude: return "longitude";
    case CovariateTerm::Kind::AltitudeScaled: return "altitude";
    case CovariateTerm::Kind::LegendreLatitude: return {{"term", "legendre"}, {"order", t.order}};
    case CovariateTerm::Kind::Custom: return {{"term", "custom"}, {"column", t.column}};
  }
  return {};
}

CovariateSpec parse_covariates(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of covariate terms");
  CovariateSpec spec;
  for (std::size_t i = 0; i < j.size(); ++i) {
    spec.terms.push_back(parse_term(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return spec;
}

json covariates_json(const CovariateSpec& s) {
  json out = json::array();
  for (const auto& t : s.terms) out.push_back(term_json(t));
  return out;
}

std::vector<CorrelationSpec> parse_latent(const json& j, const std::string& path) {
  std::vector<CorrelationSpec> out;
  if (j.contains("latent")) {
    const auto& arr = j.at("latent");
    if (!arr.is_array()) throw ConfigError(join(path, "latent"), "expected an array");
    for (std::size_t q = 0; q < arr.size(); ++q) {
      const std::string p = join(path, "latent[" + std::to_string(q) + "]");
      require_object(arr[q], p);
      const auto family = value_or<std::string>(arr[q], "family", p, "exponential");
      const double range = value_at<double>(arr[q], "range", p);
      if (family == "exponential") {
        out.push_back(CorrelationSpec::exponential(range));
      } else if (family == "matern") {
        out.push_back(CorrelationSpec::matern(range, value_at<double>(arr[q], "smoothness", p)));
      } else {
        throw ConfigError(join(p, "family"), "unknown correlation family '" + family + "'");
      }
    }
  } else if (j.contains("ranges")) {
    const Eigen::VectorXd r = vector_from(j.at("ranges"), join(path, "ranges"));
    for (Eigen::Index q = 0; q < r.size(); ++q) out.push_back(CorrelationSpec::exponential(r(q)));
  } else {
    throw ConfigError(join(path, "latent"), "missing latent correlations (or 'ranges')");
  }
  for (const auto& c : out) {
    if (!(c.range > 0.0)) throw ConfigError(join(path, "latent"), "ranges must be positive");
  }
  return out;
}

LmcSpec parse_lmc(const json& j, const std::string& path) {
  LmcSpec lmc;
  lmc.latent = parse_latent(j, path);
  const std::size_t Q = lmc.latent.size();
  const json transform = j.contains("transform") ? j.at("transform") : json{{"type", "constant"}};
  const std::string tp = join(path, "transform");
  require_object(transform, tp);
  const auto type = value_or<std::string>(transform, "type", tp, "constant");
  lmc.R = value_or<std::size_t>(j, "R", path, Q);
  if (type == "constant") {
    Eigen::MatrixXd A;
    if (transform.contains("A")) {
      A = matrix_from(transform.at("A"), join(tp, "A"));
      if (!j.contains("R")) lmc.R = static_cast<std::size_t>(A.rows());
    } else {
      A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(lmc.R), static_cast<Eigen::Index>(Q));
    }
    lmc.transform = ConstantTransform{A};
  } else if (type == "varying") {
    VaryingTransform vt;
    vt.covariates = parse_covariates(value_at<json>(transform, "covariates", tp), join(tp, "covariates"));
    const auto entries = lower_entries(lmc.R, Q);
    const auto pa = static_cast<Eigen::Index>(vt.covariates.p());
    if (transform.contains("eta")) {
      const auto& eta = transform.at("eta");
      if (!eta.is_array() || eta.size() != entries.size()) {
        throw ConfigError(join(tp, "eta"), "needs one vector per lower-triangular entry (" +
                                               std::to_string(entries.size()) + ")");
      }
      for (std::size_t e = 0; e < entries.size(); ++e) {
        vt.eta.push_back(vector_from(eta[e], join(tp, "eta")));
      }
    } else {
      for (const auto& [r, c] : entries) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(pa);
        if (r == c && pa > 0) v(0) = 1.0;
        vt.eta.push_back(v);
      }
    }
    lmc.transform = std::move(vt);
  } else {
    throw ConfigError(join(tp, "type"), "unknown transform type '" + type + "'");
  }
  try {
    lmc.validate();
  } catch (const DomainError& e) {
    throw ConfigError(tp, e.what());
  }
  return lmc;
}

void parse_nugget(const json& j, const std::string& path, std::size_t R, NuggetMode& mode,
                  NuggetSpec& spec) {
  if (j.contains("tau2")) {
    mode = NuggetMode::Shared;
    spec = NuggetSpec::shared(R, value_at<double>(j, "tau2", path));
  } else if (j.contains("nugget")) {
    const json& n = j.at("nugget");
    const std::string np = join(path, "nugget");
    if (n.is_null()) {
      mode = NuggetMode::None;
      spec = NuggetSpec::none();
      return;
    }
    require_object(n, np);
    const auto m = value_or<std::string>(n, "mode", np, "shared");
    if (m == "none") {
      mode = NuggetMode::None;
      spec = NuggetSpec::none();
    } else if (m == "shared") {
      mode = NuggetMode::Shared;
      spec = NuggetSpec::shared(R, value_or<double>(n, "tau2", np, 0.1));
    } else if (m == "per_response") {
      mode = NuggetMode::PerResponse;
      spec.variances = n.contains("variances") ? vector_from(n.at("variances"), join(np, "variances"))
                                               : Eigen::VectorXd::Constant(static_cast<Eigen::Index>(R), 0.1);
      if (static_cast<std::size_t>(spec.variances.size()) != R) {
        throw ConfigError(join(np, "variances"), "needs one variance per response");
      }
    } else {
      throw ConfigError(join(np, "mode"), "unknown nugget mode '" + m + "'");
    }
  } else {
    return;
  }
  if (spec.present() && (spec.variances.array() < 0.0).any()) {
    throw ConfigError(join(path, "nugget"), "variances must be nonnegative");
  }
}

McmcConfig parse_mcmc(const json& j, const std::string& path, std::set<std::string>& fixed) {
  McmcConfig mc;
  if (j.is_null()) return mc;
  require_object(j, path);
  mc.iterations = value_or<std::size_t>(j, "iterations", path, mc.iterations);
  mc.burn_in = value_or<std::size_t>(j, "burn_in", path, mc.burn_in);
  mc.thin = value_or<std::size_t>(j, "thin", path, mc.thin);
  mc.seed = value_or<std::uint64_t>(j, "seed", path, mc.seed);
  mc.adapt_interval = value_or<std::size_t>(j, "adapt_interval", path, mc.adapt_interval);
  mc.target_acceptance = value_or<double>(j, "target_acceptance", path, mc.target_acceptance);
  mc.default_proposal_scale = value_or<double>(j, "proposal_scale", path, mc.default_proposal_scale);
  if (j.contains("proposal_scales")) {
    mc.proposal_scales = value_at<std::map<std::string, double>>(j, "proposal_scales", path);
  }
  if (j.contains("fixed")) {
    for (const auto& name : value_at<std::vector<std::string>>(j, "fixed", path)) fixed.insert(name);
  }
  if (j.contains("jitter")) mc.factor.jitter = value_at<double>(j, "jitter", path);
  if (j.contains("retry_jitter")) mc.factor.retry_jitter = value_at<double>(j, "retry_jitter", path);
  mc.validate();
  return mc;
}

}  // namespace

SchemeConfig parse_scheme_config(const json& j, const std::string& path) {
  SchemeConfig s;
  if (j.is_string()) {
    try {
      s.kind = scheme_kind_from_string(j.get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(path, e.what());
    }
    return s;
  }
  require_object(j, path);
  try {
    s.kind = scheme_kind_from_string(value_at<std::string>(j, "kind", path));
  } catch (const DomainError& e) {
    throw ConfigError(join(path, "kind"), e.what());
  }
  s.m = value_or<std::size_t>(j, "m", path, s.m);
  s.k_per_axis = value_or<std::size_t>(j, "k_per_axis", path, s.k_per_axis);
  s.gamma = value_or<double>(j, "gamma", path, s.gamma);
  if (s.m == 0) throw ConfigError(join(path, "m"), "must be positive");
  if (s.k_per_axis == 0) throw ConfigError(join(path, "k_per_axis"), "must be positive");
  if (!(s.gamma > 0.0)) throw ConfigError(join(path, "gamma"), "must be positive");
  return s;
}

json to_json(const SchemeConfig& s) {
  json j{{"kind", to_string(s.kind)}, {"label", s.label()}};
  if (s.kind != SchemeKind::Full && s.kind != SchemeKind::IndependentBlocks) j["m"] = s.m;
  if (s.kind == SchemeKind::IndependentBlocks || s.kind == SchemeKind::FsaBlock) {
    j["k_per_axis"] = s.k_per_axis;
  }
  if (s.kind == SchemeKind::FsaTaper) j["gamma"] = s.gamma;
  return j;
}

std::vector<SchemeConfig> parse_sweep(const json& j) {
  if (!j.is_object() || !j.contains("sweep")) return default_sweep();
  const auto& arr = j.at("sweep");
  if (!arr.is_array() || arr.empty()) throw ConfigError("sweep", "expected a non-empty array");
  std::vector<SchemeConfig> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_scheme_config(arr[i], "sweep[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<SchemeConfig> parse_scheme_list(const json& j) {
  if (!j.is_object() || !j.contains("schemes")) return paper_schemes();
  const auto& arr = j.at("schemes");
  if (!arr.is_array() || arr.empty()) throw ConfigError("schemes", "expected a non-empty array");
  std::vector<SchemeConfig> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_scheme_config(arr[i], "schemes[" + std::to_string(i) + "]"));
  }
  return out;
}

ExperimentOptions parse_experiment_options(const json& j) {
  ExperimentOptions opt;
  if (j.is_null()) return opt;
  require_object(j, "");
  std::set<std::string> ignored;
  opt.mcmc = parse_mcmc(j.contains("mcmc") ? j.at("mcmc") : json(), "mcmc", ignored);
  if (!ignored.empty()) throw ConfigError("mcmc.fixed", "not supported for experiments");
  if (j.contains("mcmc") && j.at("mcmc").contains("proposal_scales")) {
    opt.proposal_scales = opt.mcmc.proposal_scales;
  }
  opt.prediction_samples = value_or<std::size_t>(j, "prediction_samples", "", opt.prediction_samples);
  return opt;
}

json to_json(const ExperimentOptions& opt) {
  json mc = to_json(opt.mcmc);
  mc["proposal_scales"] = opt.proposal_scales;
  return {{"mcmc", mc}, {"prediction_samples", opt.prediction_samples}};
}

ModelConfig parse_model_config(const json& j) {
  require_object(j, "");
  ModelConfig cfg;
  const json model = j.contains("model") ? j.at("model") : j;
  require_object(model, "model");
  cfg.lmc = parse_lmc(model, "model");
  cfg.nugget = NuggetSpec::shared(cfg.lmc.R, 0.1);
  parse_nugget(model, "model", cfg.lmc.R, cfg.nugget_mode, cfg.nugget);
  cfg.mean_covariates = model.contains("mean_covariates")
                            ? parse_covariates(model.at("mean_covariates"), "model.mean_covariates")
                            : CovariateSpec{{CovariateTerm::intercept()}};
  const auto metric = value_or<std::string>(model, "metric", "model", "euclidean");
  if (metric == "euclidean") {
    cfg.metric = Metric::Euclidean;
  } else if (metric == "chordal") {
    cfg.metric = Metric::Chordal;
  } else {
    throw ConfigError("model.metric", "expected 'euclidean' or 'chordal'");
  }

  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    cfg.scheme.scheme = parse_scheme_config(s, "scheme");
    if (s.is_object()) {
      cfg.scheme.blocks = value_or<std::string>(s, "blocks", "scheme", cfg.scheme.blocks);
      cfg.scheme.voronoi_blocks =
          value_or<std::size_t>(s, "voronoi_blocks", "scheme", cfg.scheme.voronoi_blocks);
      if (cfg.scheme.blocks != "grid" && cfg.scheme.blocks != "voronoi") {
        throw ConfigError("scheme.blocks", "expected 'grid' or 'voronoi'");
      }
    }
  }

  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    require_object(p, "priors");
    if (p.contains("beta")) {
      const auto& b = p.at("beta");
      require_object(b, "priors.beta");
      if (b.contains("mean")) cfg.priors.beta_mean = vector_from(b.at("mean"), "priors.beta.mean");
      if (b.contains("var")) cfg.priors.beta_var = vector_from(b.at("var"), "priors.beta.var");
    }
    if (p.contains("range")) {
      const auto& r = p.at("range");
      if (r.is_string() && r.get<std::string>() == "auto") {
        cfg.auto_range_prior = true;
      } else if (r.is_array()) {
        cfg.priors.ranges.clear();
        for (std::size_t q = 0; q < r.size(); ++q) {
          cfg.priors.ranges.push_back(parse_prior(r[q], "priors.range[" + std::to_string(q) + "]"));
        }
        cfg.auto_range_prior = false;
      } else {
        cfg.priors.ranges = {parse_prior(r, "priors.range")};
        cfg.auto_range_prior = false;
      }
    }
    if (p.contains("diag_A")) cfg.priors.diag_A = parse_prior(p.at("diag_A"), "priors.diag_A");
    if (p.contains("offdiag_A")) cfg.priors.offdiag_A = parse_prior(p.at("offdiag_A"), "priors.offdiag_A");
    if (p.contains("eta")) cfg.priors.eta = parse_prior(p.at("eta"), "priors.eta");
    if (p.contains("nugget")) cfg.priors.nugget = parse_prior(p.at("nugget"), "priors.nugget");
  }
  try {
    cfg.priors.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("priors", e.what());
  }

  cfg.mcmc = parse_mcmc(j.contains("mcmc") ? j.at("mcmc") : json(), "mcmc", cfg.fixed);
  cfg.init_from_config = value_or<std::string>(j, "init", "", "heuristic") == "config";
  cfg.prediction_samples = value_or<std::size_t>(j, "prediction_samples", "", cfg.prediction_samples);
  cfg.seed = value_or<std::uint64_t>(j, "seed", "", cfg.mcmc.seed);
  return cfg;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  return parse_model_config(read_json_file(path));
}

json to_json(const LmcSpec& lmc) {
  json j;
  j["R"] = lmc.R;
  j["latent"] = json::array();
  for (const auto& c : lmc.latent) {
    j["latent"].push_back({{"family", c.family == CorrelationFamily::Exponential ? "exponential" : "matern"},
                           {"range", c.range},
                           {"smoothness", c.smoothness}});
  }
  if (const auto* ct = std::get_if<ConstantTransform>(&lmc.transform)) {
    j["transform"] = {{"type", "constant"}, {"A", matrix_json(ct->A)}};
  } else {
    const auto& vt = std::get<VaryingTransform>(lmc.transform);
    json eta = json::array();
    for (const auto& e : vt.eta) eta.push_back(vector_json(e));
    j["transform"] = {{"type", "varying"}, {"covariates", covariates_json(vt.covariates)}, {"eta", eta}};
  }
  return j;
}

json to_json(const NuggetSpec& nugget) {
  if (!nugget.present()) return {{"mode", "none"}};
  return {{"mode", "per_response"}, {"variances", vector_json(nugget.variances)}};
}

json to_json(const McmcConfig& mc) {
  return {{"iterations", mc.iterations},
          {"burn_in", mc.burn_in},
          {"thin", mc.thin},
          {"seed", mc.seed},
          {"adapt_interval", mc.adapt_interval},
          {"target_acceptance", mc.target_acceptance},
          {"proposal_scale", mc.default_proposal_scale},
          {"proposal_scales", mc.proposal_scales},
          {"jitter", mc.factor.jitter},
          {"retry_jitter", mc.factor.retry_jitter}};
}

json to_json(const ModelConfig& cfg) {
  json model = to_json(cfg.lmc);
  switch (cfg.nugget_mode) {
    case NuggetMode::None: model["nugget"] = {{"mode", "none"}}; break;
    case NuggetMode::Shared:
      model["nugget"] = {{"mode", "shared"}, {"tau2", cfg.nugget.present() ? cfg.nugget.variances(0) : 0.0}};
      break;
    case NuggetMode::PerResponse:
      model["nugget"] = {{"mode", "per_response"}, {"variances", vector_json(cfg.nugget.variances)}};
      break;
  }
  model["mean_covariates"] = covariates_json(cfg.mean_covariates);
  model["metric"] = cfg.metric == Metric::Euclidean ? "euclidean" : "chordal";

  json scheme = to_json(cfg.scheme.scheme);
  scheme["blocks"] = cfg.scheme.blocks;
  if (cfg.scheme.blocks == "voronoi") scheme["voronoi_blocks"] = cfg.scheme.voronoi_blocks;

  json priors;
  priors["beta"] = {{"mean", vector_json(cfg.priors.beta_mean)}, {"var", vector_json(cfg.priors.beta_var)}};
  if (cfg.auto_range_prior) {
    priors["range"] = "auto";
  } else {
    priors["range"] = json::array();
    for (const auto& r : cfg.priors.ranges) priors["range"].push_back(prior_json(r));
  }
  priors["diag_A"] = prior_json(cfg.priors.diag_A);
  priors["offdiag_A"] = prior_json(cfg.priors.offdiag_A);
  priors["eta"] = prior_json(cfg.priors.eta);
  priors["nugget"] = prior_json(cfg.priors.nugget);

  json mcmc = to_json(cfg.mcmc);
  mcmc["fixed"] = cfg.fixed;
  return {{"model", model},
          {"scheme", scheme},
          {"priors", priors},
          {"mcmc", mcmc},
          {"init", cfg.init_from_config ? "config" : "heuristic"},
          {"prediction_samples", cfg.prediction_samples},
          {"seed", cfg.seed}};
}

SimulationScenario parse_scenario(const json& j) {
  require_object(j, "");
  const auto preset = value_or<std::string>(j, "preset", "", "desk");
  SimulationScenario s;
  if (preset == "desk") {
    s = SimulationScenario::desk();
  } else if (preset == "paper") {
    s = SimulationScenario::paper();
  } else {
    throw ConfigError("preset", "expected 'desk' or 'paper'");
  }
  s.n_train = value_or<std::size_t>(j, "n_train", "", s.n_train);
  s.n_test = value_or<std::size_t>(j, "n_test", "", s.n_test);
  s.domain = value_or<double>(j, "domain", "", s.domain);
  s.seed = value_or<std::uint64_t>(j, "seed", "", s.seed);
  s.hole_fraction = value_or<double>(j, "hole_fraction", "", s.hole_fraction);
  s.exclude_holes_from_training =
      value_or<bool>(j, "exclude_holes_from_training", "", s.exclude_holes_from_training);
  s.dense_cap = value_or<std::size_t>(j, "dense_cap", "", s.dense_cap);
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    require_object(t, "truth");
    s.truth.lmc = parse_lmc(t, "truth");
    NuggetMode mode = NuggetMode::Shared;
    s.truth.nugget = NuggetSpec::none();
    parse_nugget(t, "truth", s.truth.lmc.R, mode, s.truth.nugget);
    s.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.truth.lmc.R));
    if (t.contains("beta")) s.beta = vector_from(t.at("beta"), "truth.beta");
  }
  if (j.contains("holes")) {
    const auto& h = j.at("holes");
    if (!h.is_array()) throw ConfigError("holes", "expected an array");
    s.holes.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      const std::string p = "holes[" + std::to_string(i) + "]";
      require_object(h[i], p);
      s.holes.push_back({value_at<double>(h[i], "cx", p), value_at<double>(h[i], "cy", p),
                         value_at<double>(h[i], "r2", p)});
    }
  }
  s.validate();
  return s;
}

SimulationScenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path));
}

json to_json(const SimulationScenario& s) {
  json holes = json::array();
  for (const auto& c : s.holes) holes.push_back({{"cx", c.cx}, {"cy", c.cy}, {"r2", c.r2}});
  json truth = to_json(s.truth.lmc);
  truth["nugget"] = to_json(s.truth.nugget);
  truth["beta"] = vector_json(s.beta);
  return {{"n_train", s.n_train},
          {"n_test", s.n_test},
          {"domain", s.domain},
          {"seed", s.seed},
          {"hole_fraction", s.hole_fraction},
          {"hole_count", s.hole_count()},
          {"exclude_holes_from_training", s.exclude_holes_from_training},
          {"dense_cap", s.dense_cap},
          {"truth", truth},
          {"holes", holes}};
}

json to_json(const DicResult& d) {
  return {{"dic", d.dic}, {"mean_deviance", d.mean_deviance},
          {"deviance_at_mean", d.deviance_at_mean}, {"p_d", d.p_d}};
}

json to_json(const SchemeReport& rep) {
  json params;
  for (const auto& [name, mean] : rep.posterior_mean) {
    params[name] = {{"mean", mean}, {"sd", rep.posterior_sd.at(name)}};
  }
  return {{"scheme", to_json(rep.config)},
          {"posterior", params},
          {"dic", to_json(rep.dic)},
          {"mspe_random", rep.mspe_random},
          {"mspe_hole", rep.mspe_hole},
          {"acceptance_rates", rep.chain.acceptance_rates},
          {"numerical_rejections", rep.chain.numerical_rejections},
          {"stored_samples", rep.chain.size()},
          {"fit_seconds", rep.fit_seconds},
          {"predict_seconds", rep.predict_seconds}};
}

json to_json(const ExperimentReport& rep) {
  json schemes = json::array();
  for (const auto& s : rep.schemes) schemes.push_back(to_json(s));
  return {{"scenario", to_json(rep.scenario)}, {"schemes", schemes}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace fsagp
