#pragma once

#include <filesystem>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/covariance.hpp"
#include "fsagp/inference.hpp"
#include "fsagp/simulation.hpp"

namespace fsagp {

using json = nlohmann::json;

struct SchemeSettings {
  SchemeConfig scheme;
  /// "grid" (k_per_axis squares over the bounding box) or "voronoi" (K-means centers).
  std::string blocks = "grid";
  std::size_t voronoi_blocks = 10;
};

/// Everything `fit` and `predict` need besides the data.
struct ModelConfig {
  LmcSpec lmc;
  NuggetMode nugget_mode = NuggetMode::Shared;
  NuggetSpec nugget;
  CovariateSpec mean_covariates;
  Metric metric = Metric::Euclidean;
  SchemeSettings scheme;
  PriorSpec priors;
  /// Range priors become Unif(1, d_max / 3) over the training sites.
  bool auto_range_prior = true;
  /// Start from the configured parameter values instead of the heuristic.
  bool init_from_config = false;
  McmcConfig mcmc;
  std::set<std::string> fixed;
  std::size_t prediction_samples = 50;
  std::uint64_t seed = 1;
};

ModelConfig parse_model_config(const json& j);
ModelConfig load_model_config(const std::filesystem::path& path);
json to_json(const ModelConfig& cfg);

SimulationScenario parse_scenario(const json& j);
SimulationScenario load_scenario(const std::filesystem::path& path);
json to_json(const SimulationScenario& s);

SchemeConfig parse_scheme_config(const json& j, const std::string& field = "scheme");
json to_json(const SchemeConfig& s);
std::vector<SchemeConfig> parse_sweep(const json& j);
/// "schemes" array, defaulting to paper_schemes().
std::vector<SchemeConfig> parse_scheme_list(const json& j);
/// "mcmc" and "prediction_samples" for run_experiment.
ExperimentOptions parse_experiment_options(const json& j);
json to_json(const ExperimentOptions& opt);

json to_json(const LmcSpec& lmc);
json to_json(const NuggetSpec& nugget);
json to_json(const McmcConfig& mc);
json to_json(const DicResult& d);

/// Summary of one scheme's fit: posterior means/sds, DIC, acceptance, MSPE, timing.
json to_json(const SchemeReport& rep);
json to_json(const ExperimentReport& rep);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace fsagp
