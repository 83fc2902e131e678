#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fsagp/config.hpp"
#include "fsagp/csv.hpp"
#include "fsagp/error.hpp"
#include "fsagp/pipeline.hpp"
#include "fsagp/simulation.hpp"

#ifndef FSAGP_VERSION
#define FSAGP_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using namespace fsagp;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitGate = 4;

struct GateFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string scenario;
  std::string out;
  std::string scheme;
  std::string data;
  std::string chain;
  std::string sites;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool force = false;
  bool assert_dominance = false;
  bool verbose = false;
};

/// Output directory bookkeeping and the provenance manifest.
class Run {
 public:
  Run(std::string command, const Options& opt)
      : opt_(opt), start_(std::chrono::steady_clock::now()) {
    manifest_["command"] = std::move(command);
    manifest_["version"] = FSAGP_VERSION;
    manifest_["threads"] = opt.threads;
    manifest_["force"] = opt.force;
  }

  /// Creates the output directory and reserves every file the command will write, before
  /// any of them is touched.
  void open(const std::vector<std::string>& names) {
    if (opt_.out.empty()) throw ConfigError("--out", "output directory is required");
    dir_ = opt_.out;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("--out", "cannot create " + dir_.string() + ": " + ec.message());
    std::vector<std::string> all = names;
    all.push_back("manifest.json");
    for (const auto& n : all) {
      if (fs::exists(dir_ / n) && !opt_.force) {
        throw ConfigError("--out", (dir_ / n).string() + " exists; pass --force to overwrite");
      }
    }
    manifest_["outputs"] = names;
    opened_ = true;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  json& manifest() { return manifest_; }
  bool opened() const { return opened_; }

  void finish(const std::string& status, const std::string& message = {}) {
    if (!opened_) return;
    manifest_["status"] = status;
    if (!message.empty()) manifest_["message"] = message;
    manifest_["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json_file(dir_ / "manifest.json", manifest_);
  }

  void log(const std::string& msg) const {
    if (opt_.verbose) std::cerr << msg << '\n';
  }

 private:
  const Options& opt_;
  std::chrono::steady_clock::time_point start_;
  json manifest_;
  fs::path dir_;
  bool opened_ = false;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag, "is required for this command");
}

SchemeKind scheme_flag(const std::string& name) {
  try {
    return scheme_kind_from_string(name);
  } catch (const DomainError& e) {
    throw ConfigError("--scheme", e.what());
  }
}

SimulationScenario scenario_from(const Options& opt, Run& run, SimulationScenario fallback) {
  SimulationScenario s = opt.scenario.empty() ? fallback : load_scenario(opt.scenario);
  if (opt.seed) s.seed = *opt.seed;
  s.validate();
  run.manifest()["seed"] = s.seed;
  run.manifest()["scenario"] = to_json(s);
  if (!opt.scenario.empty()) run.manifest()["scenario_file"] = opt.scenario;
  return s;
}

ModelConfig model_from(const Options& opt, Run& run) {
  require(opt.config, "--config");
  ModelConfig cfg = load_model_config(opt.config);
  if (!opt.scheme.empty()) {
    const SchemeKind kind = scheme_flag(opt.scheme);
    if (kind != cfg.scheme.scheme.kind) {
      run.manifest()["scheme_override"] = {{"config", to_string(cfg.scheme.scheme.kind)},
                                           {"flag", to_string(kind)}};
    }
    cfg.scheme.scheme.kind = kind;
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.mcmc.seed = *opt.seed;
  }
  run.manifest()["seed"] = cfg.seed;
  run.manifest()["config"] = to_json(cfg);
  run.manifest()["config_file"] = opt.config;
  return cfg;
}

SpatialDataset load_data(const std::string& path, const std::string& flag) {
  require(path, flag);
  if (!fs::exists(path)) throw ConfigError(flag, "file not found: " + path);
  try {
    return read_dataset(path);
  } catch (const DomainError& e) {
    throw ConfigError(flag, e.what());
  }
}

json chain_summary(const PosteriorChain& chain) {
  json post;
  for (const auto& name : chain.names) post[name] = {{"mean", chain.mean(name)}, {"sd", chain.sd(name)}};
  return {{"posterior", post},
          {"acceptance_rates", chain.acceptance_rates},
          {"final_scales", chain.final_scales},
          {"numerical_rejections", chain.numerical_rejections},
          {"stored_samples", chain.size()},
          {"mcmc_seconds", chain.seconds}};
}

void cmd_simulate(const Options& opt, Run& run) {
  require(opt.scenario, "--scenario");
  if (!fs::exists(opt.scenario)) throw ConfigError("--scenario", "file not found: " + opt.scenario);
  const SimulationScenario s = scenario_from(opt, run, SimulationScenario::desk());
  run.open({"train.csv", "test_random.csv", "test_hole.csv"});
  run.log("simulating " + std::to_string(s.n_train) + " training sites");
  const SimulatedData data = simulate_lmc(s);
  write_dataset(run.path("train.csv"), data.train);
  write_dataset(run.path("test_random.csv"), data.test_random);
  write_dataset(run.path("test_hole.csv"), data.test_hole);
}

void cmd_fit(const Options& opt, Run& run) {
  ModelConfig cfg = model_from(opt, run);
  SpatialDataset data = load_data(opt.data, "--data");
  run.manifest()["data_file"] = opt.data;
  run.open({"chain.csv", "summary.json"});

  const PreparedFit prep = prepare_fit(std::move(cfg), std::move(data));
  run.log("fitting " + prep.config.scheme.scheme.label() + " on " + std::to_string(prep.data.n()) +
          " sites");
  const FitOutcome res = fit(prep);
  write_chain(run.path("chain.csv"), res.chain);

  json summary = chain_summary(res.chain);
  summary["scheme"] = to_json(prep.config.scheme.scheme);
  summary["dic"] = to_json(res.dic);
  write_json_file(run.path("summary.json"), summary);
  run.manifest()["dic"] = res.dic.dic;
}

void cmd_predict(const Options& opt, Run& run) {
  ModelConfig cfg = model_from(opt, run);
  SpatialDataset data = load_data(opt.data, "--data");
  SpatialDataset sites = load_data(opt.sites, "--sites");
  require(opt.chain, "--chain");
  if (!fs::exists(opt.chain)) throw ConfigError("--chain", "file not found: " + opt.chain);
  run.manifest()["data_file"] = opt.data;
  run.manifest()["sites_file"] = opt.sites;
  run.manifest()["chain_file"] = opt.chain;
  run.open({"predictions.csv"});

  const PreparedFit prep = prepare_fit(std::move(cfg), std::move(data));
  attach_covariates(prep.config, sites);
  const PosteriorChain chain = read_chain(opt.chain);
  for (const auto& s : prep.map->scalars()) {
    if (std::find(chain.names.begin(), chain.names.end(), s.name) == chain.names.end()) {
      throw ConfigError("--chain", "missing column '" + s.name + "'");
    }
  }
  const auto preds = posterior_predict(chain, prep.problem, *prep.map, prep.init,
                                       prediction_sites(sites.sites, sites.X, sites.XA),
                                       prep.config.prediction_samples, prep.config.mcmc.factor);
  write_predictions(run.path("predictions.csv"), preds, sites.sites.metric());
  if (sites.R() == prep.data.R()) run.manifest()["mspe"] = mspe(preds, sites.Y);
}

void cmd_benchmark(const Options& opt, Run& run) {
  SimulationScenario fallback = SimulationScenario::desk();
  fallback.n_train = 1000;
  fallback.n_test = 200;
  const SimulationScenario s = scenario_from(opt, run, fallback);

  json cfg = opt.config.empty() ? json::object() : read_json_file(opt.config);
  std::vector<SchemeConfig> sweep = parse_sweep(cfg);
  std::size_t min_wins = 3;
  if (cfg.contains("min_wins")) {
    if (!cfg.at("min_wins").is_number_unsigned()) throw ConfigError("min_wins", "expected a count");
    min_wins = cfg.at("min_wins").get<std::size_t>();
  }
  if (!opt.scheme.empty()) {
    const SchemeKind kind = scheme_flag(opt.scheme);
    std::erase_if(sweep, [&](const SchemeConfig& c) { return c.kind != kind; });
    if (sweep.empty()) throw ConfigError("--scheme", "no sweep entries of that scheme");
  }
  json sweep_json = json::array();
  for (const auto& c : sweep) sweep_json.push_back(to_json(c));
  run.manifest()["sweep"] = sweep_json;
  run.manifest()["min_wins"] = min_wins;
  if (!opt.config.empty()) run.manifest()["config_file"] = opt.config;
  run.open({"mspe_time.csv", "mspe_time_long.csv"});

  CsvWriter wide(run.path("mspe_time.csv"), benchmark_header());
  CsvWriter longf(run.path("mspe_time_long.csv"), {"scheme", "label", "variable", "value"});
  const auto rows = benchmark_mspe_time(s, sweep, [&](const BenchmarkRow& row) {
    wide.row(benchmark_fields(row));
    const std::string kind = to_string(row.config.kind), label = row.config.label();
    longf.row({kind, label, "mspe", format_double(row.mspe)});
    longf.row({kind, label, "seconds", format_double(row.seconds)});
    run.log(label + "  mspe=" + format_double(row.mspe) + "  seconds=" + format_double(row.seconds));
  });

  json dom = json::object();
  for (SchemeKind challenger : {SchemeKind::FsaBlock, SchemeKind::FsaTaper}) {
    const auto d = assess_dominance(rows, challenger, SchemeKind::PredictiveProcess);
    dom[to_string(challenger) + "_vs_predictive_process"] = {{"wins", d.wins},
                                                             {"comparable", d.comparable}};
  }
  run.manifest()["dominance"] = dom;

  const auto gate = assess_dominance(rows, SchemeKind::FsaBlock, SchemeKind::PredictiveProcess);
  const bool pass = gate.wins >= min_wins;
  run.manifest()["dominance_gate"] = pass ? "pass" : "fail";
  std::cout << "fsa_block wins at " << gate.wins << " of " << gate.comparable
            << " matched budgets (need " << min_wins << ")\n";
  if (opt.assert_dominance && !pass) {
    throw GateFailure("dominance gate failed: " + std::to_string(gate.wins) + " wins, need " +
                      std::to_string(min_wins));
  }
}

void cmd_replicate(const Options& opt, Run& run) {
  const SimulationScenario s = scenario_from(opt, run, SimulationScenario::desk());
  json cfg = opt.config.empty() ? json::object() : read_json_file(opt.config);
  std::vector<SchemeConfig> schemes = parse_scheme_list(cfg);
  ExperimentOptions eo = parse_experiment_options(cfg);
  if (opt.seed) eo.mcmc.seed = *opt.seed;
  if (!opt.scheme.empty()) {
    const SchemeKind kind = scheme_flag(opt.scheme);
    std::erase_if(schemes, [&](const SchemeConfig& c) { return c.kind != kind; });
    if (schemes.empty()) schemes.push_back(SchemeConfig{kind});
  }
  std::set<SchemeKind> kinds;
  std::vector<std::string> outputs{"train.csv", "test_random.csv", "test_hole.csv", "report.json",
                                   "summary.csv"};
  json list = json::array();
  for (const auto& c : schemes) {
    if (!kinds.insert(c.kind).second) throw ConfigError("schemes", "each scheme kind may appear once");
    const std::string k = to_string(c.kind);
    outputs.push_back("chain_" + k + ".csv");
    outputs.push_back("predictions_random_" + k + ".csv");
    outputs.push_back("predictions_hole_" + k + ".csv");
    list.push_back(to_json(c));
  }
  run.manifest()["schemes"] = list;
  run.manifest()["experiment"] = to_json(eo);
  if (!opt.config.empty()) run.manifest()["config_file"] = opt.config;
  run.open(outputs);

  const SimulatedData data = simulate_lmc(s);
  write_dataset(run.path("train.csv"), data.train);
  write_dataset(run.path("test_random.csv"), data.test_random);
  write_dataset(run.path("test_hole.csv"), data.test_hole);

  CsvWriter summary(run.path("summary.csv"),
                    {"scheme", "label", "dic", "p_d", "mspe_random", "mspe_hole", "fit_seconds"});
  eo.on_scheme = [&](const SchemeReport& rep) {
    const std::string k = to_string(rep.config.kind);
    write_chain(run.path("chain_" + k + ".csv"), rep.chain);
    write_predictions(run.path("predictions_random_" + k + ".csv"), rep.predictions_random,
                      Metric::Euclidean);
    write_predictions(run.path("predictions_hole_" + k + ".csv"), rep.predictions_hole,
                      Metric::Euclidean);
    summary.row({k, rep.config.label(), format_double(rep.dic.dic), format_double(rep.dic.p_d),
                 format_double(rep.mspe_random), format_double(rep.mspe_hole),
                 format_double(rep.fit_seconds)});
    run.log(rep.config.label() + " done: DIC " + format_double(rep.dic.dic));
  };
  run.log("running " + std::to_string(schemes.size()) + " schemes");
  const ExperimentReport report = run_experiment(s, data, schemes, eo);
  write_json_file(run.path("report.json"), to_json(report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate spatial GP fitting with full-scale covariance approximations"};
  app.set_version_flag("--version", std::string(FSAGP_VERSION));
  app.require_subcommand(1);

  Options opt;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", seed, "Seed overriding the config/scenario seed");
    sub->add_option("--scheme", opt.scheme,
                    "full | predictive_process | independent_blocks | fsa_block | fsa_taper");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", opt.force, "Overwrite existing outputs");
    sub->add_flag("-v,--verbose", opt.verbose, "Progress on stderr");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate train/test data from a scenario");
  simulate->add_option("--scenario", opt.scenario, "Scenario JSON");
  add_common(simulate);

  auto* fitc = app.add_subcommand("fit", "Run MCMC for one scheme");
  fitc->add_option("--config", opt.config, "Model config JSON");
  fitc->add_option("--data", opt.data, "Training CSV");
  add_common(fitc);

  auto* predict = app.add_subcommand("predict", "Posterior predictive cokriging at new sites");
  predict->add_option("--config", opt.config, "Model config JSON");
  predict->add_option("--data", opt.data, "Training CSV");
  predict->add_option("--chain", opt.chain, "Chain CSV from fit");
  predict->add_option("--sites", opt.sites, "Prediction sites CSV (responses optional)");
  add_common(predict);

  auto* bench = app.add_subcommand("benchmark", "Plug-in BLUP MSPE versus wall time sweep");
  bench->add_option("--scenario", opt.scenario, "Scenario JSON");
  bench->add_option("--config", opt.config, "Sweep JSON");
  bench->add_flag("--assert-dominance", opt.assert_dominance,
                  "Exit 4 unless fsa_block beats the predictive process at enough budgets");
  add_common(bench);

  auto* rep = app.add_subcommand("replicate-paper", "Simulation study: fit, DIC and MSPE per scheme");
  rep->add_option("--scenario", opt.scenario, "Scenario JSON");
  rep->add_option("--config", opt.config, "Experiment JSON (schemes, mcmc, prediction_samples)");
  add_common(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (auto* sub : {simulate, fitc, predict, bench, rep}) {
    if (sub->count("--seed") > 0) opt.seed = seed;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Run run(chosen->get_name(), opt);
  try {
    if (chosen == simulate) cmd_simulate(opt, run);
    else if (chosen == fitc) cmd_fit(opt, run);
    else if (chosen == predict) cmd_predict(opt, run);
    else if (chosen == bench) cmd_benchmark(opt, run);
    else cmd_replicate(opt, run);
    run.finish("ok");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    run.finish("config_error", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    run.finish("config_error", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    run.manifest()["failed_factor"] = e.factor();
    run.finish("numerical_error", e.what());
    return kExitNumerical;
  } catch (const GateFailure& e) {
    std::cerr << e.what() << '\n';
    run.finish("gate_failed", e.what());
    return kExitGate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    run.finish("error", e.what());
    return 1;
  }
}
