#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "fsagp_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + FSAGP_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_json(const std::string& name, const json& j) {
  fs::create_directories(kRoot);
  const auto p = kRoot / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

json small_model(const std::string& kind) {
  return {{"model",
           {{"R", 2},
            {"latent", {{{"family", "exponential"}, {"range", 10}}, {{"family", "exponential"}, {"range", 20}}}},
            {"transform", {{"type", "constant"}, {"A", {{1, 0}, {0.5, 0.5}}}}},
            {"nugget", {{"mode", "shared"}, {"tau2", 0.01}}}}},
          {"scheme", {{"kind", kind}, {"m", 30}, {"k_per_axis", 1}}},
          {"mcmc", {{"iterations", 150}, {"burn_in", 50}, {"thin", 1}, {"seed", 3}}},
          {"prediction_samples", 5},
          {"seed", 3}};
}

/// Simulated train/test files shared by the tests below.
const fs::path& small_data() {
  static const fs::path dir = [] {
    const auto d = kRoot / "data";
    fs::remove_all(d);
    const auto scen = write_json("scenario.json", {{"preset", "desk"}, {"n_train", 80}, {"n_test", 20}, {"seed", 12}});
    REQUIRE(run("simulate --scenario " + scen.string() + " --out " + d.string()) == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("simulate writes data and a manifest, and refuses to overwrite") {
  const auto& d = small_data();
  for (const char* f : {"train.csv", "test_random.csv", "test_hole.csv", "manifest.json"}) CHECK(fs::exists(d / f));
  const auto m = load(d / "manifest.json");
  CHECK(m["status"] == "ok");
  CHECK(m["seed"] == 12);
  CHECK(m.contains("version"));
  CHECK(m["wall_seconds"].get<double>() >= 0.0);
  CHECK(m["scenario"]["n_train"] == 80);

  const auto scen = kRoot / "scenario.json";
  const auto before = slurp(d / "train.csv");
  CHECK(run("simulate --scenario " + scen.string() + " --out " + d.string() + " --seed 99") == 2);
  CHECK(slurp(d / "train.csv") == before);

  const auto other = kRoot / "resim";
  fs::remove_all(other);
  CHECK(run("simulate --scenario " + scen.string() + " --out " + other.string()) == 0);
  CHECK(slurp(other / "train.csv") == before);
  CHECK(run("simulate --scenario " + scen.string() + " --out " + other.string() + " --seed 99 --force") == 0);
  CHECK(slurp(other / "train.csv") != before);
}

TEST_CASE("configuration errors exit with 2") {
  const auto out = (kRoot / "bad").string();
  CHECK(run("simulate --out " + out) == 2);
  CHECK(run("simulate --scenario /nonexistent.json --out " + out) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--help") == 0);
  auto bad = small_model("full");
  bad["model"]["metric"] = "taxicab";
  const auto cfg = write_json("bad_model.json", bad);
  CHECK(run("fit --config " + cfg.string() + " --data " + (small_data() / "train.csv").string() + " --out " + out) == 2);
  const auto good = write_json("good_model.json", small_model("full"));
  CHECK(run("fit --config " + good.string() + " --data " + (small_data() / "train.csv").string() +
            " --scheme hexagons --out " + out) == 2);
}

TEST_CASE("numerical failures exit with 3") {
  fs::create_directories(kRoot);
  const auto data = kRoot / "degenerate.csv";
  {
    std::ofstream f(data);
    f << "x,y,Y1\n";
    for (int i = 0; i < 20; ++i) f << "5,5," << (i % 3) * 0.1 << "\n";
  }
  json cfg = {{"model",
               {{"R", 1},
                {"latent", {{{"family", "exponential"}, {"range", 1e6}}}},
                {"transform", {{"type", "constant"}, {"A", {{1}}}}},
                {"nugget", {{"mode", "none"}}}}},
              {"scheme", {{"kind", "full"}}},
              {"priors", {{"range", {{"type", "uniform"}, {"lo", 1}, {"hi", 1e7}}}}},
              {"init", "config"},
              {"mcmc", {{"iterations", 10}, {"burn_in", 5}, {"jitter", 0}, {"retry_jitter", 0}}}};
  const auto cfg_path = write_json("degenerate.json", cfg);
  const auto out = kRoot / "numerical";
  fs::remove_all(out);
  CHECK(run("fit --config " + cfg_path.string() + " --data " + data.string() + " --out " + out.string()) == 3);
  const auto m = load(out / "manifest.json");
  CHECK(m["status"] == "numerical_error");
  CHECK(m.contains("failed_factor"));
}

TEST_CASE("fit is reproducible and records the scheme override") {
  const auto cfg = write_json("fsa_k1.json", small_model("fsa_block"));
  const auto train = (small_data() / "train.csv").string();
  const auto a = kRoot / "fit_a", b = kRoot / "fit_b", full = kRoot / "fit_full";
  for (const auto& d : {a, b, full}) fs::remove_all(d);
  REQUIRE(run("fit --config " + cfg.string() + " --data " + train + " --out " + a.string()) == 0);
  REQUIRE(run("fit --config " + cfg.string() + " --data " + train + " --out " + b.string()) == 0);
  CHECK(slurp(a / "chain.csv") == slurp(b / "chain.csv"));
  const auto sa = load(a / "summary.json");
  CHECK(sa["dic"].contains("dic"));
  CHECK(sa["dic"].contains("p_d"));
  CHECK(sa["stored_samples"] == 100);
  CHECK(sa["posterior"].contains("tau2"));

  REQUIRE(run("fit --config " + cfg.string() + " --data " + train + " --scheme full --out " + full.string()) == 0);
  const auto m = load(full / "manifest.json");
  CHECK(m["scheme_override"]["config"] == "fsa_block");
  CHECK(m["scheme_override"]["flag"] == "full");
  CHECK(load(full / "summary.json")["scheme"]["kind"] == "full");
  // One block: the approximation is exact, so both chains agree.
  const double da = sa["dic"]["dic"], df = load(full / "summary.json")["dic"]["dic"];
  CHECK(std::abs(da - df) < 1e-3);

  const auto pred = kRoot / "pred";
  fs::remove_all(pred);
  CHECK(run("predict --config " + cfg.string() + " --data " + train + " --chain " + (a / "chain.csv").string() +
            " --sites " + (small_data() / "test_hole.csv").string() + " --out " + pred.string()) == 0);
  CHECK(fs::exists(pred / "predictions.csv"));
  CHECK(load(pred / "manifest.json")["mspe"].get<double>() > 0.0);
}

TEST_CASE("benchmark with one configuration and the dominance gate") {
  const auto scen = write_json("bench_scenario.json", {{"preset", "desk"}, {"n_train", 120}, {"n_test", 20}, {"seed", 4}});
  const auto one = write_json("one.json", {{"sweep", {{{"kind", "fsa_block"}, {"m", 16}, {"k_per_axis", 2}}}}});
  const auto out = kRoot / "bench";
  fs::remove_all(out);
  CHECK(run("benchmark --scenario " + scen.string() + " --config " + one.string() + " --out " + out.string()) == 0);
  std::ifstream f(out / "mspe_time.csv");
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 2);
  CHECK(load(out / "manifest.json")["dominance_gate"] == "fail");
  CHECK(run("benchmark --scenario " + scen.string() + " --config " + one.string() + " --out " + out.string() +
            " --force --assert-dominance") == 4);
  CHECK(load(out / "manifest.json")["status"] == "gate_failed");
}
