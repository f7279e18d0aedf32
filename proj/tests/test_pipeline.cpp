#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "reachzono/pipeline.hpp"

using namespace reachzono;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = REACHZONO_SOURCE_DIR;
const std::string kCli = REACHZONO_CLI;

int run_cli(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("reachzono_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> json_snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".json")
      out[fs::relative(e.path(), root).string()] = read_text(e.path());
  }
  return out;
}

std::string toy_args(const fs::path& out) {
  return "--config '" + (kSource / "configs/toy.json").string() + "' --out '" + out.string() + "'";
}

}  // namespace

TEST_CASE("configuration parsing") {
  const ExperimentConfig ref = load_config(kSource / "configs/reference.json");
  CHECK_NOTHROW(ref.validate());
  CHECK(ref.n_o == 5);
  CHECK(ref.system().nx() == 5);
  CHECK(ref.tokenizer().t_max == ref.horizon);
  const json round = config_to_json(ref);
  CHECK(config_to_json(config_from_json(round)) == round);

  CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"calibration", {{"n_call", 3}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"T", "fifty"}}), ConfigError);
  try {
    config_from_json(json{{"tokenizer", {{"K_g", 8}, {"extra", true}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field().find("extra") != std::string::npos);
  }
  ExperimentConfig bad = ref;
  bad.n_o = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ref;
  bad.k_g = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ref;
  bad.eps_bound = Zonotope::box(Vector::Zero(2), Vector::Constant(2, 1e-6));
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("toy pipeline end to end through the command line") {
  const fs::path out = scratch("toy");
  REQUIRE(run_cli("all " + toy_args(out)) == 0);
  for (const char* rel :
       {"data/sysid.ndjson", "data/context.ndjson", "data/mc.ndjson", "residuals.json",
        "config.resolved.json", "model_set.json", "context.json", "reach.json", "tightened.json",
        "labels.json", "weights/manifest.json", "weights/weights.bin", "scores_calibration.csv",
        "quantiles.json", "predictions.json", "scores_test.csv", "coverage.json", "table.csv",
        "report.json", "run_manifest.json"}) {
    CHECK_MESSAGE(fs::exists(out / rel), rel);
  }
  const json manifest = read_json(out / "run_manifest.json");
  CHECK(manifest.at("version") == kVersion);
  CHECK(manifest.at("artifacts").contains("coverage.json"));
  const json cov = read_json(out / "coverage.json");
  CHECK(cov.at("n_test") == 50);
  const std::string table = read_text(out / "table.csv");
  CHECK(table.rfind("step,mc_width,model_width,tf_qhat_width,dd_width,coverage\n", 0) == 0);

  const json labels = read_json(out / "labels.json");
  CHECK(labels.at("K_g") == 2);
  CHECK(labels.at("n_o") == 1);
  CHECK(labels.at("n_y") == 1);
  CHECK(labels.at("sequences").size() == 2);
  for (const auto& seq : labels.at("sequences")) {
    const auto& steps = seq.at("steps");
    REQUIRE(steps.size() == 4);
    for (size_t k = 0; k < steps.size(); ++k) {
      CHECK(steps[k].at("step") == static_cast<int>(k));
      const Zonotope z = zonotope_from_json(steps[k].at("zonotope"));
      CHECK(z.dim() == 1);
      if (k >= 1) CHECK(z.num_generators() == 2);
    }
  }
  const WeightBundle wb = WeightBundle::load(out / "weights");
  CHECK(wb.architecture().k_g == 2);

  const auto first = json_snapshot(out);
  REQUIRE(run_cli("all " + toy_args(out)) == 0);
  CHECK(json_snapshot(out) == first);
  REQUIRE(run_cli("calibrate " + toy_args(out)) == 0);
  CHECK(json_snapshot(out) == first);
  fs::remove_all(out);
}

TEST_CASE("command line exit codes") {
  const fs::path out = scratch("codes");
  CHECK(run_cli("propagate " + toy_args(out)) == kExitMissingArtifact);
  CHECK(run_cli("evaluate " + toy_args(out)) == kExitMissingArtifact);

  fs::create_directories(out);
  json cfg = read_json(kSource / "configs/toy.json");
  cfg["unexpected"] = 1;
  write_json(out / "bad.json", cfg);
  CHECK(run_cli("simulate --config '" + (out / "bad.json").string() + "' --out '" +
                (out / "r").string() + "'") == kExitConfig);
  CHECK(run_cli("simulate --config '" + (out / "missing.json").string() + "'") == kExitMissingArtifact);
  CHECK(run_cli("no_such_stage " + toy_args(out)) == kExitUsage);
  CHECK(run_cli("simulate") == kExitUsage);
  CHECK(run_cli("simulate " + toy_args(out / "v") + " --c-variant q") == kExitUsage);
  fs::remove_all(out);
}
