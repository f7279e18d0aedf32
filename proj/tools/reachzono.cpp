#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "reachzono/pipeline.hpp"

using namespace reachzono;

int main(int argc, char** argv) {
  CLI::App app{"Data-driven output reachability with a conformally calibrated transformer surrogate"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> c_variant;
  std::optional<std::string> feedback;

  for (const auto& name : Pipeline::stage_names()) {
    CLI::App* sub = app.add_subcommand(name, name == "all" ? "run every stage in order" : "run the " + name + " stage");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides paths.out)");
    sub->add_option("--seed", seed, "master seed (overrides seed)");
    sub->add_option("--c-variant", c_variant, "output matrix variant")->check(CLI::IsMember({"a", "b", "c"}));
    sub->add_option("--feedback", feedback, "context feedback during rollout")
        ->check(CLI::IsMember({"raw", "inflated"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    if (c_variant) cfg.c_variant = (*c_variant)[0];
    if (feedback) cfg.feedback = *feedback;
    cfg.validate();
    Pipeline(cfg).run(stage);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: missing artifact " << e.path().string() << " (run the upstream stage first)\n";
    return kExitMissingArtifact;
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid config field " << e.what() << '\n';
    return kExitConfig;
  } catch (const StageFailure& e) {
    std::cerr << "error: numerical failure in " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
