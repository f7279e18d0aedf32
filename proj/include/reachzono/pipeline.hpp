#ifndef REACHZONO_PIPELINE_HPP_
#define REACHZONO_PIPELINE_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "reachzono/config.hpp"
#include "reachzono/conformal.hpp"
#include "reachzono/ddreach.hpp"
#include "reachzono/surrogate.hpp"

namespace reachzono {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitMissingArtifact = 2,
  kExitConfig = 3,
  kExitNumerical = 4,
};

/// Numerical failure inside a named stage.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const std::string& message)
      : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Seed streams of the generated datasets.
enum class Stream : std::uint64_t {
  kSysId = 1,
  kContext = 2,
  kMonteCarlo = 3,
  kCalibration = 4,
  kTest = 5,
  kWeights = 7,
  kLabels = 100,  // + label sequence index
};

/// Stage runner over one output directory. Every stage reads its inputs
/// from the directory, writes its artifacts, then refreshes
/// run_manifest.json.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  static const std::vector<std::string>& stage_names();

  /// Runs one stage by name, or every stage for "all".
  void run(const std::string& stage);

  void simulate();
  void build_model();
  void fit_context();
  void propagate();
  void tighten();
  void gen_labels();
  void init_weights();
  void calibrate();
  void predict();
  void evaluate();
  void report();

  void write_manifest() const;

  const ExperimentConfig& config() const { return cfg_; }
  std::filesystem::path path(const std::string& rel) const { return cfg_.out_dir / rel; }

 private:
  std::vector<Trajectory> load_trajectories(const std::string& rel) const;
  std::vector<Zonotope> load_context() const;
  std::vector<Zonotope> rollout_context() const;
  std::vector<int> prediction_steps() const;
  /// Trajectories of a stream, generated in index order until `count` pass
  /// the retention filter against the fitted context.
  std::vector<Trajectory> retained_dataset(Stream stream, int count,
                                           const std::vector<Zonotope>& context) const;
  DatasetSpec dataset_spec(Stream stream, int count, int length) const;

  ExperimentConfig cfg_;
  LtiSystem sys_;
};

/// Data-driven reachable sets from fitted initial output sets.
ReachResult reach_from_context(const ModelSet& ms, std::span<const Zonotope> context,
                               const Zonotope& input_set, const Zonotope& eps_bound, int horizon,
                               int rho_max);

/// Fitted zonotopes of the outputs at steps 0..count-1.
std::vector<Zonotope> fit_output_sets(std::span<const Trajectory> trajs, int count);

}  // namespace reachzono

#endif  // REACHZONO_PIPELINE_HPP_
