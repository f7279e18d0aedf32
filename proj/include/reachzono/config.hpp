#ifndef REACHZONO_CONFIG_HPP_
#define REACHZONO_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "reachzono/io.hpp"
#include "reachzono/setalg.hpp"
#include "reachzono/surrogate.hpp"
#include "reachzono/sysim.hpp"

namespace reachzono {

/// Invalid configuration; `field` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  // System: a named preset or explicit matrices (A, B, C all present).
  std::string preset = "default";
  char c_variant = 'a';
  std::optional<Matrix> a, b, c;
  double dt = 0.05;

  Zonotope x0_set;
  Zonotope input_set;
  Zonotope w_box;
  Zonotope v_box;
  Zonotope eps_bound;
  std::string eps_reading = "diagonal";  // or "literal": <0, 0.006 * ones>

  int T = 50;
  int n_o = 5;
  int rho_max = 200;
  int horizon = 9;

  int k_g = 8;
  double t_max = 0.0;  // 0 means horizon

  int d_model = 128;
  int n_heads = 8;
  int n_layers = 4;
  int d_ff = 512;

  int context_m = 500;
  std::string context_mode = "fitted";  // or "dd_centers"

  int label_count = 8;
  int n_ray = 201;
  double cert_inflation = 0.05;

  int n_cal = 200;
  double delta = 0.05;
  int n_test = 1000;
  std::string feedback = "raw";  // or "inflated"

  int mc_count = 10000;

  std::uint64_t seed = 0;

  std::filesystem::path out_dir = "run";
  std::optional<std::filesystem::path> weights_dir;

  LtiSystem system() const;
  NoiseSpec noise() const;
  TokenizerConfig tokenizer() const;
  Architecture architecture() const;
  std::filesystem::path weights_path() const;

  /// Shape and range checks, plus the residual bound check: the exact image
  /// of the noise boxes under the residual map must lie inside eps_bound.
  void validate() const;
};

/// Missing fields take the reference-experiment defaults; unknown fields
/// raise ConfigError.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// True if interval_hull(inner) lies inside outer (sufficient for inner in outer).
bool hull_inside(const Zonotope& inner, const Zonotope& outer, double tol = 1e-12);

}  // namespace reachzono

#endif  // REACHZONO_CONFIG_HPP_
