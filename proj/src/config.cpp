#include "reachzono/config.hpp"

#include <set>

#include "reachzono/conformal.hpp"

namespace reachzono {

namespace {

// Reads fields of one JSON object and rejects any key that was not read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return (it == j_.end() || it->is_null()) ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception& e) {
        throw ConfigError(field(key), std::string("wrong type: ") + e.what());
      }
    }
  }

  template <typename Fn>
  void parse(const std::string& key, Fn&& fn) {
    if (const json* v = find(key)) {
      try {
        fn(*v);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(field(key), e.what());
      }
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
void require(bool ok, const std::string& field, const T& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

LtiSystem ExperimentConfig::system() const {
  if (a || b || c) {
    require(a && b && c, "system", "explicit systems need all of A, B and C");
    return LtiSystem(*a, *b, *c, dt);
  }
  return LtiSystem(default_state_matrix(), Matrix::Ones(5, 1), default_output_matrix(c_variant), dt);
}

NoiseSpec ExperimentConfig::noise() const { return NoiseSpec{w_box, v_box, eps_bound}; }

TokenizerConfig ExperimentConfig::tokenizer() const {
  TokenizerConfig t;
  t.ny = eps_bound.dim();
  t.k_g = k_g;
  t.t_max = t_max > 0.0 ? t_max : static_cast<double>(horizon);
  t.n_o = n_o;
  return t;
}

Architecture ExperimentConfig::architecture() const {
  return Architecture::for_tokenizer(tokenizer(), d_model, n_heads, n_layers, d_ff);
}

std::filesystem::path ExperimentConfig::weights_path() const {
  return weights_dir ? *weights_dir : out_dir / "weights";
}

bool hull_inside(const Zonotope& inner, const Zonotope& outer, double tol) {
  if (inner.dim() != outer.dim()) return false;
  const IntervalBox hull = interval_hull(inner);
  const Index n = inner.dim();
  if (n > 20) throw std::invalid_argument("hull_inside: dimension too large for vertex check");
  const std::uint64_t count = std::uint64_t{1} << n;
  Vector vertex(n);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (Index d = 0; d < n; ++d) vertex(d) = (mask >> d) & 1U ? hull.upper(d) : hull.lower(d);
    if (score(outer, vertex) > tol) return false;
  }
  return true;
}

void ExperimentConfig::validate() const {
  require(preset == "default", "system.preset", "only 'default' is available");
  require(c_variant == 'a' || c_variant == 'b' || c_variant == 'c', "system.c_variant",
          "expected a, b or c");
  require(dt > 0.0, "system.dt", "must be > 0");
  std::optional<LtiSystem> sys;
  try {
    sys.emplace(system());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("system", e.what());
  }
  require(x0_set.dim() == sys->nx(), "x0_set", "dimension must equal n_x = " + std::to_string(sys->nx()));
  require(input_set.dim() == sys->nu(), "input_set", "dimension must equal n_u = " + std::to_string(sys->nu()));
  require(w_box.dim() == sys->nx(), "noise.w_box", "dimension must equal n_x");
  require(v_box.dim() == sys->ny(), "noise.v_box", "dimension must equal n_y");
  require(eps_bound.dim() == sys->ny(), "eps_bound", "dimension must equal n_y");
  require(eps_reading == "diagonal" || eps_reading == "literal", "eps_reading",
          "expected 'diagonal' or 'literal'");
  require(n_o >= 1, "n_o", "must be >= 1");
  require(n_o >= sys->nx(), "n_o", "must be >= n_x = " + std::to_string(sys->nx()) +
                                       " for the input-output model to exist");
  const Index p = n_o * (sys->ny() + sys->nu());
  require(T - n_o - 1 >= p + sys->nu(), "T",
          "needs at least n_o + 1 + n_o (n_y + n_u) + n_u = " +
              std::to_string(n_o + 1 + p + sys->nu()) + " samples for a full-rank regressor");
  require(rho_max >= 1, "rho_max", "must be >= 1");
  require(horizon >= n_o, "horizon", "must be >= n_o");
  require(k_g >= sys->ny() && k_g % sys->ny() == 0, "tokenizer.K_g", "must be a positive multiple of n_y");
  require(t_max >= 0.0, "tokenizer.T_max", "must be >= 0");
  try {
    architecture().validate();
  } catch (const std::exception& e) {
    throw ConfigError("transformer", e.what());
  }
  require(context_m >= 1, "context.M", "must be >= 1");
  require(context_mode == "fitted" || context_mode == "dd_centers", "context.mode",
          "expected 'fitted' or 'dd_centers'");
  require(label_count >= 1, "labels.count", "must be >= 1");
  require(n_ray >= 2, "labels.n_ray", "must be >= 2");
  require(cert_inflation >= 0.0, "labels.inflation", "must be >= 0");
  require(n_cal >= 1, "calibration.n_cal", "must be >= 1");
  require(delta > 0.0 && delta < 1.0, "calibration.delta", "must be in (0, 1)");
  require(n_test >= 1, "calibration.n_test", "must be >= 1");
  require(feedback == "raw" || feedback == "inflated", "calibration.feedback",
          "expected 'raw' or 'inflated'");
  require(mc_count >= 1, "mc.count", "must be >= 1");

  require(score(eps_bound, Vector::Zero(eps_bound.dim())) <= 1e-12, "eps_bound", "must contain 0");
  const OracleModel oracle = oracle_from_system(*sys);
  const Zonotope worst = worst_case_residual_set(*sys, oracle, w_box, v_box);
  const IntervalBox hull = interval_hull(worst);
  require(hull_inside(worst, eps_bound), "eps_bound",
          "residual bound violated: the noise boxes can produce residuals up to " +
              std::to_string(hull.upper.cwiseMax(-hull.lower).maxCoeff()) +
              " per coordinate, outside eps_bound; shrink noise.w_box / noise.v_box or enlarge eps_bound");
}

ExperimentConfig config_from_json(const json& root) {
  ExperimentConfig cfg;
  ObjectReader r(root, "");

  std::optional<json> x0_json, u_json, w_json, v_json, eps_json;
  r.parse("system", [&](const json& j) {
    ObjectReader s(j, "system");
    s.get("preset", cfg.preset);
    s.parse("c_variant", [&](const json& v) {
      const auto str = v.get<std::string>();
      require(str.size() == 1, "system.c_variant", "expected a, b or c");
      cfg.c_variant = str[0];
    });
    s.parse("A", [&](const json& v) { cfg.a = matrix_from_json(v); });
    s.parse("B", [&](const json& v) { cfg.b = matrix_from_json(v); });
    s.parse("C", [&](const json& v) { cfg.c = matrix_from_json(v); });
    s.get("dt", cfg.dt);
    s.finish();
  });
  r.parse("x0_set", [&](const json& j) { x0_json = j; });
  r.parse("input_set", [&](const json& j) { u_json = j; });
  r.parse("noise", [&](const json& j) {
    ObjectReader s(j, "noise");
    s.parse("w_box", [&](const json& v) { w_json = v; });
    s.parse("v_box", [&](const json& v) { v_json = v; });
    s.finish();
  });
  r.parse("eps_bound", [&](const json& j) { eps_json = j; });
  r.get("eps_reading", cfg.eps_reading);
  r.get("T", cfg.T);
  r.get("n_o", cfg.n_o);
  r.get("rho_max", cfg.rho_max);
  r.get("horizon", cfg.horizon);
  r.parse("tokenizer", [&](const json& j) {
    ObjectReader s(j, "tokenizer");
    s.get("K_g", cfg.k_g);
    s.get("T_max", cfg.t_max);
    s.finish();
  });
  r.parse("transformer", [&](const json& j) {
    ObjectReader s(j, "transformer");
    s.get("d_model", cfg.d_model);
    s.get("n_heads", cfg.n_heads);
    s.get("n_layers", cfg.n_layers);
    s.get("d_ff", cfg.d_ff);
    s.finish();
  });
  r.parse("context", [&](const json& j) {
    ObjectReader s(j, "context");
    s.get("M", cfg.context_m);
    s.get("mode", cfg.context_mode);
    s.finish();
  });
  r.parse("labels", [&](const json& j) {
    ObjectReader s(j, "labels");
    s.get("count", cfg.label_count);
    s.get("n_ray", cfg.n_ray);
    s.get("inflation", cfg.cert_inflation);
    s.finish();
  });
  r.parse("calibration", [&](const json& j) {
    ObjectReader s(j, "calibration");
    s.get("n_cal", cfg.n_cal);
    s.get("delta", cfg.delta);
    s.get("n_test", cfg.n_test);
    s.get("feedback", cfg.feedback);
    s.finish();
  });
  r.parse("mc", [&](const json& j) {
    ObjectReader s(j, "mc");
    s.get("count", cfg.mc_count);
    s.finish();
  });
  r.get("seed", cfg.seed);
  r.parse("paths", [&](const json& j) {
    ObjectReader s(j, "paths");
    s.parse("out", [&](const json& v) { cfg.out_dir = v.get<std::string>(); });
    s.parse("weights", [&](const json& v) { cfg.weights_dir = v.get<std::string>(); });
    s.finish();
  });
  r.finish();

  Index nx = 5, nu = 1, ny = 2;
  if (cfg.a) nx = cfg.a->rows();
  if (cfg.b) nu = cfg.b->cols();
  if (cfg.c) ny = cfg.c->rows();

  auto zono = [](const std::optional<json>& j, const std::string& field, Zonotope fallback) {
    if (!j) return fallback;
    try {
      return zonotope_from_json(*j);
    } catch (const std::exception& e) {
      throw ConfigError(field, e.what());
    }
  };
  const NoiseSpec dn = default_noise(nx, ny);
  cfg.x0_set = zono(x0_json, "x0_set", Zonotope::box(Vector::Ones(nx), Vector::Constant(nx, 0.1)));
  cfg.input_set = zono(u_json, "input_set",
                       Zonotope::box(Vector::Constant(nu, 10.0), Vector::Constant(nu, 0.25)));
  cfg.w_box = zono(w_json, "noise.w_box", dn.w_box);
  cfg.v_box = zono(v_json, "noise.v_box", dn.v_box);
  Zonotope eps_default = dn.eps_bound;
  if (cfg.eps_reading == "literal") {
    eps_default = Zonotope(Vector::Zero(ny), Matrix::Constant(ny, 1, 0.006));
  }
  cfg.eps_bound = zono(eps_json, "eps_bound", eps_default);
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json system = {{"preset", cfg.preset}, {"c_variant", std::string(1, cfg.c_variant)}, {"dt", cfg.dt}};
  if (cfg.a) system["A"] = matrix_to_json(*cfg.a);
  if (cfg.b) system["B"] = matrix_to_json(*cfg.b);
  if (cfg.c) system["C"] = matrix_to_json(*cfg.c);
  json paths = {{"out", cfg.out_dir.string()}};
  if (cfg.weights_dir) paths["weights"] = cfg.weights_dir->string();
  return json{
      {"system", system},
      {"x0_set", zonotope_to_json(cfg.x0_set)},
      {"input_set", zonotope_to_json(cfg.input_set)},
      {"noise", {{"w_box", zonotope_to_json(cfg.w_box)}, {"v_box", zonotope_to_json(cfg.v_box)}}},
      {"eps_bound", zonotope_to_json(cfg.eps_bound)},
      {"eps_reading", cfg.eps_reading},
      {"T", cfg.T},
      {"n_o", cfg.n_o},
      {"rho_max", cfg.rho_max},
      {"horizon", cfg.horizon},
      {"tokenizer", {{"K_g", cfg.k_g}, {"T_max", cfg.t_max}}},
      {"transformer",
       {{"d_model", cfg.d_model}, {"n_heads", cfg.n_heads}, {"n_layers", cfg.n_layers}, {"d_ff", cfg.d_ff}}},
      {"context", {{"M", cfg.context_m}, {"mode", cfg.context_mode}}},
      {"labels", {{"count", cfg.label_count}, {"n_ray", cfg.n_ray}, {"inflation", cfg.cert_inflation}}},
      {"calibration",
       {{"n_cal", cfg.n_cal}, {"delta", cfg.delta}, {"n_test", cfg.n_test}, {"feedback", cfg.feedback}}},
      {"mc", {{"count", cfg.mc_count}}},
      {"seed", cfg.seed},
      {"paths", paths},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<file>", e.what());
  }
  return config_from_json(j);
}

}  // namespace reachzono
