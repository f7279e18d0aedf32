#include "reachzono/pipeline.hpp"

#include <algorithm>
#include <map>

#include "reachzono/fitcert.hpp"
#include "reachzono/report.hpp"

namespace reachzono {

namespace fs = std::filesystem;

namespace {

json zonotopes_to_json(std::span<const Zonotope> zs, int first_step) {
  json arr = json::array();
  for (size_t i = 0; i < zs.size(); ++i) {
    arr.push_back({{"step", first_step + static_cast<int>(i)}, {"zonotope", zonotope_to_json(zs[i])}});
  }
  return arr;
}

std::vector<Zonotope> zonotopes_from_json(const json& arr) {
  std::vector<Zonotope> out;
  for (const auto& e : arr) out.push_back(zonotope_from_json(e.at("zonotope")));
  return out;
}

}  // namespace

std::vector<Zonotope> fit_output_sets(std::span<const Trajectory> trajs, int count) {
  std::vector<Zonotope> out;
  for (int k = 0; k < count; ++k) {
    std::vector<Vector> pts;
    pts.reserve(trajs.size());
    for (const auto& t : trajs) pts.push_back(t.outputs.at(static_cast<size_t>(k)));
    out.push_back(pca_fit(pts));
  }
  return out;
}

ReachResult reach_from_context(const ModelSet& ms, std::span<const Zonotope> context,
                               const Zonotope& input_set, const Zonotope& eps_bound, int horizon,
                               int rho_max) {
  const std::vector<Zonotope> inputs(context.size(), input_set);
  const Zonotope z0 = initial_lifted_set(context, inputs);
  return run_reachability(ms, z0, [&](int) { return input_set; }, eps_bound, horizon, rho_max);
}

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)), sys_(cfg_.system()) {}

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names = {
      "simulate", "build_model", "fit_context", "propagate", "tighten",  "gen_labels",
      "init_weights", "calibrate", "predict", "evaluate", "report", "all"};
  return names;
}

void Pipeline::run(const std::string& stage) {
  static const std::map<std::string, void (Pipeline::*)()> table = {
      {"simulate", &Pipeline::simulate},       {"build_model", &Pipeline::build_model},
      {"fit_context", &Pipeline::fit_context}, {"propagate", &Pipeline::propagate},
      {"tighten", &Pipeline::tighten},         {"gen_labels", &Pipeline::gen_labels},
      {"init_weights", &Pipeline::init_weights}, {"calibrate", &Pipeline::calibrate},
      {"predict", &Pipeline::predict},         {"evaluate", &Pipeline::evaluate},
      {"report", &Pipeline::report}};
  auto invoke = [this](const std::string& name, void (Pipeline::*fn)()) {
    try {
      (this->*fn)();
    } catch (const NumericalError& e) {
      throw StageFailure(name, e.what());
    }
    write_manifest();
  };
  if (stage == "all") {
    for (const auto& [name, fn] : std::vector<std::pair<std::string, void (Pipeline::*)()>>{
             {"simulate", &Pipeline::simulate},
             {"build_model", &Pipeline::build_model},
             {"fit_context", &Pipeline::fit_context},
             {"propagate", &Pipeline::propagate},
             {"tighten", &Pipeline::tighten},
             {"gen_labels", &Pipeline::gen_labels}}) {
      invoke(name, fn);
    }
    if (!fs::exists(cfg_.weights_path() / "manifest.json")) invoke("init_weights", &Pipeline::init_weights);
    for (const auto& [name, fn] : std::vector<std::pair<std::string, void (Pipeline::*)()>>{
             {"calibrate", &Pipeline::calibrate},
             {"predict", &Pipeline::predict},
             {"evaluate", &Pipeline::evaluate},
             {"report", &Pipeline::report}}) {
      invoke(name, fn);
    }
    return;
  }
  auto it = table.find(stage);
  if (it == table.end()) throw std::invalid_argument("unknown stage '" + stage + "'");
  invoke(stage, it->second);
}

DatasetSpec Pipeline::dataset_spec(Stream stream, int count, int length) const {
  DatasetSpec spec;
  spec.x0_set = cfg_.x0_set;
  spec.input_set = cfg_.input_set;
  spec.length = length;
  spec.count = count;
  spec.master_seed = cfg_.seed;
  spec.stream = static_cast<std::uint64_t>(stream);
  return spec;
}

std::vector<Trajectory> Pipeline::load_trajectories(const std::string& rel) const {
  return trajectories_from_ndjson(read_text(path(rel)));
}

std::vector<int> Pipeline::prediction_steps() const {
  std::vector<int> steps;
  for (int k = cfg_.n_o; k <= cfg_.horizon; ++k) steps.push_back(k);
  return steps;
}

void Pipeline::simulate() {
  const NoiseSpec noise = cfg_.noise();
  const int len = cfg_.horizon + 1;
  const auto sysid = gen_dataset(sys_, noise, dataset_spec(Stream::kSysId, 1, cfg_.T));
  write_text(path("data/sysid.ndjson"), trajectories_to_ndjson(sysid));
  write_text(path("data/context.ndjson"),
             trajectories_to_ndjson(gen_dataset(sys_, noise, dataset_spec(Stream::kContext, cfg_.context_m, len))));
  write_text(path("data/mc.ndjson"),
             trajectories_to_ndjson(gen_dataset(sys_, noise, dataset_spec(Stream::kMonteCarlo, cfg_.mc_count, len))));

  const OracleModel oracle = oracle_from_system(sys_);
  const ResidualReport rr = residual_check(sysid, oracle, cfg_.eps_bound);
  write_json(path("residuals.json"),
             {{"total", rr.total},
              {"inside", rr.inside},
              {"fraction_inside", rr.fraction_inside},
              {"lower", vector_to_json(rr.lower)},
              {"upper", vector_to_json(rr.upper)}});
  write_json(path("config.resolved.json"), config_to_json(cfg_));
}

void Pipeline::build_model() {
  const auto sysid = load_trajectories("data/sysid.ndjson");
  const LiftedRecord lr = build_lifted(sysid, cfg_.n_o);
  const MatrixZonotope meps = build_noise_matzono(cfg_.eps_bound, lr.columns(), lr.lifted_dim());
  const ModelSet ms = build_model_set(lr, meps);
  json j = model_set_to_json(ms);
  j["warnings"] = lr.warnings;
  write_json(path("model_set.json"), j);
}

void Pipeline::fit_context() {
  const auto ctx = load_trajectories("data/context.ndjson");
  const auto fits = fit_output_sets(ctx, cfg_.n_o);
  write_json(path("context.json"), {{"M", ctx.size()}, {"sets", zonotopes_to_json(fits, 0)}});
}

std::vector<Zonotope> Pipeline::load_context() const {
  return zonotopes_from_json(read_json(path("context.json")).at("sets"));
}

std::vector<Zonotope> Pipeline::rollout_context() const {
  auto ctx = load_context();
  if (cfg_.context_mode == "dd_centers") {
    for (auto& z : ctx) z = Zonotope(z.center());
  }
  return ctx;
}

void Pipeline::propagate() {
  const ModelSet ms = model_set_from_json(read_json(path("model_set.json")));
  const auto ctx = load_context();
  const ReachResult r =
      reach_from_context(ms, ctx, cfg_.input_set, cfg_.eps_bound, cfg_.horizon, cfg_.rho_max);
  write_json(path("reach.json"), reach_result_to_json(r));
}

void Pipeline::tighten() {
  const ReachResult r = reach_result_from_json(read_json(path("reach.json")));
  const auto history = load_trajectories("data/context.ndjson");
  const Certificate cert = strip_cert_from_history(history, cfg_.cert_inflation);
  json steps = json::array();
  for (int k = r.first_step; k <= r.last_step(); ++k) {
    const ContractionReport rep = directional_contract(r.output_at(k), cert, k, cfg_.n_ray);
    json e = contraction_to_json(rep, k);
    e["zonotope"] = zonotope_to_json(rep.tightened);
    steps.push_back(std::move(e));
  }
  write_json(path("tightened.json"), {{"n_ray", cfg_.n_ray}, {"inflation", cfg_.cert_inflation}, {"steps", steps}});
}

void Pipeline::gen_labels() {
  const ModelSet ms = model_set_from_json(read_json(path("model_set.json")));
  const NoiseSpec noise = cfg_.noise();
  const TokenizerConfig tok = cfg_.tokenizer();
  json sequences = json::array();
  for (int i = 0; i < cfg_.label_count; ++i) {
    const auto stream = static_cast<Stream>(static_cast<std::uint64_t>(Stream::kLabels) + i);
    const auto data = gen_dataset(sys_, noise, dataset_spec(stream, cfg_.context_m, cfg_.horizon + 1));
    const auto fits = fit_output_sets(data, cfg_.n_o);
    const ReachResult r =
        reach_from_context(ms, fits, cfg_.input_set, cfg_.eps_bound, cfg_.horizon, cfg_.rho_max);
    const Certificate cert = strip_cert_from_history(data, cfg_.cert_inflation);
    json steps = json::array();
    for (int k = 0; k < cfg_.n_o; ++k) {
      steps.push_back({{"step", k}, {"zonotope", zonotope_to_json(fits[static_cast<size_t>(k)])}});
    }
    for (int k = r.first_step; k <= r.last_step(); ++k) {
      const ContractionReport rep = directional_contract(r.output_at(k), cert, k, cfg_.n_ray);
      // Labels are stored in tokenizer form (reduced, padded to K_g).
      const Zonotope label = drop_zero_generators(rep.tightened);
      const Zonotope reduced =
          label.num_generators() > tok.k_g ? reduce(label, static_cast<int>(tok.k_g / tok.ny)) : label;
      steps.push_back({{"step", k},
                       {"zonotope", zonotope_to_json(pad_generators(reduced, tok.k_g))},
                       {"lambda", rep.lambda}});
    }
    sequences.push_back({{"index", i}, {"stream", static_cast<std::uint64_t>(stream)}, {"steps", steps}});
  }
  write_json(path("labels.json"), {{"n_o", cfg_.n_o},
                                   {"K_g", tok.k_g},
                                   {"n_y", tok.ny},
                                   {"T_max", tok.t_max},
                                   {"horizon", cfg_.horizon},
                                   {"sequences", sequences}});
}

void Pipeline::init_weights() {
  const std::uint64_t seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(Stream::kWeights), 0);
  random_weight_bundle(cfg_.architecture(), seed).save(cfg_.weights_path());
}

std::vector<Trajectory> Pipeline::retained_dataset(Stream stream, int count,
                                                   const std::vector<Zonotope>& context) const {
  const NoiseSpec noise = cfg_.noise();
  const DatasetSpec spec = dataset_spec(stream, count, cfg_.horizon + 1);
  std::vector<Trajectory> out;
  const std::uint64_t limit = 50ULL * static_cast<std::uint64_t>(count) + 1000ULL;
  for (std::uint64_t i = 0; i < limit && static_cast<int>(out.size()) < count; ++i) {
    Trajectory t = gen_trajectory(sys_, noise, spec, i);
    if (retained(t, context)) out.push_back(std::move(t));
  }
  if (static_cast<int>(out.size()) < count) {
    throw NumericalError("only " + std::to_string(out.size()) + " of " + std::to_string(limit) +
                         " generated trajectories pass the retention filter; need " +
                         std::to_string(count));
  }
  return out;
}

void Pipeline::calibrate() {
  const Transformer model(WeightBundle::load(cfg_.weights_path()));
  const auto fitted = load_context();
  const auto cal = retained_dataset(Stream::kCalibration, cfg_.n_cal, fitted);
  write_text(path("data/calibration.ndjson"), trajectories_to_ndjson(cal));

  const TokenizerConfig tok = cfg_.tokenizer();
  const auto steps = prediction_steps();
  QuantileTable table;
  table.delta = cfg_.delta;
  table.n_cal = cal.size();
  std::vector<Zonotope> preds;
  if (cfg_.feedback == "inflated") {
    // Quantile at step k is fixed from step-k scores before anything is fed back.
    preds = autoregress(model, rollout_context(), cfg_.horizon, tok, [&](int k, const Zonotope& raw) {
      std::vector<double> s;
      for (const auto& t : cal) s.push_back(score(raw, t.outputs[static_cast<size_t>(k)]));
      const double q = quantile(s, cfg_.delta);
      table.per_step[k] = q;
      return inflate(raw, q);
    });
  } else {
    preds = autoregress(model, rollout_context(), cfg_.horizon, tok);
  }
  const ScoreMatrix sm = compute_scores(preds, steps, cal);
  const QuantileTable full = reachzono::calibrate(sm, cfg_.delta);
  if (cfg_.feedback != "inflated") table.per_step = full.per_step;
  table.joint = full.joint;
  write_text(path("scores_calibration.csv"), scores_to_csv(sm));
  write_json(path("quantiles.json"), quantile_table_to_json(table));
}

void Pipeline::predict() {
  const Transformer model(WeightBundle::load(cfg_.weights_path()));
  const QuantileTable table = quantile_table_from_json(read_json(path("quantiles.json")));
  const TokenizerConfig tok = cfg_.tokenizer();
  FeedbackFn fb = nullptr;
  if (cfg_.feedback == "inflated") fb = [&](int k, const Zonotope& raw) { return inflate(raw, table.at(k)); };
  const auto preds = autoregress(model, rollout_context(), cfg_.horizon, tok, fb);
  json steps = json::array();
  const auto ks = prediction_steps();
  for (size_t i = 0; i < preds.size(); ++i) {
    const double q = table.at(ks[i]);
    json e = {{"step", ks[i]}, {"raw", zonotope_to_json(preds[i])}, {"q", std::isinf(q) ? json(nullptr) : json(q)}};
    e["inflated"] = std::isinf(q) ? json(nullptr) : zonotope_to_json(inflate(preds[i], q));
    steps.push_back(std::move(e));
  }
  write_json(path("predictions.json"), {{"feedback", cfg_.feedback}, {"context_mode", cfg_.context_mode}, {"steps", steps}});
}

void Pipeline::evaluate() {
  const QuantileTable table = quantile_table_from_json(read_json(path("quantiles.json")));
  const json pj = read_json(path("predictions.json"));
  std::vector<Zonotope> preds;
  std::vector<int> steps;
  for (const auto& e : pj.at("steps")) {
    steps.push_back(e.at("step").get<int>());
    preds.push_back(zonotope_from_json(e.at("raw")));
  }
  const auto test = retained_dataset(Stream::kTest, cfg_.n_test, load_context());
  write_text(path("data/test.ndjson"), trajectories_to_ndjson(test));
  const ScoreMatrix sm = compute_scores(preds, steps, test);
  write_text(path("scores_test.csv"), scores_to_csv(sm));
  json cov = coverage_to_json(coverage_eval(sm, table));
  cov["delta"] = table.delta;
  write_json(path("coverage.json"), cov);
}

void Pipeline::report() {
  const ReachResult dd = reach_result_from_json(read_json(path("reach.json")));
  const json pj = read_json(path("predictions.json"));
  const json cov = read_json(path("coverage.json"));
  const json tj = read_json(path("tightened.json"));
  const auto mc = load_trajectories("data/mc.ndjson");
  const NoiseSpec noise = cfg_.noise();
  const auto model = model_based_reach(sys_, cfg_.x0_set, cfg_.input_set, noise.w_box, noise.v_box, cfg_.horizon);

  std::map<int, Zonotope> tightened;
  for (const auto& e : tj.at("steps")) tightened.emplace(e.at("step").get<int>(), zonotope_from_json(e.at("zonotope")));

  std::vector<TableRow> rows;
  json rows_json = json::array();
  for (const auto& e : pj.at("steps")) {
    const int k = e.at("step").get<int>();
    TableRow row;
    row.step = k;
    row.mc_width = mean_hull_width(mc_hull(mc, static_cast<size_t>(k)));
    row.model_width = mean_hull_width(model.at(static_cast<size_t>(k)));
    row.tf_width = e.at("inflated").is_null() ? kInf : mean_hull_width(zonotope_from_json(e.at("inflated")));
    row.dd_width = mean_hull_width(dd.output_at(k));
    row.coverage = cov.at("per_step").at(std::to_string(k)).get<double>();
    rows.push_back(row);
    rows_json.push_back({{"step", k},
                         {"mc_width", row.mc_width},
                         {"model_width", row.model_width},
                         {"tf_qhat_width", std::isinf(row.tf_width) ? json(nullptr) : json(row.tf_width)},
                         {"dd_width", row.dd_width},
                         {"coverage", row.coverage}});

    if (sys_.ny() >= 2) {
      std::vector<SvgLayer> layers;
      std::vector<Vector> pts;
      for (size_t i = 0; i < std::min<size_t>(mc.size(), 2000); ++i) pts.push_back(mc[i].outputs[static_cast<size_t>(k)].head(2));
      layers.push_back({"Monte Carlo", "#555555", {}, pts});
      layers.push_back({"model-based", "#2ca02c", polygon_outline(model.at(static_cast<size_t>(k))), {}});
      layers.push_back({"data-driven", "#d62728", polygon_outline(dd.output_at(k)), {}});
      if (tightened.contains(k)) layers.push_back({"tightened", "#ff7f0e", polygon_outline(tightened.at(k)), {}});
      if (!e.at("inflated").is_null()) {
        layers.push_back({"transformer + q", "#1f77b4", polygon_outline(zonotope_from_json(e.at("inflated"))), {}});
      }
      char name[32];
      std::snprintf(name, sizeof name, "figures/step_%02d.svg", k);
      write_text(path(name), render_svg("output sets at step " + std::to_string(k), layers));
    }
  }
  write_text(path("table.csv"), table_to_csv(rows));
  write_json(path("report.json"), {{"rows", rows_json},
                                   {"joint_coverage", cov.at("joint")},
                                   {"joint_per_step_coverage", cov.at("joint_per_step")},
                                   {"n_test", cov.at("n_test")}});
}

void Pipeline::write_manifest() const {
  json artifacts = json::object();
  if (fs::exists(cfg_.out_dir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(cfg_.out_dir)) {
      if (e.is_regular_file() && e.path().filename() != "run_manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      artifacts[fs::relative(f, cfg_.out_dir).generic_string()] = sha256_hex(read_text(f));
    }
  }
  const fs::path wp = cfg_.weights_path();
  json weights = nullptr;
  if (fs::exists(wp / "manifest.json") && fs::exists(wp / "weights.bin")) {
    weights = {{"manifest_sha256", sha256_hex(read_text(wp / "manifest.json"))},
               {"weights_sha256", sha256_hex(read_text(wp / "weights.bin"))}};
  }
  write_json(path("run_manifest.json"), {{"version", kVersion},
                                         {"config_sha256", sha256_hex(config_to_json(cfg_).dump())},
                                         {"seed", cfg_.seed},
                                         {"weights", weights},
                                         {"artifacts", artifacts}});
}

}  // namespace reachzono
