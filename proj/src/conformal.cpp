#include "reachzono/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reachzono {

double score(const Zonotope& yhat, const Vector& y, const LpOptions& options) {
  if (y.size() != yhat.dim()) {
    throw DimensionError("score: point of dimension " + std::to_string(y.size()) +
                         " against set of dimension " + std::to_string(yhat.dim()));
  }
  const Vector r = y - yhat.center();
  if (yhat.num_generators() == 0) return r.cwiseAbs().maxCoeff();
  return solve_min_inflation(r, yhat.generators(), options).t;
}

double quantile(std::span<const double> scores, double delta) {
  if (scores.empty()) throw std::invalid_argument("quantile: empty score list");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("quantile: delta must be in (0, 1)");
  const double n = static_cast<double>(scores.size());
  const double raw = (n + 1.0) * (1.0 - delta);
  const auto idx = static_cast<size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  if (idx > scores.size()) return kInf;
  std::vector<double> sorted(scores.begin(), scores.end());
  const size_t pos = std::max<size_t>(idx, 1) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos), sorted.end());
  return sorted[pos];
}

std::vector<double> ScoreMatrix::column(size_t s) const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& row : scores) out.push_back(row.at(s));
  return out;
}

std::vector<double> ScoreMatrix::trajectory_max() const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& row : scores) {
    out.push_back(row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()));
  }
  return out;
}

namespace {

const Vector& output_at(const Trajectory& t, int step, size_t trial) {
  if (step < 0 || static_cast<size_t>(step) >= t.length()) {
    throw std::out_of_range("compute_scores: trial " + std::to_string(trial) + " has no step " +
                            std::to_string(step));
  }
  return t.outputs[static_cast<size_t>(step)];
}

}  // namespace

ScoreMatrix compute_scores(std::span<const Zonotope> predictions, std::span<const int> steps,
                           std::span<const Trajectory> trials) {
  if (predictions.size() != steps.size()) {
    throw DimensionError("compute_scores: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(steps.size()) + " steps");
  }
  ScoreMatrix sm;
  sm.steps.assign(steps.begin(), steps.end());
  sm.scores.reserve(trials.size());
  for (size_t i = 0; i < trials.size(); ++i) {
    std::vector<double> row;
    row.reserve(steps.size());
    for (size_t s = 0; s < steps.size(); ++s) {
      row.push_back(score(predictions[s], output_at(trials[i], steps[s], i)));
    }
    sm.scores.push_back(std::move(row));
  }
  return sm;
}

ScoreMatrix compute_scores(const std::vector<std::vector<Zonotope>>& predictions,
                           std::span<const int> steps, std::span<const Trajectory> trials) {
  if (predictions.size() != trials.size()) {
    throw DimensionError("compute_scores: predictions for " + std::to_string(predictions.size()) +
                         " trials, outputs for " + std::to_string(trials.size()));
  }
  ScoreMatrix sm;
  sm.steps.assign(steps.begin(), steps.end());
  for (size_t i = 0; i < trials.size(); ++i) {
    if (predictions[i].size() != steps.size()) {
      throw DimensionError("compute_scores: trial " + std::to_string(i) + " has " +
                           std::to_string(predictions[i].size()) + " predictions for " +
                           std::to_string(steps.size()) + " steps");
    }
    std::vector<double> row;
    for (size_t s = 0; s < steps.size(); ++s) {
      row.push_back(score(predictions[i][s], output_at(trials[i], steps[s], i)));
    }
    sm.scores.push_back(std::move(row));
  }
  return sm;
}

std::string scores_to_csv(const ScoreMatrix& sm) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,step,score\n";
  for (size_t i = 0; i < sm.scores.size(); ++i) {
    for (size_t s = 0; s < sm.steps.size(); ++s) {
      os << i << ',' << sm.steps[s] << ',' << sm.scores[i][s] << '\n';
    }
  }
  return os.str();
}

double QuantileTable::at(int step) const {
  auto it = per_step.find(step);
  if (it == per_step.end()) {
    throw std::out_of_range("quantile table has no entry for step " + std::to_string(step));
  }
  return it->second;
}

QuantileTable calibrate(const ScoreMatrix& sm, double delta) {
  if (sm.trials() == 0) throw std::invalid_argument("calibrate: no calibration trials");
  QuantileTable q;
  q.delta = delta;
  q.n_cal = sm.trials();
  for (size_t s = 0; s < sm.steps.size(); ++s) {
    q.per_step[sm.steps[s]] = quantile(sm.column(s), delta);
  }
  q.joint = quantile(sm.trajectory_max(), delta);
  return q;
}

namespace {

json finite_or_null(double v) { return std::isinf(v) ? json(nullptr) : json(v); }
double from_nullable(const json& j) { return j.is_null() ? kInf : j.get<double>(); }

}  // namespace

json quantile_table_to_json(const QuantileTable& q) {
  json per = json::object();
  for (const auto& [k, v] : q.per_step) per[std::to_string(k)] = finite_or_null(v);
  return json{{"delta", q.delta}, {"n_cal", q.n_cal}, {"per_step", per},
              {"joint", finite_or_null(q.joint)}};
}

QuantileTable quantile_table_from_json(const json& j) {
  QuantileTable q;
  q.delta = j.at("delta").get<double>();
  q.n_cal = j.at("n_cal").get<size_t>();
  for (const auto& [k, v] : j.at("per_step").items()) q.per_step[std::stoi(k)] = from_nullable(v);
  q.joint = from_nullable(j.at("joint"));
  return q;
}

Zonotope inflate(const Zonotope& yhat, double q) {
  if (std::isinf(q)) {
    throw std::domain_error(
        "inflate: quantile is +inf; the calibration set is too small for this delta "
        "(need n_cal >= 1/delta - 1); add calibration trajectories");
  }
  if (!(q >= 0.0)) throw std::domain_error("inflate: quantile must be >= 0");
  return minkowski_sum(yhat, Zonotope::box(Vector::Zero(yhat.dim()), Vector::Constant(yhat.dim(), q)));
}

CoverageReport coverage_eval(const ScoreMatrix& test, const QuantileTable& table, double tol) {
  CoverageReport rep;
  rep.n_test = test.trials();
  if (rep.n_test == 0) return rep;
  std::vector<size_t> hits(test.steps.size(), 0);
  size_t joint_ps = 0;
  size_t joint = 0;
  for (const auto& row : test.scores) {
    bool all_ps = true;
    bool all_joint = true;
    for (size_t s = 0; s < test.steps.size(); ++s) {
      const bool in = row[s] <= table.at(test.steps[s]) + tol;
      hits[s] += in ? 1 : 0;
      all_ps = all_ps && in;
      all_joint = all_joint && row[s] <= table.joint + tol;
    }
    joint_ps += all_ps ? 1 : 0;
    joint += all_joint ? 1 : 0;
  }
  const double n = static_cast<double>(rep.n_test);
  for (size_t s = 0; s < test.steps.size(); ++s) {
    rep.per_step[test.steps[s]] = static_cast<double>(hits[s]) / n;
  }
  rep.joint_per_step = static_cast<double>(joint_ps) / n;
  rep.joint = static_cast<double>(joint) / n;
  return rep;
}

json coverage_to_json(const CoverageReport& rep) {
  json per = json::object();
  for (const auto& [k, v] : rep.per_step) per[std::to_string(k)] = v;
  return json{{"n_test", rep.n_test},
              {"per_step", per},
              {"joint_per_step", rep.joint_per_step},
              {"joint", rep.joint}};
}

bool retained(const Trajectory& t, std::span<const Zonotope> context, double tol) {
  if (t.length() < context.size()) return false;
  for (size_t k = 0; k < context.size(); ++k) {
    if (score(context[k], t.outputs[k]) > tol) return false;
  }
  return true;
}

std::vector<Trajectory> filter_retained(std::span<const Trajectory> trajs,
                                        std::span<const Zonotope> context, double tol) {
  std::vector<Trajectory> out;
  for (const auto& t : trajs) {
    if (retained(t, context, tol)) out.push_back(t);
  }
  return out;
}

}  // namespace reachzono
