#ifndef REACHZONO_CONFORMAL_HPP_
#define REACHZONO_CONFORMAL_HPP_

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "reachzono/io.hpp"
#include "reachzono/linsolve.hpp"
#include "reachzono/setalg.hpp"
#include "reachzono/sysim.hpp"

namespace reachzono {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Smallest q >= 0 such that y lies in yhat inflated by the box q [-1,1]^n.
double score(const Zonotope& yhat, const Vector& y, const LpOptions& options = {});

/// The ceil((n+1)(1-delta))-th smallest score, or +inf if that index
/// exceeds n.
double quantile(std::span<const double> scores, double delta);

/// scores[i][s] for calibration trial i and the s-th entry of `steps`.
struct ScoreMatrix {
  std::vector<int> steps;
  std::vector<std::vector<double>> scores;

  size_t trials() const { return scores.size(); }
  std::vector<double> column(size_t s) const;
  std::vector<double> trajectory_max() const;
};

/// Scores for predictions shared by every trial: predictions[s] is the set
/// at steps[s], compared with outputs[i][steps[s]].
ScoreMatrix compute_scores(std::span<const Zonotope> predictions, std::span<const int> steps,
                           std::span<const Trajectory> trials);

/// Per-trial predictions: predictions[i][s].
ScoreMatrix compute_scores(const std::vector<std::vector<Zonotope>>& predictions,
                           std::span<const int> steps, std::span<const Trajectory> trials);

std::string scores_to_csv(const ScoreMatrix& sm);

struct QuantileTable {
  double delta = 0.05;
  size_t n_cal = 0;
  std::map<int, double> per_step;
  double joint = 0.0;

  double at(int step) const;
};

QuantileTable calibrate(const ScoreMatrix& sm, double delta);

/// +inf is written as null.
json quantile_table_to_json(const QuantileTable& q);
QuantileTable quantile_table_from_json(const json& j);

/// yhat + <0, q I>. Throws for infinite or negative q.
Zonotope inflate(const Zonotope& yhat, double q);

struct CoverageReport {
  size_t n_test = 0;
  std::map<int, double> per_step;  // fraction with score <= q(k)
  double joint_per_step = 1.0;     // fraction covered at every step by q(k)
  double joint = 1.0;              // fraction covered at every step by q_bar
};

/// Coverage of the inflated sets, decided by score <= q + tol.
CoverageReport coverage_eval(const ScoreMatrix& test, const QuantileTable& table,
                             double tol = 1e-9);

json coverage_to_json(const CoverageReport& rep);

/// Retention filter: the first context.size() outputs each have score <= tol
/// in the corresponding context zonotope.
bool retained(const Trajectory& t, std::span<const Zonotope> context, double tol = 1e-9);

std::vector<Trajectory> filter_retained(std::span<const Trajectory> trajs,
                                        std::span<const Zonotope> context, double tol = 1e-9);

}  // namespace reachzono

#endif  // REACHZONO_CONFORMAL_HPP_
