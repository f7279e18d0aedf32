#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "reachzono/conformal.hpp"

using namespace reachzono;

namespace {

Trajectory outputs_only(std::vector<Vector> ys) {
  Trajectory t;
  t.inputs.assign(ys.size(), Vector::Zero(1));
  t.outputs = std::move(ys);
  return t;
}

ScoreMatrix uniform_scores(std::mt19937_64& rng, size_t trials, std::vector<int> steps) {
  ScoreMatrix sm;
  sm.steps = std::move(steps);
  for (size_t i = 0; i < trials; ++i) {
    std::vector<double> row;
    for (size_t s = 0; s < sm.steps.size(); ++s) row.push_back(uniform_01(rng));
    sm.scores.push_back(std::move(row));
  }
  return sm;
}

}  // namespace

TEST_CASE("nonconformity score") {
  const Zonotope unit = Zonotope::box(Vector::Zero(2), Vector::Ones(2));
  CHECK(score(unit, Vector{{0.5, -1.0}}) == 0.0);
  CHECK(score(unit, Vector{{3.0, 0.0}}) == doctest::Approx(2.0));
  CHECK(score(Zonotope(Vector{{1.0, 1.0}}), Vector{{0.0, 3.0}}) == 2.0);
  CHECK_THROWS_AS(score(unit, Vector::Zero(3)), DimensionError);
  std::mt19937_64 rng(61);
  for (int i = 0; i < 100; ++i) {
    const Zonotope z = oracle::random_zonotope(rng, 2, 3);
    const Vector y = oracle::random_vector(rng, 2, 4.0);
    const double q = score(z, y);
    const double grid = oracle::grid_min_inflation(y - z.center(), z.generators(), 0.05);
    CHECK(q <= grid + 1e-12);
    CHECK(grid - q <= 0.05 * z.generators().cwiseAbs().rowwise().sum().maxCoeff());
    CHECK(score(inflate(z, q), y) <= 1e-9);
    if (q > 1e-3) CHECK(score(inflate(z, 0.9 * q), y) > 0.0);
  }
}

TEST_CASE("split quantile order statistic") {
  std::vector<double> scores(200);
  std::iota(scores.begin(), scores.end(), 1.0);
  std::mt19937_64 rng(62);
  std::shuffle(scores.begin(), scores.end(), rng);
  CHECK(quantile(scores, 0.05) == 191.0);
  CHECK(quantile(std::span(scores).first(10), 0.05) == kInf);
  std::vector<double> nineteen(scores.begin(), scores.begin() + 19);
  std::vector<double> sorted = nineteen;
  std::sort(sorted.begin(), sorted.end());
  CHECK(quantile(nineteen, 0.05) == sorted[18]);
  CHECK(quantile(std::vector<double>{3.0}, 0.5) == 3.0);
  double prev = kInf;
  for (double delta : {0.01, 0.05, 0.1, 0.2, 0.5, 0.9}) {
    const double q = quantile(scores, delta);
    CHECK(q <= prev);
    prev = q;
  }
  CHECK_THROWS(quantile(std::vector<double>{}, 0.1));
  CHECK_THROWS(quantile(scores, 0.0));
  CHECK_THROWS(quantile(scores, 1.0));
}

TEST_CASE("calibration table and serialization") {
  std::mt19937_64 rng(63);
  const ScoreMatrix sm = uniform_scores(rng, 50, {5, 6, 7});
  const QuantileTable q = calibrate(sm, 0.1);
  CHECK(q.n_cal == 50);
  for (size_t s = 0; s < 3; ++s) CHECK(q.at(sm.steps[s]) == quantile(sm.column(s), 0.1));
  CHECK(q.joint == quantile(sm.trajectory_max(), 0.1));
  for (int k : {5, 6, 7}) CHECK(q.joint >= q.at(k));
  CHECK_THROWS(q.at(8));
  const QuantileTable back = quantile_table_from_json(quantile_table_to_json(q));
  CHECK(back.per_step == q.per_step);
  CHECK(back.joint == q.joint);

  const QuantileTable tiny = calibrate(uniform_scores(rng, 5, {1}), 0.05);
  CHECK(tiny.at(1) == kInf);
  const json j = quantile_table_to_json(tiny);
  CHECK(j.at("joint").is_null());
  CHECK(quantile_table_from_json(j).joint == kInf);

  const ScoreMatrix single = uniform_scores(rng, 40, {3});
  const QuantileTable one = calibrate(single, 0.1);
  CHECK(one.at(3) == one.joint);
}

TEST_CASE("inflation") {
  const Zonotope z(Vector{{1.0, 2.0}}, Matrix{{1.0}, {1.0}});
  const Zonotope big = inflate(z, 0.5);
  CHECK(big.center() == z.center());
  CHECK(big.num_generators() == 3);
  CHECK(interval_hull(big).width() == Vector{{3.0, 3.0}});
  CHECK(inflate(z, 0.0).num_generators() == 3);
  CHECK_THROWS_AS(inflate(z, kInf), std::domain_error);
  CHECK_THROWS_AS(inflate(z, -1.0), std::domain_error);
}

TEST_CASE("scores from shared and per-trial predictions") {
  const std::vector<Zonotope> preds{Zonotope::box(Vector::Zero(1), Vector::Ones(1)),
                                    Zonotope(Vector::Constant(1, 4.0))};
  const std::vector<int> steps{1, 2};
  const std::vector<Trajectory> trials{
      outputs_only({Vector::Zero(1), Vector::Constant(1, 3.0), Vector::Constant(1, 4.5)}),
      outputs_only({Vector::Zero(1), Vector::Constant(1, 0.5), Vector::Constant(1, 2.0)})};
  const ScoreMatrix sm = compute_scores(preds, steps, trials);
  CHECK(sm.scores[0][0] == doctest::Approx(2.0));
  CHECK(sm.scores[0][1] == doctest::Approx(0.5));
  CHECK(sm.scores[1][0] == 0.0);
  CHECK(sm.scores[1][1] == doctest::Approx(2.0));
  CHECK(sm.trajectory_max() == std::vector<double>{sm.scores[0][0], sm.scores[1][1]});
  const ScoreMatrix per = compute_scores(std::vector<std::vector<Zonotope>>{preds, preds}, steps, trials);
  CHECK(per.scores == sm.scores);
  CHECK(scores_to_csv(sm).rfind("trial,step,score\n0,1,2\n", 0) == 0);
  CHECK_THROWS(compute_scores(preds, std::vector<int>{1, 5}, trials));
  CHECK_THROWS_AS(compute_scores(std::span(preds).first(1), steps, trials), DimensionError);
}

TEST_CASE("a perfect predictor has zero quantile and full coverage") {
  std::mt19937_64 rng(64);
  std::vector<Trajectory> trials;
  for (int i = 0; i < 30; ++i) {
    std::vector<Vector> ys;
    for (int k = 0; k < 4; ++k) ys.push_back(oracle::random_vector(rng, 2, 0.9));
    trials.push_back(outputs_only(std::move(ys)));
  }
  const Zonotope box = Zonotope::box(Vector::Zero(2), Vector::Ones(2));
  const std::vector<Zonotope> preds{box, box, box};
  const std::vector<int> steps{1, 2, 3};
  const ScoreMatrix sm = compute_scores(preds, steps, trials);
  const QuantileTable q = calibrate(sm, 0.1);
  for (int k : steps) CHECK(q.at(k) <= 1e-12);
  CHECK(q.joint <= 1e-12);
  const CoverageReport rep = coverage_eval(sm, q);
  CHECK(rep.joint == 1.0);
  CHECK(rep.joint_per_step == 1.0);
  const json j = coverage_to_json(rep);
  CHECK(j.at("per_step").at("2") == 1.0);
}

TEST_CASE("coverage bookkeeping") {
  ScoreMatrix test;
  test.steps = {0, 1};
  test.scores = {{0.1, 0.1}, {0.3, 0.1}, {0.1, 0.6}, {0.5, 0.5}};
  QuantileTable q;
  q.per_step = {{0, 0.2}, {1, 0.55}};
  q.joint = 0.45;
  const CoverageReport rep = coverage_eval(test, q);
  CHECK(rep.n_test == 4);
  CHECK(rep.per_step.at(0) == 0.5);
  CHECK(rep.per_step.at(1) == 0.75);
  CHECK(rep.joint_per_step == 0.25);
  CHECK(rep.joint == 0.5);
  q.per_step[0] = 0.3 - 1e-10;
  CHECK(coverage_eval(test, q).per_step.at(0) == 0.75);
}

TEST_CASE("exchangeable scores reach nominal coverage") {
  std::mt19937_64 rng(65);
  double per_sum = 0.0, joint_sum = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const QuantileTable q = calibrate(uniform_scores(rng, 200, {5, 6, 7}), 0.05);
    const CoverageReport rep = coverage_eval(uniform_scores(rng, 1000, {5, 6, 7}), q);
    for (const auto& [k, v] : rep.per_step) per_sum += v / 3.0;
    joint_sum += rep.joint;
  }
  CHECK(per_sum / reps >= 0.94);
  CHECK(joint_sum / reps >= 0.94);
  CHECK(per_sum / reps <= 0.97);
}

TEST_CASE("retention filter") {
  const std::vector<Zonotope> ctx{Zonotope::box(Vector::Zero(1), Vector::Ones(1)),
                                  Zonotope::box(Vector::Constant(1, 5.0), Vector::Ones(1))};
  const Trajectory in = outputs_only({Vector::Constant(1, 0.5), Vector::Constant(1, 5.5), Vector::Constant(1, 99.0)});
  const Trajectory out = outputs_only({Vector::Constant(1, 0.5), Vector::Constant(1, 7.0)});
  const Trajectory short_t = outputs_only({Vector::Zero(1)});
  CHECK(retained(in, ctx));
  CHECK_FALSE(retained(out, ctx));
  CHECK_FALSE(retained(short_t, ctx));
  const auto kept = filter_retained(std::vector<Trajectory>{out, in, short_t, in}, ctx);
  CHECK(kept.size() == 2);
}
