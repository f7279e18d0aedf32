#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "reachzono/conformal.hpp"
#include "reachzono/sysim.hpp"

using namespace reachzono;

namespace {

Zonotope zero_box(Index n) { return Zonotope::box(Vector::Zero(n), Vector::Zero(n)); }

std::vector<Vector> constant_inputs(Index nu, int len, double value) {
  return std::vector<Vector>(static_cast<size_t>(len), Vector::Constant(nu, value));
}

LtiSystem random_system(std::mt19937_64& rng, Index nx, Index ny, Index nu) {
  while (true) {
    try {
      return LtiSystem(oracle::random_stable_matrix(rng, nx), oracle::random_matrix(rng, nx, nu),
                       oracle::random_matrix(rng, ny, nx), 0.1);
    } catch (const std::invalid_argument&) {
    }
  }
}

// Lifted state built directly from the definition, newest sample first.
Vector lifted(const Trajectory& t, int k, int n_o) {
  const Index ny = t.outputs[0].size(), nu = t.inputs[0].size();
  Vector z(n_o * (ny + nu));
  for (int i = 1; i <= n_o; ++i) {
    z.segment((i - 1) * ny, ny) = t.outputs[static_cast<size_t>(k - i)];
    z.segment(n_o * ny + (i - 1) * nu, nu) = t.inputs[static_cast<size_t>(k - i)];
  }
  return z;
}

}  // namespace

TEST_CASE("scalar simulation without noise") {
  const LtiSystem sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1.0);
  const auto inputs = constant_inputs(1, 4, 1.0);
  const Trajectory t = simulate(sys, Vector::Zero(1), inputs, zero_box(1), zero_box(1), 3, true);
  REQUIRE(t.length() == 4);
  const double expected[] = {0.0, 1.0, 1.5, 1.75};
  for (size_t k = 0; k < 4; ++k) CHECK(t.outputs[k](0) == doctest::Approx(expected[k]).epsilon(1e-15));
  REQUIRE(t.states.has_value());
  CHECK(t.states->size() == 4);
}

TEST_CASE("simulation is deterministic in the seed") {
  const LtiSystem sys = default_system('a');
  const NoiseSpec noise = default_noise(5, 2);
  const auto inputs = constant_inputs(1, 30, 10.0);
  const Trajectory a = simulate(sys, Vector::Ones(5), inputs, noise.w_box, noise.v_box, 42);
  const Trajectory b = simulate(sys, Vector::Ones(5), inputs, noise.w_box, noise.v_box, 42);
  const Trajectory c = simulate(sys, Vector::Ones(5), inputs, noise.w_box, noise.v_box, 43);
  bool differs = false;
  for (size_t k = 0; k < a.length(); ++k) {
    CHECK(a.outputs[k] == b.outputs[k]);
    differs = differs || a.outputs[k] != c.outputs[k];
  }
  CHECK(differs);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
}

TEST_CASE("dataset generation") {
  const LtiSystem sys = default_system('b');
  const NoiseSpec noise = default_noise(5, 2);
  DatasetSpec spec{Zonotope::box(Vector::Ones(5), Vector::Constant(5, 0.25)),
                   Zonotope::box(Vector::Constant(1, 10.0), Vector::Constant(1, 0.25)),
                   20, 40, 99, 1, true};
  const auto data = gen_dataset(sys, noise, spec);
  REQUIRE(data.size() == 40);
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].length() == 20);
    for (const auto& u : data[i].inputs) {
      CHECK(u(0) >= 9.75);
      CHECK(u(0) <= 10.25);
    }
    const Vector x0 = data[i].states->front();
    CHECK(((x0 - Vector::Ones(5)).cwiseAbs().array() <= 0.25).all());
    const Trajectory again = gen_trajectory(sys, noise, spec, i);
    CHECK(again.outputs.back() == data[i].outputs.back());
  }
  const std::string text = trajectories_to_ndjson(data);
  const auto back = trajectories_from_ndjson(text);
  REQUIRE(back.size() == data.size());
  CHECK(back[7].outputs[3] == data[7].outputs[3]);
  CHECK(back[7].seed == data[7].seed);
  CHECK(trajectories_to_ndjson(back) == text);
}

TEST_CASE("system construction rejects bad inputs") {
  Matrix a = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(LtiSystem(a, Matrix::Ones(3, 1), Matrix::Ones(1, 2), 1.0), DimensionError);
  CHECK_THROWS_AS(LtiSystem(a, Matrix::Ones(2, 1), Matrix::Ones(1, 3), 1.0), DimensionError);
  CHECK_THROWS_AS(LtiSystem(a, Matrix::Ones(2, 1), Matrix{{1.0, 0.0}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(default_output_matrix('z'), std::invalid_argument);
  for (char v : {'a', 'b', 'c'}) CHECK_NOTHROW(default_system(v));
}

TEST_CASE("characteristic polynomial matches the eigenvalues") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Index n = 1 + static_cast<Index>(rng() % 7);
    const Matrix a = oracle::random_matrix(rng, n, n);
    const Vector got = characteristic_polynomial(a);
    CHECK(got(0) == 1.0);
    CHECK((got.tail(n) - oracle::charpoly_from_eigenvalues(a)).norm() < 1e-9 * (1.0 + got.norm()));
  }
  const Vector five = characteristic_polynomial(default_state_matrix());
  CHECK((five.tail(5) - oracle::charpoly_from_eigenvalues(default_state_matrix())).norm() < 1e-12);
}

TEST_CASE("ground-truth model replays noise-free trajectories") {
  std::mt19937_64 rng(22);
  for (int s = 0; s < 50; ++s) {
    const Index nx = 1 + static_cast<Index>(rng() % 5);
    const Index ny = 1 + static_cast<Index>(rng() % 2), nu = 1 + static_cast<Index>(rng() % 2);
    const LtiSystem sys = random_system(rng, nx, ny, nu);
    const OracleModel om = oracle_from_system(sys);
    std::vector<Vector> inputs;
    for (int k = 0; k < 25; ++k) inputs.push_back(oracle::random_vector(rng, nu, 3.0));
    const Trajectory t = simulate(sys, oracle::random_vector(rng, nx), inputs, zero_box(nx),
                                  zero_box(ny), 1);
    for (const auto& e : residuals(t, om)) CHECK(e.cwiseAbs().maxCoeff() < 1e-8);
    const int no = om.n_o;
    for (int k = no; k + 1 < 25; ++k) {
      Vector phi(om.theta.cols());
      phi << lifted(t, k, no), t.inputs[static_cast<size_t>(k)];
      CHECK((om.theta * phi - lifted(t, k + 1, no)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("residuals stay inside the worst-case residual set") {
  const LtiSystem sys = default_system('a');
  const NoiseSpec noise = default_noise(5, 2);
  const OracleModel om = oracle_from_system(sys);
  const Zonotope worst = worst_case_residual_set(sys, om, noise.w_box, noise.v_box);
  DatasetSpec spec{Zonotope::box(Vector::Ones(5), Vector::Constant(5, 0.25)),
                   Zonotope::box(Vector::Constant(1, 10.0), Vector::Constant(1, 0.25)),
                   50, 10, 5, 1, false};
  const auto data = gen_dataset(sys, noise, spec);
  const ResidualReport tight = residual_check(data, om, worst);
  CHECK(tight.total == 10 * 45);
  CHECK(tight.inside == tight.total);
  const ResidualReport loose = residual_check(data, om, noise.eps_bound);
  CHECK(loose.fraction_inside == 1.0);
  CHECK((loose.upper.array() <= 0.006).all());
  CHECK((loose.lower.array() >= -0.006).all());
  const ResidualReport tiny =
      residual_check(data, om, Zonotope::box(Vector::Zero(2), Vector::Constant(2, 1e-7)));
  CHECK(tiny.inside < tiny.total);
}

TEST_CASE("Monte Carlo hull") {
  Trajectory a, b;
  a.outputs = {Vector{{0.0, 1.0}}, Vector{{2.0, -1.0}}};
  b.outputs = {Vector{{1.0, 0.0}}};
  a.inputs = {Vector::Zero(1), Vector::Zero(1)};
  b.inputs = {Vector::Zero(1)};
  const std::vector<Trajectory> trajs{a, b};
  const IntervalBox h0 = mc_hull(trajs, 0);
  CHECK(h0.lower == Vector{{0.0, 0.0}});
  CHECK(h0.upper == Vector{{1.0, 1.0}});
  const IntervalBox h1 = mc_hull(trajs, 1);
  CHECK(h1.lower == h1.upper);
  CHECK_THROWS(mc_hull(trajs, 2));
}

TEST_CASE("model-based reachable sets contain simulated outputs") {
  const LtiSystem sys = default_system('c');
  const NoiseSpec noise = default_noise(5, 2);
  const Zonotope x0 = Zonotope::box(Vector::Ones(5), Vector::Constant(5, 0.25));
  const Zonotope u = Zonotope::box(Vector::Constant(1, 10.0), Vector::Constant(1, 0.25));
  const auto sets = model_based_reach(sys, x0, u, noise.w_box, noise.v_box, 8);
  REQUIRE(sets.size() == 9);
  const auto data = gen_dataset(sys, noise, DatasetSpec{x0, u, 9, 300, 17, 3, false});
  for (const auto& t : data)
    for (size_t k = 0; k < 9; ++k) CHECK(score(sets[k], t.outputs[k]) <= 1e-9);
  const Zonotope noiseless = model_based_reach(sys, x0, u, zero_box(5), zero_box(2), 8)[4];
  CHECK(interval_hull(noiseless).mean_width() < interval_hull(sets[4]).mean_width());
}
