#include "reachzono/sysim.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "reachzono/linsolve.hpp"

namespace reachzono {

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, double dt)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), dt_(dt) {
  if (a_.rows() != a_.cols()) {
    throw DimensionError("LtiSystem: A must be square, got " + shape_str(a_.rows(), a_.cols()));
  }
  if (b_.rows() != a_.rows()) {
    throw DimensionError("LtiSystem: B is " + shape_str(b_.rows(), b_.cols()) + ", A is " +
                         shape_str(a_.rows(), a_.cols()));
  }
  if (c_.cols() != a_.rows()) {
    throw DimensionError("LtiSystem: C is " + shape_str(c_.rows(), c_.cols()) + ", A is " +
                         shape_str(a_.rows(), a_.cols()));
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw std::invalid_argument("LtiSystem: non-finite matrix entries");
  }
  const Index rank = numerical_rank(svd(observability_matrix()).singular_values, 1e-9);
  if (rank != nx()) {
    throw std::invalid_argument("LtiSystem: (C, A) is not observable, observability rank " +
                                std::to_string(rank) + " < " + std::to_string(nx()));
  }
}

Matrix LtiSystem::observability_matrix() const {
  Matrix o(ny() * nx(), nx());
  Matrix power = Matrix::Identity(nx(), nx());
  for (Index i = 0; i < nx(); ++i) {
    o.middleRows(i * ny(), ny()) = c_ * power;
    power = power * a_;
  }
  return o;
}

Matrix default_output_matrix(char variant) {
  Matrix c(2, 5);
  switch (variant) {
    case 'a':
      c << 0.6, 0.0, 0.8, 0.0, 0.0,  //
          0.0, 0.8, 0.0, 0.0, 0.6;
      break;
    case 'b':
      c << 0.4, 0.3, 0.2, 0.1, 0.0,  //
          0.0, 0.1, 0.2, 0.3, 0.4;
      break;
    case 'c':
      c << 0.5, 0.5, 0.0, 0.0, 0.0,  //
          0.0, 0.0, 0.3, 0.0, 0.7;
      break;
    default:
      throw std::invalid_argument(std::string("unknown C variant '") + variant +
                                  "', expected a, b or c");
  }
  return c;
}

Matrix default_state_matrix() {
  auto rotation = [](double radius, double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return Eigen::Matrix2d(radius * r);
  };
  Matrix a = Matrix::Zero(5, 5);
  a.block<2, 2>(0, 0) = rotation(0.95, 0.1);
  a.block<2, 2>(2, 2) = rotation(0.9, 0.2);
  a(4, 4) = 0.9;
  return a;
}

LtiSystem default_system(char variant) {
  return LtiSystem(default_state_matrix(), Matrix::Ones(5, 1), default_output_matrix(variant),
                   0.05);
}

NoiseSpec default_noise(Index nx, Index ny) {
  return NoiseSpec{Zonotope::box(Vector::Zero(nx), Vector::Constant(nx, 5e-5)),
                   Zonotope::box(Vector::Zero(ny), Vector::Constant(ny, 1.5e-4)),
                   Zonotope::box(Vector::Zero(ny), Vector::Constant(ny, 0.006))};
}

json trajectory_to_json(const Trajectory& t) {
  json inputs = json::array();
  json outputs = json::array();
  for (const auto& u : t.inputs) inputs.push_back(vector_to_json(u));
  for (const auto& y : t.outputs) outputs.push_back(vector_to_json(y));
  return json{{"seed", t.seed}, {"inputs", inputs}, {"outputs", outputs}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& u : j.at("inputs")) t.inputs.push_back(vector_from_json(u));
  for (const auto& y : j.at("outputs")) t.outputs.push_back(vector_from_json(y));
  if (t.inputs.size() != t.outputs.size()) {
    throw std::invalid_argument("trajectory record: " + std::to_string(t.inputs.size()) +
                                " inputs vs " + std::to_string(t.outputs.size()) + " outputs");
  }
  return t;
}

std::string trajectories_to_ndjson(std::span<const Trajectory> trajs) {
  std::string out;
  for (const auto& t : trajs) {
    out += trajectory_to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<Trajectory> trajectories_from_ndjson(const std::string& text) {
  std::vector<Trajectory> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trajectory_from_json(json::parse(line)));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Trajectory simulate(const LtiSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                    const Zonotope& w_box, const Zonotope& v_box, std::uint64_t seed,
                    bool keep_states) {
  if (x0.size() != sys.nx()) {
    throw DimensionError("simulate: x0 of dimension " + std::to_string(x0.size()) +
                         " for nx = " + std::to_string(sys.nx()));
  }
  if (w_box.dim() != sys.nx() || v_box.dim() != sys.ny()) {
    throw DimensionError("simulate: noise boxes of dimension " + std::to_string(w_box.dim()) +
                         "/" + std::to_string(v_box.dim()) + " for nx = " +
                         std::to_string(sys.nx()) + ", ny = " + std::to_string(sys.ny()));
  }
  std::mt19937_64 rng(seed);
  Trajectory t;
  t.seed = seed;
  t.inputs.assign(inputs.begin(), inputs.end());
  t.outputs.reserve(inputs.size());
  if (keep_states) t.states.emplace();
  Vector x = x0;
  for (const auto& u : inputs) {
    if (u.size() != sys.nu()) {
      throw DimensionError("simulate: input of dimension " + std::to_string(u.size()) +
                           " for nu = " + std::to_string(sys.nu()));
    }
    const Vector v = sample_member(v_box, rng);
    const Vector w = sample_member(w_box, rng);
    if (keep_states) t.states->push_back(x);
    t.outputs.push_back(sys.c() * x + v);
    x = sys.a() * x + sys.b() * u + w;
  }
  return t;
}

Trajectory gen_trajectory(const LtiSystem& sys, const NoiseSpec& noise, const DatasetSpec& spec,
                          std::uint64_t index) {
  const std::uint64_t seed = derive_seed(spec.master_seed, spec.stream, index);
  std::mt19937_64 rng(seed);
  const Vector x0 = sample_member(spec.x0_set, rng);
  std::vector<Vector> inputs;
  inputs.reserve(static_cast<size_t>(spec.length));
  for (int k = 0; k < spec.length; ++k) inputs.push_back(sample_member(spec.input_set, rng));
  // Noise stream is decorrelated from the x0/input stream.
  return simulate(sys, x0, inputs, noise.w_box, noise.v_box, derive_seed(seed, 1, 0),
                  spec.keep_states);
}

std::vector<Trajectory> gen_dataset(const LtiSystem& sys, const NoiseSpec& noise,
                                    const DatasetSpec& spec) {
  if (spec.x0_set.dim() != sys.nx() || spec.input_set.dim() != sys.nu()) {
    throw DimensionError("gen_dataset: x0 set of dimension " + std::to_string(spec.x0_set.dim()) +
                         " and input set of dimension " + std::to_string(spec.input_set.dim()) +
                         " for nx = " + std::to_string(sys.nx()) +
                         ", nu = " + std::to_string(sys.nu()));
  }
  std::vector<Trajectory> out;
  out.reserve(static_cast<size_t>(std::max(spec.count, 0)));
  for (int i = 0; i < spec.count; ++i) {
    out.push_back(gen_trajectory(sys, noise, spec, static_cast<std::uint64_t>(i)));
  }
  return out;
}

Vector characteristic_polynomial(const Matrix& a) {
  const Index n = a.rows();
  Vector coeffs(n + 1);
  coeffs(0) = 1.0;
  Matrix m = Matrix::Zero(n, n);
  for (Index k = 1; k <= n; ++k) {
    m = a * m + coeffs(k - 1) * Matrix::Identity(n, n);
    coeffs(k) = -(a * m).trace() / static_cast<double>(k);
  }
  return coeffs;
}

OracleModel oracle_from_system(const LtiSystem& sys) {
  const int no = static_cast<int>(sys.nx());
  const Index ny = sys.ny();
  const Index nu = sys.nu();
  const Vector poly = characteristic_polynomial(sys.a());

  OracleModel o;
  o.n_o = no;
  o.ny = ny;
  o.nu = nu;
  o.a_coeffs = poly.tail(no);

  std::vector<Matrix> powers{Matrix::Identity(sys.nx(), sys.nx())};
  for (int i = 1; i < no; ++i) powers.push_back(powers.back() * sys.a());
  for (int i = 1; i <= no; ++i) {
    Matrix b = Matrix::Zero(ny, nu);
    for (int j = 0; j < i; ++j) b += poly(j) * sys.c() * powers[static_cast<size_t>(i - 1 - j)] * sys.b();
    o.b_coeffs.push_back(std::move(b));
  }

  // z = [y(k-1)..y(k-no), u(k-1)..u(k-no)], regressor [z; u(k)].
  const Index p = no * (ny + nu);
  const Index uoff = no * ny;
  o.theta = Matrix::Zero(p, p + nu);
  for (int i = 1; i <= no; ++i) {
    o.theta.block(0, (i - 1) * ny, ny, ny) = -poly(i) * Matrix::Identity(ny, ny);
    o.theta.block(0, uoff + (i - 1) * nu, ny, nu) = o.b_coeffs[static_cast<size_t>(i - 1)];
  }
  for (int i = 1; i < no; ++i) {
    o.theta.block(i * ny, (i - 1) * ny, ny, ny).setIdentity();
  }
  o.theta.block(uoff, p, nu, nu).setIdentity();
  for (int i = 1; i < no; ++i) {
    o.theta.block(uoff + i * nu, uoff + (i - 1) * nu, nu, nu).setIdentity();
  }
  return o;
}

std::vector<Vector> residuals(const Trajectory& t, const OracleModel& oracle) {
  std::vector<Vector> out;
  const size_t no = static_cast<size_t>(oracle.n_o);
  for (size_t k = no; k < t.length(); ++k) {
    Vector e = t.outputs[k];
    for (size_t i = 1; i <= no; ++i) {
      e += oracle.a_coeffs(static_cast<Index>(i - 1)) * t.outputs[k - i];
      e -= oracle.b_coeffs[i - 1] * t.inputs[k - i];
    }
    out.push_back(std::move(e));
  }
  return out;
}

Zonotope worst_case_residual_set(const LtiSystem& sys, const OracleModel& oracle,
                                 const Zonotope& w_box, const Zonotope& v_box) {
  const int no = oracle.n_o;
  Vector poly(no + 1);
  poly(0) = 1.0;
  poly.tail(no) = oracle.a_coeffs;

  Zonotope acc(Vector::Zero(sys.ny()));
  // w(k-1-i) enters through H_i = sum_{j<=i} a_j C A^(i-j).
  std::vector<Matrix> powers{Matrix::Identity(sys.nx(), sys.nx())};
  for (int i = 1; i < no; ++i) powers.push_back(powers.back() * sys.a());
  for (int i = 0; i < no; ++i) {
    Matrix h = Matrix::Zero(sys.ny(), sys.nx());
    for (int j = 0; j <= i; ++j) h += poly(j) * sys.c() * powers[static_cast<size_t>(i - j)];
    acc = minkowski_sum(acc, linear_map(h, w_box));
  }
  for (int i = 0; i <= no; ++i) {
    acc = minkowski_sum(acc, linear_map(poly(i) * Matrix::Identity(sys.ny(), sys.ny()), v_box));
  }
  return acc;
}

ResidualReport residual_check(std::span<const Trajectory> trajs, const OracleModel& oracle,
                              const Zonotope& eps_bound, double tol) {
  ResidualReport rep;
  rep.lower = Vector::Constant(eps_bound.dim(), std::numeric_limits<double>::infinity());
  rep.upper = Vector::Constant(eps_bound.dim(), -std::numeric_limits<double>::infinity());
  for (const auto& t : trajs) {
    for (const auto& e : residuals(t, oracle)) {
      ++rep.total;
      rep.lower = rep.lower.cwiseMin(e);
      rep.upper = rep.upper.cwiseMax(e);
      const double s = solve_min_inflation(e - eps_bound.center(), eps_bound.generators()).t;
      if (s <= tol) ++rep.inside;
    }
  }
  rep.fraction_inside =
      rep.total == 0 ? 1.0 : static_cast<double>(rep.inside) / static_cast<double>(rep.total);
  return rep;
}

IntervalBox mc_hull(std::span<const Trajectory> trajs, size_t step) {
  bool any = false;
  Vector lo;
  Vector hi;
  for (const auto& t : trajs) {
    if (t.length() <= step) continue;
    const Vector& y = t.outputs[step];
    if (!any) {
      lo = y;
      hi = y;
      any = true;
    } else {
      lo = lo.cwiseMin(y);
      hi = hi.cwiseMax(y);
    }
  }
  if (!any) {
    throw std::invalid_argument("mc_hull: no trajectory reaches step " + std::to_string(step));
  }
  return IntervalBox(lo, hi);
}

std::vector<Zonotope> model_based_reach(const LtiSystem& sys, const Zonotope& x0_set,
                                        const Zonotope& input_set, const Zonotope& w_box,
                                        const Zonotope& v_box, int horizon) {
  std::vector<Zonotope> out;
  Zonotope x = x0_set;
  const Zonotope bu = linear_map(sys.b(), input_set);
  for (int k = 0; k <= horizon; ++k) {
    out.push_back(minkowski_sum(linear_map(sys.c(), x), v_box));
    x = minkowski_sum(minkowski_sum(linear_map(sys.a(), x), bu), w_box);
  }
  return out;
}

}  // namespace reachzono
