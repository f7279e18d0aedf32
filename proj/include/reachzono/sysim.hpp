#ifndef REACHZONO_SYSIM_HPP_
#define REACHZONO_SYSIM_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "reachzono/io.hpp"
#include "reachzono/setalg.hpp"

namespace reachzono {

/// x(k+1) = A x(k) + B u(k) + w(k),  y(k) = C x(k) + v(k).
/// Construction checks that (C, A) is observable.
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b, Matrix c, double dt);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  double dt() const { return dt_; }
  Index nx() const { return a_.rows(); }
  Index nu() const { return b_.cols(); }
  Index ny() const { return c_.rows(); }

  Matrix observability_matrix() const;

 private:
  Matrix a_, b_, c_;
  double dt_;
};

/// Output matrices of the three sensor configurations (a: cross-block,
/// b: gradient, c: pairwise).
Matrix default_output_matrix(char variant);

/// Two damped rotations (radius 0.95 angle 0.1, radius 0.9 angle 0.2) and a
/// real pole at 0.9; B = ones(5,1); dt = 0.05.
Matrix default_state_matrix();
LtiSystem default_system(char variant = 'a');

struct NoiseSpec {
  Zonotope w_box;      // process noise, dim nx
  Zonotope v_box;      // measurement noise, dim ny
  Zonotope eps_bound;  // aggregated residual bound, dim ny; must contain 0
};

/// w = <0, 5e-5 I>, v = <0, 1.5e-4 I>, eps = <0, 0.006 I> (diagonal reading).
NoiseSpec default_noise(Index nx, Index ny);

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::optional<std::vector<Vector>> states;

  size_t length() const { return outputs.size(); }
};

json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);
/// Newline-delimited trajectory records.
std::string trajectories_to_ndjson(std::span<const Trajectory> trajs);
std::vector<Trajectory> trajectories_from_ndjson(const std::string& text);

/// Deterministic per-item seed from (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Simulates len(inputs) steps; w and v are drawn uniformly from their boxes.
Trajectory simulate(const LtiSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                    const Zonotope& w_box, const Zonotope& v_box, std::uint64_t seed,
                    bool keep_states = false);

struct DatasetSpec {
  Zonotope x0_set;
  Zonotope input_set;
  int length = 0;
  int count = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;
  bool keep_states = false;
};

/// x0 sampled from x0_set and u(k) from input_set; trajectory i uses
/// derive_seed(master, stream, i), so results do not depend on scheduling.
Trajectory gen_trajectory(const LtiSystem& sys, const NoiseSpec& noise, const DatasetSpec& spec,
                          std::uint64_t index);
std::vector<Trajectory> gen_dataset(const LtiSystem& sys, const NoiseSpec& noise,
                                    const DatasetSpec& spec);

/// Ground-truth autoregressive model. Test and baseline use only.
struct OracleModel {
  int n_o = 0;
  Index ny = 0;
  Index nu = 0;
  Vector a_coeffs;              // a_1..a_no (a_0 = 1 implicit)
  std::vector<Matrix> b_coeffs;  // b_1..b_no, each ny x nu
  Matrix theta;                  // Theta', p x (p + nu)
};

/// Characteristic polynomial coefficients of A (monic, a_0 = 1), via
/// Faddeev-LeVerrier.
Vector characteristic_polynomial(const Matrix& a);

OracleModel oracle_from_system(const LtiSystem& sys);

/// epsilon(k) = y(k) + sum a_i y(k-i) - sum b_i u(k-i) for k = n_o .. len-1.
std::vector<Vector> residuals(const Trajectory& t, const OracleModel& oracle);

/// Exact image of the noise boxes under the residual map: every epsilon(k)
/// of a noise realization inside the boxes lies in this zonotope.
Zonotope worst_case_residual_set(const LtiSystem& sys, const OracleModel& oracle,
                                 const Zonotope& w_box, const Zonotope& v_box);

struct ResidualReport {
  Index total = 0;
  Index inside = 0;
  double fraction_inside = 1.0;
  Vector lower;  // empirical per-coordinate range
  Vector upper;
};

ResidualReport residual_check(std::span<const Trajectory> trajs, const OracleModel& oracle,
                              const Zonotope& eps_bound, double tol = 1e-9);

/// Componentwise min/max of outputs at step k over trajectories that reach it.
IntervalBox mc_hull(std::span<const Trajectory> trajs, size_t step);

/// Y_k = C X_k + v_box with X_{k+1} = A X_k + B U + w_box, k = 0..horizon.
std::vector<Zonotope> model_based_reach(const LtiSystem& sys, const Zonotope& x0_set,
                                        const Zonotope& input_set, const Zonotope& w_box,
                                        const Zonotope& v_box, int horizon);

}  // namespace reachzono

#endif  // REACHZONO_SYSIM_HPP_
