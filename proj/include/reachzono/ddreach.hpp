#ifndef REACHZONO_DDREACH_HPP_
#define REACHZONO_DDREACH_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reachzono/io.hpp"
#include "reachzono/setalg.hpp"
#include "reachzono/sysim.hpp"

namespace reachzono {

/// Lifted data matrices. Column t of phi_minus is [z(k); u(k)] and column t
/// of z_plus is z(k+1) for the same k, where
///   z(k) = [y(k-1); ...; y(k-n_o); u(k-1); ...; u(k-n_o)].
struct LiftedRecord {
  Matrix z_plus;     // p x T
  Matrix phi_minus;  // (p + n_u) x T
  int n_o = 0;
  Index ny = 0;
  Index nu = 0;
  std::vector<std::string> warnings;

  Index lifted_dim() const { return n_o * (ny + nu); }
  Index columns() const { return z_plus.cols(); }
};

/// z(k) for one trajectory; requires n_o <= k <= length.
Vector lifted_vector(const Trajectory& t, int k, int n_o);

/// Columns k = n_o .. len-2 of every trajectory, concatenated in input order.
/// Trajectories shorter than n_o + 2 are skipped with a warning.
LiftedRecord build_lifted(std::span<const Trajectory> trajs, int n_o);

/// Embeds an n_y-dimensional residual zonotope into the first n_y rows of R^p.
Zonotope embed_residual(const Zonotope& eps_bound, Index p);

/// Noise matrix zonotope: eps center tiled over T columns, one generator per
/// (eps generator i, column j) with a single nonzero column j. With
/// restrict_block the residual lives in the first n_y rows only; otherwise
/// every lifted coordinate receives an independent residual of radius equal
/// to the largest hull radius of eps_bound.
MatrixZonotope build_noise_matzono(const Zonotope& eps_bound, Index columns, Index p,
                                   bool restrict_block = true);

struct ModelSet {
  MatrixZonotope msigma;  // p x (p + n_u)
  Index columns = 0;
  Index rank = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  int n_o = 0;
  Index ny = 0;
  Index nu = 0;
};

/// (Z+ - M_eps) pinv(Phi-). Throws if Phi- is not of full row rank.
ModelSet build_model_set(const LiftedRecord& lr, const MatrixZonotope& meps,
                         double rank_tol = 1e-10);

json model_set_to_json(const ModelSet& ms);
ModelSet model_set_from_json(const json& j);

/// M_Sigma (Z x U) + embed(eps).
Zonotope propagate_step(const ModelSet& ms, const Zonotope& zk, const Zonotope& uk,
                        const Zonotope& eps_bound);

/// Y_{n_o-1} x ... x Y_0 x U_{n_o-1} x ... x U_0 from sets ordered 0..n_o-1.
Zonotope initial_lifted_set(std::span<const Zonotope> outputs, std::span<const Zonotope> inputs);

struct ReachResult {
  int first_step = 0;                  // n_o
  std::vector<Zonotope> lifted_sets;   // Z_{n_o} .. Z_{N+1} (after reduction)
  std::vector<Zonotope> output_sets;   // Y_{n_o} .. Y_N
  int rho_max = 0;

  const Zonotope& output_at(int k) const {
    return output_sets.at(static_cast<size_t>(k - first_step));
  }
  int last_step() const { return first_step + static_cast<int>(output_sets.size()) - 1; }
};

using InputSetFn = std::function<Zonotope(int step)>;

/// Iterates propagate_step, reduce(., rho_max), project for k = n_o .. horizon.
ReachResult run_reachability(const ModelSet& ms, const Zonotope& z_init, const InputSetFn& inputs,
                             const Zonotope& eps_bound, int horizon, int rho_max);

json reach_result_to_json(const ReachResult& r);
ReachResult reach_result_from_json(const json& j);

}  // namespace reachzono

#endif  // REACHZONO_DDREACH_HPP_
