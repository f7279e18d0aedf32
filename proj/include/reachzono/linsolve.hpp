#ifndef REACHZONO_LINSOLVE_HPP_
#define REACHZONO_LINSOLVE_HPP_

#include "reachzono/setalg.hpp"

namespace reachzono {

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Thin SVD m = U diag(s) V'. U is rows x r, V is cols x r with r = min(rows, cols);
/// both have orthonormal columns, s is nonincreasing and nonnegative.
struct SvdResult {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

/// One-sided (Hestenes) Jacobi SVD.
SvdResult svd(const Matrix& m, int max_sweeps = 80);

/// Moore-Penrose pseudoinverse; singular values below rank_tol * sigma_max are
/// treated as zero.
Matrix pinv(const Matrix& m, double rank_tol = 1e-10);

Index numerical_rank(const Vector& singular_values, double rank_tol = 1e-10);

/// Extends the orthonormal columns of `basis` to an orthonormal basis of R^rows.
Matrix complete_orthonormal_basis(const Matrix& basis);

struct LpOptions {
  double pivot_tol = 1e-11;
  double cost_tol = 1e-12;
  int max_iterations = 0;            // 0 -> 50 * (rows + columns)
  int degenerate_switch = 40;        // consecutive degenerate pivots before Bland's rule
  bool bland_only = false;
};

struct InflationSolution {
  double t = 0.0;       // min_beta ||r - G beta||_inf, recomputed from beta
  Vector beta;          // witness, ||beta||_inf <= 1
  int iterations = 0;
};

/// Solves min t s.t. ||r - G beta||_inf <= t, ||beta||_inf <= 1 with a
/// bounded-variable primal simplex.
InflationSolution solve_min_inflation(const Vector& r, const Matrix& g,
                                      const LpOptions& options = {});

}  // namespace reachzono

#endif  // REACHZONO_LINSOLVE_HPP_
