#include "reachzono/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace reachzono {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Columns of `m` rotated pairwise until mutually orthogonal; returns false if
// the sweep cap is hit first.
bool jacobi_orthogonalize(Matrix& a, Matrix& v, int max_sweeps) {
  const Index n = a.cols();
  const double eps = std::numeric_limits<double>::epsilon() *
                     std::sqrt(static_cast<double>(std::max<Index>(a.rows(), 1)));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < a.rows(); ++i) {
          const double ap = a(i, p);
          const double aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (Index i = 0; i < v.rows(); ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return true;
  }
  return false;
}

}  // namespace

Matrix complete_orthonormal_basis(const Matrix& basis) {
  const Index n = basis.rows();
  Matrix q(n, n);
  Index k = basis.cols();
  q.leftCols(k) = basis;
  // Greedily add the unit vector with the largest residual after projection.
  while (k < n) {
    Index best = -1;
    double best_norm = -1.0;
    Vector best_vec;
    for (Index i = 0; i < n; ++i) {
      Vector e = Vector::Unit(n, i);
      for (int pass = 0; pass < 2; ++pass) {
        e -= q.leftCols(k) * (q.leftCols(k).transpose() * e);
      }
      const double nrm = e.norm();
      if (nrm > best_norm + 1e-12) {
        best_norm = nrm;
        best = i;
        best_vec = e;
      }
    }
    if (best < 0 || best_norm <= 1e-8) {
      throw NumericalError("complete_orthonormal_basis: input columns are not orthonormal");
    }
    q.col(k) = best_vec / best_norm;
    ++k;
  }
  return q;
}

SvdResult svd(const Matrix& m, int max_sweeps) {
  if (!m.allFinite()) throw NumericalError("svd: non-finite entries");
  if (m.rows() < m.cols()) {
    SvdResult t = svd(m.transpose(), max_sweeps);
    return SvdResult{std::move(t.v), std::move(t.singular_values), std::move(t.u)};
  }
  const Index n = m.cols();
  Matrix a = m;
  Matrix v = Matrix::Identity(n, n);
  if (!jacobi_orthogonalize(a, v, max_sweeps)) {
    throw ConvergenceError("svd: Jacobi sweeps did not converge within " +
                           std::to_string(max_sweeps) + " sweeps for a " +
                           shape_str(m.rows(), m.cols()) + " matrix");
  }

  Vector s(n);
  for (Index j = 0; j < n; ++j) s(j) = a.col(j).norm();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return s(x) > s(y); });

  SvdResult out;
  out.singular_values.resize(n);
  out.u = Matrix::Zero(m.rows(), n);
  out.v.resize(n, n);
  const double smax = n > 0 ? s(order[0]) : 0.0;
  const double tiny = std::max(smax, 1.0) * std::numeric_limits<double>::min() * 1e4;
  Index nonzero = 0;
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<size_t>(j)];
    out.singular_values(j) = s(src);
    out.v.col(j) = v.col(src);
    if (s(src) > tiny) {
      out.u.col(j) = a.col(src) / s(src);
      ++nonzero;
    }
  }
  if (nonzero < n) {
    // Zero singular values: fill U with an orthonormal complement.
    Matrix full = complete_orthonormal_basis(out.u.leftCols(nonzero));
    out.u.rightCols(n - nonzero) = full.middleCols(nonzero, n - nonzero);
    out.singular_values.tail(n - nonzero).setZero();
  }
  return out;
}

Index numerical_rank(const Vector& singular_values, double rank_tol) {
  if (singular_values.size() == 0) return 0;
  const double cutoff = rank_tol * singular_values.maxCoeff();
  return (singular_values.array() > cutoff).count();
}

Matrix pinv(const Matrix& m, double rank_tol) {
  const SvdResult d = svd(m);
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  if (d.singular_values.size() == 0) return out;
  const double cutoff = rank_tol * d.singular_values.maxCoeff();
  for (Index j = 0; j < d.singular_values.size(); ++j) {
    const double sj = d.singular_values(j);
    if (sj > cutoff && sj > 0.0) out.noalias() += (d.v.col(j) / sj) * d.u.col(j).transpose();
  }
  return out;
}

namespace {

enum class VarState : unsigned char { kBasic, kLower, kUpper };

// Dense bounded-variable primal simplex for min c'x, A x = b, 0 <= x <= ub,
// started from a caller-supplied feasible basis. The tableau keeps B^-1 A.
class BoundedSimplex {
 public:
  BoundedSimplex(Matrix tableau, Vector basic_values, std::vector<Index> basis, Vector cost,
                 Vector upper, const LpOptions& options)
      : t_(std::move(tableau)),
        xb_(std::move(basic_values)),
        basis_(std::move(basis)),
        cost_(std::move(cost)),
        ub_(std::move(upper)),
        state_(static_cast<size_t>(t_.cols()), VarState::kLower),
        opt_(options) {
    for (Index r : basis_) state_[static_cast<size_t>(r)] = VarState::kBasic;
  }

  void pivot(Index row, Index col) {
    const double piv = t_(row, col);
    t_.row(row) /= piv;
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    state_[static_cast<size_t>(basis_[static_cast<size_t>(row)])] = VarState::kLower;
    basis_[static_cast<size_t>(row)] = col;
    state_[static_cast<size_t>(col)] = VarState::kBasic;
  }

  // Pivots `col` into `row` while keeping the point fixed, used to set up
  // the start basis.
  void force_pivot(Index row, Index col, double entering_value) {
    xb_ -= entering_value * t_.col(col);
    pivot(row, col);
    xb_(row) = entering_value;
  }

  int solve() {
    const Index m = t_.rows();
    const Index ncols = t_.cols();
    const int cap = opt_.max_iterations > 0 ? opt_.max_iterations
                                            : static_cast<int>(50 * (m + ncols));
    bool bland = opt_.bland_only;
    int degenerate_run = 0;
    Vector duals(m);
    for (int iter = 0; iter < cap; ++iter) {
      for (Index i = 0; i < m; ++i) duals(i) = cost_(basis_[static_cast<size_t>(i)]);

      Index enter = -1;
      double best = 0.0;
      for (Index j = 0; j < ncols; ++j) {
        const VarState st = state_[static_cast<size_t>(j)];
        if (st == VarState::kBasic) continue;
        const double d = cost_(j) - duals.dot(t_.col(j));
        double gain = 0.0;
        if (st == VarState::kLower && d < -opt_.cost_tol) gain = -d;
        if (st == VarState::kUpper && d > opt_.cost_tol) gain = d;
        if (gain <= 0.0) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (gain > best) {
          best = gain;
          enter = j;
        }
      }
      if (enter < 0) return iter;

      const double dir = state_[static_cast<size_t>(enter)] == VarState::kLower ? 1.0 : -1.0;
      double theta = ub_(enter);
      Index leave = -1;
      bool leave_to_upper = false;
      for (Index i = 0; i < m; ++i) {
        const double a = dir * t_(i, enter);
        const Index var = basis_[static_cast<size_t>(i)];
        double lim;
        bool to_upper;
        if (a > opt_.pivot_tol) {
          lim = std::max(0.0, xb_(i)) / a;
          to_upper = false;
        } else if (a < -opt_.pivot_tol && std::isfinite(ub_(var))) {
          lim = std::max(0.0, ub_(var) - xb_(i)) / -a;
          to_upper = true;
        } else {
          continue;
        }
        const bool better = lim < theta ||
                            (lim == theta && leave >= 0 && var < basis_[static_cast<size_t>(leave)]);
        if (better) {
          theta = lim;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(theta)) {
        throw NumericalError("solve_min_inflation: LP reported unbounded");
      }

      degenerate_run = theta <= 1e-14 ? degenerate_run + 1 : 0;
      if (degenerate_run >= opt_.degenerate_switch) bland = true;

      xb_ -= (dir * theta) * t_.col(enter);
      if (leave < 0) {
        // Bound flip; basis unchanged.
        state_[static_cast<size_t>(enter)] =
            dir > 0 ? VarState::kUpper : VarState::kLower;
        continue;
      }
      const double entering_value = dir > 0 ? theta : ub_(enter) - theta;
      const Index leaving_var = basis_[static_cast<size_t>(leave)];
      pivot(leave, enter);
      xb_(leave) = entering_value;
      state_[static_cast<size_t>(leaving_var)] =
          leave_to_upper ? VarState::kUpper : VarState::kLower;
    }
    throw ConvergenceError("solve_min_inflation: simplex exceeded " + std::to_string(cap) +
                           " iterations");
  }

  Vector primal() const {
    Vector x = Vector::Zero(t_.cols());
    for (Index j = 0; j < t_.cols(); ++j) {
      if (state_[static_cast<size_t>(j)] == VarState::kUpper) x(j) = ub_(j);
    }
    for (Index i = 0; i < t_.rows(); ++i) x(basis_[static_cast<size_t>(i)]) = xb_(i);
    return x;
  }

 private:
  Matrix t_;
  Vector xb_;
  std::vector<Index> basis_;
  Vector cost_;
  Vector ub_;
  std::vector<VarState> state_;
  LpOptions opt_;
};

}  // namespace

InflationSolution solve_min_inflation(const Vector& r, const Matrix& g, const LpOptions& options) {
  if (g.rows() != r.size()) {
    throw DimensionError("solve_min_inflation: residual of dimension " + std::to_string(r.size()) +
                         " vs generator matrix " + shape_str(g.rows(), g.cols()));
  }
  if (!r.allFinite() || !g.allFinite()) {
    throw NumericalError("solve_min_inflation: non-finite input");
  }
  const Index n = r.size();
  const Index k = g.cols();
  InflationSolution out;
  out.beta = Vector::Zero(k);
  if (n == 0) return out;
  if (k == 0 || r.cwiseAbs().maxCoeff() == 0.0) {
    out.t = r.cwiseAbs().maxCoeff();
    return out;
  }

  // Columns: t | beta+ (K) | beta- (K) | slacks (2n). Rows, for each i:
  //   -t - G_i beta+ + G_i beta- + s_a = -r_i      (r_i - G_i beta <= t)
  //   -t + G_i beta+ - G_i beta- + s_b =  r_i      (G_i beta - r_i <= t)
  const Index m = 2 * n;
  const Index ncols = 1 + 2 * k + m;
  Matrix tab = Matrix::Zero(m, ncols);
  Vector rhs(m);
  for (Index i = 0; i < n; ++i) {
    tab(2 * i, 0) = -1.0;
    tab(2 * i + 1, 0) = -1.0;
    tab.block(2 * i, 1, 1, k) = -g.row(i);
    tab.block(2 * i, 1 + k, 1, k) = g.row(i);
    tab.block(2 * i + 1, 1, 1, k) = g.row(i);
    tab.block(2 * i + 1, 1 + k, 1, k) = -g.row(i);
    rhs(2 * i) = -r(i);
    rhs(2 * i + 1) = r(i);
  }
  tab.rightCols(m).setIdentity();
  std::vector<Index> basis(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = 1 + 2 * k + i;

  Vector cost = Vector::Zero(ncols);
  cost(0) = 1.0;
  Vector upper = Vector::Constant(ncols, kInf);
  upper.segment(1, 2 * k).setOnes();

  Index start_row = 0;
  rhs.minCoeff(&start_row);
  const double t0 = -rhs(start_row);

  BoundedSimplex lp(std::move(tab), rhs, std::move(basis), std::move(cost), std::move(upper),
                    options);
  lp.force_pivot(start_row, 0, t0);
  out.iterations = lp.solve();

  const Vector x = lp.primal();
  out.beta = (x.segment(1, k) - x.segment(1 + k, k)).cwiseMax(-1.0).cwiseMin(1.0);
  out.t = (r - g * out.beta).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace reachzono
