// Independent reference computations used by the unit and acceptance tests.
#ifndef REACHZONO_TESTS_ORACLES_HPP_
#define REACHZONO_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "reachzono/setalg.hpp"

namespace oracle {

using reachzono::Index;
using reachzono::Matrix;
using reachzono::Vector;
using reachzono::Zonotope;

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * reachzono::uniform_pm1(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline Zonotope random_zonotope(std::mt19937_64& rng, Index n, Index gens, double scale = 1.0) {
  return Zonotope(random_vector(rng, n, scale), random_matrix(rng, n, gens, scale));
}

inline Vector random_unit(std::mt19937_64& rng, Index n) {
  Vector d;
  do {
    d = random_vector(rng, n);
  } while (d.norm() < 1e-3);
  return d / d.norm();
}

/// Exact min over b in [-1, 1] of max_i |a_i - g_i b| by checking every
/// breakpoint of the piecewise-linear objective.
inline double line_min_inflation(const Vector& a, const Vector& g) {
  auto f = [&](double b) { return (a - g * b).cwiseAbs().maxCoeff(); };
  double best = std::min(f(-1.0), f(1.0));
  auto consider = [&](double num, double den) {
    if (den == 0.0) return;
    const double b = num / den;
    if (b > -1.0 && b < 1.0) best = std::min(best, f(b));
  };
  for (Index i = 0; i < a.size(); ++i) {
    consider(a(i), g(i));
    for (Index j = i + 1; j < a.size(); ++j) {
      consider(a(i) - a(j), g(i) - g(j));
      consider(a(i) + a(j), g(i) + g(j));
    }
  }
  return best;
}

/// Brute force for min_beta ||r - G beta||_inf over ||beta||_inf <= 1: a
/// uniform grid of spacing `step` over the first K-1 coefficients with the
/// last one minimized exactly. Overestimates the optimum by at most
/// step/2 * max_i sum_{j<K} |G_ij|.
inline double grid_min_inflation(const Vector& r, const Matrix& g, double step) {
  const Index k = g.cols();
  if (k == 0) return r.cwiseAbs().maxCoeff();
  const Index free = k - 1;
  const int n = static_cast<int>(std::lround(2.0 / step)) + 1;
  std::vector<int> idx(static_cast<size_t>(free), 0);
  double best = INFINITY;
  Vector beta(free);
  while (true) {
    for (Index j = 0; j < free; ++j) beta(j) = std::min(1.0, -1.0 + step * idx[static_cast<size_t>(j)]);
    best = std::min(best, line_min_inflation(r - g.leftCols(free) * beta, g.col(free)));
    Index j = 0;
    while (j < free && ++idx[static_cast<size_t>(j)] == n) idx[static_cast<size_t>(j++)] = 0;
    if (j == free) break;
  }
  return best;
}

/// All 2^gamma corner points c + G s with s in {-1, 1}^gamma.
inline std::vector<Vector> corner_points(const Zonotope& z) {
  const Index gamma = z.num_generators();
  std::vector<Vector> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << gamma); ++mask) {
    Vector p = z.center();
    for (Index j = 0; j < gamma; ++j) p += ((mask >> j) & 1U ? 1.0 : -1.0) * z.generator(j);
    out.push_back(p);
  }
  return out;
}

/// Vertices of the convex hull of 2-D points (monotone chain), deduplicated.
inline std::vector<Vector> convex_hull_2d(std::vector<Vector> pts, double tol = 1e-12) {
  std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
  };
  std::vector<Vector> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const size_t start = hull.size();
    for (const auto& p : pts) {
      while (hull.size() >= start + 2 && cross(hull[hull.size() - 2], hull.back(), p) <= tol) hull.pop_back();
      hull.push_back(p);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  return hull;
}

/// Brute-force support value: maximum of d'p over the corner points.
inline double corner_support(const Zonotope& z, const Vector& d) {
  double best = -INFINITY;
  for (const auto& p : corner_points(z)) best = std::max(best, d.dot(p));
  return best;
}

/// Monic characteristic polynomial coefficients a_1..a_n from the eigenvalues.
inline Vector charpoly_from_eigenvalues(const Matrix& a) {
  const Index n = a.rows();
  const Eigen::VectorXcd ev = a.eigenvalues();
  std::vector<std::complex<double>> coeffs{1.0};
  for (Index i = 0; i < n; ++i) {
    std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
    for (size_t k = 0; k < coeffs.size(); ++k) {
      next[k] += coeffs[k];
      next[k + 1] -= ev(i) * coeffs[k];
    }
    coeffs = std::move(next);
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = coeffs[static_cast<size_t>(i + 1)].real();
  return out;
}

/// Random stable matrix: orthogonal similarity of a block diagonal with
/// rotation blocks and real poles of modulus at most `radius`.
inline Matrix random_stable_matrix(std::mt19937_64& rng, Index n, double radius = 0.95) {
  Matrix d = Matrix::Zero(n, n);
  Index i = 0;
  while (i < n) {
    const double r = radius * (0.3 + 0.7 * reachzono::uniform_01(rng));
    if (i + 1 < n && reachzono::uniform_01(rng) < 0.5) {
      const double th = std::numbers::pi * reachzono::uniform_01(rng);
      d(i, i) = d(i + 1, i + 1) = r * std::cos(th);
      d(i, i + 1) = -r * std::sin(th);
      d(i + 1, i) = r * std::sin(th);
      i += 2;
    } else {
      d(i, i) = reachzono::uniform_01(rng) < 0.5 ? r : -r;
      i += 1;
    }
  }
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
  const Matrix q = qr.householderQ();
  return q * d * q.transpose();
}

}  // namespace oracle

#endif  // REACHZONO_TESTS_ORACLES_HPP_
