#ifndef REACHZONO_SETALG_HPP_
#define REACHZONO_SETALG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reachzono {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when operand shapes are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces non-finite values or fails to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_str(Index rows, Index cols);

/// Zonotope <c, G> = { c + G a : a in [-1,1]^gamma }.
/// Generators are stored as the columns of an n x gamma matrix.
class Zonotope {
 public:
  Zonotope() = default;
  explicit Zonotope(Vector center);
  Zonotope(Vector center, Matrix generators);

  /// Axis-aligned box with one generator per coordinate (zero radii kept).
  static Zonotope box(const Vector& center, const Vector& radius);
  static Zonotope origin(Index dim) { return Zonotope(Vector::Zero(dim)); }

  const Vector& center() const { return center_; }
  const Matrix& generators() const { return generators_; }
  Index dim() const { return center_.size(); }
  Index num_generators() const { return generators_.cols(); }
  auto generator(Index j) const { return generators_.col(j); }

  bool operator==(const Zonotope& other) const;

 private:
  Vector center_;
  Matrix generators_;
};

/// Matrix zonotope { C + sum_i a_i G_i : a in [-1,1]^gamma }.
class MatrixZonotope {
 public:
  MatrixZonotope() = default;
  explicit MatrixZonotope(Matrix center);
  MatrixZonotope(Matrix center, std::vector<Matrix> generators);

  const Matrix& center() const { return center_; }
  const std::vector<Matrix>& generators() const { return generators_; }
  Index rows() const { return center_.rows(); }
  Index cols() const { return center_.cols(); }
  Index num_generators() const { return static_cast<Index>(generators_.size()); }

  /// C + sum_i coeffs[i] G_i. Coefficients outside [-1,1] are not rejected.
  Matrix member(const Vector& coeffs) const;

 private:
  Matrix center_;
  std::vector<Matrix> generators_;
};

struct IntervalBox {
  Vector lower;
  Vector upper;

  IntervalBox() = default;
  IntervalBox(Vector lo, Vector hi);

  Index dim() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  double mean_width() const;
  bool contains(const Vector& point, double tol = 1e-9) const;
  bool contains(const IntervalBox& other, double tol = 1e-9) const;
};

Zonotope linear_map(const Matrix& map, const Zonotope& z);
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Zonotope cartesian_product(const Zonotope& a, const Zonotope& b);
Zonotope cartesian_product(std::span<const Zonotope> parts);

/// Sound enclosure of { X z : X in m, z in z }.
Zonotope matzono_mul(const MatrixZonotope& m, const Zonotope& z);

/// Box-merging order reduction; the result has at most order * dim generators
/// and contains z.
Zonotope reduce(const Zonotope& z, int order);

IntervalBox interval_hull(const Zonotope& z);

/// Rows [first, first + count) of the zonotope.
Zonotope project(const Zonotope& z, Index first, Index count);
Zonotope project(const Zonotope& z, std::span<const Index> dims);

/// h_Z(d) = d'c + sum_j |d'g_j|.
double support(const Zonotope& z, const Vector& direction);

Zonotope drop_zero_generators(const Zonotope& z, double tol = 0.0);

/// Appends zero generators until the zonotope has exactly `count` of them.
Zonotope pad_generators(const Zonotope& z, Index count);

Zonotope scale_generators(const Zonotope& z, double factor);

/// Uniform double in [-1, 1] from the raw 64-bit engine output. Bit-identical
/// across standard libraries, unlike std::uniform_real_distribution.
double uniform_pm1(std::mt19937_64& rng);
double uniform_01(std::mt19937_64& rng);

/// c + G a with a uniform on [-1,1]^gamma.
Vector sample_member(const Zonotope& z, std::mt19937_64& rng);

Matrix sample_member(const MatrixZonotope& m, std::mt19937_64& rng);

bool all_finite(const Zonotope& z);

}  // namespace reachzono

#endif  // REACHZONO_SETALG_HPP_
