#include "reachzono/setalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace reachzono {

std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

Zonotope::Zonotope(Vector center)
    : center_(std::move(center)), generators_(center_.size(), 0) {}

Zonotope::Zonotope(Vector center, Matrix generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.rows() != center_.size()) {
    if (generators_.size() == 0) {
      generators_.resize(center_.size(), 0);
    } else {
      throw DimensionError("Zonotope: generator matrix " +
                           shape_str(generators_.rows(), generators_.cols()) +
                           " does not match center of dimension " +
                           std::to_string(center_.size()));
    }
  }
}

Zonotope Zonotope::box(const Vector& center, const Vector& radius) {
  if (radius.size() != center.size()) {
    throw DimensionError("Zonotope::box: radius dimension " + std::to_string(radius.size()) +
                         " vs center dimension " + std::to_string(center.size()));
  }
  if ((radius.array() < 0.0).any()) {
    throw std::invalid_argument("Zonotope::box: negative radius");
  }
  return Zonotope(center, radius.asDiagonal().toDenseMatrix());
}

bool Zonotope::operator==(const Zonotope& other) const {
  return center_.size() == other.center_.size() &&
         generators_.cols() == other.generators_.cols() && center_ == other.center_ &&
         generators_ == other.generators_;
}

MatrixZonotope::MatrixZonotope(Matrix center) : center_(std::move(center)) {}

MatrixZonotope::MatrixZonotope(Matrix center, std::vector<Matrix> generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  for (const auto& g : generators_) {
    if (g.rows() != center_.rows() || g.cols() != center_.cols()) {
      throw DimensionError("MatrixZonotope: generator " + shape_str(g.rows(), g.cols()) +
                           " does not match center " +
                           shape_str(center_.rows(), center_.cols()));
    }
  }
}

Matrix MatrixZonotope::member(const Vector& coeffs) const {
  if (coeffs.size() != num_generators()) {
    throw DimensionError("MatrixZonotope::member: " + std::to_string(coeffs.size()) +
                         " coefficients for " + std::to_string(num_generators()) +
                         " generators");
  }
  Matrix x = center_;
  for (Index i = 0; i < coeffs.size(); ++i) x += coeffs(i) * generators_[i];
  return x;
}

IntervalBox::IntervalBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw DimensionError("IntervalBox: lower has dimension " + std::to_string(lower.size()) +
                         ", upper has dimension " + std::to_string(upper.size()));
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("IntervalBox: lower exceeds upper");
  }
}

double IntervalBox::mean_width() const {
  if (dim() == 0) return 0.0;
  return width().mean();
}

bool IntervalBox::contains(const Vector& point, double tol) const {
  if (point.size() != dim()) {
    throw DimensionError("IntervalBox::contains: point of dimension " +
                         std::to_string(point.size()) + " vs box of dimension " +
                         std::to_string(dim()));
  }
  return ((point.array() >= lower.array() - tol) && (point.array() <= upper.array() + tol)).all();
}

bool IntervalBox::contains(const IntervalBox& other, double tol) const {
  return contains(other.lower, tol) && contains(other.upper, tol);
}

Zonotope linear_map(const Matrix& map, const Zonotope& z) {
  if (map.cols() != z.dim()) {
    throw DimensionError("linear_map: matrix " + shape_str(map.rows(), map.cols()) +
                         " applied to zonotope of dimension " + std::to_string(z.dim()));
  }
  return Zonotope(map * z.center(), map * z.generators());
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("minkowski_sum: dimensions " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
  Matrix g(a.dim(), a.num_generators() + b.num_generators());
  g << a.generators(), b.generators();
  return Zonotope(a.center() + b.center(), std::move(g));
}

Zonotope cartesian_product(const Zonotope& a, const Zonotope& b) {
  const Zonotope parts[] = {a, b};
  return cartesian_product(parts);
}

Zonotope cartesian_product(std::span<const Zonotope> parts) {
  Index dim = 0;
  Index gens = 0;
  for (const auto& p : parts) {
    dim += p.dim();
    gens += p.num_generators();
  }
  Vector c(dim);
  Matrix g = Matrix::Zero(dim, gens);
  Index row = 0;
  Index col = 0;
  for (const auto& p : parts) {
    c.segment(row, p.dim()) = p.center();
    g.block(row, col, p.dim(), p.num_generators()) = p.generators();
    row += p.dim();
    col += p.num_generators();
  }
  return Zonotope(std::move(c), std::move(g));
}

Zonotope matzono_mul(const MatrixZonotope& m, const Zonotope& z) {
  if (m.cols() != z.dim()) {
    throw DimensionError("matzono_mul: matrix zonotope " + shape_str(m.rows(), m.cols()) +
                         " applied to zonotope of dimension " + std::to_string(z.dim()));
  }
  const Index gz = z.num_generators();
  const Index gm = m.num_generators();
  const Index total = gz + gm + gm * gz;
  Matrix g(m.rows(), total);

  // Layout: {C g_j}, {G_i c}, then {G_i g_j} grouped by i.
  g.leftCols(gz).noalias() = m.center() * z.generators();
  for (Index i = 0; i < gm; ++i) {
    g.col(gz + i).noalias() = m.generators()[i] * z.center();
  }
  for (Index i = 0; i < gm; ++i) {
    g.middleCols(gz + gm + i * gz, gz).noalias() = m.generators()[i] * z.generators();
  }
  return Zonotope(m.center() * z.center(), std::move(g));
}

Zonotope reduce(const Zonotope& z, int order) {
  if (order < 1) throw std::invalid_argument("reduce: order must be >= 1");
  const Index n = z.dim();
  const Index limit = static_cast<Index>(order) * n;
  if (z.num_generators() <= limit) return z;

  const Index keep = limit - n;
  const Vector norms = z.generators().cwiseAbs().colwise().sum().transpose();
  std::vector<Index> idx(static_cast<size_t>(z.num_generators()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return norms(a) > norms(b); });

  Matrix g(n, limit);
  for (Index j = 0; j < keep; ++j) g.col(j) = z.generators().col(idx[static_cast<size_t>(j)]);
  Vector radius = Vector::Zero(n);
  for (Index j = keep; j < z.num_generators(); ++j) {
    radius += z.generators().col(idx[static_cast<size_t>(j)]).cwiseAbs();
  }
  g.rightCols(n) = radius.asDiagonal().toDenseMatrix();
  return Zonotope(z.center(), std::move(g));
}

IntervalBox interval_hull(const Zonotope& z) {
  const Vector r = z.generators().cwiseAbs().rowwise().sum();
  return IntervalBox(z.center() - r, z.center() + r);
}

Zonotope project(const Zonotope& z, Index first, Index count) {
  if (first < 0 || count < 0 || first + count > z.dim()) {
    throw std::out_of_range("project: rows [" + std::to_string(first) + ", " +
                            std::to_string(first + count) + ") outside dimension " +
                            std::to_string(z.dim()));
  }
  return Zonotope(z.center().segment(first, count), z.generators().middleRows(first, count));
}

Zonotope project(const Zonotope& z, std::span<const Index> dims) {
  Vector c(static_cast<Index>(dims.size()));
  Matrix g(static_cast<Index>(dims.size()), z.num_generators());
  for (size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 0 || dims[i] >= z.dim()) {
      throw std::out_of_range("project: index " + std::to_string(dims[i]) +
                              " outside dimension " + std::to_string(z.dim()));
    }
    c(static_cast<Index>(i)) = z.center()(dims[i]);
    g.row(static_cast<Index>(i)) = z.generators().row(dims[i]);
  }
  return Zonotope(std::move(c), std::move(g));
}

double support(const Zonotope& z, const Vector& direction) {
  if (direction.size() != z.dim()) {
    throw DimensionError("support: direction of dimension " + std::to_string(direction.size()) +
                         " vs zonotope of dimension " + std::to_string(z.dim()));
  }
  if (direction.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("support: zero direction");
  }
  return direction.dot(z.center()) + (direction.transpose() * z.generators()).cwiseAbs().sum();
}

Zonotope drop_zero_generators(const Zonotope& z, double tol) {
  std::vector<Index> kept;
  for (Index j = 0; j < z.num_generators(); ++j) {
    if (z.generators().col(j).cwiseAbs().maxCoeff() > tol) kept.push_back(j);
  }
  Matrix g(z.dim(), static_cast<Index>(kept.size()));
  for (size_t j = 0; j < kept.size(); ++j) g.col(static_cast<Index>(j)) = z.generators().col(kept[j]);
  return Zonotope(z.center(), std::move(g));
}

Zonotope pad_generators(const Zonotope& z, Index count) {
  if (z.num_generators() > count) {
    throw DimensionError("pad_generators: zonotope has " + std::to_string(z.num_generators()) +
                         " generators, more than " + std::to_string(count));
  }
  Matrix g = Matrix::Zero(z.dim(), count);
  g.leftCols(z.num_generators()) = z.generators();
  return Zonotope(z.center(), std::move(g));
}

Zonotope scale_generators(const Zonotope& z, double factor) {
  return Zonotope(z.center(), factor * z.generators());
}

double uniform_01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * uniform_01(rng) - 1.0; }

Vector sample_member(const Zonotope& z, std::mt19937_64& rng) {
  Vector a(z.num_generators());
  for (Index j = 0; j < a.size(); ++j) a(j) = uniform_pm1(rng);
  return z.center() + z.generators() * a;
}

Matrix sample_member(const MatrixZonotope& m, std::mt19937_64& rng) {
  Vector a(m.num_generators());
  for (Index j = 0; j < a.size(); ++j) a(j) = uniform_pm1(rng);
  return m.member(a);
}

bool all_finite(const Zonotope& z) {
  return z.center().allFinite() && z.generators().allFinite();
}

}  // namespace reachzono
