#include "bsl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsl/errors.hpp"

namespace bsl {

double GridSpec::cell_volume() const { return std::pow(spacing(), dim); }

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points_per_axis);
  return s;
}

std::array<int, 3> GridSpec::unravel(std::size_t index) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(points_per_axis);
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(index % n);
    index /= n;
  }
  return idx;
}

std::size_t GridSpec::ravel(const std::array<int, 3>& idx) const {
  std::size_t index = 0;
  for (int a = 0; a < dim; ++a) index = index * points_per_axis + static_cast<std::size_t>(idx[a]);
  return index;
}

Vec GridSpec::coordinate(std::size_t index) const {
  const auto idx = unravel(index);
  const double h = spacing();
  Vec x(dim);
  for (int a = 0; a < dim; ++a) x[a] = -box_half_width + idx[a] * h;
  return x;
}

Vec GridSpec::frequency(std::size_t index) const {
  const auto idx = unravel(index);
  const double dxi = frequency_step();
  Vec xi(dim);
  for (int a = 0; a < dim; ++a) xi[a] = dxi * signed_index(idx[a]);
  return xi;
}

Eigen::ArrayXd GridSpec::axis_coordinates() const {
  return -box_half_width + Eigen::ArrayXd::LinSpaced(points_per_axis, 0, points_per_axis - 1) * spacing();
}

Eigen::ArrayXd GridSpec::axis_frequencies() const {
  Eigen::ArrayXd f(points_per_axis);
  for (int j = 0; j < points_per_axis; ++j) f[j] = frequency_step() * signed_index(j);
  return f;
}

std::size_t GridSpec::origin_index() const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim; ++a) idx[a] = points_per_axis / 2;
  return ravel(idx);
}

std::size_t GridSpec::nearest_index(const Vec& x) const {
  std::array<int, 3> idx{0, 0, 0};
  const double h = spacing();
  for (int a = 0; a < dim; ++a) {
    const long i = std::lround((x[a] + box_half_width) / h);
    idx[a] = static_cast<int>(std::clamp<long>(i, 0, points_per_axis - 1));
  }
  return ravel(idx);
}

GridSpec make_grid(int dim, int points_per_axis, double box_half_width, double domain_radius) {
  if (dim != 2 && dim != 3) throw InvalidArgument("grid dimension must be 2 or 3, got " + std::to_string(dim));
  const int n = points_per_axis;
  if (n < 16 || (n & (n - 1)) != 0)
    throw InvalidArgument("points_per_axis must be a power of two >= 16, got " + std::to_string(n));
  if (!(box_half_width > 0.0) || !std::isfinite(box_half_width))
    throw InvalidArgument("box_half_width must be positive");
  if (!(domain_radius > 0.0) || !(domain_radius < box_half_width / 2))
    throw InvalidArgument("domain_radius must lie in (0, box_half_width/2)");
  return GridSpec{dim, n, box_half_width, domain_radius};
}

ScalarField::ScalarField(const GridSpec& grid, Eigen::ArrayXcd values, FieldKind kind)
    : grid_(grid), values_(std::move(values)), kind_(kind) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size())
    throw InvalidArgument("field length does not match grid size");
  if (kind_ == FieldKind::Real && (values_.imag() != 0.0).any())
    throw InvalidArgument("real-valued field has nonzero imaginary parts");
}

ScalarField ScalarField::zeros(const GridSpec& grid, FieldKind kind) {
  return ScalarField(grid, Eigen::ArrayXcd::Zero(static_cast<Eigen::Index>(grid.size())), kind);
}

ScalarField ScalarField::real(const GridSpec& grid, const Eigen::ArrayXd& values) {
  return ScalarField(grid, values.cast<cplx>(), FieldKind::Real);
}

ScalarField ScalarField::complex(const GridSpec& grid, Eigen::ArrayXcd values) {
  return ScalarField(grid, std::move(values), FieldKind::Complex);
}

double ScalarField::l2_norm() const { return std::sqrt(grid_.cell_volume() * values_.abs2().sum()); }

double ScalarField::max_abs() const { return values_.size() ? values_.abs().maxCoeff() : 0.0; }

namespace {

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("fields live on different grids");
}

FieldKind join(const ScalarField& a, const ScalarField& b) {
  return a.is_real() && b.is_real() ? FieldKind::Real : FieldKind::Complex;
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  return ScalarField(a.grid(), a.values() + b.values(), join(a, b));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  return ScalarField(a.grid(), a.values() - b.values(), join(a, b));
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  if (a.is_real() && b.is_real())
    return ScalarField::real(a.grid(), a.values().real() * b.values().real());
  return ScalarField(a.grid(), a.values() * b.values(), FieldKind::Complex);
}

ScalarField operator*(double s, const ScalarField& a) {
  if (a.is_real()) return ScalarField::real(a.grid(), s * a.values().real());
  return ScalarField(a.grid(), s * a.values(), FieldKind::Complex);
}

ScalarField operator*(cplx s, const ScalarField& a) {
  return ScalarField(a.grid(), s * a.values(), FieldKind::Complex);
}

cplx inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  return a.grid().cell_volume() * (a.values() * b.values().conjugate()).sum();
}

}  // namespace bsl
