#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <type_traits>

namespace bsl {

using cplx = std::complex<double>;
// Spatial point or frequency, at most three components.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline constexpr double pi = std::numbers::pi;

// Periodic box [-R_box, R_box)^n sampled at x_i = -R_box + i*h, i = 0..N-1.
// The origin sits at index N/2 on every axis. Linear storage is row-major
// (axis 0 slowest). Spectral index j maps to frequency pi*j'/R_box with
// j' = j for j < N/2 and j' = j - N otherwise.
struct GridSpec {
  int dim = 2;
  int points_per_axis = 0;
  double box_half_width = 0.0;
  double domain_radius = 0.0;

  double spacing() const { return 2.0 * box_half_width / points_per_axis; }
  double cell_volume() const;
  double frequency_step() const { return pi / box_half_width; }
  std::size_t size() const;

  std::array<int, 3> unravel(std::size_t index) const;
  std::size_t ravel(const std::array<int, 3>& idx) const;
  int signed_index(int j) const { return j < points_per_axis / 2 ? j : j - points_per_axis; }

  Vec coordinate(std::size_t index) const;
  Vec frequency(std::size_t index) const;
  Eigen::ArrayXd axis_coordinates() const;
  Eigen::ArrayXd axis_frequencies() const;
  std::size_t origin_index() const;
  // Nearest sample to x (clamped to the box).
  std::size_t nearest_index(const Vec& x) const;

  bool operator==(const GridSpec&) const = default;
};

// Validates and builds a grid; throws InvalidArgument.
GridSpec make_grid(int dim, int points_per_axis, double box_half_width, double domain_radius);

enum class FieldKind : std::uint8_t { Real = 0, Complex = 1 };

// Immutable grid function. Real fields carry exactly zero imaginary parts.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const GridSpec& grid, Eigen::ArrayXcd values, FieldKind kind);

  static ScalarField zeros(const GridSpec& grid, FieldKind kind = FieldKind::Real);
  static ScalarField real(const GridSpec& grid, const Eigen::ArrayXd& values);
  static ScalarField complex(const GridSpec& grid, Eigen::ArrayXcd values);

  const GridSpec& grid() const { return grid_; }
  const Eigen::ArrayXcd& values() const { return values_; }
  FieldKind kind() const { return kind_; }
  bool is_real() const { return kind_ == FieldKind::Real; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  cplx operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  Eigen::ArrayXd real_part() const { return values_.real(); }

  // sqrt(h^n sum |f|^2)
  double l2_norm() const;
  double max_abs() const;

 private:
  GridSpec grid_{};
  Eigen::ArrayXcd values_;
  FieldKind kind_ = FieldKind::Real;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
ScalarField operator*(cplx s, const ScalarField& a);

// Samples f at every grid point. Real if f returns a real number.
template <class F>
ScalarField sample_field(const GridSpec& grid, F&& f) {
  using R = std::invoke_result_t<F, const Vec&>;
  const auto n = static_cast<Eigen::Index>(grid.size());
  if constexpr (std::is_floating_point_v<R>) {
    Eigen::ArrayXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f(grid.coordinate(static_cast<std::size_t>(i)));
    return ScalarField::real(grid, v);
  } else {
    Eigen::ArrayXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f(grid.coordinate(static_cast<std::size_t>(i)));
    return ScalarField::complex(grid, std::move(v));
  }
}

// h^n * sum a * conj(b)
cplx inner(const ScalarField& a, const ScalarField& b);

}  // namespace bsl
