#include "bsl/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace bsl {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
fftw_plan cached_plan(int dim, int n, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(dim, n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  int dims[3] = {n, n, n};
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(n);
  auto* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_dft(dim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plans.emplace(key, p);
  return p;
}

void transform(Eigen::ArrayXcd& data, const GridSpec& grid, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cached_plan(grid.dim, grid.points_per_axis, sign), ptr, ptr);
  data *= 1.0 / std::sqrt(static_cast<double>(grid.size()));
}

}  // namespace

void fft_forward_inplace(Eigen::ArrayXcd& data, const GridSpec& grid) { transform(data, grid, FFTW_FORWARD); }

void fft_inverse_inplace(Eigen::ArrayXcd& data, const GridSpec& grid) { transform(data, grid, FFTW_BACKWARD); }

ScalarField fft_forward(const ScalarField& field) {
  Eigen::ArrayXcd v = field.values();
  fft_forward_inplace(v, field.grid());
  return ScalarField::complex(field.grid(), std::move(v));
}

ScalarField fft_inverse(const ScalarField& field) {
  Eigen::ArrayXcd v = field.values();
  fft_inverse_inplace(v, field.grid());
  return ScalarField::complex(field.grid(), std::move(v));
}

Eigen::ArrayXd lattice_sign(const GridSpec& grid) {
  Eigen::ArrayXd s(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto idx = grid.unravel(static_cast<std::size_t>(i));
    s[i] = ((idx[0] + idx[1] + idx[2]) % 2 == 0) ? 1.0 : -1.0;
  }
  return s;
}

Eigen::ArrayXd frequency_norm2(const GridSpec& grid) {
  const Eigen::ArrayXd f = grid.axis_frequencies();
  Eigen::ArrayXd out(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto idx = grid.unravel(static_cast<std::size_t>(i));
    double s = 0.0;
    for (int a = 0; a < grid.dim; ++a) s += f[idx[a]] * f[idx[a]];
    out[i] = s;
  }
  return out;
}

namespace {

double ft_scale(const GridSpec& grid) {
  return grid.cell_volume() * std::sqrt(static_cast<double>(grid.size())) / std::pow(2.0 * pi, grid.dim / 2.0);
}

}  // namespace

ScalarField continuous_fourier_transform(const ScalarField& field) {
  Eigen::ArrayXcd v = field.values();
  fft_forward_inplace(v, field.grid());
  v *= ft_scale(field.grid()) * lattice_sign(field.grid());
  return ScalarField::complex(field.grid(), std::move(v));
}

ScalarField inverse_continuous_fourier_transform(const ScalarField& spectrum) {
  const GridSpec& g = spectrum.grid();
  Eigen::ArrayXcd v = spectrum.values() * lattice_sign(g) / ft_scale(g);
  fft_inverse_inplace(v, g);
  return ScalarField::complex(g, std::move(v));
}

}  // namespace bsl
