#include "bsl/forward.hpp"

#include <algorithm>
#include <cmath>

#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

PlaneWave make_plane_wave(double k, const Vec& theta) {
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("wavenumber must be positive");
  if (std::abs(theta.norm() - 1.0) > 1e-12) throw InvalidArgument("direction must be a unit vector");
  return PlaneWave{k, theta};
}

cplx helmholtz_fundamental(int dim, double k, double r) {
  if (dim == 3) return std::polar(1.0 / (4.0 * pi * r), k * r);
  const double x = k * r;
  return {-0.25 * std::cyl_neumann(0.0, x), 0.25 * std::cyl_bessel_j(0.0, x)};
}

cplx far_field_constant(int dim) {
  if (dim == 3) return 1.0 / (4.0 * pi);
  return std::polar(1.0 / std::sqrt(8.0 * pi), pi / 4.0);
}

namespace {

constexpr double euler_gamma = 0.57721566490153286061;

// int_0^1 s (i/4) H0^(1)(beta s) ds from the small-argument series of J0 and Y0.
cplx hankel_disk_moment(double beta) {
  const double t = 0.5 * beta;
  const double lt = std::log(t) + euler_gamma;
  double j_part = 0.0, y_part = 0.0;
  double term = 1.0;  // t^{2j} / (j!)^2
  double harmonic = 0.0;
  for (int j = 0; j < 60; ++j) {
    if (j > 0) {
      term *= t * t / (static_cast<double>(j) * j);
      harmonic += 1.0 / j;
    }
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    const double d = 2.0 * j + 2.0;
    j_part += sign * term / d;
    y_part += sign * term * (lt / d - 1.0 / (d * d));
    if (j > 0) y_part += -sign * harmonic * term / d;
    if (term < 1e-20 && j > 2) break;
  }
  y_part *= 2.0 / pi;
  return cplx(0.0, 0.25) * cplx(j_part, y_part);
}

// int_0^1 s exp(i beta s) ds
cplx exp_moment(double beta) {
  if (beta < 1.0) {
    cplx sum = 0.0, p = 1.0;
    double fact = 1.0;
    for (int j = 0; j < 30; ++j) {
      if (j > 0) fact *= j;
      sum += p / (fact * (j + 2.0));
      p *= cplx(0.0, beta);
    }
    return sum;
  }
  const cplx e = std::polar(1.0, beta);
  return e * cplx(1.0 / (beta * beta), -1.0 / beta) - 1.0 / (beta * beta);
}

}  // namespace

cplx green_cell_average(int dim, double k, double h) {
  const double a = 0.5 * h;
  if (dim == 2) {
    // Four triangles (0 <= x <= a, |y| <= x) in coordinates x = a s, y = a s u.
    const auto rule = gauss_legendre(32);
    cplx sum = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i)
      sum += rule.weights[i] * hankel_disk_moment(k * a * std::sqrt(1.0 + rule.nodes[i] * rule.nodes[i]));
    return sum;
  }
  // Six pyramids with apex at the origin, x = a s, y = a s u, z = a s v.
  const auto rule = gauss_legendre(24);
  cplx sum = 0.0;
  for (int i = 0; i < rule.nodes.size(); ++i)
    for (int j = 0; j < rule.nodes.size(); ++j) {
      const double rho = std::sqrt(1.0 + rule.nodes[i] * rule.nodes[i] + rule.nodes[j] * rule.nodes[j]);
      sum += rule.weights[i] * rule.weights[j] / rho * exp_moment(k * a * rho);
    }
  return sum * 6.0 * a * a / (4.0 * pi * h * h * h);
}

double kernel_window(double r, double truncation) {
  const double r0 = 0.9 * truncation;
  if (r <= r0) return 1.0;
  if (r >= truncation) return 0.0;
  const double s = (r - r0) / (truncation - r0);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

namespace {

// Kernel on the offset lattice; radial symmetry lets each sorted |offset| be evaluated once.
Eigen::ArrayXcd offset_kernel(const GridSpec& g, double k) {
  const int half = g.points_per_axis / 2;
  const int m = half + 1;
  std::size_t table_size = 1;
  for (int a = 0; a < g.dim; ++a) table_size *= static_cast<std::size_t>(m);
  std::vector<cplx> table(table_size);
  std::vector<char> done(table_size, 0);
  const double h = g.spacing();
  const double trunc = 2.0 * g.domain_radius;
  const cplx center = green_cell_average(g.dim, k, h);
  Eigen::ArrayXcd out(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    std::array<int, 3> off{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) off[a] = std::abs(g.signed_index(idx[a]));
    std::sort(off.begin(), off.begin() + g.dim, std::greater<>());
    std::size_t key = 0;
    for (int a = 0; a < g.dim; ++a) key = key * m + static_cast<std::size_t>(off[a]);
    if (!done[key]) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += static_cast<double>(off[a]) * off[a];
      const double r = h * std::sqrt(r2);
      table[key] = r == 0.0 ? center : helmholtz_fundamental(g.dim, k, r) * kernel_window(r, trunc);
      done[key] = 1;
    }
    out[static_cast<Eigen::Index>(i)] = table[key];
  }
  return out;
}

Eigen::ArrayXd domain_mask(const GridSpec& g) {
  Eigen::ArrayXd mask(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    mask[static_cast<Eigen::Index>(i)] = g.coordinate(i).norm() <= g.domain_radius ? 1.0 : 0.0;
  return mask;
}

const Eigen::ArrayXd& cached_mask(const GridSpec& g) {
  static std::mutex mutex;
  static std::vector<std::pair<GridSpec, std::shared_ptr<Eigen::ArrayXd>>> masks;
  std::lock_guard lock(mutex);
  for (const auto& [grid, mask] : masks)
    if (grid == g) return *mask;
  masks.emplace_back(g, std::make_shared<Eigen::ArrayXd>(domain_mask(g)));
  return *masks.back().second;
}

}  // namespace

GreenKernel::GreenKernel(const GridSpec& grid, double k) : grid_(grid), k_(k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("wavenumber must be positive");
  spectrum_ = offset_kernel(grid, k);
  fft_forward_inplace(spectrum_, grid);
  spectrum_ *= grid.cell_volume() * std::sqrt(static_cast<double>(grid.size()));
}

Eigen::ArrayXcd GreenKernel::offset_samples() const { return offset_kernel(grid_, k_); }

ScalarField green_kernel(const GridSpec& grid, double k) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be positive");
  const Eigen::ArrayXcd wrapped = offset_kernel(grid, k);
  Eigen::ArrayXcd phys(wrapped.size());
  const int n = grid.points_per_axis;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto idx = grid.unravel(i);
    for (int a = 0; a < grid.dim; ++a) idx[a] = (idx[a] + n / 2) % n;
    phys[static_cast<Eigen::Index>(i)] = wrapped[static_cast<Eigen::Index>(grid.ravel(idx))];
  }
  return ScalarField::complex(grid, std::move(phys));
}

std::shared_ptr<const GreenKernel> KernelCache::get(double k) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(k); it != entries_.end()) return it->second;
  }
  auto kernel = std::make_shared<const GreenKernel>(grid_, k);
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(k); it != entries_.end()) return it->second;
  entries_.emplace(k, kernel);
  order_.push_back(k);
  while (order_.size() > capacity_) {
    entries_.erase(order_.front());
    order_.erase(order_.begin());
  }
  return kernel;
}

ScalarField apply_resolvent(const ScalarField& field, const GreenKernel& kernel, double support_tol) {
  const GridSpec& g = kernel.grid();
  if (!(field.grid() == g)) throw InvalidArgument("field and kernel live on different grids");
  const Eigen::ArrayXd& mask = cached_mask(g);
  const double peak = field.max_abs();
  if (peak == 0.0) return ScalarField::zeros(g, FieldKind::Complex);
  const double outside = ((1.0 - mask) * field.values().abs()).maxCoeff();
  if (outside > support_tol * peak)
    throw ContractError("resolvent input is not supported in the domain (relative outside mass " +
                        std::to_string(outside / peak) + ")");
  Eigen::ArrayXcd v = field.values() * mask;
  fft_forward_inplace(v, g);
  v *= kernel.spectrum();
  fft_inverse_inplace(v, g);
  return ScalarField::complex(g, std::move(v));
}

ScalarField plane_wave_field(const GridSpec& grid, const PlaneWave& wave) {
  return sample_field(grid, [&](const Vec& x) { return std::polar(1.0, wave.k * wave.theta.dot(x)); });
}

ScalarField born_term(const ScalarField& q, const PlaneWave& wave, int j, const GreenKernel& kernel) {
  if (j < 1) throw InvalidArgument("Born order must be at least 1");
  ScalarField t = plane_wave_field(q.grid(), wave);
  for (int i = 0; i < j; ++i) t = apply_resolvent(q * t, kernel);
  return t;
}

ScatteringSolution solve_lippmann_schwinger(const ScalarField& q, const PlaneWave& wave, const GreenKernel& kernel,
                                            const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (options.max_iter < 1) throw InvalidArgument("max_iter must be positive");
  const GridSpec& g = q.grid();
  ScatteringSolution sol;
  sol.incident = wave;
  const ScalarField u0 = plane_wave_field(g, wave);
  ScalarField term = u0;
  Eigen::ArrayXcd u = Eigen::ArrayXcd::Zero(static_cast<Eigen::Index>(g.size()));
  double prev_norm = u0.l2_norm();
  int above_one = 0;
  for (int it = 1; it <= options.max_iter; ++it) {
    term = apply_resolvent(q * term, kernel);
    u += term.values();
    if (it <= options.born_store) sol.born_terms.push_back(term);
    const double tn = term.l2_norm();
    const double un = std::sqrt(g.cell_volume() * u.abs2().sum());
    if (!std::isfinite(un)) throw DivergedError(wave.k, std::numeric_limits<double>::infinity());
    sol.iterations = it;
    sol.contraction_ratio = prev_norm > 0.0 ? tn / prev_norm : 0.0;
    prev_norm = tn;
    if (tn <= options.tol * un || un == 0.0) {
      sol.converged = true;
      break;
    }
    above_one = sol.contraction_ratio >= 1.0 ? above_one + 1 : 0;
    if (it >= 10 && above_one >= 5) throw DivergedError(wave.k, sol.contraction_ratio);
  }
  if (!sol.converged && sol.contraction_ratio >= 1.0) throw DivergedError(wave.k, sol.contraction_ratio);
  sol.scattered = ScalarField::complex(g, u);
  const double un = sol.scattered.l2_norm();
  if (un > 0.0) {
    const ScalarField check = apply_resolvent(q * (u0 + sol.scattered), kernel);
    sol.fixed_point_residual = (sol.scattered - check).l2_norm() / un;
  }
  Eigen::ArrayXcd partial = Eigen::ArrayXcd::Zero(u.size());
  for (const auto& b : sol.born_terms) partial += b.values();
  sol.residual_field = ScalarField::complex(g, u - partial);
  return sol;
}

cplx plane_wave_sum(const Eigen::ArrayXcd& values, const GridSpec& grid, const Vec& wavevector) {
  const int n = grid.points_per_axis;
  const Eigen::ArrayXd x = grid.axis_coordinates();
  std::array<Eigen::VectorXcd, 3> w;
  for (int a = 0; a < grid.dim; ++a) {
    w[a].resize(n);
    for (int i = 0; i < n; ++i) w[a][i] = std::polar(1.0, wavevector[a] * x[i]);
  }
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (grid.dim == 2) {
    Eigen::Map<const RowMat> f(values.data(), n, n);
    return w[0].transpose() * (f * w[1]);
  }
  Eigen::Map<const RowMat> f(values.data(), n * n, n);
  const Eigen::VectorXcd t = f * w[2];
  Eigen::Map<const RowMat> tt(t.data(), n, n);
  return w[0].transpose() * (tt * w[1]);
}

FarFieldSample far_field(const ScalarField& q, const PlaneWave& wave, const ScalarField& scattered,
                         const Vec& observation, ScatteringOrder order) {
  if (std::abs(observation.norm() - 1.0) > 1e-12) throw InvalidArgument("observation must be a unit vector");
  const GridSpec& g = q.grid();
  const cplx incident = plane_wave_sum(q.values(), g, wave.k * (wave.theta - observation));
  const cplx multiple = plane_wave_sum(q.values() * scattered.values(), g, -wave.k * observation);
  return {wave.k, wave.theta, observation, far_field_constant(g.dim) * g.cell_volume() * (incident + multiple), order};
}

FarFieldSample far_field_of_term(const ScalarField& q, const PlaneWave& wave, const ScalarField& previous_term,
                                 const Vec& observation, int j) {
  const GridSpec& g = q.grid();
  const cplx s = plane_wave_sum(q.values() * previous_term.values(), g, -wave.k * observation);
  return {wave.k, wave.theta, observation, far_field_constant(g.dim) * g.cell_volume() * s, ScatteringOrder::born(j)};
}

cplx born1_backscatter(const ScalarField& q, double k, const Vec& theta) {
  const GridSpec& g = q.grid();
  return far_field_constant(g.dim) * g.cell_volume() * plane_wave_sum(q.values(), g, 2.0 * k * theta);
}

double contraction_ratio(const ScalarField& q, const PlaneWave& wave, const GreenKernel& kernel, int iterations) {
  ScalarField t = plane_wave_field(q.grid(), wave);
  std::vector<double> norms{t.l2_norm()};
  for (int i = 0; i < iterations; ++i) {
    t = apply_resolvent(q * t, kernel);
    norms.push_back(t.l2_norm());
    if (norms.back() == 0.0) return 0.0;
    if (!std::isfinite(norms.back()) || norms.back() > 1e100) return std::numeric_limits<double>::infinity();
  }
  const std::size_t last = norms.size() - 1;
  const std::size_t span = std::min<std::size_t>(4, last);
  return std::pow(norms[last] / norms[last - span], 1.0 / static_cast<double>(span));
}

double estimate_k0(const ScalarField& q, const Vec& direction, const std::vector<double>& k_grid, KernelCache& cache) {
  if (!std::is_sorted(k_grid.begin(), k_grid.end())) throw InvalidArgument("k grid must be ascending");
  for (double k : k_grid)
    if (contraction_ratio(q, make_plane_wave(k, direction), *cache.get(k)) < 0.9) return k;
  return std::numeric_limits<double>::infinity();
}

}  // namespace bsl
