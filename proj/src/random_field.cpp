#include "bsl/random_field.hpp"

#include <cmath>
#include <string>

#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/quadrature.hpp"

namespace bsl {

ScalarField bump_sum(const GridSpec& grid, const std::vector<Bump>& bumps) {
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& b : bumps) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double s2 = (grid.coordinate(static_cast<std::size_t>(i)) - b.center).squaredNorm() / (b.radius * b.radius);
      if (s2 < 1.0) v[i] += b.amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
    }
  }
  return ScalarField::real(grid, v);
}

LocalStrength make_local_strength(const GridSpec& grid, std::vector<Bump> bumps) {
  double support = 0.0;
  for (const auto& b : bumps) {
    if (b.center.size() != grid.dim) throw InvalidArgument("bump center has wrong dimension");
    if (!(b.radius > 0.0)) throw InvalidArgument("bump radius must be positive");
    if (b.amplitude < 0.0) throw InvalidArgument("local strength must be nonnegative");
    support = std::max(support, b.center.norm() + b.radius);
  }
  if (support > grid.domain_radius * (1 + 1e-12))
    throw InvalidArgument("local strength support exceeds the domain radius");
  LocalStrength s{bump_sum(grid, bumps), support, std::move(bumps)};
  return s;
}

namespace {

void validate_common(const RandomFieldModel& m) {
  const int n = m.grid.dim;
  if (!(m.order_m > n - 1) || !(m.order_m <= n + 1 + 1e-12)) {
    if (!(m.kind == ModelKind::FractionalBrownian && m.hurst_warning))
      throw InvalidArgument("order m must satisfy n-1 < m <= n+1, got " + std::to_string(m.order_m));
  }
  if (!(m.epsilon >= 0.0) || !std::isfinite(m.epsilon)) throw InvalidArgument("epsilon must be nonnegative");
  if (!(m.corr_length > 0.0)) throw InvalidArgument("correlation length must be positive");
  if (!(m.strength.mu.grid() == m.grid) || !(m.mean_q0.grid() == m.grid))
    throw InvalidArgument("model fields must live on the model grid");
  if (!m.strength.mu.is_real() || (m.strength.mu.real_part() < 0.0).any())
    throw InvalidArgument("local strength must be real and nonnegative");
  if (!m.mean_q0.is_real()) throw InvalidArgument("mean potential must be real");
  for (std::size_t i = 0; i < m.grid.size(); ++i)
    if (m.mean_q0[i] != 0.0 && m.grid.coordinate(i).norm() > m.grid.domain_radius)
      throw InvalidArgument("mean potential must vanish outside the domain");
}

}  // namespace

void validate_model(const RandomFieldModel& model) {
  validate_common(model);
  if (model.kind == ModelKind::FractionalBrownian) {
    if (!(model.hurst > 0.0 && model.hurst < 1.0)) throw InvalidArgument("Hurst index must lie in (0, 1)");
    if (model.anchor.size() != model.grid.dim) throw InvalidArgument("anchor has wrong dimension");
    if ((model.anchor.array().abs() >= model.grid.box_half_width).any())
      throw InvalidArgument("anchor must lie inside the box");
  }
}

RandomFieldModel make_bessel_model(const GridSpec& grid, double order_m, LocalStrength strength, ScalarField q0,
                                   double epsilon, double corr_length) {
  RandomFieldModel m;
  m.grid = grid;
  m.order_m = order_m;
  m.strength = std::move(strength);
  m.mean_q0 = std::move(q0);
  m.kind = ModelKind::BesselWhiteNoise;
  m.epsilon = epsilon;
  m.corr_length = corr_length;
  validate_model(m);
  return m;
}

RandomFieldModel make_fbm_model(const GridSpec& grid, double hurst, LocalStrength strength, ScalarField q0,
                                const Vec& anchor, double epsilon) {
  RandomFieldModel m;
  m.grid = grid;
  m.order_m = grid.dim + 2.0 * hurst;
  m.strength = std::move(strength);
  m.mean_q0 = std::move(q0);
  m.kind = ModelKind::FractionalBrownian;
  m.hurst = hurst;
  m.anchor = anchor;
  m.epsilon = epsilon;
  m.hurst_warning = hurst > 0.5;
  validate_model(m);
  return m;
}

ScalarField sample_white_noise(const GridSpec& grid, RngStream& rng) {
  Eigen::ArrayXd v(static_cast<Eigen::Index>(grid.size()));
  rng.fill_normal(v);
  return ScalarField::real(grid, v / std::sqrt(grid.cell_volume()));
}

namespace {

// Real part of F^{-1}[multiplier * F f].
Eigen::ArrayXd filter_real(const Eigen::ArrayXd& f, const Eigen::ArrayXd& multiplier, const GridSpec& grid) {
  Eigen::ArrayXcd v = f.cast<cplx>();
  fft_forward_inplace(v, grid);
  v *= multiplier;
  fft_inverse_inplace(v, grid);
  return v.real();
}

Eigen::ArrayXd bessel_multiplier(const GridSpec& grid, double order_m, double ell) {
  const Eigen::ArrayXd xi2 = frequency_norm2(grid);
  return std::pow(ell, grid.dim / 2.0) * (1.0 + ell * ell * xi2).pow(-order_m / 4.0);
}

}  // namespace

ScalarField apply_bessel_filter(const ScalarField& field, double order) {
  const Eigen::ArrayXd mult = (1.0 + frequency_norm2(field.grid())).pow(-order / 2.0);
  if (field.is_real()) return ScalarField::real(field.grid(), filter_real(field.real_part(), mult, field.grid()));
  Eigen::ArrayXcd v = field.values();
  fft_forward_inplace(v, field.grid());
  v *= mult;
  fft_inverse_inplace(v, field.grid());
  return ScalarField::complex(field.grid(), std::move(v));
}

double fbm_spectral_constant(int dim, double hurst) {
  const double integral = std::pow(pi, dim / 2.0) * std::tgamma(1.0 - hurst) /
                          (std::pow(2.0, 2.0 * hurst) * hurst * std::tgamma(dim / 2.0 + hurst));
  return 1.0 / (2.0 * integral);
}

double fbm_nugget_variance(const GridSpec& grid, double hurst) {
  // Spectral mass outside the lattice cube |xi|_inf < pi/h, integrated radially in closed
  // form; the angular factor is an integral over the cube faces.
  const auto rule = gauss_legendre(64);
  double angular = 0.0;
  if (grid.dim == 2) {
    for (int i = 0; i < rule.nodes.size(); ++i)
      angular += rule.weights[i] * std::pow(1.0 + rule.nodes[i] * rule.nodes[i], -1.0 - hurst);
    angular *= 4.0;
  } else {
    for (int i = 0; i < rule.nodes.size(); ++i)
      for (int j = 0; j < rule.nodes.size(); ++j)
        angular += rule.weights[i] * rule.weights[j] *
                   std::pow(1.0 + rule.nodes[i] * rule.nodes[i] + rule.nodes[j] * rule.nodes[j], -1.5 - hurst);
    angular *= 6.0;
  }
  const double a = pi / grid.spacing();
  return fbm_spectral_constant(grid.dim, hurst) / (2.0 * hurst) * std::pow(a, -2.0 * hurst) * angular;
}

namespace {

Eigen::ArrayXd fbm_amplitude(const GridSpec& grid, double hurst) {
  const Eigen::ArrayXd xi2 = frequency_norm2(grid);
  const double scale = static_cast<double>(grid.size()) * std::pow(grid.frequency_step(), grid.dim) *
                       fbm_spectral_constant(grid.dim, hurst);
  Eigen::ArrayXd a = (scale * xi2.pow(-(grid.dim + 2.0 * hurst) / 2.0)).sqrt();
  a[0] = 0.0;
  return a;
}

}  // namespace

ScalarField sample_fbm(const GridSpec& grid, double hurst, const Vec& anchor, RngStream& rng) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("Hurst index must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::ArrayXd z(n), nugget(n);
  rng.fill_normal(z);
  rng.fill_normal(nugget);
  Eigen::ArrayXd x = filter_real(z, fbm_amplitude(grid, hurst), grid) +
                     std::sqrt(fbm_nugget_variance(grid, hurst)) * nugget;
  x -= x[static_cast<Eigen::Index>(grid.nearest_index(anchor))];
  return ScalarField::real(grid, x);
}

StationarySpectrum stationary_spectrum(const RandomFieldModel& model) {
  StationarySpectrum s;
  const GridSpec& g = model.grid;
  if (model.kind == ModelKind::BesselWhiteNoise) {
    s.amplitude = bessel_multiplier(g, model.order_m, model.corr_length) / std::sqrt(g.cell_volume());
  } else {
    s.amplitude = fbm_amplitude(g, model.hurst);
    s.nugget_std = std::sqrt(fbm_nugget_variance(g, model.hurst));
    s.anchored = true;
    s.anchor_index = g.nearest_index(model.anchor);
  }
  return s;
}

PotentialRealization sample_potential(std::shared_ptr<const RandomFieldModel> model, RngStream rng) {
  if (!model) throw InvalidArgument("null model");
  const RandomFieldModel& m = *model;
  const GridSpec& g = m.grid;
  PotentialRealization r;
  r.seed = rng.master_seed();
  r.purpose = rng.purpose();
  r.index = rng.index();
  Eigen::ArrayXd y;
  if (m.kind == ModelKind::BesselWhiteNoise) {
    const ScalarField w = sample_white_noise(g, rng);
    y = filter_real(w.real_part(), bessel_multiplier(g, m.order_m, m.corr_length), g);
  } else {
    y = sample_fbm(g, m.hurst, m.anchor, rng).real_part();
  }
  const Eigen::ArrayXd q = m.epsilon * m.strength.mu.real_part().sqrt() * y + m.mean_q0.real_part();
  r.q = ScalarField::real(g, q);
  r.model = std::move(model);
  return r;
}

Eigen::ArrayXd stationary_covariance(const RandomFieldModel& model) {
  const auto s = stationary_spectrum(model);
  const GridSpec& g = model.grid;
  Eigen::ArrayXcd v = s.amplitude.square().cast<cplx>();
  fft_inverse_inplace(v, g);
  Eigen::ArrayXd c = v.real() / std::sqrt(static_cast<double>(g.size()));
  c[0] += s.nugget_std * s.nugget_std;
  return c;
}

namespace {

std::size_t offset_index(const GridSpec& g, std::size_t i, std::size_t j) {
  const auto a = g.unravel(i), b = g.unravel(j);
  std::array<int, 3> d{0, 0, 0};
  for (int k = 0; k < g.dim; ++k) d[k] = ((a[k] - b[k]) % g.points_per_axis + g.points_per_axis) % g.points_per_axis;
  return g.ravel(d);
}

}  // namespace

double exact_point_covariance(const RandomFieldModel& model, std::size_t i, std::size_t j) {
  const Eigen::ArrayXd c = stationary_covariance(model);
  const GridSpec& g = model.grid;
  auto cov = [&](std::size_t a, std::size_t b) { return c[static_cast<Eigen::Index>(offset_index(g, a, b))]; };
  double k = cov(i, j);
  if (model.kind == ModelKind::FractionalBrownian) {
    const std::size_t z = g.nearest_index(model.anchor);
    k += -cov(i, z) - cov(j, z) + c[0];
  }
  const double mui = model.strength.mu[i].real(), muj = model.strength.mu[j].real();
  return model.epsilon * model.epsilon * std::sqrt(mui * muj) * k;
}

double covariance_singular_coefficient(int dim, double order_m) {
  const double n = dim;
  if (std::abs(order_m - n) < 1e-12) return -2.0 / (std::tgamma(n / 2.0) * std::pow(4.0 * pi, n / 2.0));
  return std::tgamma((n - order_m) / 2.0) / (std::pow(2.0, order_m) * std::pow(pi, n / 2.0) * std::tgamma(order_m / 2.0));
}

Eigen::MatrixXd sample_point_values(std::shared_ptr<const RandomFieldModel> model,
                                    const std::vector<std::size_t>& indices, int ensemble, const RngStream& base) {
  Eigen::MatrixXd out(ensemble, static_cast<Eigen::Index>(indices.size()));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < ensemble; ++r) {
    const auto real = sample_potential(model, base.substream(static_cast<std::uint64_t>(r)));
    for (std::size_t c = 0; c < indices.size(); ++c)
      out(r, static_cast<Eigen::Index>(c)) = (real.q[indices[c]] - model->mean_q0[indices[c]]).real();
  }
  return out;
}

namespace {

struct SnappedSeparations {
  std::vector<std::size_t> indices;  // reference first
  std::vector<double> separations;
};

SnappedSeparations snap(const GridSpec& g, const Vec& x_ref, const std::vector<double>& separations, int axis) {
  if (axis < 0 || axis >= g.dim) throw InvalidArgument("axis out of range");
  SnappedSeparations s;
  const std::size_t ref = g.nearest_index(x_ref);
  s.indices.push_back(ref);
  const double h = g.spacing();
  long last = -1;
  for (double r : separations) {
    const long steps = std::lround(r / h);
    if (steps < 0) throw InvalidArgument("separations must be nonnegative");
    if (steps <= last) throw InvalidArgument("separations must be strictly increasing on the grid");
    auto idx = g.unravel(ref);
    idx[axis] += static_cast<int>(steps);
    if (idx[axis] >= g.points_per_axis) throw InvalidArgument("separation leaves the grid");
    s.indices.push_back(g.ravel(idx));
    s.separations.push_back(steps * h);
    last = steps;
  }
  return s;
}

template <class Stat>
CovarianceEstimate pair_estimate(std::shared_ptr<const RandomFieldModel> model, const Vec& x_ref,
                                 const std::vector<double>& separations, int ensemble_size, const RngStream& rng,
                                 int axis, Stat stat) {
  if (ensemble_size < 100) throw InvalidArgument("ensemble size must be at least 100");
  const auto s = snap(model->grid, x_ref, separations, axis);
  const Eigen::MatrixXd v = sample_point_values(model, s.indices, ensemble_size, rng);
  CovarianceEstimate est;
  est.reference_point = model->grid.coordinate(s.indices[0]);
  est.ensemble_size = ensemble_size;
  for (std::size_t c = 0; c < s.separations.size(); ++c) {
    const Eigen::ArrayXd prod = stat(v.col(0).array(), v.col(static_cast<Eigen::Index>(c + 1)).array());
    const auto m = moments(prod);
    est.pairs.push_back({s.separations[c], m.mean, std::max(m.standard_error, 1e-300)});
  }
  return est;
}

}  // namespace

CovarianceEstimate estimate_covariance(std::shared_ptr<const RandomFieldModel> model, const Vec& x_ref,
                                       const std::vector<double>& separations, int ensemble_size,
                                       const RngStream& rng, int axis) {
  return pair_estimate(model, x_ref, separations, ensemble_size, rng, axis,
                       [](const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) -> Eigen::ArrayXd { return a * b; });
}

CovarianceEstimate estimate_structure_function(std::shared_ptr<const RandomFieldModel> model, const Vec& x_ref,
                                               const std::vector<double>& separations, int ensemble_size,
                                               const RngStream& rng, int axis) {
  return pair_estimate(model, x_ref, separations, ensemble_size, rng, axis,
                       [](const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) -> Eigen::ArrayXd { return (a - b).square(); });
}

namespace {

void select_range(const CovarianceEstimate& e, double r_min, double r_max, std::vector<double>& r, std::vector<double>& v) {
  for (const auto& p : e.pairs)
    if (p.separation >= r_min * (1 - 1e-12) && p.separation <= r_max * (1 + 1e-12)) {
      r.push_back(p.separation);
      v.push_back(p.value);
    }
  if (r.size() < 2) throw InvalidArgument("fit range contains fewer than two separations");
}

}  // namespace

LineFit fit_log_coefficient(const CovarianceEstimate& estimate, double r_min, double r_max) {
  std::vector<double> r, v;
  select_range(estimate, r_min, r_max, r, v);
  const Eigen::ArrayXd rr = Eigen::Map<Eigen::ArrayXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  return fit_line(rr.log(), Eigen::Map<Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

LineFit fit_power_law(const CovarianceEstimate& estimate, double r_min, double r_max) {
  std::vector<double> r, v;
  select_range(estimate, r_min, r_max, r, v);
  return fit_loglog(Eigen::Map<Eigen::ArrayXd>(r.data(), static_cast<Eigen::Index>(r.size())),
                    Eigen::Map<Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

SpectralDecay spectral_decay_exponent(const ScalarField& field) {
  const GridSpec& g = field.grid();
  if (field.max_abs() == 0.0) throw DegenerateFieldError("spectral decay of an all-zero field");
  Eigen::ArrayXcd v = field.values();
  fft_forward_inplace(v, g);
  const Eigen::ArrayXd power = v.abs2();
  const Eigen::ArrayXd xi = frequency_norm2(g).sqrt();
  SpectralDecay d;
  d.xi_min = 8.0 * pi / g.box_half_width;
  d.xi_max = pi / (4.0 * g.spacing());
  if (!(d.xi_max > d.xi_min)) throw InvalidArgument("grid too coarse for the spectral fit range");
  constexpr int nb = 12;
  Eigen::ArrayXd sum_p = Eigen::ArrayXd::Zero(nb), sum_xi = Eigen::ArrayXd::Zero(nb), count = Eigen::ArrayXd::Zero(nb);
  const double span = std::log(d.xi_max / d.xi_min);
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (xi[i] < d.xi_min || xi[i] > d.xi_max) continue;
    const int b = std::min(nb - 1, static_cast<int>(nb * std::log(xi[i] / d.xi_min) / span));
    sum_p[b] += power[i];
    sum_xi[b] += std::log(xi[i]);
    count[b] += 1.0;
  }
  std::vector<double> lx, lp;
  for (int b = 0; b < nb; ++b)
    if (count[b] > 0 && sum_p[b] > 0) {
      lx.push_back(sum_xi[b] / count[b]);
      lp.push_back(std::log(sum_p[b] / count[b]));
    }
  if (lx.size() < 2) throw DegenerateFieldError("no spectral power in the fit range");
  const auto f = fit_line(Eigen::Map<Eigen::ArrayXd>(lx.data(), static_cast<Eigen::Index>(lx.size())),
                          Eigen::Map<Eigen::ArrayXd>(lp.data(), static_cast<Eigen::Index>(lp.size())));
  d.slope = f.slope;
  d.slope_stderr = f.slope_stderr;
  d.bins = static_cast<int>(lx.size());
  return d;
}

SpectralDecay spectral_decay_diagnostic(const PotentialRealization& realization) {
  return spectral_decay_exponent(realization.stochastic_part());
}

CorrelationLength correlation_length(const GridSpec& grid, const Eigen::ArrayXd& covariance) {
  if (covariance.size() != static_cast<Eigen::Index>(grid.size()) || covariance[0] == 0.0)
    throw InvalidArgument("covariance must be sampled on the grid with nonzero variance");
  CorrelationLength c;
  c.raw_ratio = grid.cell_volume() * covariance.sum() / covariance[0];
  c.length = std::pow(std::abs(c.raw_ratio), 1.0 / grid.dim);
  c.sign_change = covariance.minCoeff() < 0.0 && covariance.maxCoeff() > 0.0;
  return c;
}

}  // namespace bsl
