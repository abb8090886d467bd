#include "bsl/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bsl/errors.hpp"
#include "bsl/fft.hpp"

namespace bsl {

namespace {

// Sorted distinct values, merging entries closer than tol.
std::vector<double> distinct(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

std::size_t locate(const std::vector<double>& grid, double x, double tol) {
  auto it = std::lower_bound(grid.begin(), grid.end(), x - tol);
  if (it == grid.end() || std::abs(*it - x) > tol) throw InvalidArgument("polar samples do not form a tensor grid");
  return static_cast<std::size_t>(it - grid.begin());
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * pi);
  if (a < 0.0) a += 2.0 * pi;
  return a > 2.0 * pi - 1e-9 ? 0.0 : a;
}

// Bracket x in a sorted periodic list on [0, 2 pi): indices and weight of the upper one.
std::tuple<std::size_t, std::size_t, double> periodic_bracket(const std::vector<double>& a, double x) {
  const std::size_t n = a.size();
  auto it = std::upper_bound(a.begin(), a.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - a.begin()) % n;
  std::size_t lo = (hi + n - 1) % n;
  double span = a[hi] - a[lo];
  double off = x - a[lo];
  if (span <= 0.0) span += 2.0 * pi;
  if (off < 0.0) off += 2.0 * pi;
  return {lo, hi, off / span};
}

// Bracket x in a sorted list; clamps outside the range.
std::tuple<std::size_t, std::size_t, double> bracket(const std::vector<double>& a, double x) {
  if (x <= a.front()) return {0, 0, 0.0};
  if (x >= a.back()) return {a.size() - 1, a.size() - 1, 0.0};
  const auto hi = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
  const std::size_t lo = hi - 1;
  return {lo, hi, (x - a[lo]) / (a[hi] - a[lo])};
}

struct Key {
  long long tau;
  std::array<long long, 3> theta;
  auto operator<=>(const Key&) const = default;
};

Key key_of(double tau, const Vec& theta) {
  Key k{std::llround(tau * 1e9), {0, 0, 0}};
  for (int a = 0; a < theta.size(); ++a) k.theta[a] = std::llround(theta[a] * 1e9);
  return k;
}

}  // namespace

cplx fourier_at(const ScalarField& f, const Vec& xi) {
  const GridSpec& g = f.grid();
  return std::pow(2.0 * pi, -g.dim / 2.0) * g.cell_volume() * plane_wave_sum(f.values(), g, -xi);
}

double analytic_calibration(const RandomFieldModel& model) {
  const int n = model.grid.dim;
  const double m = model.order_m;
  const double cn2 = std::norm(far_field_constant(n));
  if (model.kind == ModelKind::BesselWhiteNoise)
    return cn2 * std::pow(2.0 * pi, n / 2.0) * std::pow(2.0, -m) * std::pow(model.corr_length, n - m);
  return cn2 * std::pow(2.0 * pi, 1.5 * n) * fbm_spectral_constant(n, model.hurst) * std::pow(2.0, -m);
}

Calibration calibrate_constant(const RandomFieldModel& model, const BandSpec& band, const std::vector<Probe>& references) {
  const GridSpec& g = model.grid;
  if (references.empty()) throw InvalidArgument("calibration needs reference probes");
  const double l1 = g.cell_volume() * model.strength.mu.values().abs().sum();
  const double floor = 1e-3 * std::pow(2.0 * pi, -g.dim / 2.0) * l1;
  const double e2 = model.epsilon * model.epsilon;
  std::vector<cplx> m(references.size()), h(references.size());
  bool usable = false;
  for (std::size_t i = 0; i < references.size(); ++i) {
    h[i] = fourier_at(model.strength.mu, 2.0 * references[i].tau * references[i].theta);
    usable = usable || std::abs(h[i]) > floor;
  }
  if (!usable || e2 == 0.0) throw IllConditionedError("reference mu_hat values are all negligible");
  m = expected_band_averages(model, band, references);
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    num += std::conj(h[i]) * m[i];
    den += std::norm(h[i]);
  }
  Calibration c;
  c.constant = num / (e2 * den);
  c.analytic = analytic_calibration(model);
  double mis = 0.0, fit = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    mis += std::norm(m[i] - c.constant * e2 * h[i]);
    fit += std::norm(c.constant * e2 * h[i]);
  }
  c.fit_residual = std::sqrt(mis / fit);
  return c;
}

PolarSampleSet recover_mu_hat(const MeasurementTable& table, cplx constant, double epsilon, double K) {
  if (constant == 0.0 || epsilon == 0.0) throw InvalidArgument("calibration constant and epsilon must be nonzero");
  if (table.entries.empty()) throw InvalidArgument("empty measurement table");
  if (K <= 0.0)
    for (const auto& e : table.entries) K = std::max(K, e.K);
  PolarSampleSet set;
  set.dim = static_cast<int>(table.entries.front().theta.size());
  const cplx scale = 1.0 / (constant * epsilon * epsilon);
  double center = 0.0;
  int center_count = 0;
  std::map<Key, std::size_t> index;
  for (const auto& e : table.entries) {
    if (std::abs(e.K - K) > 1e-9 * K) continue;
    const cplx v = e.value * scale;
    if (e.tau == 0.0) {
      center += v.real();
      ++center_count;
      continue;
    }
    index[key_of(e.tau, e.theta)] = set.samples.size();
    set.samples.push_back({e.tau, e.theta, v});
  }
  const std::size_t measured = set.samples.size();
  for (std::size_t i = 0; i < measured; ++i) {
    const PolarSample s = set.samples[i];
    const Vec flip = -s.theta;
    if (auto it = index.find(key_of(s.tau, flip)); it != index.end()) {
      if (it->second < i) continue;  // pair already merged
      const cplx avg = 0.5 * (s.value + std::conj(set.samples[it->second].value));
      set.samples[i].value = avg;
      set.samples[it->second].value = std::conj(avg);
    } else {
      index[key_of(s.tau, flip)] = set.samples.size();
      set.samples.push_back({s.tau, flip, std::conj(s.value)});
    }
  }
  if (center_count > 0) {
    Vec e1 = Vec::Zero(set.dim);
    e1[0] = 1.0;
    set.samples.push_back({0.0, e1, center / center_count});
  }
  return set;
}

std::vector<Probe> polar_probes(int dim, double tau_max, int n_tau, int n_angles) {
  if (dim != 2 && dim != 3) throw InvalidArgument("dimension must be 2 or 3");
  if (!(tau_max > 0.0) || n_tau < 1 || n_angles < 2) throw InvalidArgument("invalid polar probe lattice");
  std::vector<Probe> out;
  Vec e1 = Vec::Zero(dim);
  e1[0] = 1.0;
  out.push_back({0.0, e1});
  for (int i = 1; i <= n_tau; ++i) {
    const double tau = i * tau_max / n_tau;
    if (dim == 2) {
      for (int a = 0; a < n_angles; ++a) {
        Vec t(2);
        t << std::cos(pi * a / n_angles), std::sin(pi * a / n_angles);
        out.push_back({tau, t});
      }
    } else {
      const int n_pol = std::max(1, n_angles / 4);
      for (int p = 0; p < n_pol; ++p) {
        const double phi = (p + 0.5) * (pi / 2.0) / n_pol;
        for (int a = 0; a < n_angles; ++a) {
          const double alpha = 2.0 * pi * a / n_angles;
          Vec t(3);
          t << std::sin(phi) * std::cos(alpha), std::sin(phi) * std::sin(alpha), std::cos(phi);
          out.push_back({tau, t});
        }
      }
    }
  }
  return out;
}

int required_angles(double xi_max, double domain_radius) {
  return std::max(8, static_cast<int>(std::ceil(pi * xi_max * domain_radius)));
}

ReconstructionResult invert_mu(const PolarSampleSet& polar, const GridSpec& grid,
                               const std::optional<LocalStrength>& truth) {
  if (polar.dim != grid.dim) throw InvalidArgument("polar set and grid dimensions differ");
  const int n = grid.dim;
  cplx center = 0.0;
  bool has_center = false;
  std::vector<double> radii, pol, az;
  for (const auto& s : polar.samples) {
    if (s.tau == 0.0) {
      center = s.value;
      has_center = true;
      continue;
    }
    radii.push_back(2.0 * s.tau);
    az.push_back(wrap_angle(std::atan2(s.theta[1], s.theta[0])));
    if (n == 3) pol.push_back(std::acos(std::clamp(s.theta[2], -1.0, 1.0)));
  }
  if (!has_center) throw InvalidArgument("polar set lacks the tau = 0 sample");
  ReconstructionResult res;
  const double tol = 1e-9;
  radii = distinct(radii, tol);
  az = distinct(az, tol);
  if (n == 3) pol = distinct(pol, tol);
  const double xi_max = radii.empty() ? 0.0 : radii.back();
  res.xi_max = xi_max;
  const int need = required_angles(xi_max, grid.domain_radius);
  if (static_cast<int>(az.size()) < need || (n == 3 && static_cast<int>(pol.size()) < need / 2))
    throw InsufficientCoverageError("angular coverage " + std::to_string(az.size()) + " below the required " +
                                    std::to_string(need));

  // Tensor table over (radius, polar, azimuth); polar has a single slot in 2D.
  const std::size_t nr = radii.size(), np = n == 3 ? pol.size() : 1, na = az.size();
  std::vector<cplx> table(nr * np * na);
  std::vector<char> filled(table.size(), 0);
  for (const auto& s : polar.samples) {
    if (s.tau == 0.0) continue;
    const std::size_t ir = locate(radii, 2.0 * s.tau, tol);
    const std::size_t ia = locate(az, wrap_angle(std::atan2(s.theta[1], s.theta[0])), tol);
    const std::size_t ip = n == 3 ? locate(pol, std::acos(std::clamp(s.theta[2], -1.0, 1.0)), tol) : 0;
    table[(ir * np + ip) * na + ia] = s.value;
    filled[(ir * np + ip) * na + ia] = 1;
  }
  if (std::find(filled.begin(), filled.end(), 0) != filled.end())
    throw InvalidArgument("polar samples do not form a tensor grid");

  auto at_shell = [&](std::size_t ir, double phi, double alpha) -> cplx {
    const auto [a0, a1, ta] = periodic_bracket(az, alpha);
    auto ring = [&](std::size_t ip) {
      const cplx* row = &table[(ir * np + ip) * na];
      return (1.0 - ta) * row[a0] + ta * row[a1];
    };
    if (n == 2) return ring(0);
    // Poles carry the azimuthal mean of the nearest ring.
    auto pole = [&](std::size_t ip) {
      cplx s = 0.0;
      for (std::size_t a = 0; a < na; ++a) s += table[(ir * np + ip) * na + a];
      return s / static_cast<double>(na);
    };
    if (phi < pol.front()) {
      const double t = phi / pol.front();
      return (1.0 - t) * pole(0) + t * ring(0);
    }
    if (phi > pol.back()) {
      const double t = (phi - pol.back()) / (pi - pol.back());
      return (1.0 - t) * ring(np - 1) + t * pole(np - 1);
    }
    const auto [p0, p1, tp] = bracket(pol, phi);
    return (1.0 - tp) * ring(p0) + tp * ring(p1);
  };

  Eigen::ArrayXcd spec = Eigen::ArrayXcd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    // Nyquist planes have no conjugate partner on the lattice.
    const auto idx = grid.unravel(j);
    if (std::any_of(idx.begin(), idx.begin() + n, [&](int c) { return c == grid.points_per_axis / 2; })) continue;
    const Vec xi = grid.frequency(j);
    const double r = xi.norm();
    if (r > xi_max * (1.0 + 1e-12)) continue;
    if (r == 0.0 || nr == 0) {
      spec[static_cast<Eigen::Index>(j)] = r == 0.0 ? center : 0.0;
      continue;
    }
    const double alpha = wrap_angle(std::atan2(xi[1], xi[0]));
    const double phi = n == 3 ? std::acos(std::clamp(xi[2] / r, -1.0, 1.0)) : 0.0;
    cplx v;
    if (r <= radii.front()) {
      const double t = r / radii.front();
      v = (1.0 - t) * center + t * at_shell(0, phi, alpha);
    } else {
      const auto [r0, r1, tr] = bracket(radii, r);
      v = (1.0 - tr) * at_shell(r0, phi, alpha) + tr * at_shell(r1, phi, alpha);
    }
    spec[static_cast<Eigen::Index>(j)] = v;
  }
  const ScalarField mu_c = inverse_continuous_fourier_transform(ScalarField::complex(grid, std::move(spec)));
  res.max_imaginary = mu_c.values().imag().abs().maxCoeff();
  const Eigen::ArrayXd raw = mu_c.values().real();
  res.mu_unclipped = ScalarField::real(grid, raw);
  res.mu_recovered = ScalarField::real(grid, raw.max(0.0));

  const double hn = grid.cell_volume();
  Eigen::ArrayXd inside(raw.size());
  const double ball = (truth ? truth->support_radius : grid.domain_radius) + 4.0 * grid.spacing();
  for (std::size_t i = 0; i < grid.size(); ++i) inside[static_cast<Eigen::Index>(i)] = grid.coordinate(i).norm() <= ball;
  const Eigen::ArrayXd rec = res.mu_recovered.real_part();
  const double total = rec.sum();
  res.support_mass_fraction = total > 0.0 ? (rec * inside).sum() / total : 1.0;

  const Eigen::ArrayXd ref = truth ? truth->mu.real_part() : Eigen::ArrayXd::Zero(raw.size());
  const double ref_norm = std::sqrt(hn * ref.square().sum());
  auto rel = [&](const Eigen::ArrayXd& a) {
    const double e = std::sqrt(hn * (a - ref).square().sum());
    return ref_norm > 0.0 ? e / ref_norm : e;
  };
  res.relative_l2_error = rel(rec);
  res.relative_l2_error_unclipped = rel(raw);
  res.sup_error = (rec - ref).abs().maxCoeff();
  res.residual = ScalarField::real(grid, rec - ref);
  return res;
}

}  // namespace bsl
