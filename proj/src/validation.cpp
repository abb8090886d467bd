#include "bsl/validation.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>

#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/pipeline.hpp"
#include "bsl/quadrature.hpp"
#include "bsl/stats.hpp"
#include "json.hpp"

namespace bsl {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

Vec vec_of(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Direction at `angle` in the x-y plane of a dim-dimensional space.
Vec planar(int dim, double angle) {
  Vec v = Vec::Zero(dim);
  v[0] = std::cos(angle);
  v[1] = std::sin(angle);
  return v;
}

std::shared_ptr<const RandomFieldModel> bessel(const GridSpec& g, double m, const Vec& center, double radius,
                                               double eps = 1.0) {
  return std::make_shared<const RandomFieldModel>(
      make_bessel_model(g, m, make_local_strength(g, {{center, radius, 1.0}}), ScalarField::zeros(g), eps));
}

// The desk strength template: one bump off the origin.
std::shared_ptr<const RandomFieldModel> desk_model(const GridSpec& g, double m, double eps) {
  Vec c = Vec::Zero(g.dim);
  c[0] = 0.1;
  return bessel(g, m, c, 0.6, eps);
}

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  Eigen::ArrayXd ax = Eigen::Map<const Eigen::ArrayXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::ArrayXd ay = Eigen::Map<const Eigen::ArrayXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return fit_loglog(ax, ay).slope;
}

std::string join(const std::vector<double>& v, const char* f = "%.4g") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

// ---------------------------------------------------------------------------

void gaussian_machinery(const ValidationOptions& o, CriterionReport& r) {
  const auto pairs = gaussian_pair_check({0.0, 0.25, 0.5, 0.75, 1.0}, 1000000, RngStream(o.seed, Purpose::GaussianPairs, 0));
  for (const auto& row : pairs.rows) {
    const bool absolute = std::abs(row.rho) < 0.1;
    const double tol = absolute ? 0.01 : 0.02;
    r.checks.push_back({fmt("E(X^2-1)(Y^2-1) = 2 rho^2 at rho = %.2f", row.rho), row.deviation <= tol,
                        fmt("estimate %.5f expected %.5f %s deviation %.2e (tol %.2g)", row.estimate, row.expected,
                            absolute ? "absolute" : "relative", row.deviation, tol)});
  }
  const double ratio = gaussian_fourth_moment_ratio(1000000, RngStream(o.seed, Purpose::GaussianPairs, 1));
  r.checks.push_back({"E X^4 / (E X^2)^2 = 3", std::abs(ratio - 3.0) <= 0.05 * 3.0, fmt("ratio %.4f (tol 5%%)", ratio)});
}

// E|X(x) - X(x + l e_0)|^2 over reference points with |x| <= 1, for lags l = 2^j h.
void field_statistics(const ValidationOptions& o, CriterionReport& r) {
  {
    const auto g = make_grid(2, 256, 2.0, 0.9);
    const double hurst = 0.25;
    const int realizations = 200;
    const std::vector<int> lags{2, 4, 8, 16, 32};
    std::vector<double> sums(lags.size(), 0.0);
    std::vector<double> counts(lags.size(), 0.0);
    for (int t = 0; t < realizations; ++t) {
      RngStream rng(o.seed, Purpose::Fbm, 2000 + static_cast<std::uint64_t>(t));
      const auto x = sample_fbm(g, hurst, Vec::Zero(2), rng);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.coordinate(i).norm() > 1.0) continue;
        const auto idx = g.unravel(i);
        for (std::size_t l = 0; l < lags.size(); ++l) {
          const std::size_t j = g.ravel({idx[0] + lags[l], idx[1], 0});
          sums[l] += std::norm(x[i] - x[j]);
          counts[l] += 1.0;
        }
      }
    }
    std::vector<double> rs, ds;
    for (std::size_t l = 0; l < lags.size(); ++l) {
      rs.push_back(lags[l] * g.spacing());
      ds.push_back(sums[l] / counts[l]);
    }
    const double s = slope_of(rs, ds);
    r.checks.push_back({"fBm structure-function slope = 2H (H = 0.25)", std::abs(s - 2 * hurst) <= 0.1,
                        fmt("slope %.3f over r in [%.3g, %.3g], %d realizations (target 0.5 +- 0.1)", s, rs.front(),
                            rs.back(), realizations)});
  }
  {
    const auto g = make_grid(2, 256, 4.0, 1.9);
    const auto model = bessel(g, 3.0, Vec::Zero(2), 1.9);
    const int realizations = 20;
    double mean = 0.0;
    for (int t = 0; t < realizations; ++t)
      mean += spectral_decay_diagnostic(sample_potential(model, RngStream(o.seed, Purpose::WhiteNoise, 2100 + static_cast<std::uint64_t>(t)))).slope / realizations;
    r.checks.push_back({"Bessel spectral slope = -m (m = 3, n = 2)", std::abs(mean + 3.0) <= 0.3,
                        fmt("mean slope %.3f over %d realizations (target -3 +- 0.3)", mean, realizations)});
  }
  {
    // The box must be wide against the unit correlation length, or the periodic
    // frequency lattice is too coarse to approximate the continuum integral.
    const auto g = make_grid(2, 256, 8.0, 0.9);
    const double m = 3.0;
    const auto model = bessel(g, m, Vec::Zero(2), 0.8);
    // (2 pi)^{-2} int (1 + |xi|^2)^{-m/2} dxi by Gauss-Legendre after rho = t / (1 - t).
    const auto rule = gauss_legendre(200, 0.0, 1.0);
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      const double t = rule.nodes[i], rho = t / (1 - t);
      oracle += rule.weights[i] * rho * std::pow(1 + rho * rho, -m / 2) / ((1 - t) * (1 - t));
    }
    oracle /= 2 * pi;
    const std::size_t origin = g.origin_index();
    const int ensemble = 10000;
    const auto v = sample_point_values(model, {origin}, ensemble, RngStream(o.seed, Purpose::WhiteNoise, 2200));
    const double variance = v.col(0).array().square().mean();
    const double exact = exact_point_covariance(*model, origin, origin);
    r.checks.push_back({"point variance vs quadrature oracle", std::abs(variance - oracle) <= 0.05 * oracle,
                        fmt("Monte Carlo %.5f (N = %d), oracle %.5f, exact discrete %.5f (tol 5%%)", variance, ensemble,
                            oracle, exact)});
  }
}

void covariance_asymptotics(const ValidationOptions& o, CriterionReport& r) {
  const auto g = make_grid(2, 256, 2.0, 0.9);
  const double h = g.spacing();
  const std::vector<double> seps{4 * h, 6 * h, 8 * h, 12 * h, 16 * h};
  const int ensemble = 4000;
  {
    const auto model = bessel(g, 2.0, Vec::Zero(2), 0.9);
    const auto est = estimate_covariance(model, Vec::Zero(2), seps, ensemble, RngStream(o.seed, Purpose::WhiteNoise, 3000));
    const double fitted = fit_log_coefficient(est, seps.front(), seps.back()).slope;
    const double expected = covariance_singular_coefficient(2, 2.0) * model->strength.mu[g.origin_index()].real();
    r.checks.push_back({"log coefficient of K_q near the diagonal (n = m = 2)",
                        std::abs(fitted - expected) <= 0.15 * std::abs(expected),
                        fmt("fitted %.4f, c_{n,m} mu(x) = %.4f, r in [%.3g, %.3g], N = %d (tol 15%%)", fitted, expected,
                            seps.front(), seps.back(), ensemble)});
  }
  {
    const auto model = bessel(g, 2.5, Vec::Zero(2), 0.9);
    const auto est = estimate_structure_function(model, Vec::Zero(2), seps, ensemble, RngStream(o.seed, Purpose::WhiteNoise, 3100));
    const double power = fit_power_law(est, seps.front(), seps.back()).slope;
    r.checks.push_back({"singular power m - n (n = 2, m = 2.5)", std::abs(power - 0.5) <= 0.15,
                        fmt("fitted power %.3f from the structure function, N = %d (target 0.5 +- 0.15)", power, ensemble)});
  }
}

// Truncated kernel at offset d, the reference for direct convolution.
cplx kernel_at(const GridSpec& g, double k, const Vec& d) {
  const double r = d.norm();
  if (r < 1e-14) return green_cell_average(g.dim, k, g.spacing());
  return helmholtz_fundamental(g.dim, k, r) * kernel_window(r, 2 * g.domain_radius);
}

void forward_oracles(const ValidationOptions& o, CriterionReport& r) {
  {
    const auto g = make_grid(2, 32, 1.0, 0.45);
    RngStream rng(o.seed, Purpose::MonteCarlo, 4000);
    double worst = 0.0;
    for (int c = 0; c < 10; ++c) {
      const double k = 1.0 + 20.0 * rng.uniform();
      Eigen::ArrayXd v(static_cast<Eigen::Index>(g.size()));
      rng.fill_normal(v);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.coordinate(i).norm() > g.domain_radius) v[static_cast<Eigen::Index>(i)] = 0.0;
      const auto f = ScalarField::real(g, v);
      const auto out = apply_resolvent(f, GreenKernel(g, k));
      double num = 0, den = 0;
      for (std::size_t x = 0; x < g.size(); ++x) {
        if (g.coordinate(x).norm() > g.domain_radius) continue;
        cplx direct = 0;
        for (std::size_t y = 0; y < g.size(); ++y)
          if (f[y] != 0.0) direct += kernel_at(g, k, g.coordinate(x) - g.coordinate(y)) * f[y];
        direct *= g.cell_volume();
        num += std::norm(direct - out[x]);
        den += std::norm(direct);
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
    r.checks.push_back({"FFT convolution vs direct summation (10 cases, N = 32)", worst < 1e-6,
                        fmt("worst relative error %.2e (tol 1e-6)", worst)});
  }
  {
    const auto g = make_grid(2, 64, 2.0, 0.9);
    const auto q = sample_potential(desk_model(g, 3.0, 1.0), RngStream(o.seed, Purpose::WhiteNoise, 4100)).q;
    const auto ft = continuous_fourier_transform(q);
    RngStream rng(o.seed, Purpose::MonteCarlo, 4101);
    double worst = 0.0;
    int cases = 0;
    while (cases < 20) {
      const int j0 = static_cast<int>(rng.next_u32() % 40) - 20, j1 = static_cast<int>(rng.next_u32() % 40) - 20;
      if (j0 == 0 && j1 == 0) continue;
      const std::size_t j = g.ravel({(j0 + 64) % 64, (j1 + 64) % 64, 0});
      const Vec xi = g.frequency(j);
      const double k = xi.norm() / 2;
      const Vec theta = -xi / xi.norm();
      const cplx spectral = far_field_constant(2) * 2.0 * pi * ft[j];
      const cplx direct = born1_backscatter(q, k, theta);
      worst = std::max(worst, std::abs(spectral - direct) / std::abs(direct));
      ++cases;
    }
    r.checks.push_back({"Born-1 far field: FFT path vs quadrature path (20 cases)", worst < 1e-8,
                        fmt("worst relative error %.2e (tol 1e-8)", worst)});
  }
  {
    const double k = 5.0;
    std::vector<double> errors;
    for (int n : {128, 256}) {
      const auto g = make_grid(2, n, 2.0, 0.9);
      const auto f = bump_sum(g, {{vec_of({0.05, -0.1}), 0.6, 1.0}});
      const auto u = apply_resolvent(f, GreenKernel(g, k)).values();
      const double h = g.spacing();
      double err = 0;
      for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) {
          const std::size_t c = g.ravel({i, j, 0});
          if (g.coordinate(c).norm() > 0.45) continue;
          const cplx lap = (u[g.ravel({i + 1, j, 0})] + u[g.ravel({i - 1, j, 0})] + u[g.ravel({i, j + 1, 0})] +
                            u[g.ravel({i, j - 1, 0})] - 4.0 * u[c]) / (h * h);
          err = std::max(err, std::abs(lap + k * k * u[c] + f[c]));
        }
      errors.push_back(err);
    }
    const double order = std::log2(errors[0] / errors[1]);
    r.checks.push_back({"discrete Helmholtz residual order under refinement", order >= 1.7,
                        fmt("residuals %.3e -> %.3e (N = 128 -> 256), order %.2f (min 1.7)", errors[0], errors[1], order)});
  }
}

void born_structure(const ValidationOptions& o, CriterionReport& r) {
  const auto g = make_grid(2, 128, 2.0, 0.9);
  const double k = 20.0;
  const auto q = sample_potential(desk_model(g, 3.0, 1.0), RngStream(o.seed, Purpose::WhiteNoise, 5000)).q;
  const GreenKernel kernel(g, k);
  const auto wave = make_plane_wave(k, planar(2, 0.3));
  std::vector<double> ratios;
  for (double eps : {1.6, 0.8, 0.4}) {
    const auto sol = solve_lippmann_schwinger(eps * q, wave, kernel, {1e-13, 200, 2});
    const auto rest = sol.scattered - sol.born_terms[0] - sol.born_terms[1];
    ratios.push_back(rest.l2_norm() / sol.born_terms[0].l2_norm());
  }
  const double f1 = ratios[0] / ratios[1], f2 = ratios[1] / ratios[2];
  r.checks.push_back({"|u_sc - u1 - u2| / |u1| drops by 3..5 per halving of eps", f1 >= 3 && f1 <= 5 && f2 >= 3 && f2 <= 5,
                      fmt("ratios %s at eps 1.6 0.8 0.4, factors %.3f %.3f", join(ratios, "%.3e").c_str(), f1, f2)});

  const std::vector<BandSpec> bands{make_band(10.0, 1.8)};
  std::vector<double> eps{1.0, 0.5, 0.25}, vals;
  for (double e : eps) vals.push_back(second_order_negligibility_probe(e * q, bands, planar(2, 0.3), 3.0)[0].value);
  const double s = slope_of(eps, vals);
  r.checks.push_back({"second-order band integral scales as eps^4", std::abs(s - 4.0) <= 0.2,
                      fmt("slope %.4f (target 4 +- 0.2)", s)});
}

void statistical_stability(const ValidationOptions& o, CriterionReport& r) {
  const auto g = make_grid(2, 256, 2.0, 0.9);
  const auto model = desk_model(g, 2.5, 1.0);
  const double c = analytic_calibration(*model);
  std::vector<Probe> probes;
  for (int i = 0; i < 8; ++i) probes.push_back({0.25 * (i % 4), planar(2, pi * i / 8)});
  std::vector<cplx> target;
  for (const auto& p : probes) target.push_back(c * fourier_at(model->strength.mu, 2 * p.tau * p.theta));
  const double K0 = 10.0;
  const std::vector<double> Ks{K0, 2 * K0, 4 * K0};
  const int realizations = 20;
  std::vector<double> sq(Ks.size(), 0.0);
  int improved = 0;
  for (int t = 0; t < realizations; ++t) {
    Born1Provider first(sample_potential(model, RngStream(o.seed, Purpose::WhiteNoise, 6000 + static_cast<std::uint64_t>(t))).q);
    std::vector<std::vector<double>> err(Ks.size());
    for (std::size_t b = 0; b < Ks.size(); ++b) {
      const auto band = make_band(Ks[b], 2 * g.domain_radius);
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const double e = std::abs(band_average(first, band, probes[p].tau, probes[p].theta, model->order_m) - target[p]) /
                         std::abs(target[p]);
        err[b].push_back(e);
        sq[b] += e * e;
      }
    }
    if (t == 0)
      for (std::size_t p = 0; p < probes.size(); ++p) improved += err[2][p] < err[0][p];
  }
  r.checks.push_back({"single realization: error at 4 K0 below error at K0 for >= 7 of 8 probes", improved >= 7,
                      fmt("%d of 8 probes improved (K0 = %g)", improved, K0)});
  std::vector<double> rms;
  for (double s : sq) rms.push_back(std::sqrt(s / (realizations * probes.size())));
  const double slope = slope_of(Ks, rms);
  r.checks.push_back({"RMS relative error over 20 realizations ~ K^-1/2", std::abs(slope + 0.5) <= 0.2,
                      fmt("RMS %s at K = %s, slope %.3f (target -0.5 +- 0.2)", join(rms).c_str(), join(Ks).c_str(), slope)});
}

std::filesystem::path pipeline_dir(const ValidationOptions& o, const char* name) { return o.work_dir / name; }

ExperimentConfig seeded_desk(const ValidationOptions& o, const std::filesystem::path& dir) {
  auto c = o.desk;
  c.seed = o.seed;
  c.output_dir = dir;
  return c;
}

void end_to_end(const ValidationOptions& o, CriterionReport& r) {
  const auto dir = pipeline_dir(o, "pipeline_a");
  const auto config = seeded_desk(o, dir);
  RunDirectory run(config, dir);
  const auto s = run_pipeline(config, run);
  r.checks.push_back({"regime check satisfied for the desk configuration", s.regime.satisfied,
                      fmt("frequency ratio %.3g, size ratio %.3g (min %.3g)", s.regime.frequency_ratio, s.regime.size_ratio,
                          config.regime.margin)});
  r.checks.push_back({"single-realization pipeline: relative L2 error < 15%", s.result.relative_l2_error < 0.15,
                      fmt("error %.4f (unclipped %.4f), predicted RMS budget %.3g, %zu probes, K = %g",
                          s.result.relative_l2_error, s.result.relative_l2_error_unclipped, s.budget.total_rms,
                          build_probes(config).size(), config.bands.back().K)});
  const auto noiseless = noiseless_reconstruction(config, s.calibration.constant);
  r.checks.push_back({"noiseless expected-correlation path: relative L2 error < 10%", noiseless.relative_l2_error < 0.10,
                      fmt("error %.4f (unclipped %.4f)", noiseless.relative_l2_error, noiseless.relative_l2_error_unclipped)});
}

void nonlinear_3d(const ValidationOptions& o, CriterionReport& r) {
  const auto g = make_grid(3, 64, 2.0, 0.9);
  const double m = 3.0, eps = 5.0;
  const auto model = bessel(g, m, Vec::Zero(3), 0.6, eps);
  const auto q = sample_potential(model, RngStream(o.seed, Purpose::WhiteNoise, 8000)).q;
  FullSolveProvider full(q, {1e-10, 300});
  Born1Provider first(q);
  std::vector<Probe> probes;
  for (int i = 0; i < 4; ++i) probes.push_back({0.5 * i, planar(3, pi * i / 4)});
  std::vector<BandSpec> bands;
  for (double K : {2.0, 4.0, 8.0}) bands.push_back(make_band(K, 2 * g.domain_radius));
  std::vector<double> dev;
  for (const auto& band : bands) {
    double s = 0.0;
    for (const auto& p : probes)
      s += std::norm(band_average(full, band, p.tau, p.theta, m) - band_average(first, band, p.tau, p.theta, m));
    dev.push_back(std::sqrt(s / probes.size()));
  }
  r.checks.push_back({"RMS deviation of full-solve M_K from first-order M_K non-increasing under K doubling",
                      dev[1] <= dev[0] && dev[2] <= dev[1],
                      fmt("deviation %s at K = 2 4 8 (eps = %g)", join(dev, "%.3e").c_str(), eps)});
  std::vector<double> neg;
  for (const auto& row : second_order_negligibility_probe(q, bands, planar(3, 0.0), m)) neg.push_back(row.value);
  r.checks.push_back({"second-order band integral non-increasing across 3 bands", neg[1] <= neg[0] && neg[2] <= neg[1],
                      fmt("values %s at K = 2 4 8", join(neg, "%.3e").c_str())});
}

void budget_scan(const ValidationOptions& o, CriterionReport& r) {
  const auto g = make_grid(2, 128, 2.0, 0.9);
  const auto model = desk_model(g, 2.5, 1.0);
  ScalingConfig sc;
  sc.n = 2;
  sc.m = 2.5;
  sc.L = 2 * g.domain_radius;
  sc.K = 10.0;
  sc.eps = 4.0;
  // Exponents implied by predict_error for the RMS error: half the exponent of each mean-square term.
  auto half_exponent = [&](auto term, double ScalingConfig::*field) {
    auto a = sc, b = sc;
    b.*field = 2 * (a.*field);
    return 0.5 * std::log2(term(predict_error(b)) / term(predict_error(a)));
  };
  const double eps_pred = half_exponent([](const ErrorBudget& e) { return e.nonlinear_term; }, &ScalingConfig::eps);
  const double K_pred = half_exponent([](const ErrorBudget& e) { return e.random_term; }, &ScalingConfig::K);

  ScanSettings s;
  for (int i = 0; i < 4; ++i) s.probes.push_back({0.25 * i, planar(2, pi * i / 4)});
  s.calibration = analytic_calibration(*model);
  s.solver = {1e-10, 400};
  {
    s.bands = {make_band(10.0, sc.L)};
    s.epsilons = {4.0, 8.0, 16.0};
    s.realizations = 4;
    s.rng = RngStream(o.seed, Purpose::WhiteNoise, 9000);
    const auto t = empirical_error_scan(model, s);
    std::vector<double> nl;
    for (const auto& row : t.rows) nl.push_back(row.nonlinear_rms);
    r.checks.push_back({"error vs eps in the nonlinear regime: slope 2 +- 0.4", std::abs(t.eps_slope - 2.0) <= 0.4,
                        fmt("nonlinear RMS %s at eps 4 8 16 (K = 10), slope %.3f; predict_error RMS exponent %.2f",
                            join(nl, "%.3e").c_str(), t.eps_slope, eps_pred)});
  }
  {
    s.bands = {make_band(5.0, sc.L), make_band(10.0, sc.L), make_band(20.0, sc.L)};
    s.epsilons = {1e-3};
    s.realizations = 20;
    s.rng = RngStream(o.seed, Purpose::WhiteNoise, 9100);
    const auto t = empirical_error_scan(model, s);
    std::vector<double> err;
    for (const auto& row : t.rows) err.push_back(row.rms_error);
    r.checks.push_back({"error vs K in the random-dominated regime: slope -0.5 +- 0.2", std::abs(t.K_slope + 0.5) <= 0.2,
                        fmt("RMS %s at K = 5 10 20 (eps = 1e-3), slope %.3f; predict_error RMS exponent %.2f",
                            join(err, "%.3e").c_str(), t.K_slope, K_pred)});
  }
}

void determinism(const ValidationOptions& o, CriterionReport& r) {
  const auto dir_a = pipeline_dir(o, "pipeline_a");
  const auto dir_b = pipeline_dir(o, "pipeline_b");
  const auto config_a = seeded_desk(o, dir_a);
  const auto config_b = seeded_desk(o, dir_b);
  // Reuse the end-to-end run when it was made with this exact config.
  bool have_a = false;
  if (std::filesystem::exists(dir_a / "manifest.json")) {
    const auto m = read_manifest(dir_a / "manifest.json");
    have_a = m.config_sha256 == sha256_hex(to_json(config_a)) && m.outputs.size() > 1;
  }
  if (!have_a) {
    RunDirectory run(config_a, dir_a);
    run_pipeline(config_a, run);
  }
  std::filesystem::remove_all(dir_b);
  RunDirectory run_b(config_b, dir_b);
  run_pipeline(config_b, run_b);
  const auto a = read_manifest(dir_a / "manifest.json");
  const auto& b = run_b.manifest();
  int compared = 0, mismatched = 0;
  for (const auto& out : b.outputs) {
    if (out.file == "config.json") continue;  // differs by output_dir only
    ++compared;
    bool same = false;
    for (const auto& other : a.outputs)
      if (other.file == out.file) same = other.sha256 == out.sha256 && sha256_file(dir_b / out.file) == out.sha256;
    mismatched += !same;
  }
  r.checks.push_back({"repeated pipeline run: bitwise-identical outputs", compared > 0 && mismatched == 0,
                      fmt("%d outputs compared by SHA-256, %d mismatched", compared, mismatched)});
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(const ValidationOptions&, CriterionReport&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "Gaussian machinery", gaussian_machinery},
      {2, "Field statistics", field_statistics},
      {3, "Covariance asymptotics", covariance_asymptotics},
      {4, "Forward solver oracles", forward_oracles},
      {5, "Born structure", born_structure},
      {6, "Statistical stability", statistical_stability},
      {7, "End-to-end reconstruction", end_to_end},
      {8, "3D nonlinear desk case", nonlinear_3d},
      {9, "Error budget scaling", budget_scan},
      {10, "Determinism", determinism},
  };
  return all;
}

}  // namespace

bool CriterionReport::passed() const {
  if (checks.empty()) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const auto& c : criteria()) ids.push_back(c.id);
  return ids;
}

std::string criterion_title(int id) {
  for (const auto& c : criteria())
    if (c.id == id) return c.title;
  throw InvalidArgument("unknown criterion " + std::to_string(id));
}

CriterionReport run_criterion(int id, const ValidationOptions& options) {
  CriterionReport report;
  report.id = id;
  report.title = criterion_title(id);
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& c : criteria())
    if (c.id == id) {
      try {
        c.run(options, report);
      } catch (const std::exception& e) {
        report.checks.push_back({"completed without error", false, e.what()});
      }
    }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string format_report(const CriterionReport& r) {
  std::string s = fmt("%s %2d  %s (%.1f s)\n", r.passed() ? "PASS" : "FAIL", r.id, r.title.c_str(), r.seconds);
  for (const auto& c : r.checks) s += fmt("        [%s] %s: ", c.passed ? "ok" : "x", c.name.c_str()) + c.detail + "\n";
  return s;
}

void write_validation_report(const std::filesystem::path& path, const std::vector<CriterionReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed()}, {"seconds", r.seconds}, {"checks", checks}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
}

}  // namespace bsl
