#include <cmath>
#include <memory>

#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/reconstruction.hpp"
#include "doctest.h"

using namespace bsl;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec unit2(double angle) { return vec2(std::cos(angle), std::sin(angle)); }

LocalStrength two_bumps(const GridSpec& g) {
  return make_local_strength(g, {{vec2(0.15, -0.1), 0.5, 1.0}, {vec2(-0.3, 0.25), 0.35, 0.6}});
}

// Exact mu_hat on a polar probe set, completed under theta -> -theta.
PolarSampleSet exact_polar(const ScalarField& mu, const std::vector<Probe>& probes) {
  MeasurementTable t;
  for (const auto& p : probes) t.entries.push_back({p.tau, p.theta, fourier_at(mu, 2.0 * p.tau * p.theta), 1.0, OrderPolicy::FirstOrder, 1});
  return recover_mu_hat(t, 1.0, 1.0);
}

}  // namespace

TEST_CASE("fourier_at agrees with the lattice transform") {
  const auto g = make_grid(2, 32, 2.0, 0.9);
  const auto mu = two_bumps(g).mu;
  const auto ft = continuous_fourier_transform(mu);
  for (std::size_t j : {std::size_t{0}, std::size_t{5}, std::size_t{77}, std::size_t{600}})
    CHECK(std::abs(fourier_at(mu, g.frequency(j)) - ft[j]) < 1e-12);
  CHECK(fourier_at(mu, Vec::Zero(2)).real() == doctest::Approx(g.cell_volume() * mu.values().real().sum() / (2 * pi)));
}

TEST_CASE("calibration") {
  const auto g = make_grid(2, 256, 2.0, 0.9);
  const auto strength = make_local_strength(g, {{vec2(0.0, 0.0), 0.6, 1.0}});
  const auto model = make_bessel_model(g, 3.0, strength, ScalarField::zeros(g), 0.5);
  const auto band = make_band(40.0, 1.8);
  const std::vector<Probe> set_a{{0.0, unit2(0.0)}, {0.5, unit2(0.3)}, {1.0, unit2(1.2)}};
  const std::vector<Probe> set_b{{0.25, unit2(2.0)}, {0.75, unit2(0.7)}, {1.25, unit2(2.8)}};
  const auto ca = calibrate_constant(model, band, set_a);
  const auto cb = calibrate_constant(model, band, set_b);
  MESSAGE("calibrated " << ca.constant << " " << cb.constant << " analytic " << ca.analytic);
  CHECK(ca.fit_residual < 0.02);
  CHECK(cb.fit_residual < 0.02);
  CHECK(std::abs(ca.constant - cb.constant) < 0.03 * std::abs(ca.constant));
  CHECK(std::abs(ca.constant - ca.analytic) < 0.03 * ca.analytic);

  const auto none = make_bessel_model(g, 3.0, make_local_strength(g, {}), ScalarField::zeros(g), 0.5);
  CHECK_THROWS_AS(calibrate_constant(none, band, set_a), IllConditionedError);
}

TEST_CASE("recover_mu_hat") {
  MeasurementTable zeros;
  for (const auto& p : polar_probes(2, 4.0, 4, 12)) zeros.entries.push_back({p.tau, p.theta, 0.0, 8.0, OrderPolicy::FirstOrder, 23});
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const auto set = recover_mu_hat(zeros, 0.01, 0.5);
  CHECK(set.samples.size() == 4 * 24 + 1);
  const auto res = invert_mu(set, g, make_local_strength(g, {}));
  CHECK(res.mu_recovered.max_abs() == 0.0);
  CHECK(res.relative_l2_error == 0.0);
  CHECK_THROWS_AS(recover_mu_hat(zeros, 0.0, 0.5), InvalidArgument);

  // Completion averages a measured pair and fills an unmeasured partner.
  MeasurementTable t;
  t.entries.push_back({1.0, unit2(0.5), {1.0, 2.0}, 8.0, OrderPolicy::FirstOrder, 23});
  t.entries.push_back({1.0, -unit2(0.5), {1.2, -1.8}, 8.0, OrderPolicy::FirstOrder, 23});
  t.entries.push_back({2.0, unit2(0.1), {0.5, 0.5}, 8.0, OrderPolicy::FirstOrder, 23});
  t.entries.push_back({2.0, unit2(0.1), {9.0, 9.0}, 16.0, OrderPolicy::FirstOrder, 23});
  const auto c = recover_mu_hat(t, 2.0, 1.0, 8.0);
  REQUIRE(c.samples.size() == 4);
  CHECK(std::abs(c.samples[0].value - cplx(0.55, 0.95)) < 1e-15);
  CHECK(std::abs(c.samples[1].value - cplx(0.55, -0.95)) < 1e-15);
  CHECK(std::abs(c.samples[3].value - cplx(0.25, -0.25)) < 1e-15);
}

TEST_CASE("noiseless synthetic measurements recover mu_hat") {
  const auto g = make_grid(2, 256, 2.0, 0.9);
  const auto strength = make_local_strength(g, {{vec2(0.1, 0.0), 0.6, 1.0}});
  const auto model = make_bessel_model(g, 2.5, strength, ScalarField::zeros(g), 0.3);
  const auto cal = calibrate_constant(model, make_band(40.0, 1.8), {{0.0, unit2(0.0)}, {0.25, unit2(0.4)}});
  const double scale = std::abs(fourier_at(strength.mu, Vec::Zero(2)));
  auto worst_error = [&](double K, const std::vector<Probe>& probes) {
    const auto band = make_band(K, 1.8);
    const auto values = expected_band_averages(model, band, probes);
    MeasurementTable t;
    for (std::size_t i = 0; i < probes.size(); ++i)
      t.entries.push_back({probes[i].tau, probes[i].theta, values[i], K, OrderPolicy::FirstOrder, band.num_nodes});
    double worst = 0.0;
    for (const auto& s : recover_mu_hat(t, cal.constant, model.epsilon).samples) {
      const cplx exact = fourier_at(strength.mu, 2.0 * s.tau * s.theta);
      worst = std::max(worst, std::abs(s.value - exact) / std::max(std::abs(exact), 0.1 * scale));
    }
    return worst;
  };
  // The band average carries an O(tau / K) drift, so the identity is tight for tau << K.
  CHECK(worst_error(40.0, polar_probes(2, 0.5, 2, 12)) < 0.01);
  const auto wide = polar_probes(2, 2.0, 2, 4);
  const double e20 = worst_error(20.0, wide), e40 = worst_error(40.0, wide);
  MESSAGE("tau <= 2 worst error K=20: " << e20 << " K=40: " << e40);
  CHECK(e40 < 0.6 * e20);
}

TEST_CASE("inversion from exact spectra") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const auto truth = two_bumps(g);
  const double xi_max = 30.0;
  const int angles = required_angles(xi_max, g.domain_radius);
  const auto set = exact_polar(truth.mu, polar_probes(2, xi_max / 2, 60, (angles + 1) / 2));
  const auto res = invert_mu(set, g, truth);
  MESSAGE("dense polar error " << res.relative_l2_error << " unclipped " << res.relative_l2_error_unclipped);
  CHECK(res.relative_l2_error < 0.05);
  CHECK(res.relative_l2_error <= res.relative_l2_error_unclipped + 1e-15);
  CHECK(res.max_imaginary < 1e-10 * truth.mu.max_abs());
  CHECK(res.support_mass_fraction >= 0.95);
  CHECK(res.mu_recovered.real_part().minCoeff() >= 0.0);

  const auto sparse = exact_polar(truth.mu, polar_probes(2, xi_max / 2, 60, 4));
  CHECK_THROWS_AS(invert_mu(sparse, g, truth), InsufficientCoverageError);
  auto broken = set;
  broken.samples.erase(broken.samples.begin() + 3);
  CHECK_THROWS_AS(invert_mu(broken, g, truth), InvalidArgument);
}

TEST_CASE("band-limited truth round trip") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const double s = 0.2;
  LocalStrength truth{sample_field(g, [&](const Vec& x) { return std::exp(-x.squaredNorm() / (2 * s * s)); }), 0.9, {}};
  const double xi_max = 45.0;
  const auto set = exact_polar(truth.mu, polar_probes(2, xi_max / 2, 240, 128));
  const auto res = invert_mu(set, g, truth);
  MESSAGE("band-limited error " << res.relative_l2_error);
  CHECK(res.relative_l2_error < 0.005);
}

TEST_CASE("3D inversion from exact spectra") {
  const auto g = make_grid(3, 32, 2.0, 0.9);
  Vec c(3);
  c << 0.1, 0.0, -0.1;
  const auto truth = make_local_strength(g, {{c, 0.6, 1.0}});
  const double xi_max = 24.0;
  const int angles = required_angles(xi_max, g.domain_radius);
  const auto set = exact_polar(truth.mu, polar_probes(3, xi_max / 2, 48, angles + (4 - angles % 4) % 4));
  const auto res = invert_mu(set, g, truth);
  MESSAGE("3D error " << res.relative_l2_error);
  CHECK(res.relative_l2_error < 0.05);
  CHECK(res.max_imaginary < 1e-10 * truth.mu.max_abs());
}
