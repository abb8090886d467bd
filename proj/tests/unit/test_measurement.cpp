#include <cmath>
#include <filesystem>
#include <memory>

#include "bsl/errors.hpp"
#include "bsl/measurement.hpp"
#include "doctest.h"

using namespace bsl;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec unit2(double angle) { return vec2(std::cos(angle), std::sin(angle)); }

std::shared_ptr<const RandomFieldModel> bessel(const GridSpec& g, double m, double eps = 1.0,
                                               ScalarField q0 = ScalarField()) {
  auto mu = make_local_strength(g, {{vec2(0.1, -0.05), 0.6 * g.domain_radius, 1.0}});
  if (q0.size() == 0) q0 = ScalarField::zeros(g);
  return std::make_shared<RandomFieldModel>(make_bessel_model(g, m, mu, q0, eps));
}

}  // namespace

TEST_CASE("band specification and quadrature") {
  CHECK(min_band_nodes(10.0, 1.8) == 23);
  CHECK_THROWS_AS(make_band(10.0, 1.8, 22), InvalidArgument);
  CHECK_THROWS_AS(make_band(0.0, 1.8), InvalidArgument);
  for (BandRule rule : {BandRule::Midpoint, BandRule::Trapezoid}) {
    const auto q = band_quadrature(make_band(10.0, 1.8, 40, rule));
    double w = 0, lin = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      w += q.weights[i];
      lin += q.weights[i] * q.nodes[i];
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lin == doctest::Approx(15.0).epsilon(1e-14));  // (1/K) int_K^{2K} k dk = 3K/2
  }
  CHECK(parse_order_policy(to_string(OrderPolicy::Full)) == OrderPolicy::Full);
  CHECK_THROWS_AS(parse_order_policy("second"), InvalidArgument);
}

TEST_CASE("band average basics") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const auto band = make_band(6.0, 1.8);
  Born1Provider zero(ScalarField::zeros(g));
  CHECK(band_average(zero, band, 0.3, unit2(0.2), 3.0) == cplx(0.0));

  const auto q = sample_potential(bessel(g, 2.5), RngStream(1, Purpose::WhiteNoise, 0)).q;
  Born1Provider p(q);
  const cplx m0 = band_average(p, band, 0.0, unit2(0.2), 2.5);
  CHECK(m0.real() > 0.0);
  CHECK(std::abs(m0.imag()) <= 1e-12 * m0.real());

  // Conjugate relation under theta -> -theta for a real potential.
  const cplx a = band_average(p, band, 1.1, unit2(0.9), 2.5);
  const cplx b = band_average(p, band, 1.1, -unit2(0.9), 2.5);
  CHECK(std::abs(a - std::conj(b)) < 1e-12 * std::abs(a));

  // Pure function of the realization: a fresh provider gives identical bits.
  Born1Provider p2(q);
  CHECK(band_average(p2, band, 1.1, unit2(0.9), 2.5) == a);

  // tau a multiple of the node spacing reuses node evaluations.
  Born1Provider p3(q);
  band_average(p3, band, 2.0 * band.node_spacing(), unit2(0.4), 2.5);
  CHECK(p3.evaluations() == static_cast<std::size_t>(band.num_nodes + 2));
}

TEST_CASE("node refinement changes the band average little") {
  const auto g = make_grid(2, 128, 2.0, 0.9);
  const auto q = sample_potential(bessel(g, 2.0), RngStream(2, Purpose::WhiteNoise, 0)).q;
  Born1Provider p(q);
  for (double tau : {0.0, 1.5}) {
    const auto coarse = make_band(12.0, 1.8);
    const auto fine = make_band(12.0, 1.8, 2 * coarse.num_nodes);
    const cplx a = band_average(p, coarse, tau, unit2(0.3), 2.0);
    const cplx b = band_average(p, fine, tau, unit2(0.3), 2.0);
    MESSAGE("tau " << tau << " refinement change " << std::abs(a - b) / std::abs(b));
    CHECK(std::abs(a - b) < 0.005 * std::abs(b));
  }
}

TEST_CASE("expected first-order correlation against Monte Carlo") {
  const auto g = make_grid(2, 32, 2.0, 0.9);
  const Vec theta = unit2(0.5);
  const double k = 3.0, tau = 0.4;
  const auto q0 = bump_sum(g, {{vec2(0.0, 0.1), 0.5, 0.2}});
  auto mu = make_local_strength(g, {{vec2(0.1, -0.05), 0.6 * g.domain_radius, 1.0}});
  const std::vector<std::shared_ptr<const RandomFieldModel>> models{
      bessel(g, 2.5, 1.0, q0),
      std::make_shared<RandomFieldModel>(make_fbm_model(g, 0.3, mu, ScalarField::zeros(g), vec2(0.1, 0.0), 0.7))};
  for (const auto& model : models) {
    const int draws = 2000;
    Eigen::ArrayXd re(draws), im(draws);
    for (int d = 0; d < draws; ++d) {
      const auto q = sample_potential(model, RngStream(9, Purpose::WhiteNoise, static_cast<std::uint64_t>(d))).q;
      const cplx v = born1_backscatter(q, k, theta) * std::conj(born1_backscatter(q, k + tau, theta));
      re[d] = v.real();
      im[d] = v.imag();
    }
    const cplx exact = expected_first_order_correlation(*model, k, tau, theta);
    const auto mr = moments(re), mi = moments(im);
    MESSAGE("exact " << exact << " mc " << mr.mean << " " << mi.mean);
    CHECK(std::abs(mr.mean - exact.real()) < 3 * mr.standard_error);
    CHECK(std::abs(mi.mean - exact.imag()) < 3 * mi.standard_error);
  }
  auto none = std::make_shared<RandomFieldModel>(make_bessel_model(g, 2.0, make_local_strength(g, {}), ScalarField::zeros(g), 1.0));
  CHECK(expected_first_order_correlation(*none, k, tau, theta) == cplx(0.0));
  CHECK_THROWS_AS(expected_first_order_correlation(*none, 0.2, tau, theta), InvalidArgument);
}

TEST_CASE("expected correlation decays like k^-m") {
  const auto g = make_grid(2, 256, 2.0, 0.9);
  const auto model = bessel(g, 3.0);
  const Vec theta = unit2(1.0);
  const double a = std::pow(40.0, 3) * expected_first_order_correlation(*model, 40.0, 0.0, theta).real();
  const double b = std::pow(80.0, 3) * expected_first_order_correlation(*model, 80.0, 0.0, theta).real();
  CHECK(std::abs(a / b - 1.0) < 0.10);
}

TEST_CASE("Gaussian pair identity and fourth moment") {
  const auto res = gaussian_pair_check({0.0, 0.25, 0.5, 0.75, 1.0}, 1000000, RngStream(4, Purpose::GaussianPairs, 0));
  CHECK(std::abs(res.rows[0].estimate) < 3 * std::sqrt(8.0 / 1e6));
  CHECK(res.rows[4].estimate == doctest::Approx(2.0).epsilon(0.01));
  CHECK(res.rows[2].estimate == doctest::Approx(0.5).epsilon(0.02));
  CHECK(gaussian_fourth_moment_ratio(1000000, RngStream(4, Purpose::GaussianPairs, 1)) == doctest::Approx(3.0).epsilon(0.05));
  CHECK_THROWS_AS(gaussian_pair_check({1.5}, 100, RngStream(4, Purpose::GaussianPairs, 0)), InvalidArgument);
}

TEST_CASE("covariance decay probe") {
  const auto g = make_grid(2, 32, 2.0, 0.9);
  const auto model = bessel(g, 2.5);
  const double L = 2 * g.domain_radius;
  const std::vector<double> r{0.0, pi / L, 2 * pi / L, 8 * pi / L};
  const auto t = covariance_decay_probe(model, 2.0, r, unit2(0.3), 1000, RngStream(5, Purpose::Probe, 0));
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].uu > 0.0);
  CHECK(t.rows[0].vv > 0.0);
  const double base = std::hypot(t.rows[0].uu_exact + t.rows[0].vv_exact, 0.0);
  const double far = std::hypot(t.rows[3].uu_exact + t.rows[3].vv_exact, t.rows[3].uv_exact);
  CHECK(far < 0.05 * base);
  for (int i : {0, 1, 2}) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    CHECK(std::abs(row.uu - row.uu_exact) < 3 * row.uu_se);
    CHECK(std::abs(row.vv - row.vv_exact) < 3 * row.vv_se);
  }
  CHECK(t.tail_slope < -1.0);
  CHECK_THROWS_AS(covariance_decay_probe(model, 2.0, r, unit2(0.3), 10, RngStream(5, Purpose::Probe, 0)),
                  InvalidArgument);
}

TEST_CASE("ergodic averages") {
  const std::vector<double> T{8, 16, 32, 64};
  const RngStream rng(6, Purpose::Process, 0);
  ProcessSpec zero;
  zero.kind = ProcessSpec::Kind::Zero;
  for (const auto& row : ergodic_average_demo(zero, T, 5, rng).rows) CHECK(row.rms == 0.0);
  ProcessSpec constant;
  constant.kind = ProcessSpec::Kind::Constant;
  for (const auto& row : ergodic_average_demo(constant, T, 5, rng).rows) CHECK(row.single_path == doctest::Approx(1.0));
  const auto ma = ergodic_average_demo(ProcessSpec{}, T, 100, rng);
  MESSAGE("rms slope " << ma.rms_slope);
  CHECK(ma.rms_slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("second-order band integral") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const auto bands = std::vector<BandSpec>{make_band(8.0, 1.8)};
  const Vec theta = unit2(0.1);
  CHECK(second_order_negligibility_probe(ScalarField::zeros(g), bands, theta, 2.5)[0].value == 0.0);
  const auto q = sample_potential(bessel(g, 2.5, 0.2), RngStream(7, Purpose::WhiteNoise, 0)).q;
  Eigen::ArrayXd eps(3), vals(3);
  int i = 0;
  for (double s : {1.0, 0.5, 0.25}) {
    eps[i] = s;
    vals[i++] = second_order_negligibility_probe(s * q, bands, theta, 2.5)[0].value;
  }
  CHECK(fit_loglog(eps, vals).slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("full-solve provider") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  const auto q = sample_potential(bessel(g, 3.0, 0.05), RngStream(8, Purpose::WhiteNoise, 0)).q;
  FullSolveProvider full(q);
  Born1Provider first(q);
  const auto band = make_band(8.0, 1.8);
  const cplx a = band_average(full, band, 0.5, unit2(0.0), 3.0);
  const cplx b = band_average(first, band, 0.5, unit2(0.0), 3.0);
  CHECK(std::abs(a - b) < 0.05 * std::abs(b));
  FullSolveProvider strong(5000.0 * q);
  CHECK_THROWS_AS(band_average(strong, band, 0.0, unit2(0.0), 3.0), DivergedError);
  KernelCache cache(g);
  const auto rec = forward_backscatter(q, 8.0, unit2(0.0), OrderPolicy::FirstOrder, cache);
  CHECK(rec.iterations == 1);
}

TEST_CASE("measurement CSV round trip") {
  MeasurementTable t;
  t.order_m = 2.5;
  t.entries.push_back({0.5, unit2(0.3), {1.25e-3, -3.0e-7}, 8.0, OrderPolicy::FirstOrder, 23});
  t.entries.push_back({1.0, unit2(2.3), {0.1, 1.0 / 3.0}, 16.0, OrderPolicy::Full, 46});
  const auto path = std::filesystem::temp_directory_path() / "bsl_measure_roundtrip.csv";
  write_measurement_csv(path, t, 2);
  const auto r = read_measurement_csv(path, 2.5);
  REQUIRE(r.entries.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.entries[i].value == t.entries[i].value);
    CHECK(r.entries[i].theta == t.entries[i].theta);
    CHECK(r.entries[i].policy == t.entries[i].policy);
    CHECK(r.entries[i].num_nodes == t.entries[i].num_nodes);
  }
  std::filesystem::remove(path);
}
