#include <cmath>
#include <limits>
#include <memory>

#include "bsl/errors.hpp"
#include "bsl/reconstruction.hpp"
#include "bsl/scaling.hpp"
#include "doctest.h"

using namespace bsl;

namespace {

ScalingConfig base() {
  ScalingConfig c;
  c.K = 1000.0;
  c.ell = 1.0;
  c.L = 1.0;
  c.eps = 1e-4;
  c.n = 2;
  c.m = 2.0;
  c.beta1 = 1.5;
  c.beta2 = 0.5;
  return c;
}

}  // namespace

TEST_CASE("regime check") {
  auto c = base();
  const auto r = check_regime(c);
  CHECK(r.satisfied);
  CHECK(r.frequency_ratio == doctest::Approx(1000.0));
  CHECK(r.size_ratio == doctest::Approx(316.227766));

  c.eps = 1.0;
  CHECK_FALSE(check_regime(c).satisfied);
  c = base();
  c.K = c.K0;
  CHECK_FALSE(check_regime(c).satisfied);

  // A short correlation length raises the frequency floor.
  c = base();
  c.ell = 0.01;
  CHECK(check_regime(c).frequency_ratio == doctest::Approx(1.0));

  c = base();
  c.beta1 = 1.0;
  CHECK_THROWS_AS(check_regime(c), InvalidArgument);
  c = base();
  c.m = 4.0;
  c.beta2 = 0.9;
  CHECK_THROWS_AS(check_regime(c), InvalidArgument);
  c = base();
  c.K = -1.0;
  CHECK_THROWS_AS(check_regime(c), InvalidArgument);
}

TEST_CASE("error budget arithmetic") {
  auto c = base();
  const auto b = predict_error(c);
  CHECK(b.random_term == doctest::Approx(1e-3));
  CHECK(b.deterministic_term == doctest::Approx(std::pow(std::log(1000.0) / 1000.0, 2)));
  CHECK(b.nonlinear_term == doctest::Approx(1e-8 * std::pow(1000.0, 0.05)));
  CHECK(b.total_rms == doctest::Approx(std::sqrt(b.random_term + b.deterministic_term + b.nonlinear_term)));
  CHECK(b.regime_satisfied);

  auto half = c;
  half.eps = c.eps / 2;
  CHECK(predict_error(half).nonlinear_term == doctest::Approx(b.nonlinear_term / 4));

  auto wide = c;
  wide.K = 4 * c.K;
  const auto b4 = predict_error(wide);
  CHECK(b4.random_term == doctest::Approx(b.random_term / 4));
  CHECK(b4.deterministic_term ==
        doctest::Approx(b.deterministic_term / 16 * std::pow(std::log(4000.0) / std::log(1000.0), 2)));
  CHECK(b4.nonlinear_term == doctest::Approx(b.nonlinear_term * std::pow(4.0, 0.05)));

  c.n = 3;
  c.m = 3.0;
  c.beta2 = 0.6;
  c.L = 2.0;
  const auto b3 = predict_error(c);
  CHECK(b3.random_term == doctest::Approx(8.0 / 1000.0));
  CHECK(b3.nonlinear_term == doctest::Approx(std::pow(2.0, 12) * 1e-8 * std::pow(1000.0, 1.05)));
  CHECK_THROWS_AS(predict_error(c, 0.0), InvalidArgument);
}

TEST_CASE("error budget monotonicity") {
  // The deterministic term (log K / K)^2 only decreases for K > e.
  double prev = std::numeric_limits<double>::infinity();
  for (double K = 3.0; K < 1e6; K *= 1.7) {
    auto c = base();
    c.K = K;
    const double t = predict_error(c).total_rms;
    CHECK(t < prev);
    prev = t;
  }
  for (double ell : {0.5, 1.0, 2.0, 4.0}) {
    auto a = base(), b = base();
    a.ell = ell;
    b.ell = 2 * ell;
    CHECK(predict_error(b).deterministic_term < predict_error(a).deterministic_term);
  }
  for (double eps : {1e-5, 1e-4, 1e-3}) {
    auto a = base(), b = base();
    a.eps = eps;
    b.eps = 2 * eps;
    CHECK(predict_error(b).total_rms > predict_error(a).total_rms);
  }
}

TEST_CASE("empirical scan") {
  const auto g = make_grid(2, 64, 2.0, 0.9);
  Vec c = Vec::Zero(2);
  const auto strength = make_local_strength(g, {{c, 0.6, 1.0}});
  auto model = std::make_shared<RandomFieldModel>(make_bessel_model(g, 2.0, strength, ScalarField::zeros(g), 1.0));
  ScanSettings s;
  s.bands = {make_band(4.0, 1.8), make_band(8.0, 1.8)};
  s.epsilons = {0.01, 0.02};
  Vec theta(2);
  theta << 1.0, 0.0;
  s.probes = {{0.0, theta}, {0.5, theta}};
  s.calibration = analytic_calibration(*model);
  s.policy = OrderPolicy::FirstOrder;
  s.realizations = 2;
  s.rng = RngStream(11, Purpose::WhiteNoise, 0);
  const auto t = empirical_error_scan(model, s);
  REQUIRE(t.rows.size() == 4);
  for (const auto& r : t.rows) CHECK(r.rms_error > 0.0);
  // First order: M / eps^2 does not depend on eps.
  CHECK(t.rows[0].rms_error == doctest::Approx(t.rows[1].rms_error).epsilon(1e-10));
  CHECK(t.eps_slope == 0.0);
  for (const auto& r : t.rows) CHECK(r.nonlinear_rms == 0.0);
  s.realizations = 0;
  CHECK_THROWS_AS(empirical_error_scan(model, s), InvalidArgument);
}
