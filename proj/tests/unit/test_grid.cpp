#include <cmath>
#include <filesystem>
#include <fstream>

#include "bsl/csv.hpp"
#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/grid.hpp"
#include "bsl/grid_io.hpp"
#include "bsl/rng.hpp"
#include "bsl/stats.hpp"
#include "doctest.h"

using namespace bsl;

namespace {

ScalarField random_complex_field(const GridSpec& g, std::uint64_t index) {
  RngStream rng(99, Purpose::MonteCarlo, index);
  Eigen::ArrayXcd v(static_cast<Eigen::Index>(g.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {rng.normal(), rng.normal()};
  return ScalarField::complex(g, std::move(v));
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bsl_test_" + name);
}

}  // namespace

TEST_CASE("make_grid derives spacing") {
  CHECK(make_grid(2, 256, 4.0, 1.0).spacing() == doctest::Approx(0.03125).epsilon(1e-15));
  CHECK(make_grid(3, 64, 2.0, 0.5).spacing() == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("make_grid rejects bad input") {
  CHECK_THROWS_AS(make_grid(2, 100, 4.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_grid(2, 8, 4.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_grid(2, 64, 4.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(make_grid(4, 64, 4.0, 1.0), InvalidArgument);
}

TEST_CASE("grid indexing") {
  const auto g = make_grid(3, 16, 2.0, 0.5);
  const auto o = g.origin_index();
  CHECK(g.coordinate(o).norm() == 0.0);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, g.size() - 1}) CHECK(g.ravel(g.unravel(i)) == i);
  CHECK(g.nearest_index(g.coordinate(123)) == 123);
  CHECK(g.frequency(g.ravel({1, 0, 15}))[2] == doctest::Approx(-pi / 2.0));
}

TEST_CASE("real fields reject imaginary parts") {
  const auto g = make_grid(2, 16, 1.0, 0.25);
  Eigen::ArrayXcd v = Eigen::ArrayXcd::Zero(256);
  v[3] = {0.0, 1e-300};
  CHECK_THROWS_AS(ScalarField(g, v, FieldKind::Real), InvalidArgument);
}

TEST_CASE("fft of a constant is a scaled delta") {
  const auto g = make_grid(2, 32, 1.0, 0.25);
  const auto f = ScalarField::real(g, Eigen::ArrayXd::Constant(1024, 2.5));
  const auto fh = fft_forward(f);
  CHECK(std::abs(fh[0] - cplx(2.5 * 32.0)) < 1e-12);
  CHECK((fh.values().tail(1023).abs() < 1e-12).all());
}

TEST_CASE("fft round trip and Parseval on random fields") {
  for (int dim : {2, 3}) {
    const auto g = make_grid(dim, dim == 2 ? 32 : 16, 1.0, 0.25);
    double worst_round = 0, worst_parseval = 0;
    for (int t = 0; t < 50; ++t) {
      const auto f = random_complex_field(g, static_cast<std::uint64_t>(t + 100 * dim));
      const auto fh = fft_forward(f);
      const auto back = fft_inverse(fh);
      worst_round = std::max(worst_round, (back.values() - f.values()).matrix().norm() / f.values().matrix().norm());
      worst_parseval = std::max(worst_parseval, std::abs(fh.values().abs2().sum() / f.values().abs2().sum() - 1.0));
    }
    CHECK(worst_round < 1e-12);
    CHECK(worst_parseval < 1e-10);
  }
}

TEST_CASE("fft of a shifted delta matches direct summation") {
  const auto g = make_grid(2, 16, 1.0, 0.25);
  Eigen::ArrayXcd v = Eigen::ArrayXcd::Zero(256);
  const int s0 = 3, s1 = 11;
  v[s0 * 16 + s1] = 1.0;
  const auto fh = fft_forward(ScalarField::complex(g, v));
  double err = 0;
  for (int j0 = 0; j0 < 16; ++j0)
    for (int j1 = 0; j1 < 16; ++j1) {
      cplx direct = 0;
      for (int i0 = 0; i0 < 16; ++i0)
        for (int i1 = 0; i1 < 16; ++i1)
          direct += v[i0 * 16 + i1] * std::polar(1.0, -2 * pi * (j0 * i0 + j1 * i1) / 16.0);
      direct /= 16.0;
      err = std::max(err, std::abs(direct - fh[static_cast<std::size_t>(j0 * 16 + j1)]));
    }
  CHECK(err < 1e-13);
}

TEST_CASE("continuous transform of a Gaussian") {
  // (2 pi)^{-n/2} int exp(-i xi.x) exp(-|x - c|^2/2) dx = exp(-i xi.c) exp(-|xi|^2/2)
  const auto g = make_grid(2, 64, 8.0, 1.0);
  Vec c(2);
  c << 0.3, -0.7;
  const auto f = sample_field(g, [&](const Vec& x) { return std::exp(-0.5 * (x - c).squaredNorm()); });
  const auto ft = continuous_fourier_transform(f);
  double err = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Vec xi = g.frequency(j);
    const cplx exact = std::polar(std::exp(-0.5 * xi.squaredNorm()), -xi.dot(c));
    err = std::max(err, std::abs(ft[j] - exact));
  }
  CHECK(err < 1e-10);
  const auto back = inverse_continuous_fourier_transform(ft);
  CHECK((back.values() - f.values()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("grid binary round trip is bitwise") {
  const auto g = make_grid(2, 16, 1.5, 0.5);
  const auto f = random_complex_field(g, 7);
  const auto p = temp_path("roundtrip.bslb");
  write_grid(f, p);
  const auto r = read_grid(p);
  CHECK(r.grid() == g);
  CHECK(r.kind() == FieldKind::Complex);
  CHECK(std::memcmp(r.values().data(), f.values().data(), f.size() * sizeof(cplx)) == 0);
  CHECK(std::filesystem::file_size(p) == 4 + 12 + 16 + 1 + 256 * 16);
  std::filesystem::remove(p);
}

TEST_CASE("grid reader reports format errors") {
  const auto g = make_grid(2, 16, 1.5, 0.5);
  const auto p = temp_path("bad.bslb");
  write_grid(ScalarField::zeros(g), p);
  std::filesystem::resize_file(p, std::filesystem::file_size(p) - 5);
  try {
    read_grid(p);
    FAIL("expected truncation error");
  } catch (const GridFormatError& e) {
    CHECK(e.code() == GridFormatError::Code::Truncated);
  }
  write_grid(ScalarField::zeros(g), p);
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t four = 4;
    f.write(reinterpret_cast<const char*>(&four), 4);
  }
  try {
    read_grid(p);
    FAIL("expected dimension error");
  } catch (const GridFormatError& e) {
    CHECK(e.code() == GridFormatError::Code::UnsupportedDimension);
  }
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XSLB", 4);
  }
  try {
    read_grid(p);
    FAIL("expected magic error");
  } catch (const GridFormatError& e) {
    CHECK(e.code() == GridFormatError::Code::BadMagic);
  }
  std::filesystem::remove(p);
}

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(42, Purpose::WhiteNoise, 5), b(42, Purpose::WhiteNoise, 5);
  RngStream c(42, Purpose::WhiteNoise, 6), d(42, Purpose::Fbm, 5);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs_c |= va != c.next_u64();
    differs_d |= va != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  RngStream e(1, Purpose::MonteCarlo, 0);
  Eigen::ArrayXd z(200000);
  e.fill_normal(z);
  const auto m = moments(z);
  CHECK(std::abs(m.mean) < 4 * m.standard_error);
  CHECK(m.variance == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(m.excess_kurtosis) < 0.05);
}

TEST_CASE("csv writer round trips doubles") {
  const auto p = temp_path("t.csv");
  {
    CsvWriter w(p, {"a", "b"});
    w << 0.1 << -1e-300;
    w.end_row();
  }
  const auto t = read_csv(p);
  CHECK(t.column("b") == 1);
  CHECK(std::stod(t.rows[0][0]) == 0.1);
  CHECK(std::stod(t.rows[0][1]) == -1e-300);
  std::filesystem::remove(p);
}

TEST_CASE("line fit recovers a slope") {
  Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(10, 1, 10);
  const auto f = fit_loglog(x, 3.0 * x.pow(-0.5));
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(pairwise_sum(std::vector<double>(1000, 0.1)) == doctest::Approx(100.0));
}
