#include "bsl/scaling.hpp"

#include <cmath>
#include <limits>

#include "bsl/errors.hpp"
#include "bsl/reconstruction.hpp"
#include "bsl/stats.hpp"

namespace bsl {

void validate_scaling(const ScalingConfig& c) {
  if (!(c.beta1 > 1.0)) throw InvalidArgument("beta1 must exceed 1");
  if (!(c.beta2 > c.m / 2.0 - 1.0)) throw InvalidArgument("beta2 must exceed m/2 - 1");
  if (!(c.K > 0.0 && c.ell > 0.0 && c.L > 0.0 && c.K0 > 0.0 && c.ell0 > 0.0 && c.L0 > 0.0))
    throw InvalidArgument("scales must be positive");
  if (c.eps < 0.0) throw InvalidArgument("eps must be nonnegative");
  if (c.n != 2 && c.n != 3) throw InvalidArgument("dimension must be 2 or 3");
}

RegimeCheck check_regime(const ScalingConfig& c) {
  validate_scaling(c);
  RegimeCheck r;
  const double floor = std::max(std::pow(c.ell / c.ell0, -c.beta1), std::pow(c.L / c.L0, c.n));
  r.frequency_ratio = c.K / (c.K0 * floor);
  r.size_ratio = c.eps > 0.0 ? std::pow(c.K / c.K0, -c.beta2) / c.eps : std::numeric_limits<double>::infinity();
  r.satisfied = r.frequency_ratio >= c.margin && r.size_ratio >= c.margin;
  return r;
}

ErrorBudget predict_error(const ScalingConfig& c, double delta) {
  validate_scaling(c);
  if (!(delta > 0.0 && delta <= 0.1)) throw InvalidArgument("delta must lie in (0, 0.1]");
  ErrorBudget b;
  const double ln = std::pow(c.L, c.n);
  b.random_term = ln / c.K;
  b.deterministic_term = ln * ln * std::pow(std::log(c.K) / (c.K * c.ell), 2);
  b.nonlinear_term = ln * ln * ln * ln * c.eps * c.eps * std::pow(c.K, c.n - 2 + delta);
  b.total_rms = std::sqrt(b.random_term + b.deterministic_term + b.nonlinear_term);
  b.regime_satisfied = check_regime(c).satisfied;
  return b;
}

ScanTable empirical_error_scan(std::shared_ptr<const RandomFieldModel> model, const ScanSettings& s) {
  if (s.bands.empty() || s.epsilons.empty() || s.probes.empty() || s.realizations < 1)
    throw InvalidArgument("scan needs bands, epsilons, probes and realizations");
  auto unit = std::make_shared<RandomFieldModel>(*model);
  unit->epsilon = 1.0;
  unit->mean_q0 = ScalarField::zeros(model->grid);
  std::vector<cplx> mu_hat;
  for (const auto& p : s.probes) mu_hat.push_back(fourier_at(model->strength.mu, 2.0 * p.tau * p.theta));

  // sums[b][e] and nonlinear[b][e] accumulate squared errors over probes and realizations.
  using Table = std::vector<std::vector<double>>;
  Table sums(s.bands.size(), std::vector<double>(s.epsilons.size(), 0.0)), nonlinear = sums;
  const bool full = s.policy == OrderPolicy::Full;
  for (int r = 0; r < s.realizations; ++r) {
    const ScalarField y = sample_potential(unit, s.rng.substream(static_cast<std::uint64_t>(r))).q;
    for (std::size_t e = 0; e < s.epsilons.size(); ++e) {
      const double eps = s.epsilons[e];
      const ScalarField q = eps * y + model->mean_q0;
      Born1Provider first(q);
      std::unique_ptr<FullSolveProvider> solver;
      if (full) solver = std::make_unique<FullSolveProvider>(q, s.solver);
      for (std::size_t b = 0; b < s.bands.size(); ++b)
        for (std::size_t p = 0; p < s.probes.size(); ++p) {
          const auto& pr = s.probes[p];
          const cplx m1 = band_average(first, s.bands[b], pr.tau, pr.theta, model->order_m);
          const cplx m = full ? band_average(*solver, s.bands[b], pr.tau, pr.theta, model->order_m) : m1;
          sums[b][e] += std::norm(m / (eps * eps) - s.calibration * mu_hat[p]);
          nonlinear[b][e] += std::norm((m - m1) / (eps * eps));
        }
    }
  }
  ScanTable t;
  const double count = static_cast<double>(s.realizations) * static_cast<double>(s.probes.size());
  auto rms = [&](const Table& a, std::size_t b, std::size_t e) { return std::sqrt(a[b][e] / count); };
  for (std::size_t b = 0; b < s.bands.size(); ++b)
    for (std::size_t e = 0; e < s.epsilons.size(); ++e)
      t.rows.push_back({s.bands[b].K, s.epsilons[e], rms(sums, b, e), rms(nonlinear, b, e)});
  if (full && s.epsilons.size() >= 2) {
    const std::size_t b = s.bands.size() - 1;
    Eigen::ArrayXd x(static_cast<Eigen::Index>(s.epsilons.size())), y(x.size());
    for (std::size_t e = 0; e < s.epsilons.size(); ++e) {
      x[static_cast<Eigen::Index>(e)] = s.epsilons[e];
      y[static_cast<Eigen::Index>(e)] = rms(nonlinear, b, e);
    }
    t.eps_slope = fit_loglog(x, y).slope;
  }
  if (s.bands.size() >= 2) {
    std::size_t e0 = 0;
    for (std::size_t e = 1; e < s.epsilons.size(); ++e)
      if (s.epsilons[e] < s.epsilons[e0]) e0 = e;
    Eigen::ArrayXd x(static_cast<Eigen::Index>(s.bands.size())), y(x.size());
    for (std::size_t b = 0; b < s.bands.size(); ++b) {
      x[static_cast<Eigen::Index>(b)] = s.bands[b].K;
      y[static_cast<Eigen::Index>(b)] = rms(sums, b, e0);
    }
    t.K_slope = fit_loglog(x, y).slope;
  }
  return t;
}

}  // namespace bsl
