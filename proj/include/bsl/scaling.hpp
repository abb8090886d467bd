#pragma once

#include <memory>
#include <vector>

#include "bsl/measurement.hpp"

namespace bsl {

// Two-scale regime parameters. Hidden constants of the budget are taken as 1,
// so only ratios across sweeps carry meaning.
struct ScalingConfig {
  double K = 1.0;
  double ell = 1.0;
  double eps = 0.0;
  double L = 1.0;
  int n = 2;
  double m = 2.0;
  double beta1 = 1.5;
  double beta2 = 0.5;
  double K0 = 1.0;
  double ell0 = 1.0;
  double L0 = 1.0;
  double margin = 10.0;  // "much greater" means ratio >= margin
};

void validate_scaling(const ScalingConfig& c);

struct RegimeCheck {
  bool satisfied = false;
  double frequency_ratio = 0.0;  // K / (K0 max((ell/ell0)^{-beta1}, (L/L0)^n))
  double size_ratio = 0.0;       // (K/K0)^{-beta2} / eps
};
RegimeCheck check_regime(const ScalingConfig& c);

struct ErrorBudget {
  double random_term = 0.0;         // L^n / K
  double deterministic_term = 0.0;  // L^{2n} (log K / (K ell))^2
  double nonlinear_term = 0.0;      // L^{4n} eps^2 K^{n-2+delta}
  double total_rms = 0.0;
  bool regime_satisfied = false;
};
ErrorBudget predict_error(const ScalingConfig& c, double delta = 0.05);

struct ScanSettings {
  std::vector<BandSpec> bands;   // one per K
  std::vector<double> epsilons;
  std::vector<Probe> probes;
  cplx calibration = 0.0;        // M ~ calibration * eps^2 * mu_hat
  OrderPolicy policy = OrderPolicy::Full;
  SolverOptions solver;
  int realizations = 1;
  RngStream rng{0, Purpose::WhiteNoise, 0};
};

struct ScanRow {
  double K = 0.0;
  double eps = 0.0;
  double rms_error = 0.0;  // RMS over probes and realizations of |M/eps^2 - c mu_hat|
  // Same RMS of |M - M1|/eps^2 with M1 the first-order measurement on the same
  // realization: the nonlinear share of the error. Zero under the first-order policy.
  double nonlinear_rms = 0.0;
};
struct ScanTable {
  std::vector<ScanRow> rows;
  double eps_slope = 0.0;  // of nonlinear_rms at the largest K
  double K_slope = 0.0;    // of rms_error at the smallest eps
};

// Realization r reuses the stochastic factor of stream rng.substream(r) for every eps,
// so q = eps sqrt(mu) Y_r + q0. The model's own epsilon is ignored.
ScanTable empirical_error_scan(std::shared_ptr<const RandomFieldModel> model, const ScanSettings& settings);

}  // namespace bsl
