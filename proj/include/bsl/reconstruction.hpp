#pragma once

#include <optional>
#include <vector>

#include "bsl/measurement.hpp"

namespace bsl {

// (2 pi)^{-n/2} h^n sum mu(x) exp(-i xi.x): the spectrum of a grid function at any xi.
cplx fourier_at(const ScalarField& f, const Vec& xi);

struct Calibration {
  cplx constant;             // M ~ constant * eps^2 * mu_hat(2 tau theta)
  double analytic = 0.0;     // leading-order prediction of the same constant
  double fit_residual = 0.0; // relative misfit of the least-squares line
};

// Least-squares ratio of the noiseless band-averaged first-order measurement to
// eps^2 mu_hat(2 tau theta) over the reference probes of a model with known mu.
// Throws IllConditionedError when every reference mu_hat is negligible.
Calibration calibrate_constant(const RandomFieldModel& model, const BandSpec& band, const std::vector<Probe>& references);
// Large-k limit of k^m E|u1_inf|^2 / mu_hat(0), per model kind.
double analytic_calibration(const RandomFieldModel& model);

struct PolarSample {
  double tau = 0.0;
  Vec theta;
  cplx value;
};

// Samples of mu_hat at xi = 2 tau theta, closed under theta -> -theta with conjugation.
struct PolarSampleSet {
  int dim = 2;
  std::vector<PolarSample> samples;
};

// mu_hat = M / (constant * eps^2) on the entries of `table` measured at band start K
// (K <= 0 selects the largest K present), then conjugate completion.
PolarSampleSet recover_mu_hat(const MeasurementTable& table, cplx constant, double epsilon, double K = 0.0);

// Probe set on a polar lattice: tau = i tau_max / n_tau (i = 0..n_tau) and directions
// covering half the sphere of directions; completion supplies the other half.
// 2D: n_angles directions on [0, pi). 3D: n_angles azimuths on [0, 2 pi) times
// n_angles / 2 polar angles on (0, pi/2).
std::vector<Probe> polar_probes(int dim, double tau_max, int n_tau, int n_angles);
// Minimum angular count for a polar set reaching xi_max.
int required_angles(double xi_max, double domain_radius);

struct ReconstructionResult {
  ScalarField mu_recovered;  // clipped at zero
  ScalarField mu_unclipped;  // real part before clipping
  double relative_l2_error = 0.0;
  double relative_l2_error_unclipped = 0.0;
  double sup_error = 0.0;
  double max_imaginary = 0.0;  // largest |Im| of the inverse transform
  double support_mass_fraction = 0.0;
  cplx calibration_constant;
  ScalarField residual;  // recovered - truth (zero without truth)
  double xi_max = 0.0;
};

// Polar -> Cartesian by bilinear interpolation in (|xi|, angle) (trilinear in 3D),
// zero beyond xi_max, inverse transform, real part, clip. Errors against `truth`.
ReconstructionResult invert_mu(const PolarSampleSet& polar, const GridSpec& grid,
                               const std::optional<LocalStrength>& truth = std::nullopt);

}  // namespace bsl
