#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "bsl/grid.hpp"
#include "bsl/rng.hpp"
#include "bsl/stats.hpp"

namespace bsl {

// a * exp(1 - 1/(1 - |x-c|^2/rho^2)) on |x - c| < rho, zero elsewhere.
struct Bump {
  Vec center;
  double radius = 0.0;
  double amplitude = 0.0;
};

ScalarField bump_sum(const GridSpec& grid, const std::vector<Bump>& bumps);

struct LocalStrength {
  ScalarField mu;
  double support_radius = 0.0;
  std::vector<Bump> bumps;
};

// Every bump must sit inside the domain ball and have nonnegative amplitude.
LocalStrength make_local_strength(const GridSpec& grid, std::vector<Bump> bumps);

enum class ModelKind { BesselWhiteNoise, FractionalBrownian };

struct RandomFieldModel {
  GridSpec grid;
  double order_m = 0.0;
  LocalStrength strength;
  ScalarField mean_q0;
  ModelKind kind = ModelKind::BesselWhiteNoise;
  double hurst = 0.0;
  Vec anchor;
  double epsilon = 1.0;
  double corr_length = 1.0;
  // Set for fBm with H > 1/2 (outside the strict order range).
  bool hurst_warning = false;
};

// q = eps sqrt(mu) Q(x/ell) + q0 with Q = (I - Delta)^{-m/4} W.
RandomFieldModel make_bessel_model(const GridSpec& grid, double order_m, LocalStrength strength, ScalarField q0,
                                   double epsilon, double corr_length = 1.0);
// q = eps sqrt(mu) X_H + q0, X_H anchored at `anchor`, order m = n + 2H.
RandomFieldModel make_fbm_model(const GridSpec& grid, double hurst, LocalStrength strength, ScalarField q0,
                                const Vec& anchor, double epsilon = 1.0);
void validate_model(const RandomFieldModel& model);

struct PotentialRealization {
  ScalarField q;
  std::shared_ptr<const RandomFieldModel> model;
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::WhiteNoise;
  std::uint64_t index = 0;

  ScalarField stochastic_part() const { return q - model->mean_q0; }
};

// i.i.d. N(0, h^{-n}) samples.
ScalarField sample_white_noise(const GridSpec& grid, RngStream& rng);
// Spectral multiplier (1 + |xi|^2)^{-order/2}; real input gives real output.
ScalarField apply_bessel_filter(const ScalarField& field, double order);

// Stationary factor Y of a model, written as Y = F^{-1}[amplitude * F Z] + nugget_std * Z'
// with Z, Z' independent unit-variance white noise; fBm additionally subtracts Y(anchor).
struct StationarySpectrum {
  Eigen::ArrayXd amplitude;
  double nugget_std = 0.0;
  bool anchored = false;
  std::size_t anchor_index = 0;
};
StationarySpectrum stationary_spectrum(const RandomFieldModel& model);

// Spectral fBm with power spectrum C_H |xi|^{-(n+2H)} normalized so that
// E|X(z1) - X(z2)|^2 = |z1 - z2|^{2H}. Power beyond the lattice cube is added as
// an independent per-sample nugget of matching variance.
ScalarField sample_fbm(const GridSpec& grid, double hurst, const Vec& anchor, RngStream& rng);
double fbm_spectral_constant(int dim, double hurst);
double fbm_nugget_variance(const GridSpec& grid, double hurst);

PotentialRealization sample_potential(std::shared_ptr<const RandomFieldModel> model, RngStream rng);

// Exact covariance of the discrete model between two grid samples.
double exact_point_covariance(const RandomFieldModel& model, std::size_t i, std::size_t j);
// Covariance of the stationary factor as a function of lattice offset (wrapped layout).
Eigen::ArrayXd stationary_covariance(const RandomFieldModel& model);

// Leading singular coefficient of the covariance near the diagonal:
// K(x, y) ~ c mu(x) |x-y|^{m-n} for m != n, c mu(x) log|x-y| for m = n.
double covariance_singular_coefficient(int dim, double order_m);

struct SeparationEstimate {
  double separation = 0.0;
  double value = 0.0;
  double standard_error = 0.0;
};

struct CovarianceEstimate {
  std::vector<SeparationEstimate> pairs;
  Vec reference_point;
  int ensemble_size = 0;
};

// (q - Eq) at the listed samples; one row per ensemble member (stream index = row).
Eigen::MatrixXd sample_point_values(std::shared_ptr<const RandomFieldModel> model,
                                    const std::vector<std::size_t>& indices, int ensemble, const RngStream& base);

// K_q(x_ref, x_ref + r e_axis). Separations are snapped to multiples of h.
CovarianceEstimate estimate_covariance(std::shared_ptr<const RandomFieldModel> model, const Vec& x_ref,
                                       const std::vector<double>& separations, int ensemble_size,
                                       const RngStream& rng, int axis = 0);
// E|q(x_ref) - q(x_ref + r e_axis)|^2 with the same sampling scheme.
CovarianceEstimate estimate_structure_function(std::shared_ptr<const RandomFieldModel> model, const Vec& x_ref,
                                               const std::vector<double>& separations, int ensemble_size,
                                               const RngStream& rng, int axis = 0);

// Slope of K against log r over [r_min, r_max].
LineFit fit_log_coefficient(const CovarianceEstimate& estimate, double r_min, double r_max);
// Log-log slope of the estimate over [r_min, r_max].
LineFit fit_power_law(const CovarianceEstimate& estimate, double r_min, double r_max);

struct SpectralDecay {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double xi_min = 0.0;
  double xi_max = 0.0;
  int bins = 0;
};

// Log-log slope of the radially averaged power spectrum over [8 pi/R_box, pi/(4h)].
SpectralDecay spectral_decay_exponent(const ScalarField& field);
// Same, applied to q - q0.
SpectralDecay spectral_decay_diagnostic(const PotentialRealization& realization);

struct CorrelationLength {
  double raw_ratio = 0.0;  // sum K h^n / K(0)
  double length = 0.0;     // |raw_ratio|^{1/n}
  bool sign_change = false;
};
// Correlation length of a covariance sampled on lattice offsets (wrapped layout).
CorrelationLength correlation_length(const GridSpec& grid, const Eigen::ArrayXd& covariance);

}  // namespace bsl
