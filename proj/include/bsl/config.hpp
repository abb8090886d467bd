#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsl/measurement.hpp"
#include "bsl/scaling.hpp"

namespace bsl {

// One experiment, loaded from a single JSON file. Key schema (defaults in brackets):
//
//   grid:     dim, points_per_axis, box_half_width, domain_radius
//   model:    kind ("bessel" | "fbm"), m (bessel), hurst (fbm), epsilon,
//             corr_length [1], anchor [origin], mu [bump list], q0 [[]]
//             where a bump is {center: [..], radius, amplitude}
//   bands:    [{K, nodes [minimum], rule ["midpoint"]}]
//   probes:   {list: [{tau, theta: [..]}]} or {xi_max, n_angles [minimum]}
//   order_policy ["full"], solver {tol [1e-10], max_iter [200]}
//   realizations [1], seed, output_dir ["out"]
//   calibration {radius [domain_radius / 2], taus [[0, 0.25, 0.5]]}
//   regime {K0, ell0, L0 [1], beta1 [1.5], beta2 [0.5], margin [10]}
//
// Errors are ConfigError naming the offending key, e.g. "model.m".
struct ExperimentConfig {
  GridSpec grid;
  ModelKind kind = ModelKind::BesselWhiteNoise;
  double order_m = 0.0;
  double hurst = 0.0;
  double epsilon = 0.0;
  double corr_length = 1.0;
  Vec anchor;
  std::vector<Bump> mu;
  std::vector<Bump> q0;
  std::vector<BandSpec> bands;
  std::vector<Probe> probe_list;  // explicit probes; empty when generated
  double xi_max = 0.0;
  int n_angles = 0;
  OrderPolicy policy = OrderPolicy::Full;
  SolverOptions solver;
  int realizations = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  double calibration_radius = 0.0;
  std::vector<double> calibration_taus{0.0, 0.25, 0.5};
  ScalingConfig regime;  // K, ell, eps, L, n, m are filled from the fields above
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON (sorted keys, all defaults explicit); the manifest hashes this.
std::string to_json(const ExperimentConfig& config);

// Two-dimensional linear-regime desk experiment.
ExperimentConfig default_config();

RandomFieldModel build_model(const ExperimentConfig& config);
LocalStrength build_strength(const ExperimentConfig& config);
// Generated polar probes use tau steps equal to the node spacing of the first band,
// so shifted nodes k + tau coincide with band nodes.
std::vector<Probe> build_probes(const ExperimentConfig& config);
// Reference model for calibration: same statistics, centered bump of calibration_radius.
RandomFieldModel build_calibration_model(const ExperimentConfig& config);

}  // namespace bsl
