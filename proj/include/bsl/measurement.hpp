#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "bsl/forward.hpp"
#include "bsl/random_field.hpp"

namespace bsl {

enum class OrderPolicy { FirstOrder, Full };
std::string to_string(OrderPolicy p);  // "first-order-only" | "full"
OrderPolicy parse_order_policy(const std::string& s);

enum class BandRule { Midpoint, Trapezoid };
std::string to_string(BandRule r);
BandRule parse_band_rule(const std::string& s);

// Frequency band [K, 2K] with its quadrature.
struct BandSpec {
  double K = 0.0;
  int num_nodes = 0;
  BandRule rule = BandRule::Midpoint;

  double node_spacing() const { return K / num_nodes; }
};

// ceil(4 K L / pi): resolves exp(2ik theta.x) over a domain of diameter L.
int min_band_nodes(double K, double diameter);
// num_nodes = 0 picks the minimum. Throws InvalidArgument below the minimum.
BandSpec make_band(double K, double diameter, int num_nodes = 0, BandRule rule = BandRule::Midpoint);

// Nodes and weights of (1/K) int_K^{2K} f dk.
struct BandQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
BandQuadrature band_quadrature(const BandSpec& band);

// Backscattering amplitude u_inf(k, theta, -theta) with memoization.
// Thread-safe; concrete providers only implement evaluate().
class FarFieldProvider {
 public:
  virtual ~FarFieldProvider() = default;
  cplx operator()(double k, const Vec& theta);
  virtual OrderPolicy policy() const = 0;
  std::size_t evaluations() const;

 protected:
  virtual cplx evaluate(double k, const Vec& theta) = 0;

 private:
  mutable std::mutex mutex_;
  std::map<std::array<long long, 4>, cplx> memo_;
};

class Born1Provider : public FarFieldProvider {
 public:
  explicit Born1Provider(ScalarField q) : q_(std::move(q)) {}
  OrderPolicy policy() const override { return OrderPolicy::FirstOrder; }

 protected:
  cplx evaluate(double k, const Vec& theta) override { return born1_backscatter(q_, k, theta); }

 private:
  ScalarField q_;
};

// One Lippmann-Schwinger solve per k. Divergence propagates as DivergedError.
class FullSolveProvider : public FarFieldProvider {
 public:
  FullSolveProvider(ScalarField q, SolverOptions options = {})
      : q_(std::move(q)), options_(options), cache_(q_.grid()) {}
  OrderPolicy policy() const override { return OrderPolicy::Full; }

 protected:
  cplx evaluate(double k, const Vec& theta) override;

 private:
  ScalarField q_;
  SolverOptions options_;
  KernelCache cache_;
};

// Far field of the j-th Born term alone.
class BornTermProvider : public FarFieldProvider {
 public:
  BornTermProvider(ScalarField q, int j) : q_(std::move(q)), j_(j), cache_(q_.grid()) {}
  OrderPolicy policy() const override { return OrderPolicy::Full; }

 protected:
  cplx evaluate(double k, const Vec& theta) override;

 private:
  ScalarField q_;
  int j_;
  KernelCache cache_;
};

// Backscattering sample with solver bookkeeping, as written to the far-field CSV.
struct ForwardRecord {
  double k = 0.0;
  Vec theta;
  cplx value;
  int iterations = 0;
  bool converged = true;
  std::string status = "ok";
};
ForwardRecord forward_backscatter(const ScalarField& q, double k, const Vec& theta, OrderPolicy policy,
                                  KernelCache& cache, const SolverOptions& options = {});

// (1/K) int_K^{2K} k^m u(k) conj(u(k + tau)) dk by the band rule.
cplx band_average(FarFieldProvider& provider, const BandSpec& band, double tau, const Vec& theta, double order_m);

struct Probe {
  double tau = 0.0;
  Vec theta;
};

struct MeasurementEntry {
  double tau = 0.0;
  Vec theta;
  cplx value;
  double K = 0.0;
  OrderPolicy policy = OrderPolicy::FirstOrder;
  int num_nodes = 0;
};

struct MeasurementTable {
  double order_m = 0.0;
  std::vector<MeasurementEntry> entries;
};

MeasurementTable measure(FarFieldProvider& provider, const std::vector<BandSpec>& bands,
                         const std::vector<Probe>& probes, double order_m);

void write_measurement_csv(const std::filesystem::path& path, const MeasurementTable& table, int dim);
MeasurementTable read_measurement_csv(const std::filesystem::path& path, double order_m);

// E[<Z, f> conj <Z, g>] with Z = q - Eq and <Z, f> = h^n sum Z f, from the exact
// discrete covariance of the model.
cplx stochastic_pair_expectation(const RandomFieldModel& model, const Eigen::ArrayXcd& f, const Eigen::ArrayXcd& g);

// E(u1_inf(k) conj u1_inf(k + tau)) for backscattering along theta.
cplx expected_first_order_correlation(const RandomFieldModel& model, double k, double tau, const Vec& theta);
// Band average of the above with the k^m weight; the noiseless first-order measurement.
cplx expected_band_average(const RandomFieldModel& model, const BandSpec& band, double tau, const Vec& theta);
// Same over many probes; probes sharing a direction reuse node transforms.
std::vector<cplx> expected_band_averages(const RandomFieldModel& model, const BandSpec& band,
                                         const std::vector<Probe>& probes);

// E[(X^2 - 1)(Y^2 - 1)] for correlated standard Gaussian pairs against 2 rho^2.
struct PairCheckRow {
  double rho = 0.0;
  double estimate = 0.0;
  double expected = 0.0;
  double deviation = 0.0;  // relative, absolute when |rho| < 0.1
};
struct PairCheck {
  std::vector<PairCheckRow> rows;
  double worst = 0.0;
};
PairCheck gaussian_pair_check(const std::vector<double>& rho_grid, int samples, const RngStream& rng);
// E X^4 / (E X^2)^2 for standard Gaussian draws.
double gaussian_fourth_moment_ratio(int samples, const RngStream& rng);

// Monte Carlo and exact second moments of U = Re W, V = Im W with
// W_k = <q - Eq, exp(2ik theta.y)> at k and k + r.
struct DecayRow {
  double r = 0.0;
  double uu = 0.0, uu_se = 0.0, uu_exact = 0.0;
  double vv = 0.0, vv_se = 0.0, vv_exact = 0.0;
  double uv = 0.0, uv_se = 0.0, uv_exact = 0.0;
};
struct DecayTable {
  double k = 0.0;
  std::vector<DecayRow> rows;
  // Log-log slope of |E W_k conj W_{k+r}| (exact) over r >= pi / L.
  double tail_slope = 0.0;
};
DecayTable covariance_decay_probe(std::shared_ptr<const RandomFieldModel> model, double k,
                                  const std::vector<double>& r_values, const Vec& theta, int ensemble,
                                  const RngStream& rng);

// (1/T) int_T^{2T} X_t dt on sample paths of a scalar process.
struct ProcessSpec {
  enum class Kind { Zero, Constant, MovingAverage } kind = Kind::MovingAverage;
  double window = 1.0;  // moving-average window of white noise
  double level = 1.0;   // value of the constant process
  double dt = 0.05;
};
struct ErgodicRow {
  double T = 0.0;
  double single_path = 0.0;  // average on path 0
  double rms = 0.0;          // RMS over paths
};
struct ErgodicTable {
  std::vector<ErgodicRow> rows;
  double rms_slope = 0.0;  // log-log slope of rms against T
};
ErgodicTable ergodic_average_demo(const ProcessSpec& spec, const std::vector<double>& T_values, int paths,
                                  const RngStream& rng);

// (1/K) int_K^{2K} k^m |u2_inf|^2 dk per band on one realization.
struct NegligibilityRow {
  double K = 0.0;
  double value = 0.0;
};
std::vector<NegligibilityRow> second_order_negligibility_probe(const ScalarField& q, const std::vector<BandSpec>& bands,
                                                               const Vec& theta, double order_m);

}  // namespace bsl
