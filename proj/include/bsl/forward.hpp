#pragma once

#include <Eigen/Core>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "bsl/grid.hpp"

namespace bsl {

struct PlaneWave {
  double k = 0.0;
  Vec theta;
};

// Validates k > 0 and |theta| = 1 within 1e-12.
PlaneWave make_plane_wave(double k, const Vec& theta);

// Outgoing fundamental solution of Delta + k^2 (with (Delta + k^2) Phi = -delta):
// 3D e^{ikr}/(4 pi r), 2D (i/4) H0^(1)(kr).
cplx helmholtz_fundamental(int dim, double k, double r);
// Far-field constant paired with the fundamental solution: 1/(4 pi) or e^{i pi/4}/sqrt(8 pi).
cplx far_field_constant(int dim);
// Mean of the fundamental solution over the cube [-h/2, h/2]^n.
cplx green_cell_average(int dim, double k, double h);
// C^2 roll-off: 1 below 0.9 T, 0 beyond T.
double kernel_window(double r, double truncation);

// Truncated, singularity-corrected kernel on offsets, kept in spectral form
// scaled so that a pointwise product and inverse FFT give h^n (Phi * f).
class GreenKernel {
 public:
  GreenKernel(const GridSpec& grid, double k);

  const GridSpec& grid() const { return grid_; }
  double k() const { return k_; }
  double truncation_radius() const { return 2.0 * grid_.domain_radius; }
  const Eigen::ArrayXcd& spectrum() const { return spectrum_; }
  // Kernel samples on the offset lattice: entry j holds Phi at offset (signed j) * h.
  Eigen::ArrayXcd offset_samples() const;

 private:
  GridSpec grid_;
  double k_;
  Eigen::ArrayXcd spectrum_;
};

// Kernel samples laid out on the physical grid (value at coordinate x is Phi(x)).
ScalarField green_kernel(const GridSpec& grid, double k);

// Bounded cache of kernels keyed by k; safe to share across threads.
class KernelCache {
 public:
  explicit KernelCache(const GridSpec& grid, std::size_t capacity = 8) : grid_(grid), capacity_(capacity) {}
  std::shared_ptr<const GreenKernel> get(double k);
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::map<double, std::shared_ptr<const GreenKernel>> entries_;
  std::vector<double> order_;
};

// h^n (Phi * f) restricted to inputs supported in |x| <= R_D. Samples outside the
// ball must be below support_tol * max|f| (ContractError otherwise) and are zeroed.
ScalarField apply_resolvent(const ScalarField& field, const GreenKernel& kernel, double support_tol = 1e-12);

// exp(i k theta . x) on the grid.
ScalarField plane_wave_field(const GridSpec& grid, const PlaneWave& wave);

// u_j = R(q u_{j-1}), u_0 the plane wave.
ScalarField born_term(const ScalarField& q, const PlaneWave& wave, int j, const GreenKernel& kernel);

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int born_store = 3;
};

struct ScatteringSolution {
  PlaneWave incident;
  std::vector<ScalarField> born_terms;  // u_1 .. u_J
  ScalarField scattered;                // u_sc
  ScalarField residual_field;           // u_sc minus the stored partial sum
  int iterations = 0;
  double contraction_ratio = 0.0;       // |u_j| / |u_{j-1}| at the last iterate
  double fixed_point_residual = 0.0;    // |u_sc - R(q (u0 + u_sc))| / |u_sc|, recomputed after the loop
  bool converged = false;
};

// Neumann iteration u <- R(q (u0 + u)) from u = 0, i.e. partial sums of the Born series.
// Throws DivergedError when the ratio stays >= 1.
ScatteringSolution solve_lippmann_schwinger(const ScalarField& q, const PlaneWave& wave, const GreenKernel& kernel,
                                            const SolverOptions& options = {});

struct ScatteringOrder {
  enum class Kind { Born, Full } kind = Kind::Full;
  int j = 0;
  static ScatteringOrder born(int j) { return {Kind::Born, j}; }
  static ScatteringOrder full() { return {Kind::Full, 0}; }
};

struct FarFieldSample {
  double k = 0.0;
  Vec theta;
  Vec observation;
  cplx value;
  ScatteringOrder order;
};

// sum_y exp(i kappa . y) f(y) over the grid, factorized along axes.
cplx plane_wave_sum(const Eigen::ArrayXcd& values, const GridSpec& grid, const Vec& wavevector);

// c_n h^n sum exp(-i k obs . y) q(y) (exp(i k theta . y) + scattered(y)).
// A zero `scattered` gives the first Born amplitude, u_sc gives the full one.
FarFieldSample far_field(const ScalarField& q, const PlaneWave& wave, const ScalarField& scattered,
                         const Vec& observation, ScatteringOrder order);
// Far field of the j-th Born term: c_n h^n sum exp(-i k obs . y) q(y) u_{j-1}(y).
FarFieldSample far_field_of_term(const ScalarField& q, const PlaneWave& wave, const ScalarField& previous_term,
                                 const Vec& observation, int j);
// First Born backscattering amplitude c_n h^n sum exp(2ik theta . y) q(y).
cplx born1_backscatter(const ScalarField& q, double k, const Vec& theta);

// Geometric-mean ratio |u_j|/|u_{j-1}| over the last four of `iterations` Born terms.
double contraction_ratio(const ScalarField& q, const PlaneWave& wave, const GreenKernel& kernel, int iterations = 16);

// Smallest k in the ascending grid with contraction ratio below 0.9; +inf if none.
double estimate_k0(const ScalarField& q, const Vec& direction, const std::vector<double>& k_grid, KernelCache& cache);

}  // namespace bsl
