#include "bsl/measurement.hpp"

#include <cmath>
#include <exception>
#include <algorithm>

#include "bsl/csv.hpp"
#include "bsl/errors.hpp"
#include "bsl/fft.hpp"
#include "bsl/stats.hpp"

namespace bsl {

namespace {

const char* const kAxisNames[3] = {"theta_x", "theta_y", "theta_z"};

cplx grid_pairing(const GridSpec& g, const Eigen::ArrayXcd& q, const Eigen::ArrayXcd& f) {
  return g.cell_volume() * (q * f).sum();
}

Eigen::ArrayXcd plane_wave_values(const GridSpec& g, const Vec& wavevector) {
  return plane_wave_field(g, {wavevector.norm(), wavevector.norm() > 0 ? Vec(wavevector / wavevector.norm()) : wavevector})
      .values();
}

cplx ordered_sum(const std::vector<cplx>& terms) {
  std::vector<double> re(terms.size()), im(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    re[i] = terms[i].real();
    im[i] = terms[i].imag();
  }
  return {pairwise_sum(re), pairwise_sum(im)};
}

}  // namespace

std::string to_string(OrderPolicy p) { return p == OrderPolicy::FirstOrder ? "first-order-only" : "full"; }

OrderPolicy parse_order_policy(const std::string& s) {
  if (s == "first-order-only") return OrderPolicy::FirstOrder;
  if (s == "full") return OrderPolicy::Full;
  throw InvalidArgument("unknown order policy '" + s + "'");
}

std::string to_string(BandRule r) { return r == BandRule::Midpoint ? "midpoint" : "trapezoid"; }

BandRule parse_band_rule(const std::string& s) {
  if (s == "midpoint") return BandRule::Midpoint;
  if (s == "trapezoid") return BandRule::Trapezoid;
  throw InvalidArgument("unknown band rule '" + s + "'");
}

int min_band_nodes(double K, double diameter) { return static_cast<int>(std::ceil(4.0 * K * diameter / pi)); }

BandSpec make_band(double K, double diameter, int num_nodes, BandRule rule) {
  if (!(K > 0.0)) throw InvalidArgument("band start K must be positive");
  if (!(diameter > 0.0)) throw InvalidArgument("domain diameter must be positive");
  const int lo = min_band_nodes(K, diameter);
  if (num_nodes == 0) num_nodes = lo;
  if (num_nodes < lo)
    throw InvalidArgument("band at K = " + format_double(K) + " needs at least " + std::to_string(lo) + " nodes");
  return {K, num_nodes, rule};
}

BandQuadrature band_quadrature(const BandSpec& band) {
  BandQuadrature q;
  const double d = band.node_spacing();
  if (band.rule == BandRule::Midpoint) {
    for (int i = 0; i < band.num_nodes; ++i) {
      q.nodes.push_back(band.K + (i + 0.5) * d);
      q.weights.push_back(d / band.K);
    }
  } else {
    for (int i = 0; i <= band.num_nodes; ++i) {
      q.nodes.push_back(band.K + i * d);
      q.weights.push_back((i == 0 || i == band.num_nodes ? 0.5 : 1.0) * d / band.K);
    }
  }
  return q;
}

cplx FarFieldProvider::operator()(double k, const Vec& theta) {
  std::array<long long, 4> key{std::llround(k * 1e9), 0, 0, 0};
  for (int a = 0; a < theta.size(); ++a) key[a + 1] = std::llround(theta[a] * 1e12);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const cplx v = evaluate(k, theta);
  std::lock_guard lock(mutex_);
  memo_.emplace(key, v);
  return v;
}

std::size_t FarFieldProvider::evaluations() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

cplx FullSolveProvider::evaluate(double k, const Vec& theta) {
  return forward_backscatter(q_, k, theta, OrderPolicy::Full, cache_, options_).value;
}

cplx BornTermProvider::evaluate(double k, const Vec& theta) {
  const auto wave = make_plane_wave(k, theta);
  const ScalarField prev = j_ == 1 ? plane_wave_field(q_.grid(), wave) : born_term(q_, wave, j_ - 1, *cache_.get(k));
  return far_field_of_term(q_, wave, prev, -theta, j_).value;
}

ForwardRecord forward_backscatter(const ScalarField& q, double k, const Vec& theta, OrderPolicy policy,
                                  KernelCache& cache, const SolverOptions& options) {
  ForwardRecord r;
  r.k = k;
  r.theta = theta;
  const auto wave = make_plane_wave(k, theta);
  if (policy == OrderPolicy::FirstOrder) {
    r.value = born1_backscatter(q, k, theta);
    r.iterations = 1;
    return r;
  }
  const auto sol = solve_lippmann_schwinger(q, wave, *cache.get(k), options);
  r.value = far_field(q, wave, sol.scattered, -theta, ScatteringOrder::full()).value;
  r.iterations = sol.iterations;
  r.converged = sol.converged;
  if (!sol.converged) r.status = "max_iter";
  return r;
}

cplx band_average(FarFieldProvider& provider, const BandSpec& band, double tau, const Vec& theta, double order_m) {
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  const auto quad = band_quadrature(band);
  std::vector<double> ks = quad.nodes;
  if (tau > 0.0)
    for (double k : quad.nodes) ks.push_back(k + tau);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < ks.size(); ++i) {
    try {
      provider(ks[i], theta);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<cplx> terms(quad.nodes.size());
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double k = quad.nodes[i];
    terms[i] = quad.weights[i] * std::pow(k, order_m) * provider(k, theta) * std::conj(provider(k + tau, theta));
  }
  return ordered_sum(terms);
}

MeasurementTable measure(FarFieldProvider& provider, const std::vector<BandSpec>& bands,
                         const std::vector<Probe>& probes, double order_m) {
  MeasurementTable t;
  t.order_m = order_m;
  for (const auto& band : bands)
    for (const auto& p : probes)
      t.entries.push_back({p.tau, p.theta, band_average(provider, band, p.tau, p.theta, order_m), band.K,
                           provider.policy(), band.num_nodes});
  return t;
}

void write_measurement_csv(const std::filesystem::path& path, const MeasurementTable& table, int dim) {
  std::vector<std::string> header{"tau"};
  for (int a = 0; a < dim; ++a) header.emplace_back(kAxisNames[a]);
  for (const char* c : {"K", "order_policy", "re", "im", "N_k"}) header.emplace_back(c);
  CsvWriter w(path, header);
  for (const auto& e : table.entries) {
    w << e.tau;
    for (int a = 0; a < dim; ++a) w << e.theta[a];
    w << e.K << to_string(e.policy) << e.value.real() << e.value.imag() << e.num_nodes;
    w.end_row();
  }
}

MeasurementTable read_measurement_csv(const std::filesystem::path& path, double order_m) {
  const CsvTable csv = read_csv(path);
  MeasurementTable t;
  t.order_m = order_m;
  auto has = [&](const char* name) { return std::find(csv.header.begin(), csv.header.end(), name) != csv.header.end(); };
  for (const char* c : {"tau", "theta_x", "theta_y", "K", "order_policy", "re", "im", "N_k"})
    if (!has(c)) throw InvalidArgument("measurement table " + path.string() + " lacks column " + c);
  const int dim = has("theta_z") ? 3 : 2;
  const int ct = csv.column("tau"), ck = csv.column("K"), cp = csv.column("order_policy"), cr = csv.column("re"),
            ci = csv.column("im"), cn = csv.column("N_k");
  for (const auto& row : csv.rows) {
    MeasurementEntry e;
    e.tau = std::stod(row[ct]);
    e.theta.resize(dim);
    for (int a = 0; a < dim; ++a) e.theta[a] = std::stod(row[csv.column(kAxisNames[a])]);
    e.K = std::stod(row[ck]);
    e.policy = parse_order_policy(row[cp]);
    e.value = {std::stod(row[cr]), std::stod(row[ci])};
    e.num_nodes = std::stoi(row[cn]);
    t.entries.push_back(e);
  }
  return t;
}

cplx stochastic_pair_expectation(const RandomFieldModel& model, const Eigen::ArrayXcd& f, const Eigen::ArrayXcd& g) {
  const GridSpec& grid = model.grid;
  const auto spec = stationary_spectrum(model);
  const Eigen::ArrayXd w = model.epsilon * model.strength.mu.real_part().sqrt();
  Eigen::ArrayXcd a = w * f, b = w * g;
  if (spec.anchored) {
    const auto z = static_cast<Eigen::Index>(spec.anchor_index);
    const cplx sa = a.sum(), sb = b.sum();
    a[z] -= sa;
    b[z] -= sb;
  }
  cplx nugget = 0.0;
  if (spec.nugget_std > 0.0) nugget = spec.nugget_std * spec.nugget_std * (a * b.conjugate()).sum();
  fft_inverse_inplace(a, grid);
  fft_inverse_inplace(b, grid);
  const cplx smooth = (spec.amplitude.square() * a * b.conjugate()).sum();
  const double hn = grid.cell_volume();
  return hn * hn * (smooth + nugget);
}

namespace {

// Separable exp(i kappa.x) over the grid.
Eigen::ArrayXcd separable_wave(const GridSpec& g, const Vec& kappa) {
  const int n = g.points_per_axis;
  const Eigen::ArrayXd x = g.axis_coordinates();
  std::array<Eigen::ArrayXcd, 3> p;
  for (int a = 0; a < g.dim; ++a) {
    p[a].resize(n);
    for (int i = 0; i < n; ++i) p[a][i] = std::polar(1.0, kappa[a] * x[i]);
  }
  Eigen::ArrayXcd out(static_cast<Eigen::Index>(g.size()));
  Eigen::Index idx = 0;
  if (g.dim == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[idx++] = p[0][i] * p[1][j];
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx ij = p[0][i] * p[1][j];
        for (int l = 0; l < n; ++l) out[idx++] = ij * p[2][l];
      }
  }
  return out;
}

// Per-model data for exact first-order expectations. A projection at wavenumber k
// holds the transformed weighted plane wave and the mean-field pairing.
class ExpectationEngine {
 public:
  struct Projection {
    Eigen::ArrayXcd raw;  // kept only when a nugget is present
    Eigen::ArrayXcd hat;
    cplx mean = 0.0;
  };

  explicit ExpectationEngine(const RandomFieldModel& model)
      : model_(model),
        spec_(stationary_spectrum(model)),
        weight_(model.epsilon * model.strength.mu.real_part().sqrt()),
        power_(spec_.amplitude.square()),
        has_mean_(model.mean_q0.max_abs() > 0.0),
        c2_(std::norm(far_field_constant(model.grid.dim))) {}

  Projection project(double k, const Vec& theta) const {
    if (k < 0.5) throw InvalidArgument("expected correlation needs k >= 1/2");
    const GridSpec& g = model_.grid;
    const Eigen::ArrayXcd f = separable_wave(g, 2.0 * k * theta);
    Projection p;
    if (has_mean_) p.mean = grid_pairing(g, model_.mean_q0.values(), f);
    p.hat = weight_ * f;
    if (spec_.anchored) {
      const cplx s = p.hat.sum();
      p.hat[static_cast<Eigen::Index>(spec_.anchor_index)] -= s;
    }
    if (spec_.nugget_std > 0.0) p.raw = p.hat;
    fft_inverse_inplace(p.hat, g);
    return p;
  }

  // E(u1(k) conj u1(k')) from the two projections.
  cplx correlate(const Projection& a, const Projection& b) const {
    const double hn = model_.grid.cell_volume();
    cplx s = (power_ * a.hat * b.hat.conjugate()).sum();
    if (spec_.nugget_std > 0.0) s += spec_.nugget_std * spec_.nugget_std * (a.raw * b.raw.conjugate()).sum();
    return c2_ * (hn * hn * s + a.mean * std::conj(b.mean));
  }

 private:
  const RandomFieldModel& model_;
  StationarySpectrum spec_;
  Eigen::ArrayXd weight_;
  Eigen::ArrayXd power_;
  bool has_mean_;
  double c2_;
};

long long k_key(double k) { return std::llround(k * 1e9); }

}  // namespace

cplx expected_first_order_correlation(const RandomFieldModel& model, double k, double tau, const Vec& theta) {
  const ExpectationEngine e(model);
  return e.correlate(e.project(k, theta), e.project(k + tau, theta));
}

std::vector<cplx> expected_band_averages(const RandomFieldModel& model, const BandSpec& band,
                                         const std::vector<Probe>& probes) {
  const ExpectationEngine engine(model);
  const auto quad = band_quadrature(band);
  const std::size_t nk = quad.nodes.size();
  std::vector<cplx> out(probes.size());
  std::vector<bool> done(probes.size(), false);
  for (std::size_t first = 0; first < probes.size(); ++first) {
    if (done[first]) continue;
    const Vec theta = probes[first].theta;
    // Node projections for this direction, shared by every probe along it.
    std::vector<ExpectationEngine::Projection> node(nk);
    std::map<long long, std::size_t> node_index;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < nk; ++i) node[i] = engine.project(quad.nodes[i], theta);
    for (std::size_t i = 0; i < nk; ++i) node_index[k_key(quad.nodes[i])] = i;
    for (std::size_t p = first; p < probes.size(); ++p) {
      if (done[p] || (probes[p].theta - theta).norm() > 1e-12) continue;
      const double tau = probes[p].tau;
      std::vector<cplx> terms(nk);
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < nk; ++i) {
        const double k = quad.nodes[i];
        const auto it = node_index.find(k_key(k + tau));
        const cplx e = it != node_index.end() ? engine.correlate(node[i], node[it->second])
                                              : engine.correlate(node[i], engine.project(k + tau, theta));
        terms[i] = quad.weights[i] * std::pow(k, model.order_m) * e;
      }
      out[p] = ordered_sum(terms);
      done[p] = true;
    }
  }
  return out;
}

cplx expected_band_average(const RandomFieldModel& model, const BandSpec& band, double tau, const Vec& theta) {
  return expected_band_averages(model, band, {{tau, theta}})[0];
}

PairCheck gaussian_pair_check(const std::vector<double>& rho_grid, int samples, const RngStream& rng) {
  PairCheck out;
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    if (!(rho >= -1.0 && rho <= 1.0)) throw InvalidArgument("correlation must lie in [-1, 1]");
    RngStream s = rng.substream(i);
    Eigen::ArrayXd x(samples), z(samples);
    s.fill_normal(x);
    s.fill_normal(z);
    const Eigen::ArrayXd y = rho * x + std::sqrt(1.0 - rho * rho) * z;
    const Eigen::ArrayXd prod = (x.square() - 1.0) * (y.square() - 1.0);
    PairCheckRow row;
    row.rho = rho;
    row.estimate = pairwise_sum(prod.data(), static_cast<std::size_t>(samples)) / samples;
    row.expected = 2.0 * rho * rho;
    const double abs_dev = std::abs(row.estimate - row.expected);
    row.deviation = std::abs(rho) < 0.1 ? abs_dev : abs_dev / row.expected;
    out.worst = std::max(out.worst, row.deviation);
    out.rows.push_back(row);
  }
  return out;
}

double gaussian_fourth_moment_ratio(int samples, const RngStream& rng) {
  RngStream s = rng.substream(0);
  Eigen::ArrayXd x(samples);
  s.fill_normal(x);
  const Eigen::ArrayXd x2 = x.square();
  const Eigen::ArrayXd x4 = x2.square();
  const double m2 = pairwise_sum(x2.data(), x2.size()) / samples;
  const double m4 = pairwise_sum(x4.data(), x4.size()) / samples;
  return m4 / (m2 * m2);
}

DecayTable covariance_decay_probe(std::shared_ptr<const RandomFieldModel> model, double k,
                                  const std::vector<double>& r_values, const Vec& theta, int ensemble,
                                  const RngStream& rng) {
  if (ensemble < 1000) throw InvalidArgument("decay probe needs an ensemble of at least 1000");
  const GridSpec& g = model->grid;
  const std::size_t nr = r_values.size();
  // Column 0 holds W_k, column i + 1 holds W_{k + r_i}.
  Eigen::MatrixXcd w(ensemble, static_cast<Eigen::Index>(nr + 1));
#pragma omp parallel for schedule(static)
  for (int e = 0; e < ensemble; ++e) {
    const auto real = sample_potential(model, rng.substream(static_cast<std::uint64_t>(e)));
    const Eigen::ArrayXcd z = real.stochastic_part().values();
    w(e, 0) = g.cell_volume() * plane_wave_sum(z, g, 2.0 * k * theta);
    for (std::size_t i = 0; i < nr; ++i)
      w(e, static_cast<Eigen::Index>(i + 1)) = g.cell_volume() * plane_wave_sum(z, g, 2.0 * (k + r_values[i]) * theta);
  }
  DecayTable t;
  t.k = k;
  const Eigen::ArrayXcd f0 = plane_wave_values(g, 2.0 * k * theta);
  std::vector<double> tail_r, tail_v;
  const double L = 2.0 * g.domain_radius;
  for (std::size_t i = 0; i < nr; ++i) {
    const auto c = static_cast<Eigen::Index>(i + 1);
    const Eigen::ArrayXd u1 = w.col(0).real().array(), v1 = w.col(0).imag().array();
    const Eigen::ArrayXd u2 = w.col(c).real().array(), v2 = w.col(c).imag().array();
    const auto muu = moments(u1 * u2), mvv = moments(v1 * v2), muv = moments(u1 * v2);
    const Eigen::ArrayXcd f1 = plane_wave_values(g, 2.0 * (k + r_values[i]) * theta);
    const cplx p = stochastic_pair_expectation(*model, f0, f1.conjugate());
    const cplx q = stochastic_pair_expectation(*model, f0, f1);
    DecayRow row;
    row.r = r_values[i];
    row.uu = muu.mean;
    row.uu_se = muu.standard_error;
    row.uu_exact = 0.5 * (p + q).real();
    row.vv = mvv.mean;
    row.vv_se = mvv.standard_error;
    row.vv_exact = 0.5 * (q - p).real();
    row.uv = muv.mean;
    row.uv_se = muv.standard_error;
    row.uv_exact = 0.5 * (p - q).imag();
    t.rows.push_back(row);
    if (row.r >= pi / L && std::abs(q) > 0.0) {
      tail_r.push_back(row.r);
      tail_v.push_back(std::abs(q));
    }
  }
  if (tail_r.size() >= 2)
    t.tail_slope = fit_loglog(Eigen::Map<Eigen::ArrayXd>(tail_r.data(), static_cast<Eigen::Index>(tail_r.size())),
                              Eigen::Map<Eigen::ArrayXd>(tail_v.data(), static_cast<Eigen::Index>(tail_v.size())))
                       .slope;
  return t;
}

ErgodicTable ergodic_average_demo(const ProcessSpec& spec, const std::vector<double>& T_values, int paths,
                                  const RngStream& rng) {
  if (T_values.empty() || paths < 1) throw InvalidArgument("ergodic demo needs T values and paths");
  if (!(spec.dt > 0.0) || !(spec.window > 0.0)) throw InvalidArgument("invalid process parameters");
  const double t_max = 2.0 * *std::max_element(T_values.begin(), T_values.end());
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / spec.dt)) + 1;
  const auto win = static_cast<std::size_t>(std::llround(spec.window / spec.dt));
  Eigen::MatrixXd avg(paths, static_cast<Eigen::Index>(T_values.size()));
#pragma omp parallel for schedule(static)
  for (int p = 0; p < paths; ++p) {
    std::vector<double> x(steps, 0.0);
    if (spec.kind == ProcessSpec::Kind::Constant) {
      std::fill(x.begin(), x.end(), spec.level);
    } else if (spec.kind == ProcessSpec::Kind::MovingAverage) {
      RngStream s = rng.substream(static_cast<std::uint64_t>(p));
      // X_t = B(t) - B(t - window) for a Brownian path started at -window.
      std::vector<double> db(steps + win);
      for (double& v : db) v = std::sqrt(spec.dt) * s.normal();
      double run = 0.0;
      for (std::size_t i = 0; i < win; ++i) run += db[i];
      for (std::size_t i = 0; i < steps; ++i) {
        x[i] = run;
        run += db[i + win] - db[i];
      }
    }
    for (std::size_t c = 0; c < T_values.size(); ++c) {
      const double T = T_values[c];
      const auto a = static_cast<std::size_t>(std::llround(T / spec.dt));
      const auto b = static_cast<std::size_t>(std::llround(2.0 * T / spec.dt));
      double s = 0.5 * (x[a] + x[b]);
      for (std::size_t i = a + 1; i < b; ++i) s += x[i];
      avg(p, static_cast<Eigen::Index>(c)) = s * spec.dt / T;
    }
  }
  ErgodicTable t;
  Eigen::ArrayXd ts(static_cast<Eigen::Index>(T_values.size())), rms(ts.size());
  for (std::size_t c = 0; c < T_values.size(); ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    ts[cc] = T_values[c];
    rms[cc] = std::sqrt(avg.col(cc).squaredNorm() / paths);
    t.rows.push_back({T_values[c], avg(0, cc), rms[cc]});
  }
  if (ts.size() >= 2 && (rms > 0.0).all()) t.rms_slope = fit_loglog(ts, rms).slope;
  return t;
}

std::vector<NegligibilityRow> second_order_negligibility_probe(const ScalarField& q, const std::vector<BandSpec>& bands,
                                                               const Vec& theta, double order_m) {
  BornTermProvider provider(q, 2);
  std::vector<NegligibilityRow> out;
  for (const auto& b : bands) out.push_back({b.K, band_average(provider, b, 0.0, theta, order_m).real()});
  return out;
}

}  // namespace bsl
