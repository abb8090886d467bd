#include "bsl/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bsl/csv.hpp"
#include "bsl/grid_io.hpp"
#include "json.hpp"

namespace bsl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kThetaColumns[] = {"theta_x", "theta_y", "theta_z"};

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += digits[d[i] >> 4];
    s += digits[d[i] & 15];
  }
  return s;
}

std::array<long long, 4> node_key(double k, const Vec& theta) {
  std::array<long long, 4> key{std::llround(k * 1e9), 0, 0, 0};
  for (Eigen::Index a = 0; a < theta.size(); ++a) key[static_cast<std::size_t>(a) + 1] = std::llround(theta[a] * 1e12);
  return key;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const BandSpec& largest_band(const ExperimentConfig& c) {
  const BandSpec* best = &c.bands.front();
  for (const auto& b : c.bands)
    if (b.K > best->K) best = &b;
  return *best;
}

const BandSpec& band_with_K(const ExperimentConfig& c, double K) {
  for (const auto& b : c.bands)
    if (b.K == K) return b;
  throw InvalidArgument("measurement band K = " + format_double(K) + " is not in the config");
}

// Backscattering values read back from farfield.csv.
class TableProvider : public FarFieldProvider {
 public:
  TableProvider(std::map<std::array<long long, 4>, cplx> values, OrderPolicy policy)
      : values_(std::move(values)), policy_(policy) {}
  OrderPolicy policy() const override { return policy_; }

 protected:
  cplx evaluate(double k, const Vec& theta) override {
    auto it = values_.find(node_key(k, theta));
    if (it == values_.end()) throw InvalidArgument("farfield.csv has no sample at k = " + format_double(k));
    return it->second;
  }

 private:
  std::map<std::array<long long, 4>, cplx> values_;
  OrderPolicy policy_;
};

template <class F>
auto staged(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const DivergedError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  return hex(digest, len);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  json j;
  j["config_sha256"] = m.config_sha256;
  j["artifact_version"] = m.artifact_version;
  j["outputs"] = json::array();
  for (const auto& o : m.outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}});
  j["stages"] = json::array();
  for (const auto& s : m.stages) j["stages"].push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  const json j = json::parse(in);
  RunManifest m;
  m.config_sha256 = j.at("config_sha256").get<std::string>();
  m.artifact_version = j.at("artifact_version").get<std::string>();
  for (const auto& o : j.at("outputs")) m.outputs.push_back({o.at("file").get<std::string>(), o.at("sha256").get<std::string>()});
  for (const auto& s : j.at("stages")) m.stages.push_back({s.at("stage").get<std::string>(), s.at("seconds").get<double>()});
  return m;
}

RunDirectory::RunDirectory(const ExperimentConfig& config, fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  const std::string text = to_json(config);
  const std::string hash = sha256_hex(text);
  if (fs::exists(file("manifest.json"))) {
    try {
      auto old = read_manifest(file("manifest.json"));
      if (old.config_sha256 == hash && old.artifact_version == manifest_.artifact_version) manifest_ = std::move(old);
    } catch (const std::exception&) {
      // Unreadable manifest: start a fresh one.
    }
  }
  manifest_.config_sha256 = hash;
  std::ofstream(file("config.json")) << text << '\n';
  record("config.json");
}

void RunDirectory::record(const std::string& name) {
  const std::string digest = sha256_file(file(name));
  for (auto& o : manifest_.outputs)
    if (o.file == name) {
      o.sha256 = digest;
      return;
    }
  manifest_.outputs.push_back({name, digest});
}

void RunDirectory::record_stage(const std::string& stage, double seconds) {
  for (auto& s : manifest_.stages)
    if (s.stage == stage) {
      s.seconds = seconds;
      return;
    }
  manifest_.stages.push_back({stage, seconds});
}

void RunDirectory::save() const { write_manifest(file("manifest.json"), manifest_); }

std::string realization_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "realization_%03d.bslg", index);
  return buf;
}

void run_generate(const ExperimentConfig& config, RunDirectory& run) {
  staged("generate", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    auto model = std::make_shared<const RandomFieldModel>(build_model(config));
    write_grid(model->strength.mu, run.file("mu_true.bslg"));
    run.record("mu_true.bslg");
    write_grid(model->mean_q0, run.file("q0.bslg"));
    run.record("q0.bslg");
    const Purpose purpose = model->kind == ModelKind::FractionalBrownian ? Purpose::Fbm : Purpose::WhiteNoise;
    for (int r = 0; r < config.realizations; ++r) {
      const auto real = sample_potential(model, RngStream(config.seed, purpose, static_cast<std::uint64_t>(r)));
      write_grid(real.q, run.file(realization_name(r)));
      run.record(realization_name(r));
    }
    run.record_stage("generate", seconds_since(t0));
    run.save();
    return 0;
  });
}

std::vector<ForwardNode> forward_nodes(const ExperimentConfig& config) {
  std::map<std::array<long long, 4>, ForwardNode> nodes;
  const auto probes = build_probes(config);
  for (const auto& band : config.bands) {
    const auto quad = band_quadrature(band);
    for (const auto& p : probes)
      for (double k : quad.nodes)
        for (double kk : {k, k + p.tau}) nodes.emplace(node_key(kk, p.theta), ForwardNode{kk, p.theta});
  }
  std::vector<ForwardNode> out;
  out.reserve(nodes.size());
  for (auto& [key, node] : nodes) out.push_back(std::move(node));
  return out;
}

std::vector<ForwardRecord> run_forward(const ExperimentConfig& config, const ScalarField& q, RunDirectory& run) {
  return staged("forward", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    if (!(q.grid() == config.grid)) throw InvalidArgument("realization grid does not match the config grid");
    const auto nodes = forward_nodes(config);
    std::vector<ForwardRecord> records(nodes.size());
    std::vector<char> diverged(nodes.size(), 0);
    std::vector<double> ratios(nodes.size(), 0.0);
    KernelCache cache(config.grid);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      try {
        records[i] = forward_backscatter(q, nodes[i].k, nodes[i].theta, config.policy, cache, config.solver);
      } catch (const DivergedError& e) {
        ratios[i] = e.contraction_ratio();
        records[i].k = nodes[i].k;
        records[i].theta = nodes[i].theta;
        records[i].value = cplx(std::nan(""), std::nan(""));
        records[i].converged = false;
        records[i].status = "diverged";
        diverged[i] = 1;
      }
    }
    std::size_t keep = nodes.size();
    bool failed = false;
    for (std::size_t i = 0; i < nodes.size() && !failed; ++i)
      if (diverged[i]) {
        keep = i + 1;
        failed = true;
      }
    records.resize(keep);

    std::vector<std::string> header{"k"};
    for (int a = 0; a < config.grid.dim; ++a) header.emplace_back(kThetaColumns[a]);
    for (const char* c : {"order", "re", "im", "iterations", "status"}) header.emplace_back(c);
    {
      CsvWriter w(run.file("farfield.csv"), header);
      for (const auto& r : records) {
        w << r.k;
        for (int a = 0; a < config.grid.dim; ++a) w << r.theta[a];
        w << to_string(config.policy) << r.value.real() << r.value.imag() << r.iterations << r.status;
        w.end_row();
      }
    }
    run.record("farfield.csv");
    run.record_stage("forward", seconds_since(t0));
    run.save();
    if (failed) throw DivergedError(records.back().k, ratios[keep - 1]);
    return records;
  });
}

MeasurementTable run_measure(const ExperimentConfig& config, RunDirectory& run) {
  return staged("measure", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const CsvTable t = read_csv(run.file("farfield.csv"));
    const int ck = t.column("k"), cre = t.column("re"), cim = t.column("im"), cs = t.column("status");
    std::vector<int> ct;
    for (int a = 0; a < config.grid.dim; ++a) ct.push_back(t.column(kThetaColumns[a]));
    std::map<std::array<long long, 4>, cplx> values;
    for (const auto& row : t.rows) {
      if (row[static_cast<std::size_t>(cs)] == "diverged")
        throw InvalidArgument("farfield.csv contains a diverged solve; rerun forward");
      Vec theta(config.grid.dim);
      for (int a = 0; a < config.grid.dim; ++a) theta[a] = std::stod(row[static_cast<std::size_t>(ct[static_cast<std::size_t>(a)])]);
      const double k = std::stod(row[static_cast<std::size_t>(ck)]);
      values[node_key(k, theta)] = {std::stod(row[static_cast<std::size_t>(cre)]), std::stod(row[static_cast<std::size_t>(cim)])};
    }
    TableProvider provider(std::move(values), config.policy);
    auto table = measure(provider, config.bands, build_probes(config), config.order_m);
    write_measurement_csv(run.file("measurement.csv"), table, config.grid.dim);
    run.record("measurement.csv");
    run.record_stage("measure", seconds_since(t0));
    run.save();
    return table;
  });
}

ReconstructionSummary run_reconstruct(const ExperimentConfig& config, RunDirectory& run) {
  return staged("reconstruct", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = build_model(config);
    MeasurementTable table = read_measurement_csv(run.file("measurement.csv"), config.order_m);
    if (model.mean_q0.max_abs() > 0.0) {
      Born1Provider mean(model.mean_q0);
      for (auto& e : table.entries)
        e.value -= band_average(mean, band_with_K(config, e.K), e.tau, e.theta, config.order_m);
    }

    ReconstructionSummary s;
    const auto& band = largest_band(config);
    std::vector<Probe> refs;
    Vec e1 = Vec::Zero(config.grid.dim);
    e1[0] = 1.0;
    for (double tau : config.calibration_taus) refs.push_back({tau, e1});
    s.calibration = calibrate_constant(build_calibration_model(config), band, refs);
    const auto polar = recover_mu_hat(table, s.calibration.constant, config.epsilon, band.K);
    s.result = invert_mu(polar, config.grid, model.strength);
    s.result.calibration_constant = s.calibration.constant;
    s.regime = check_regime(config.regime);
    s.budget = predict_error(config.regime);

    write_grid(s.result.mu_recovered, run.file("mu_recovered.bslg"));
    run.record("mu_recovered.bslg");
    {
      CsvWriter w(run.file("mu_slices.csv"), {"x", "mu_true", "mu_recovered"});
      const auto& g = config.grid;
      const int half = g.points_per_axis / 2;
      for (int i = 0; i < g.points_per_axis; ++i) {
        const std::size_t idx = g.ravel({i, half, g.dim == 3 ? half : 0});
        w << g.coordinate(idx)[0] << model.strength.mu.values()[static_cast<Eigen::Index>(idx)].real()
          << s.result.mu_recovered.values()[static_cast<Eigen::Index>(idx)].real();
        w.end_row();
      }
    }
    run.record("mu_slices.csv");
    json j;
    j["relative_l2_error"] = s.result.relative_l2_error;
    j["relative_l2_error_unclipped"] = s.result.relative_l2_error_unclipped;
    j["sup_error"] = s.result.sup_error;
    j["max_imaginary"] = s.result.max_imaginary;
    j["support_mass_fraction"] = s.result.support_mass_fraction;
    j["xi_max"] = s.result.xi_max;
    j["polar_samples"] = polar.samples.size();
    j["calibration"] = {{"constant", complex_json(s.calibration.constant)},
                        {"analytic", s.calibration.analytic},
                        {"fit_residual", s.calibration.fit_residual}};
    j["regime"] = {{"satisfied", s.regime.satisfied},
                   {"frequency_ratio", s.regime.frequency_ratio},
                   {"size_ratio", s.regime.size_ratio}};
    j["predicted_budget"] = {{"random", s.budget.random_term},
                             {"deterministic", s.budget.deterministic_term},
                             {"nonlinear", s.budget.nonlinear_term},
                             {"total_rms", s.budget.total_rms}};
    std::ofstream(run.file("reconstruction.json")) << j.dump(2) << '\n';
    run.record("reconstruction.json");
    run.record_stage("reconstruct", seconds_since(t0));
    run.save();
    return s;
  });
}

ReconstructionSummary run_pipeline(const ExperimentConfig& config, RunDirectory& run) {
  run_generate(config, run);
  const ScalarField q = read_grid(run.file(realization_name(0)));
  run_forward(config, q, run);
  run_measure(config, run);
  return run_reconstruct(config, run);
}

ReconstructionResult noiseless_reconstruction(const ExperimentConfig& config, cplx calibration) {
  const auto model = build_model(config);
  const auto& band = largest_band(config);
  const auto probes = build_probes(config);
  const auto values = expected_band_averages(model, band, probes);
  MeasurementTable table;
  table.order_m = config.order_m;
  const bool has_mean = model.mean_q0.max_abs() > 0.0;
  Born1Provider mean(model.mean_q0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    cplx v = values[i];
    if (has_mean) v -= band_average(mean, band, probes[i].tau, probes[i].theta, config.order_m);
    table.entries.push_back({probes[i].tau, probes[i].theta, v, band.K, OrderPolicy::FirstOrder, band.num_nodes});
  }
  return invert_mu(recover_mu_hat(table, calibration, config.epsilon, band.K), config.grid, model.strength);
}

}  // namespace bsl
