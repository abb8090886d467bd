#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bsl/config.hpp"
#include "bsl/errors.hpp"
#include "bsl/reconstruction.hpp"

namespace bsl {

inline constexpr const char* artifact_version = "1.0.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct OutputDigest {
  std::string file;  // relative to the run directory
  std::string sha256;
};
struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};
struct RunManifest {
  std::string config_sha256;
  std::string artifact_version = bsl::artifact_version;
  std::vector<OutputDigest> outputs;
  std::vector<StageTiming> stages;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// A stage failure tagged with the stage name. The nested exception keeps its type.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Output directory with a manifest that accumulates across stages. Outputs of a
// stage replace earlier entries of the same name; a config change starts afresh.
class RunDirectory {
 public:
  RunDirectory(const ExperimentConfig& config, std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }
  void record(const std::string& name);
  void record_stage(const std::string& stage, double seconds);
  const RunManifest& manifest() const { return manifest_; }
  void save() const;

 private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

std::string realization_name(int index);

// Writes config.json, mu_true.bslg, q0.bslg and realization_NNN.bslg.
void run_generate(const ExperimentConfig& config, RunDirectory& run);

// Distinct (k, theta) pairs needed by the bands and probes, ordered by k then probe.
struct ForwardNode {
  double k = 0.0;
  Vec theta;
};
std::vector<ForwardNode> forward_nodes(const ExperimentConfig& config);

// farfield.csv: k, theta components, order, re, im, iterations, status.
// A diverged solve is written with status "diverged", later nodes are skipped,
// and DivergedError is rethrown after the partial file and manifest are saved.
std::vector<ForwardRecord> run_forward(const ExperimentConfig& config, const ScalarField& q, RunDirectory& run);

// Reads farfield.csv and writes measurement.csv.
MeasurementTable run_measure(const ExperimentConfig& config, RunDirectory& run);

struct ReconstructionSummary {
  ReconstructionResult result;
  Calibration calibration;
  RegimeCheck regime;
  ErrorBudget budget;
};
// Reads measurement.csv, removes the deterministic band average of q0, calibrates,
// inverts. Writes mu_recovered.bslg, mu_slices.csv and reconstruction.json.
ReconstructionSummary run_reconstruct(const ExperimentConfig& config, RunDirectory& run);

// All four stages on realization 0; each stage is timed in the manifest.
ReconstructionSummary run_pipeline(const ExperimentConfig& config, RunDirectory& run);

// Same probes and bands without scattering: expected first-order band averages in
// place of measurements. Isolates the discretization part of the error.
ReconstructionResult noiseless_reconstruction(const ExperimentConfig& config, cplx calibration);

}  // namespace bsl
