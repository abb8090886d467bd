#include <cmath>
#include <filesystem>
#include <set>

#include "bsl/csv.hpp"
#include "bsl/grid_io.hpp"
#include "bsl/pipeline.hpp"
#include "doctest.h"

using namespace bsl;
namespace fs = std::filesystem;

namespace {

// Small enough to run every stage in well under a second.
std::string small_config(const std::string& model_extra = "", const std::string& policy = "full", double eps = 0.01) {
  return R"({"grid":{"dim":2,"points_per_axis":32,"box_half_width":2.0,"domain_radius":0.9},
  "model":{"kind":"bessel","m":2.5,"epsilon":)" +
         std::to_string(eps) + R"(,
           "mu":[{"center":[0.0,0.0],"radius":0.6,"amplitude":1.0}])" +
         model_extra + R"(},
  "bands":[{"K":2,"nodes":8}],
  "probes":{"xi_max":2},
  "order_policy":")" + policy + R"(","seed":7})";
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bsl_test_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig at(ExperimentConfig c, const fs::path& dir) {
  c.output_dir = dir;
  return c;
}

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("config round trip is canonical") {
  const auto c = parse_config(small_config());
  CHECK(c.grid.points_per_axis == 32);
  CHECK(c.bands.size() == 1);
  CHECK(c.probe_list.empty());
  CHECK(build_probes(c).size() > 2);
  CHECK(c.solver.max_iter == 200);
  CHECK(c.calibration_radius == doctest::Approx(0.45));
  CHECK(to_json(parse_config(to_json(c))) == to_json(c));
  CHECK(to_json(parse_config(to_json(default_config()))) == to_json(default_config()));
}

TEST_CASE("config errors name the offending field") {
  CHECK(config_error_field(R"({"grid":{"dim":2}})") .rfind("grid", 0) == 0);
  auto text = small_config();
  CHECK(config_error_field(text.replace(text.find("\"m\":2.5"), 7, "\"m\":3.5")) == "model.m");
  text = small_config();
  CHECK(config_error_field(text.replace(text.find("bessel"), 6, "cauchy")) == "model.kind");
  text = small_config();
  CHECK(config_error_field(text.replace(text.find("\"seed\":7"), 8, "\"seed\":-1")) == "seed");
  CHECK(config_error_field("not json") != "");
  CHECK_THROWS_AS(load_config("/nonexistent/bsl.json"), ConfigError);
}

TEST_CASE("manifest round trip and digests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  RunManifest m;
  m.config_sha256 = sha256_hex("x");
  m.outputs = {{"a.csv", sha256_hex("a")}};
  m.stages = {{"generate", 0.5}};
  const auto dir = fresh_dir("manifest");
  fs::create_directories(dir);
  write_manifest(dir / "manifest.json", m);
  const auto r = read_manifest(dir / "manifest.json");
  CHECK(r.config_sha256 == m.config_sha256);
  CHECK(r.artifact_version == std::string(artifact_version));
  REQUIRE(r.outputs.size() == 1);
  CHECK(r.outputs[0].sha256 == m.outputs[0].sha256);
  CHECK(r.stages[0].seconds == 0.5);
}

TEST_CASE("pipeline writes every output and lists it in the manifest") {
  const auto dir = fresh_dir("full");
  const auto c = at(parse_config(small_config()), dir);
  RunDirectory run(c, dir);
  const auto s = run_pipeline(c, run);
  CHECK(std::isfinite(s.result.relative_l2_error));

  std::set<std::string> listed;
  for (const auto& o : run.manifest().outputs) {
    listed.insert(o.file);
    CHECK(sha256_file(dir / o.file) == o.sha256);
  }
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "manifest.json") CHECK(listed.count(e.path().filename().string()) == 1);
  for (const char* f : {"config.json", "mu_true.bslg", "q0.bslg", "realization_000.bslg", "farfield.csv",
                        "measurement.csv", "mu_recovered.bslg", "mu_slices.csv", "reconstruction.json"})
    CHECK(listed.count(f) == 1);
  std::set<std::string> stages;
  for (const auto& t : run.manifest().stages) stages.insert(t.stage);
  CHECK(stages == std::set<std::string>{"generate", "forward", "measure", "reconstruct"});

  const auto table = read_csv(dir / "farfield.csv");
  CHECK(table.rows.size() == forward_nodes(c).size());
  for (const auto& row : table.rows) CHECK(row[table.column("status")] == "ok");
}

TEST_CASE("same config twice gives identical digests") {
  const auto base = parse_config(small_config());
  std::vector<RunManifest> manifests;
  for (const char* name : {"det_a", "det_b"}) {
    const auto dir = fresh_dir(name);
    const auto c = at(base, dir);
    RunDirectory run(c, dir);
    run_pipeline(c, run);
    manifests.push_back(run.manifest());
  }
  int compared = 0;
  for (const auto& a : manifests[0].outputs) {
    if (a.file == "config.json") continue;
    for (const auto& b : manifests[1].outputs)
      if (b.file == a.file) {
        CHECK_MESSAGE(a.sha256 == b.sha256, a.file);
        ++compared;
      }
  }
  CHECK(compared == 8);
}

TEST_CASE("no strength bumps: realization equals q0") {
  const auto dir = fresh_dir("zero_mu");
  auto text = small_config(R"(,"q0":[{"center":[0.1,0.0],"radius":0.3,"amplitude":0.2}])");
  const std::string bump = R"("mu":[{"center":[0.0,0.0],"radius":0.6,"amplitude":1.0}])";
  text.replace(text.find(bump), bump.size(), R"("mu":[])");
  const auto c = at(parse_config(text), dir);
  RunDirectory run(c, dir);
  run_generate(c, run);
  const auto q = read_grid(dir / realization_name(0));
  const auto q0 = read_grid(dir / "q0.bslg");
  CHECK((q.values() - q0.values()).abs().maxCoeff() == 0.0);
  CHECK(q0.values().abs().maxCoeff() > 0.1);
}

TEST_CASE("zero potential gives an all-zero far-field table") {
  const auto dir = fresh_dir("zero_q");
  const auto c = at(parse_config(small_config("", "full", 0.0)), dir);
  RunDirectory run(c, dir);
  run_generate(c, run);
  run_forward(c, read_grid(dir / realization_name(0)), run);
  const auto t = read_csv(dir / "farfield.csv");
  REQUIRE(!t.rows.empty());
  for (const auto& row : t.rows) {
    CHECK(std::stod(row[t.column("re")]) == 0.0);
    CHECK(std::stod(row[t.column("im")]) == 0.0);
  }
}

TEST_CASE("first-order policy records one iteration per node") {
  const auto dir = fresh_dir("first");
  const auto c = at(parse_config(small_config("", "first-order-only")), dir);
  RunDirectory run(c, dir);
  run_generate(c, run);
  for (const auto& r : run_forward(c, read_grid(dir / realization_name(0)), run)) CHECK(r.iterations == 1);
  const auto t = read_csv(dir / "farfield.csv");
  for (const auto& row : t.rows) CHECK(row[t.column("order")] == "first-order-only");
}

TEST_CASE("divergence leaves a flagged partial table") {
  const auto dir = fresh_dir("diverged");
  const auto c = at(parse_config(small_config("", "full", 1e4)), dir);
  RunDirectory run(c, dir);
  run_generate(c, run);
  CHECK_THROWS_AS(run_forward(c, read_grid(dir / realization_name(0)), run), DivergedError);
  const auto t = read_csv(dir / "farfield.csv");
  REQUIRE(!t.rows.empty());
  CHECK(t.rows.back()[t.column("status")] == "diverged");
  CHECK(t.rows.size() <= forward_nodes(c).size());
  CHECK(fs::exists(dir / "manifest.json"));
}
