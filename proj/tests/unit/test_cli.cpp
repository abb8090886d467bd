#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bsl/csv.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "bsl_test_cli";

int bsl_exit(const std::string& args) {
  const std::string cmd = std::string(BSL_BINARY) + " " + args + " > " + (work / "stdout.txt").string() + " 2> " +
                          (work / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const std::string& name, double eps, const std::string& extra = "") {
  const auto path = work / name;
  std::ofstream(path) << R"({"grid":{"dim":2,"points_per_axis":32,"box_half_width":2.0,"domain_radius":0.9},
  "model":{"kind":"bessel","m":2.5,"epsilon":)"
                      << eps << R"(,"mu":[{"center":[0.0,0.0],"radius":0.6,"amplitude":1.0}])" << extra << R"(},
  "bands":[{"K":2,"nodes":8}],"probes":{"xi_max":2},"seed":3})";
  return path;
}

struct Workdir {
  Workdir() {
    fs::remove_all(work);
    fs::create_directories(work);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Workdir, "usage errors exit with 2") {
  CHECK(bsl_exit("") == 2);
  CHECK(bsl_exit("frobnicate") == 2);
  CHECK(bsl_exit("pipeline --config " + (work / "missing.json").string()) == 2);
  CHECK(bsl_exit("pipeline") == 2);
  CHECK(bsl_exit("--help") == 0);
}

TEST_CASE_FIXTURE(Workdir, "invalid config exits with 2 and names the field") {
  const auto cfg = write_config("bad.json", 0.01);
  std::string text = slurp(cfg);
  text.replace(text.find("\"m\":2.5"), 7, "\"m\":1.0");
  std::ofstream(cfg) << text;
  CHECK(bsl_exit("generate --config " + cfg.string()) == 2);
  CHECK(slurp(work / "stderr.txt").find("model.m") != std::string::npos);
}

TEST_CASE_FIXTURE(Workdir, "stages run one by one and the output flag wins") {
  const auto cfg = write_config("ok.json", 0.01);
  const auto out = work / "run";
  for (const char* stage : {"generate", "forward", "measure", "reconstruct"})
    CHECK_MESSAGE(bsl_exit(std::string(stage) + " --workers 1 --config " + cfg.string() + " --out " + out.string()) == 0,
                  stage);
  CHECK(fs::exists(out / "reconstruction.json"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(slurp(work / "stdout.txt").find("relative L2 error") != std::string::npos);
}

TEST_CASE_FIXTURE(Workdir, "divergence exits with 1 and keeps the flagged partial table") {
  const auto cfg = write_config("hot.json", 1e4);
  const auto out = work / "hot";
  CHECK(bsl_exit("pipeline --config " + cfg.string() + " --out " + out.string()) == 1);
  const auto t = bsl::read_csv(out / "farfield.csv");
  REQUIRE(!t.rows.empty());
  CHECK(t.rows.back()[t.column("status")] == "diverged");
  CHECK(slurp(work / "stderr.txt").find("forward") != std::string::npos);
}
