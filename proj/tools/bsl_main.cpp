// bsl: configuration-driven runner for the backscattering experiments.
#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bsl/grid_io.hpp"
#include "bsl/pipeline.hpp"
#include "bsl/validation.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string out;
  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::string realization;
  std::vector<int> criteria;
};

bsl::ExperimentConfig load(const Options& o) {
  auto c = bsl::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

void print_summary(const bsl::ReconstructionSummary& s) {
  std::printf("relative L2 error %.4f (unclipped %.4f), support mass %.3f, calibration %.6g%+.2gi\n",
              s.result.relative_l2_error, s.result.relative_l2_error_unclipped, s.result.support_mass_fraction,
              s.calibration.constant.real(), s.calibration.constant.imag());
  std::printf("regime %s (frequency ratio %.3g, size ratio %.3g)\n", s.regime.satisfied ? "satisfied" : "not satisfied",
              s.regime.frequency_ratio, s.regime.size_ratio);
}

int run(const std::string& command, const Options& o) {
  const auto config = load(o);
  if (command == "validate") {
    bsl::ValidationOptions vo;
    vo.seed = config.seed;
    vo.work_dir = config.output_dir / "validate";
    vo.desk = config;
    const auto ids = o.criteria.empty() ? bsl::criterion_ids() : o.criteria;
    bool all = true;
    std::vector<bsl::CriterionReport> reports;
    for (int id : ids) {
      reports.push_back(bsl::run_criterion(id, vo));
      std::cout << bsl::format_report(reports.back()) << std::flush;
      all = all && reports.back().passed();
    }
    bsl::write_validation_report(config.output_dir / "validation_report.json", reports);
    return all ? kOk : kNumerical;
  }
  bsl::RunDirectory dir(config, config.output_dir);
  if (command == "generate") {
    bsl::run_generate(config, dir);
  } else if (command == "forward") {
    const auto path = o.realization.empty() ? dir.file(bsl::realization_name(0)) : std::filesystem::path(o.realization);
    bsl::run_forward(config, bsl::read_grid(path), dir);
  } else if (command == "measure") {
    bsl::run_measure(config, dir);
  } else if (command == "reconstruct") {
    print_summary(bsl::run_reconstruct(config, dir));
  } else if (command == "pipeline") {
    print_summary(bsl::run_pipeline(config, dir));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-potential backscattering experiments"};
  app.require_subcommand(1);
  Options o;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory, overrides output_dir");
    sub->add_option("--workers", o.workers, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "master seed, overrides the config");
    return sub;
  };
  add("generate", "sample realizations of the random potential");
  add("forward", "backscattering far fields at every band node")
      ->add_option("--realization", o.realization, "potential grid file (default: realization 0 of the run)");
  add("measure", "band-averaged correlations from the far-field table");
  add("reconstruct", "recover the local strength from the measurement table");
  add("validate", "run the acceptance checks")->add_option("--criteria", o.criteria, "criterion ids (default: all)");
  add("pipeline", "generate, forward, measure and reconstruct");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (o.workers > 0) omp_set_num_threads(o.workers);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const bsl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const bsl::DivergedError& e) {
    std::cerr << "[forward] " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kNumerical;
  }
}
