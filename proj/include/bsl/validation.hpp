#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bsl/config.hpp"

namespace bsl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured values against the pinned tolerance
};

struct CriterionReport {
  int id = 0;
  std::string title;
  std::vector<CheckResult> checks;
  double seconds = 0.0;
  bool passed() const;
};

struct ValidationOptions {
  std::uint64_t seed = 20261016;
  // Pipeline runs of the end-to-end and determinism checks go here.
  std::filesystem::path work_dir = "validate";
  // Two-dimensional linear-regime experiment used end to end.
  ExperimentConfig desk = default_config();
};

std::vector<int> criterion_ids();
std::string criterion_title(int id);
// Throws InvalidArgument for an unknown id. Library errors inside a check are
// reported as a failed check rather than thrown.
CriterionReport run_criterion(int id, const ValidationOptions& options);

// "PASS  3  title (12.3 s)" followed by one indented line per check.
std::string format_report(const CriterionReport& report);
void write_validation_report(const std::filesystem::path& path, const std::vector<CriterionReport>& reports);

}  // namespace bsl
