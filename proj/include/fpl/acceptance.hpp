#pragma once

// End-to-end checks over the three driven models and the quench tables.
// Each criterion reports pass/fail with the numbers behind the verdict.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fpl {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int jobs = 0;
  std::filesystem::path work_dir = "acceptance_out";
  std::vector<int> only;  // empty: all criteria
};

using CriterionCallback = std::function<void(const CriterionResult&)>;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, const CriterionCallback& on_result = {});

}  // namespace fpl
