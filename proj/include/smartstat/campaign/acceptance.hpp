#pragma once

// Synthetic acceptance campaigns with pinned tolerances. Shared by the
// acceptance test binary and the `campaign` CLI subcommand.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace smartstat::campaign {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // measured values against their thresholds
  double seconds = 0.0;
};

struct Criterion {
  int id = 0;
  std::string name;
  std::function<CriterionResult()> run;
};

/// Criteria 1..9 in order.
const std::vector<Criterion> &acceptance_criteria();

/// Runs the selected criteria (all when `ids` is empty). An exception inside
/// a criterion fails it with the message as detail.
std::vector<CriterionResult> run_acceptance(const std::vector<int> &ids = {});

/// "PASS [n] name: detail (1.23 s)"
std::string format_result(const CriterionResult &r);

/// Prints one line per criterion as it finishes; returns true when all pass.
bool report_acceptance(std::ostream &out, const std::vector<int> &ids = {});

}  // namespace smartstat::campaign
