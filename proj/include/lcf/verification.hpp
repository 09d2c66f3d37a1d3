#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lcf/scenario.hpp"

namespace lcf {

/// One acceptance criterion: a tagged block of checks with a pass verdict.
struct CriterionResult {
  int id = 0;
  std::string tag;
  std::string title;
  bool pass = true;
  double ms = 0.0;
  std::vector<CheckLine> checks;
};

struct VerificationOptions {
  bool fast = false;               // reduced node counts and sample sizes
  std::set<std::string> only;      // run only these tags (empty = all)
  std::string out_dir;             // when set, criteria write CSV curves here
  std::uint64_t seed = 0x5EEDCAFEULL;  // sampler criterion seed
};

/// Runs the built-in acceptance criteria (all tolerances pinned in code).
std::vector<CriterionResult> run_acceptance(const VerificationOptions& opt);

/// Known tags, in criterion order.
std::vector<std::string> acceptance_tags();

bool all_pass(const std::vector<CriterionResult>& results);

/// One line per criterion: "PASS  3 eq2-sheet   ...".
std::string acceptance_summary(const std::vector<CriterionResult>& results);

/// Full machine-readable report (convention block included).
std::string acceptance_report_json(const std::vector<CriterionResult>& results);

}  // namespace lcf
