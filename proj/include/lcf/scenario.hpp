#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcf/pairing.hpp"
#include "lcf/test_functions.hpp"

namespace lcf {

/// One check line of a report: a measured value against its bound.
struct CheckLine {
  std::string label;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct TaskReport {
  std::string name;
  std::string type;
  bool pass = true;
  double ms = 0.0;
  std::vector<CheckLine> checks;
  std::vector<std::string> outputs;  // files written, relative to the out dir
};

struct Report {
  std::string scenario;
  bool pass = true;
  std::vector<TaskReport> tasks;
  std::string to_json_text() const;  // includes the convention block
};

enum class TaskType {
  Gram,
  CausalityScan,
  Commutators,
  CharFn,
  GibbsSweep,
  FluctuationRegimes,
  Sample,
  Convolution,
};

struct TaskSpec {
  TaskType type;
  std::string name;
  std::vector<std::string> members;  // bank references (validated)
  std::map<std::string, double> params;
  std::vector<double> values;     // generic list parameter (separations, grids)
  std::string source = "vacuum";  // gram: positive|negative ; sample: vacuum|gibbs
};

/// Parsed and validated scenario configuration (schema version 1).
struct Scenario {
  std::string name;
  MetricConstants metric;
  std::uint64_t seed = 0;
  LightConeQuadrature quadrature;
  int fock_cutoff = 12;
  double eigen_floor = 1e-10;
  std::vector<std::string> bank_ids;
  std::vector<TestFunction> bank;
  std::vector<TaskSpec> tasks;
  std::string output_dir = "out";

  const TestFunction& member(const std::string& id) const;
  int member_index(const std::string& id) const;
};

/// Parses and validates a scenario JSON document; throws ConfigError with a
/// field diagnostic on any problem.
Scenario parse_scenario_text(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Executes every task in order, writing report.json and per-task CSVs under
/// the scenario's output directory (overridable). Throws only for
/// config-level problems; numeric assertion failures are recorded in the
/// report with pass = false.
Report run_scenario(const Scenario& sc, const std::string& out_override = "");

/// CLI exit-code mapping: 0 pass, 1 assertion failure, 2 config, 3 numerics
/// non-convergence.
int exit_code_for(const Report& report);
int exit_code_for_exception(const std::exception& e);

}  // namespace lcf
