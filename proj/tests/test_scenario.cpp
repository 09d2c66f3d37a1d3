#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "lcf/scenario.hpp"
#include "lcf/verification.hpp"

using namespace lcf;

namespace {

const char* kMinimalScenario = R"json({
  "schema": 1,
  "name": "minimal",
  "seed": 7,
  "output_dir": "out/minimal",
  "quadrature": {"radial_nodes": 28, "theta_nodes": 14, "phi_nodes": 28,
                 "radial_cutoff": 12.0, "tolerance": 1e-6, "max_rounds": 5},
  "fock": {"cutoff": 8},
  "bank": [
    {"id": "f0", "type": "packet", "sigma": 1.0, "tau": 0.9,
     "center": [0, 0.2, 0, 0], "carrier": [1.8, 0.25, 0, -0.18],
     "amplitude": [0.85, 0],
     "polarization": {"time_space": [[1,0],[0,0],[0,0]]},
     "real_part": true, "normalize": true},
    {"id": "f1", "type": "packet", "sigma": 1.1, "tau": 1.0,
     "center": [0.1, -0.1, 0.1, 0], "carrier": [2.2, 0.25, 0.1, -0.18],
     "amplitude": [0.85, 0.3],
     "polarization": {"time_space": [[0,0],[0.6,-0.2],[0.1,0.3]]},
     "real_part": true, "normalize": true}
  ],
  "tasks": [
    {"type": "gram", "name": "g", "members": ["f0", "f1"]},
    {"type": "charfn", "name": "c", "members": ["f0"], "cutoff": 32,
     "lambda_max": 2.0, "lambda_points": 9, "tol": 1e-6}
  ]
})json";

std::string strip_timing(std::string text) {
  // timing fields are the one allowed nondeterminism in reports
  return std::regex_replace(text, std::regex("\"ms\": [0-9.eE+-]+"), "\"ms\": 0");
}

}  // namespace

TEST_CASE("scenario parsing: validation diagnostics") {
  CHECK_THROWS_AS((void)parse_scenario_text("{ not json"), ConfigError);
  CHECK_THROWS_AS((void)parse_scenario_text("{\"schema\": 2, \"bank\": []}"), ConfigError);

  // unknown bank member referenced by a task: diagnostic names the field
  const char* bad = R"({"schema":1,"bank":[
      {"id":"a","type":"packet","sigma":1.0,"tau":1.0}],
      "tasks":[{"type":"gram","members":["nope"]}]})";
  try {
    (void)parse_scenario_text(bad);
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("tasks[0].members") != std::string::npos);
    CHECK(msg.find("nope") != std::string::npos);
  }

  // duplicate ids are rejected
  const char* dup = R"({"schema":1,"bank":[
      {"id":"a","type":"packet","sigma":1.0,"tau":1.0},
      {"id":"a","type":"packet","sigma":1.0,"tau":1.0}]})";
  CHECK_THROWS_AS((void)parse_scenario_text(dup), ConfigError);

  // unknown task type
  const char* badtype = R"({"schema":1,"bank":[],"tasks":[{"type":"frobnicate"}]})";
  CHECK_THROWS_AS((void)parse_scenario_text(badtype), ConfigError);
}

TEST_CASE("bundled scenarios parse and validate") {
  const std::filesystem::path dir(LCFIELD_SCENARIO_DIR);
  for (const char* name : {"core_identities.json", "causal_support_scan.json"}) {
    const Scenario sc = load_scenario((dir / name).string());
    CHECK(!sc.bank.empty());
    CHECK(!sc.tasks.empty());
  }
}

TEST_CASE("empty task list yields a valid passing report") {
  Scenario sc = parse_scenario_text(R"({"schema":1,"name":"empty","bank":[]})");
  const Report rep = run_scenario(sc, "out/test_empty");
  CHECK(rep.pass);
  CHECK(rep.tasks.empty());
  CHECK(exit_code_for(rep) == 0);
  CHECK(std::filesystem::exists("out/test_empty/report.json"));
}

TEST_CASE("minimal scenario runs, passes, and is deterministic") {
  const Scenario sc = parse_scenario_text(kMinimalScenario);
  const Report r1 = run_scenario(sc, "out/test_min1");
  CHECK(r1.pass);
  CHECK(std::filesystem::exists("out/test_min1/g.csv"));
  CHECK(std::filesystem::exists("out/test_min1/g.json"));
  CHECK(std::filesystem::exists("out/test_min1/c.csv"));

  const Report r2 = run_scenario(sc, "out/test_min2");
  CHECK(strip_timing(r1.to_json_text()) == strip_timing(r2.to_json_text()));
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for_exception(ConfigError("x")) == 2);
  CHECK(exit_code_for_exception(BandwidthError("x")) == 2);
  CHECK(exit_code_for_exception(CutoffError("x")) == 2);
  CHECK(exit_code_for_exception(ConvergenceError("x")) == 3);
  CHECK(exit_code_for_exception(NumericsError("x")) == 1);

  Report failing;
  failing.pass = false;
  CHECK(exit_code_for(failing) == 1);
}

TEST_CASE("acceptance harness: tag filter and summary shape") {
  VerificationOptions opt;
  opt.fast = true;
  opt.only = {"spacelike"};
  const auto results = run_acceptance(opt);
  REQUIRE(results.size() == 1);
  CHECK(results[0].tag == "spacelike");
  CHECK(results[0].pass);
  const std::string summary = acceptance_summary(results);
  CHECK(summary.find("PASS") != std::string::npos);
  const std::string json = acceptance_report_json(results);
  CHECK(json.find("\"criteria\"") != std::string::npos);
}

#ifdef LCFIELD_BIN_PATH
TEST_CASE("cli surface: exit codes and usage") {
  const std::string bin = LCFIELD_BIN_PATH;
  auto run = [&](const std::string& args) {
    const int rc = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("run /nonexistent/scenario.json") == 2);
  CHECK(run("--bogus-flag") == 2);
  CHECK(run("verify --only not-a-tag") == 2);
  CHECK(run("verify --fast --only spacelike") == 0);

  // a minimal scenario end to end through the binary
  std::filesystem::create_directories("out");
  {
    std::ofstream f("out/mini_scenario.json");
    f << kMinimalScenario;
  }
  CHECK(run("run out/mini_scenario.json --out out/test_cli") == 0);
  CHECK(std::filesystem::exists("out/test_cli/report.json"));
  CHECK(run("gram out/mini_scenario.json --out out/test_cli_gram") == 0);
  // scenario without sample tasks: the sample subcommand reports config error
  CHECK(run("sample out/mini_scenario.json") == 2);
}
#endif
