// lcfield: scenario-driven verification front end for the light-cone pairing
// and two-sector Fock engine.
//
// Exit codes: 0 all assertions pass, 1 assertion failure, 2 config error,
// 3 numerical non-convergence.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lcf/parallel.hpp"
#include "lcf/scenario.hpp"
#include "lcf/verification.hpp"
#include "lcf/version.hpp"

namespace {

struct CommonOpts {
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out, "output directory override");
  cmd->add_option("--seed", c.seed, "seed override")->each([&](const std::string&) {
    c.seed_set = true;
  });
  cmd->add_option("--threads", c.threads, "worker thread count (default: LCFIELD_THREADS or hardware)");
}

void apply_threads(const CommonOpts& c) {
  if (c.threads > 0) lcf::set_thread_count(c.threads);
}

lcf::Scenario load_with_overrides(const std::string& path, const CommonOpts& c) {
  lcf::Scenario sc = lcf::load_scenario(path);
  if (c.seed_set) sc.seed = c.seed;
  return sc;
}

int report_outcome(const lcf::Report& report) {
  for (const auto& t : report.tasks) {
    std::cout << (t.pass ? "PASS" : "FAIL") << "  " << t.name << " (" << t.type << ", "
              << int(t.ms) << " ms)\n";
    if (!t.pass)
      for (const auto& c : t.checks)
        if (!c.pass)
          std::cout << "      failed: " << c.label << "  measured " << c.measured
                    << " vs bound " << c.bound << '\n';
  }
  std::cout << (report.pass ? "all tasks passed" : "some tasks FAILED") << '\n';
  return lcf::exit_code_for(report);
}

/// Runs a scenario restricted to tasks of one type (gram/charfn/sample
/// convenience subcommands).
int run_filtered(const std::string& path, const CommonOpts& c, lcf::TaskType type) {
  lcf::Scenario sc = load_with_overrides(path, c);
  std::vector<lcf::TaskSpec> kept;
  for (const auto& t : sc.tasks)
    if (t.type == type) kept.push_back(t);
  if (kept.empty()) throw lcf::ConfigError("scenario defines no task of the requested type");
  sc.tasks = kept;
  return report_outcome(lcf::run_scenario(sc, c.out));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"light-cone pairing / two-sector Fock verification engine"};
  app.set_version_flag("--version", lcf::kVersion);
  app.require_subcommand(1);

  std::string scenario_path;
  CommonOpts run_opts, verify_opts, gram_opts, charfn_opts, sample_opts;

  CLI::App* run_cmd = app.add_subcommand("run", "run every task of a scenario file");
  run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(run_cmd, run_opts);

  bool fast = false;
  std::vector<std::string> only;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run the built-in acceptance criteria");
  verify_cmd->add_flag("--fast", fast, "reduced node counts and sample sizes");
  verify_cmd->add_option("--only", only, "run only these criterion tags");
  add_common(verify_cmd, verify_opts);

  CLI::App* gram_cmd = app.add_subcommand("gram", "run the gram tasks of a scenario");
  gram_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(gram_cmd, gram_opts);

  CLI::App* charfn_cmd = app.add_subcommand("charfn", "run the charfn tasks of a scenario");
  charfn_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(charfn_cmd, charfn_opts);

  CLI::App* sample_cmd = app.add_subcommand("sample", "run the sample tasks of a scenario");
  sample_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(sample_cmd, sample_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      apply_threads(run_opts);
      return report_outcome(lcf::run_scenario(load_with_overrides(scenario_path, run_opts),
                                              run_opts.out));
    }
    if (verify_cmd->parsed()) {
      apply_threads(verify_opts);
      lcf::VerificationOptions opt;
      opt.fast = fast;
      opt.out_dir = verify_opts.out;
      if (verify_opts.seed_set) opt.seed = verify_opts.seed;
      const auto known = lcf::acceptance_tags();
      for (const auto& tag : only) {
        if (std::find(known.begin(), known.end(), tag) == known.end())
          throw lcf::ConfigError("unknown criterion tag '" + tag + "'");
        opt.only.insert(tag);
      }
      const auto results = lcf::run_acceptance(opt);
      std::cout << lcf::acceptance_summary(results);
      if (!verify_opts.out.empty()) {
        std::filesystem::create_directories(verify_opts.out);
        std::ofstream out(std::filesystem::path(verify_opts.out) / "report.json");
        out << lcf::acceptance_report_json(results) << '\n';
      }
      return lcf::all_pass(results) ? 0 : 1;
    }
    if (gram_cmd->parsed()) {
      apply_threads(gram_opts);
      return run_filtered(scenario_path, gram_opts, lcf::TaskType::Gram);
    }
    if (charfn_cmd->parsed()) {
      apply_threads(charfn_opts);
      return run_filtered(scenario_path, charfn_opts, lcf::TaskType::CharFn);
    }
    if (sample_cmd->parsed()) {
      apply_threads(sample_opts);
      return run_filtered(scenario_path, sample_opts, lcf::TaskType::Sample);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lcf::exit_code_for_exception(e);
  }
  return 2;
}
