#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "nqs/cli/demo_scenarios.hpp"
#include "nqs/cli/tasks.hpp"

namespace {

using namespace nqs::cli;

constexpr int kOk = 0;
constexpr int kTaskError = 1;
constexpr int kUsage = 2;

int default_jobs() {
  const char* env = std::getenv("NQS_GEOM_JOBS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<int>(v);
}

struct RunArgs {
  std::string format = "machine";
  int jobs = 1;
  std::string out;
  bool timing = false;
};

void add_run_flags(CLI::App& cmd, RunArgs& args) {
  cmd.add_option("--format", args.format, "machine or human")->capture_default_str();
  cmd.add_option("--jobs", args.jobs, "parallel tasks (default: NQS_GEOM_JOBS or 1)")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  cmd.add_option("--out", args.out, "write the report to this path instead of stdout");
  cmd.add_flag("--timing", args.timing, "record per-task wall time (output is then not reproducible)");
}

int execute(const Scenario& scenario, const RunArgs& args) {
  Format format;
  try {
    format = parse_format(args.format);
  } catch (const std::invalid_argument& e) {
    std::cerr << "nqs-geom: " << e.what() << "\n";
    return kUsage;
  }
  const Report report = run_tasks(scenario, RunOptions{args.jobs, args.timing});
  const std::string text = emit_report(report, format);
  if (args.out.empty()) {
    std::cout << text << std::flush;
  } else {
    std::ofstream out(args.out, std::ios::binary);
    if (!out || !(out << text)) {
      std::cerr << "nqs-geom: cannot write " << args.out << "\n";
      return kUsage;
    }
  }
  return report.all_ok() ? kOk : kTaskError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context geometry analyses driven by scenario files"};
  app.require_subcommand(1);

  RunArgs run_args;
  run_args.jobs = default_jobs();
  std::string run_path;
  CLI::App* run = app.add_subcommand("run", "run every task of a scenario and emit a report");
  run->add_option("scenario", run_path, "scenario file")->required();
  add_run_flags(*run, run_args);

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "load and validate a scenario without running it");
  validate->add_option("scenario", validate_path, "scenario file")->required();

  RunArgs demo_args = run_args;
  std::string demo_name;
  CLI::App* demo = app.add_subcommand("demo", "run a bundled scenario");
  std::vector<std::string> names;
  for (const auto& d : demo_scenarios()) names.emplace_back(d.name);
  demo->add_option("name", demo_name, "demo name")->required()->check(CLI::IsMember(names));
  add_run_flags(*demo, demo_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return execute(load_scenario_file(run_path), run_args);
    if (*validate) {
      const Scenario s = load_scenario_file(validate_path);
      std::size_t edges = s.graph ? s.graph->edges.size() : 0;
      std::cout << "valid: " << s.name << " (" << s.contexts.size() << " contexts, " << edges << " edges, "
                << s.tasks.size() << " tasks)\n";
      return kOk;
    }
    for (const auto& d : demo_scenarios()) {
      if (d.name == demo_name) return execute(load_scenario(std::string(d.text), std::string(d.scenario)), demo_args);
    }
  } catch (const LoadError& e) {
    std::cerr << "nqs-geom: " << e.describe() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "nqs-geom: internal error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
