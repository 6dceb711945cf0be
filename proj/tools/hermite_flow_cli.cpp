// Command-line front end: one subcommand per experiment kind, plus `validate`
// for config linting and `replay` for re-running a recorded summary.
//
// Exit codes: 0 = PASS (or replay match), 2 = FAIL (or replay mismatch),
// 1 = error (bad config, wrong subcommand for the config's kind, I/O).

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "hflow/experiment.hpp"
#include "hflow/parallel.hpp"

namespace {

struct RunArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

void apply_threads(int flag_value) {
  int threads = flag_value;
  if (threads <= 0) {
    if (const char* env = std::getenv("HERMITE_FLOW_THREADS")) {
      threads = std::atoi(env);
    }
  }
  hflow::set_threads(threads);
}

int run_experiment(const std::string& kind, const RunArgs& args) {
  apply_threads(args.threads);
  hflow::ExperimentConfig config = hflow::load_config(args.config_path);
  if (hflow::kind_name(config.kind) != kind) {
    std::fprintf(stderr, "error: config kind is '%s' but the subcommand is '%s'\n",
                 hflow::kind_name(config.kind), kind.c_str());
    return 1;
  }
  if (args.seed_given) {
    config.seed = args.seed;
    config.seed_set = true;
  }

  const std::vector<std::string> problems = hflow::validate(config);
  if (!problems.empty()) {
    for (const std::string& p : problems) std::fprintf(stderr, "error: %s\n", p.c_str());
    return 1;
  }

  hflow::ExperimentReport report = hflow::run(config);
  std::string out = args.out_dir;
  if (out.empty()) out = config.out_dir;
  if (out.empty()) out = "hflow-out";
  hflow::write_outputs(report, config, out);

  std::printf("%s %s (digest %016llx, %.2fs) -> %s\n", report.pass ? "PASS" : "FAIL",
              kind.c_str(), static_cast<unsigned long long>(report.digest),
              report.wall_seconds, out.c_str());
  for (const auto& [name, value] : report.metrics) {
    std::printf("  %s = %s\n", name.c_str(), hflow::format_double(value).c_str());
  }
  return report.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermite spectral toolkit: operator checks, Galerkin evolution, "
               "and stochastic-flow cross-validation"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {
      "mono-check", "norm-equiv", "order-reduction", "pde-solve",
      "spde-simulate", "represent", "adjoint-check"};
  std::vector<RunArgs> run_args(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i], "Run a " + kinds[i] + " experiment");
    RunArgs& args = run_args[i];
    sub->add_option("--config", args.config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "Override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_option("--out", args.out_dir, "Output directory (default: config, else hflow-out)");
    sub->add_option("--threads", args.threads,
                    "Worker threads (default: HERMITE_FLOW_THREADS, else all cores)");
  }

  std::string validate_path;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Lint a config and print diagnostics");
  validate_cmd->add_option("--config", validate_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);

  std::string replay_path;
  int replay_threads = 0;
  CLI::App* replay_cmd =
      app.add_subcommand("replay", "Re-run a summary.txt and compare every metric");
  replay_cmd->add_option("summary", replay_path, "summary.txt from a previous run")
      ->required()
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--threads", replay_threads,
                         "Worker threads (default: HERMITE_FLOW_THREADS, else all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      const hflow::ExperimentConfig config = hflow::load_config(validate_path);
      const std::vector<std::string> problems = hflow::validate(config);
      if (problems.empty()) {
        std::printf("ok: config is runnable (kind %s, digest %016llx)\n",
                    hflow::kind_name(config.kind),
                    static_cast<unsigned long long>(hflow::config_digest(config)));
        return 0;
      }
      for (const std::string& p : problems) std::printf("problem: %s\n", p.c_str());
      return 1;
    }
    if (replay_cmd->parsed()) {
      apply_threads(replay_threads);
      const hflow::ReplayResult result = hflow::replay(replay_path);
      if (result.match) {
        std::printf("MATCH: replay reproduced every recorded metric\n");
        return 0;
      }
      std::printf("MISMATCH: %zu divergences\n", result.mismatches.size());
      for (const std::string& m : result.mismatches) {
        std::printf("  %s\n", m.c_str());
      }
      return 2;
    }
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (app.get_subcommand(kinds[i])->parsed()) {
        return run_experiment(kinds[i], run_args[i]);
      }
    }
    std::fprintf(stderr, "error: no subcommand selected\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
