#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "pathcalc/error.hpp"
#include "pathcalc/experiment.hpp"

using namespace pathcalc;

int main(int argc, char** argv) {
  CLI::App app{"pathwise stochastic calculus experiments"};
  app.require_subcommand(1);

  std::string config_file;
  Overrides ov;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  int level = 0;
  std::string out;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_file, "experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "base seed");
  auto* paths_opt = run->add_option("--paths", paths, "number of paths / draws")->check(CLI::PositiveNumber);
  auto* level_opt = run->add_option("--level", level, "finest refinement level")->check(CLI::Range(1, 24));
  auto* out_opt = run->add_option("--out", out, "output root directory");

  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "re-judge a run directory from its persisted numbers");
  replay->add_option("dir", replay_dir, "run directory (<out>/<name>)")->required();

  auto* catalog = app.add_subcommand("catalog", "list functions, models and experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*catalog) {
      std::cout << catalog_listing();
      return 0;
    }
    RunOutcome outcome;
    if (*run) {
      if (*seed_opt) ov.seed = seed;
      if (*paths_opt) ov.paths = paths;
      if (*level_opt) ov.level = level;
      if (*out_opt) ov.out = out;
      outcome = run_experiment(load_config(config_file, ov));
      std::cout << summary_text(outcome.verdict) << "written to " << outcome.directory.string() << "\n";
    } else if (*replay) {
      outcome = replay_experiment(replay_dir);
      std::cout << summary_text(outcome.verdict);
    }
    return outcome.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
  } catch (const UnsupportedModel& e) {
    std::cerr << "unsupported model: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}
