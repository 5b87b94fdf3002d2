#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathcalc/serialize.hpp"
#include "pathcalc/verdict.hpp"

namespace pathcalc {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { kSummability, kTaylor, kQV, kIto, kTanaka, kCompensator, kIndependence };

const char* to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> experiment_kind(const std::string& name);

// Command-line overrides applied on top of the config document.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<int> level;  // finest level; the other levels keep their offsets
  std::optional<std::string> out;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kQV;
  std::string name;           // directory below the output root
  std::uint64_t base_seed = 1;
  std::size_t n_paths = 1;
  std::vector<int> levels;
  std::filesystem::path output_dir;
  std::size_t persist_seeds = 8;  // leading seeds that get their own directory
  Json document;              // effective config, overrides applied
};

// Validates the whole document (every catalog name is resolved). Throws
// ConfigError, UnsupportedModel or FormatError (schema version).
ExperimentConfig parse_config(Json document, const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& file, const Overrides& overrides = {});

struct RunOutcome {
  VerdictRecord verdict;
  std::filesystem::path directory;  // output_dir / name
  int exit_code() const noexcept { return verdict.pass() ? 0 : 1; }
};

// Runs the suite, writes
//   <out>/<name>/aggregate.json, summary.txt
//   <out>/<name>/<seed>/paths.csv, report.json, summary.txt  (leading seeds)
// Unwritable output raises ConfigError.
RunOutcome run_experiment(const ExperimentConfig& config);

// Re-judges a run directory from its persisted numbers only. Per-seed
// report.json files take precedence over the aggregate copy. Missing or
// malformed files raise FormatError.
RunOutcome replay_experiment(const std::filesystem::path& directory);

// One line per check: "<name> <value>: PASS|FAIL".
std::string summary_text(const VerdictRecord& verdict);

// Functions, path models, increasing processes, integrands, functionals.
std::string catalog_listing();

}  // namespace pathcalc
