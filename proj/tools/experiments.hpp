#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incfed/environment.hpp"
#include "incfed/protocol.hpp"

namespace incfed::experiments {

enum class RunMode { run, ablate };

struct EmitFlags {
  bool per_step_csv = true;
  bool epoch_log = true;
  bool summary = true;
};

/// Fully resolved experiment description.
struct ExperimentSpec {
  RunMode mode = RunMode::run;
  EnvConfig env;
  /// Dataset file; when set the environment is replayed from it and the
  /// synthetic fields of `env` are ignored.
  std::optional<std::filesystem::path> dataset;
  ProtocolConfig protocol;
  std::uint64_t seed_base = 0;
  std::size_t n_seeds = 1;
  std::filesystem::path output_dir = "results";
  EmitFlags emit;
  /// Worker threads for the seed fan-out; 0 picks hardware concurrency.
  std::size_t jobs = 0;
};

/// Parses command-line style arguments (without the program name). A
/// `--config <file>` option loads the same keys from an INI/TOML file. Unknown
/// keys, type mismatches and out-of-range values throw ConfigError naming the
/// key. `--help` throws CLI::CallForHelp.
ExperimentSpec parse_config(const std::vector<std::string>& args);

std::string usage();

/// Aggregate over seeds for one variant.
struct VariantSummary {
  std::string variant;
  double mean_final = 0.0;
  double std_final = 0.0;
  double mean_comm = 0.0;
  double mean_payment = 0.0;
  std::size_t n_seeds = 0;
};

VariantSummary summarize(std::string variant, std::span<const RunMetrics> runs);

std::string format_steps_csv(const RunMetrics& m);
std::string format_epochs_csv(const RunMetrics& m);
std::string format_summary_csv(std::span<const VariantSummary> rows);

/// Builds the environment for one seed (synthetic) or loads the dataset.
Environment make_environment(const ExperimentSpec& spec, std::uint64_t seed);

/// Runs `cfg` on seeds seed_base .. seed_base+n_seeds-1 with a bounded worker
/// pool. Results are ordered by seed.
std::vector<RunMetrics> run_seeds(const ExperimentSpec& spec, const ProtocolConfig& cfg);

struct Report {
  std::vector<VariantSummary> variants;
  /// Per variant, per seed.
  std::vector<std::vector<RunMetrics>> runs;
};

/// Runs the configured mechanism and writes
///   <out>/<variant>/steps_seed<s>.csv, <out>/<variant>/epochs_seed<s>.csv,
///   <out>/summary.csv
Report run_experiment(const ExperimentSpec& spec);

/// Runs the payment-efficient mechanism in four variants (full, wo_pf,
/// wo_is, wo_pf_is) on identical seeds and writes the same files per variant
/// plus one summary row per variant.
Report run_ablation(const ExperimentSpec& spec);

/// Dispatches on spec.mode.
Report run(const ExperimentSpec& spec);

}  // namespace incfed::experiments
