#pragma once

// The five labctl subcommands as library calls. Each writes its CSVs under
// <root>/<experiment>/<cell>/<trial>/ and a report.json at <root>/<experiment>/,
// and returns the same report.

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "labctl/config.hpp"

namespace labctl {

enum ExitCode : int { kOk = 0, kOperationalError = 1, kVerificationFailed = 2 };

struct CommandResult {
  int exit_code = kOk;
  nlohmann::json report;
  std::filesystem::path experiment_dir;
};

// Per-trial seeds. Data and learner streams depend only on (master, trial),
// so every sweep cell sees the same trajectories and noise.
std::uint64_t data_seed(std::uint64_t master, std::size_t trial);
std::uint64_t learner_seed(std::uint64_t master, std::size_t trial);
std::uint64_t offline_seed(std::uint64_t master, std::size_t trial);

std::string trial_dir_name(std::size_t trial);

// Writes train.csv and test.csv per trial.
CommandResult run_generate(const ExperimentConfig& config);

// Online vs offline out-of-sample MSE per trial, summaries and paired tests.
CommandResult run_oos_compare(const ExperimentConfig& config);

// Regret series for every (N, beta, lambda) cell and trial. A failing
// (cell, trial) leaves a failure.txt and a report entry; other cells still run.
CommandResult run_regret_sweep(const ExperimentConfig& config);

// Identity checks against the one-dimensional quadrature oracle and the
// closed-form constants. Exit code 2 when any check misses its tolerance.
CommandResult run_verify(const ExperimentConfig& config);

// Recomputes summaries and paired tests from the oos.csv files of an earlier
// oos-compare run and writes stats.json next to its report.
CommandResult run_stats(const std::filesystem::path& experiment_dir);

}  // namespace labctl
