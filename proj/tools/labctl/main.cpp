#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "labctl/commands.hpp"
#include "labctl/config.hpp"
#include "mfregret/errors.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Config file (key = value lines)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--trials", f.trials, "Number of trials");
  cmd->add_option("--out", f.out, "Output root (default $LABCTL_OUT, else ./out)");
  cmd->add_option("--threads", f.threads, "Worker threads");
  cmd->add_option("--set", f.sets, "Override a config key, e.g. --set onpgd.beta=0.05");
}

labctl::ExperimentConfig resolve(const CommonFlags& f) {
  labctl::KeyValues kv;
  if (!f.config.empty()) kv = labctl::KeyValues::load(f.config);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw mfregret::InputError("--set expects key=value, got " + s);
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (f.trials) kv.set("trials", std::to_string(*f.trials));
  if (f.out) kv.set("out", *f.out);
  if (f.threads) kv.set("threads", std::to_string(*f.threads));
  return labctl::ExperimentConfig::from(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labctl: experiments for mean-field online learning under streaming data"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string stats_dir;
  auto* generate = app.add_subcommand("generate", "Write train/test trajectories per trial");
  auto* oos = app.add_subcommand("oos-compare", "Online vs offline out-of-sample MSE");
  auto* sweep = app.add_subcommand("regret-sweep", "Regret series over (N, beta, lambda) cells");
  auto* verify = app.add_subcommand("verify", "Identity and solver checks; exit 2 on failure");
  auto* stats = app.add_subcommand("stats", "Recompute tables from an oos-compare directory");
  for (auto* cmd : {generate, oos, sweep, verify}) add_common(cmd, flags);
  stats->add_option("dir", stats_dir, "Experiment directory written by oos-compare")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : labctl::kOperationalError;
  }

  try {
    labctl::CommandResult result;
    if (*stats) {
      result = labctl::run_stats(stats_dir);
    } else {
      const auto config = resolve(flags);
      if (*generate) result = labctl::run_generate(config);
      else if (*oos) result = labctl::run_oos_compare(config);
      else if (*sweep) result = labctl::run_regret_sweep(config);
      else result = labctl::run_verify(config);
    }
    std::cout << result.report.dump(2) << "\n";
    if (result.exit_code == labctl::kVerificationFailed) {
      std::cerr << "labctl: verification failed\n";
    } else if (result.exit_code != labctl::kOk) {
      std::cerr << "labctl: completed with failures, see report.json\n";
    }
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "labctl: " << e.what() << "\n";
    return labctl::kOperationalError;
  }
}
