#pragma once

// Experiment configuration for labctl.
//
// Files are flat `key = value` lines; keys use dotted section names
// (`onpgd.beta = 0.02`), `#` starts a comment, and list values are
// comma-separated (`sweep.beta = 0.005, 0.02, 0.05, 0.2`). Every command-line
// flag overrides the matching key.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/equilibrium.hpp"
#include "mfregret/offline.hpp"
#include "mfregret/onpgd.hpp"

namespace labctl {

class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class Scenario { periodic, nonlinear };
std::string to_string(Scenario s);

struct VerifySettings {
  std::size_t instances = 20;
  std::size_t n_is = 200000;
  std::size_t grid_points = 2001;
  double grid_half_width = 6.0;
  double fd_step = 1e-4;
  double gap_tol = 1e-6;
  double dym_tol = 1e-4;
  double is_tol = 3e-3;
  double constants_tol = 1e-9;
};

struct ExperimentConfig {
  std::string experiment;  // defaults to the command name
  Scenario scenario = Scenario::nonlinear;
  std::size_t trials = 30;
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;
  std::filesystem::path out_dir;  // empty: $LABCTL_OUT or ./out

  mfregret::PeriodicConfig periodic{};
  mfregret::NonlinearConfig nonlinear{};
  mfregret::OnpgdConfig onpgd{};
  mfregret::IsSolverConfig is{};
  mfregret::OfflineFitConfig offline{};
  std::size_t eval_stride = 100;
  bool with_static = false;
  std::size_t rho_samples = 20000;
  mfregret::RhoStarConfig rho{};
  bool sweep_oos = true;

  std::vector<std::size_t> sweep_particles;
  std::vector<double> sweep_beta;
  std::vector<double> sweep_lambda;

  VerifySettings verify{};

  // Unknown keys and malformed values throw mfregret::InputError.
  static ExperimentConfig from(const KeyValues& kv);
  void validate() const;
  // Resolved output root: out_dir, else $LABCTL_OUT, else "out".
  std::filesystem::path output_root() const;
  // Canonical key = value rendering of every setting.
  std::string dump() const;
};

inline constexpr const char* kOutEnv = "LABCTL_OUT";

}  // namespace labctl
