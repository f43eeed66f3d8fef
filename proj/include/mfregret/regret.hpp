#pragma once

// Empirical regret of the online learner against the instantaneous equilibrium
// (dynamic benchmark) or the hindsight optimizer (static benchmark), on a
// coarse evaluation subgrid of the data grid, aggregated by the trapezoidal rule.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/equilibrium.hpp"
#include "mfregret/model.hpp"
#include "mfregret/onpgd.hpp"

namespace mfregret {

enum class RegretVariant { regularized, unregularized };
enum class RegretBenchmark { dynamic, fixed };

std::string to_string(RegretVariant v);
std::string to_string(RegretBenchmark b);

double instantaneous_regret(const MeasureView& ensemble, const MeasureView& benchmark,
                            const DataPoint& z, double lambda, RegretVariant variant,
                            const Neuron& neuron = {});

// Running trapezoidal integral; entry 0 is 0. Throws unless times strictly increase.
std::vector<double> cumulative_regret(std::span<const double> times,
                                      std::span<const double> instantaneous);

// 1-based data indices 1, 1 + stride, 1 + 2 stride, ... with K appended when
// the stride does not land on it.
std::vector<std::size_t> eval_subgrid(std::size_t steps, std::size_t stride);

struct RegretSeries {
  std::vector<double> eval_times;
  std::vector<double> instantaneous;
  std::vector<double> cumulative;
  RegretVariant variant = RegretVariant::regularized;
  RegretBenchmark benchmark = RegretBenchmark::dynamic;

  double final_cumulative() const { return cumulative.back(); }
};

struct RegretConfig {
  OnpgdConfig onpgd{};
  IsSolverConfig is{};
  std::size_t eval_stride = 100;
  bool with_static = false;
  std::size_t rho_samples = 20000;
  RhoStarConfig rho{};

  void validate() const;
};

// Costs recorded at one subgrid point.
struct RegretPoint {
  std::size_t k = 0;
  double t = 0.0;
  double learner_reg = 0.0;
  double learner_unreg = 0.0;
  double mu_reg = 0.0;
  double mu_unreg = 0.0;
  double rho_reg = 0.0;  // static benchmark, when requested
  double rho_unreg = 0.0;
  double m_learner = 0.0;
  double m_star = 0.0;
  double ess = 0.0;
  bool low_ess = false;
};

struct RegretBundle {
  std::vector<RegretPoint> points;
  bool has_static = false;
  std::size_t rho_iterations = 0;
  double rho_residual = 0.0;
  std::size_t low_ess_points = 0;

  RegretSeries series(RegretVariant variant, RegretBenchmark benchmark) const;
};

RegretBundle regret_run(const Trajectory& traj, const RegretConfig& config, std::uint64_t seed);

struct RegretCsvMeta {
  std::size_t trial = 0;
  std::size_t particles = 0;
  double beta = 0.0;
  double lambda = 0.0;
};

// Columns: t,instantaneous,cumulative,variant,benchmark,trial,N,beta,lambda
void write_regret_csv(std::ostream& out, std::span<const RegretSeries> series,
                      const RegretCsvMeta& meta, bool header = true);

}  // namespace mfregret
