#pragma once

// Offline baseline: the same width-N network fitted once, by full-batch
// gradient descent, to the whole training trajectory.
//
//   L(theta) = (1/K) sum_k (f(x_k) - y_k)^2 + (lambda / 2N) sum_i |theta_i|^2,
//   f(x) = (1/N) sum_i sigma(x, theta_i).
//
// Steps use the mean-field scaling theta_i <- theta_i - lr * N * dL/dtheta_i,
// which is the same per-particle drift the online learner follows.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/model.hpp"
#include "mfregret/onpgd.hpp"

namespace mfregret {

struct OfflineFitConfig {
  std::size_t iters = 2000;
  double learning_rate = 0.05;
  double lambda = 0.1;
  std::size_t particles = 80;
  double init_sd = 1.0;  // same initialization as the online learner
  std::uint64_t init_seed = 0;
  double divergence_threshold = 1e6;
  Neuron neuron{};

  void validate() const;
};

struct OfflineFit {
  ParticleEnsemble params;
  std::vector<double> loss_trace;  // loss before each step, then the final loss
};

double batch_loss(const ParticleEnsemble& params, const Trajectory& train, double lambda,
                  const Neuron& neuron = {});

// dL/dtheta, flattened like the ensemble parameters. Also returns the loss.
double batch_loss_gradient(const ParticleEnsemble& params, const Trajectory& train, double lambda,
                           std::span<double> grad, const Neuron& neuron = {});

OfflineFit fit_offline(const Trajectory& train, const OfflineFitConfig& config);

// Same, from given starting parameters instead of the seeded Gaussian draw.
OfflineFit fit_offline_from(const Trajectory& train, const OfflineFitConfig& config,
                            ParticleEnsemble initial);

std::vector<double> static_predictions(const ParticleEnsemble& params, const Trajectory& test,
                                       const Neuron& neuron = {});

struct PairedMse {
  double online = 0.0;
  double offline = 0.0;
};

// Trains both learners on `train` and scores them on `test`. The online run
// is seeded by `seed`; the offline fit by config.init_seed.
PairedMse compare_oos(const Trajectory& train, const Trajectory& test, const OnpgdConfig& online,
                      const OfflineFitConfig& offline, std::uint64_t seed);

// Columns: iter,loss
void write_loss_trace_csv(std::ostream& out, std::span<const double> trace);

}  // namespace mfregret
