#pragma once

// Online noisy particle gradient descent: the Euler-Maruyama discretization of
// the N-particle Langevin system that tracks the streaming quadratic loss,
//
//   theta_i' = theta_i + [-lambda theta_i - 2 (m_i - y) grad sigma(x, theta_i)] dt
//              + sqrt(2 beta dt) xi_i,
//
// with m_i the full-ensemble prediction (self-interaction on) or the
// leave-one-out prediction over the other N - 1 particles (off).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/model.hpp"

namespace mfregret {

class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  ParticleEnsemble(std::size_t particles, std::size_t dim);
  ParticleEnsemble(std::size_t dim, std::vector<double> flat_params);

  std::size_t size() const { return particles_; }
  std::size_t dim() const { return dim_; }
  std::size_t step() const { return step_; }
  void set_step(std::size_t k) { step_ = k; }

  std::span<double> theta(std::size_t i) { return std::span<double>(params_).subspan(i * dim_, dim_); }
  std::span<const double> theta(std::size_t i) const {
    return std::span<const double>(params_).subspan(i * dim_, dim_);
  }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  MeasureView view() const { return MeasureView{params_, dim_, {}}; }

  bool operator==(const ParticleEnsemble&) const = default;

 private:
  std::size_t particles_ = 0;
  std::size_t dim_ = 0;
  std::size_t step_ = 0;
  std::vector<double> params_;
};

struct OnpgdConfig {
  std::size_t particles = 80;  // N
  double lambda = 0.1;
  double beta = 0.02;
  double dt = 0.02;
  bool self_interaction = true;
  // Standard deviation of the i.i.d. Gaussian initialization. Unset means the
  // Gaussian prior N(0, beta/lambda); the unit default trains markedly better
  // at the low temperatures used in the experiments.
  std::optional<double> init_sd = 1.0;
  Neuron neuron{};

  void validate() const;
  double init_stddev() const;
};

ParticleEnsemble init_ensemble(const OnpgdConfig& config, std::size_t n_inputs, std::uint64_t seed);

// One Euler-Maruyama step with caller-supplied standard normals
// (noise.size() == N * d, row i drives particle i).
void step(ParticleEnsemble& ensemble, const DataPoint& z, const OnpgdConfig& config,
          std::span<const double> noise);

// Same, drawing particle i's noise from the stream keyed by (seed, i, step).
void step(ParticleEnsemble& ensemble, const DataPoint& z, const OnpgdConfig& config,
          std::uint64_t seed);

void draw_step_noise(std::uint64_t seed, std::size_t step_index, std::size_t particles,
                     std::size_t dim, std::span<double> out);

// Called with the 1-based index k of the data point about to be consumed and
// the ensemble that has seen z_1..z_{k-1}; it is the predictor at time t_k.
using StepObserver = std::function<void(std::size_t k, const ParticleEnsemble&)>;

// Runs the learner over the whole trajectory, returning the final ensemble
// (step() == K).
ParticleEnsemble run_online_observed(const Trajectory& traj, const OnpgdConfig& config,
                                     std::uint64_t seed, const StepObserver& observer);

struct Snapshot {
  std::size_t step = 0;  // number of data points consumed
  ParticleEnsemble ensemble;
};

// Snapshots at step counts 0, every, 2*every, ... plus the final step K.
std::vector<Snapshot> run_online(const Trajectory& traj, const OnpgdConfig& config,
                                 std::uint64_t seed, std::size_t snapshot_every);

// Network predictions at test covariates: entry k-1 uses the predictor at t_k.
std::vector<double> online_predictions(const Trajectory& train, const Trajectory& test,
                                       const OnpgdConfig& config, std::uint64_t seed);

// Columns: k,particle_id,a,w1..wn,b
void write_snapshots_csv(std::ostream& out, std::span<const Snapshot> snapshots);

}  // namespace mfregret
