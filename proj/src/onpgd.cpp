#include "mfregret/onpgd.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "mfregret/errors.hpp"
#include "mfregret/rng.hpp"

namespace mfregret {

ParticleEnsemble::ParticleEnsemble(std::size_t particles, std::size_t dim)
    : particles_(particles), dim_(dim), params_(particles * dim, 0.0) {}

ParticleEnsemble::ParticleEnsemble(std::size_t dim, std::vector<double> flat_params)
    : dim_(dim), params_(std::move(flat_params)) {
  if (dim_ == 0 || params_.size() % dim_ != 0) throw InputError("ensemble: ragged parameters");
  particles_ = params_.size() / dim_;
}

void OnpgdConfig::validate() const {
  if (particles == 0) throw InputError("onpgd: need at least one particle");
  if (!self_interaction && particles < 2) {
    throw InputError("onpgd: leave-one-out interaction needs N >= 2");
  }
  if (!(dt > 0.0)) throw InputError("onpgd: dt must be positive");
  if (!(lambda >= 0.0) || !(beta >= 0.0)) throw InputError("onpgd: lambda, beta must be >= 0");
  if (init_sd && !(*init_sd >= 0.0)) throw InputError("onpgd: init_sd must be >= 0");
}

double OnpgdConfig::init_stddev() const {
  if (init_sd) return *init_sd;
  if (lambda > 0.0 && beta > 0.0) return std::sqrt(beta / lambda);
  throw InputError("onpgd: Gaussian init needs lambda > 0 and beta > 0, or an explicit init_sd");
}

ParticleEnsemble init_ensemble(const OnpgdConfig& config, std::size_t n_inputs, std::uint64_t seed) {
  config.validate();
  const double sd = config.init_stddev();
  ParticleEnsemble ens(config.particles, param_dim(n_inputs));
  for (std::size_t i = 0; i < ens.size(); ++i) {
    Stream rng(derive_key(seed, "onpgd-init", {i}));
    for (double& v : ens.theta(i)) v = sd * rng.normal();
  }
  return ens;
}

void draw_step_noise(std::uint64_t seed, std::size_t step_index, std::size_t particles,
                     std::size_t dim, std::span<double> out) {
  if (out.size() != particles * dim) throw InputError("draw_step_noise: output size");
  for (std::size_t i = 0; i < particles; ++i) {
    Stream rng(derive_key(seed, "onpgd-noise", {i, step_index}));
    rng.fill_normal(out.subspan(i * dim, dim));
  }
}

void step(ParticleEnsemble& ensemble, const DataPoint& z, const OnpgdConfig& config,
          std::span<const double> noise) {
  const std::size_t n = ensemble.size();
  const std::size_t d = ensemble.dim();
  if (noise.size() != n * d) throw InputError("onpgd step: noise block has the wrong size");
  if (z.x.size() + 2 != d) throw InputError("onpgd step: covariate dimension mismatch");
  if (!config.self_interaction && n < 2) throw InputError("onpgd step: leave-one-out needs N >= 2");

  // Shared mean prediction first; every particle update reads only this.
  std::vector<double> values(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = config.neuron.value(z.x, ensemble.theta(i));
    total += values[i];
  }
  const double full_mean = total / static_cast<double>(n);

  const double noise_scale = std::sqrt(2.0 * config.beta * config.dt);
  std::vector<double> grad(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = config.self_interaction
                         ? full_mean
                         : (total - values[i]) / static_cast<double>(n - 1);
    auto theta = ensemble.theta(i);
    config.neuron.gradient(z.x, theta, grad);
    const double err = 2.0 * (m - z.y);
    for (std::size_t j = 0; j < d; ++j) {
      const double drift = -config.lambda * theta[j] - err * grad[j];
      theta[j] += drift * config.dt + noise_scale * noise[i * d + j];
      if (!std::isfinite(theta[j])) {
        throw BlowUpError(i, ensemble.step() + 1,
                          "onpgd: particle " + std::to_string(i) + " became non-finite at step " +
                              std::to_string(ensemble.step() + 1));
      }
    }
  }
  ensemble.set_step(ensemble.step() + 1);
}

void step(ParticleEnsemble& ensemble, const DataPoint& z, const OnpgdConfig& config,
          std::uint64_t seed) {
  std::vector<double> noise(ensemble.size() * ensemble.dim());
  if (config.beta > 0.0) {
    draw_step_noise(seed, ensemble.step() + 1, ensemble.size(), ensemble.dim(), noise);
  }
  step(ensemble, z, config, std::span<const double>(noise));
}

ParticleEnsemble run_online_observed(const Trajectory& traj, const OnpgdConfig& config,
                                     std::uint64_t seed, const StepObserver& observer) {
  traj.validate();
  config.validate();
  ParticleEnsemble ens = init_ensemble(config, traj.n_inputs, seed);
  DataPoint z;
  z.x.resize(traj.n_inputs);
  for (std::size_t k = 1; k <= traj.size(); ++k) {
    if (observer) observer(k, ens);
    const auto xk = traj.x(k);
    z.x.assign(xk.begin(), xk.end());
    z.y = traj.y(k);
    step(ens, z, config, seed);
  }
  return ens;
}

std::vector<Snapshot> run_online(const Trajectory& traj, const OnpgdConfig& config,
                                 std::uint64_t seed, std::size_t snapshot_every) {
  if (snapshot_every == 0) throw InputError("run_online: snapshot_every must be >= 1");
  std::vector<Snapshot> snaps;
  auto final_ens = run_online_observed(traj, config, seed,
                                       [&](std::size_t k, const ParticleEnsemble& ens) {
                                         const std::size_t consumed = k - 1;
                                         if (consumed % snapshot_every == 0) {
                                           snaps.push_back({consumed, ens});
                                         }
                                       });
  if (snaps.empty() || snaps.back().step != final_ens.step()) {
    snaps.push_back({final_ens.step(), std::move(final_ens)});
  }
  return snaps;
}

std::vector<double> online_predictions(const Trajectory& train, const Trajectory& test,
                                       const OnpgdConfig& config, std::uint64_t seed) {
  if (test.size() != train.size() || test.n_inputs != train.n_inputs) {
    throw InputError("online_predictions: train and test grids differ");
  }
  std::vector<double> preds(test.size());
  run_online_observed(train, config, seed, [&](std::size_t k, const ParticleEnsemble& ens) {
    preds[k - 1] = predict(ens.view(), test.x(k), config.neuron);
  });
  return preds;
}

void write_snapshots_csv(std::ostream& out, std::span<const Snapshot> snapshots) {
  if (snapshots.empty()) return;
  const std::size_t n_inputs = snapshots.front().ensemble.dim() - 2;
  out << "k,particle_id,a";
  for (std::size_t j = 1; j <= n_inputs; ++j) out << ",w" << j;
  out << ",b\n" << std::setprecision(17);
  for (const auto& snap : snapshots) {
    for (std::size_t i = 0; i < snap.ensemble.size(); ++i) {
      out << snap.step << ',' << i;
      for (double v : snap.ensemble.theta(i)) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace mfregret
