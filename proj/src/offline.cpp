#include "mfregret/offline.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "mfregret/errors.hpp"
#include "mfregret/measures.hpp"
#include "mfregret/rng.hpp"

namespace mfregret {

void OfflineFitConfig::validate() const {
  if (iters == 0) throw InputError("offline: iters must be >= 1");
  if (!(learning_rate > 0.0)) throw InputError("offline: learning_rate must be positive");
  if (!(lambda >= 0.0)) throw InputError("offline: lambda must be >= 0");
  if (particles == 0) throw InputError("offline: need at least one particle");
  if (!(init_sd >= 0.0)) throw InputError("offline: init_sd must be >= 0");
}

namespace {

// Activations for all (k, i) pairs: row k holds tanh(w_i . x_k + b_i).
void activations(const ParticleEnsemble& params, const Trajectory& train, std::vector<double>& act) {
  const std::size_t K = train.size();
  const std::size_t N = params.size();
  const std::size_t n = train.n_inputs;
  act.resize(K * N);
  for (std::size_t k = 1; k <= K; ++k) {
    const auto x = train.x(k);
    double* row = act.data() + (k - 1) * N;
    for (std::size_t i = 0; i < N; ++i) {
      const auto th = params.theta(i);
      double u = th[n + 1];
      for (std::size_t j = 0; j < n; ++j) u += th[1 + j] * x[j];
      row[i] = std::tanh(u);
    }
  }
}

double penalty(const ParticleEnsemble& params, double lambda) {
  double sq = 0.0;
  for (double v : params.params()) sq += v * v;
  return 0.5 * lambda * sq / static_cast<double>(params.size());
}

void check_shapes(const ParticleEnsemble& params, const Trajectory& train) {
  train.validate();
  if (params.dim() != param_dim(train.n_inputs)) {
    throw InputError("offline: parameter dimension does not match the trajectory");
  }
}

}  // namespace

double batch_loss(const ParticleEnsemble& params, const Trajectory& train, double lambda,
                  const Neuron& neuron) {
  check_shapes(params, train);
  const auto view = params.view();
  double s = 0.0;
  for (std::size_t k = 1; k <= train.size(); ++k) {
    const double e = predict(view, train.x(k), neuron) - train.y(k);
    s += e * e;
  }
  return s / static_cast<double>(train.size()) + penalty(params, lambda);
}

double batch_loss_gradient(const ParticleEnsemble& params, const Trajectory& train, double lambda,
                           std::span<double> grad, const Neuron& neuron) {
  check_shapes(params, train);
  if (grad.size() != params.params().size()) throw InputError("offline: gradient buffer size");
  const std::size_t K = train.size();
  const std::size_t N = params.size();
  const std::size_t n = train.n_inputs;
  const std::size_t d = params.dim();
  const auto& trunc = neuron.truncation();
  std::vector<double> act;
  activations(params, train, act);

  for (std::size_t i = 0; i < N; ++i) {
    const auto th = params.theta(i);
    for (std::size_t j = 0; j < d; ++j) grad[i * d + j] = lambda * th[j] / static_cast<double>(N);
  }
  const double inv_n = 1.0 / static_cast<double>(N);
  const double inv_k = 1.0 / static_cast<double>(K);
  double sq = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    const auto x = train.x(k);
    const double* row = act.data() + (k - 1) * N;
    double f = 0.0;
    for (std::size_t i = 0; i < N; ++i) f += trunc.apply(params.theta(i)[0] * row[i]);
    f *= inv_n;
    const double e = f - train.y(k);
    sq += e * e;
    const double coeff = 2.0 * e * inv_k * inv_n;
    for (std::size_t i = 0; i < N; ++i) {
      const double a = params.theta(i)[0];
      const double t = row[i];
      const double outer = coeff * trunc.slope(a * t);
      const double inner = outer * a * (1.0 - t * t);
      double* g = grad.data() + i * d;
      g[0] += outer * t;
      for (std::size_t j = 0; j < n; ++j) g[1 + j] += inner * x[j];
      g[d - 1] += inner;
    }
  }
  return sq * inv_k + penalty(params, lambda);
}

OfflineFit fit_offline(const Trajectory& train, const OfflineFitConfig& config) {
  config.validate();
  OnpgdConfig init_cfg;
  init_cfg.particles = config.particles;
  init_cfg.init_sd = config.init_sd;
  return fit_offline_from(train, config,
                          init_ensemble(init_cfg, train.n_inputs, derive_key(config.init_seed, "offline")));
}

OfflineFit fit_offline_from(const Trajectory& train, const OfflineFitConfig& config,
                            ParticleEnsemble initial) {
  config.validate();
  train.validate();
  OfflineFit fit;
  fit.params = std::move(initial);
  std::vector<double> grad(fit.params.params().size());
  const double step = config.learning_rate * static_cast<double>(fit.params.size());
  fit.loss_trace.reserve(config.iters + 1);
  auto check = [&](double loss, std::size_t iter) {
    if (!std::isfinite(loss) || loss > config.divergence_threshold) {
      throw DivergenceError(iter, "offline fit diverged at iteration " + std::to_string(iter) +
                                      " (loss " + std::to_string(loss) + ")");
    }
  };
  for (std::size_t it = 0; it < config.iters; ++it) {
    const double loss = batch_loss_gradient(fit.params, train, config.lambda, grad, config.neuron);
    check(loss, it);
    fit.loss_trace.push_back(loss);
    auto p = fit.params.params();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= step * grad[j];
  }
  const double final_loss = batch_loss(fit.params, train, config.lambda, config.neuron);
  check(final_loss, config.iters);
  fit.loss_trace.push_back(final_loss);
  fit.params.set_step(config.iters);
  return fit;
}

std::vector<double> static_predictions(const ParticleEnsemble& params, const Trajectory& test,
                                       const Neuron& neuron) {
  std::vector<double> preds(test.size());
  const auto view = params.view();
  for (std::size_t k = 1; k <= test.size(); ++k) preds[k - 1] = predict(view, test.x(k), neuron);
  return preds;
}

PairedMse compare_oos(const Trajectory& train, const Trajectory& test, const OnpgdConfig& online,
                      const OfflineFitConfig& offline, std::uint64_t seed) {
  PairedMse out;
  out.online = oos_mse(online_predictions(train, test, online, seed), test);
  const auto fit = fit_offline(train, offline);
  out.offline = oos_mse(static_predictions(fit.params, test, offline.neuron), test);
  return out;
}

void write_loss_trace_csv(std::ostream& out, std::span<const double> trace) {
  out << "iter,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace mfregret
