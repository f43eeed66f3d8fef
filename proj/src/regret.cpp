#include "mfregret/regret.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "mfregret/errors.hpp"
#include "mfregret/measures.hpp"
#include "mfregret/rng.hpp"

namespace mfregret {

std::string to_string(RegretVariant v) {
  return v == RegretVariant::regularized ? "regularized" : "unregularized";
}

std::string to_string(RegretBenchmark b) {
  return b == RegretBenchmark::dynamic ? "dynamic" : "static";
}

double instantaneous_regret(const MeasureView& ensemble, const MeasureView& benchmark,
                            const DataPoint& z, double lambda, RegretVariant variant,
                            const Neuron& neuron) {
  if (variant == RegretVariant::regularized) {
    return cost_u(ensemble, z, lambda, neuron) - cost_u(benchmark, z, lambda, neuron);
  }
  return cost_u_unreg(ensemble, z, neuron) - cost_u_unreg(benchmark, z, neuron);
}

std::vector<double> cumulative_regret(std::span<const double> times,
                                      std::span<const double> instantaneous) {
  if (times.size() != instantaneous.size()) throw InputError("cumulative_regret: length mismatch");
  if (times.empty()) throw InputError("cumulative_regret: empty series");
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t l = 1; l < times.size(); ++l) {
    const double dt = times[l] - times[l - 1];
    if (!(dt > 0.0)) throw InputError("cumulative_regret: times must be strictly increasing");
    out[l] = out[l - 1] + 0.5 * (instantaneous[l - 1] + instantaneous[l]) * dt;
  }
  return out;
}

std::vector<std::size_t> eval_subgrid(std::size_t steps, std::size_t stride) {
  if (steps == 0 || stride == 0) throw InputError("eval_subgrid: need steps >= 1 and stride >= 1");
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= steps; k += stride) ks.push_back(k);
  if (ks.back() != steps) ks.push_back(steps);
  return ks;
}

void RegretConfig::validate() const {
  onpgd.validate();
  is.validate();
  if (eval_stride == 0) throw InputError("regret: eval_stride must be >= 1");
  if (!(onpgd.lambda > 0.0) || !(onpgd.beta > 0.0)) {
    throw InputError("regret: the benchmark prior N(0, beta/lambda) needs lambda, beta > 0");
  }
  if (with_static) {
    rho.validate();
    if (rho_samples == 0) throw InputError("regret: rho_samples must be >= 1");
  }
}

RegretSeries RegretBundle::series(RegretVariant variant, RegretBenchmark benchmark) const {
  if (benchmark == RegretBenchmark::fixed && !has_static) {
    throw InputError("regret bundle was computed without the static benchmark");
  }
  RegretSeries s;
  s.variant = variant;
  s.benchmark = benchmark;
  const bool reg = variant == RegretVariant::regularized;
  for (const auto& p : points) {
    s.eval_times.push_back(p.t);
    const double learner = reg ? p.learner_reg : p.learner_unreg;
    const double bench = benchmark == RegretBenchmark::dynamic ? (reg ? p.mu_reg : p.mu_unreg)
                                                               : (reg ? p.rho_reg : p.rho_unreg);
    s.instantaneous.push_back(learner - bench);
  }
  s.cumulative = cumulative_regret(s.eval_times, s.instantaneous);
  return s;
}

RegretBundle regret_run(const Trajectory& traj, const RegretConfig& config, std::uint64_t seed) {
  traj.validate();
  config.validate();
  const auto& oc = config.onpgd;
  const std::size_t dim = param_dim(traj.n_inputs);
  const double prior_var = oc.beta / oc.lambda;
  const auto grid = eval_subgrid(traj.size(), config.eval_stride);

  RegretBundle bundle;
  std::optional<WeightedMeasure> rho_star;
  if (config.with_static) {
    const auto samples = draw_prior_samples(config.rho_samples, dim, prior_var,
                                            derive_key(seed, "rho-star-samples"));
    auto sol = solve_rho_star(traj, MeasureView{samples, dim, {}}, oc.beta, config.rho, oc.neuron);
    bundle.has_static = true;
    bundle.rho_iterations = sol.iterations;
    bundle.rho_residual = sol.residual;
    rho_star = std::move(sol.measure);
  }

  std::size_t next = 0;
  DataPoint z;
  run_online_observed(traj, oc, seed, [&](std::size_t k, const ParticleEnsemble& ens) {
    if (next >= grid.size() || grid[next] != k) return;
    const std::size_t l = next++;
    z = traj.point(k);
    const auto samples = draw_prior_samples(config.is.n_is, dim, prior_var,
                                            derive_key(seed, "is-samples", {l}));
    MuStar mu;
    try {
      mu = solve_mu_star(MeasureView{samples, dim, {}}, z, oc.beta, config.is, oc.neuron);
    } catch (const SolverError& e) {
      throw SolverError("regret subgrid point " + std::to_string(l) + " (k = " + std::to_string(k) +
                        "): " + e.what());
    }
    RegretPoint p;
    p.k = k;
    p.t = traj.time(k);
    const auto learner = ens.view();
    p.learner_unreg = cost_u_unreg(learner, z, oc.neuron);
    p.learner_reg = p.learner_unreg + 0.5 * oc.lambda * second_moment(learner);
    p.m_learner = predict(learner, z.x, oc.neuron);
    p.mu_unreg = cost_u_unreg(mu.measure.view(), z, oc.neuron);
    p.mu_reg = p.mu_unreg + 0.5 * oc.lambda * second_moment(mu.measure.view());
    p.m_star = mu.m_star;
    p.ess = mu.ess;
    p.low_ess = mu.low_ess;
    if (rho_star) {
      p.rho_unreg = cost_u_unreg(rho_star->view(), z, oc.neuron);
      p.rho_reg = p.rho_unreg + 0.5 * oc.lambda * second_moment(rho_star->view());
    }
    bundle.low_ess_points += mu.low_ess;
    bundle.points.push_back(p);
  });
  return bundle;
}

void write_regret_csv(std::ostream& out, std::span<const RegretSeries> series,
                      const RegretCsvMeta& meta, bool header) {
  if (header) out << "t,instantaneous,cumulative,variant,benchmark,trial,N,beta,lambda\n";
  out << std::setprecision(17);
  for (const auto& s : series) {
    for (std::size_t l = 0; l < s.eval_times.size(); ++l) {
      out << s.eval_times[l] << ',' << s.instantaneous[l] << ',' << s.cumulative[l] << ','
          << to_string(s.variant) << ',' << to_string(s.benchmark) << ',' << meta.trial << ','
          << meta.particles << ',' << meta.beta << ',' << meta.lambda << '\n';
    }
  }
}

}  // namespace mfregret
