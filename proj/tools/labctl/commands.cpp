#include "labctl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "labctl/pool.hpp"
#include "mfregret/datastream.hpp"
#include "mfregret/equilibrium.hpp"
#include "mfregret/errors.hpp"
#include "mfregret/measures.hpp"
#include "mfregret/offline.hpp"
#include "mfregret/onpgd.hpp"
#include "mfregret/regret.hpp"
#include "mfregret/rng.hpp"
#include "mfregret/stats.hpp"
#include "mfregret/theory.hpp"

namespace labctl {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfregret;

std::uint64_t data_seed(std::uint64_t master, std::size_t trial) {
  return derive_key(master, "trial-data", {trial});
}
std::uint64_t learner_seed(std::uint64_t master, std::size_t trial) {
  return derive_key(master, "trial-learner", {trial});
}
std::uint64_t offline_seed(std::uint64_t master, std::size_t trial) {
  return derive_key(master, "trial-offline", {trial});
}

std::string trial_dir_name(std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03zu", trial);
  return buf;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

fs::path experiment_dir(const ExperimentConfig& c, const std::string& command) {
  return c.output_root() / (c.experiment.empty() ? command : c.experiment);
}

void write_report(const fs::path& dir, const json& report, const std::string& name = "report.json") {
  write_text(dir / name, report.dump(2) + "\n");
}

TrainTestPair make_data(const ExperimentConfig& c, std::size_t trial) {
  const auto seed = data_seed(c.seed, trial);
  if (c.scenario == Scenario::periodic) return gen_periodic(c.periodic, seed);
  auto inst = gen_nonlinear(c.nonlinear, seed);
  return {std::move(inst.train), std::move(inst.test)};
}

double scenario_dt(const ExperimentConfig& c) {
  return c.scenario == Scenario::periodic ? c.periodic.dt : c.nonlinear.dt;
}

OnpgdConfig online_config(const ExperimentConfig& c) {
  OnpgdConfig oc = c.onpgd;
  oc.dt = scenario_dt(c);
  return oc;
}

std::string fmt(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

json summary_json(const std::vector<double>& v) {
  if (v.size() < 2) {
    json j = {{"n", v.size()}, {"note", "need at least two trials for sd and CI"}};
    if (!v.empty()) j["mean"] = v[0];
    return j;
  }
  const auto s = summarize(v);
  return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi}};
}

json oos_tables(const std::vector<double>& online, const std::vector<double>& offline,
                const std::vector<double>& y2) {
  json j;
  j["panel_a"] = {{"online", summary_json(online)},
                  {"offline", summary_json(offline)},
                  {"mean_y2", summary_json(y2)}};
  try {
    const auto t = paired_tests(online, offline);
    j["panel_b"] = {{"degenerate", false},       {"n", t.n},
                    {"mean_diff", t.mean_diff},  {"t_stat", t.t_stat},
                    {"t_p", t.t_p},              {"wilcoxon_stat", t.wilcoxon_stat},
                    {"wilcoxon_p", t.wilcoxon_p}, {"wilcoxon_exact", t.wilcoxon_exact},
                    {"n_nonzero", t.n_nonzero}};
  } catch (const DegenerateTestError& e) {
    j["panel_b"] = {{"degenerate", true}, {"n", online.size()}, {"reason", e.what()}};
  }
  return j;
}

json base_report(const std::string& command, const ExperimentConfig& c) {
  return {{"command", command},
          {"experiment", c.experiment.empty() ? command : c.experiment},
          {"scenario", to_string(c.scenario)},
          {"trials", c.trials},
          {"seed", c.seed},
          {"config", c.dump()}};
}

}  // namespace

CommandResult run_generate(const ExperimentConfig& c) {
  c.validate();
  CommandResult r;
  r.experiment_dir = experiment_dir(c, "generate");
  const std::string cell = to_string(c.scenario);
  std::vector<json> rows(c.trials);
  parallel_for(c.trials, c.threads, [&](std::size_t t) {
    const auto data = make_data(c, t);
    const auto dir = r.experiment_dir / cell / trial_dir_name(t);
    std::ostringstream train, test;
    write_trajectory_csv(train, data.train);
    write_trajectory_csv(test, data.test);
    write_text(dir / "train.csv", train.str());
    write_text(dir / "test.csv", test.str());
    rows[t] = {{"trial", t},
               {"data_seed", data_seed(c.seed, t)},
               {"mean_y2_train", mean_square_response(data.train)},
               {"mean_y2_test", mean_square_response(data.test)}};
  });
  r.report = base_report("generate", c);
  r.report["cell"] = cell;
  r.report["per_trial"] = rows;
  write_report(r.experiment_dir, r.report);
  return r;
}

CommandResult run_oos_compare(const ExperimentConfig& c) {
  c.validate();
  CommandResult r;
  r.experiment_dir = experiment_dir(c, "oos-compare");
  const std::string cell = to_string(c.scenario);
  const OnpgdConfig oc = online_config(c);
  std::vector<double> online(c.trials), offline(c.trials), y2(c.trials);
  parallel_for(c.trials, c.threads, [&](std::size_t t) {
    const auto data = make_data(c, t);
    const auto on_pred = online_predictions(data.train, data.test, oc, learner_seed(c.seed, t));
    OfflineFitConfig off = c.offline;
    off.init_seed = offline_seed(c.seed, t);
    const auto fit = fit_offline(data.train, off);
    const auto off_pred = static_predictions(fit.params, data.test, off.neuron);
    online[t] = oos_mse(on_pred, data.test);
    offline[t] = oos_mse(off_pred, data.test);
    y2[t] = mean_square_response(data.train);

    const auto dir = r.experiment_dir / cell / trial_dir_name(t);
    std::ostringstream row, pred, loss;
    row << std::setprecision(17) << "trial,online_mse,offline_mse,mean_y2\n"
        << t << ',' << online[t] << ',' << offline[t] << ',' << y2[t] << '\n';
    pred << std::setprecision(17) << "k,t,y,online,offline\n";
    for (std::size_t k = 1; k <= data.test.size(); ++k) {
      pred << k << ',' << data.test.time(k) << ',' << data.test.y(k) << ',' << on_pred[k - 1] << ','
           << off_pred[k - 1] << '\n';
    }
    write_loss_trace_csv(loss, fit.loss_trace);
    write_text(dir / "oos.csv", row.str());
    write_text(dir / "predictions.csv", pred.str());
    write_text(dir / "offline_loss.csv", loss.str());
  });
  r.report = base_report("oos-compare", c);
  r.report["cell"] = cell;
  r.report.update(oos_tables(online, offline, y2));
  r.report["per_trial"] = {{"online_mse", online}, {"offline_mse", offline}, {"mean_y2", y2}};
  write_report(r.experiment_dir, r.report);
  return r;
}

namespace {

struct SweepCell {
  std::size_t particles;
  double beta;
  double lambda;
  std::string name() const {
    return "N" + std::to_string(particles) + "_beta" + fmt(beta) + "_lambda" + fmt(lambda);
  }
};

struct SweepTrial {
  std::optional<std::string> error;
  std::vector<double> eval_times;
  std::vector<double> inst_reg;
  double reg_final = 0.0;
  double unreg_final = 0.0;
  double static_reg_final = 0.0;
  double static_unreg_final = 0.0;
  bool grows = false;
  double tail_inst_reg = 0.0;
  double oos = 0.0;
  std::size_t low_ess = 0;
  std::size_t rho_iterations = 0;
};

// Regularized cumulative regret positive at T and strictly increasing over
// the second half of the evaluation grid.
bool grows_late(const std::vector<double>& cumulative) {
  if (cumulative.back() <= 0.0) return false;
  for (std::size_t l = cumulative.size() / 2; l + 1 < cumulative.size(); ++l) {
    if (!(cumulative[l + 1] > cumulative[l])) return false;
  }
  return true;
}

std::string points_csv(const RegretBundle& b) {
  std::ostringstream o;
  o << std::setprecision(17)
    << "k,t,learner_reg,learner_unreg,mu_reg,mu_unreg,rho_reg,rho_unreg,m_learner,m_star,ess,low_ess\n";
  for (const auto& p : b.points) {
    o << p.k << ',' << p.t << ',' << p.learner_reg << ',' << p.learner_unreg << ',' << p.mu_reg
      << ',' << p.mu_unreg << ',' << p.rho_reg << ',' << p.rho_unreg << ',' << p.m_learner << ','
      << p.m_star << ',' << p.ess << ',' << (p.low_ess ? 1 : 0) << '\n';
  }
  return o.str();
}

}  // namespace

CommandResult run_regret_sweep(const ExperimentConfig& c) {
  c.validate();
  CommandResult r;
  r.experiment_dir = experiment_dir(c, "regret-sweep");

  const auto ns = c.sweep_particles.empty() ? std::vector<std::size_t>{c.onpgd.particles}
                                            : c.sweep_particles;
  const auto betas = c.sweep_beta.empty() ? std::vector<double>{c.onpgd.beta} : c.sweep_beta;
  const auto lambdas = c.sweep_lambda.empty() ? std::vector<double>{c.onpgd.lambda} : c.sweep_lambda;
  std::vector<SweepCell> cells;
  for (auto n : ns)
    for (double b : betas)
      for (double l : lambdas) cells.push_back({n, b, l});

  // Trajectories are shared by every cell; generate them once.
  std::vector<TrainTestPair> data(c.trials);
  parallel_for(c.trials, c.threads, [&](std::size_t t) { data[t] = make_data(c, t); });

  std::vector<SweepTrial> results(cells.size() * c.trials);
  parallel_for(results.size(), c.threads, [&](std::size_t idx) {
    const auto& cell = cells[idx / c.trials];
    const std::size_t t = idx % c.trials;
    const auto dir = r.experiment_dir / cell.name() / trial_dir_name(t);
    auto& out = results[idx];
    try {
      RegretConfig rc;
      rc.onpgd = online_config(c);
      rc.onpgd.particles = cell.particles;
      rc.onpgd.beta = cell.beta;
      rc.onpgd.lambda = cell.lambda;
      rc.is = c.is;
      rc.eval_stride = c.eval_stride;
      rc.with_static = c.with_static;
      rc.rho_samples = c.rho_samples;
      rc.rho = c.rho;
      const auto seed = learner_seed(c.seed, t);
      const auto bundle = regret_run(data[t].train, rc, seed);

      std::vector<RegretSeries> series;
      for (auto v : {RegretVariant::regularized, RegretVariant::unregularized}) {
        series.push_back(bundle.series(v, RegretBenchmark::dynamic));
      }
      if (bundle.has_static) {
        for (auto v : {RegretVariant::regularized, RegretVariant::unregularized}) {
          series.push_back(bundle.series(v, RegretBenchmark::fixed));
        }
        out.static_reg_final = series[2].final_cumulative();
        out.static_unreg_final = series[3].final_cumulative();
      }
      out.eval_times = series[0].eval_times;
      out.inst_reg = series[0].instantaneous;
      out.reg_final = series[0].final_cumulative();
      out.unreg_final = series[1].final_cumulative();
      out.grows = grows_late(series[0].cumulative);
      const std::size_t half = out.inst_reg.size() / 2;
      double tail = 0.0;
      for (std::size_t l = half; l < out.inst_reg.size(); ++l) tail += out.inst_reg[l];
      out.tail_inst_reg = tail / static_cast<double>(out.inst_reg.size() - half);
      out.low_ess = bundle.low_ess_points;
      out.rho_iterations = bundle.rho_iterations;

      std::ostringstream csv;
      write_regret_csv(csv, series, RegretCsvMeta{t, cell.particles, cell.beta, cell.lambda});
      write_text(dir / "regret.csv", csv.str());
      write_text(dir / "points.csv", points_csv(bundle));

      if (c.sweep_oos) {
        out.oos = oos_mse(online_predictions(data[t].train, data[t].test, rc.onpgd, seed), data[t].test);
        std::ostringstream row;
        row << std::setprecision(17) << "trial,online_mse\n" << t << ',' << out.oos << '\n';
        write_text(dir / "oos_online.csv", row.str());
      }
    } catch (const std::exception& e) {
      out.error = e.what();
      write_text(dir / "failure.txt", std::string(e.what()) + "\n");
    }
  });

  r.report = base_report("regret-sweep", c);
  json jcells = json::array();
  std::size_t failures = 0;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& cell = cells[ci];
    std::vector<double> reg, unreg, sreg, sunreg, oos, tail;
    std::vector<double> mean_inst;
    std::vector<double> times;
    std::size_t grows = 0, low_ess = 0;
    json fails = json::array();
    for (std::size_t t = 0; t < c.trials; ++t) {
      const auto& tr = results[ci * c.trials + t];
      if (tr.error) {
        fails.push_back({{"trial", t}, {"error", *tr.error}});
        continue;
      }
      reg.push_back(tr.reg_final);
      unreg.push_back(tr.unreg_final);
      sreg.push_back(tr.static_reg_final);
      sunreg.push_back(tr.static_unreg_final);
      oos.push_back(tr.oos);
      tail.push_back(tr.tail_inst_reg);
      grows += tr.grows;
      low_ess += tr.low_ess;
      if (mean_inst.empty()) {
        mean_inst.assign(tr.inst_reg.size(), 0.0);
        times = tr.eval_times;
      }
      for (std::size_t l = 0; l < tr.inst_reg.size(); ++l) mean_inst[l] += tr.inst_reg[l];
    }
    for (double& v : mean_inst) v /= static_cast<double>(reg.size());
    failures += fails.size();
    json jc = {{"cell", cell.name()},
               {"N", cell.particles},
               {"beta", cell.beta},
               {"lambda", cell.lambda},
               {"trials_ok", reg.size()},
               {"failures", fails},
               {"regularized_cumulative_T", summary_json(reg)},
               {"unregularized_cumulative_T", summary_json(unreg)},
               {"tail_instantaneous_regularized", summary_json(tail)},
               {"growing_trials", grows},
               {"low_ess_points", low_ess},
               {"mean_instantaneous_regularized", {{"t", times}, {"value", mean_inst}}}};
    if (c.with_static) {
      jc["static_regularized_cumulative_T"] = summary_json(sreg);
      jc["static_unregularized_cumulative_T"] = summary_json(sunreg);
    }
    if (c.sweep_oos) jc["oos_mse"] = summary_json(oos);
    jcells.push_back(jc);
  }
  r.report["cells"] = jcells;
  r.report["failures"] = failures;
  if (failures > 0) r.exit_code = kOperationalError;
  write_report(r.experiment_dir, r.report);
  return r;
}

namespace {

void normalize(std::vector<double>& rho, const QuadratureGrid& g) {
  const double z = simpson(rho, g.spacing());
  for (double& v : rho) v /= z;
}

// A smooth random reweighting of mu*, still a probability density on the grid.
std::vector<double> perturb(const std::vector<double>& mu, const QuadratureGrid& g, Stream& rng) {
  const double a1 = 0.8 * (2 * rng.uniform() - 1), a2 = 0.5 * (2 * rng.uniform() - 1);
  const double f1 = 0.5 + 3 * rng.uniform(), f2 = 0.5 + 3 * rng.uniform();
  const double shift = 2 * rng.uniform() - 1;
  std::vector<double> rho(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double t = g.node(i);
    rho[i] = mu[i] * std::exp(a1 * std::sin(f1 * t + shift) + a2 * std::cos(f2 * t) + 0.3 * shift * t);
  }
  normalize(rho, g);
  return rho;
}

json check(const std::string& name, bool pass, json details) {
  details["name"] = name;
  details["pass"] = pass;
  return details;
}

}  // namespace

CommandResult run_verify(const ExperimentConfig& c) {
  c.validate();
  const auto& v = c.verify;
  CommandResult r;
  r.experiment_dir = experiment_dir(c, "verify");
  const QuadratureGrid grid{-v.grid_half_width, v.grid_half_width, v.grid_points};
  grid.validate();
  const double beta = c.onpgd.beta;
  const double lambda = c.onpgd.lambda;
  if (!(beta > 0.0) || !(lambda > 0.0)) throw InputError("verify: needs beta, lambda > 0");

  std::vector<DataPoint> instances(v.instances);
  Stream pick(derive_key(c.seed, "verify-instances"));
  for (auto& z : instances) {
    const double x = 0.3 + 1.5 * pick.uniform();
    z = DataPoint{{x}, pick.uniform() - 0.5};
  }

  struct Row {
    double gap_error = 0, gap_lhs = 0, dym_error = 0, is_diff = 0;
    std::optional<std::string> error;
  };
  std::vector<Row> rows(v.instances);
  parallel_for(v.instances, c.threads, [&](std::size_t i) {
    const auto& z = instances[i];
    auto& row = rows[i];
    try {
      Stream rng(derive_key(c.seed, "verify-perturb", {i}));
      const auto mu = solve_mu_star_quadrature(grid, z, beta, lambda);
      const auto gap = verify_gap_decomposition(perturb(mu.density, grid, rng), grid, z, beta, lambda);
      row.gap_error = gap.error;
      row.gap_lhs = gap.lhs;
      row.dym_error = verify_dym_formula(z, beta, lambda, v.fd_step, grid).error;

      const auto theta = draw_prior_samples(v.n_is, 1, beta / lambda, derive_key(c.seed, "verify-is", {i}));
      std::vector<double> s(theta.size());
      for (std::size_t j = 0; j < s.size(); ++j) s[j] = scalar_sigma(z.x[0], theta[j]);
      const auto is = solve_fixed_point(s, z.y, beta, c.is);
      row.is_diff = std::abs(is.m_star - mu.m_star);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  json checks = json::array();
  double max_gap = 0, min_lhs = INFINITY, max_dym = 0, max_is = 0;
  json errors = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].error) {
      errors.push_back({{"instance", i}, {"error", *rows[i].error}});
      continue;
    }
    max_gap = std::max(max_gap, rows[i].gap_error);
    min_lhs = std::min(min_lhs, rows[i].gap_lhs);
    max_dym = std::max(max_dym, rows[i].dym_error);
    max_is = std::max(max_is, rows[i].is_diff);
  }
  const bool all_ran = errors.empty();
  checks.push_back(check("gap_decomposition", all_ran && max_gap <= v.gap_tol && min_lhs >= 0.0,
                         {{"max_error", max_gap}, {"min_free_energy_gap", min_lhs}, {"tol", v.gap_tol}}));
  checks.push_back(check("dym_formula", all_ran && max_dym <= v.dym_tol,
                         {{"max_error", max_dym}, {"tol", v.dym_tol}}));
  checks.push_back(check("is_vs_quadrature", all_ran && max_is <= v.is_tol,
                         {{"max_abs_diff", max_is}, {"tol", v.is_tol}, {"n_is", v.n_is}}));

  // Phi_hat must be nonincreasing: 10 data points, 100 ordered pairs each.
  {
    Stream rng(derive_key(c.seed, "verify-monotone"));
    const auto theta = draw_prior_samples(20000, 1, beta / lambda, derive_key(c.seed, "verify-mono-samples"));
    std::size_t violations = 0, pairs = 0;
    double worst = 0.0;
    std::vector<double> s(theta.size());
    for (int point = 0; point < 10; ++point) {
      const double x = 0.3 + 1.5 * rng.uniform(), y = rng.uniform() - 0.5;
      for (std::size_t j = 0; j < s.size(); ++j) s[j] = scalar_sigma(x, theta[j]);
      for (int p = 0; p < 100; ++p, ++pairs) {
        double m1 = 4.0 * rng.uniform() - 2.0, m2 = 4.0 * rng.uniform() - 2.0;
        if (m1 > m2) std::swap(m1, m2);
        const double rise = phi_hat(m2, s, y, beta, c.is.corrupt_phi_sign) -
                            phi_hat(m1, s, y, beta, c.is.corrupt_phi_sign);
        if (rise > 1e-12) ++violations;
        worst = std::max(worst, rise);
      }
    }
    checks.push_back(check("phi_hat_monotone", violations == 0,
                           {{"pairs", pairs}, {"violations", violations}, {"max_increase", worst}}));
  }

  // Closed-form constants against hand arithmetic.
  {
    const double tol = v.constants_tol;
    const auto c1 = compute_constants(BoundSpec{1.0, 1.0, 1.0, 1.0, 4.0, 5, std::nullopt});
    const bool ok1 = std::abs(c1.alpha - 0.0338338208091532) <= tol && !c1.pl_condition_holds &&
                     std::abs(c1.q_star - 147.7811219786130) <= 1e-9 * 147.78;
    const auto c2 = compute_constants(BoundSpec{0.1, 0.1, 0.1, 1.0, 1.0, 3, 2.0});
    const double c2_pl = c2.c_pl.value_or(NAN);
    const bool ok2 = std::abs(c2.alpha - 0.9231163463866358) <= tol &&
                     std::abs(c2_pl - 1.02 / (0.9231163463866358 - 8e-4)) <= tol &&
                     c2.lambda_dc && std::abs(*c2.lambda_dc - 0.8) <= tol;
    const auto hot = compute_constants(BoundSpec{1.0, 1.0, 1.0, lambda, 1e6, 5, std::nullopt});
    const double hot_pl = hot.c_pl.value_or(NAN);
    const bool ok3 = std::abs(hot_pl - 1.0 / lambda) <= 1e-3;
    checks.push_back(check("constants", ok1 && ok2 && ok3,
                           {{"case1_alpha", c1.alpha},
                            {"case1_q_star", c1.q_star},
                            {"case2_alpha", c2.alpha},
                            {"case2_c_pl", c2_pl},
                            {"high_temperature_c_pl", hot_pl},
                            {"high_temperature_target", 1.0 / lambda}}));
  }

  bool pass = true;
  for (const auto& ch : checks) pass = pass && ch["pass"].get<bool>();
  r.report = base_report("verify", c);
  r.report["beta"] = beta;
  r.report["lambda"] = lambda;
  r.report["corrupt_phi_sign"] = c.is.corrupt_phi_sign;
  r.report["checks"] = checks;
  r.report["instance_errors"] = errors;
  r.report["pass"] = pass;
  r.exit_code = pass ? kOk : kVerificationFailed;
  write_report(r.experiment_dir, r.report);
  return r;
}

namespace {

struct OosRow {
  double online = 0, offline = 0, y2 = 0;
};

OosRow read_oos_row(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header, line;
  std::getline(in, header);
  if (header != "trial,online_mse,offline_mse,mean_y2" || !std::getline(in, line)) {
    throw InputError(path.string() + ": not an oos-compare trial file");
  }
  std::stringstream ss(line);
  std::string field;
  std::vector<double> vals;
  while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
  if (vals.size() != 4) throw InputError(path.string() + ": expected 4 columns");
  return {vals[1], vals[2], vals[3]};
}

}  // namespace

CommandResult run_stats(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("stats: no such experiment directory " + dir.string());
  std::vector<fs::path> cells;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) cells.push_back(e.path());
  std::sort(cells.begin(), cells.end());

  CommandResult r;
  r.experiment_dir = dir;
  json out = json::object();
  for (const auto& cell : cells) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cell)) {
      if (e.is_directory() && fs::exists(e.path() / "oos.csv")) files.push_back(e.path() / "oos.csv");
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    std::vector<double> online, offline, y2;
    for (const auto& f : files) {
      const auto row = read_oos_row(f);
      online.push_back(row.online);
      offline.push_back(row.offline);
      y2.push_back(row.y2);
    }
    out[cell.filename().string()] = oos_tables(online, offline, y2);
  }
  if (out.empty()) throw InputError("stats: no oos.csv files under " + dir.string());
  r.report = {{"command", "stats"}, {"cells", out}};
  write_report(dir, r.report, "stats.json");
  return r;
}

}  // namespace labctl
