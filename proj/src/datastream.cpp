#include "mfregret/datastream.hpp"

#include <charconv>

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mfregret/errors.hpp"

namespace mfregret {

void OuParams::validate() const {
  if (!(rate >= 0.0) || !(vol >= 0.0) || !std::isfinite(mean)) {
    throw InputError("OU parameters need rate >= 0, vol >= 0 and a finite mean");
  }
}

double OuParams::stationary_variance() const {
  if (rate <= 0.0 || vol <= 0.0) return 0.0;
  return vol * vol / (2.0 * rate);
}

std::vector<double> euler_ou_path(const OuParams& params, double x0, std::size_t steps, double dt,
                                  Stream& noise) {
  params.validate();
  if (!(dt > 0.0)) throw InputError("euler_ou_path: dt must be positive");
  if (steps == 0) throw InputError("euler_ou_path: need at least one step");
  std::vector<double> path(steps);
  const double sqdt = std::sqrt(dt);
  double x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = x - params.rate * (x - params.mean) * dt + params.vol * sqdt * noise.normal();
    path[k] = x;
  }
  return path;
}

DataPoint Trajectory::point(std::size_t k) const {
  const auto xk = x(k);
  return DataPoint{{xk.begin(), xk.end()}, y(k)};
}

void Trajectory::validate() const {
  if (!(dt > 0.0)) throw InputError("trajectory: dt must be positive");
  if (ys.empty()) throw InputError("trajectory is empty");
  if (xs.size() != ys.size() * n_inputs) throw InputError("trajectory: covariate block size");
  if (!truth.empty() && truth.size() != ys.size()) throw InputError("trajectory: truth length");
  for (double v : xs)
    if (!std::isfinite(v)) throw InputError("trajectory: non-finite covariate");
  for (double v : ys)
    if (!std::isfinite(v)) throw InputError("trajectory: non-finite response");
}

std::string trajectory_csv_header(std::size_t n_inputs) {
  std::string h = "k,t";
  for (std::size_t j = 1; j <= n_inputs; ++j) h += ",x" + std::to_string(j);
  h += ",y,truth";
  return h;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << trajectory_csv_header(traj.n_inputs) << '\n';
  out << std::setprecision(17);
  for (std::size_t k = 1; k <= traj.size(); ++k) {
    out << k << ',' << traj.time(k);
    for (double v : traj.x(k)) out << ',' << v;
    out << ',' << traj.y(k) << ',';
    if (!traj.truth.empty()) out << traj.truth[k - 1];
    out << '\n';
  }
}

namespace {

double parse_cell(const std::string& cell, const std::string& line) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw InputError("trajectory csv: bad number '" + cell + "' in row '" + line + "'");
  }
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory csv: missing header");
  std::size_t columns = 1;
  for (char c : line) columns += (c == ',');
  if (columns < 5) throw InputError("trajectory csv: too few columns");
  Trajectory traj;
  traj.n_inputs = columns - 4;
  if (line != trajectory_csv_header(traj.n_inputs)) {
    throw InputError("trajectory csv: unexpected header '" + line + "'");
  }
  bool has_truth = true;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() == columns - 1) cells.emplace_back();  // trailing empty truth
    if (cells.size() != columns) throw InputError("trajectory csv: bad row '" + line + "'");
    times.push_back(parse_cell(cells[1], line));
    for (std::size_t j = 0; j < traj.n_inputs; ++j) traj.xs.push_back(parse_cell(cells[2 + j], line));
    traj.ys.push_back(parse_cell(cells[2 + traj.n_inputs], line));
    if (cells.back().empty()) {
      has_truth = false;
    } else {
      traj.truth.push_back(parse_cell(cells.back(), line));
    }
  }
  if (!has_truth) traj.truth.clear();
  if (times.empty()) throw InputError("trajectory csv: no rows");
  traj.dt = times.front();
  traj.validate();
  return traj;
}

void PeriodicConfig::validate() const {
  if (!(dt > 0.0) || steps == 0) throw InputError("periodic config: need dt > 0 and steps >= 1");
  covariate.validate();
  noise.validate();
  response.validate();
}

void NonlinearConfig::validate() const {
  if (!(dt > 0.0) || steps == 0) throw InputError("nonlinear config: need dt > 0 and steps >= 1");
  if (neurons == 0 || n_inputs == 0) throw InputError("nonlinear config: need M >= 1 and n >= 1");
  if (!(phi_rate >= 0.0) || !(phi_vol >= 0.0) || !(phi_sd >= 0.0)) {
    throw InputError("nonlinear config: phi OU parameters must be nonnegative");
  }
  covariate.validate();
  noise.validate();
  response.validate();
}

namespace {

double stationary_draw(const OuParams& p, Stream& rng) {
  return p.mean + std::sqrt(p.stationary_variance()) * rng.normal();
}

// One covariate channel per input, each with its own stream.
std::vector<std::vector<double>> covariate_paths(const OuParams& p, std::size_t n_inputs,
                                                 std::size_t steps, double dt, std::uint64_t key) {
  std::vector<std::vector<double>> paths;
  for (std::size_t j = 0; j < n_inputs; ++j) {
    Stream rng(derive_key(key, "channel", {j}));
    const double x0 = stationary_draw(p, rng);
    paths.push_back(euler_ou_path(p, x0, steps, dt, rng));
  }
  return paths;
}

std::vector<double> noise_path(const OuParams& p, std::size_t steps, double dt, std::uint64_t key) {
  Stream rng(key);
  return euler_ou_path(p, 0.0, steps, dt, rng);
}

Trajectory assemble(double dt, const std::vector<std::vector<double>>& xpaths) {
  Trajectory traj;
  traj.dt = dt;
  traj.n_inputs = xpaths.size();
  const std::size_t steps = xpaths.front().size();
  traj.xs.resize(steps * traj.n_inputs);
  for (std::size_t k = 0; k < steps; ++k)
    for (std::size_t j = 0; j < traj.n_inputs; ++j) traj.xs[k * traj.n_inputs + j] = xpaths[j][k];
  traj.ys.resize(steps);
  traj.truth.resize(steps);
  return traj;
}

}  // namespace

TrainTestPair gen_periodic(const PeriodicConfig& config, std::uint64_t seed) {
  config.validate();
  auto make = [&](std::string_view x_tag, std::string_view xi_tag) {
    auto xpaths = covariate_paths(config.covariate, 1, config.steps, config.dt,
                                  derive_key(seed, x_tag));
    const auto xi = noise_path(config.noise, config.steps, config.dt, derive_key(seed, xi_tag));
    Trajectory traj = assemble(config.dt, xpaths);
    for (std::size_t k = 1; k <= config.steps; ++k) {
      const double f = std::sin(config.h * traj.time(k)) * traj.xs[k - 1];
      traj.truth[k - 1] = f;
      traj.ys[k - 1] = config.response.apply(f + xi[k - 1]);
    }
    return traj;
  };
  return TrainTestPair{make("train-x", "train-xi"), make("test-x", "test-xi")};
}

double NonlinearTruthModel::evaluate(std::size_t k, std::span<const double> x) const {
  const Neuron neuron;
  double s = 0.0;
  for (std::size_t m = 0; m < neurons; ++m) s += neuron.value(x, phi(k, m));
  return scale * s;
}

NonlinearInstance gen_nonlinear(const NonlinearConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t dim = param_dim(config.n_inputs);
  NonlinearInstance inst;
  NonlinearTruthModel& truth = inst.truth;
  truth.neurons = config.neurons;
  truth.dim = dim;
  truth.steps = config.steps;
  truth.scale = config.output_scale / static_cast<double>(config.neurons);
  truth.phi_bar.resize(config.neurons * dim);
  truth.phi_path.resize(config.steps * config.neurons * dim);

  Stream init_rng(derive_key(seed, "phi-init"));
  std::vector<double> phi0(config.neurons * dim);
  for (std::size_t i = 0; i < phi0.size(); ++i) {
    phi0[i] = config.phi_sd * init_rng.normal();
    truth.phi_bar[i] = config.phi_sd * init_rng.normal();
  }
  const std::uint64_t path_key = derive_key(seed, "phi-path");
  for (std::size_t i = 0; i < phi0.size(); ++i) {
    Stream rng(derive_key(path_key, "entry", {i}));
    const OuParams p{config.phi_rate, truth.phi_bar[i], config.phi_vol};
    const auto path = euler_ou_path(p, phi0[i], config.steps, config.dt, rng);
    for (std::size_t k = 0; k < config.steps; ++k) truth.phi_path[k * phi0.size() + i] = path[k];
  }

  auto make = [&](std::string_view x_tag, std::string_view xi_tag) {
    auto xpaths = covariate_paths(config.covariate, config.n_inputs, config.steps, config.dt,
                                  derive_key(seed, x_tag));
    const auto xi = noise_path(config.noise, config.steps, config.dt, derive_key(seed, xi_tag));
    Trajectory traj = assemble(config.dt, xpaths);
    for (std::size_t k = 1; k <= config.steps; ++k) {
      const double f = truth.evaluate(k, traj.x(k));
      traj.truth[k - 1] = f;
      traj.ys[k - 1] = config.response.apply(f + xi[k - 1]);
    }
    return traj;
  };
  inst.train = make("train-x", "train-xi");
  inst.test = make("test-x", "test-xi");
  return inst;
}

double mean_square_response(const Trajectory& traj) {
  double s = 0.0;
  for (double y : traj.ys) s += y * y;
  return s / static_cast<double>(traj.size());
}

}  // namespace mfregret
