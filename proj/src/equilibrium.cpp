#include "mfregret/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mfregret/errors.hpp"
#include "mfregret/rng.hpp"

namespace mfregret {

void IsSolverConfig::validate() const {
  if (n_is == 0) throw InputError("IS solver: n_is must be >= 1");
  if (!(root_tol > 0.0)) throw InputError("IS solver: root_tol must be positive");
}

std::vector<double> draw_prior_samples(std::size_t count, std::size_t dim, double prior_var,
                                       std::uint64_t seed) {
  if (!(prior_var >= 0.0)) throw InputError("prior variance must be >= 0");
  const double sd = std::sqrt(prior_var);
  std::vector<double> out(count * dim);
  Stream rng(derive_key(seed, "prior-samples"));
  for (double& v : out) v = sd * rng.normal();
  return out;
}

namespace {

struct Extent {
  double lo;
  double hi;
};

Extent extent(std::span<const double> values) {
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

// Importance coefficient c in w_i ∝ exp(c s_i).
double exponent_coeff(double m, double y, double beta, bool flip) {
  const double c = -(2.0 / beta) * (m - y);
  return flip ? -c : c;
}

// Weighted mean of s under w ∝ exp(c s), shifted by the largest exponent.
double tilted_mean(std::span<const double> s, double c, const Extent& ext) {
  const double shift = c >= 0.0 ? c * ext.hi : c * ext.lo;
  double num = 0.0;
  double den = 0.0;
  for (double v : s) {
    const double w = std::exp(c * v - shift);
    num += w * v;
    den += w;
  }
  return num / den;
}

struct Bisection {
  double root;
  double residual;
  std::size_t evaluations;
};

// Root of a decreasing function g by bisection from [lo, hi], expanding the
// bracket geometrically if needed.
template <typename G>
Bisection bisect_decreasing(G&& g, double lo, double hi, double tol,
                               std::size_t max_expansions) {
  std::size_t evals = 0;
  double glo = g(lo);
  double ghi = g(hi);
  evals += 2;
  double width = hi - lo;
  std::size_t expansions = 0;
  while ((glo < 0.0 || ghi > 0.0) && expansions < max_expansions) {
    if (glo < 0.0) {
      lo -= width;
      glo = g(lo);
    } else {
      hi += width;
      ghi = g(hi);
    }
    ++evals;
    width *= 2.0;
    ++expansions;
  }
  if (glo < 0.0 || ghi > 0.0 || !std::isfinite(glo) || !std::isfinite(ghi)) {
    std::ostringstream msg;
    msg << "fixed-point bracket has no sign change after " << expansions
        << " expansions: g(" << lo << ") = " << glo << ", g(" << hi << ") = " << ghi;
    throw SolverError(msg.str());
  }
  if (std::abs(glo) <= tol) return {lo, std::abs(glo), evals};
  if (std::abs(ghi) <= tol) return {hi, std::abs(ghi), evals};
  double best = 0.5 * (lo + hi);
  double best_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    ++evals;
    if (std::abs(gm) < best_abs) {
      best = mid;
      best_abs = std::abs(gm);
    }
    if (best_abs <= tol || mid <= lo || mid >= hi) break;
    if (gm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {best, best_abs, evals};
}

}  // namespace

std::vector<double> gibbs_weights(std::span<const double> sigma_values, double m, double y,
                                  double beta, bool flip_sign) {
  if (sigma_values.empty()) throw InputError("gibbs_weights: no samples");
  if (!(beta > 0.0)) throw InputError("gibbs_weights: beta must be positive");
  const double c = exponent_coeff(m, y, beta, flip_sign);
  const Extent ext = extent(sigma_values);
  const double shift = c >= 0.0 ? c * ext.hi : c * ext.lo;
  std::vector<double> w(sigma_values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(c * sigma_values[i] - shift);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 1.0 / s;
}

double phi_hat(double m, std::span<const double> sigma_values, double y, double beta,
               bool flip_sign) {
  if (sigma_values.empty()) throw InputError("phi_hat: no samples");
  if (!(beta > 0.0)) throw InputError("phi_hat: beta must be positive");
  return tilted_mean(sigma_values, exponent_coeff(m, y, beta, flip_sign), extent(sigma_values));
}

namespace {

std::vector<double> sigma_values_of(const MeasureView& samples, std::span<const double> x,
                                    const Neuron& neuron) {
  samples.validate();
  std::vector<double> s(samples.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = neuron.value(x, samples.row(i));
  return s;
}

}  // namespace

double phi_hat(double m, const MeasureView& samples, const DataPoint& z, double beta,
               const Neuron& neuron) {
  return phi_hat(m, sigma_values_of(samples, z.x, neuron), z.y, beta);
}

ScalarRoot solve_fixed_point(std::span<const double> sigma_values, double y, double beta,
                             const IsSolverConfig& config) {
  config.validate();
  if (sigma_values.empty()) throw InputError("solve_fixed_point: no samples");
  if (!(beta > 0.0)) throw InputError("solve_fixed_point: beta must be positive");
  const Extent ext = extent(sigma_values);
  const bool flip = config.corrupt_phi_sign;
  auto g = [&](double m) {
    return tilted_mean(sigma_values, exponent_coeff(m, y, beta, flip), ext) - m;
  };
  const auto root = bisect_decreasing(g, ext.lo - 1.0, ext.hi + 1.0, config.root_tol,
                                      config.max_bracket_expansions);
  ScalarRoot out;
  out.m_star = root.root;
  out.residual = root.residual;
  out.evaluations = root.evaluations;
  out.weights = gibbs_weights(sigma_values, root.root, y, beta, flip);
  out.ess = effective_sample_size(out.weights);
  out.low_ess = out.ess < config.ess_warn;
  return out;
}

MuStar solve_mu_star(const MeasureView& samples, const DataPoint& z, double beta,
                     const IsSolverConfig& config, const Neuron& neuron) {
  const auto s = sigma_values_of(samples, z.x, neuron);
  auto root = solve_fixed_point(s, z.y, beta, config);
  MuStar out;
  out.m_star = root.m_star;
  out.ess = root.ess;
  out.low_ess = root.low_ess;
  out.residual = root.residual;
  out.measure = WeightedMeasure(samples.dim, {samples.params.begin(), samples.params.end()},
                                std::move(root.weights));
  return out;
}

// ---------------------------------------------------------------------------

void QuadratureGrid::validate() const {
  if (!(lo < hi)) throw InputError("quadrature grid: need lo < hi");
  if (points < 3 || points % 2 == 0) {
    throw InputError("quadrature grid: composite Simpson needs an odd point count >= 3");
  }
}

std::vector<double> QuadratureGrid::nodes() const {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) out[i] = node(i);
  return out;
}

double simpson(std::span<const double> values, double h) {
  const std::size_t n = values.size();
  if (n < 3 || n % 2 == 0) throw InputError("simpson: need an odd number >= 3 of samples");
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) (i % 2 ? odd : even) += values[i];
  return h / 3.0 * (values.front() + 4.0 * odd + 2.0 * even + values.back());
}

namespace {

double scalar_input(const DataPoint& z) {
  if (z.x.size() != 1) throw InputError("quadrature oracle is one-dimensional: need |x| = 1");
  return z.x[0];
}

// Unnormalized log density of the frozen-data Gibbs measure at prediction m.
std::vector<double> gibbs_log_density(const QuadratureGrid& grid, double x, double y, double m,
                                      double beta, double lambda) {
  std::vector<double> ld(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double t = grid.node(i);
    ld[i] = -lambda * t * t / (2.0 * beta) - (2.0 / beta) * scalar_sigma(x, t) * (m - y);
  }
  return ld;
}

std::vector<double> normalize_log_density(const std::vector<double>& ld, const QuadratureGrid& grid) {
  const double top = *std::max_element(ld.begin(), ld.end());
  std::vector<double> rho(ld.size());
  for (std::size_t i = 0; i < ld.size(); ++i) rho[i] = std::exp(ld[i] - top);
  const double z = simpson(rho, grid.spacing());
  for (double& v : rho) v /= z;
  return rho;
}

double grid_mean(std::span<const double> density, const QuadratureGrid& grid, auto&& f) {
  std::vector<double> vals(density.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = density[i] * f(grid.node(i));
  return simpson(vals, grid.spacing());
}

void check_density(std::span<const double> density, const QuadratureGrid& grid) {
  grid.validate();
  if (density.size() != grid.points) throw InputError("density length does not match grid");
  for (double v : density) {
    if (!(v >= -1e-14)) throw InputError("density has negative entries");
  }
  const double mass = simpson(density, grid.spacing());
  if (std::abs(mass - 1.0) > 1e-8) {
    throw InputError("density integrates to " + std::to_string(mass) + ", not 1");
  }
}

}  // namespace

QuadratureMuStar solve_mu_star_quadrature(const QuadratureGrid& grid, const DataPoint& z,
                                          double beta, double lambda, double root_tol) {
  grid.validate();
  if (!(beta > 0.0)) throw InputError("quadrature mu*: beta must be positive");
  const double x = scalar_input(z);
  auto phi = [&](double m) {
    const auto rho = normalize_log_density(gibbs_log_density(grid, x, z.y, m, beta, lambda), grid);
    return grid_mean(rho, grid, [x](double t) { return scalar_sigma(x, t); });
  };
  const auto root = bisect_decreasing([&](double m) { return phi(m) - m; }, -2.0, 2.0, root_tol, 40);

  const auto ld = gibbs_log_density(grid, x, z.y, root.root, beta, lambda);
  const double top = *std::max_element(ld.begin(), ld.end());
  const double floor = std::log(1e-12);
  if (ld.front() - top > floor || ld.back() - top > floor) {
    std::ostringstream msg;
    msg << "quadrature grid [" << grid.lo << ", " << grid.hi
        << "] too narrow: endpoint mass relative to peak exceeds 1e-12";
    throw SolverError(msg.str());
  }
  return QuadratureMuStar{root.root, normalize_log_density(ld, grid)};
}

double quadrature_kl(std::span<const double> rho, std::span<const double> reference,
                     const QuadratureGrid& grid) {
  if (rho.size() != reference.size()) throw InputError("kl: length mismatch");
  std::vector<double> vals(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0) continue;
    if (!(reference[i] > 0.0)) throw InputError("kl: reference density vanishes where rho > 0");
    vals[i] = rho[i] * std::log(rho[i] / reference[i]);
  }
  return simpson(vals, grid.spacing());
}

double quadrature_free_energy(std::span<const double> density, const QuadratureGrid& grid,
                              const DataPoint& z, double beta, double lambda) {
  check_density(density, grid);
  const double x = scalar_input(z);
  const double m = grid_mean(density, grid, [x](double t) { return scalar_sigma(x, t); });
  const double m2 = grid_mean(density, grid, [](double t) { return t * t; });
  std::vector<double> ent(density.size());
  for (std::size_t i = 0; i < density.size(); ++i) {
    ent[i] = density[i] > 0.0 ? density[i] * std::log(density[i]) : 0.0;
  }
  const double neg_entropy = simpson(ent, grid.spacing());
  return m * m - 2.0 * z.y * m + 0.5 * lambda * m2 + beta * neg_entropy;
}

GapCheck verify_gap_decomposition(std::span<const double> rho, const QuadratureGrid& grid,
                                  const DataPoint& z, double beta, double lambda) {
  check_density(rho, grid);
  const auto mu = solve_mu_star_quadrature(grid, z, beta, lambda);
  const double x = scalar_input(z);
  auto sig = [x](double t) { return scalar_sigma(x, t); };
  const double m_rho = grid_mean(rho, grid, sig);
  const double m_mu = grid_mean(mu.density, grid, sig);
  GapCheck out;
  out.lhs = quadrature_free_energy(rho, grid, z, beta, lambda) -
            quadrature_free_energy(mu.density, grid, z, beta, lambda);
  out.kl = quadrature_kl(rho, mu.density, grid);
  out.rhs = (m_rho - m_mu) * (m_rho - m_mu) + beta * out.kl;
  out.error = std::abs(out.lhs - out.rhs);
  return out;
}

DerivativeCheck verify_dym_formula(const DataPoint& z, double beta, double lambda, double fd_step,
                                   const QuadratureGrid& grid) {
  if (!(fd_step > 0.0)) throw InputError("verify_dym_formula: fd_step must be positive");
  const double x = scalar_input(z);
  const auto mu = solve_mu_star_quadrature(grid, z, beta, lambda);
  auto sig = [x](double t) { return scalar_sigma(x, t); };
  const double mean = grid_mean(mu.density, grid, sig);
  const double var = std::max(
      0.0, grid_mean(mu.density, grid, [&](double t) { return (sig(t) - mean) * (sig(t) - mean); }));
  DataPoint up = z;
  DataPoint down = z;
  up.y += fd_step;
  down.y -= fd_step;
  DerivativeCheck out;
  out.analytic = 2.0 * var / (beta + 2.0 * var);
  out.finite_diff = (solve_mu_star_quadrature(grid, up, beta, lambda).m_star -
                     solve_mu_star_quadrature(grid, down, beta, lambda).m_star) /
                    (2.0 * fd_step);
  out.error = std::abs(out.analytic - out.finite_diff);
  return out;
}

// ---------------------------------------------------------------------------

void RhoStarConfig::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw InputError("rho*: damping must lie in (0, 1]");
  if (!(tol > 0.0)) throw InputError("rho*: tol must be positive");
  if (max_iters == 0) throw InputError("rho*: max_iters must be >= 1");
}

namespace {

struct RhoMap {
  std::span<const double> table;  // K x n
  std::size_t n;
  std::span<const double> ys;
  double beta;

  std::size_t steps() const { return ys.size(); }

  // Weights at u and the image U_hat(u).
  void apply(std::span<const double> u, std::vector<double>& weights, std::vector<double>& image) const {
    const std::size_t K = steps();
    std::vector<double> expo(n, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const double c = u[k] - ys[k];
      const double* row = table.data() + k * n;
      for (std::size_t i = 0; i < n; ++i) expo[i] += c * row[i];
    }
    const double scale = -2.0 / (beta * static_cast<double>(K));
    double top = -std::numeric_limits<double>::infinity();
    for (double& e : expo) {
      e *= scale;
      top = std::max(top, e);
    }
    weights.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = std::exp(expo[i] - top);
      total += weights[i];
    }
    for (double& w : weights) w /= total;
    image.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const double* row = table.data() + k * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += weights[i] * row[i];
      image[k] = s;
    }
  }
};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, std::abs(a[k] - b[k]));
  return r;
}

double l2_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(r);
}

}  // namespace

RhoStarSolution solve_rho_star_table(std::span<const double> sigma_table, std::size_t samples,
                                     std::span<const double> ys, double beta,
                                     const RhoStarConfig& config) {
  config.validate();
  if (!(beta > 0.0)) throw InputError("rho*: beta must be positive");
  if (ys.empty() || samples == 0 || sigma_table.size() != ys.size() * samples) {
    throw InputError("rho*: sigma table must be K x n");
  }
  const RhoMap map{sigma_table, samples, ys, beta};
  const std::size_t K = ys.size();

  // Damped iteration u <- u + alpha (U_hat(u) - u). The step is halved
  // whenever it would increase the residual norm and regrown afterwards; the
  // map's Jacobian is symmetric negative semidefinite, so small enough steps
  // always contract.
  std::vector<double> u(K, 0.0), w, image;
  map.apply(u, w, image);
  double resid = max_abs_diff(image, u);
  double resid2 = l2_diff(image, u);
  double alpha = config.damping;
  RhoStarSolution sol;
  std::vector<double> trial(K), w_trial, image_trial;
  std::size_t it = 0;
  while (resid > config.tol) {
    if (it >= config.max_iters) {
      sol.residual_trace.push_back(resid);
      std::ostringstream msg;
      msg << "rho*: no convergence after " << config.max_iters << " iterations (residual " << resid
          << ")";
      throw ConvergenceError(msg.str(), sol.residual_trace);
    }
    ++it;
    sol.residual_trace.push_back(resid);
    for (;;) {
      for (std::size_t k = 0; k < K; ++k) trial[k] = u[k] + alpha * (image[k] - u[k]);
      map.apply(trial, w_trial, image_trial);
      const double r2 = l2_diff(image_trial, trial);
      if (r2 < resid2 || alpha < 1e-8) {
        u.swap(trial);
        w.swap(w_trial);
        image.swap(image_trial);
        resid2 = r2;
        resid = max_abs_diff(image, u);
        alpha = std::min(config.damping, 2.0 * alpha);
        break;
      }
      alpha *= 0.5;
      ++sol.step_halvings;
    }
  }
  sol.residual_trace.push_back(resid);
  sol.u = std::move(u);
  sol.weights = std::move(w);
  sol.residual = resid;
  sol.iterations = it;
  return sol;
}

RhoStarSolution solve_rho_star(const Trajectory& traj, const MeasureView& samples, double beta,
                               const RhoStarConfig& config, const Neuron& neuron) {
  traj.validate();
  samples.validate();
  const std::size_t K = traj.size();
  const std::size_t n = samples.size();
  std::vector<double> table(K * n);
  for (std::size_t k = 1; k <= K; ++k) {
    const auto xk = traj.x(k);
    double* row = table.data() + (k - 1) * n;
    for (std::size_t i = 0; i < n; ++i) row[i] = neuron.value(xk, samples.row(i));
  }
  auto sol = solve_rho_star_table(table, n, traj.ys, beta, config);
  sol.measure = WeightedMeasure(samples.dim, {samples.params.begin(), samples.params.end()},
                                sol.weights);
  return sol;
}

}  // namespace mfregret
