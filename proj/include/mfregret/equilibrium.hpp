#pragma once

// Benchmark measures for regret evaluation.
//
// The instantaneous equilibrium mu*_t is the Gibbs measure
//   mu*(theta) ∝ exp(-lambda |theta|^2 / (2 beta) - (2/beta) sigma(x, theta) (m - y)),
// self-consistent in m = <mu*, sigma(x, .)>. Sampling theta from the Gaussian
// prior N(0, beta/lambda I) leaves only the second factor as an importance
// weight, so m* is the root of Phi_hat(m) - m with Phi_hat the self-normalized
// weighted mean of sigma. The hindsight optimizer rho* has the same structure
// with the exponent averaged over the whole time grid, which turns the scalar
// root into a vector fixed point u_k = <rho*, sigma(x_k, .)>.
//
// A one-dimensional quadrature path (sigma(x, theta) = tanh(x theta)) computes
// the same objects by Simpson integration and is used to check the identities
// satisfied by mu*.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/measures.hpp"
#include "mfregret/model.hpp"

namespace mfregret {

struct IsSolverConfig {
  std::size_t n_is = 20000;
  double root_tol = 1e-10;
  std::size_t max_bracket_expansions = 40;
  double ess_warn = 10.0;
  // Negative control for the verification suite: flips the sign of the
  // importance exponent. Never set outside of tests.
  bool corrupt_phi_sign = false;

  void validate() const;
};

// Prior draws N(0, prior_var I_dim), `count` rows.
std::vector<double> draw_prior_samples(std::size_t count, std::size_t dim, double prior_var,
                                       std::uint64_t seed);

// Normalized weights w_i ∝ exp(-(2/beta)(m - y) s_i), computed max-shifted.
std::vector<double> gibbs_weights(std::span<const double> sigma_values, double m, double y,
                                  double beta, bool flip_sign = false);

double effective_sample_size(std::span<const double> weights);

// Phi_hat(m) over precomputed sigma values s_i = sigma(x, theta_i).
double phi_hat(double m, std::span<const double> sigma_values, double y, double beta,
               bool flip_sign = false);
// Phi_hat(m) over prior samples (rows of width dim).
double phi_hat(double m, const MeasureView& samples, const DataPoint& z, double beta,
               const Neuron& neuron = {});

struct ScalarRoot {
  double m_star = 0.0;
  std::vector<double> weights;
  double ess = 0.0;
  bool low_ess = false;
  double residual = 0.0;  // |Phi_hat(m*) - m*|
  std::size_t evaluations = 0;
};

// Bisection for Phi_hat(m) = m given sigma values.
ScalarRoot solve_fixed_point(std::span<const double> sigma_values, double y, double beta,
                             const IsSolverConfig& config);

struct MuStar {
  double m_star = 0.0;
  WeightedMeasure measure;
  double ess = 0.0;
  bool low_ess = false;
  double residual = 0.0;
};

MuStar solve_mu_star(const MeasureView& samples, const DataPoint& z, double beta,
                     const IsSolverConfig& config, const Neuron& neuron = {});

// ---------------------------------------------------------------------------
// One-dimensional quadrature oracle, sigma(x, theta) = tanh(x theta).

struct QuadratureGrid {
  double lo = -6.0;
  double hi = 6.0;
  std::size_t points = 2001;  // odd, for composite Simpson

  void validate() const;
  double spacing() const { return (hi - lo) / static_cast<double>(points - 1); }
  double node(std::size_t i) const { return lo + static_cast<double>(i) * spacing(); }
  std::vector<double> nodes() const;
};

double simpson(std::span<const double> values, double h);

inline double scalar_sigma(double x, double theta) { return std::tanh(x * theta); }

struct QuadratureMuStar {
  double m_star = 0.0;
  std::vector<double> density;  // normalized on the grid
};

QuadratureMuStar solve_mu_star_quadrature(const QuadratureGrid& grid, const DataPoint& z,
                                          double beta, double lambda, double root_tol = 1e-13);

// U(rho, z) + beta * integral rho log rho, with 0 log 0 := 0.
double quadrature_free_energy(std::span<const double> density, const QuadratureGrid& grid,
                              const DataPoint& z, double beta, double lambda);

// Integral of rho log(rho / reference).
double quadrature_kl(std::span<const double> rho, std::span<const double> reference,
                     const QuadratureGrid& grid);

struct GapCheck {
  double lhs = 0.0;  // F(rho) - F(mu*)
  double rhs = 0.0;  // (<rho, sigma> - <mu*, sigma>)^2 + beta KL(rho || mu*)
  double error = 0.0;
  double kl = 0.0;
};

GapCheck verify_gap_decomposition(std::span<const double> rho, const QuadratureGrid& grid,
                                  const DataPoint& z, double beta, double lambda);

struct DerivativeCheck {
  double analytic = 0.0;     // 2 Var / (beta + 2 Var)
  double finite_diff = 0.0;  // central difference of m*(y)
  double error = 0.0;
};

DerivativeCheck verify_dym_formula(const DataPoint& z, double beta, double lambda, double fd_step,
                                   const QuadratureGrid& grid = {});

// ---------------------------------------------------------------------------
// Hindsight optimizer rho*.

struct RhoStarConfig {
  double damping = 0.5;
  double tol = 1e-6;
  std::size_t max_iters = 500;

  void validate() const;
};

struct RhoStarSolution {
  std::vector<double> u;  // u_k = <rho*, sigma(x_k, .)>, k = 1..K
  std::vector<double> weights;
  WeightedMeasure measure;  // left empty by solve_rho_star_table
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t step_halvings = 0;  // times the damped step was cut back
  std::vector<double> residual_trace;
};

RhoStarSolution solve_rho_star(const Trajectory& traj, const MeasureView& samples, double beta,
                               const RhoStarConfig& config, const Neuron& neuron = {});

// Same over a precomputed K x n sigma table (row k-1 = sigma(x_k, theta_i)).
RhoStarSolution solve_rho_star_table(std::span<const double> sigma_table, std::size_t samples,
                                     std::span<const double> ys, double beta,
                                     const RhoStarConfig& config);

}  // namespace mfregret
