#pragma once

// Euler-Maruyama simulation of the two synthetic data environments:
//
//  * periodic:  dX = -0.5 X dt + dW,  Y = sin(h t) X + xi,  d xi = -1.5 xi dt + 0.25 dW'
//  * nonlinear: 3-d OU covariate, Y = f_t(X) + xi with f_t a drifting network of
//               M tanh neurons whose parameters follow their own OU processes.
//
// Every trajectory is sampled on t_k = k dt, k = 1..K.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfregret/model.hpp"
#include "mfregret/rng.hpp"

namespace mfregret {

struct OuParams {
  double rate = 0.0;  // mean reversion kappa
  double mean = 0.0;
  double vol = 0.0;

  void validate() const;
  // Variance of N(mean, vol^2 / (2 rate)); zero when rate or vol is zero.
  double stationary_variance() const;
};

// K Euler steps x_{k+1} = x_k - rate (x_k - mean) dt + vol sqrt(dt) xi_k.
// Returns x_1..x_K (x0 excluded).
std::vector<double> euler_ou_path(const OuParams& params, double x0, std::size_t steps, double dt,
                                  Stream& noise);

struct Trajectory {
  double dt = 0.0;
  std::size_t n_inputs = 0;
  std::vector<double> xs;  // K rows of n_inputs
  std::vector<double> ys;
  std::vector<double> truth;  // noise-free signal f_{t_k}(x_k); empty if unknown

  std::size_t size() const { return ys.size(); }
  // 1-based step index, matching t_k = k dt.
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  std::span<const double> x(std::size_t k) const {
    return std::span<const double>(xs).subspan((k - 1) * n_inputs, n_inputs);
  }
  double y(std::size_t k) const { return ys[k - 1]; }
  DataPoint point(std::size_t k) const;
  double horizon() const { return time(size()); }

  void validate() const;
};

// Columns: k,t,x1..xn,y,truth (truth left empty when unknown).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
std::string trajectory_csv_header(std::size_t n_inputs);
Trajectory read_trajectory_csv(std::istream& in);

struct PeriodicConfig {
  double dt = 0.02;
  std::size_t steps = 1000;
  double h = 0.3;
  OuParams covariate{0.5, 0.0, 1.0};
  OuParams noise{1.5, 0.0, 0.25};
  TruncationSpec response{};

  void validate() const;
};

struct NonlinearConfig {
  double dt = 0.02;
  std::size_t steps = 1000;
  std::size_t n_inputs = 3;
  OuParams covariate{0.7, 0.0, 0.7};
  OuParams noise{5.0, 0.0, 0.2};
  std::size_t neurons = 100;  // M
  double output_scale = 2.5;  // f = output_scale / M * sum sigma
  double phi_rate = 0.6;
  double phi_vol = 0.9;
  double phi_sd = 0.8;  // sd of phi_0 and of the mean levels
  TruncationSpec response{};

  void validate() const;
};

// The drifting ground-truth network f_t(x) = scale * mean_m sigma(x, phi_t^m).
struct NonlinearTruthModel {
  std::size_t neurons = 0;
  std::size_t dim = 0;
  std::size_t steps = 0;
  double scale = 0.0;  // output_scale / M
  std::vector<double> phi_bar;   // M x dim
  std::vector<double> phi_path;  // K x M x dim, row k-1 holds phi_{t_k}

  std::span<const double> phi(std::size_t k, std::size_t m) const {
    return std::span<const double>(phi_path).subspan(((k - 1) * neurons + m) * dim, dim);
  }
  double evaluate(std::size_t k, std::span<const double> x) const;
};

struct TrainTestPair {
  Trajectory train;
  Trajectory test;
};

struct NonlinearInstance {
  Trajectory train;
  Trajectory test;
  NonlinearTruthModel truth;
};

TrainTestPair gen_periodic(const PeriodicConfig& config, std::uint64_t seed);
NonlinearInstance gen_nonlinear(const NonlinearConfig& config, std::uint64_t seed);

// Mean of y_k^2 over the trajectory.
double mean_square_response(const Trajectory& traj);

}  // namespace mfregret
