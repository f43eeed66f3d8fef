#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfregret {

// Bad arguments: dimension mismatches, invalid configs, malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A particle left the finite reals during the online run.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t particle, std::size_t step, const std::string& what)
      : std::runtime_error(what), particle_(particle), step_(step) {}
  std::size_t particle() const { return particle_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t particle_;
  std::size_t step_;
};

// Root bracketing or grid checks failed inside an equilibrium solver.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-point iteration ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

// Offline gradient descent produced a huge or non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t iter, const std::string& what)
      : std::runtime_error(what), iter_(iter) {}
  std::size_t iter() const { return iter_; }

 private:
  std::size_t iter_;
};

// A statistical test has no information (all paired differences zero, n too small).
class DegenerateTestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfregret
