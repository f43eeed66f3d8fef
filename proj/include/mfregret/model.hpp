#pragma once

// Two-layer network primitives: the tanh neuron sigma(x, theta) = a * tanh(w.x + b),
// its parameter gradient, and mean predictions over discrete measures.
//
// Parameters are stored flattened in the fixed order (a, w_1..w_n, b), so a
// neuron over n inputs has dimension d = n + 2.

#include <cstddef>
#include <span>
#include <vector>

namespace mfregret {

inline std::size_t param_dim(std::size_t n_inputs) { return n_inputs + 2; }

struct Theta {
  double a = 0.0;
  std::vector<double> w;
  double b = 0.0;

  std::size_t dim() const { return w.size() + 2; }
  std::vector<double> flatten() const;
  static Theta unflatten(std::span<const double> flat);
};

struct DataPoint {
  std::vector<double> x;
  double y = 0.0;
};

// Smooth clipping v -> level * tanh(v / level).
struct TruncationSpec {
  bool enabled = false;
  double level = 1.0;

  void validate() const;
  double apply(double v) const;
  // d/dv of apply().
  double slope(double v) const;
};

// The single activation in this library. Output truncation (off by default)
// turns it into a neuron bounded by the truncation level.
class Neuron {
 public:
  Neuron() = default;
  explicit Neuron(TruncationSpec output);

  double value(std::span<const double> x, std::span<const double> theta) const;
  // Writes d sigma / d theta into `out` (length x.size() + 2).
  void gradient(std::span<const double> x, std::span<const double> theta,
                std::span<double> out) const;

  const TruncationSpec& truncation() const { return output_; }

 private:
  TruncationSpec output_{};
};

double sigma(std::span<const double> x, const Theta& theta);
std::vector<double> grad_sigma(std::span<const double> x, const Theta& theta);

// Non-owning view of a discrete probability measure on R^d: `params` holds
// size() rows of width `dim`. Empty `weights` means uniform weights.
struct MeasureView {
  std::span<const double> params;
  std::size_t dim = 0;
  std::span<const double> weights;

  std::size_t size() const { return dim == 0 ? 0 : params.size() / dim; }
  std::span<const double> row(std::size_t i) const { return params.subspan(i * dim, dim); }
  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 / static_cast<double>(size()) : weights[i];
  }
  // Throws InputError on empty measure, ragged rows, or weights that do not
  // sum to one within 1e-12.
  void validate() const;
};

// Mean of sigma(x, .) under the measure.
double predict(const MeasureView& measure, std::span<const double> x, const Neuron& neuron = {});

// Mean of |theta|^2 under the measure.
double second_moment(const MeasureView& measure);

}  // namespace mfregret
