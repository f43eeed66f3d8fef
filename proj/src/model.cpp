#include "mfregret/model.hpp"

#include <cmath>
#include <string>

#include "mfregret/errors.hpp"

namespace mfregret {

std::vector<double> Theta::flatten() const {
  std::vector<double> flat;
  flat.reserve(dim());
  flat.push_back(a);
  flat.insert(flat.end(), w.begin(), w.end());
  flat.push_back(b);
  return flat;
}

Theta Theta::unflatten(std::span<const double> flat) {
  if (flat.size() < 2) throw InputError("Theta::unflatten: need at least (a, b)");
  Theta t;
  t.a = flat.front();
  t.w.assign(flat.begin() + 1, flat.end() - 1);
  t.b = flat.back();
  return t;
}

void TruncationSpec::validate() const {
  if (enabled && !(level > 0.0)) throw InputError("truncation level must be positive");
}

double TruncationSpec::apply(double v) const {
  return enabled ? level * std::tanh(v / level) : v;
}

double TruncationSpec::slope(double v) const {
  if (!enabled) return 1.0;
  const double t = std::tanh(v / level);
  return 1.0 - t * t;
}

Neuron::Neuron(TruncationSpec output) : output_(output) { output_.validate(); }

namespace {

void check_dims(std::span<const double> x, std::span<const double> theta) {
  if (theta.size() != x.size() + 2) {
    throw InputError("neuron: covariate length " + std::to_string(x.size()) +
                     " does not match parameter dimension " + std::to_string(theta.size()));
  }
}

double pre_activation(std::span<const double> x, std::span<const double> theta) {
  double u = theta.back();
  for (std::size_t j = 0; j < x.size(); ++j) u += theta[1 + j] * x[j];
  return u;
}

}  // namespace

double Neuron::value(std::span<const double> x, std::span<const double> theta) const {
  check_dims(x, theta);
  return output_.apply(theta[0] * std::tanh(pre_activation(x, theta)));
}

void Neuron::gradient(std::span<const double> x, std::span<const double> theta,
                      std::span<double> out) const {
  check_dims(x, theta);
  if (out.size() != theta.size()) throw InputError("neuron gradient: output length mismatch");
  const double t = std::tanh(pre_activation(x, theta));
  const double a = theta[0];
  const double outer = output_.slope(a * t);
  const double inner = outer * a * (1.0 - t * t);
  out[0] = outer * t;
  for (std::size_t j = 0; j < x.size(); ++j) out[1 + j] = inner * x[j];
  out.back() = inner;
}

double sigma(std::span<const double> x, const Theta& theta) {
  const auto flat = theta.flatten();
  return Neuron{}.value(x, flat);
}

std::vector<double> grad_sigma(std::span<const double> x, const Theta& theta) {
  const auto flat = theta.flatten();
  std::vector<double> g(flat.size());
  Neuron{}.gradient(x, flat, g);
  return g;
}

void MeasureView::validate() const {
  if (dim == 0 || params.empty()) throw InputError("measure is empty");
  if (params.size() % dim != 0) throw InputError("measure rows are ragged");
  if (!weights.empty()) {
    if (weights.size() != size()) throw InputError("measure weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InputError("measure has a negative or NaN weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("measure weights do not sum to 1");
  }
}

double predict(const MeasureView& measure, std::span<const double> x, const Neuron& neuron) {
  measure.validate();
  double m = 0.0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    m += measure.weight(i) * neuron.value(x, measure.row(i));
  }
  return m;
}

double second_moment(const MeasureView& measure) {
  measure.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    double sq = 0.0;
    for (double v : measure.row(i)) sq += v * v;
    s += measure.weight(i) * sq;
  }
  return s;
}

}  // namespace mfregret
