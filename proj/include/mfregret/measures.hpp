#pragma once

// Cost functionals on discrete measures. U(mu, z) = m^2 - 2 y m + (lambda/2) <mu, |theta|^2>
// with m the mean prediction; it differs from the penalized squared error
// (m - y)^2 + (lambda/2) <mu, |theta|^2> only by the constant y^2.
//
// Differential entropy is deliberately absent: it is undefined on point masses.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfregret/datastream.hpp"
#include "mfregret/model.hpp"
#include "mfregret/onpgd.hpp"

namespace mfregret {

class WeightedMeasure {
 public:
  WeightedMeasure() = default;
  WeightedMeasure(std::size_t dim, std::vector<double> samples, std::vector<double> weights);

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> samples() const { return samples_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(samples_).subspan(i * dim_, dim_);
  }
  MeasureView view() const { return MeasureView{samples_, dim_, weights_}; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> samples_;
  std::vector<double> weights_;
};

double cost_u(const MeasureView& measure, const DataPoint& z, double lambda,
              const Neuron& neuron = {});
double cost_u_unreg(const MeasureView& measure, const DataPoint& z, const Neuron& neuron = {});

// (1/K) sum_k (prediction_k - y_k^test)^2.
double oos_mse(std::span<const double> predictions, const Trajectory& test);

// Same, from ensemble snapshots; needs the predictor at every t_k, i.e.
// snapshots at step counts 0..K-1 (snapshot_every = 1).
double oos_mse(std::span<const Snapshot> snapshots, const Trajectory& test,
               const Neuron& neuron = {});

// Columns: sample_id,theta1..thetad,weight
void write_measure_csv(std::ostream& out, const WeightedMeasure& measure);

}  // namespace mfregret
