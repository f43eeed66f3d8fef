#include "mfregret/measures.hpp"

#include <iomanip>
#include <ostream>
#include <string>

#include "mfregret/errors.hpp"

namespace mfregret {

WeightedMeasure::WeightedMeasure(std::size_t dim, std::vector<double> samples,
                                 std::vector<double> weights)
    : dim_(dim), samples_(std::move(samples)), weights_(std::move(weights)) {
  view().validate();
}

double cost_u_unreg(const MeasureView& measure, const DataPoint& z, const Neuron& neuron) {
  const double m = predict(measure, z.x, neuron);
  return m * m - 2.0 * z.y * m;
}

double cost_u(const MeasureView& measure, const DataPoint& z, double lambda, const Neuron& neuron) {
  return cost_u_unreg(measure, z, neuron) + 0.5 * lambda * second_moment(measure);
}

double oos_mse(std::span<const double> predictions, const Trajectory& test) {
  test.validate();
  if (predictions.size() != test.size()) {
    throw InputError("oos_mse: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(test.size()) + " test points");
  }
  double s = 0.0;
  for (std::size_t k = 1; k <= test.size(); ++k) {
    const double e = predictions[k - 1] - test.y(k);
    s += e * e;
  }
  return s / static_cast<double>(test.size());
}

double oos_mse(std::span<const Snapshot> snapshots, const Trajectory& test, const Neuron& neuron) {
  std::vector<double> preds(test.size());
  std::vector<bool> covered(test.size(), false);
  for (const auto& snap : snapshots) {
    // A snapshot after `step` updates is the predictor at t_{step+1}.
    if (snap.step < test.size()) {
      preds[snap.step] = predict(snap.ensemble.view(), test.x(snap.step + 1), neuron);
      covered[snap.step] = true;
    }
  }
  for (std::size_t k = 0; k < covered.size(); ++k) {
    if (!covered[k]) {
      throw InputError("oos_mse: no predictor snapshot for test step " + std::to_string(k + 1));
    }
  }
  return oos_mse(preds, test);
}

void write_measure_csv(std::ostream& out, const WeightedMeasure& measure) {
  out << "sample_id";
  for (std::size_t j = 1; j <= measure.dim(); ++j) out << ",theta" << j;
  out << ",weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    out << i;
    for (double v : measure.sample(i)) out << ',' << v;
    out << ',' << measure.weights()[i] << '\n';
  }
}

}  // namespace mfregret
