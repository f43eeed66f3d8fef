#include "mfregret/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mfregret/errors.hpp"

namespace mfregret {

StatsSummary summarize(std::span<const double> values) {
  if (values.size() < 2) throw InputError("summarize: need at least two values");
  StatsSummary s;
  s.n = values.size();
  const double n = static_cast<double>(s.n);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (n - 1.0));
  const double half = 1.96 * s.sd / std::sqrt(n);
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  return s;
}

double wilcoxon_exact_p(std::span<const double> ranks, double positive_rank_sum) {
  const std::size_t n = ranks.size();
  if (n == 0 || n > 24) throw InputError("wilcoxon_exact_p: supports 1..24 ranks");
  const double eps = 1e-9;
  std::size_t lower = 0;
  std::size_t upper = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1U) w += ranks[i];
    lower += w <= positive_rank_sum + eps;
    upper += w >= positive_rank_sum - eps;
  }
  const double p = 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total);
  return std::min(1.0, p);
}

PairedTestResult paired_tests(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("paired_tests: samples differ in length");
  if (a.size() < 6) throw DegenerateTestError("paired_tests: need at least 6 pairs");
  PairedTestResult r;
  r.n = a.size();
  std::vector<double> diff(r.n);
  for (std::size_t i = 0; i < r.n; ++i) diff[i] = a[i] - b[i];
  if (std::all_of(diff.begin(), diff.end(), [](double d) { return d == 0.0; })) {
    throw DegenerateTestError("paired_tests: all paired differences are zero");
  }

  const double n = static_cast<double>(r.n);
  r.mean_diff = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diff) ss += (d - r.mean_diff) * (d - r.mean_diff);
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  if (se == 0.0) {
    r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
    r.t_p = 0.0;
  } else {
    r.t_stat = r.mean_diff / se;
    const boost::math::students_t dist(n - 1.0);
    r.t_p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_stat))));
  }

  std::vector<double> nz;
  for (double d : diff)
    if (d != 0.0) nz.push_back(d);
  r.n_nonzero = nz.size();
  std::vector<std::size_t> order(nz.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(nz[i]) < std::abs(nz[j]); });
  std::vector<double> ranks(nz.size());
  double tie_term = 0.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && std::abs(nz[order[hi + 1]]) == std::abs(nz[order[lo]])) ++hi;
    const double mid = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (std::size_t q = lo; q <= hi; ++q) ranks[order[q]] = mid;
    const double t = static_cast<double>(hi - lo + 1);
    tie_term += t * t * t - t;
    lo = hi + 1;
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i)
    if (nz[i] > 0.0) w_plus += ranks[i];
  r.wilcoxon_stat = w_plus;

  if (r.n_nonzero <= 12) {
    r.wilcoxon_exact = true;
    r.wilcoxon_p = wilcoxon_exact_p(ranks, w_plus);
  } else {
    const double m = static_cast<double>(r.n_nonzero);
    const double mu = m * (m + 1.0) / 4.0;
    const double var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(w_plus - mu) - 0.5) / std::sqrt(var);
    const boost::math::normal_distribution<double> std_normal;
    r.wilcoxon_p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(std_normal, z)));
  }
  return r;
}

}  // namespace mfregret
