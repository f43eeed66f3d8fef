#pragma once

// Trial-level summaries and paired tests for online-vs-offline comparisons.

#include <cstddef>
#include <span>

namespace mfregret {

struct StatsSummary {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  double ci_lo = 0.0;
  double ci_hi = 0.0;  // mean +- 1.96 sd / sqrt(n)
  std::size_t n = 0;
};

StatsSummary summarize(std::span<const double> values);

struct PairedTestResult {
  double mean_diff = 0.0;  // mean(a - b)
  double t_stat = 0.0;
  double t_p = 1.0;
  double wilcoxon_stat = 0.0;  // sum of positive ranks
  double wilcoxon_p = 1.0;
  bool wilcoxon_exact = false;
  std::size_t n = 0;
  std::size_t n_nonzero = 0;
};

// Two-sided paired t-test and Wilcoxon signed-rank test on a - b.
// Zero differences are dropped and ties get mid-ranks; the Wilcoxon null is
// enumerated exactly up to 12 nonzero differences, normal with continuity
// correction beyond. Throws DegenerateTestError for n < 6 or all-zero differences.
PairedTestResult paired_tests(std::span<const double> a, std::span<const double> b);

// Exact two-sided signed-rank p-value for the given ranks and positive-rank sum.
double wilcoxon_exact_p(std::span<const double> ranks, double positive_rank_sum);

}  // namespace mfregret
