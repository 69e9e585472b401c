#pragma once

#include <vector>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"

namespace shiftlens {

// Per-feature two-sample Kolmogorov-Smirnov results; mask[i] flags feature i
// as drifted when p_value[i] < alpha.
struct KsResult {
  Vector statistic;
  Vector p_value;
  std::vector<bool> mask;
  double alpha = 0.05;
};

// Exact sup-gap between the two empirical CDFs (merge scan, both CDFs stepped
// through ties before the gap is measured), and the asymptotic two-sided
// p-value with the small-sample adjustment
//   lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D,  ne = n*m/(n+m).
struct KsTest {
  double statistic = 0;
  double p_value = 1;
};
KsTest ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

// Featurewise KS test between the marginal samples of two datasets.
KsResult drift_mask(const Dataset& source, const Dataset& target, double alpha = 0.05);

}  // namespace shiftlens
