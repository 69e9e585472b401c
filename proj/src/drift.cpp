#include "shiftlens/drift.hpp"

#include <algorithm>
#include <cmath>

namespace shiftlens {

namespace {

// Kolmogorov survival function Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
// Terms are added until one drops below 1e-10; if that never happens within
// 100 terms the series is uninformative (lambda tiny) and the limit value 1
// is returned. Result clipped to [0, 1].
double kolmogorov_survival(double lambda) {
  double sum = 0;
  double sign = 1;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * lambda * lambda * static_cast<double>(k) * static_cast<double>(k));
    sum += sign * term;
    sign = -sign;
    if (term < 1e-10) return std::clamp(2.0 * sum, 0.0, 1.0);
  }
  return 1.0;
}

}  // namespace

KsTest ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DomainError("KS test requires non-empty samples");
  std::vector<double> sa = a;
  std::vector<double> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double n = static_cast<double>(sa.size());
  const double m = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0;
  while (i < sa.size() && j < sb.size()) {
    double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  // Once one sample is exhausted the remaining gap only shrinks toward the
  // final (1,1) point unless the other CDF still sits below 1.
  if (i < sa.size()) d = std::max(d, std::abs(static_cast<double>(j) / m - static_cast<double>(i) / n));
  if (j < sb.size()) d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));

  double ne = n * m / (n + m);
  double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  KsTest result;
  result.statistic = d;
  result.p_value = kolmogorov_survival(lambda);
  return result;
}

KsResult drift_mask(const Dataset& source, const Dataset& target, double alpha) {
  if (source.dims() != target.dims())
    throw ShapeError("drift mask: source and target have different feature counts");
  Index d = source.dims();
  KsResult out;
  out.alpha = alpha;
  out.statistic.resize(d);
  out.p_value.resize(d);
  out.mask.resize(static_cast<std::size_t>(d));
  for (Index f = 0; f < d; ++f) {
    std::vector<double> a;
    std::vector<double> b;
    a.reserve(static_cast<std::size_t>(source.rows()));
    b.reserve(static_cast<std::size_t>(target.rows()));
    for (Index i = 0; i < source.rows(); ++i)
      if (source.missing.mask.size() == 0 || !source.missing.mask(i, f)) a.push_back(source.features(i, f));
    for (Index i = 0; i < target.rows(); ++i)
      if (target.missing.mask.size() == 0 || !target.missing.mask(i, f)) b.push_back(target.features(i, f));
    if (a.empty() || b.empty())
      throw DomainError("drift mask: feature " + std::to_string(f) + " has no observed values");
    KsTest test = ks_two_sample(a, b);
    out.statistic(f) = test.statistic;
    out.p_value(f) = test.p_value;
    out.mask[static_cast<std::size_t>(f)] = test.p_value < alpha;
  }
  return out;
}

}  // namespace shiftlens
