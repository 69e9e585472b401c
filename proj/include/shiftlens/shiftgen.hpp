#pragma once

#include <array>
#include <optional>
#include <vector>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"
#include "shiftlens/scenario.hpp"

namespace shiftlens {

// Gaussian class clusters; means sit on a scaled integer lattice so every
// pair is at least `separation * sigma` apart. Labels are cluster ids, class
// counts even within one, rows are shuffled by the seed.
Dataset make_blobs(Index n, Index d, int classes, double separation, double sigma,
                   std::uint64_t seed);

struct CorruptionSpec {
  enum class Kind { kBrightness, kContrast, kGaussianNoise, kImpulse, kMissing };

  Kind kind = Kind::kBrightness;
  double brightness = 0;       // additive offset
  double gamma = 1;            // contrast slope around the midpoint
  std::optional<Vector> contrast_midpoint;  // default: per-feature source mean
  double noise_sigma = 0;      // gaussian
  double impulse_rate = 0;     // probability per entry
  double impulse_low = 0;
  double impulse_high = 1;
  double missing_rate = 0;     // probability per entry in the selected columns

  static CorruptionSpec brightness_shift(double b);
  static CorruptionSpec contrast_shift(double gamma, std::optional<Vector> midpoint = std::nullopt);
  static CorruptionSpec gaussian_shift(double sigma);
  static CorruptionSpec impulse_shift(double rate, double low, double high);
  static CorruptionSpec missing_shift(double rate);
};

std::string corruption_kind_name(CorruptionSpec::Kind kind);
CorruptionSpec::Kind parse_corruption_kind(const std::string& name);

// Applies the corruption to the given feature subset. The returned scenario
// stores the original rows as ground truth, so random corruptions are exact
// per-instance transformations; labels are copied unchanged
// (epsilon_label_preserving = exact_zero).
ShiftScenario apply_corruption(const Dataset& data, const CorruptionSpec& spec,
                               const std::vector<Index>& feature_subset, std::uint64_t seed,
                               double train_fraction = 0.5);

// Column-mean imputation fitted on fully observed training columns.
class MeanImputer {
 public:
  static MeanImputer fit(const Dataset& train);
  Dataset impute(const Dataset& data) const;
  const Vector& means() const { return means_; }

 private:
  Vector means_;
};

// Binary-group sample where group 1 rows are offset by +delta on the band
// features; class labels depend only on the un-offset features, so group
// membership never changes a label.
struct GroupedData {
  Dataset data;                    // observed (offset applied)
  Matrix pre_shift_features;       // before the group offset
  std::vector<int> group;          // 0 or 1 per row
  std::vector<Index> band;
  double delta = 0;
};
GroupedData make_group_signal_data(Index n, Index d, const std::vector<Index>& band, double delta,
                                   std::uint64_t seed);

// Source drawn from group 0 only; three equally sized targets with group-1
// fractions {0, 0.5, rho}. Each target carries its true pre-shift rows.
struct SelectionBiasSplit {
  Dataset source;
  std::array<ShiftScenario, 3> scenarios;
  std::array<double, 3> group1_fractions;
};
SelectionBiasSplit selection_bias_split(const GroupedData& pool, double rho, std::uint64_t seed);

}  // namespace shiftlens
