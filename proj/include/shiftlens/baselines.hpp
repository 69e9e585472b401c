#pragma once

#include <vector>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"
#include "shiftlens/drift.hpp"
#include "shiftlens/model.hpp"
#include "shiftlens/rng.hpp"
#include "shiftlens/shapley.hpp"

namespace shiftlens {

// Feature-absence convention for standard (prediction) attributions: replace
// absent features with a zero baseline, or integrate them out over background
// samples (tabular mode).
struct BackgroundSpec {
  enum class Kind { kZeros, kMarginal };
  Kind kind = Kind::kZeros;
  Matrix samples;  // marginal mode, rows drawn from the source sample

  static BackgroundSpec zeros() { return {}; }
  static BackgroundSpec marginal(Matrix samples);
  // Up to `count` source rows drawn without replacement.
  static BackgroundSpec marginal_from(const Dataset& source, Index count, Rng rng);
};

// Shapley attribution of the class-`output_class` probability at x.
Attribution standard_attribution(const PredictModel& model, const Vector& x, int output_class,
                                 const FeatureGrouping& grouping, const BackgroundSpec& background,
                                 const EstimatorConfig& config, Rng rng);

// Local attribution difference |phi(x_t) - phi(x_s)|, both games explaining
// the class argmax f(x_t). The absolute value intentionally destroys
// efficiency; v_empty/v_full carry the x_t game's anchors.
Attribution lad(const PredictModel& model, const Vector& target_sample, const Vector& source_sample,
                const FeatureGrouping& grouping, const BackgroundSpec& background,
                const EstimatorConfig& config, Rng rng);

// Attribution-times-shift: phi(x_t) masked to drifted groups. A group counts
// as drifted when any member feature is flagged.
Attribution axs(const PredictModel& model, const Vector& target_sample,
                const std::vector<bool>& feature_mask, const FeatureGrouping& grouping,
                const BackgroundSpec& background, const EstimatorConfig& config, Rng rng);

}  // namespace shiftlens
