#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shiftlens/common.hpp"
#include "shiftlens/model.hpp"
#include "shiftlens/pipeline.hpp"
#include "shiftlens/scenario.hpp"
#include "shiftlens/shapley.hpp"

namespace shiftlens {

// Sample Pearson correlation; nullopt when either side has no variance or
// fewer than two pairs exist.
std::optional<double> pearson(const Vector& a, const Vector& b);

// Instances whose anticipated change |v_full - v_empty| falls below this are
// excluded from S-Faith aggregation.
constexpr double kMarginalChangeTau = 1e-4;

struct SFaithConfig {
  int subset_size = 0;   // |K|, must be in [1, players-1]
  int n_subsets = 100;
  LossKind loss = LossKind::kCrossEntropy;
};

// Correlation over sampled fixed-size coalitions K between the attribution
// mass sum_{i in K} phi_i and the true performance recovery
// loss(f(x_t), y_t) - loss(f(x reverted on K), y_s), where the reverted
// sample takes ground-truth pre-shift values on K.
std::optional<double> shift_faithfulness(const Attribution& attribution, const PredictModel& model,
                                         const ShiftScenario& scenario, Index row,
                                         const FeatureGrouping& grouping, const SFaithConfig& config,
                                         Rng rng);

struct SFaithSummary {
  std::vector<std::optional<double>> per_instance;  // nullopt: degenerate correlation
  std::vector<Index> excluded;                      // below-tau anticipated change
  std::optional<double> mean;                       // over included, defined instances
};
SFaithSummary sfaith_dataset(const std::vector<Attribution>& attributions,
                             const PredictModel& model, const ShiftScenario& scenario,
                             const FeatureGrouping& grouping, const SFaithConfig& config,
                             const Rng& root, double tau = kMarginalChangeTau);

// Shannon entropy of |phi| / sum|phi|; nullopt when all values are zero.
std::optional<double> complexity(const Attribution& attribution);

// Remaining fraction of the shift-induced loss gap after removal+retraining.
// Throws DomainError when the pre-removal gap is below tau.
double roar_s_score(double target_loss_after, double source_loss_after, double target_loss_before,
                    double source_loss_before, double tau = kMarginalChangeTau);

struct RoarConfig {
  std::string method = "xpe";  // xpe | xppe | lad | axs | random
  ModelKind model_kind = ModelKind::kLogisticRegression;
  TrainConfig train;
  double removal_fraction = 0.05;
  AttributionOptions attribution;  // method field here is overridden by `method`
  double tau = kMarginalChangeTau;
  std::uint64_t seed = 0;
};

struct RoarResult {
  double score = 0;
  double source_loss_before = 0;
  double target_loss_before = 0;
  double source_loss_after = 0;
  double target_loss_after = 0;
  int features_removed_per_instance = 0;
};

// Remove-retrain-shift pipeline on an aligned scenario with train/test
// splits: train on the source train split, attribute the shifted data, blank
// each instance's top removal_fraction features (by attribution, ties by
// lowest index) to the source-train feature mean in all four splits, retrain,
// and compare the remaining loss gap to the original one.
RoarResult roar_s(const ShiftScenario& scenario, const RoarConfig& config);

// Pearson correlation between per-instance attributions of one feature and
// the loss change caused by imputing that feature's corruption. nullopt when
// fewer than three finite pairs remain or variance vanishes.
std::optional<double> gpc(const Vector& feature_attributions, const Vector& loss_differences);
Vector imputation_loss_differences(const PredictModel& model, const Matrix& imputed_corrupted,
                                   const Matrix& clean, const std::vector<int>& labels,
                                   LossKind loss);

// Share of total absolute attribution mass carried by the designated groups.
std::optional<double> group_importance_ratio(const std::vector<Attribution>& attributions,
                                             const std::set<int>& designated_groups);

}  // namespace shiftlens
