#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlens/baselines.hpp"
#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"
#include "shiftlens/drift.hpp"
#include "shiftlens/model.hpp"
#include "shiftlens/shapley.hpp"
#include "shiftlens/transport.hpp"

namespace shiftlens {

// Shared knobs for per-instance shift attribution.
struct AttributionOptions {
  std::string method = "xpe";  // xpe | xppe | lad | axs | random
  LossKind loss = LossKind::kCrossEntropy;
  double alpha = 0.05;  // drift mask confidence for axs
  EstimatorConfig estimator;
  BackgroundSpec::Kind background = BackgroundSpec::Kind::kMarginal;
  Index background_count = 30;
  int threads = 1;
};

// One matched source/target attribution pass. Requires equal row counts and
// fully observed features (impute beforehand).
struct AttributionRun {
  std::vector<Attribution> attributions;  // one per target row
  TransportMap map;
  LabelTransfer transfer;  // empty when the source is unlabeled
  double objective = 0;
  KsResult drift;
};
AttributionRun run_shift_attribution(const PredictModel& model, const Dataset& source,
                                     const Dataset& target, const FeatureGrouping& grouping,
                                     const AttributionOptions& options, const Rng& root);

// Full monitoring pass: aligns sample counts (seeded subsampling of the
// larger side), imputes missing target values with source feature means,
// estimates target performance via label transport, attributes per instance,
// and runs the drift test.
struct MonitorOptions {
  AttributionOptions attribution;
  FeatureGrouping grouping;  // leave empty for identity
  std::uint64_t seed = 0;
  std::optional<Matrix> source_embedding;  // transport in embedding space
  std::optional<Matrix> target_embedding;
};

struct MonitorResult {
  std::vector<Index> source_rows;  // original indices after alignment
  std::vector<Index> target_rows;
  TransportMap map;                // over aligned rows
  LabelTransfer transfer;
  double objective = 0;
  std::string cost_kind;
  double estimated_target_loss = 0;
  double source_loss = 0;
  std::optional<double> label_accuracy;  // present when the target is labeled
  KsResult drift;
  std::vector<Attribution> attributions;  // per aligned target row
  std::vector<std::string> warnings;
};

MonitorResult run_monitor(const PredictModel& model, const Dataset& source, const Dataset& target,
                          const MonitorOptions& options);

// Report JSON with the published key layout; `config` echoes the caller's
// semantic flags.
nlohmann::ordered_json build_report(const MonitorResult& result, std::uint64_t seed,
                                    const nlohmann::ordered_json& config);

// 8-bit binary PGM of per-player attribution values arranged on a grid:
// zero maps to gray 128, +max|phi| to 255, -max|phi| to 0.
void write_attribution_pgm(const Attribution& attribution, Index height, Index width,
                           const std::filesystem::path& path);

}  // namespace shiftlens
