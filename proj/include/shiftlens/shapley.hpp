#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "shiftlens/coalition.hpp"
#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"
#include "shiftlens/model.hpp"
#include "shiftlens/rng.hpp"
#include "shiftlens/transport.hpp"

namespace shiftlens {

// Worths of many coalitions at once; batching keeps model calls amortized.
using ValueOracle = std::function<std::vector<double>(const std::vector<Coalition>&)>;

// Deduplicating cache in front of a ValueOracle.
class CachedGame {
 public:
  CachedGame(int players, ValueOracle oracle);

  int players() const { return players_; }
  double value(const Coalition& coalition);
  std::vector<double> values(const std::vector<Coalition>& coalitions);
  std::size_t evaluations() const { return cache_.size(); }

 private:
  int players_;
  ValueOracle oracle_;
  std::unordered_map<Coalition, double, CoalitionHash> cache_;
};

struct Attribution {
  Vector values;            // one per player
  std::string player_kind;  // "features" | "groups"
  std::string method;
  double v_empty = 0;
  double v_full = 0;
  bool degenerate = false;  // kernel estimator fell back to a uniform split
};

// Hybrid sample for a partial shift: features whose group is in the coalition
// keep the target value, the rest revert to the source counterpart.
Vector partial_shift(const Vector& target_sample, const Vector& source_sample,
                     const Coalition& coalition, const FeatureGrouping& grouping);

enum class ValueKind {
  kBaseline,            // class probability, absent features set to a fixed baseline
  kMarginal,            // class probability, absent features averaged over backgrounds
  kTransportPrediction, // class probability under partial shift
  kCouplingPrediction,  // class probability under partial shift, coupling-weighted
  kXpeLoss,             // loss against the transported label under partial shift
  kXppeEntropy          // predictive entropy under partial shift
};

struct ValueFunctionSpec {
  ValueKind kind = ValueKind::kXpeLoss;
  const PredictModel* model = nullptr;
  Vector target_sample;       // x_t, always required
  Vector source_counterpart;  // transport / coupling / xpe / xppe
  Vector baseline;            // baseline kind
  Matrix background;          // marginal kind, rows are background samples
  Matrix coupling_sources;    // coupling kind, support rows
  Vector coupling_weights;    // coupling kind, one weight per support row
  int output_class = -1;      // prediction kinds
  int estimated_label = -1;   // xpe
  LossKind loss_kind = LossKind::kCrossEntropy;  // xpe
  FeatureGrouping grouping;

  void validate() const;
};

double evaluate_value(const ValueFunctionSpec& spec, const Coalition& coalition);
ValueOracle make_value_oracle(const ValueFunctionSpec& spec);

// Hard cap on exact enumeration: 2^g coalition evaluations.
constexpr int kExactShapleyCap = 20;

struct EstimatorConfig {
  int exact_cap = 12;   // use exact enumeration up to this many players
  int budget = 3000;    // kernel estimator coalition samples
};

// Exact Shapley values by full enumeration; every coalition evaluated once.
Attribution exact_shapley(CachedGame& game);
Attribution exact_shapley(const ValueFunctionSpec& spec);

// KernelSHAP-style estimator: coalitions drawn proportionally to the Shapley
// kernel weight (complete size levels are enumerated when the budget covers
// them), paired with complements, then a weighted least squares constrained
// so that the intercept equals v(empty) and the values sum to
// v(full) - v(empty).
Attribution kernel_shapley(CachedGame& game, int budget, Rng rng);
Attribution kernel_shapley(const ValueFunctionSpec& spec, int budget, Rng rng);

// Per-instance feature shift attributions over a matched target dataset.
// method is "xpe" (needs transferred labels) or "xppe".
std::vector<Attribution> attribute_dataset(const std::string& method, const PredictModel& model,
                                           const Dataset& target, const TransportMap& map,
                                           const LabelTransfer* transfer, const Dataset& source,
                                           const FeatureGrouping& grouping,
                                           const EstimatorConfig& config, LossKind loss,
                                           const Rng& root, int threads);

void export_attributions_csv(const std::vector<Attribution>& attributions,
                             const std::filesystem::path& path);

// Runs fn(0..count-1) across up to `threads` workers. Output written by index
// stays deterministic regardless of scheduling.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn);

}  // namespace shiftlens
