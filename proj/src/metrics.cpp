#include "shiftlens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shiftlens/drift.hpp"
#include "shiftlens/shiftgen.hpp"

namespace shiftlens {

std::optional<double> pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("pearson: vectors have different lengths");
  Index n = a.size();
  if (n < 2) return std::nullopt;
  double ma = a.mean();
  double mb = b.mean();
  double cov = 0;
  double va = 0;
  double vb = 0;
  for (Index i = 0; i < n; ++i) {
    double da = a(i) - ma;
    double db = b(i) - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0 || vb <= 0) return std::nullopt;
  return cov / std::sqrt(va * vb);
}

std::optional<double> shift_faithfulness(const Attribution& attribution, const PredictModel& model,
                                         const ShiftScenario& scenario, Index row,
                                         const FeatureGrouping& grouping, const SFaithConfig& config,
                                         Rng rng) {
  int g = grouping.groups();
  if (attribution.values.size() != g)
    throw ShapeError("attribution has a different player count than the grouping");
  if (config.subset_size < 1 || config.subset_size >= g)
    throw DomainError("subset size must be in [1, players-1]");
  if (config.n_subsets < 2) throw DomainError("S-Faith needs at least two subsets");
  if (row < 0 || row >= scenario.target_rows()) throw DomainError("scenario row out of range");
  if (scenario.target.missing.mask.size() != 0 && scenario.target.missing.mask.row(row).any())
    throw DomainError("S-Faith needs observed target features; impute first");

  Vector x_t = scenario.target.row(row);
  Vector x_pre = scenario.true_pre_shift.row(row).transpose();
  int y_t = (*scenario.target.labels)[static_cast<std::size_t>(row)];
  int y_s = scenario.pre_shift_labels[static_cast<std::size_t>(row)];

  double base_loss = loss_value(config.loss, model.predict_one(x_t), y_t);

  Matrix reverted(config.n_subsets, x_t.size());
  Vector mass(config.n_subsets);
  for (int k = 0; k < config.n_subsets; ++k) {
    Coalition revert_set(g);
    for (Index i : rng.sample_without_replacement(g, config.subset_size))
      revert_set.add(static_cast<int>(i));
    double sum = 0;
    for (int i : revert_set.members()) sum += attribution.values(i);
    mass(k) = sum;
    // Features in the sampled set go back to their pre-shift values.
    reverted.row(k) =
        partial_shift(x_t, x_pre, revert_set.complemented(), grouping).transpose();
  }

  Matrix probs = model.predict_batch(reverted);
  Vector recovery(config.n_subsets);
  for (int k = 0; k < config.n_subsets; ++k)
    recovery(k) = base_loss - loss_value(config.loss, probs.row(k).transpose(), y_s);

  return pearson(mass, recovery);
}

SFaithSummary sfaith_dataset(const std::vector<Attribution>& attributions,
                             const PredictModel& model, const ShiftScenario& scenario,
                             const FeatureGrouping& grouping, const SFaithConfig& config,
                             const Rng& root, double tau) {
  if (static_cast<Index>(attributions.size()) != scenario.target_rows())
    throw ShapeError("attribution count does not match scenario rows");
  SFaithSummary summary;
  summary.per_instance.resize(attributions.size());
  double total = 0;
  Index counted = 0;
  for (std::size_t j = 0; j < attributions.size(); ++j) {
    const Attribution& att = attributions[j];
    if (std::abs(att.v_full - att.v_empty) < tau) {
      summary.excluded.push_back(static_cast<Index>(j));
      continue;
    }
    summary.per_instance[j] =
        shift_faithfulness(att, model, scenario, static_cast<Index>(j), grouping, config,
                           root.stream("sfaith", static_cast<std::uint64_t>(j)));
    if (summary.per_instance[j]) {
      total += *summary.per_instance[j];
      ++counted;
    }
  }
  if (counted > 0) summary.mean = total / static_cast<double>(counted);
  return summary;
}

std::optional<double> complexity(const Attribution& attribution) {
  Vector magnitude = attribution.values.cwiseAbs();
  double total = magnitude.sum();
  if (total <= 0) return std::nullopt;
  return entropy(magnitude / total);
}

double roar_s_score(double target_loss_after, double source_loss_after, double target_loss_before,
                    double source_loss_before, double tau) {
  double gap = target_loss_before - source_loss_before;
  if (gap < tau) throw DomainError("shift has no measurable effect");
  return std::max(0.0, target_loss_after - source_loss_after) / gap;
}

namespace {

Dataset slice_rows(const Dataset& data, Index begin, Index end) {
  std::vector<Index> rows;
  for (Index i = begin; i < end; ++i) rows.push_back(i);
  return data.select_rows(rows);
}

// Per-instance top-k feature set by group attribution, ties by lowest index.
std::vector<Index> top_features(const Attribution& attribution, const FeatureGrouping& grouping,
                                Index k) {
  Index d = grouping.dims();
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index lhs, Index rhs) {
    double a = attribution.values(grouping.group_of[static_cast<std::size_t>(lhs)]);
    double b = attribution.values(grouping.group_of[static_cast<std::size_t>(rhs)]);
    return a > b;
  });
  order.resize(static_cast<std::size_t>(std::min(k, d)));
  return order;
}

}  // namespace

RoarResult roar_s(const ShiftScenario& scenario, const RoarConfig& config) {
  scenario.validate();
  if (config.removal_fraction < 0 || config.removal_fraction > 1)
    throw DomainError("removal fraction must be in [0, 1]");
  Index n = scenario.target_rows();
  if (scenario.train_count < 2 || scenario.train_count > n - 2)
    throw DomainError("scenario needs train and test splits of at least two rows each");
  if (scenario.source.rows() != n)
    throw DomainError("roar_s needs a row-aligned scenario (source row j shifts to target row j)");

  Index d = scenario.source.dims();
  Index split = scenario.train_count;

  Dataset source_train = slice_rows(scenario.source, 0, split);
  Dataset source_test = slice_rows(scenario.source, split, n);
  Dataset target_train = slice_rows(scenario.target, 0, split);
  Dataset target_test = slice_rows(scenario.target, split, n);

  MeanImputer imputer = MeanImputer::fit(source_train);
  if (target_train.missing.any()) target_train = imputer.impute(target_train);
  if (target_test.missing.any()) target_test = imputer.impute(target_test);

  TrainConfig train_config = config.train;
  train_config.seed = config.seed;
  TrainResult trained = train(config.model_kind, source_train, train_config);

  FeatureGrouping grouping = FeatureGrouping::identity(d);
  AttributionOptions attribution = config.attribution;
  attribution.method = config.method;
  Rng root(config.seed);
  AttributionRun train_run = run_shift_attribution(trained.model, source_train, target_train,
                                                   grouping, attribution, root.stream("roar.train"));
  AttributionRun test_run = run_shift_attribution(trained.model, source_test, target_test, grouping,
                                                  attribution, root.stream("roar.test"));

  double target_loss_before =
      mean_loss(trained.model, target_test.features, *target_test.labels, LossKind::kCrossEntropy);
  double source_loss_before =
      mean_loss(trained.model, source_test.features, *source_test.labels, LossKind::kCrossEntropy);

  Index k = static_cast<Index>(
      std::ceil(config.removal_fraction * static_cast<double>(d) - 1e-12));
  const Vector& fill = imputer.means();

  auto blank = [&](Dataset& a, Dataset& b, const std::vector<Attribution>& atts) {
    for (Index j = 0; j < a.rows(); ++j) {
      for (Index f : top_features(atts[static_cast<std::size_t>(j)], grouping, k)) {
        a.features(j, f) = fill(f);
        b.features(j, f) = fill(f);
      }
    }
  };
  Dataset source_train_removed = source_train;
  Dataset target_train_removed = target_train;
  Dataset source_test_removed = source_test;
  Dataset target_test_removed = target_test;
  blank(source_train_removed, target_train_removed, train_run.attributions);
  blank(source_test_removed, target_test_removed, test_run.attributions);

  TrainResult retrained = train(config.model_kind, source_train_removed, train_config);

  RoarResult result;
  result.features_removed_per_instance = static_cast<int>(k);
  result.target_loss_before = target_loss_before;
  result.source_loss_before = source_loss_before;
  result.target_loss_after = mean_loss(retrained.model, target_test_removed.features,
                                       *target_test_removed.labels, LossKind::kCrossEntropy);
  result.source_loss_after = mean_loss(retrained.model, source_test_removed.features,
                                       *source_test_removed.labels, LossKind::kCrossEntropy);
  result.score = roar_s_score(result.target_loss_after, result.source_loss_after,
                              result.target_loss_before, result.source_loss_before, config.tau);
  return result;
}

std::optional<double> gpc(const Vector& feature_attributions, const Vector& loss_differences) {
  if (feature_attributions.size() != loss_differences.size())
    throw ShapeError("gpc: vectors have different lengths");
  std::vector<double> a;
  std::vector<double> b;
  for (Index i = 0; i < feature_attributions.size(); ++i) {
    if (!std::isfinite(feature_attributions(i)) || !std::isfinite(loss_differences(i))) continue;
    a.push_back(feature_attributions(i));
    b.push_back(loss_differences(i));
  }
  if (a.size() < 3) return std::nullopt;
  Vector va = Eigen::Map<Vector>(a.data(), static_cast<Index>(a.size()));
  Vector vb = Eigen::Map<Vector>(b.data(), static_cast<Index>(b.size()));
  return pearson(va, vb);
}

Vector imputation_loss_differences(const PredictModel& model, const Matrix& imputed_corrupted,
                                   const Matrix& clean, const std::vector<int>& labels,
                                   LossKind loss) {
  if (imputed_corrupted.rows() != clean.rows() ||
      imputed_corrupted.rows() != static_cast<Index>(labels.size()))
    throw ShapeError("gpc inputs must be row-aligned");
  Matrix p_corrupted = model.predict_batch(imputed_corrupted);
  Matrix p_clean = model.predict_batch(clean);
  Vector out(clean.rows());
  for (Index i = 0; i < clean.rows(); ++i) {
    int y = labels[static_cast<std::size_t>(i)];
    out(i) = loss_value(loss, p_corrupted.row(i).transpose(), y) -
             loss_value(loss, p_clean.row(i).transpose(), y);
  }
  return out;
}

std::optional<double> group_importance_ratio(const std::vector<Attribution>& attributions,
                                             const std::set<int>& designated_groups) {
  if (attributions.empty()) throw DomainError("group ratio needs at least one attribution");
  int g = static_cast<int>(attributions.front().values.size());
  for (int id : designated_groups)
    if (id < 0 || id >= g) throw DomainError("designated group id out of range");
  double designated = 0;
  double total = 0;
  for (const Attribution& att : attributions) {
    if (att.values.size() != g) throw ShapeError("attributions have inconsistent player counts");
    for (int i = 0; i < g; ++i) {
      double magnitude = std::abs(att.values(i));
      total += magnitude;
      if (designated_groups.contains(i)) designated += magnitude;
    }
  }
  if (total <= 0) return std::nullopt;
  return designated / total;
}

}  // namespace shiftlens
