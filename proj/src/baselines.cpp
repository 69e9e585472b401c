#include "shiftlens/baselines.hpp"

#include <algorithm>

namespace shiftlens {

BackgroundSpec BackgroundSpec::marginal(Matrix samples) {
  if (samples.rows() < 1) throw DomainError("marginal background needs at least one sample");
  BackgroundSpec spec;
  spec.kind = Kind::kMarginal;
  spec.samples = std::move(samples);
  return spec;
}

BackgroundSpec BackgroundSpec::marginal_from(const Dataset& source, Index count, Rng rng) {
  Index take = std::min(count, source.rows());
  std::vector<Index> rows = rng.sample_without_replacement(source.rows(), take);
  std::sort(rows.begin(), rows.end());
  Matrix picked(take, source.dims());
  for (Index k = 0; k < take; ++k) picked.row(k) = source.features.row(rows[static_cast<std::size_t>(k)]);
  return marginal(std::move(picked));
}

namespace {

Attribution explain_prediction(const PredictModel& model, const Vector& x, int output_class,
                               const FeatureGrouping& grouping, const BackgroundSpec& background,
                               const EstimatorConfig& config, Rng rng) {
  ValueFunctionSpec spec;
  spec.model = &model;
  spec.target_sample = x;
  spec.output_class = output_class;
  spec.grouping = grouping;
  if (background.kind == BackgroundSpec::Kind::kZeros) {
    spec.kind = ValueKind::kBaseline;
    spec.baseline = Vector::Zero(x.size());
  } else {
    spec.kind = ValueKind::kMarginal;
    spec.background = background.samples;
  }
  int g = grouping.groups();
  if (g <= std::min(config.exact_cap, kExactShapleyCap)) return exact_shapley(spec);
  return kernel_shapley(spec, config.budget, rng);
}

}  // namespace

Attribution standard_attribution(const PredictModel& model, const Vector& x, int output_class,
                                 const FeatureGrouping& grouping, const BackgroundSpec& background,
                                 const EstimatorConfig& config, Rng rng) {
  Attribution att = explain_prediction(model, x, output_class, grouping, background, config, rng);
  att.method = "standard";
  att.player_kind = grouping.is_identity() ? "features" : "groups";
  return att;
}

Attribution lad(const PredictModel& model, const Vector& target_sample, const Vector& source_sample,
                const FeatureGrouping& grouping, const BackgroundSpec& background,
                const EstimatorConfig& config, Rng rng) {
  if (target_sample.size() != source_sample.size())
    throw ShapeError("lad: sample dimensions differ");
  Vector probs = model.predict_one(target_sample);
  Index anchor_class = 0;
  probs.maxCoeff(&anchor_class);

  Attribution target_att =
      explain_prediction(model, target_sample, static_cast<int>(anchor_class), grouping, background,
                         config, rng.stream("lad.target"));
  Attribution source_att =
      explain_prediction(model, source_sample, static_cast<int>(anchor_class), grouping, background,
                         config, rng.stream("lad.source"));

  Attribution att;
  att.values = (target_att.values - source_att.values).cwiseAbs();
  att.v_empty = target_att.v_empty;
  att.v_full = target_att.v_full;
  att.degenerate = target_att.degenerate || source_att.degenerate;
  att.method = "lad";
  att.player_kind = grouping.is_identity() ? "features" : "groups";
  return att;
}

Attribution axs(const PredictModel& model, const Vector& target_sample,
                const std::vector<bool>& feature_mask, const FeatureGrouping& grouping,
                const BackgroundSpec& background, const EstimatorConfig& config, Rng rng) {
  if (static_cast<Index>(feature_mask.size()) != target_sample.size())
    throw ShapeError("axs: drift mask length does not match sample dimension");
  Vector probs = model.predict_one(target_sample);
  Index anchor_class = 0;
  probs.maxCoeff(&anchor_class);

  Attribution att = explain_prediction(model, target_sample, static_cast<int>(anchor_class),
                                       grouping, background, config, rng.stream("axs"));

  std::vector<bool> group_mask(static_cast<std::size_t>(grouping.groups()), false);
  for (Index f = 0; f < target_sample.size(); ++f)
    if (feature_mask[static_cast<std::size_t>(f)])
      group_mask[static_cast<std::size_t>(grouping.group_of[static_cast<std::size_t>(f)])] = true;
  for (int gid = 0; gid < grouping.groups(); ++gid)
    if (!group_mask[static_cast<std::size_t>(gid)]) att.values(gid) = 0;

  att.method = "axs";
  att.player_kind = grouping.is_identity() ? "features" : "groups";
  return att;
}

}  // namespace shiftlens
