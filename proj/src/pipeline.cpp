#include "shiftlens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "shiftlens/shiftgen.hpp"

namespace shiftlens {

AttributionRun run_shift_attribution(const PredictModel& model, const Dataset& source,
                                     const Dataset& target, const FeatureGrouping& grouping,
                                     const AttributionOptions& options, const Rng& root) {
  if (source.rows() != target.rows())
    throw ShapeError("shift attribution expects equal sample counts; align first");
  if (source.dims() != target.dims()) throw ShapeError("source and target dimensions differ");
  if (target.missing.any() || source.missing.any())
    throw DomainError("shift attribution expects fully observed features; impute first");

  const std::string& method = options.method;
  if (method != "xpe" && method != "xppe" && method != "lad" && method != "axs" &&
      method != "random")
    throw DomainError("unknown attribution method: " + method);

  AttributionRun run;

  CostMatrix costs = cost_matrix(source, target);
  Coupling plan = solve_coupling(costs);
  run.objective = coupling_objective(costs, plan);
  run.map = coupling_to_maps(plan);
  if (source.labeled()) run.transfer = transfer_labels(run.map, source);
  run.drift = drift_mask(source, target, options.alpha);

  Index n = target.rows();
  int groups = grouping.groups();

  if (method == "xpe" || method == "xppe") {
    run.attributions = attribute_dataset(method, model, target, run.map,
                                         source.labeled() ? &run.transfer : nullptr, source,
                                         grouping, options.estimator, options.loss, root,
                                         options.threads);
    return run;
  }

  BackgroundSpec background =
      options.background == BackgroundSpec::Kind::kZeros
          ? BackgroundSpec::zeros()
          : BackgroundSpec::marginal_from(source, options.background_count,
                                          root.stream("background"));

  run.attributions.resize(static_cast<std::size_t>(n));
  if (method == "random") {
    for (Index j = 0; j < n; ++j) {
      Rng rng = root.stream("random_attr", static_cast<std::uint64_t>(j));
      Attribution att;
      att.values = Vector(groups);
      for (int i = 0; i < groups; ++i) att.values(i) = rng.uniform();
      att.method = "random";
      att.player_kind = grouping.is_identity() ? "features" : "groups";
      run.attributions[static_cast<std::size_t>(j)] = std::move(att);
    }
    return run;
  }

  parallel_for(n, options.threads, [&](Index j) {
    Rng rng = root.stream("baseline_attr", static_cast<std::uint64_t>(j));
    Vector x_t = target.row(j);
    if (method == "lad") {
      Vector x_s = source.row(run.map.inverse[static_cast<std::size_t>(j)]);
      run.attributions[static_cast<std::size_t>(j)] =
          lad(model, x_t, x_s, grouping, background, options.estimator, rng);
    } else {
      run.attributions[static_cast<std::size_t>(j)] =
          axs(model, x_t, run.drift.mask, grouping, background, options.estimator, rng);
    }
  });
  return run;
}

MonitorResult run_monitor(const PredictModel& model, const Dataset& source, const Dataset& target,
                          const MonitorOptions& options) {
  source.validate();
  target.validate();
  if (!source.labeled()) throw DomainError("monitoring requires a labeled source dataset");
  if (source.dims() != target.dims())
    throw ShapeError("source has " + std::to_string(source.dims()) + " features, target has " +
                     std::to_string(target.dims()));
  if (options.attribution.method == "xpe" && !source.labeled())
    throw DomainError("xpe requires a labeled source");

  Rng root(options.seed);
  MonitorResult result;

  Dataset src = source;
  if (src.missing.any()) {
    src = MeanImputer::fit(src).impute(src);
    result.warnings.push_back("source contained missing values; imputed with source feature means");
  }
  Dataset tgt = target;
  if (tgt.missing.any()) {
    tgt = MeanImputer::fit(src).impute(tgt);
    result.warnings.push_back("target contained missing values; imputed with source feature means");
  }

  SampleAlignment alignment = align_sample_counts(src.rows(), tgt.rows(), root.stream("subsample"));
  if (alignment.source_subsampled)
    result.warnings.push_back("source subsampled to " + std::to_string(alignment.source_rows.size()) +
                              " rows to match the target count");
  if (alignment.target_subsampled)
    result.warnings.push_back("target subsampled to " + std::to_string(alignment.target_rows.size()) +
                              " rows to match the source count");
  result.source_rows = alignment.source_rows;
  result.target_rows = alignment.target_rows;

  Dataset src_aligned = src.select_rows(alignment.source_rows);
  Dataset tgt_aligned = tgt.select_rows(alignment.target_rows);

  FeatureGrouping grouping = options.grouping.dims() == 0
                                 ? FeatureGrouping::identity(src.dims())
                                 : options.grouping;
  if (grouping.dims() != src.dims()) throw ShapeError("grouping does not match the feature count");

  // Transport, optionally in embedding space.
  std::optional<CostMatrix> embedded_costs;
  if (options.source_embedding || options.target_embedding) {
    if (!options.source_embedding || !options.target_embedding)
      throw DomainError("embedding transport needs both source and target embeddings");
    if (options.source_embedding->rows() != src.rows() ||
        options.target_embedding->rows() != tgt.rows())
      throw ShapeError("embedding row counts must match the datasets");
    Matrix se(src_aligned.rows(), options.source_embedding->cols());
    Matrix te(tgt_aligned.rows(), options.target_embedding->cols());
    for (Index i = 0; i < se.rows(); ++i)
      se.row(i) = options.source_embedding->row(alignment.source_rows[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < te.rows(); ++j)
      te.row(j) = options.target_embedding->row(alignment.target_rows[static_cast<std::size_t>(j)]);
    embedded_costs = cost_matrix(se, te, true);
  }

  AttributionOptions attribution = options.attribution;

  if (!embedded_costs) {
    AttributionRun run =
        run_shift_attribution(model, src_aligned, tgt_aligned, grouping, attribution, root);
    result.map = run.map;
    result.transfer = run.transfer;
    result.objective = run.objective;
    result.drift = run.drift;
    result.attributions = std::move(run.attributions);
    result.cost_kind = "squared_euclidean";
  } else {
    // Embedding-space coupling, feature-space attribution.
    Coupling plan = solve_coupling(*embedded_costs);
    result.objective = coupling_objective(*embedded_costs, plan);
    result.map = coupling_to_maps(plan);
    result.transfer = transfer_labels(result.map, src_aligned);
    result.drift = drift_mask(src_aligned, tgt_aligned, attribution.alpha);
    result.cost_kind = "squared_euclidean";
    if (attribution.method == "xpe" || attribution.method == "xppe") {
      result.attributions =
          attribute_dataset(attribution.method, model, tgt_aligned, result.map, &result.transfer,
                            src_aligned, grouping, attribution.estimator, attribution.loss, root,
                            attribution.threads);
    } else {
      throw DomainError("embedding transport currently supports the xpe and xppe methods");
    }
  }

  result.estimated_target_loss =
      estimate_target_performance(model, tgt_aligned, result.transfer, attribution.loss);
  result.source_loss = mean_loss(model, src.features, *src.labels, attribution.loss);
  if (tgt_aligned.labeled())
    result.label_accuracy = label_transport_accuracy(result.transfer, *tgt_aligned.labels);
  return result;
}

nlohmann::ordered_json build_report(const MonitorResult& result, std::uint64_t seed,
                                    const nlohmann::ordered_json& config) {
  nlohmann::ordered_json doc;
  doc["version"] = "1";
  doc["seed"] = seed;
  doc["config"] = config;

  nlohmann::ordered_json transport;
  transport["objective"] = result.objective;
  nlohmann::ordered_json matched = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < result.transfer.matched_source_index.size(); ++j)
    matched.push_back(result.source_rows[static_cast<std::size_t>(
        result.transfer.matched_source_index[j])]);
  transport["matched_source_index"] = std::move(matched);
  doc["transport"] = std::move(transport);

  nlohmann::ordered_json performance;
  performance["estimated_target_loss"] = result.estimated_target_loss;
  performance["source_loss"] = result.source_loss;
  if (result.label_accuracy) performance["label_transport_accuracy"] = *result.label_accuracy;
  doc["performance"] = std::move(performance);

  nlohmann::ordered_json drift;
  nlohmann::ordered_json stat = nlohmann::ordered_json::array();
  nlohmann::ordered_json pval = nlohmann::ordered_json::array();
  nlohmann::ordered_json mask = nlohmann::ordered_json::array();
  for (Index f = 0; f < result.drift.statistic.size(); ++f) {
    stat.push_back(result.drift.statistic(f));
    pval.push_back(result.drift.p_value(f));
    mask.push_back(static_cast<bool>(result.drift.mask[static_cast<std::size_t>(f)]));
  }
  drift["statistic"] = std::move(stat);
  drift["p_value"] = std::move(pval);
  drift["mask"] = std::move(mask);
  doc["drift"] = std::move(drift);

  nlohmann::ordered_json instances = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < result.attributions.size(); ++j) {
    const Attribution& att = result.attributions[j];
    nlohmann::ordered_json inst;
    inst["index"] = result.target_rows[j];
    if (j < result.transfer.estimated_labels.size())
      inst["estimated_label"] = result.transfer.estimated_labels[j];
    else
      inst["estimated_label"] = nullptr;
    nlohmann::ordered_json attribution;
    attribution["method"] = att.method;
    attribution["players"] = att.player_kind;
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (Index i = 0; i < att.values.size(); ++i) values.push_back(att.values(i));
    attribution["values"] = std::move(values);
    attribution["v_empty"] = att.v_empty;
    attribution["v_full"] = att.v_full;
    inst["attribution"] = std::move(attribution);
    instances.push_back(std::move(inst));
  }
  doc["instances"] = std::move(instances);

  doc["metrics"] = nlohmann::ordered_json::object();
  doc["warnings"] = result.warnings;
  return doc;
}

void write_attribution_pgm(const Attribution& attribution, Index height, Index width,
                           const std::filesystem::path& path) {
  if (height * width != attribution.values.size())
    throw ShapeError("heatmap grid " + std::to_string(height) + "x" + std::to_string(width) +
                     " does not match " + std::to_string(attribution.values.size()) + " players");
  double peak = attribution.values.cwiseAbs().maxCoeff();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write heatmap: " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (Index i = 0; i < attribution.values.size(); ++i) {
    double scaled = peak > 0 ? attribution.values(i) / peak : 0.0;
    int gray = static_cast<int>(std::lround(127.5 * (1.0 + scaled)));
    gray = std::clamp(gray, 0, 255);
    out.put(static_cast<char>(gray));
  }
}

}  // namespace shiftlens
