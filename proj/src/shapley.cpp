#include "shiftlens/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

namespace shiftlens {

CachedGame::CachedGame(int players, ValueOracle oracle)
    : players_(players), oracle_(std::move(oracle)) {
  if (players_ < 1) throw DomainError("a game needs at least one player");
}

double CachedGame::value(const Coalition& coalition) {
  return values({coalition})[0];
}

std::vector<double> CachedGame::values(const std::vector<Coalition>& coalitions) {
  std::vector<Coalition> misses;
  for (const Coalition& c : coalitions)
    if (!cache_.contains(c)) {
      cache_.emplace(c, 0.0);  // reserve slot so duplicates are evaluated once
      misses.push_back(c);
    }
  if (!misses.empty()) {
    std::vector<double> fresh = oracle_(misses);
    for (std::size_t k = 0; k < misses.size(); ++k) cache_[misses[k]] = fresh[k];
  }
  std::vector<double> out;
  out.reserve(coalitions.size());
  for (const Coalition& c : coalitions) out.push_back(cache_.at(c));
  return out;
}

Vector partial_shift(const Vector& target_sample, const Vector& source_sample,
                     const Coalition& coalition, const FeatureGrouping& grouping) {
  if (target_sample.size() != source_sample.size())
    throw ShapeError("partial shift: sample dimensions differ");
  if (grouping.dims() != target_sample.size())
    throw ShapeError("partial shift: grouping covers a different feature count");
  if (coalition.players() != grouping.groups())
    throw DomainError("partial shift: coalition is over a different player count");
  Vector out(target_sample.size());
  for (Index i = 0; i < out.size(); ++i) {
    int group = grouping.group_of[static_cast<std::size_t>(i)];
    out(i) = coalition.contains(group) ? target_sample(i) : source_sample(i);
  }
  return out;
}

void ValueFunctionSpec::validate() const {
  if (model == nullptr) throw DomainError("value function: model is required");
  Index d = target_sample.size();
  if (d < 1) throw DomainError("value function: target sample is empty");
  if (grouping.dims() != d) throw ShapeError("value function: grouping does not match sample dimension");
  auto need_counterpart = [&] {
    if (source_counterpart.size() != d)
      throw DomainError("value function: source counterpart missing or wrong size");
  };
  switch (kind) {
    case ValueKind::kBaseline:
      if (baseline.size() != d) throw DomainError("value function: baseline vector missing or wrong size");
      break;
    case ValueKind::kMarginal:
      if (background.rows() < 1 || background.cols() != d)
        throw DomainError("value function: background samples missing or wrong shape");
      break;
    case ValueKind::kTransportPrediction:
      need_counterpart();
      break;
    case ValueKind::kCouplingPrediction:
      if (coupling_sources.rows() < 1 || coupling_sources.cols() != d)
        throw DomainError("value function: coupling support rows missing or wrong shape");
      if (coupling_weights.size() != coupling_sources.rows())
        throw DomainError("value function: coupling weights do not match support rows");
      if (coupling_weights.minCoeff() < 0 || coupling_weights.sum() <= 0)
        throw DomainError("value function: coupling weights must be non-negative with positive mass");
      break;
    case ValueKind::kXpeLoss:
      need_counterpart();
      if (estimated_label < 0) throw DomainError("value function: estimated label is required for the loss kind");
      break;
    case ValueKind::kXppeEntropy:
      need_counterpart();
      break;
  }
  bool prediction_kind = kind == ValueKind::kBaseline || kind == ValueKind::kMarginal ||
                         kind == ValueKind::kTransportPrediction ||
                         kind == ValueKind::kCouplingPrediction;
  if (prediction_kind && output_class < 0)
    throw DomainError("value function: output class is required for prediction kinds");
}

namespace {

constexpr Index kPredictChunkRows = 16384;

// Evaluates a block of coalitions for one spec; rows are assembled per
// coalition (times one row per background/support sample where applicable)
// and pushed through the model in chunks.
std::vector<double> evaluate_block(const ValueFunctionSpec& spec,
                                   const std::vector<Coalition>& coalitions) {
  const Index d = spec.target_sample.size();

  Index rows_per = 1;
  const Matrix* replacements = nullptr;  // rows substituted outside the coalition
  Vector weights;
  switch (spec.kind) {
    case ValueKind::kMarginal:
      replacements = &spec.background;
      rows_per = spec.background.rows();
      weights = Vector::Constant(rows_per, 1.0 / static_cast<double>(rows_per));
      break;
    case ValueKind::kCouplingPrediction:
      replacements = &spec.coupling_sources;
      rows_per = spec.coupling_sources.rows();
      weights = spec.coupling_weights / spec.coupling_weights.sum();
      break;
    default:
      break;
  }

  std::vector<double> out(coalitions.size(), 0.0);
  std::size_t per_chunk = static_cast<std::size_t>(std::max<Index>(1, kPredictChunkRows / rows_per));

  for (std::size_t begin = 0; begin < coalitions.size(); begin += per_chunk) {
    std::size_t end = std::min(coalitions.size(), begin + per_chunk);
    Index chunk = static_cast<Index>(end - begin);
    Matrix rows(chunk * rows_per, d);
    for (Index k = 0; k < chunk; ++k) {
      const Coalition& coalition = coalitions[begin + static_cast<std::size_t>(k)];
      if (replacements != nullptr) {
        for (Index r = 0; r < rows_per; ++r)
          rows.row(k * rows_per + r) =
              partial_shift(spec.target_sample, replacements->row(r).transpose(), coalition,
                            spec.grouping)
                  .transpose();
      } else {
        const Vector& other =
            spec.kind == ValueKind::kBaseline ? spec.baseline : spec.source_counterpart;
        rows.row(k) = partial_shift(spec.target_sample, other, coalition, spec.grouping).transpose();
      }
    }
    Matrix probs = spec.model->predict_batch(rows);
    for (Index k = 0; k < chunk; ++k) {
      double value = 0;
      switch (spec.kind) {
        case ValueKind::kBaseline:
        case ValueKind::kTransportPrediction:
          value = probs(k, spec.output_class);
          break;
        case ValueKind::kMarginal:
        case ValueKind::kCouplingPrediction:
          for (Index r = 0; r < rows_per; ++r)
            value += weights(r) * probs(k * rows_per + r, spec.output_class);
          break;
        case ValueKind::kXpeLoss:
          value = loss_value(spec.loss_kind, probs.row(k).transpose(), spec.estimated_label);
          break;
        case ValueKind::kXppeEntropy:
          value = entropy(probs.row(k).transpose());
          break;
      }
      out[begin + static_cast<std::size_t>(k)] = value;
    }
  }
  return out;
}

std::vector<double> binomial_row(int n) {
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[0] = 1.0;
  for (int i = 1; i <= n; ++i)
    for (int j = i; j >= 1; --j) c[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j) - 1];
  return c;
}

Attribution uniform_split(int players, double v_empty, double v_full) {
  Attribution att;
  att.values = Vector::Constant(players, (v_full - v_empty) / static_cast<double>(players));
  att.v_empty = v_empty;
  att.v_full = v_full;
  att.degenerate = true;
  att.method = "kernel_shapley";
  att.player_kind = "features";
  return att;
}

// All subsets of {0..players-1} with exactly `size` members, lexicographic.
void for_each_subset(int players, int size, const std::function<void(const Coalition&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    Coalition c(players);
    for (int i : idx) c.add(i);
    fn(c);
    int pos = size - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == players - size + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < size; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j) - 1] + 1;
  }
}

}  // namespace

double evaluate_value(const ValueFunctionSpec& spec, const Coalition& coalition) {
  spec.validate();
  return evaluate_block(spec, {coalition})[0];
}

ValueOracle make_value_oracle(const ValueFunctionSpec& spec) {
  spec.validate();
  return [spec](const std::vector<Coalition>& coalitions) {
    return evaluate_block(spec, coalitions);
  };
}

Attribution exact_shapley(CachedGame& game) {
  int g = game.players();
  if (g > kExactShapleyCap)
    throw CapacityError("exact Shapley enumeration capped at " + std::to_string(kExactShapleyCap) +
                        " players (have " + std::to_string(g) + "); use the kernel estimator");

  std::uint64_t total = std::uint64_t{1} << g;
  std::vector<Coalition> all;
  all.reserve(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) all.push_back(Coalition::from_bits(mask, g));
  std::vector<double> v = game.values(all);

  // weight[s] = 1 / (C(g-1, s) * g) for a coalition of size s not containing i
  std::vector<double> choose = binomial_row(g - 1);
  std::vector<double> weight(static_cast<std::size_t>(g), 0.0);
  for (int s = 0; s < g; ++s)
    weight[static_cast<std::size_t>(s)] = 1.0 / (choose[static_cast<std::size_t>(s)] * static_cast<double>(g));

  Attribution att;
  att.values = Vector::Zero(g);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    int s = __builtin_popcountll(mask);
    double w = weight[static_cast<std::size_t>(s)];
    for (int i = 0; i < g; ++i) {
      if (mask >> i & 1) continue;
      att.values(i) += w * (v[mask | (std::uint64_t{1} << i)] - v[mask]);
    }
  }
  att.v_empty = v[0];
  att.v_full = v[total - 1];
  att.method = "exact_shapley";
  att.player_kind = "features";
  return att;
}

Attribution exact_shapley(const ValueFunctionSpec& spec) {
  CachedGame game(spec.grouping.groups(), make_value_oracle(spec));
  Attribution att = exact_shapley(game);
  att.player_kind = spec.grouping.is_identity() ? "features" : "groups";
  return att;
}

Attribution kernel_shapley(CachedGame& game, int budget, Rng rng) {
  int g = game.players();
  if (g < 2) throw DomainError("kernel estimator needs at least two players");
  if (budget < 2) throw DomainError("kernel estimator needs a budget of at least two coalitions");

  double v_empty = game.value(Coalition(g));
  double v_full = game.value(Coalition::full(g));
  double delta = v_full - v_empty;

  // Size groups: s pairs with g-s; the middle size of an even g stands alone.
  int groups = g / 2;
  std::vector<double> group_weight(static_cast<std::size_t>(groups) + 1, 0.0);
  double mass = 0;
  for (int s = 1; s <= groups; ++s) {
    double w = static_cast<double>(g - 1) / (static_cast<double>(s) * static_cast<double>(g - s));
    if (2 * s != g) w *= 2.0;  // covers the complementary size level
    group_weight[static_cast<std::size_t>(s)] = w;
    mass += w;
  }
  for (int s = 1; s <= groups; ++s) group_weight[static_cast<std::size_t>(s)] /= mass;

  std::vector<double> choose = binomial_row(g);

  std::map<Coalition, double> weights;
  long budget_left = budget;
  double remaining_mass = 1.0;
  int first_sampled = 1;

  for (int s = 1; s <= groups; ++s) {
    double level_rows = choose[static_cast<std::size_t>(s)] * (2 * s != g ? 2.0 : 1.0);
    double expected_draws =
        static_cast<double>(budget_left) * group_weight[static_cast<std::size_t>(s)] / remaining_mass;
    if (level_rows > static_cast<double>(budget_left) || expected_draws + 1e-9 < level_rows) break;
    double per_coalition = group_weight[static_cast<std::size_t>(s)] / level_rows;
    for_each_subset(g, s, [&](const Coalition& c) {
      weights[c] += per_coalition;
      if (2 * s != g) weights[c.complemented()] += per_coalition;
    });
    budget_left -= static_cast<long>(level_rows);
    remaining_mass -= group_weight[static_cast<std::size_t>(s)];
    first_sampled = s + 1;
  }

  if (budget_left > 0 && first_sampled <= groups && remaining_mass > 1e-15) {
    std::vector<double> cdf;
    std::vector<int> sizes;
    double acc = 0;
    for (int s = first_sampled; s <= groups; ++s) {
      acc += group_weight[static_cast<std::size_t>(s)] / remaining_mass;
      cdf.push_back(acc);
      sizes.push_back(s);
    }
    std::map<Coalition, long> counts;
    long total_draws = 0;
    while (budget_left > 0) {
      double u = rng.uniform();
      int s = sizes.back();
      for (std::size_t k = 0; k < cdf.size(); ++k)
        if (u < cdf[k]) {
          s = sizes[k];
          break;
        }
      Coalition c(g);
      for (Index i : rng.sample_without_replacement(g, s)) c.add(static_cast<int>(i));
      ++counts[c];
      ++total_draws;
      --budget_left;
      if (budget_left > 0) {
        ++counts[c.complemented()];
        ++total_draws;
        --budget_left;
      }
    }
    for (const auto& [coalition, count] : counts)
      weights[coalition] +=
          remaining_mass * static_cast<double>(count) / static_cast<double>(total_draws);
  }

  std::vector<Coalition> sampled;
  sampled.reserve(weights.size());
  for (const auto& [coalition, w] : weights) sampled.push_back(coalition);
  std::vector<double> values = game.values(sampled);

  double lo = std::min(v_empty, v_full);
  double hi = std::max(v_empty, v_full);
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-12) {
    Attribution att = uniform_split(g, v_empty, v_full);
    return att;
  }

  // Constrained WLS: eliminate the last player via the efficiency constraint.
  Index unknowns = g - 1;
  Matrix a = Matrix::Zero(unknowns, unknowns);
  Vector b = Vector::Zero(unknowns);
  Vector x(unknowns);
  std::size_t row = 0;
  for (const auto& [coalition, w] : weights) {
    double zg = coalition.contains(g - 1) ? 1.0 : 0.0;
    for (Index i = 0; i < unknowns; ++i)
      x(i) = (coalition.contains(static_cast<int>(i)) ? 1.0 : 0.0) - zg;
    double y = values[row] - v_empty - zg * delta;
    a.noalias() += w * x * x.transpose();
    b.noalias() += w * x * y;
    ++row;
  }

  Eigen::LDLT<Eigen::MatrixXd> solver(Eigen::MatrixXd(a));
  Vector head = solver.solve(b);
  double residual = (a * head - b).cwiseAbs().maxCoeff();
  double scale = std::max({1.0, b.cwiseAbs().maxCoeff(), a.cwiseAbs().maxCoeff()});
  if (!head.allFinite() || residual > 1e-6 * scale) {
    return uniform_split(g, v_empty, v_full);
  }

  Attribution att;
  att.values = Vector(g);
  att.values.head(unknowns) = head;
  att.values(g - 1) = delta - head.sum();
  att.v_empty = v_empty;
  att.v_full = v_full;
  att.method = "kernel_shapley";
  att.player_kind = "features";
  return att;
}

Attribution kernel_shapley(const ValueFunctionSpec& spec, int budget, Rng rng) {
  CachedGame game(spec.grouping.groups(), make_value_oracle(spec));
  Attribution att = kernel_shapley(game, budget, rng);
  att.player_kind = spec.grouping.is_identity() ? "features" : "groups";
  return att;
}

std::vector<Attribution> attribute_dataset(const std::string& method, const PredictModel& model,
                                           const Dataset& target, const TransportMap& map,
                                           const LabelTransfer* transfer, const Dataset& source,
                                           const FeatureGrouping& grouping,
                                           const EstimatorConfig& config, LossKind loss,
                                           const Rng& root, int threads) {
  if (method != "xpe" && method != "xppe")
    throw DomainError("attribute_dataset expects method \"xpe\" or \"xppe\", got \"" + method + "\"");
  if (method == "xpe" && transfer == nullptr)
    throw DomainError("xpe attribution requires transferred labels");
  if (static_cast<Index>(map.inverse.size()) != target.rows())
    throw ShapeError("transport map does not cover the target rows");
  if (grouping.dims() != target.dims()) throw ShapeError("grouping does not match target dimension");
  if (source.dims() != target.dims()) throw ShapeError("source and target dimensions differ");

  int g = grouping.groups();
  bool use_exact = g <= std::min(config.exact_cap, kExactShapleyCap);

  std::vector<Attribution> out(static_cast<std::size_t>(target.rows()));
  parallel_for(target.rows(), threads, [&](Index j) {
    ValueFunctionSpec spec;
    spec.kind = method == "xpe" ? ValueKind::kXpeLoss : ValueKind::kXppeEntropy;
    spec.model = &model;
    spec.target_sample = target.row(j);
    spec.source_counterpart = source.row(map.inverse[static_cast<std::size_t>(j)]);
    if (method == "xpe")
      spec.estimated_label = transfer->estimated_labels[static_cast<std::size_t>(j)];
    spec.loss_kind = loss;
    spec.grouping = grouping;
    Attribution att =
        use_exact ? exact_shapley(spec)
                  : kernel_shapley(spec, config.budget,
                                   root.stream("shapley.kernel", static_cast<std::uint64_t>(j)));
    att.method = method;
    out[static_cast<std::size_t>(j)] = std::move(att);
  });
  return out;
}

void export_attributions_csv(const std::vector<Attribution>& attributions,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write attribution file: " + path.string());
  out << "instance_index,player_id,value,method,v_empty,v_full\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t j = 0; j < attributions.size(); ++j) {
    const Attribution& att = attributions[j];
    for (Index i = 0; i < att.values.size(); ++i)
      out << j << ',' << i << ',' << fmt(att.values(i)) << ',' << att.method << ','
          << fmt(att.v_empty) << ',' << fmt(att.v_full) << '\n';
  }
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  Index workers = std::min<Index>(threads, count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (Index i = t; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace shiftlens
