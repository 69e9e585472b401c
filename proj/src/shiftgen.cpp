#include "shiftlens/shiftgen.hpp"

#include <algorithm>
#include <cmath>

#include "shiftlens/rng.hpp"

namespace shiftlens {

namespace {

void check_subset(const std::vector<Index>& subset, Index d) {
  if (subset.empty()) throw DomainError("corruption needs a non-empty feature subset");
  for (Index f : subset)
    if (f < 0 || f >= d) throw DomainError("feature subset index " + std::to_string(f) + " out of range");
}

Vector column_means(const Matrix& m) {
  return m.colwise().mean().transpose();
}

}  // namespace

Dataset make_blobs(Index n, Index d, int classes, double separation, double sigma,
                   std::uint64_t seed) {
  if (classes < 2) throw DomainError("blobs need at least two classes");
  if (n < classes) throw DomainError("blobs need at least one sample per class");
  if (d < 1) throw DomainError("blobs need at least one feature");
  if (separation <= 0 || sigma < 0) throw DomainError("blobs need separation > 0 and sigma >= 0");

  // Class means on an integer lattice (mixed-radix digits of the class id),
  // scaled so neighboring lattice points are `separation * sigma` apart.
  double scale = separation * (sigma > 0 ? sigma : 1.0);
  Index radix = 1;
  while (std::pow(static_cast<double>(radix), static_cast<double>(d)) < static_cast<double>(classes))
    ++radix;
  Matrix means = Matrix::Zero(classes, d);
  for (int c = 0; c < classes; ++c) {
    Index rest = c;
    for (Index j = 0; j < d && rest > 0; ++j) {
      means(c, j) = static_cast<double>(rest % radix) * scale;
      rest /= radix;
    }
  }

  Rng noise = Rng(seed).stream("blobs.noise");
  Dataset data;
  data.features.resize(n, d);
  data.labels.emplace(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    int c = static_cast<int>(i % classes);
    (*data.labels)[static_cast<std::size_t>(i)] = c;
    for (Index j = 0; j < d; ++j) data.features(i, j) = means(c, j) + sigma * noise.normal();
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng(seed).stream("blobs.shuffle").shuffle(order);
  return data.select_rows(order);
}

CorruptionSpec CorruptionSpec::brightness_shift(double b) {
  CorruptionSpec s;
  s.kind = Kind::kBrightness;
  s.brightness = b;
  return s;
}

CorruptionSpec CorruptionSpec::contrast_shift(double gamma, std::optional<Vector> midpoint) {
  CorruptionSpec s;
  s.kind = Kind::kContrast;
  s.gamma = gamma;
  s.contrast_midpoint = std::move(midpoint);
  return s;
}

CorruptionSpec CorruptionSpec::gaussian_shift(double sigma) {
  CorruptionSpec s;
  s.kind = Kind::kGaussianNoise;
  s.noise_sigma = sigma;
  return s;
}

CorruptionSpec CorruptionSpec::impulse_shift(double rate, double low, double high) {
  CorruptionSpec s;
  s.kind = Kind::kImpulse;
  s.impulse_rate = rate;
  s.impulse_low = low;
  s.impulse_high = high;
  return s;
}

CorruptionSpec CorruptionSpec::missing_shift(double rate) {
  CorruptionSpec s;
  s.kind = Kind::kMissing;
  s.missing_rate = rate;
  return s;
}

std::string corruption_kind_name(CorruptionSpec::Kind kind) {
  switch (kind) {
    case CorruptionSpec::Kind::kBrightness: return "brightness";
    case CorruptionSpec::Kind::kContrast: return "contrast";
    case CorruptionSpec::Kind::kGaussianNoise: return "gaussian";
    case CorruptionSpec::Kind::kImpulse: return "impulse";
    case CorruptionSpec::Kind::kMissing: return "missing";
  }
  throw DomainError("unknown corruption kind");
}

CorruptionSpec::Kind parse_corruption_kind(const std::string& name) {
  if (name == "brightness") return CorruptionSpec::Kind::kBrightness;
  if (name == "contrast") return CorruptionSpec::Kind::kContrast;
  if (name == "gaussian") return CorruptionSpec::Kind::kGaussianNoise;
  if (name == "impulse") return CorruptionSpec::Kind::kImpulse;
  if (name == "missing") return CorruptionSpec::Kind::kMissing;
  throw DomainError("unknown corruption kind: " + name);
}

ShiftScenario apply_corruption(const Dataset& data, const CorruptionSpec& spec,
                               const std::vector<Index>& feature_subset, std::uint64_t seed,
                               double train_fraction) {
  data.validate();
  if (!data.labeled()) throw DomainError("corruption scenarios need a labeled dataset");
  if (data.missing.any()) throw DomainError("corruption input must be fully observed");
  check_subset(feature_subset, data.dims());
  if (train_fraction < 0 || train_fraction > 1) throw DomainError("train fraction must be in [0, 1]");

  ShiftScenario scenario;
  scenario.source = data;
  scenario.target = data;
  scenario.true_pre_shift = data.features;
  scenario.pre_shift_labels = *data.labels;
  scenario.seed = seed;
  scenario.kind = corruption_kind_name(spec.kind);
  scenario.epsilon_label_preserving = ShiftScenario::LabelFlag::kExactZero;
  scenario.train_count = static_cast<Index>(std::llround(train_fraction * static_cast<double>(data.rows())));

  nlohmann::ordered_json params;
  params["features"] = feature_subset;

  Matrix& x = scenario.target.features;
  switch (spec.kind) {
    case CorruptionSpec::Kind::kBrightness: {
      params["b"] = spec.brightness;
      for (Index f : feature_subset) x.col(f).array() += spec.brightness;
      break;
    }
    case CorruptionSpec::Kind::kContrast: {
      if (!std::isfinite(spec.gamma)) throw DomainError("contrast gamma must be finite");
      Vector mid = spec.contrast_midpoint ? *spec.contrast_midpoint : column_means(data.features);
      if (mid.size() != data.dims()) throw DomainError("contrast midpoint has wrong length");
      params["gamma"] = spec.gamma;
      for (Index f : feature_subset)
        x.col(f) = (mid(f) + spec.gamma * (x.col(f).array() - mid(f))).matrix();
      break;
    }
    case CorruptionSpec::Kind::kGaussianNoise: {
      if (spec.noise_sigma < 0) throw DomainError("gaussian corruption needs sigma >= 0");
      params["sigma_c"] = spec.noise_sigma;
      Rng rng = Rng(seed).stream("corrupt.gaussian");
      for (Index i = 0; i < x.rows(); ++i)
        for (Index f : feature_subset) x(i, f) += spec.noise_sigma * rng.normal();
      break;
    }
    case CorruptionSpec::Kind::kImpulse: {
      if (spec.impulse_rate < 0 || spec.impulse_rate > 1)
        throw DomainError("impulse rate must be in [0, 1]");
      params["p"] = spec.impulse_rate;
      params["low"] = spec.impulse_low;
      params["high"] = spec.impulse_high;
      Rng rng = Rng(seed).stream("corrupt.impulse");
      for (Index i = 0; i < x.rows(); ++i)
        for (Index f : feature_subset) {
          double hit = rng.uniform();
          double pick = rng.uniform();
          if (hit < spec.impulse_rate) x(i, f) = pick < 0.5 ? spec.impulse_low : spec.impulse_high;
        }
      break;
    }
    case CorruptionSpec::Kind::kMissing: {
      if (spec.missing_rate < 0 || spec.missing_rate > 1)
        throw DomainError("missing rate must be in [0, 1]");
      params["q"] = spec.missing_rate;
      params["columns"] = feature_subset;
      Rng rng = Rng(seed).stream("corrupt.missing");
      scenario.target.missing.mask = BoolMatrix::Constant(x.rows(), x.cols(), false);
      for (Index i = 0; i < x.rows(); ++i)
        for (Index f : feature_subset)
          if (rng.uniform() < spec.missing_rate) {
            scenario.target.missing.mask(i, f) = true;
            x(i, f) = std::numeric_limits<double>::quiet_NaN();
          }
      break;
    }
  }
  scenario.parameters = std::move(params);
  scenario.validate();
  return scenario;
}

MeanImputer MeanImputer::fit(const Dataset& train) {
  if (train.rows() < 1) throw DomainError("imputer needs at least one training row");
  MeanImputer imp;
  imp.means_.resize(train.dims());
  for (Index f = 0; f < train.dims(); ++f) {
    double total = 0;
    Index count = 0;
    for (Index i = 0; i < train.rows(); ++i) {
      if (train.missing.mask.size() != 0 && train.missing.mask(i, f)) continue;
      total += train.features(i, f);
      ++count;
    }
    if (count == 0)
      throw DomainError("imputer: column " + std::to_string(f) + " has no observed training values");
    imp.means_(f) = total / static_cast<double>(count);
  }
  return imp;
}

Dataset MeanImputer::impute(const Dataset& data) const {
  if (data.dims() != means_.size()) throw ShapeError("imputer fitted on a different feature count");
  Dataset out = data;
  if (out.missing.mask.size() == 0) return out;
  for (Index i = 0; i < out.rows(); ++i)
    for (Index f = 0; f < out.dims(); ++f)
      if (out.missing.mask(i, f)) out.features(i, f) = means_(f);
  out.missing.mask = BoolMatrix::Constant(out.rows(), out.dims(), false);
  return out;
}

GroupedData make_group_signal_data(Index n, Index d, const std::vector<Index>& band, double delta,
                                   std::uint64_t seed) {
  if (n < 4) throw DomainError("group signal data needs at least four samples");
  if (d < 1) throw DomainError("group signal data needs at least one feature");
  check_subset(band, d);

  Rng root(seed);
  Rng xs = root.stream("groupsig.x");
  Rng ws = root.stream("groupsig.w");
  Rng gs = root.stream("groupsig.group");

  Vector w(d);
  for (Index j = 0; j < d; ++j) w(j) = ws.normal();

  GroupedData out;
  out.band = band;
  out.delta = delta;
  out.pre_shift_features.resize(n, d);
  out.group.resize(static_cast<std::size_t>(n));
  out.data.labels.emplace(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) out.pre_shift_features(i, j) = xs.normal();
    out.group[static_cast<std::size_t>(i)] = static_cast<int>(gs.below(2));
    double score = w.dot(out.pre_shift_features.row(i).transpose());
    (*out.data.labels)[static_cast<std::size_t>(i)] = score > 0 ? 1 : 0;
  }
  out.data.features = out.pre_shift_features;
  for (Index i = 0; i < n; ++i)
    if (out.group[static_cast<std::size_t>(i)] == 1)
      for (Index f : band) out.data.features(i, f) += delta;
  return out;
}

SelectionBiasSplit selection_bias_split(const GroupedData& pool, double rho, std::uint64_t seed) {
  if (rho < 0 || rho > 1) throw DomainError("target mix rho must be in [0, 1]");
  Index n = pool.data.rows();
  if (static_cast<Index>(pool.group.size()) != n)
    throw ShapeError("group attribute does not match pool rows");

  std::vector<Index> group_a;
  std::vector<Index> group_b;
  for (Index i = 0; i < n; ++i)
    (pool.group[static_cast<std::size_t>(i)] == 0 ? group_a : group_b).push_back(i);
  if (group_a.empty() || group_b.empty())
    throw DomainError("selection bias split needs both group values present");

  std::array<double, 3> fractions = {0.0, 0.5, rho};

  // Largest target size m (= source size) so that source and the three
  // targets are pairwise disjoint.
  auto fits = [&](Index m) {
    Index need_a = m;
    Index need_b = 0;
    for (double f : fractions) {
      Index b = static_cast<Index>(std::llround(f * static_cast<double>(m)));
      need_b += b;
      need_a += m - b;
    }
    return need_a <= static_cast<Index>(group_a.size()) && need_b <= static_cast<Index>(group_b.size());
  };
  Index m = 0;
  for (Index cand = 1; cand <= n; ++cand)
    if (fits(cand)) m = cand;
  if (m < 2) throw DomainError("insufficient samples per group for a selection bias split");

  Rng shuffler = Rng(seed).stream("selbias.shuffle");
  std::vector<Index> a = group_a;
  std::vector<Index> b = group_b;
  shuffler.shuffle(a);
  shuffler.shuffle(b);

  std::size_t a_at = 0;
  std::size_t b_at = 0;
  auto take = [](std::vector<Index>& from, std::size_t& at, Index count) {
    std::vector<Index> out(from.begin() + static_cast<long>(at),
                           from.begin() + static_cast<long>(at) + count);
    at += static_cast<std::size_t>(count);
    return out;
  };

  SelectionBiasSplit split;
  split.group1_fractions = fractions;

  std::vector<Index> source_rows = take(a, a_at, m);
  split.source = pool.data.select_rows(source_rows);

  for (std::size_t t = 0; t < 3; ++t) {
    Index b_count = static_cast<Index>(std::llround(fractions[t] * static_cast<double>(m)));
    std::vector<Index> rows = take(a, a_at, m - b_count);
    std::vector<Index> b_rows = take(b, b_at, b_count);
    rows.insert(rows.end(), b_rows.begin(), b_rows.end());
    shuffler.shuffle(rows);

    ShiftScenario& scenario = split.scenarios[t];
    scenario.source = split.source;
    scenario.target = pool.data.select_rows(rows);
    scenario.true_pre_shift.resize(static_cast<Index>(rows.size()), pool.data.dims());
    for (std::size_t k = 0; k < rows.size(); ++k)
      scenario.true_pre_shift.row(static_cast<Index>(k)) = pool.pre_shift_features.row(rows[k]);
    scenario.pre_shift_labels = *scenario.target.labels;
    scenario.kind = "selection_bias";
    scenario.parameters["group1_fraction"] = fractions[t];
    scenario.parameters["delta"] = pool.delta;
    scenario.parameters["band"] = pool.band;
    scenario.seed = seed;
    scenario.epsilon_label_preserving = ShiftScenario::LabelFlag::kExactZero;
    scenario.train_count = 0;
    scenario.validate();
  }
  return split;
}

}  // namespace shiftlens
