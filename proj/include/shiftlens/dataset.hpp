#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shiftlens/common.hpp"

namespace shiftlens {

// Boolean missing-value mask; true marks an absent entry. Missing entries are
// stored as NaN in the owning feature matrix so accidental use is loud.
struct MissingMask {
  BoolMatrix mask;

  bool any() const { return mask.size() > 0 && mask.array().any(); }
  Index count() const { return mask.size() == 0 ? 0 : mask.cast<Index>().sum(); }
};

// An empirical sample: dense features, optional integer class labels.
// Feature order is file order; nothing reorders columns implicitly.
struct Dataset {
  Matrix features;  // n x d
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<std::string>> feature_names;
  MissingMask missing;  // same shape as features; all-false when fully observed

  Index rows() const { return features.rows(); }
  Index dims() const { return features.cols(); }
  bool labeled() const { return labels.has_value(); }

  // Highest label + 1; 0 when unlabeled.
  int class_count() const;

  Vector row(Index i) const { return features.row(i).transpose(); }

  // Throws if shapes disagree, labels are negative, or a non-missing entry
  // is not finite.
  void validate() const;

  Dataset select_rows(const std::vector<Index>& idx) const;
};

// CSV contract: UTF-8, first row header, "," separator, "." decimal point,
// no quoting. Empty cell or the literal "NaN" marks a missing value.
//
// `label_column` (default "label") names the column parsed as integer labels;
// it must exist when requested. Pass std::nullopt to keep every column as a
// feature.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::string>& label_column = std::string("label"));

// Like load_dataset but tolerates a missing label column: uses "label" when
// the header has it, otherwise loads all columns as features.
Dataset load_dataset_auto(const std::filesystem::path& path);

// Writes the CSV form. Feature values are serialized with 17 significant
// digits so a reload reproduces them bit-exactly; missing entries become
// empty cells.
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Partition of the feature axis into players for attribution.
struct FeatureGrouping {
  std::vector<int> group_of;  // size d, values in [0, group_count)
  int group_count = 0;

  Index dims() const { return static_cast<Index>(group_of.size()); }
  int groups() const { return group_count; }
  bool is_identity() const;

  // Feature indices per group id.
  std::vector<std::vector<Index>> members() const;

  static FeatureGrouping identity(Index d);
  // Blocks of `block_size` consecutive features; the last block may be short.
  static FeatureGrouping contiguous_blocks(Index d, Index block_size);
  // Validated: group ids must cover 0..max contiguously (surjective map).
  static FeatureGrouping explicit_map(std::vector<int> group_of);
};

}  // namespace shiftlens
