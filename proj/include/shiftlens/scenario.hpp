#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"

namespace shiftlens {

// A synthetic shift with ground truth: target row j is the shifted version of
// true_pre_shift row j, whose label is pre_shift_labels[j]. For corruption
// scenarios source is row-aligned with target (n_s == n_t, pre-shift rows are
// the source rows); selection-bias scenarios draw target rows from a pool, so
// only the per-row alignment above holds.
struct ShiftScenario {
  Dataset source;  // labeled sample from the source domain (training pool)
  Dataset target;  // ground-truth labels kept for evaluation
  Matrix true_pre_shift;             // n_t x d
  std::vector<int> pre_shift_labels; // y_s per target row

  std::string kind;             // corruption or shift family name
  nlohmann::ordered_json parameters;
  std::uint64_t seed = 0;

  enum class LabelFlag { kExactZero, kUnknown };
  LabelFlag epsilon_label_preserving = LabelFlag::kUnknown;

  // First train_count rows of the aligned source/target matrices form the
  // training split; the rest is the test split.
  Index train_count = 0;

  Index target_rows() const { return target.rows(); }
  void validate() const;
};

// Directory layout: source.csv, target.csv, pre_shift.csv, scenario.json.
void save_scenario(const ShiftScenario& scenario, const std::filesystem::path& dir);
ShiftScenario load_scenario(const std::filesystem::path& dir);

}  // namespace shiftlens
