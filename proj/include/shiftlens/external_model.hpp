#pragma once

#include <mutex>
#include <string>
#include <unordered_map>

#include "shiftlens/common.hpp"
#include "shiftlens/model.hpp"

namespace shiftlens {

// Black-box model behind a batch prediction command. Protocol: the command
// reads CSV feature rows on stdin (no header, 17-significant-digit decimals)
// and writes one comma-separated probability row per input line on stdout.
// Rows must be simplex vectors (non-negative, sum within 1e-6 of 1).
// Predictions are cached per run, keyed by the serialized row.
class ExternalModel : public PredictModel {
 public:
  explicit ExternalModel(std::string command, Index input_dim);

  Index input_dim() const override { return input_dim_; }
  Index class_count() const override;  // known after the first call
  Matrix predict_batch(const Matrix& rows) const override;

 private:
  std::string command_;
  Index input_dim_ = 0;
  mutable Index classes_ = -1;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

}  // namespace shiftlens
