#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"

namespace shiftlens {

enum class LossKind { kCrossEntropy, kZeroOne };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);

// Probabilities are clamped to [1e-12, 1] before any logarithm.
constexpr double kProbFloor = 1e-12;

// loss(p, y): cross-entropy -ln p[y] (clamped) or 0/1 error on argmax.
double loss_value(LossKind kind, const Vector& probabilities, int label);

// Shannon entropy in nats; 0 * ln 0 == 0.
double entropy(const Vector& probabilities);

// Prediction contract every attribution consumer depends on: batched rows in,
// one probability simplex per row out.
class PredictModel {
 public:
  virtual ~PredictModel() = default;

  virtual Index input_dim() const = 0;
  virtual Index class_count() const = 0;
  virtual Matrix predict_batch(const Matrix& rows) const = 0;

  Vector predict_one(const Vector& x) const;
};

double mean_loss(const PredictModel& model, const Matrix& rows, const std::vector<int>& labels,
                 LossKind kind);
double accuracy(const PredictModel& model, const Matrix& rows, const std::vector<int>& labels);

enum class ModelKind { kLogisticRegression, kMlp1Hidden };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);

struct TrainConfig {
  int hidden_units = 32;  // mlp only
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int patience = 10;                 // early stopping on the validation split
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Softmax classifier, either linear (logistic regression) or with one hidden
// ReLU layer. The output layer is zero-initialized, so an untrained model
// predicts the uniform distribution.
class TrainedModel : public PredictModel {
 public:
  TrainedModel() = default;

  static TrainedModel initialize(ModelKind kind, Index input_dim, Index classes,
                                 const TrainConfig& config);

  Index input_dim() const override { return input_dim_; }
  Index class_count() const override { return classes_; }
  Matrix predict_batch(const Matrix& rows) const override;

  ModelKind kind() const { return kind_; }
  Index hidden_units() const { return hidden_; }

  // Flat parameter view used by the optimizer and the finite-difference
  // gradient check.
  Vector parameters() const;
  void set_parameters(const Vector& theta);
  Index parameter_count() const;

  // Gradient of the mean cross-entropy over the batch w.r.t. parameters().
  Vector loss_gradient(const Matrix& rows, const std::vector<int>& labels) const;
  double batch_loss(const Matrix& rows, const std::vector<int>& labels) const;

  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

 private:
  Matrix logits(const Matrix& rows) const;

  ModelKind kind_ = ModelKind::kLogisticRegression;
  Index input_dim_ = 0;
  Index classes_ = 0;
  Index hidden_ = 0;
  Matrix w1_;  // hidden x d (mlp) or classes x d (logreg)
  Vector b1_;
  Matrix w2_;  // classes x hidden (mlp only)
  Vector b2_;
};

struct TrainResult {
  TrainedModel model;
  double final_train_loss = 0;
  double final_validation_loss = 0;
  int epochs_run = 0;
};

// Deterministic given (data, config). Cross-entropy objective, Adam updates,
// early stopping with best-parameter restore.
TrainResult train(ModelKind kind, const Dataset& data, const TrainConfig& config);

}  // namespace shiftlens
