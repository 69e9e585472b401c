#include "shiftlens/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "shiftlens/rng.hpp"

namespace shiftlens {

namespace {

using nlohmann::json;

Matrix softmax_rows(Matrix logits) {
  for (Index i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Index best = 0;
  row.maxCoeff(&best);
  return static_cast<int>(best);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw SchemaError("model file: expected a non-empty array of rows");
  Index r = static_cast<Index>(rows.size());
  Index c = static_cast<Index>(rows[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != c)
      throw SchemaError("model file: ragged parameter matrix");
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  if (name == "zero_one") return LossKind::kZeroOne;
  throw DomainError("unknown loss kind: " + name);
}

std::string loss_kind_name(LossKind kind) {
  return kind == LossKind::kCrossEntropy ? "cross_entropy" : "zero_one";
}

double loss_value(LossKind kind, const Vector& probabilities, int label) {
  if (label < 0 || label >= probabilities.size())
    throw DomainError("label " + std::to_string(label) + " outside class range");
  if (kind == LossKind::kCrossEntropy)
    return -std::log(std::clamp(probabilities(label), kProbFloor, 1.0));
  Index best = 0;
  probabilities.maxCoeff(&best);
  return best == label ? 0.0 : 1.0;
}

double entropy(const Vector& probabilities) {
  double h = 0;
  for (Index c = 0; c < probabilities.size(); ++c) {
    double p = probabilities(c);
    if (p > 0) h -= p * std::log(std::clamp(p, kProbFloor, 1.0));
  }
  return h;
}

Vector PredictModel::predict_one(const Vector& x) const {
  Matrix row(1, x.size());
  row.row(0) = x.transpose();
  return predict_batch(row).row(0).transpose();
}

double mean_loss(const PredictModel& model, const Matrix& rows, const std::vector<int>& labels,
                 LossKind kind) {
  if (rows.rows() != static_cast<Index>(labels.size()))
    throw ShapeError("mean_loss: label count does not match row count");
  if (rows.rows() == 0) throw DomainError("mean_loss: empty batch");
  Matrix probs = model.predict_batch(rows);
  double total = 0;
  for (Index i = 0; i < rows.rows(); ++i)
    total += loss_value(kind, probs.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(rows.rows());
}

double accuracy(const PredictModel& model, const Matrix& rows, const std::vector<int>& labels) {
  return 1.0 - mean_loss(model, rows, labels, LossKind::kZeroOne);
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logreg") return ModelKind::kLogisticRegression;
  if (name == "mlp") return ModelKind::kMlp1Hidden;
  throw DomainError("unknown model kind: " + name);
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::kLogisticRegression ? "logreg" : "mlp";
}

void TrainConfig::validate() const {
  if (hidden_units < 1 || learning_rate <= 0 || epochs < 0 || batch_size < 1 ||
      patience < 1 || validation_fraction <= 0 || validation_fraction >= 1)
    throw DomainError("invalid training configuration");
}

TrainedModel TrainedModel::initialize(ModelKind kind, Index input_dim, Index classes,
                                      const TrainConfig& config) {
  if (input_dim < 1) throw DomainError("model needs at least one input feature");
  if (classes < 2) throw DomainError("model needs at least two classes");
  TrainedModel m;
  m.kind_ = kind;
  m.input_dim_ = input_dim;
  m.classes_ = classes;
  if (kind == ModelKind::kLogisticRegression) {
    m.w1_ = Matrix::Zero(classes, input_dim);
    m.b1_ = Vector::Zero(classes);
  } else {
    m.hidden_ = config.hidden_units;
    Rng init = Rng(config.seed).stream("model.init");
    double bound = std::sqrt(6.0 / static_cast<double>(input_dim + m.hidden_));
    m.w1_ = Matrix(m.hidden_, input_dim);
    for (Index i = 0; i < m.hidden_; ++i)
      for (Index j = 0; j < input_dim; ++j) m.w1_(i, j) = (2.0 * init.uniform() - 1.0) * bound;
    m.b1_ = Vector::Zero(m.hidden_);
    m.w2_ = Matrix::Zero(classes, m.hidden_);
    m.b2_ = Vector::Zero(classes);
  }
  return m;
}

Matrix TrainedModel::logits(const Matrix& rows) const {
  if (rows.cols() != input_dim_)
    throw ShapeError("model expects " + std::to_string(input_dim_) + " features, got " +
                     std::to_string(rows.cols()));
  if (kind_ == ModelKind::kLogisticRegression)
    return (rows * w1_.transpose()).rowwise() + b1_.transpose();
  Matrix hidden = ((rows * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
  return (hidden * w2_.transpose()).rowwise() + b2_.transpose();
}

Matrix TrainedModel::predict_batch(const Matrix& rows) const {
  return softmax_rows(logits(rows));
}

Index TrainedModel::parameter_count() const {
  Index n = w1_.size() + b1_.size();
  if (kind_ == ModelKind::kMlp1Hidden) n += w2_.size() + b2_.size();
  return n;
}

Vector TrainedModel::parameters() const {
  Vector theta(parameter_count());
  Index at = 0;
  for (Index i = 0; i < w1_.rows(); ++i)
    for (Index j = 0; j < w1_.cols(); ++j) theta(at++) = w1_(i, j);
  for (Index i = 0; i < b1_.size(); ++i) theta(at++) = b1_(i);
  if (kind_ == ModelKind::kMlp1Hidden) {
    for (Index i = 0; i < w2_.rows(); ++i)
      for (Index j = 0; j < w2_.cols(); ++j) theta(at++) = w2_(i, j);
    for (Index i = 0; i < b2_.size(); ++i) theta(at++) = b2_(i);
  }
  return theta;
}

void TrainedModel::set_parameters(const Vector& theta) {
  if (theta.size() != parameter_count()) throw ShapeError("parameter vector has wrong length");
  Index at = 0;
  for (Index i = 0; i < w1_.rows(); ++i)
    for (Index j = 0; j < w1_.cols(); ++j) w1_(i, j) = theta(at++);
  for (Index i = 0; i < b1_.size(); ++i) b1_(i) = theta(at++);
  if (kind_ == ModelKind::kMlp1Hidden) {
    for (Index i = 0; i < w2_.rows(); ++i)
      for (Index j = 0; j < w2_.cols(); ++j) w2_(i, j) = theta(at++);
    for (Index i = 0; i < b2_.size(); ++i) b2_(i) = theta(at++);
  }
}

double TrainedModel::batch_loss(const Matrix& rows, const std::vector<int>& labels) const {
  return mean_loss(*this, rows, labels, LossKind::kCrossEntropy);
}

Vector TrainedModel::loss_gradient(const Matrix& rows, const std::vector<int>& labels) const {
  Index n = rows.rows();
  if (n != static_cast<Index>(labels.size())) throw ShapeError("gradient: label count mismatch");
  double inv_n = 1.0 / static_cast<double>(n);

  if (kind_ == ModelKind::kLogisticRegression) {
    Matrix probs = softmax_rows((rows * w1_.transpose()).rowwise() + b1_.transpose());
    for (Index i = 0; i < n; ++i) probs(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    Matrix gw = inv_n * probs.transpose() * rows;
    Vector gb = inv_n * probs.colwise().sum().transpose();
    Vector grad(parameter_count());
    Index at = 0;
    for (Index i = 0; i < gw.rows(); ++i)
      for (Index j = 0; j < gw.cols(); ++j) grad(at++) = gw(i, j);
    for (Index i = 0; i < gb.size(); ++i) grad(at++) = gb(i);
    return grad;
  }

  Matrix pre = (rows * w1_.transpose()).rowwise() + b1_.transpose();
  Matrix hidden = pre.cwiseMax(0.0);
  Matrix probs = softmax_rows((hidden * w2_.transpose()).rowwise() + b2_.transpose());
  for (Index i = 0; i < n; ++i) probs(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  Matrix gw2 = inv_n * probs.transpose() * hidden;
  Vector gb2 = inv_n * probs.colwise().sum().transpose();
  Matrix dhidden = probs * w2_;
  for (Index i = 0; i < dhidden.rows(); ++i)
    for (Index j = 0; j < dhidden.cols(); ++j)
      if (pre(i, j) <= 0) dhidden(i, j) = 0;
  Matrix gw1 = inv_n * dhidden.transpose() * rows;
  Vector gb1 = inv_n * dhidden.colwise().sum().transpose();

  Vector grad(parameter_count());
  Index at = 0;
  for (Index i = 0; i < gw1.rows(); ++i)
    for (Index j = 0; j < gw1.cols(); ++j) grad(at++) = gw1(i, j);
  for (Index i = 0; i < gb1.size(); ++i) grad(at++) = gb1(i);
  for (Index i = 0; i < gw2.rows(); ++i)
    for (Index j = 0; j < gw2.cols(); ++j) grad(at++) = gw2(i, j);
  for (Index i = 0; i < gb2.size(); ++i) grad(at++) = gb2(i);
  return grad;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  json doc;
  doc["kind"] = model_kind_name(kind_);
  doc["input_dim"] = input_dim_;
  doc["class_count"] = classes_;
  doc["hidden_units"] = hidden_;
  doc["w1"] = matrix_to_json(w1_);
  json b1 = json::array();
  for (Index i = 0; i < b1_.size(); ++i) b1.push_back(b1_(i));
  doc["b1"] = std::move(b1);
  if (kind_ == ModelKind::kMlp1Hidden) {
    doc["w2"] = matrix_to_json(w2_);
    json b2 = json::array();
    for (Index i = 0; i < b2_.size(); ++i) b2.push_back(b2_(i));
    doc["b2"] = std::move(b2);
  }
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write model file: " + path.string());
  out << doc.dump(2) << '\n';
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("model file is not valid JSON: " + std::string(e.what()));
  }
  TrainedModel m;
  m.kind_ = parse_model_kind(doc.at("kind").get<std::string>());
  m.input_dim_ = doc.at("input_dim").get<Index>();
  m.classes_ = doc.at("class_count").get<Index>();
  m.hidden_ = doc.at("hidden_units").get<Index>();
  m.w1_ = matrix_from_json(doc.at("w1"));
  auto b1 = doc.at("b1");
  m.b1_ = Vector(static_cast<Index>(b1.size()));
  for (Index i = 0; i < m.b1_.size(); ++i) m.b1_(i) = b1[static_cast<std::size_t>(i)].get<double>();
  if (m.kind_ == ModelKind::kMlp1Hidden) {
    m.w2_ = matrix_from_json(doc.at("w2"));
    auto b2 = doc.at("b2");
    m.b2_ = Vector(static_cast<Index>(b2.size()));
    for (Index i = 0; i < m.b2_.size(); ++i) m.b2_(i) = b2[static_cast<std::size_t>(i)].get<double>();
  }
  return m;
}

TrainResult train(ModelKind kind, const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (!data.labeled()) throw DomainError("training requires a labeled dataset");
  if (data.missing.any()) throw DomainError("training data contains missing values; impute first");
  int classes = data.class_count();
  if (classes < 2) throw DomainError("training requires at least two classes");
  {
    std::vector<bool> seen(static_cast<std::size_t>(classes), false);
    for (int y : *data.labels) seen[static_cast<std::size_t>(y)] = true;
    int present = 0;
    for (bool s : seen) present += s;
    if (present < 2) throw DomainError("training requires samples from at least two classes");
  }

  Index n = data.rows();
  Rng root(config.seed);

  // Validation split: seeded shuffle, last ~10% held out.
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng split_rng = root.stream("model.valsplit");
  split_rng.shuffle(order);
  Index val_n = std::clamp<Index>(static_cast<Index>(std::llround(config.validation_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<Index> val_idx(order.begin(), order.begin() + val_n);
  std::vector<Index> train_idx(order.begin() + val_n, order.end());

  auto gather = [&](const std::vector<Index>& idx, Matrix& X, std::vector<int>& y) {
    X.resize(static_cast<Index>(idx.size()), data.dims());
    y.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      X.row(static_cast<Index>(k)) = data.features.row(idx[k]);
      y.push_back((*data.labels)[static_cast<std::size_t>(idx[k])]);
    }
  };
  Matrix train_x, val_x;
  std::vector<int> train_y, val_y;
  gather(train_idx, train_x, train_y);
  gather(val_idx, val_x, val_y);

  TrainedModel model = TrainedModel::initialize(kind, data.dims(), classes, config);

  Vector theta = model.parameters();
  Vector m1 = Vector::Zero(theta.size());
  Vector m2 = Vector::Zero(theta.size());
  long step = 0;

  double best_val = std::numeric_limits<double>::infinity();
  Vector best_theta = theta;
  int since_best = 0;
  int epochs_run = 0;

  Index train_n = train_x.rows();
  std::vector<Index> batch_order(static_cast<std::size_t>(train_n));
  for (Index i = 0; i < train_n; ++i) batch_order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = root.stream("model.epoch", static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(batch_order);
    for (Index start = 0; start < train_n; start += config.batch_size) {
      Index count = std::min<Index>(config.batch_size, train_n - start);
      Matrix bx(count, data.dims());
      std::vector<int> by(static_cast<std::size_t>(count));
      for (Index k = 0; k < count; ++k) {
        Index src = batch_order[static_cast<std::size_t>(start + k)];
        bx.row(k) = train_x.row(src);
        by[static_cast<std::size_t>(k)] = train_y[static_cast<std::size_t>(src)];
      }
      model.set_parameters(theta);
      Vector grad = model.loss_gradient(bx, by);
      ++step;
      double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      m1 = config.adam_beta1 * m1 + (1.0 - config.adam_beta1) * grad;
      m2 = config.adam_beta2 * m2.array().matrix() + (1.0 - config.adam_beta2) * grad.array().square().matrix();
      theta -= (config.learning_rate * (m1 / c1).array() / ((m2 / c2).array().sqrt() + config.adam_eps)).matrix();
    }
    model.set_parameters(theta);
    double val_loss = model.batch_loss(val_x, val_y);
    ++epochs_run;
    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      best_theta = theta;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  if (config.epochs > 0) model.set_parameters(best_theta);

  TrainResult result;
  result.final_train_loss = model.batch_loss(train_x, train_y);
  result.final_validation_loss = model.batch_loss(val_x, val_y);
  result.epochs_run = epochs_run;
  result.model = std::move(model);
  return result;
}

}  // namespace shiftlens
