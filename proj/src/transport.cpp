#include "shiftlens/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shiftlens {

std::string cost_kind_name(CostMatrix::Kind kind) {
  return kind == CostMatrix::Kind::kSquaredEuclidean ? "squared_euclidean" : "precomputed";
}

namespace {

CostMatrix squared_euclidean(const Matrix& a, const Matrix& b, bool embedding_used) {
  if (a.cols() != b.cols())
    throw ShapeError("cost matrix: source has " + std::to_string(a.cols()) +
                     " columns, target has " + std::to_string(b.cols()));
  if (a.rows() == 0 || b.rows() == 0) throw DomainError("cost matrix: empty sample");
  CostMatrix out;
  out.kind = CostMatrix::Kind::kSquaredEuclidean;
  out.embedding_used = embedding_used;
  // |x - y|^2 = |x|^2 + |y|^2 - 2 x.y, clamped against tiny negative rounding.
  Vector an = a.rowwise().squaredNorm();
  Vector bn = b.rowwise().squaredNorm();
  out.costs = (-2.0 * a * b.transpose());
  out.costs.colwise() += an;
  out.costs.rowwise() += bn.transpose();
  out.costs = out.costs.cwiseMax(0.0);
  for (Index i = 0; i < out.costs.rows(); ++i)
    for (Index j = 0; j < out.costs.cols(); ++j)
      if (!std::isfinite(out.costs(i, j)))
        throw DomainError("cost matrix contains a non-finite entry; impute missing values first");
  return out;
}

}  // namespace

CostMatrix cost_matrix(const Dataset& source, const Dataset& target) {
  return squared_euclidean(source.features, target.features, false);
}

CostMatrix cost_matrix(const Matrix& source_rows, const Matrix& target_rows, bool embedding_used) {
  return squared_euclidean(source_rows, target_rows, embedding_used);
}

void Coupling::validate() const {
  Index ns = plan.rows();
  Index nt = plan.cols();
  if (ns == 0 || nt == 0) throw DomainError("empty coupling");
  constexpr double kTol = 1e-12;
  for (Index i = 0; i < ns; ++i)
    if (std::abs(plan.row(i).sum() - 1.0 / static_cast<double>(ns)) > kTol)
      throw DomainError("coupling row marginal violated at row " + std::to_string(i));
  for (Index j = 0; j < nt; ++j)
    if (std::abs(plan.col(j).sum() - 1.0 / static_cast<double>(nt)) > kTol)
      throw DomainError("coupling column marginal violated at column " + std::to_string(j));
  if (plan.minCoeff() < -kTol) throw DomainError("coupling has negative mass");
}

AssignmentResult solve_assignment(const Matrix& costs) {
  Index n = costs.rows();
  if (n == 0 || costs.cols() != n) throw DomainError("assignment requires a non-empty square cost matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting paths with dual potentials; column 0 is a sentinel.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Index> row_of(static_cast<std::size_t>(n) + 1, 0);  // column -> assigned row (1-based)
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);

  for (Index i = 1; i <= n; ++i) {
    row_of[0] = i;
    Index j0 = 0;
    std::vector<double> min_slack(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      Index i0 = row_of[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = costs(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < min_slack[static_cast<std::size_t>(j)]) {
          min_slack[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_slack[static_cast<std::size_t>(j)] < delta) {
          delta = min_slack[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(row_of[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          min_slack[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[static_cast<std::size_t>(j0)] != 0);
    do {
      Index j1 = way[static_cast<std::size_t>(j0)];
      row_of[static_cast<std::size_t>(j0)] = row_of[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.col_of_row.assign(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j)
    result.col_of_row[static_cast<std::size_t>(row_of[static_cast<std::size_t>(j)] - 1)] = j - 1;
  for (Index i = 0; i < n; ++i)
    result.objective += costs(i, result.col_of_row[static_cast<std::size_t>(i)]);
  return result;
}

Coupling solve_coupling(const CostMatrix& costs) {
  Index ns = costs.costs.rows();
  Index nt = costs.costs.cols();
  if (ns == 0 || nt == 0) throw DomainError("cannot solve transport on an empty cost matrix");
  if (ns != nt)
    throw ShapeError("equal sample counts required (have " + std::to_string(ns) + " and " +
                     std::to_string(nt) + "); subsample the larger side first");
  if (costs.costs.minCoeff() < 0) throw DomainError("cost matrix entries must be non-negative");

  AssignmentResult assignment = solve_assignment(costs.costs);
  Coupling plan;
  plan.plan = Matrix::Zero(ns, nt);
  double mass = 1.0 / static_cast<double>(ns);
  for (Index i = 0; i < ns; ++i) plan.plan(i, assignment.col_of_row[static_cast<std::size_t>(i)]) = mass;
  return plan;
}

double coupling_objective(const CostMatrix& costs, const Coupling& plan) {
  if (costs.costs.rows() != plan.plan.rows() || costs.costs.cols() != plan.plan.cols())
    throw ShapeError("coupling and cost matrix shapes differ");
  return (costs.costs.array() * plan.plan.array()).sum();
}

TransportMap coupling_to_maps(const Coupling& plan) {
  Index ns = plan.source_count();
  Index nt = plan.target_count();
  if (ns == 0 || nt == 0) throw DomainError("empty coupling");
  TransportMap map;
  map.forward.resize(static_cast<std::size_t>(ns));
  map.inverse.resize(static_cast<std::size_t>(nt));
  for (Index i = 0; i < ns; ++i) {
    Index best = 0;
    for (Index j = 1; j < nt; ++j)
      if (plan.plan(i, j) > plan.plan(i, best)) best = j;
    map.forward[static_cast<std::size_t>(i)] = best;
  }
  for (Index j = 0; j < nt; ++j) {
    Index best = 0;
    for (Index i = 1; i < ns; ++i)
      if (plan.plan(i, j) > plan.plan(best, j)) best = i;
    map.inverse[static_cast<std::size_t>(j)] = best;
  }
  return map;
}

LabelTransfer transfer_labels(const TransportMap& map, const Dataset& source) {
  if (!source.labeled()) throw DomainError("label transfer requires a labeled source dataset");
  LabelTransfer transfer;
  transfer.matched_source_index = map.inverse;
  transfer.estimated_labels.reserve(map.inverse.size());
  for (Index s : map.inverse) {
    if (s < 0 || s >= source.rows()) throw ShapeError("transport map references a source row out of range");
    transfer.estimated_labels.push_back((*source.labels)[static_cast<std::size_t>(s)]);
  }
  return transfer;
}

double estimate_target_performance(const PredictModel& model, const Dataset& target,
                                   const LabelTransfer& transfer, LossKind loss) {
  if (static_cast<Index>(transfer.estimated_labels.size()) != target.rows())
    throw ShapeError("label transfer size does not match target rows");
  return mean_loss(model, target.features, transfer.estimated_labels, loss);
}

double label_transport_accuracy(const LabelTransfer& transfer,
                                const std::vector<int>& true_target_labels) {
  if (transfer.estimated_labels.size() != true_target_labels.size())
    throw ShapeError("label vectors have different lengths");
  if (transfer.estimated_labels.empty()) throw DomainError("empty label vectors");
  std::size_t hits = 0;
  for (std::size_t j = 0; j < true_target_labels.size(); ++j)
    hits += transfer.estimated_labels[j] == true_target_labels[j];
  return static_cast<double>(hits) / static_cast<double>(true_target_labels.size());
}

SampleAlignment align_sample_counts(Index n_source, Index n_target, Rng rng) {
  if (n_source < 1 || n_target < 1) throw DomainError("both samples must be non-empty");
  SampleAlignment out;
  Index n = std::min(n_source, n_target);
  if (n_source > n) {
    out.source_rows = rng.sample_without_replacement(n_source, n);
    std::sort(out.source_rows.begin(), out.source_rows.end());
    out.source_subsampled = true;
  } else {
    for (Index i = 0; i < n_source; ++i) out.source_rows.push_back(i);
  }
  if (n_target > n) {
    out.target_rows = rng.sample_without_replacement(n_target, n);
    std::sort(out.target_rows.begin(), out.target_rows.end());
    out.target_subsampled = true;
  } else {
    for (Index j = 0; j < n_target; ++j) out.target_rows.push_back(j);
  }
  return out;
}

nlohmann::ordered_json transport_to_json(const TransportMap& map, double objective,
                                         const std::string& cost_kind) {
  nlohmann::ordered_json doc;
  doc["forward"] = map.forward;
  doc["inverse"] = map.inverse;
  doc["objective"] = objective;
  doc["cost_kind"] = cost_kind;
  return doc;
}

}  // namespace shiftlens
