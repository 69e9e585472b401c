#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlens/common.hpp"
#include "shiftlens/dataset.hpp"
#include "shiftlens/model.hpp"
#include "shiftlens/rng.hpp"

namespace shiftlens {

struct CostMatrix {
  enum class Kind { kSquaredEuclidean, kPrecomputed };

  Matrix costs;  // n_s x n_t, finite, non-negative
  Kind kind = Kind::kSquaredEuclidean;
  bool embedding_used = false;
};

std::string cost_kind_name(CostMatrix::Kind kind);

// Pairwise squared Euclidean distances between source and target rows.
// When embeddings are supplied, distances are taken in embedding space
// instead of raw feature space (row counts must match the datasets).
CostMatrix cost_matrix(const Dataset& source, const Dataset& target);
CostMatrix cost_matrix(const Matrix& source_rows, const Matrix& target_rows,
                       bool embedding_used = false);

// Uniform-marginal coupling: plan row sums are 1/n_s, column sums 1/n_t.
struct Coupling {
  Matrix plan;

  Index source_count() const { return plan.rows(); }
  Index target_count() const { return plan.cols(); }
  void validate() const;  // marginals within 1e-12
};

// Deterministic reduction of a coupling: per-row / per-column argmax with
// lowest-index tie breaking.
struct TransportMap {
  std::vector<Index> forward;  // source index -> target index
  std::vector<Index> inverse;  // target index -> source index
};

struct LabelTransfer {
  std::vector<int> estimated_labels;        // per target instance
  std::vector<Index> matched_source_index;  // per target instance
};

// Exact linear assignment (Jonker-Volgenant shortest augmenting paths,
// O(n^3)). Returns the column assigned to each row and the summed cost.
struct AssignmentResult {
  std::vector<Index> col_of_row;
  double objective = 0;  // sum of selected costs (unnormalized)
};
AssignmentResult solve_assignment(const Matrix& costs);

// Equal-size uniform marginals solved exactly as linear assignment; the
// returned plan is (1/n) times a permutation matrix and its objective is the
// global Kantorovich minimum.
Coupling solve_coupling(const CostMatrix& costs);

// Mass-weighted transport objective sum(costs * plan).
double coupling_objective(const CostMatrix& costs, const Coupling& plan);

TransportMap coupling_to_maps(const Coupling& plan);

// estimated_labels[j] = source label of the matched source sample.
LabelTransfer transfer_labels(const TransportMap& map, const Dataset& source);

// Mean loss of the model on target rows against transported labels.
double estimate_target_performance(const PredictModel& model, const Dataset& target,
                                   const LabelTransfer& transfer, LossKind loss);

double label_transport_accuracy(const LabelTransfer& transfer,
                                const std::vector<int>& true_target_labels);

// Equal-count protocol: when one side is larger it is subsampled uniformly
// at random (seeded) to the smaller size. Indices refer to original rows.
struct SampleAlignment {
  std::vector<Index> source_rows;
  std::vector<Index> target_rows;
  bool source_subsampled = false;
  bool target_subsampled = false;
};
SampleAlignment align_sample_counts(Index n_source, Index n_target, Rng rng);

nlohmann::ordered_json transport_to_json(const TransportMap& map, double objective,
                                         const std::string& cost_kind);

}  // namespace shiftlens
