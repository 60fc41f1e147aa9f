#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "necoc/coding.hpp"
#include "necoc/data.hpp"
#include "necoc/decoding.hpp"
#include "necoc/learners.hpp"

namespace necoc {

struct SharingStrategy {
  enum class Kind { no_share, partial_share, full_share };
  Kind kind = Kind::no_share;
  int shared_layer_count = 0;  // only meaningful for partial_share
};

std::string strategy_name(SharingStrategy::Kind kind);
SharingStrategy::Kind strategy_from_name(const std::string& name);

// Trained ensemble: one base learner per matrix column. For no_share each
// head is a full network; for the sharing strategies the trunk holds the
// shared feature layers and each head holds the remaining layers.
struct EnsembleModel {
  CodingMatrix matrix;
  SharingStrategy strategy;
  std::optional<NetworkParams> trunk;
  std::vector<NetworkParams> heads;
  NetworkSpec spec;  // full per-learner shape, output_dim == n_meta
  int n_meta = 0;
  std::uint64_t seed = 0;
};

struct ParamCountReport {
  long long n_no_share = 0;
  long long n_partial_share = 0;
  long long n_full_share = 0;
};

// Maps 0-based class labels to 0-based meta-labels through a column's
// partition (whose entries are 1-based).
std::vector<int> relabel(const std::vector<int>& labels,
                         const MetaPartition& partition);

// Trains one network on the original classes; used to seed shared trunks.
NetworkParams pretrain_single(const NetworkSpec& spec, const TrainConfig& cfg,
                              const Dataset& train,
                              const Dataset* dev = nullptr);

// spec.output_dim is overridden to matrix.n_meta for the heads. When dev is
// given, no_share learners pick their best epoch by meta-label dev accuracy
// and the joint strategies pick the epoch with best ensemble dev accuracy.
// n_threads parallelizes no_share learners without changing the result.
// finetune_epochs overrides cfg.epochs for the joint fine-tuning loop only.
EnsembleModel train_ensemble(const Dataset& dataset, const CodingMatrix& matrix,
                             const SharingStrategy& strategy,
                             const NetworkSpec& spec, const TrainConfig& cfg,
                             const Dataset* dev = nullptr, int n_threads = 1,
                             std::optional<int> finetune_epochs = std::nullopt);

// Per-sample prediction vectors over {1..n_meta}, one entry per learner.
std::vector<PredictionVector> ensemble_codes(const EnsembleModel& model,
                                             const Eigen::MatrixXd& features);

// Decoded 0-based class predictions.
std::vector<int> predict_ensemble(const EnsembleModel& model,
                                  const Eigen::MatrixXd& features,
                                  int n_threads = 1);

// Exact trainable-scalar counts per strategy for a head alphabet of n_meta.
ParamCountReport parameter_counts(const NetworkSpec& spec, int n_learners,
                                  int shared_layer_count, int n_meta);

double evaluate_accuracy(const std::vector<int>& predictions,
                         const std::vector<int>& labels);

// First k columns of a matrix; generator metadata is preserved.
CodingMatrix prefix_columns(const CodingMatrix& m, int k);

// Checkpoint directory: matrix.csv, manifest.json, trunk/head parameter
// blobs.
void save_ensemble(const EnsembleModel& model, const std::string& dir);
EnsembleModel load_ensemble(const std::string& dir);

}  // namespace necoc
