#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "necoc/data.hpp"
#include "necoc/ensemble.hpp"
#include "necoc/learners.hpp"

namespace necoc {

// Where the train/test pair comes from: "blobs", "idx", or "csv".
struct DatasetConfig {
  std::string source = "blobs";

  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;

  std::string train_csv;
  std::string test_csv;
  std::string label_column = "label";

  int blob_classes = 10;
  int blob_train_per_class = 100;
  int blob_test_per_class = 50;
  int blob_dims = 16;
  double blob_spread = 1.0;
  std::uint64_t blob_seed = 0;

  bool standardize = false;

  bool operator==(const DatasetConfig&) const = default;
};

struct MatrixSweep {
  std::vector<int> n_meta_values;
  std::vector<int> n_learners_values;
  std::uint64_t matrix_seed = 0;

  bool operator==(const MatrixSweep&) const = default;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<int> hidden_dims;
  Activation activation = Activation::relu;
  double init_scale = 1.0;
  TrainConfig train;
  MatrixSweep matrix;
  std::vector<SharingStrategy::Kind> strategies = {
      SharingStrategy::Kind::no_share};
  int shared_layer_count = 0;  // 0 = all feature layers but the last
  int repetitions = 1;
  double dev_fraction = 0.1;
  std::string output_path;
  bool retrain_each_length = false;
  int n_threads = 1;
  std::optional<int> finetune_epochs;
};

struct ReportCell {
  int n_meta = 0;
  int n_learners = 0;
  std::string strategy;
  std::vector<std::uint64_t> seeds;  // ensemble seed per repetition
  std::vector<double> accuracies;    // per repetition
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  double wall_seconds = 0.0;

  bool operator==(const ReportCell&) const = default;
};

struct ExperimentReport {
  std::string dataset_name;
  int n_classes = 0;
  int repetitions = 0;
  std::uint64_t seed = 0;
  std::uint64_t matrix_seed = 0;
  std::vector<double> baseline_accuracies;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  std::vector<ReportCell> cells;

  bool operator==(const ExperimentReport&) const = default;
};

enum class ReportFormat { json, csv };

// Builds the train/test pair named by the config. CSV test labels are mapped
// through the train file's label mapping.
std::pair<Dataset, Dataset> load_dataset_pair(const DatasetConfig& config);

// Full sweep: per repetition a dev split and a single-model baseline, then
// one ensemble per (n_meta, strategy, repetition) evaluated at every swept
// n_learners via column prefixes (or retrained per length when configured).
// Partial results are written to config.output_path before errors propagate.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string emit_report(const ExperimentReport& report, ReportFormat format);
ExperimentReport parse_report_json(const std::string& text);

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string serialize_experiment_config(const ExperimentConfig& config);

std::string optimizer_name(Optimizer opt);
Optimizer optimizer_from_name(const std::string& name);
std::string schedule_name(ScheduleKind schedule);
ScheduleKind schedule_from_name(const std::string& name);

}  // namespace necoc
