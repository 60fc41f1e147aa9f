#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "necoc/coding.hpp"
#include "necoc/ensemble.hpp"
#include "necoc/errors.hpp"
#include "necoc/experiment.hpp"
#include "necoc/seeding.hpp"

namespace {

struct DatasetFlags {
  necoc::DatasetConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", config.source,
                    "Dataset source: blobs, idx, or csv")
        ->check(CLI::IsMember({"blobs", "idx", "csv"}));
    cmd->add_option("--train-images", config.train_images,
                    "IDX image file for training");
    cmd->add_option("--train-labels", config.train_labels,
                    "IDX label file for training");
    cmd->add_option("--test-images", config.test_images,
                    "IDX image file for evaluation");
    cmd->add_option("--test-labels", config.test_labels,
                    "IDX label file for evaluation");
    cmd->add_option("--train-csv", config.train_csv, "Training CSV file");
    cmd->add_option("--test-csv", config.test_csv, "Evaluation CSV file");
    cmd->add_option("--label-column", config.label_column,
                    "Label column name for CSV input");
    cmd->add_option("--blob-classes", config.blob_classes,
                    "Synthetic blob class count");
    cmd->add_option("--blob-train-per-class", config.blob_train_per_class,
                    "Synthetic training samples per class");
    cmd->add_option("--blob-test-per-class", config.blob_test_per_class,
                    "Synthetic test samples per class");
    cmd->add_option("--blob-dims", config.blob_dims,
                    "Synthetic feature dimensions");
    cmd->add_option("--blob-spread", config.blob_spread,
                    "Synthetic within-class noise scale");
    cmd->add_option("--blob-seed", config.blob_seed,
                    "Seed for synthetic data");
    cmd->add_flag("--standardize", config.standardize,
                  "Standardize features with training statistics");
  }
};

struct TrainFlags {
  necoc::TrainConfig config;
  std::string optimizer = "adam";
  std::string schedule = "per_epoch";
  double grad_clip = 5.0;
  bool no_grad_clip = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--optimizer", optimizer, "Optimizer: adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--lr", config.base_lr, "Base learning rate");
    cmd->add_option("--decay-rate", config.decay_rate,
                    "Learning-rate decay rate");
    cmd->add_option("--decay-step", config.decay_step,
                    "Iterations per decay step (per-iteration schedule)");
    cmd->add_option("--warmup", config.warmup_iterations,
                    "Warmup iterations before per-iteration decay");
    cmd->add_option("--grad-clip", grad_clip, "Global gradient-norm clip");
    cmd->add_flag("--no-grad-clip", no_grad_clip,
                  "Disable gradient clipping");
    cmd->add_option("--batch", config.batch_size, "Mini-batch size");
    cmd->add_option("--epochs", config.epochs, "Training epochs");
    cmd->add_option("--seed", config.seed, "Master seed");
    cmd->add_option("--schedule", schedule,
                    "LR schedule: per_epoch or per_iteration_after_warmup")
        ->check(CLI::IsMember({"per_epoch", "per_iteration_after_warmup"}));
  }

  necoc::TrainConfig resolve() const {
    necoc::TrainConfig cfg = config;
    cfg.optimizer = necoc::optimizer_from_name(optimizer);
    cfg.schedule = necoc::schedule_from_name(schedule);
    if (no_grad_clip) {
      cfg.grad_clip = std::nullopt;
    } else {
      cfg.grad_clip = grad_clip;
    }
    return cfg;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw necoc::IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw necoc::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw necoc::IoError("failed writing " + path);
}

int run_gen_matrix(int classes, int meta, int learners, std::uint64_t seed,
                   const std::string& output) {
  const necoc::CodingMatrix matrix =
      necoc::generate_coding_matrix(classes, learners, meta, seed);
  const necoc::ValidationReport report = necoc::validate(matrix);
  if (!report.ok()) {
    for (const necoc::Violation& v : report.violations) {
      std::cerr << "violation: " << v.message << "\n";
    }
    return 1;
  }
  necoc::write_matrix_file(matrix, output);
  const necoc::MatrixMetrics metrics = necoc::matrix_metrics(matrix);
  const auto [lo, hi] = necoc::suggested_learner_range(classes);
  std::cout << "wrote " << output << ": " << classes << " classes x "
            << learners << " learners, alphabet " << meta << "\n"
            << "min row distance:  " << metrics.min_row_distance << "\n"
            << "mean row distance: " << metrics.mean_row_distance << "\n"
            << "merge degree:      " << metrics.merge_degree << "\n"
            << "suggested learner range for " << classes << " classes: ["
            << lo << ", " << hi << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-ary error correcting output code ensembles"};
  app.require_subcommand(1);

  // gen-matrix ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-matrix", "Generate a coding matrix");
  int gen_classes = 0;
  int gen_meta = 0;
  int gen_learners = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_output;
  gen->add_option("--classes", gen_classes, "Number of original classes")
      ->required();
  gen->add_option("--meta", gen_meta, "Meta-class alphabet size N")
      ->required();
  gen->add_option("--learners", gen_learners, "Number of columns / learners")
      ->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--output,-o", gen_output, "Matrix CSV path")->required();

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train an ensemble checkpoint");
  DatasetFlags train_data;
  train_data.attach(train);
  TrainFlags train_cfg;
  train_cfg.attach(train);
  std::string train_matrix;
  std::string train_strategy = "no_share";
  int train_shared_layers = 0;
  std::vector<int> train_hidden;
  std::string train_activation = "relu";
  double train_init_scale = 1.0;
  double train_dev_fraction = 0.1;
  int train_threads = 1;
  int train_finetune_epochs = -1;
  std::string train_output;
  train->add_option("--matrix", train_matrix, "Coding matrix CSV")->required();
  train->add_option("--strategy", train_strategy,
                    "no_share, partial_share, or full_share")
      ->check(CLI::IsMember({"no_share", "partial_share", "full_share"}));
  train->add_option("--shared-layers", train_shared_layers,
                    "Shared feature layers for partial_share "
                    "(0 = all but the last)");
  train->add_option("--hidden", train_hidden, "Hidden layer widths");
  train->add_option("--activation", train_activation, "relu or tanh")
      ->check(CLI::IsMember({"relu", "tanh"}));
  train->add_option("--init-scale", train_init_scale,
                    "Weight initialization scale");
  train->add_option("--dev-fraction", train_dev_fraction,
                    "Fraction of training data held out for model selection");
  train->add_option("--threads", train_threads,
                    "Worker threads for no_share learners");
  train->add_option("--finetune-epochs", train_finetune_epochs,
                    "Joint fine-tuning epochs (-1 = same as --epochs)");
  train->add_option("--output,-o", train_output, "Checkpoint directory")
      ->required();

  // eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate an ensemble checkpoint");
  DatasetFlags eval_data;
  eval_data.attach(eval);
  std::string eval_model;
  std::string eval_predictions;
  int eval_threads = 1;
  eval->add_option("--model", eval_model, "Checkpoint directory")->required();
  eval->add_option("--predictions", eval_predictions,
                   "Optional CSV path for per-sample predictions");
  eval->add_option("--threads", eval_threads, "Decoding threads");

  // sweep ------------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "Run a (N, N_L, strategy) sweep from a JSON config");
  std::string sweep_config;
  std::string sweep_output;
  std::string sweep_csv;
  std::uint64_t sweep_seed = 0;
  std::uint64_t sweep_matrix_seed = 0;
  int sweep_repetitions = 0;
  int sweep_threads = 0;
  bool sweep_retrain = false;
  sweep->add_option("--config", sweep_config, "Experiment config JSON")
      ->required();
  sweep->add_option("--output,-o", sweep_output,
                    "Report JSON path (overrides config)");
  sweep->add_option("--csv", sweep_csv, "Also write the report as CSV");
  sweep->add_option("--seed", sweep_seed, "Master seed (overrides config)");
  sweep->add_option("--matrix-seed", sweep_matrix_seed,
                    "Matrix seed (overrides config)");
  sweep->add_option("--repetitions", sweep_repetitions,
                    "Repetitions (overrides config)");
  sweep->add_option("--threads", sweep_threads,
                    "Worker threads (overrides config)");
  sweep->add_flag("--retrain-each-length", sweep_retrain,
                  "Retrain per n_learners instead of prefix reuse");

  // report -----------------------------------------------------------------
  auto* report_cmd =
      app.add_subcommand("report", "Convert a report between JSON and CSV");
  std::string report_input;
  std::string report_format = "csv";
  std::string report_output;
  report_cmd->add_option("--input", report_input, "Report JSON path")
      ->required();
  report_cmd->add_option("--format", report_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  report_cmd->add_option("--output,-o", report_output,
                         "Output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return run_gen_matrix(gen_classes, gen_meta, gen_learners, gen_seed,
                            gen_output);
    }

    if (train->parsed()) {
      const necoc::CodingMatrix matrix =
          necoc::read_matrix_file(train_matrix);
      auto [full_train, test] = necoc::load_dataset_pair(train_data.config);
      if (train_data.config.standardize) {
        necoc::StandardizeResult scaled = necoc::standardize(full_train, {test});
        full_train = std::move(scaled.train);
        test = std::move(scaled.others.front());
      }
      auto [tr, dev] =
          necoc::dev_split(full_train, train_dev_fraction,
                           necoc::derive_seed(train_cfg.config.seed, 11, 0));
      necoc::NetworkSpec spec;
      spec.input_dim = tr.dim_count();
      spec.hidden_dims = train_hidden;
      spec.output_dim = matrix.n_classes;
      spec.activation = necoc::activation_from_name(train_activation);
      spec.init_scale = train_init_scale;
      necoc::SharingStrategy strategy;
      strategy.kind = necoc::strategy_from_name(train_strategy);
      strategy.shared_layer_count =
          train_shared_layers > 0
              ? train_shared_layers
              : std::max(1, static_cast<int>(train_hidden.size()) - 1);
      const std::optional<int> finetune =
          train_finetune_epochs >= 0 ? std::optional<int>(train_finetune_epochs)
                                     : std::nullopt;
      const necoc::EnsembleModel model =
          necoc::train_ensemble(tr, matrix, strategy, spec,
                                train_cfg.resolve(), &dev, train_threads,
                                finetune);
      necoc::save_ensemble(model, train_output);
      const double accuracy = necoc::evaluate_accuracy(
          necoc::predict_ensemble(model, test.features, train_threads),
          test.labels);
      std::cout << "saved " << train_output << " (" << matrix.n_learners
                << " learners, strategy " << train_strategy << ")\n"
                << "test accuracy: " << accuracy << "\n";
      return 0;
    }

    if (eval->parsed()) {
      const necoc::EnsembleModel model = necoc::load_ensemble(eval_model);
      auto [full_train, test] = necoc::load_dataset_pair(eval_data.config);
      if (eval_data.config.standardize) {
        necoc::StandardizeResult scaled = necoc::standardize(full_train, {test});
        test = std::move(scaled.others.front());
      }
      const std::vector<int> predictions =
          necoc::predict_ensemble(model, test.features, eval_threads);
      const double accuracy =
          necoc::evaluate_accuracy(predictions, test.labels);
      if (!eval_predictions.empty()) {
        std::ostringstream csv;
        csv << "sample,predicted,actual\n";
        for (std::size_t i = 0; i < predictions.size(); ++i) {
          csv << i << ',' << predictions[i] << ',' << test.labels[i] << '\n';
        }
        write_file(eval_predictions, csv.str());
      }
      std::cout << "test accuracy: " << accuracy << " ("
                << predictions.size() << " samples)\n";
      return 0;
    }

    if (sweep->parsed()) {
      necoc::ExperimentConfig config =
          necoc::parse_experiment_config(read_file(sweep_config));
      if (sweep->count("--seed") > 0) config.train.seed = sweep_seed;
      if (sweep->count("--matrix-seed") > 0) {
        config.matrix.matrix_seed = sweep_matrix_seed;
      }
      if (!sweep_output.empty()) config.output_path = sweep_output;
      if (sweep_repetitions > 0) config.repetitions = sweep_repetitions;
      if (sweep_threads > 0) config.n_threads = sweep_threads;
      if (sweep_retrain) config.retrain_each_length = true;
      const necoc::ExperimentReport report = necoc::run_experiment(config);
      if (!sweep_csv.empty()) {
        write_file(sweep_csv,
                   necoc::emit_report(report, necoc::ReportFormat::csv));
      }
      std::cout << "baseline: mean " << report.baseline_mean << ", std "
                << report.baseline_std << " over " << report.repetitions
                << " repetition(s)\n";
      for (const necoc::ReportCell& cell : report.cells) {
        std::cout << "N=" << cell.n_meta << " N_L=" << cell.n_learners << " "
                  << cell.strategy << ": mean " << cell.mean_accuracy
                  << ", std " << cell.std_accuracy << "\n";
      }
      if (!config.output_path.empty()) {
        std::cout << "report written to " << config.output_path << "\n";
      }
      return 0;
    }

    if (report_cmd->parsed()) {
      const necoc::ExperimentReport report =
          necoc::parse_report_json(read_file(report_input));
      const necoc::ReportFormat format = report_format == "json"
                                             ? necoc::ReportFormat::json
                                             : necoc::ReportFormat::csv;
      const std::string text = necoc::emit_report(report, format);
      if (report_output.empty()) {
        std::cout << text;
      } else {
        write_file(report_output, text);
      }
      return 0;
    }
  } catch (const necoc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
