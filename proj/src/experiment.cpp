#include "necoc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "necoc/coding.hpp"
#include "necoc/decoding.hpp"
#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

namespace necoc {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Seed roles under the experiment's master seed (train.seed).
constexpr std::uint64_t kRoleSplit = 11;
constexpr std::uint64_t kRoleBaseline = 12;
constexpr std::uint64_t kRoleCell = 13;

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

std::string fmt_g9(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

std::vector<int> sorted_unique(std::vector<int> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void validate_experiment_config(const ExperimentConfig& config) {
  if (config.repetitions < 1) {
    throw RangeError("repetitions must be >= 1, got " +
                     std::to_string(config.repetitions));
  }
  if (!(config.dev_fraction > 0.0 && config.dev_fraction < 1.0)) {
    throw RangeError("dev_fraction must lie in (0, 1)");
  }
  if (config.matrix.n_meta_values.empty()) {
    throw EmptyInput("no n_meta values to sweep");
  }
  if (config.matrix.n_learners_values.empty()) {
    throw EmptyInput("no n_learners values to sweep");
  }
  for (int k : config.matrix.n_learners_values) {
    if (k < 1) throw RangeError("swept n_learners must be >= 1");
  }
  if (config.strategies.empty()) {
    throw EmptyInput("no sharing strategies selected");
  }
  if (config.n_threads < 1) throw RangeError("n_threads must be >= 1");
  for (int h : config.hidden_dims) {
    if (h < 1) throw RangeError("hidden layer widths must be >= 1");
  }
}

int resolve_shared_layers(const ExperimentConfig& config) {
  const int h = static_cast<int>(config.hidden_dims.size());
  if (config.shared_layer_count > 0) return config.shared_layer_count;
  return std::max(1, h - 1);
}

}  // namespace

std::string optimizer_name(Optimizer opt) {
  return opt == Optimizer::sgd ? "sgd" : "adam";
}

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw ParseError("unknown optimizer '" + name + "'");
}

std::string schedule_name(ScheduleKind schedule) {
  return schedule == ScheduleKind::per_epoch ? "per_epoch"
                                             : "per_iteration_after_warmup";
}

ScheduleKind schedule_from_name(const std::string& name) {
  if (name == "per_epoch") return ScheduleKind::per_epoch;
  if (name == "per_iteration_after_warmup") {
    return ScheduleKind::per_iteration_after_warmup;
  }
  throw ParseError("unknown schedule '" + name + "'");
}

std::pair<Dataset, Dataset> load_dataset_pair(const DatasetConfig& config) {
  if (config.source == "blobs") {
    const int per_class =
        config.blob_train_per_class + config.blob_test_per_class;
    const Dataset full =
        synth_blobs(config.blob_classes, per_class, config.blob_dims,
                    config.blob_spread, config.blob_seed);
    auto take = [&](int offset, int count, const char* suffix) {
      Dataset part;
      part.n_classes = full.n_classes;
      part.name = full.name + suffix;
      part.features.resize(
          static_cast<Eigen::Index>(count) * config.blob_classes,
          full.features.cols());
      part.labels.resize(
          static_cast<std::size_t>(count) * config.blob_classes);
      int row = 0;
      for (int k = 0; k < config.blob_classes; ++k) {
        const int base = k * per_class + offset;
        for (int i = 0; i < count; ++i, ++row) {
          part.features.row(row) = full.features.row(base + i);
          part.labels[static_cast<std::size_t>(row)] =
              full.labels[static_cast<std::size_t>(base + i)];
        }
      }
      return part;
    };
    return {take(0, config.blob_train_per_class, "/train"),
            take(config.blob_train_per_class, config.blob_test_per_class,
                 "/test")};
  }

  if (config.source == "idx") {
    Dataset train = load_idx(config.train_images, config.train_labels);
    Dataset test = load_idx(config.test_images, config.test_labels);
    const int n_classes = std::max(train.n_classes, test.n_classes);
    train.n_classes = n_classes;
    test.n_classes = n_classes;
    return {std::move(train), std::move(test)};
  }

  if (config.source == "csv") {
    std::map<int, int> train_map;
    Dataset train =
        load_csv(config.train_csv, config.label_column, &train_map);
    std::map<int, int> test_map;
    Dataset test = load_csv(config.test_csv, config.label_column, &test_map);
    // Express test labels in the train file's dense mapping.
    std::map<int, int> dense_to_raw;
    for (const auto& [raw, dense] : test_map) dense_to_raw[dense] = raw;
    for (std::size_t i = 0; i < test.labels.size(); ++i) {
      const int raw = dense_to_raw.at(test.labels[i]);
      const auto it = train_map.find(raw);
      if (it == train_map.end()) {
        throw RangeError("test label " + std::to_string(raw) +
                         " never appears in " + config.train_csv);
      }
      test.labels[i] = it->second;
    }
    test.n_classes = train.n_classes;
    return {std::move(train), std::move(test)};
  }

  throw ParseError("unknown dataset source '" + config.source +
                   "' (expected blobs, idx, or csv)");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_experiment_config(config);
  auto [train_full, test] = load_dataset_pair(config.dataset);
  if (config.dataset.standardize) {
    StandardizeResult scaled = standardize(train_full, {test});
    train_full = std::move(scaled.train);
    test = std::move(scaled.others.front());
  }
  const int n_classes = train_full.n_classes;

  const std::vector<int> metas = sorted_unique(config.matrix.n_meta_values);
  const std::vector<int> lengths =
      sorted_unique(config.matrix.n_learners_values);
  for (int n_meta : metas) {
    if (n_meta < 2 || n_meta > n_classes) {
      throw RangeError("swept n_meta " + std::to_string(n_meta) +
                       " outside [2, " + std::to_string(n_classes) + "]");
    }
  }
  const int max_length = lengths.back();

  NetworkSpec spec;
  spec.input_dim = train_full.dim_count();
  spec.hidden_dims = config.hidden_dims;
  spec.output_dim = n_classes;
  spec.activation = config.activation;
  spec.init_scale = config.init_scale;

  const std::uint64_t master = config.train.seed;
  const int reps = config.repetitions;

  ExperimentReport report;
  report.dataset_name = train_full.name;
  report.n_classes = n_classes;
  report.repetitions = reps;
  report.seed = master;
  report.matrix_seed = config.matrix.matrix_seed;

  // Per-repetition splits and single-model baselines.
  std::vector<Dataset> rep_train;
  std::vector<Dataset> rep_dev;
  for (int r = 0; r < reps; ++r) {
    auto [tr, dv] =
        dev_split(train_full, config.dev_fraction,
                  derive_seed(master, kRoleSplit, static_cast<std::uint64_t>(r)));
    TrainConfig baseline_cfg = config.train;
    baseline_cfg.seed =
        derive_seed(master, kRoleBaseline, static_cast<std::uint64_t>(r));
    const NetworkParams baseline =
        fit(spec, baseline_cfg, tr.features, tr.labels, &dv.features,
            &dv.labels);
    report.baseline_accuracies.push_back(
        evaluate_accuracy(predict(baseline, test.features), test.labels));
    rep_train.push_back(std::move(tr));
    rep_dev.push_back(std::move(dv));
  }
  std::tie(report.baseline_mean, report.baseline_std) =
      mean_std(report.baseline_accuracies);

  const int n_strategies = static_cast<int>(config.strategies.size());
  const int n_lengths = static_cast<int>(lengths.size());
  std::vector<ReportCell> cells(static_cast<std::size_t>(
      static_cast<int>(metas.size()) * n_strategies * n_lengths));
  auto cell_at = [&](int meta_idx, int strat_idx, int length_idx) -> ReportCell& {
    return cells[static_cast<std::size_t>(
        (meta_idx * n_strategies + strat_idx) * n_lengths + length_idx)];
  };
  for (int mi = 0; mi < static_cast<int>(metas.size()); ++mi) {
    for (int si = 0; si < n_strategies; ++si) {
      for (int li = 0; li < n_lengths; ++li) {
        ReportCell& cell = cell_at(mi, si, li);
        cell.n_meta = metas[static_cast<std::size_t>(mi)];
        cell.n_learners = lengths[static_cast<std::size_t>(li)];
        cell.strategy =
            strategy_name(config.strategies[static_cast<std::size_t>(si)]);
      }
    }
  }

  auto finalize = [&] {
    for (ReportCell& cell : cells) {
      std::tie(cell.mean_accuracy, cell.std_accuracy) =
          mean_std(cell.accuracies);
      cell.baseline_mean = report.baseline_mean;
      cell.baseline_std = report.baseline_std;
    }
    report.cells = cells;
  };

  std::string context;
  try {
    for (int mi = 0; mi < static_cast<int>(metas.size()); ++mi) {
      const int n_meta = metas[static_cast<std::size_t>(mi)];
      for (int si = 0; si < n_strategies; ++si) {
        SharingStrategy strategy;
        strategy.kind = config.strategies[static_cast<std::size_t>(si)];
        strategy.shared_layer_count = resolve_shared_layers(config);
        // Canonical strategy index so seed derivation ignores config order.
        const auto canonical = static_cast<std::uint64_t>(strategy.kind);
        for (int r = 0; r < reps; ++r) {
          context = "cell n_meta=" + std::to_string(n_meta) + ", strategy=" +
                    strategy_name(strategy.kind) + ", repetition=" +
                    std::to_string(r);
          const CodingMatrix matrix = generate_coding_matrix(
              n_classes, max_length, n_meta,
              derive_seed(config.matrix.matrix_seed,
                          static_cast<std::uint64_t>(n_meta),
                          static_cast<std::uint64_t>(r)));
          TrainConfig cell_cfg = config.train;
          cell_cfg.seed =
              derive_seed(master, kRoleCell, static_cast<std::uint64_t>(n_meta),
                          canonical, static_cast<std::uint64_t>(r));
          for (int li = 0; li < n_lengths; ++li) {
            cell_at(mi, si, li).seeds.push_back(cell_cfg.seed);
          }

          if (!config.retrain_each_length) {
            const auto train_start = std::chrono::steady_clock::now();
            const EnsembleModel model = train_ensemble(
                rep_train[static_cast<std::size_t>(r)], matrix, strategy, spec,
                cell_cfg, &rep_dev[static_cast<std::size_t>(r)],
                config.n_threads, config.finetune_epochs);
            const std::vector<PredictionVector> codes =
                ensemble_codes(model, test.features);
            // Training cost is booked on the longest cell; prefixes add only
            // their decode time.
            cell_at(mi, si, n_lengths - 1).wall_seconds +=
                elapsed_seconds(train_start);
            for (int li = 0; li < n_lengths; ++li) {
              const int k = lengths[static_cast<std::size_t>(li)];
              const auto decode_start = std::chrono::steady_clock::now();
              const CodingMatrix prefix = prefix_columns(matrix, k);
              std::vector<PredictionVector> prefix_codes(
                  codes.size(), PredictionVector(static_cast<std::size_t>(k)));
              for (std::size_t i = 0; i < codes.size(); ++i) {
                std::copy_n(codes[i].begin(), k, prefix_codes[i].begin());
              }
              const std::vector<DecodeResult> decoded =
                  decode_batch(prefix, prefix_codes, config.n_threads);
              std::vector<int> predictions(decoded.size());
              for (std::size_t i = 0; i < decoded.size(); ++i) {
                predictions[i] = decoded[i].class_index;
              }
              ReportCell& cell = cell_at(mi, si, li);
              cell.accuracies.push_back(
                  evaluate_accuracy(predictions, test.labels));
              cell.wall_seconds += elapsed_seconds(decode_start);
            }
          } else {
            for (int li = 0; li < n_lengths; ++li) {
              const int k = lengths[static_cast<std::size_t>(li)];
              const auto start = std::chrono::steady_clock::now();
              const CodingMatrix prefix = prefix_columns(matrix, k);
              const EnsembleModel model = train_ensemble(
                  rep_train[static_cast<std::size_t>(r)], prefix, strategy,
                  spec, cell_cfg, &rep_dev[static_cast<std::size_t>(r)],
                  config.n_threads, config.finetune_epochs);
              const std::vector<int> predictions =
                  predict_ensemble(model, test.features, config.n_threads);
              ReportCell& cell = cell_at(mi, si, li);
              cell.accuracies.push_back(
                  evaluate_accuracy(predictions, test.labels));
              cell.wall_seconds += elapsed_seconds(start);
            }
          }
        }
      }
    }
  } catch (const std::exception& e) {
    finalize();
    report.cells.erase(
        std::remove_if(report.cells.begin(), report.cells.end(),
                       [](const ReportCell& c) { return c.accuracies.empty(); }),
        report.cells.end());
    if (!config.output_path.empty()) {
      try {
        write_text_file(config.output_path,
                        emit_report(report, ReportFormat::json));
      } catch (const std::exception&) {
        // Flushing partial results is best-effort.
      }
    }
    throw Error(context + ": " + e.what());
  }

  finalize();
  if (!config.output_path.empty()) {
    write_text_file(config.output_path,
                    emit_report(report, ReportFormat::json));
  }
  return report;
}

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    ordered_json j;
    j["schema"] = "necoc-report-v1";
    j["dataset"] = report.dataset_name;
    j["n_classes"] = report.n_classes;
    j["repetitions"] = report.repetitions;
    j["seed"] = report.seed;
    j["matrix_seed"] = report.matrix_seed;
    j["baseline"] = {{"accuracies", report.baseline_accuracies},
                     {"mean", report.baseline_mean},
                     {"std", report.baseline_std}};
    j["cells"] = ordered_json::array();
    for (const ReportCell& cell : report.cells) {
      ordered_json c;
      c["n_meta"] = cell.n_meta;
      c["n_learners"] = cell.n_learners;
      c["strategy"] = cell.strategy;
      c["seeds"] = cell.seeds;
      c["accuracies"] = cell.accuracies;
      c["mean_accuracy"] = cell.mean_accuracy;
      c["std_accuracy"] = cell.std_accuracy;
      c["baseline_mean"] = cell.baseline_mean;
      c["baseline_std"] = cell.baseline_std;
      c["wall_seconds"] = cell.wall_seconds;
      j["cells"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "n_meta,n_learners,strategy,repetitions,mean_accuracy,std_accuracy,"
         "baseline_mean,baseline_std,wall_seconds,seeds\n";
  for (const ReportCell& cell : report.cells) {
    out << cell.n_meta << ',' << cell.n_learners << ',' << cell.strategy << ','
        << cell.accuracies.size() << ',' << fmt_g9(cell.mean_accuracy) << ','
        << fmt_g9(cell.std_accuracy) << ',' << fmt_g9(cell.baseline_mean)
        << ',' << fmt_g9(cell.baseline_std) << ','
        << fmt_g9(cell.wall_seconds) << ',';
    for (std::size_t i = 0; i < cell.seeds.size(); ++i) {
      if (i > 0) out << ';';
      out << cell.seeds[i];
    }
    out << '\n';
  }
  return out.str();
}

ExperimentReport parse_report_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
  try {
    if (j.value("schema", "") != "necoc-report-v1") {
      throw ParseError("unexpected report schema");
    }
    ExperimentReport report;
    report.dataset_name = j.at("dataset");
    report.n_classes = j.at("n_classes");
    report.repetitions = j.at("repetitions");
    report.seed = j.at("seed");
    report.matrix_seed = j.at("matrix_seed");
    report.baseline_accuracies =
        j.at("baseline").at("accuracies").get<std::vector<double>>();
    report.baseline_mean = j.at("baseline").at("mean");
    report.baseline_std = j.at("baseline").at("std");
    for (const ordered_json& c : j.at("cells")) {
      ReportCell cell;
      cell.n_meta = c.at("n_meta");
      cell.n_learners = c.at("n_learners");
      cell.strategy = c.at("strategy");
      cell.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
      cell.accuracies = c.at("accuracies").get<std::vector<double>>();
      cell.mean_accuracy = c.at("mean_accuracy");
      cell.std_accuracy = c.at("std_accuracy");
      cell.baseline_mean = c.at("baseline_mean");
      cell.baseline_std = c.at("baseline_std");
      cell.wall_seconds = c.at("wall_seconds");
      report.cells.push_back(std::move(cell));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON missing fields: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed config JSON: ") + e.what());
  }
  try {
    ExperimentConfig config;
    const ordered_json d = j.value("dataset", ordered_json::object());
    config.dataset.source = d.value("source", "blobs");
    config.dataset.train_images = d.value("train_images", "");
    config.dataset.train_labels = d.value("train_labels", "");
    config.dataset.test_images = d.value("test_images", "");
    config.dataset.test_labels = d.value("test_labels", "");
    config.dataset.train_csv = d.value("train_csv", "");
    config.dataset.test_csv = d.value("test_csv", "");
    config.dataset.label_column = d.value("label_column", "label");
    config.dataset.blob_classes = d.value("blob_classes", 10);
    config.dataset.blob_train_per_class = d.value("blob_train_per_class", 100);
    config.dataset.blob_test_per_class = d.value("blob_test_per_class", 50);
    config.dataset.blob_dims = d.value("blob_dims", 16);
    config.dataset.blob_spread = d.value("blob_spread", 1.0);
    config.dataset.blob_seed = d.value("blob_seed", 0ULL);
    config.dataset.standardize = d.value("standardize", false);

    if (j.contains("network")) {
      const ordered_json& n = j.at("network");
      config.hidden_dims = n.value("hidden_dims", std::vector<int>{});
      config.activation = activation_from_name(n.value("activation", "relu"));
      config.init_scale = n.value("init_scale", 1.0);
    }

    if (j.contains("train")) {
      const ordered_json& t = j.at("train");
      config.train.optimizer =
          optimizer_from_name(t.value("optimizer", "adam"));
      config.train.base_lr = t.value("base_lr", config.train.base_lr);
      config.train.decay_rate = t.value("decay_rate", config.train.decay_rate);
      config.train.decay_step = t.value("decay_step", config.train.decay_step);
      config.train.warmup_iterations =
          t.value("warmup_iterations", config.train.warmup_iterations);
      if (t.contains("grad_clip")) {
        if (t.at("grad_clip").is_null()) {
          config.train.grad_clip = std::nullopt;
        } else {
          config.train.grad_clip = t.at("grad_clip").get<double>();
        }
      }
      config.train.batch_size = t.value("batch_size", config.train.batch_size);
      config.train.epochs = t.value("epochs", config.train.epochs);
      config.train.seed = t.value("seed", 0ULL);
      config.train.schedule =
          schedule_from_name(t.value("schedule", "per_epoch"));
    }

    const ordered_json m = j.value("matrix", ordered_json::object());
    config.matrix.n_meta_values = m.value("n_meta", std::vector<int>{});
    config.matrix.n_learners_values =
        m.value("n_learners", std::vector<int>{});
    config.matrix.matrix_seed = m.value("matrix_seed", 0ULL);

    config.strategies.clear();
    const std::vector<std::string> names =
        j.value("strategies", std::vector<std::string>{"no_share"});
    for (const std::string& name : names) {
      config.strategies.push_back(strategy_from_name(name));
    }
    config.shared_layer_count = j.value("shared_layer_count", 0);
    config.repetitions = j.value("repetitions", 1);
    config.dev_fraction = j.value("dev_fraction", 0.1);
    config.output_path = j.value("output", "");
    config.retrain_each_length = j.value("retrain_each_length", false);
    config.n_threads = j.value("n_threads", 1);
    if (j.contains("finetune_epochs") && !j.at("finetune_epochs").is_null()) {
      config.finetune_epochs = j.at("finetune_epochs").get<int>();
    }
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config JSON missing fields: ") + e.what());
  }
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
  ordered_json j;
  ordered_json d;
  d["source"] = config.dataset.source;
  if (config.dataset.source == "idx") {
    d["train_images"] = config.dataset.train_images;
    d["train_labels"] = config.dataset.train_labels;
    d["test_images"] = config.dataset.test_images;
    d["test_labels"] = config.dataset.test_labels;
  } else if (config.dataset.source == "csv") {
    d["train_csv"] = config.dataset.train_csv;
    d["test_csv"] = config.dataset.test_csv;
    d["label_column"] = config.dataset.label_column;
  } else {
    d["blob_classes"] = config.dataset.blob_classes;
    d["blob_train_per_class"] = config.dataset.blob_train_per_class;
    d["blob_test_per_class"] = config.dataset.blob_test_per_class;
    d["blob_dims"] = config.dataset.blob_dims;
    d["blob_spread"] = config.dataset.blob_spread;
    d["blob_seed"] = config.dataset.blob_seed;
  }
  d["standardize"] = config.dataset.standardize;
  j["dataset"] = std::move(d);

  j["network"] = {{"hidden_dims", config.hidden_dims},
                  {"activation", activation_name(config.activation)},
                  {"init_scale", config.init_scale}};

  ordered_json t;
  t["optimizer"] = optimizer_name(config.train.optimizer);
  t["base_lr"] = config.train.base_lr;
  t["decay_rate"] = config.train.decay_rate;
  t["decay_step"] = config.train.decay_step;
  t["warmup_iterations"] = config.train.warmup_iterations;
  if (config.train.grad_clip) {
    t["grad_clip"] = *config.train.grad_clip;
  } else {
    t["grad_clip"] = nullptr;
  }
  t["batch_size"] = config.train.batch_size;
  t["epochs"] = config.train.epochs;
  t["seed"] = config.train.seed;
  t["schedule"] = schedule_name(config.train.schedule);
  j["train"] = std::move(t);

  j["matrix"] = {{"n_meta", config.matrix.n_meta_values},
                 {"n_learners", config.matrix.n_learners_values},
                 {"matrix_seed", config.matrix.matrix_seed}};
  std::vector<std::string> strategy_names;
  for (SharingStrategy::Kind kind : config.strategies) {
    strategy_names.push_back(strategy_name(kind));
  }
  j["strategies"] = strategy_names;
  j["shared_layer_count"] = config.shared_layer_count;
  j["repetitions"] = config.repetitions;
  j["dev_fraction"] = config.dev_fraction;
  j["output"] = config.output_path;
  j["retrain_each_length"] = config.retrain_each_length;
  j["n_threads"] = config.n_threads;
  if (config.finetune_epochs) {
    j["finetune_epochs"] = *config.finetune_epochs;
  } else {
    j["finetune_epochs"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace necoc
