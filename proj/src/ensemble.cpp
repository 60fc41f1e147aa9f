#include "necoc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

namespace necoc {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Seed roles under the ensemble's base seed.
constexpr std::uint64_t kSeedPretrain = 1;
constexpr std::uint64_t kSeedLearner = 2;
constexpr std::uint64_t kSeedJointShuffle = 3;
constexpr std::uint64_t kSeedHeadInit = 4;

int hidden_count(const NetworkSpec& spec) {
  return static_cast<int>(spec.hidden_dims.size());
}

// Shared feature layers for a strategy; no_share shares none, full_share all.
int shared_layers_of(const SharingStrategy& strategy, const NetworkSpec& spec) {
  switch (strategy.kind) {
    case SharingStrategy::Kind::no_share:
      return 0;
    case SharingStrategy::Kind::full_share:
      return hidden_count(spec);
    case SharingStrategy::Kind::partial_share: {
      const int h = hidden_count(spec);
      if (strategy.shared_layer_count < 1 || strategy.shared_layer_count > h) {
        throw InvalidStrategy(
            "partial_share needs 1 <= shared_layer_count <= " +
            std::to_string(h) + ", got " +
            std::to_string(strategy.shared_layer_count));
      }
      return strategy.shared_layer_count;
    }
  }
  throw InvalidStrategy("unknown sharing strategy");
}

NetworkSpec head_spec_of(const NetworkSpec& spec, int n_meta) {
  NetworkSpec head = spec;
  head.output_dim = n_meta;
  return head;
}

// Sub-network spec covering layers [from, H] of the full spec.
NetworkSpec tail_spec_of(const NetworkSpec& full, int from) {
  NetworkSpec tail;
  tail.activation = full.activation;
  tail.init_scale = full.init_scale;
  tail.input_dim = from == 0 ? full.input_dim
                             : full.hidden_dims[static_cast<std::size_t>(from - 1)];
  tail.hidden_dims.assign(full.hidden_dims.begin() + from,
                          full.hidden_dims.end());
  tail.output_dim = full.output_dim;
  return tail;
}

NetworkParams slice_layers(const NetworkParams& params, int from, int to) {
  NetworkParams out;
  out.activation = params.activation;
  out.weights.assign(params.weights.begin() + from, params.weights.begin() + to);
  out.biases.assign(params.biases.begin() + from, params.biases.begin() + to);
  return out;
}

std::vector<PredictionVector> codes_of(const NetworkParams* trunk,
                                       const std::vector<NetworkParams>& heads,
                                       const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd* input = &features;
  Eigen::MatrixXd trunk_out;
  if (trunk != nullptr && trunk->layer_count() > 0) {
    trunk_out = segment_forward(*trunk, features, true).output();
    input = &trunk_out;
  }
  std::vector<PredictionVector> codes(
      static_cast<std::size_t>(features.rows()),
      PredictionVector(heads.size(), 0));
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const std::vector<int> meta = predict(heads[k], *input);
    for (std::size_t i = 0; i < meta.size(); ++i) {
      codes[i][k] = meta[i] + 1;  // back to the 1-based alphabet
    }
  }
  return codes;
}

double ensemble_accuracy_of(const CodingMatrix& matrix,
                            const NetworkParams* trunk,
                            const std::vector<NetworkParams>& heads,
                            const Eigen::MatrixXd& features,
                            const std::vector<int>& labels) {
  const std::vector<PredictionVector> codes = codes_of(trunk, heads, features);
  const std::vector<DecodeResult> decoded = decode_batch(matrix, codes);
  std::vector<int> predictions(decoded.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    predictions[i] = decoded[i].class_index;
  }
  return evaluate_accuracy(predictions, labels);
}

void check_dataset_against(const Dataset& d, const CodingMatrix& matrix,
                           const char* what) {
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] < 0 || d.labels[i] >= matrix.n_classes) {
      throw RangeError(std::string(what) + " label " +
                       std::to_string(d.labels[i]) + " at sample " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(matrix.n_classes) + ")");
    }
  }
}

void train_no_share(EnsembleModel& model, const Dataset& dataset,
                    const Dataset* dev, const TrainConfig& cfg, int n_threads) {
  const int n_learners = model.matrix.n_learners;
  model.heads.resize(static_cast<std::size_t>(n_learners));
  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(n_learners));

  auto train_one = [&](int k) {
    try {
      const MetaPartition partition = column_partition(model.matrix, k);
      const std::vector<int> meta_train = relabel(dataset.labels, partition);
      std::vector<int> meta_dev;
      if (dev != nullptr) meta_dev = relabel(dev->labels, partition);
      TrainConfig cfg_k = cfg;
      cfg_k.seed = derive_seed(cfg.seed, kSeedLearner,
                               static_cast<std::uint64_t>(k));
      model.heads[static_cast<std::size_t>(k)] =
          fit(model.spec, cfg_k, dataset.features, meta_train,
              dev != nullptr ? &dev->features : nullptr,
              dev != nullptr ? &meta_dev : nullptr);
    } catch (const NonFiniteLoss& e) {
      failures[static_cast<std::size_t>(k)] = std::make_exception_ptr(
          NonFiniteLoss("learner " + std::to_string(k) + ": " + e.what()));
    } catch (...) {
      failures[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min(n_threads, n_learners));
  if (workers == 1) {
    for (int k = 0; k < n_learners; ++k) train_one(k);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int k = w; k < n_learners; k += workers) train_one(k);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

void train_shared(EnsembleModel& model, const Dataset& dataset,
                  const Dataset* dev, const NetworkSpec& spec,
                  const TrainConfig& cfg, int shared, int finetune_epochs) {
  const int n_learners = model.matrix.n_learners;
  const int n_meta = model.matrix.n_meta;

  // Trunk initialization from a single model over the original classes.
  NetworkParams trunk;
  trunk.activation = spec.activation;
  if (shared > 0) {
    NetworkSpec single = spec;
    single.output_dim = model.matrix.n_classes;
    TrainConfig pre_cfg = cfg;
    pre_cfg.seed = derive_seed(cfg.seed, kSeedPretrain);
    const NetworkParams pretrained =
        pretrain_single(single, pre_cfg, dataset, dev);
    trunk = slice_layers(pretrained, 0, shared);
  }

  const NetworkSpec tail_spec = tail_spec_of(model.spec, shared);
  std::vector<NetworkParams> tails;
  tails.reserve(static_cast<std::size_t>(n_learners));
  for (int k = 0; k < n_learners; ++k) {
    tails.push_back(init_params(
        tail_spec,
        derive_seed(cfg.seed, kSeedHeadInit, static_cast<std::uint64_t>(k))));
  }

  std::vector<std::vector<int>> meta_train(
      static_cast<std::size_t>(n_learners));
  std::vector<std::vector<int>> meta_batch(
      static_cast<std::size_t>(n_learners));
  for (int k = 0; k < n_learners; ++k) {
    meta_train[static_cast<std::size_t>(k)] =
        relabel(dataset.labels, column_partition(model.matrix, k));
  }

  std::vector<NetworkParams*> group;
  group.push_back(&trunk);
  for (NetworkParams& t : tails) group.push_back(&t);
  OptimizerState opt(cfg.optimizer, group);
  RandomStream shuffle_rng(derive_seed(cfg.seed, kSeedJointShuffle));

  const int n = dataset.sample_count();
  const int batch_size = std::max(1, std::min(cfg.batch_size, n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  NetworkParams best_trunk = trunk;
  std::vector<NetworkParams> best_tails = tails;
  double best_acc = -1.0;
  long long iteration = 0;

  Eigen::MatrixXd bx;
  std::vector<NetworkParams> tail_grads(static_cast<std::size_t>(n_learners));
  for (int epoch = 0; epoch < finetune_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int start = 0; start < n; start += batch_size) {
      const int count = std::min(batch_size, n - start);
      bx.resize(count, dataset.features.cols());
      for (int k = 0; k < n_learners; ++k) {
        meta_batch[static_cast<std::size_t>(k)].resize(
            static_cast<std::size_t>(count));
      }
      for (int i = 0; i < count; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        bx.row(i) = dataset.features.row(src);
        for (int k = 0; k < n_learners; ++k) {
          meta_batch[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
              meta_train[static_cast<std::size_t>(k)]
                        [static_cast<std::size_t>(src)];
        }
      }

      SegmentCache trunk_cache;
      const Eigen::MatrixXd* feat = &bx;
      if (shared > 0) {
        trunk_cache = segment_forward(trunk, bx, true);
        feat = &trunk_cache.output();
      }

      // Head losses are summed; the trunk gradient accumulates in fixed
      // column order so results do not depend on scheduling.
      Eigen::MatrixXd feat_grad = Eigen::MatrixXd::Zero(count, feat->cols());
      for (int k = 0; k < n_learners; ++k) {
        SegmentCache tail_cache =
            segment_forward(tails[static_cast<std::size_t>(k)], *feat, false);
        Eigen::MatrixXd dlogits;
        const double loss =
            softmax_loss_grad(tail_cache.output(),
                              meta_batch[static_cast<std::size_t>(k)], dlogits);
        if (!std::isfinite(loss)) {
          throw NonFiniteLoss("learner " + std::to_string(k) +
                              ": loss became non-finite at epoch " +
                              std::to_string(epoch) + ", iteration " +
                              std::to_string(iteration));
        }
        SegmentBackward back = segment_backward(
            tails[static_cast<std::size_t>(k)], tail_cache, dlogits, false);
        tail_grads[static_cast<std::size_t>(k)] = std::move(back.grads);
        feat_grad += back.input_grad;
      }

      NetworkParams trunk_grads;
      trunk_grads.activation = trunk.activation;
      if (shared > 0) {
        trunk_grads =
            segment_backward(trunk, trunk_cache, feat_grad, true).grads;
      }

      if (cfg.grad_clip) {
        std::vector<NetworkParams*> grad_group;
        grad_group.push_back(&trunk_grads);
        for (NetworkParams& g : tail_grads) grad_group.push_back(&g);
        clip_gradients(grad_group, *cfg.grad_clip);
      }

      std::vector<const NetworkParams*> grad_view;
      grad_view.push_back(&trunk_grads);
      for (const NetworkParams& g : tail_grads) grad_view.push_back(&g);
      const long long t =
          cfg.schedule == ScheduleKind::per_epoch ? epoch : iteration;
      opt.step(group, grad_view, lr_at(cfg, t));
      ++iteration;
    }

    if (dev != nullptr) {
      const double acc = ensemble_accuracy_of(
          model.matrix, shared > 0 ? &trunk : nullptr, tails, dev->features,
          dev->labels);
      if (acc > best_acc) {
        best_acc = acc;
        best_trunk = trunk;
        best_tails = tails;
      }
    }
  }

  if (dev != nullptr && finetune_epochs > 0) {
    trunk = std::move(best_trunk);
    tails = std::move(best_tails);
  }
  model.trunk = std::move(trunk);
  model.heads = std::move(tails);
  model.n_meta = n_meta;
}

}  // namespace

std::string strategy_name(SharingStrategy::Kind kind) {
  switch (kind) {
    case SharingStrategy::Kind::no_share:
      return "no_share";
    case SharingStrategy::Kind::partial_share:
      return "partial_share";
    case SharingStrategy::Kind::full_share:
      return "full_share";
  }
  throw InvalidStrategy("unknown sharing strategy");
}

SharingStrategy::Kind strategy_from_name(const std::string& name) {
  if (name == "no_share") return SharingStrategy::Kind::no_share;
  if (name == "partial_share") return SharingStrategy::Kind::partial_share;
  if (name == "full_share") return SharingStrategy::Kind::full_share;
  throw InvalidStrategy("unknown sharing strategy '" + name + "'");
}

std::vector<int> relabel(const std::vector<int>& labels,
                         const MetaPartition& partition) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= partition.n_classes()) {
      throw RangeError("label " + std::to_string(labels[i]) + " at sample " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(partition.n_classes()) + ")");
    }
    out[i] = partition.class_to_meta[static_cast<std::size_t>(labels[i])] - 1;
  }
  return out;
}

NetworkParams pretrain_single(const NetworkSpec& spec, const TrainConfig& cfg,
                              const Dataset& train, const Dataset* dev) {
  return fit(spec, cfg, train.features, train.labels,
             dev != nullptr ? &dev->features : nullptr,
             dev != nullptr ? &dev->labels : nullptr);
}

EnsembleModel train_ensemble(const Dataset& dataset, const CodingMatrix& matrix,
                             const SharingStrategy& strategy,
                             const NetworkSpec& spec, const TrainConfig& cfg,
                             const Dataset* dev, int n_threads,
                             std::optional<int> finetune_epochs) {
  check_dataset_against(dataset, matrix, "train");
  if (dev != nullptr) check_dataset_against(*dev, matrix, "dev");
  const int shared = shared_layers_of(strategy, spec);

  EnsembleModel model;
  model.matrix = matrix;
  model.strategy = strategy;
  model.spec = head_spec_of(spec, matrix.n_meta);
  model.n_meta = matrix.n_meta;
  model.seed = cfg.seed;

  if (strategy.kind == SharingStrategy::Kind::no_share) {
    train_no_share(model, dataset, dev, cfg, n_threads);
  } else {
    train_shared(model, dataset, dev, spec, cfg, shared,
                 finetune_epochs.value_or(cfg.epochs));
  }
  return model;
}

std::vector<PredictionVector> ensemble_codes(const EnsembleModel& model,
                                             const Eigen::MatrixXd& features) {
  const NetworkParams* trunk =
      model.trunk.has_value() ? &model.trunk.value() : nullptr;
  return codes_of(trunk, model.heads, features);
}

std::vector<int> predict_ensemble(const EnsembleModel& model,
                                  const Eigen::MatrixXd& features,
                                  int n_threads) {
  const std::vector<PredictionVector> codes = ensemble_codes(model, features);
  const std::vector<DecodeResult> decoded =
      decode_batch(model.matrix, codes, n_threads);
  std::vector<int> out(decoded.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    out[i] = decoded[i].class_index;
  }
  return out;
}

ParamCountReport parameter_counts(const NetworkSpec& spec, int n_learners,
                                  int shared_layer_count, int n_meta) {
  if (n_learners < 1) {
    throw InvalidStrategy("n_learners must be >= 1, got " +
                          std::to_string(n_learners));
  }
  const int h = hidden_count(spec);
  if (h < 1) {
    throw InvalidStrategy(
        "parameter_counts needs at least one feature layer; got a "
        "hidden-layer-free spec");
  }
  if (shared_layer_count < 1 || shared_layer_count > h) {
    throw InvalidStrategy("shared_layer_count must lie in [1, " +
                          std::to_string(h) + "], got " +
                          std::to_string(shared_layer_count));
  }

  std::vector<long long> dims;
  dims.push_back(spec.input_dim);
  for (int d : spec.hidden_dims) dims.push_back(d);
  dims.push_back(n_meta);
  std::vector<long long> layer_sizes;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layer_sizes.push_back(dims[l] * dims[l + 1] + dims[l + 1]);
  }

  auto sum_range = [&](int from, int to) {
    long long s = 0;
    for (int l = from; l < to; ++l) {
      s += layer_sizes[static_cast<std::size_t>(l)];
    }
    return s;
  };
  const int total_layers = h + 1;
  const long long full_net = sum_range(0, total_layers);
  const long long nl = n_learners;

  ParamCountReport report;
  report.n_no_share = nl * full_net;
  report.n_partial_share = sum_range(0, shared_layer_count) +
                           nl * sum_range(shared_layer_count, total_layers);
  report.n_full_share = sum_range(0, h) + nl * sum_range(h, total_layers);
  return report;
}

double evaluate_accuracy(const std::vector<int>& predictions,
                         const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw LengthMismatch(std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(labels.size()) +
                         " labels");
  }
  if (predictions.empty()) throw EmptyInput("nothing to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

CodingMatrix prefix_columns(const CodingMatrix& m, int k) {
  if (k < 1 || k > m.n_learners) {
    throw RangeError("prefix length " + std::to_string(k) +
                     " outside [1, " + std::to_string(m.n_learners) + "]");
  }
  CodingMatrix out = m;
  out.entries = m.entries.leftCols(k).eval();
  out.n_learners = k;
  return out;
}

void save_ensemble(const EnsembleModel& model, const std::string& dir) {
  fs::create_directories(dir);
  write_matrix_file(model.matrix, (fs::path(dir) / "matrix.csv").string());

  const bool has_trunk =
      model.trunk.has_value() && model.trunk->layer_count() > 0;
  ordered_json manifest;
  manifest["schema"] = "necoc-ensemble-v1";
  manifest["kind"] = strategy_name(model.strategy.kind);
  manifest["shared_layer_count"] = model.strategy.shared_layer_count;
  manifest["n_meta"] = model.n_meta;
  manifest["n_learners"] = model.matrix.n_learners;
  manifest["seed"] = model.seed;
  manifest["spec"] = {{"input_dim", model.spec.input_dim},
                      {"hidden_dims", model.spec.hidden_dims},
                      {"output_dim", model.spec.output_dim},
                      {"activation", activation_name(model.spec.activation)},
                      {"init_scale", model.spec.init_scale}};
  manifest["trunk_layers"] =
      has_trunk ? model.trunk->layer_count() : 0;
  std::vector<std::uint64_t> learner_seeds;
  for (int k = 0; k < model.matrix.n_learners; ++k) {
    const std::uint64_t role =
        model.strategy.kind == SharingStrategy::Kind::no_share ? kSeedLearner
                                                               : kSeedHeadInit;
    learner_seeds.push_back(
        derive_seed(model.seed, role, static_cast<std::uint64_t>(k)));
  }
  manifest["learner_seeds"] = learner_seeds;

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest in " + dir);

  if (has_trunk) {
    write_params(*model.trunk, (fs::path(dir) / "trunk.bin").string());
  }
  for (std::size_t k = 0; k < model.heads.size(); ++k) {
    std::ostringstream name;
    name << "head_" << std::setw(3) << std::setfill('0') << k << ".bin";
    write_params(model.heads[k], (fs::path(dir) / name.str()).string());
  }
}

EnsembleModel load_ensemble(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot open manifest in " + dir);
  ordered_json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("schema", "") != "necoc-ensemble-v1") {
    throw ParseError("unexpected manifest schema in " + dir);
  }

  EnsembleModel model;
  model.matrix = read_matrix_file((root / "matrix.csv").string());
  model.strategy.kind = strategy_from_name(manifest.at("kind"));
  model.strategy.shared_layer_count = manifest.at("shared_layer_count");
  model.n_meta = manifest.at("n_meta");
  model.seed = manifest.at("seed");
  const ordered_json& spec = manifest.at("spec");
  model.spec.input_dim = spec.at("input_dim");
  model.spec.hidden_dims = spec.at("hidden_dims").get<std::vector<int>>();
  model.spec.output_dim = spec.at("output_dim");
  model.spec.activation = activation_from_name(spec.at("activation"));
  model.spec.init_scale = spec.at("init_scale");

  const int trunk_layers = manifest.at("trunk_layers");
  if (trunk_layers > 0) {
    NetworkParams trunk = read_params((root / "trunk.bin").string());
    trunk.activation = model.spec.activation;
    if (trunk.layer_count() != trunk_layers) {
      throw ParseError("trunk in " + dir + " has " +
                       std::to_string(trunk.layer_count()) +
                       " layers, manifest says " +
                       std::to_string(trunk_layers));
    }
    model.trunk = std::move(trunk);
  } else if (model.strategy.kind != SharingStrategy::Kind::no_share) {
    NetworkParams empty;
    empty.activation = model.spec.activation;
    model.trunk = std::move(empty);
  }

  const int n_learners = manifest.at("n_learners");
  if (n_learners != model.matrix.n_learners) {
    throw CountMismatch("manifest lists " + std::to_string(n_learners) +
                        " learners but matrix has " +
                        std::to_string(model.matrix.n_learners) + " columns");
  }
  for (int k = 0; k < n_learners; ++k) {
    std::ostringstream name;
    name << "head_" << std::setw(3) << std::setfill('0') << k << ".bin";
    NetworkParams head = read_params((root / name.str()).string());
    head.activation = model.spec.activation;
    if (head.layer_count() == 0 ||
        head.weights.back().cols() != model.n_meta) {
      throw ShapeMismatch("head " + std::to_string(k) + " in " + dir +
                          " does not end in a " + std::to_string(model.n_meta) +
                          "-way classifier");
    }
    model.heads.push_back(std::move(head));
  }
  return model;
}

}  // namespace necoc
