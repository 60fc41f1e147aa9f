// Acceptance harness: one check per release criterion, one PASS/FAIL line
// each. Needs the extracted MNIST subset directory as its only argument.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "necoc/coding.hpp"
#include "necoc/decoding.hpp"
#include "necoc/ensemble.hpp"
#include "necoc/errors.hpp"
#include "necoc/experiment.hpp"
#include "necoc/learners.hpp"
#include "necoc/seeding.hpp"

using namespace necoc;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buffer[512];
  std::vsnprintf(buffer, sizeof(buffer), pattern, args);
  va_end(args);
  return std::string(buffer);
}

// --- criterion 1: structural invariants over a 1000-matrix grid -----------

Outcome check_coding_invariants() {
  const auto start = Clock::now();
  struct Shape {
    int n_classes, n_meta, n_learners;
  };
  std::vector<Shape> shapes;
  for (int n_classes : {4, 6, 10, 26}) {
    std::set<int> metas = {2, 3, (n_classes + 1) / 2, n_classes};
    for (int n_meta : metas)
      for (int n_learners : {5, 15, 31})
        shapes.push_back({n_classes, n_meta, n_learners});
  }

  int made = 0;
  for (int round = 0; made < 1000; ++round) {
    for (std::size_t i = 0; i < shapes.size() && made < 1000; ++i) {
      const Shape& s = shapes[i];
      const CodingMatrix m = generate_coding_matrix(
          s.n_classes, s.n_learners, s.n_meta,
          derive_seed(7, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(i)));
      const ValidationReport rep = validate(m);
      if (!rep.violations.empty()) {
        return {false, fmt("matrix (%d,%d,%d) violates: %s", s.n_classes,
                           s.n_learners, s.n_meta,
                           rep.violations.front().message.c_str())};
      }
      ++made;
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 10.0)
    return {false, fmt("%d matrices valid but took %.2fs (limit 10s)", made,
                       elapsed)};
  return {true, fmt("%d matrices valid in %.2fs (limit 10s)", made, elapsed)};
}

// --- criterion 2: exhaustive decoding agreement ---------------------------

DecodeResult reference_decode(const CodingMatrix& m, const PredictionVector& p) {
  DecodeResult best;
  best.distance = m.n_learners + 1;
  for (int row = 0; row < m.n_classes; ++row) {
    int d = 0;
    for (int col = 0; col < m.n_learners; ++col)
      if (m.entries(row, col) != p[col]) ++d;
    if (d < best.distance) {
      best = {row, d, 1};
    } else if (d == best.distance) {
      ++best.tie_count;
    }
  }
  return best;
}

Outcome check_decoding_oracle() {
  long long vectors = 0;
  for (int n_classes = 2; n_classes <= 6; ++n_classes) {
    for (int n_meta = 2; n_meta <= std::min(4, n_classes); ++n_meta) {
      for (int n_learners = 1; n_learners <= 5; ++n_learners) {
        CodingMatrix m;
        try {
          m = generate_coding_matrix(n_classes, n_learners, n_meta, 4242);
        } catch (const RowCollision&) {
          continue;  // shape cannot host pairwise distinct rows
        }
        long long total = 1;
        for (int i = 0; i < n_learners; ++i) total *= n_meta;
        PredictionVector p(static_cast<std::size_t>(n_learners));
        for (long long idx = 0; idx < total; ++idx) {
          long long rest = idx;
          for (int i = 0; i < n_learners; ++i) {
            p[static_cast<std::size_t>(i)] =
                static_cast<int>(rest % n_meta) + 1;
            rest /= n_meta;
          }
          const DecodeResult got = decode(m, p);
          const DecodeResult want = reference_decode(m, p);
          ++vectors;
          if (!(got == want)) {
            return {false,
                    fmt("mismatch at (%d,%d,%d): got class %d, oracle %d",
                        n_classes, n_learners, n_meta, got.class_index,
                        want.class_index)};
          }
        }
      }
    }
  }
  return {true, fmt("%lld prediction vectors agree with the oracle", vectors)};
}

// --- criterion 3: gradient checks -----------------------------------------

double max_gradient_error(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkParams params = init_params(spec, seed);
  RandomStream rng(seed + 17);
  LabeledBatch batch;
  batch.features.resize(8, spec.input_dim);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < spec.input_dim; ++j)
      batch.features(i, j) = rng.next_gaussian();
  batch.labels.resize(8);
  for (int& y : batch.labels)
    y = static_cast<int>(rng.next_below(spec.output_dim));

  const NetworkParams analytic = gradients(params, batch);
  auto loss = [&]() {
    const ForwardResult fr = forward(params, batch.features);
    return cross_entropy_loss(fr.probabilities, batch.labels);
  };
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& slot, double grad) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss();
    slot = saved - h;
    const double down = loss();
    slot = saved;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad) /
                                std::max({1.0, std::abs(fd), std::abs(grad)}));
  };
  for (int l = 0; l < params.layer_count(); ++l) {
    for (int r = 0; r < params.weights[l].rows(); ++r)
      for (int c = 0; c < params.weights[l].cols(); ++c)
        probe(params.weights[l](r, c), analytic.weights[l](r, c));
    for (int r = 0; r < params.biases[l].size(); ++r)
      probe(params.biases[l](r), analytic.biases[l](r));
  }
  return worst;
}

Outcome check_gradients() {
  const auto start = Clock::now();
  NetworkSpec a;
  a.input_dim = 4;
  a.hidden_dims = {3};
  a.output_dim = 3;
  NetworkSpec b;
  b.input_dim = 6;
  b.hidden_dims = {5, 4};
  b.output_dim = 2;
  b.activation = Activation::tanh;
  NetworkSpec c;
  c.input_dim = 5;
  c.output_dim = 4;

  double worst = 0.0;
  for (const NetworkSpec& spec : {a, b, c})
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL})
      worst = std::max(worst, max_gradient_error(spec, seed));
  const double elapsed = seconds_since(start);
  if (worst >= 1e-4)
    return {false, fmt("worst relative error %.2e (limit 1e-4)", worst)};
  if (elapsed >= 30.0)
    return {false, fmt("took %.2fs (limit 30s)", elapsed)};
  return {true, fmt("worst relative error %.2e over 3 specs x 3 seeds in %.2fs",
                    worst, elapsed)};
}

// --- criterion 4: parameter count ordering --------------------------------

Outcome check_parameter_ordering() {
  NetworkSpec toy;
  toy.input_dim = 4;
  toy.hidden_dims = {3, 2};
  const ParamCountReport t = parameter_counts(toy, 3, 1, 2);
  if (t.n_no_share != 87 || t.n_partial_share != 57 || t.n_full_share != 41) {
    return {false, fmt("toy counts %lld/%lld/%lld, expected 87/57/41",
                       t.n_no_share, t.n_partial_share, t.n_full_share)};
  }

  NetworkSpec mnist;
  mnist.input_dim = 784;
  mnist.hidden_dims = {128, 64};
  for (int n_meta : {3, 10}) {
    for (int n_learners : {2, 10, 60}) {
      const ParamCountReport r = parameter_counts(mnist, n_learners, 1, n_meta);
      if (!(r.n_no_share > r.n_partial_share &&
            r.n_partial_share > r.n_full_share)) {
        return {false,
                fmt("ordering broken at N=%d, N_L=%d: %lld / %lld / %lld",
                    n_meta, n_learners, r.n_no_share, r.n_partial_share,
                    r.n_full_share)};
      }
    }
  }
  return {true, "toy 87>57>41 and [784,128,64] specs strictly ordered"};
}

// --- criterion 5: published formula values --------------------------------

Outcome check_formulas() {
  auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  if (!close(class_merge_degree(10, 3), 0.7) ||
      !close(class_merge_degree(10, 4), 0.6) ||
      !close(class_merge_degree(10, 5), 0.5) ||
      !close(class_merge_degree(10, 8), 0.2) ||
      std::abs(class_merge_degree(102, 95) - 0.069) > 0.001 ||
      !close(class_merge_degree(100, 95), 0.05)) {
    return {false, "class_merge_degree deviates from published values"};
  }

  TrainConfig per_epoch;
  per_epoch.schedule = ScheduleKind::per_epoch;
  per_epoch.base_lr = 0.001;
  per_epoch.decay_rate = 0.05;
  TrainConfig warm;
  warm.schedule = ScheduleKind::per_iteration_after_warmup;
  warm.base_lr = 0.002;
  warm.decay_rate = 0.05;
  warm.decay_step = 500;
  warm.warmup_iterations = 5000;
  if (!close(lr_at(per_epoch, 0), 0.001) ||
      !close(lr_at(per_epoch, 20), 0.0005) ||
      !close(lr_at(warm, 4999), 0.002)) {
    return {false, "lr_at deviates from the documented hand cases"};
  }
  return {true, "merge degrees and schedule values match hand arithmetic"};
}

// --- criteria 6 and 8: blob trends ----------------------------------------

ExperimentConfig blob_trend_config() {
  ExperimentConfig config;
  config.dataset.blob_classes = 10;
  config.dataset.blob_train_per_class = 20;
  config.dataset.blob_test_per_class = 200;
  config.dataset.blob_dims = 24;
  config.dataset.blob_spread = 8.5;
  config.dataset.blob_seed = 77;
  config.train.optimizer = Optimizer::adam;
  config.train.base_lr = 0.01;
  config.train.epochs = 15;
  config.train.batch_size = 32;
  config.train.seed = 0;
  config.matrix.n_meta_values = {4};
  config.matrix.n_learners_values = {5, 31};
  config.matrix.matrix_seed = 101;
  config.repetitions = 5;
  config.dev_fraction = 0.1;
  return config;
}

struct TrendResults {
  Outcome trend1;
  Outcome trend3;
};

TrendResults check_blob_trends() {
  const auto start = Clock::now();
  const ExperimentReport report = run_experiment(blob_trend_config());
  const double elapsed = seconds_since(start);

  const ReportCell* at5 = nullptr;
  const ReportCell* at31 = nullptr;
  for (const ReportCell& cell : report.cells) {
    if (cell.n_learners == 5) at5 = &cell;
    if (cell.n_learners == 31) at31 = &cell;
  }
  TrendResults out;
  if (at5 == nullptr || at31 == nullptr) {
    out.trend1 = {false, "sweep is missing the N_L=5 or N_L=31 cell"};
    out.trend3 = out.trend1;
    return out;
  }

  const double single = report.baseline_mean;
  const double gain = at31->mean_accuracy - single;
  if (elapsed >= 300.0) {
    out.trend1 = {false, fmt("took %.1fs (limit 300s)", elapsed)};
  } else if (single < 0.80 || single > 0.90) {
    out.trend1 = {false,
                  fmt("single baseline %.4f outside [0.80, 0.90]", single)};
  } else if (gain < 0.01) {
    out.trend1 = {false, fmt("ensemble gain %.4f below 1 point (single %.4f, "
                             "ensemble %.4f)",
                             gain, single, at31->mean_accuracy)};
  } else {
    out.trend1 = {true, fmt("single %.4f, N_L=31 ensemble %.4f (+%.2f points) "
                            "over 5 seeds in %.1fs",
                            single, at31->mean_accuracy, 100.0 * gain,
                            elapsed)};
  }

  if (at31->mean_accuracy >= at5->mean_accuracy) {
    out.trend3 = {true, fmt("mean accuracy rises with code length: %.4f at "
                            "N_L=5, %.4f at N_L=31",
                            at5->mean_accuracy, at31->mean_accuracy)};
  } else {
    out.trend3 = {false, fmt("mean accuracy %.4f at N_L=31 below %.4f at "
                             "N_L=5",
                             at31->mean_accuracy, at5->mean_accuracy)};
  }
  return out;
}

// --- criterion 7: MNIST subset trend --------------------------------------

Outcome check_mnist_trend(const std::string& data_dir) {
  const auto start = Clock::now();
  ExperimentConfig config;
  config.dataset.source = "idx";
  config.dataset.train_images = data_dir + "/train-images-idx3-ubyte";
  config.dataset.train_labels = data_dir + "/train-labels-idx1-ubyte";
  config.dataset.test_images = data_dir + "/t10k-images-idx3-ubyte";
  config.dataset.test_labels = data_dir + "/t10k-labels-idx1-ubyte";
  config.hidden_dims = {64};
  config.train.optimizer = Optimizer::adam;
  config.train.base_lr = 0.003;
  config.train.epochs = 10;
  config.train.batch_size = 128;
  config.train.seed = 0;
  config.matrix.n_meta_values = {3};
  config.matrix.n_learners_values = {15};
  config.matrix.matrix_seed = 55;
  config.repetitions = 3;
  config.dev_fraction = 0.1;

  const ExperimentReport report = run_experiment(config);
  const double elapsed = seconds_since(start);
  if (report.cells.size() != 1)
    return {false, fmt("expected 1 cell, found %zu", report.cells.size())};

  const double single = report.baseline_mean;
  const double ensemble = report.cells.front().mean_accuracy;
  const double gain = ensemble - single;
  if (elapsed >= 1200.0)
    return {false, fmt("took %.0fs (limit 1200s)", elapsed)};
  if (gain < 0.003)
    return {false, fmt("ensemble gain %.4f below 0.3 points (single %.4f, "
                       "ensemble %.4f)",
                       gain, single, ensemble)};
  return {true, fmt("single %.4f, 15-learner ensemble %.4f (+%.2f points) "
                    "over 3 seeds in %.0fs",
                    single, ensemble, 100.0 * gain, elapsed)};
}

// --- criterion 9: byte-identical reports ----------------------------------

std::string canonical_json(const ExperimentReport& report) {
  ExperimentReport scrubbed = report;
  for (ReportCell& cell : scrubbed.cells) cell.wall_seconds = 0.0;
  return emit_report(scrubbed, ReportFormat::json);
}

Outcome check_determinism() {
  ExperimentConfig config;
  config.dataset.blob_classes = 6;
  config.dataset.blob_train_per_class = 15;
  config.dataset.blob_test_per_class = 10;
  config.dataset.blob_dims = 8;
  config.dataset.blob_spread = 2.0;
  config.dataset.blob_seed = 21;
  config.train.epochs = 5;
  config.train.base_lr = 0.02;
  config.train.seed = 9;
  config.matrix.n_meta_values = {3};
  config.matrix.n_learners_values = {3, 7};
  config.matrix.matrix_seed = 2;
  config.repetitions = 2;
  config.dev_fraction = 0.2;

  const std::string first = canonical_json(run_experiment(config));
  const std::string second = canonical_json(run_experiment(config));
  if (first != second)
    return {false, "two identical runs differ outside wall-clock fields"};

  config.n_threads = 4;
  const std::string threaded = canonical_json(run_experiment(config));
  if (first != threaded)
    return {false, "4-thread run differs from the single-thread report"};
  return {true, "reports byte-identical across runs and thread counts"};
}

int g_failures = 0;

void report_outcome(int index, const std::string& name, const Outcome& o) {
  if (!o.pass) ++g_failures;
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", index,
              name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

Outcome guarded(Outcome (*fn)()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("unexpected error: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <mnist-data-dir>\n", argv[0]);
    return 2;
  }
  const std::string data_dir = argv[1];

  report_outcome(1, "coding invariants", guarded(check_coding_invariants));
  report_outcome(2, "decoding oracle", guarded(check_decoding_oracle));
  report_outcome(3, "gradient checks", guarded(check_gradients));
  report_outcome(4, "parameter ordering", guarded(check_parameter_ordering));
  report_outcome(5, "formula values", guarded(check_formulas));

  TrendResults trends;
  try {
    trends = check_blob_trends();
  } catch (const std::exception& e) {
    trends.trend1 = {false, std::string("unexpected error: ") + e.what()};
    trends.trend3 = trends.trend1;
  }
  report_outcome(6, "blob trend (ensemble beats single)", trends.trend1);

  Outcome mnist;
  try {
    mnist = check_mnist_trend(data_dir);
  } catch (const std::exception& e) {
    mnist = {false, std::string("unexpected error: ") + e.what()};
  }
  report_outcome(7, "mnist trend (ensemble beats single)", mnist);

  report_outcome(8, "blob trend (accuracy grows with code length)",
                 trends.trend3);
  report_outcome(9, "report determinism", guarded(check_determinism));

  if (g_failures > 0) {
    std::printf("%d of 9 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
