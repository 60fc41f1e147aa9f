#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "necoc/coding.hpp"
#include "necoc/decoding.hpp"
#include "necoc/ensemble.hpp"
#include "necoc/errors.hpp"
#include "necoc/seeding.hpp"

using namespace necoc;

namespace {

bool params_equal(const NetworkParams& a, const NetworkParams& b) {
  if (a.layer_count() != b.layer_count()) return false;
  for (int l = 0; l < a.layer_count(); ++l) {
    if (a.weights[l] != b.weights[l]) return false;
    if (a.biases[l] != b.biases[l]) return false;
  }
  return a.activation == b.activation;
}

bool models_equal(const EnsembleModel& a, const EnsembleModel& b) {
  if (a.heads.size() != b.heads.size()) return false;
  for (std::size_t i = 0; i < a.heads.size(); ++i)
    if (!params_equal(a.heads[i], b.heads[i])) return false;
  if (a.trunk.has_value() != b.trunk.has_value()) return false;
  if (a.trunk && !params_equal(*a.trunk, *b.trunk)) return false;
  return a.matrix.entries == b.matrix.entries;
}

NetworkSpec blob_spec(int input_dim, std::vector<int> hidden) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dims = std::move(hidden);
  spec.output_dim = 0;  // filled per use
  return spec;
}

TrainConfig quick_cfg(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.base_lr = 0.02;
  cfg.epochs = 8;
  cfg.seed = seed;
  return cfg;
}

std::string temp_dir(const std::string& stem) {
  const auto dir = std::filesystem::temp_directory_path() / stem;
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("relabel maps classes through the column partition") {
  MetaPartition p;
  p.class_to_meta = {2, 1, 2};
  p.subset_sizes = {1, 2};
  CHECK(relabel({0, 1, 2, 1, 0}, p) == std::vector<int>{1, 0, 1, 0, 1});
  CHECK_THROWS_AS(relabel({3}, p), RangeError);
}

TEST_CASE("strategy names roundtrip") {
  using Kind = SharingStrategy::Kind;
  CHECK(strategy_name(Kind::no_share) == "no_share");
  CHECK(strategy_name(Kind::partial_share) == "partial_share");
  CHECK(strategy_name(Kind::full_share) == "full_share");
  CHECK(strategy_from_name("no_share") == Kind::no_share);
  CHECK(strategy_from_name("partial_share") == Kind::partial_share);
  CHECK(strategy_from_name("full_share") == Kind::full_share);
  CHECK_THROWS_AS(strategy_from_name("some_share"), Error);
}

TEST_CASE("parameter_counts reproduces the documented toy case") {
  NetworkSpec spec = blob_spec(4, {3, 2});
  const ParamCountReport r = parameter_counts(spec, 3, 1, 2);
  // Layer scalar blocks: 4*3+3=15, 3*2+2=8, 2*2+2=6.
  CHECK(r.n_no_share == 3 * (15 + 8 + 6));
  CHECK(r.n_no_share == 87);
  CHECK(r.n_partial_share == 15 + 3 * (8 + 6));
  CHECK(r.n_partial_share == 57);
  CHECK(r.n_full_share == 15 + 8 + 3 * 6);
  CHECK(r.n_full_share == 41);
}

TEST_CASE("parameter_counts ordering and edge cases") {
  NetworkSpec spec = blob_spec(10, {8, 6, 4});
  const ParamCountReport single = parameter_counts(spec, 1, 1, 3);
  CHECK(single.n_no_share == single.n_partial_share);
  CHECK(single.n_no_share == single.n_full_share);

  for (int n_learners : {2, 7}) {
    for (int shared : {1, 2}) {
      const ParamCountReport r = parameter_counts(spec, n_learners, shared, 3);
      CHECK(r.n_no_share > r.n_partial_share);
      CHECK(r.n_partial_share > r.n_full_share);
    }
  }
  // Sharing everything up to the heads makes partial and full coincide.
  const ParamCountReport top = parameter_counts(spec, 4, 3, 3);
  CHECK(top.n_partial_share == top.n_full_share);

  CHECK_THROWS_AS(parameter_counts(spec, 0, 1, 3), InvalidStrategy);
  CHECK_THROWS_AS(parameter_counts(spec, 3, 0, 3), InvalidStrategy);
  CHECK_THROWS_AS(parameter_counts(spec, 3, 4, 3), InvalidStrategy);
  NetworkSpec flat = blob_spec(10, {});
  CHECK_THROWS_AS(parameter_counts(flat, 3, 1, 3), InvalidStrategy);
}

TEST_CASE("parameter_counts agrees with a shape-enumeration oracle") {
  NetworkSpec spec = blob_spec(7, {5, 4});
  const int n_meta = 3, n_learners = 5, shared = 1;
  // Enumerate per-layer scalar blocks for dims [7,5,4,3].
  const std::vector<int> dims = {7, 5, 4, n_meta};
  std::vector<long long> block;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    block.push_back(static_cast<long long>(dims[i]) * dims[i + 1] +
                    dims[i + 1]);
  const long long total = block[0] + block[1] + block[2];
  const ParamCountReport r = parameter_counts(spec, n_learners, shared, n_meta);
  CHECK(r.n_no_share == n_learners * total);
  CHECK(r.n_partial_share == block[0] + n_learners * (block[1] + block[2]));
  CHECK(r.n_full_share == block[0] + block[1] + n_learners * block[2]);
}

TEST_CASE("evaluate_accuracy counts matches") {
  CHECK(evaluate_accuracy({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(evaluate_accuracy({1, 2, 3}, {1, 0, 3}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(evaluate_accuracy({1}, {1, 2}), LengthMismatch);
  CHECK_THROWS_AS(evaluate_accuracy({}, {}), EmptyInput);
}

TEST_CASE("prefix_columns truncates while keeping metadata") {
  const CodingMatrix m = generate_coding_matrix(6, 8, 3, 21);
  const CodingMatrix p = prefix_columns(m, 3);
  CHECK(p.n_learners == 3);
  CHECK(p.n_classes == 6);
  CHECK(p.n_meta == 3);
  CHECK(p.seed == 21);
  CHECK(p.entries == m.entries.leftCols(3));
  CHECK_THROWS_AS(prefix_columns(m, 0), RangeError);
  CHECK_THROWS_AS(prefix_columns(m, 9), RangeError);
}

TEST_CASE("no_share training is thread-invariant and decodes through the matrix") {
  const Dataset train = synth_blobs(5, 20, 6, 2.0, 31);
  const Dataset test = synth_blobs(5, 10, 6, 2.0, 32);
  const CodingMatrix matrix = generate_coding_matrix(5, 7, 3, 3);
  NetworkSpec spec = blob_spec(6, {});
  SharingStrategy strategy;  // no_share

  const EnsembleModel m1 =
      train_ensemble(train, matrix, strategy, spec, quick_cfg(5), nullptr, 1);
  const EnsembleModel m3 =
      train_ensemble(train, matrix, strategy, spec, quick_cfg(5), nullptr, 3);
  CHECK(models_equal(m1, m3));
  CHECK(m1.trunk == std::nullopt);
  REQUIRE(m1.heads.size() == 7);
  for (const NetworkParams& head : m1.heads) {
    CHECK(head.weights.back().cols() == 3);
  }

  const auto codes = ensemble_codes(m1, test.features);
  REQUIRE(codes.size() == static_cast<std::size_t>(test.sample_count()));
  for (const PredictionVector& c : codes) {
    REQUIRE(c.size() == 7);
    for (int v : c) {
      CHECK(v >= 1);
      CHECK(v <= 3);
    }
  }

  const std::vector<int> preds = predict_ensemble(m1, test.features);
  const auto decoded = decode_batch(matrix, codes);
  for (std::size_t i = 0; i < preds.size(); ++i)
    CHECK(preds[i] == decoded[i].class_index);
  CHECK(predict_ensemble(m1, test.features, 3) == preds);
}

TEST_CASE("each no_share head matches a directly fitted learner") {
  const Dataset train = synth_blobs(4, 15, 5, 2.0, 77);
  const CodingMatrix matrix = generate_coding_matrix(4, 3, 2, 9);
  NetworkSpec spec = blob_spec(5, {});
  TrainConfig cfg = quick_cfg(41);

  const EnsembleModel model =
      train_ensemble(train, matrix, SharingStrategy{}, spec, cfg);
  for (int k = 0; k < matrix.n_learners; ++k) {
    const std::vector<int> meta_labels =
        relabel(train.labels, column_partition(matrix, k));
    NetworkSpec head_spec = spec;
    head_spec.output_dim = matrix.n_meta;
    TrainConfig head_cfg = cfg;
    head_cfg.seed = derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(k));
    const NetworkParams direct =
        fit(head_spec, head_cfg, train.features, meta_labels);
    CHECK(params_equal(model.heads[static_cast<std::size_t>(k)], direct));
  }
}

TEST_CASE("no_share prefix models equal shorter retrained models") {
  const Dataset train = synth_blobs(5, 12, 4, 2.0, 55);
  const CodingMatrix wide = generate_coding_matrix(5, 6, 3, 13);
  const CodingMatrix narrow = prefix_columns(wide, 3);
  NetworkSpec spec = blob_spec(4, {});
  const TrainConfig cfg = quick_cfg(19);

  const EnsembleModel full =
      train_ensemble(train, wide, SharingStrategy{}, spec, cfg);
  const EnsembleModel direct =
      train_ensemble(train, narrow, SharingStrategy{}, spec, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK(params_equal(full.heads[static_cast<std::size_t>(k)],
                       direct.heads[static_cast<std::size_t>(k)]));
}

TEST_CASE("shared strategies train and predict") {
  // One blob draw carved into train/dev/test so all three share the centers.
  const Dataset all = synth_blobs(4, 40, 5, 1.5, 3);
  const auto [trainval, test] = dev_split(all, 0.25, 9);
  const auto [train, dev] = dev_split(trainval, 0.2, 1);
  const CodingMatrix matrix = generate_coding_matrix(4, 5, 2, 8);
  NetworkSpec spec = blob_spec(5, {8, 6});

  SharingStrategy partial;
  partial.kind = SharingStrategy::Kind::partial_share;
  partial.shared_layer_count = 1;
  const EnsembleModel pm =
      train_ensemble(train, matrix, partial, spec, quick_cfg(2), &dev);
  REQUIRE(pm.trunk.has_value());
  CHECK(pm.trunk->layer_count() == 1);
  REQUIRE(pm.heads.size() == 5);
  CHECK(pm.heads[0].layer_count() == 2);
  const double pacc =
      evaluate_accuracy(predict_ensemble(pm, test.features), test.labels);
  CHECK(pacc > 0.5);

  SharingStrategy full;
  full.kind = SharingStrategy::Kind::full_share;
  const EnsembleModel fm =
      train_ensemble(train, matrix, full, spec, quick_cfg(2), &dev);
  REQUIRE(fm.trunk.has_value());
  CHECK(fm.trunk->layer_count() == 2);
  CHECK(fm.heads[0].layer_count() == 1);
  const double facc =
      evaluate_accuracy(predict_ensemble(fm, test.features), test.labels);
  CHECK(facc > 0.5);

  // Deterministic repeat.
  const EnsembleModel pm2 =
      train_ensemble(train, matrix, partial, spec, quick_cfg(2), &dev);
  CHECK(models_equal(pm, pm2));
}

TEST_CASE("invalid sharing configurations are rejected") {
  const Dataset train = synth_blobs(3, 10, 4, 1.0, 6);
  const CodingMatrix matrix = generate_coding_matrix(3, 3, 2, 0);
  NetworkSpec spec = blob_spec(4, {5});
  SharingStrategy bad;
  bad.kind = SharingStrategy::Kind::partial_share;
  bad.shared_layer_count = 2;
  CHECK_THROWS_AS(
      train_ensemble(train, matrix, bad, spec, quick_cfg(0)), InvalidStrategy);
  bad.shared_layer_count = 0;
  CHECK_THROWS_AS(
      train_ensemble(train, matrix, bad, spec, quick_cfg(0)), InvalidStrategy);
}

TEST_CASE("ensembles survive a save/load roundtrip") {
  const Dataset train = synth_blobs(4, 15, 4, 1.5, 12);
  const Dataset test = synth_blobs(4, 8, 4, 1.5, 13);
  const CodingMatrix matrix = generate_coding_matrix(4, 4, 2, 30);
  NetworkSpec spec = blob_spec(4, {6});

  SharingStrategy strategies[3];
  strategies[0].kind = SharingStrategy::Kind::no_share;
  strategies[1].kind = SharingStrategy::Kind::partial_share;
  strategies[1].shared_layer_count = 1;
  strategies[2].kind = SharingStrategy::Kind::full_share;

  for (const SharingStrategy& strategy : strategies) {
    const EnsembleModel model =
        train_ensemble(train, matrix, strategy, spec, quick_cfg(9));
    const std::string dir = temp_dir("necoc_ensemble_ckpt");
    save_ensemble(model, dir);
    const EnsembleModel back = load_ensemble(dir);
    CHECK(models_equal(model, back));
    CHECK(back.n_meta == model.n_meta);
    CHECK(back.strategy.kind == strategy.kind);
    CHECK(back.spec.input_dim == spec.input_dim);
    CHECK(predict_ensemble(back, test.features) ==
          predict_ensemble(model, test.features));
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("load_ensemble rejects broken checkpoints") {
  CHECK_THROWS_AS(load_ensemble(temp_dir("necoc_missing_ckpt")), Error);

  const Dataset train = synth_blobs(3, 10, 3, 1.0, 2);
  const CodingMatrix matrix = generate_coding_matrix(3, 3, 2, 4);
  NetworkSpec spec = blob_spec(3, {});
  const EnsembleModel model =
      train_ensemble(train, matrix, SharingStrategy{}, spec, quick_cfg(1));
  const std::string dir = temp_dir("necoc_bad_ckpt");
  save_ensemble(model, dir);
  std::filesystem::remove(std::filesystem::path(dir) / "head_001.bin");
  CHECK_THROWS_AS(load_ensemble(dir), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pretrain_single matches fit on the raw classes") {
  const Dataset all = synth_blobs(3, 20, 4, 1.5, 21);
  const auto [train, dev] = dev_split(all, 0.2, 5);
  NetworkSpec spec = blob_spec(4, {5});
  spec.output_dim = 3;
  const TrainConfig cfg = quick_cfg(33);
  const NetworkParams a = pretrain_single(spec, cfg, train, &dev);
  const NetworkParams b = fit(spec, cfg, train.features, train.labels,
                              &dev.features, &dev.labels);
  CHECK(params_equal(a, b));
}

}  // TEST_SUITE
