#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "necoc/coding.hpp"
#include "necoc/data.hpp"
#include "necoc/decoding.hpp"
#include "necoc/ensemble.hpp"
#include "necoc/errors.hpp"
#include "necoc/experiment.hpp"
#include "necoc/learners.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_necoc, m) {
  m.doc() = "N-ary error correcting output code ensembles";
  m.attr("__version__") = "0.1.0";

  py::register_exception<necoc::Error>(m, "NecocError");

  // ---- coding ------------------------------------------------------------
  py::class_<necoc::CodingMatrix>(m, "CodingMatrix")
      .def_property_readonly(
          "entries",
          [](const necoc::CodingMatrix& mat) { return mat.entries; })
      .def_readonly("n_classes", &necoc::CodingMatrix::n_classes)
      .def_readonly("n_learners", &necoc::CodingMatrix::n_learners)
      .def_readonly("n_meta", &necoc::CodingMatrix::n_meta)
      .def_readonly("seed", &necoc::CodingMatrix::seed)
      .def("__repr__", [](const necoc::CodingMatrix& mat) {
        return "CodingMatrix(" + std::to_string(mat.n_classes) + "x" +
               std::to_string(mat.n_learners) + ", n_meta=" +
               std::to_string(mat.n_meta) + ")";
      });

  py::class_<necoc::MetaPartition>(m, "MetaPartition")
      .def_readonly("class_to_meta", &necoc::MetaPartition::class_to_meta)
      .def_readonly("subset_sizes", &necoc::MetaPartition::subset_sizes);

  m.def("generate_coding_matrix", &necoc::generate_coding_matrix,
        py::arg("n_classes"), py::arg("n_learners"), py::arg("n_meta"),
        py::arg("seed") = 0);
  m.def("min_row_distance", &necoc::min_row_distance, py::arg("matrix"));
  m.def("mean_row_distance", &necoc::mean_row_distance, py::arg("matrix"));
  m.def("class_merge_degree", &necoc::class_merge_degree, py::arg("n_classes"),
        py::arg("n_meta"));
  m.def("suggested_learner_range", &necoc::suggested_learner_range,
        py::arg("n_classes"));
  m.def(
      "validate",
      [](const necoc::CodingMatrix& mat) {
        std::vector<std::string> messages;
        for (const necoc::Violation& v : necoc::validate(mat).violations) {
          messages.push_back(v.message);
        }
        return messages;
      },
      py::arg("matrix"), "Invariant violations; empty when the matrix is ok");
  m.def("column_partition", &necoc::column_partition, py::arg("matrix"),
        py::arg("col"));
  m.def("write_matrix_file", &necoc::write_matrix_file, py::arg("matrix"),
        py::arg("path"));
  m.def("read_matrix_file", &necoc::read_matrix_file, py::arg("path"));

  // ---- decoding ----------------------------------------------------------
  py::class_<necoc::DecodeResult>(m, "DecodeResult")
      .def_readonly("class_index", &necoc::DecodeResult::class_index)
      .def_readonly("distance", &necoc::DecodeResult::distance)
      .def_readonly("tie_count", &necoc::DecodeResult::tie_count)
      .def("__repr__", [](const necoc::DecodeResult& r) {
        return "DecodeResult(class_index=" + std::to_string(r.class_index) +
               ", distance=" + std::to_string(r.distance) + ", tie_count=" +
               std::to_string(r.tie_count) + ")";
      });

  m.def("hamming_distance", &necoc::hamming_distance, py::arg("a"),
        py::arg("b"));
  m.def("decode", &necoc::decode, py::arg("matrix"), py::arg("prediction"));
  m.def("decode_batch", &necoc::decode_batch, py::arg("matrix"),
        py::arg("predictions"), py::arg("n_threads") = 1);

  // ---- learners ----------------------------------------------------------
  py::enum_<necoc::Activation>(m, "ActivationKind")
      .value("relu", necoc::Activation::relu)
      .value("tanh", necoc::Activation::tanh);
  py::enum_<necoc::Optimizer>(m, "OptimizerKind")
      .value("sgd", necoc::Optimizer::sgd)
      .value("adam", necoc::Optimizer::adam);
  py::enum_<necoc::ScheduleKind>(m, "ScheduleKind")
      .value("per_epoch", necoc::ScheduleKind::per_epoch)
      .value("per_iteration_after_warmup",
             necoc::ScheduleKind::per_iteration_after_warmup);

  py::class_<necoc::NetworkSpec>(m, "NetworkSpec")
      .def(py::init([](int input_dim, std::vector<int> hidden_dims,
                       int output_dim, necoc::Activation activation,
                       double init_scale) {
             necoc::NetworkSpec spec;
             spec.input_dim = input_dim;
             spec.hidden_dims = std::move(hidden_dims);
             spec.output_dim = output_dim;
             spec.activation = activation;
             spec.init_scale = init_scale;
             return spec;
           }),
           py::arg("input_dim"), py::arg("hidden_dims"), py::arg("output_dim"),
           py::arg("activation") = necoc::Activation::relu,
           py::arg("init_scale") = 1.0)
      .def_readwrite("input_dim", &necoc::NetworkSpec::input_dim)
      .def_readwrite("hidden_dims", &necoc::NetworkSpec::hidden_dims)
      .def_readwrite("output_dim", &necoc::NetworkSpec::output_dim)
      .def_readwrite("activation", &necoc::NetworkSpec::activation)
      .def_readwrite("init_scale", &necoc::NetworkSpec::init_scale);

  py::class_<necoc::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("optimizer", &necoc::TrainConfig::optimizer)
      .def_readwrite("base_lr", &necoc::TrainConfig::base_lr)
      .def_readwrite("decay_rate", &necoc::TrainConfig::decay_rate)
      .def_readwrite("decay_step", &necoc::TrainConfig::decay_step)
      .def_readwrite("warmup_iterations",
                     &necoc::TrainConfig::warmup_iterations)
      .def_readwrite("grad_clip", &necoc::TrainConfig::grad_clip)
      .def_readwrite("batch_size", &necoc::TrainConfig::batch_size)
      .def_readwrite("epochs", &necoc::TrainConfig::epochs)
      .def_readwrite("seed", &necoc::TrainConfig::seed)
      .def_readwrite("schedule", &necoc::TrainConfig::schedule);

  py::class_<necoc::NetworkParams>(m, "NetworkParams")
      .def_property_readonly("layer_count",
                             &necoc::NetworkParams::layer_count)
      .def_property_readonly("scalar_count",
                             &necoc::NetworkParams::scalar_count)
      .def_property_readonly(
          "weights",
          [](const necoc::NetworkParams& p) { return p.weights; })
      .def_property_readonly(
          "biases", [](const necoc::NetworkParams& p) { return p.biases; });

  m.def("init_params", &necoc::init_params, py::arg("spec"), py::arg("seed"));
  m.def(
      "fit",
      [](const necoc::NetworkSpec& spec, const necoc::TrainConfig& cfg,
         const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
         std::optional<Eigen::MatrixXd> dev_x,
         std::optional<std::vector<int>> dev_y) {
        return necoc::fit(spec, cfg, train_x, train_y,
                          dev_x ? &*dev_x : nullptr, dev_y ? &*dev_y : nullptr);
      },
      py::arg("spec"), py::arg("cfg"), py::arg("train_x"), py::arg("train_y"),
      py::arg("dev_x") = std::nullopt, py::arg("dev_y") = std::nullopt);
  m.def("predict", &necoc::predict, py::arg("params"), py::arg("features"));
  m.def("lr_at", &necoc::lr_at, py::arg("cfg"), py::arg("t"));
  m.def("write_params", &necoc::write_params, py::arg("params"),
        py::arg("path"));
  m.def("read_params", &necoc::read_params, py::arg("path"));

  // ---- data --------------------------------------------------------------
  py::class_<necoc::Dataset>(m, "Dataset")
      .def_property_readonly(
          "features", [](const necoc::Dataset& d) { return d.features; })
      .def_property_readonly("labels",
                             [](const necoc::Dataset& d) { return d.labels; })
      .def_readonly("n_classes", &necoc::Dataset::n_classes)
      .def_readonly("name", &necoc::Dataset::name)
      .def("__len__",
           [](const necoc::Dataset& d) { return d.sample_count(); })
      .def("__repr__", [](const necoc::Dataset& d) {
        return "Dataset('" + d.name + "', " +
               std::to_string(d.sample_count()) + " samples, " +
               std::to_string(d.n_classes) + " classes)";
      });

  m.def("load_idx", &necoc::load_idx, py::arg("image_path"),
        py::arg("label_path"));
  m.def(
      "load_csv",
      [](const std::string& path, const std::string& label_column) {
        std::map<int, int> mapping;
        necoc::Dataset d = necoc::load_csv(path, label_column, &mapping);
        return py::make_tuple(std::move(d), mapping);
      },
      py::arg("path"), py::arg("label_column") = "label",
      "Returns (dataset, original-to-dense label mapping)");
  m.def("synth_blobs", &necoc::synth_blobs, py::arg("n_classes"),
        py::arg("per_class"), py::arg("dims"), py::arg("spread"),
        py::arg("seed") = 0);
  m.def("dev_split", &necoc::dev_split, py::arg("dataset"),
        py::arg("fraction"), py::arg("seed") = 0);
  m.def(
      "standardize",
      [](const necoc::Dataset& train, const std::vector<necoc::Dataset>& others) {
        necoc::StandardizeResult r = necoc::standardize(train, others);
        return py::make_tuple(std::move(r.train), std::move(r.others), r.mean,
                              r.stddev);
      },
      py::arg("train"), py::arg("others") = std::vector<necoc::Dataset>{},
      "Returns (train, others, mean, std)");

  // ---- ensemble ----------------------------------------------------------
  py::enum_<necoc::SharingStrategy::Kind>(m, "Sharing")
      .value("no_share", necoc::SharingStrategy::Kind::no_share)
      .value("partial_share", necoc::SharingStrategy::Kind::partial_share)
      .value("full_share", necoc::SharingStrategy::Kind::full_share);

  py::class_<necoc::SharingStrategy>(m, "SharingStrategy")
      .def(py::init([](necoc::SharingStrategy::Kind kind,
                       int shared_layer_count) {
             necoc::SharingStrategy s;
             s.kind = kind;
             s.shared_layer_count = shared_layer_count;
             return s;
           }),
           py::arg("kind"), py::arg("shared_layer_count") = 0)
      .def_readwrite("kind", &necoc::SharingStrategy::kind)
      .def_readwrite("shared_layer_count",
                     &necoc::SharingStrategy::shared_layer_count);

  py::class_<necoc::EnsembleModel>(m, "EnsembleModel")
      .def_property_readonly(
          "matrix", [](const necoc::EnsembleModel& e) { return e.matrix; })
      .def_property_readonly(
          "n_learners",
          [](const necoc::EnsembleModel& e) { return e.matrix.n_learners; })
      .def_readonly("n_meta", &necoc::EnsembleModel::n_meta)
      .def_readonly("seed", &necoc::EnsembleModel::seed);

  m.def("relabel", &necoc::relabel, py::arg("labels"), py::arg("partition"));
  m.def(
      "pretrain_single",
      [](const necoc::NetworkSpec& spec, const necoc::TrainConfig& cfg,
         const necoc::Dataset& train, std::optional<necoc::Dataset> dev) {
        return necoc::pretrain_single(spec, cfg, train, dev ? &*dev : nullptr);
      },
      py::arg("spec"), py::arg("cfg"), py::arg("train"),
      py::arg("dev") = std::nullopt);
  m.def(
      "train_ensemble",
      [](const necoc::Dataset& dataset, const necoc::CodingMatrix& matrix,
         const necoc::SharingStrategy& strategy, const necoc::NetworkSpec& spec,
         const necoc::TrainConfig& cfg, std::optional<necoc::Dataset> dev,
         int n_threads, std::optional<int> finetune_epochs) {
        return necoc::train_ensemble(dataset, matrix, strategy, spec, cfg,
                                     dev ? &*dev : nullptr, n_threads,
                                     finetune_epochs);
      },
      py::arg("dataset"), py::arg("matrix"), py::arg("strategy"),
      py::arg("spec"), py::arg("cfg"), py::arg("dev") = std::nullopt,
      py::arg("n_threads") = 1, py::arg("finetune_epochs") = std::nullopt);
  m.def("ensemble_codes", &necoc::ensemble_codes, py::arg("model"),
        py::arg("features"));
  m.def("predict_ensemble", &necoc::predict_ensemble, py::arg("model"),
        py::arg("features"), py::arg("n_threads") = 1);
  m.def(
      "parameter_counts",
      [](const necoc::NetworkSpec& spec, int n_learners,
         int shared_layer_count, int n_meta) {
        const necoc::ParamCountReport r =
            necoc::parameter_counts(spec, n_learners, shared_layer_count,
                                    n_meta);
        return py::make_tuple(r.n_no_share, r.n_partial_share, r.n_full_share);
      },
      py::arg("spec"), py::arg("n_learners"), py::arg("shared_layer_count"),
      py::arg("n_meta"), "Returns (no_share, partial_share, full_share)");
  m.def("evaluate_accuracy", &necoc::evaluate_accuracy, py::arg("predictions"),
        py::arg("labels"));
  m.def("prefix_columns", &necoc::prefix_columns, py::arg("matrix"),
        py::arg("k"));
  m.def("save_ensemble", &necoc::save_ensemble, py::arg("model"),
        py::arg("dir"));
  m.def("load_ensemble", &necoc::load_ensemble, py::arg("dir"));

  // ---- experiments -------------------------------------------------------
  m.def(
      "run_sweep",
      [](const std::string& config_json) {
        const necoc::ExperimentReport report =
            necoc::run_experiment(necoc::parse_experiment_config(config_json));
        return necoc::emit_report(report, necoc::ReportFormat::json);
      },
      py::arg("config_json"),
      "Runs a sweep from a JSON config string; returns the JSON report");
}
