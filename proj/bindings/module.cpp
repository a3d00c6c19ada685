// Python bindings over the core operations: statevector simulation and
// gradients, parameter generation, the CNN, the synthetic dataset and the
// training entry points.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "qtcnn/data.hpp"
#include "qtcnn/error.hpp"
#include "qtcnn/nn.hpp"
#include "qtcnn/qsim.hpp"
#include "qtcnn/qtcore.hpp"
#include "qtcnn/runner.hpp"

namespace py = pybind11;
using namespace qtcnn;

namespace {

py::dict metrics_to_dict(const runner::Metrics& m) {
    py::dict d;
    d["loss"] = m.loss;
    d["accuracy"] = m.accuracy;
    d["true_positive"] = m.confusion.true_positive;
    d["true_negative"] = m.confusion.true_negative;
    d["false_positive"] = m.confusion.false_positive;
    d["false_negative"] = m.confusion.false_negative;
    return d;
}

py::dict record_to_dict(const runner::RunRecord& record) {
    py::list epochs;
    for (const runner::EpochMetrics& em : record.epochs) {
        py::dict e;
        e["train_loss"] = em.train_loss;
        e["train_accuracy"] = em.train_accuracy;
        e["val_loss"] = em.val_loss;
        e["val_accuracy"] = em.val_accuracy;
        e["seconds"] = em.seconds;
        epochs.append(e);
    }
    py::dict d;
    d["epochs"] = epochs;
    d["test"] = metrics_to_dict(record.test);
    d["trainable_params"] = record.trainable_params;
    d["parameter_ratio"] = record.parameter_ratio;
    d["best_epoch"] = record.best_epoch;
    return d;
}

}  // namespace

PYBIND11_MODULE(_qtcnn, m) {
    m.doc() = "quantum-trained CNN: statevector QNN simulation, quantum-to-classical "
              "parameter generation, and the training pipeline";

    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<Error>(m, "QtcnnError", PyExc_RuntimeError);

    // qsim
    m.def(
        "run_qnn",
        [](int n_qubits, int n_blocks, const std::vector<double>& phi) {
            return qsim::run_qnn(qsim::QnnConfig(n_qubits, n_blocks), phi);
        },
        py::arg("n_qubits"), py::arg("n_blocks"), py::arg("phi"),
        "Basis probabilities of the block-structured Ry/CNOT ansatz from |0...0>.");
    m.def(
        "grad_probabilities",
        [](int n_qubits, int n_blocks, const std::vector<double>& phi,
           const std::vector<double>& cotangent) {
            return qsim::grad_probabilities(qsim::QnnConfig(n_qubits, n_blocks), phi, cotangent);
        },
        py::arg("n_qubits"), py::arg("n_blocks"), py::arg("phi"), py::arg("cotangent"),
        "Exact reverse-mode dL/dphi given dL/dp.");
    m.def(
        "grad_parameter_shift",
        [](int n_qubits, int n_blocks, const std::vector<double>& phi, std::size_t param_index,
           std::size_t basis_index) {
            return qsim::grad_parameter_shift(qsim::QnnConfig(n_qubits, n_blocks), phi,
                                              param_index, basis_index);
        },
        py::arg("n_qubits"), py::arg("n_blocks"), py::arg("phi"), py::arg("param_index"),
        py::arg("basis_index"));
    m.def("sample_shots", &qsim::sample_shots, py::arg("probabilities"), py::arg("n_shots"),
          py::arg("seed"));

    // qtcore
    m.def("required_qubits", &qtcore::required_qubits, py::arg("m"));
    m.def("build_mapping_input", &qtcore::build_mapping_input, py::arg("basis_index"),
          py::arg("probability"), py::arg("n_qubits"));
    m.def("mapping_param_count", &qtcore::MappingModel::expected_params, py::arg("n_inputs"),
          py::arg("hidden"));
    m.def(
        "generate_theta",
        [](int n_qubits, int n_blocks, const std::vector<double>& phi,
           const std::vector<double>& gamma, int hidden, const std::array<double, 4>& scale,
           const std::array<double, 4>& shift, const nn::CnnArchitecture& arch) {
            qtcore::MappingModel mapping(n_qubits + 1, hidden, gamma);
            qtcore::ScalingModel scaling;
            scaling.scale = scale;
            scaling.shift = shift;
            return qtcore::generate_theta(qsim::QnnConfig(n_qubits, n_blocks), phi, mapping,
                                          scaling, arch);
        },
        py::arg("n_qubits"), py::arg("n_blocks"), py::arg("phi"), py::arg("gamma"),
        py::arg("hidden"), py::arg("scale"), py::arg("shift"), py::arg("arch"),
        "The full quantum-to-classical chain: circuit -> mapping model -> scaling model.");

    // nn
    py::class_<nn::CnnArchitecture>(m, "CnnArchitecture")
        .def(py::init<>())
        .def_readwrite("window_frames", &nn::CnnArchitecture::window_frames)
        .def_readwrite("feature_width", &nn::CnnArchitecture::feature_width)
        .def_readwrite("conv1_channels", &nn::CnnArchitecture::conv1_channels)
        .def_readwrite("conv1_kernel", &nn::CnnArchitecture::conv1_kernel)
        .def_readwrite("conv2_channels", &nn::CnnArchitecture::conv2_channels)
        .def_readwrite("conv2_kernel", &nn::CnnArchitecture::conv2_kernel)
        .def_readwrite("hidden_units", &nn::CnnArchitecture::hidden_units)
        .def_readwrite("output_units", &nn::CnnArchitecture::output_units)
        .def("param_count", &nn::CnnArchitecture::param_count)
        .def("flatten_size", &nn::CnnArchitecture::flatten_size);
    m.def("count_cnn_params", &nn::count_cnn_params, py::arg("arch"));
    m.def("cnn_forward", &nn::cnn_forward, py::arg("arch"), py::arg("theta"), py::arg("batch"),
          "Per-sample sigmoid outputs; batch is row-major, frame-major within a window.");
    m.def("bce_loss", &nn::bce_loss, py::arg("labels"), py::arg("predictions"));

    // data
    m.def(
        "synth_generate",
        [](std::size_t n_per_class, int window, int feature_width, double separation,
           std::uint64_t seed) {
            const data::WindowedDataset ds =
                data::synth_generate(n_per_class, window, feature_width, separation, seed);
            return py::make_tuple(ds.samples, ds.labels);
        },
        py::arg("n_per_class"), py::arg("window"), py::arg("feature_width"),
        py::arg("separation"), py::arg("seed"),
        "Two Gaussian classes in window space; returns (flat samples, labels).");
    m.def(
        "prepare_manifest",
        [](const std::string& csv_path, const std::string& manifest_path, int window,
           const std::array<double, 3>& ratios, std::uint64_t seed,
           const std::string& label_column, const std::string& segment_column) {
            data::PrepareOptions options;
            options.window = window;
            options.ratios = ratios;
            options.split_seed = seed;
            options.label_column = label_column;
            options.segment_column = segment_column;
            const data::PreparedDataset prepared = data::prepare_dataset(csv_path, options);
            data::save_manifest(prepared.manifest, manifest_path);
            py::dict d;
            d["train_windows"] = prepared.splits.train.size();
            d["validation_windows"] = prepared.splits.validation.size();
            d["test_windows"] = prepared.splits.test.size();
            d["label_names"] = prepared.manifest.label_names;
            d["feature_width"] = prepared.manifest.feature_names.size();
            return d;
        },
        py::arg("csv_path"), py::arg("manifest_path"), py::arg("window") = 5,
        py::arg("ratios") = std::array<double, 3>{0.8, 0.1, 0.1}, py::arg("seed") = 42,
        py::arg("label_column") = "LABEL", py::arg("segment_column") = "SEGMENT");

    // runner
    py::class_<runner::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_property(
            "mode",
            [](const runner::TrainConfig& c) { return runner::to_string(c.mode); },
            [](runner::TrainConfig& c, const std::string& s) {
                c.mode = runner::train_mode_from_string(s);
            })
        .def_readwrite("epochs", &runner::TrainConfig::epochs)
        .def_readwrite("batch_size", &runner::TrainConfig::batch_size)
        .def_readwrite("learning_rate", &runner::TrainConfig::learning_rate)
        .def_readwrite("n_blocks", &runner::TrainConfig::n_blocks)
        .def_readwrite("mapping_hidden", &runner::TrainConfig::mapping_hidden)
        .def_readwrite("arch", &runner::TrainConfig::arch)
        .def_property(
            "seed_init", [](const runner::TrainConfig& c) { return c.seeds.init; },
            [](runner::TrainConfig& c, std::uint64_t v) { c.seeds.init = v; })
        .def_property(
            "seed_shuffle", [](const runner::TrainConfig& c) { return c.seeds.shuffle; },
            [](runner::TrainConfig& c, std::uint64_t v) { c.seeds.shuffle = v; })
        .def_property(
            "seed_split", [](const runner::TrainConfig& c) { return c.seeds.split; },
            [](runner::TrainConfig& c, std::uint64_t v) { c.seeds.split = v; })
        .def_property(
            "manifest",
            [](const runner::TrainConfig& c) { return c.dataset.manifest_path; },
            [](runner::TrainConfig& c, const std::string& path) {
                c.dataset.kind = runner::DatasetSpec::Kind::manifest;
                c.dataset.manifest_path = path;
            })
        .def_property(
            "synth_per_class",
            [](const runner::TrainConfig& c) { return c.dataset.synth_per_class; },
            [](runner::TrainConfig& c, std::size_t n) {
                c.dataset.kind = runner::DatasetSpec::Kind::synth;
                c.dataset.synth_per_class = n;
            })
        .def_property(
            "synth_separation",
            [](const runner::TrainConfig& c) { return c.dataset.synth_separation; },
            [](runner::TrainConfig& c, double s) { c.dataset.synth_separation = s; })
        .def("to_json", [](const runner::TrainConfig& c) {
            return runner::config_to_flat_json(c);
        });
    m.def(
        "train",
        [](const runner::TrainConfig& config) {
            return record_to_dict(runner::train(config));
        },
        py::arg("config"),
        "Runs the configured training (qt or classical) and returns the run record.");
    m.def("params_report", &runner::params_report, py::arg("arch"), py::arg("n_blocks") = 12,
          py::arg("mapping_hidden") = 20);
    m.def("config_from_json", &runner::config_from_flat_json, py::arg("text"));
}
