#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qtcnn/data.hpp"
#include "qtcnn/nn.hpp"
#include "qtcnn/qsim.hpp"
#include "qtcnn/qtcore.hpp"

namespace qtcnn::runner {

enum class TrainMode { qt, classical };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct SeedSet {
    std::uint64_t init = 1;
    std::uint64_t shuffle = 2;
    std::uint64_t split = 3;

    bool operator==(const SeedSet&) const = default;
};

// Where the training windows come from: a prepared manifest or the
// synthetic generator.
struct DatasetSpec {
    enum class Kind { manifest, synth } kind = Kind::synth;
    std::string manifest_path;
    std::size_t synth_per_class = 500;
    double synth_separation = 6.0;
    std::array<double, 3> synth_ratios{0.8, 0.1, 0.1};

    bool operator==(const DatasetSpec&) const = default;
};

struct TrainConfig {
    TrainMode mode = TrainMode::qt;
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int n_blocks = 12;
    int mapping_hidden = 20;
    nn::CnnArchitecture arch;
    SeedSet seeds;
    DatasetSpec dataset;

    bool operator==(const TrainConfig&) const = default;
};

struct ConfusionCounts {
    std::size_t true_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;

    bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
    double loss = 0.0;
    double accuracy = 0.0;
    ConfusionCounts confusion;

    bool operator==(const Metrics&) const = default;
};

struct EpochMetrics {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;  // wall clock; excluded from determinism comparisons
};

// The trainable bundle of the QT path.
struct QtParams {
    qsim::QnnConfig qnn;
    qsim::PhiVector phi;
    qtcore::MappingModel mapping = qtcore::MappingModel::zeros(1, 1);
    qtcore::ScalingModel scaling;
};

struct Checkpoint {
    TrainMode mode = TrainMode::classical;
    nn::CnnArchitecture arch;
    nn::ThetaVector theta;  // classical mode
    QtParams qt;            // qt mode
};

struct RunRecord {
    std::vector<EpochMetrics> epochs;
    Metrics test;
    std::size_t trainable_params = 0;
    double parameter_ratio = 1.0;
    int best_epoch = 0;  // 0 = initialization
    TrainConfig config;
    Checkpoint best;

    // Equality of every recorded metric, ignoring wall-clock times.
    bool metrics_equal(const RunRecord& other) const;
};

// Deterministic pass over one split; a prediction >= 0.5 counts as class 1.
Metrics evaluate(const nn::CnnArchitecture& arch, const nn::ThetaVector& theta,
                 const data::WindowedDataset& split);
Metrics evaluate(const QtParams& params, const nn::CnnArchitecture& arch,
                 const data::WindowedDataset& split);

// Materializes the splits named by the config (synth or manifest).
data::DatasetSplits load_splits(const TrainConfig& config);

// Invoked after every epoch (1-based); purely observational.
using EpochCallback = std::function<void(int, const EpochMetrics&)>;

RunRecord train_qt(const TrainConfig& config, const data::DatasetSplits& splits,
                   const EpochCallback& on_epoch = {});
RunRecord train_classical(const TrainConfig& config, const data::DatasetSplits& splits,
                          const EpochCallback& on_epoch = {});
// Loads data per the config and dispatches on mode.
RunRecord train(const TrainConfig& config, const EpochCallback& on_epoch = {});

struct SweepRow {
    int n_blocks = 0;  // 0 marks the classical baseline
    std::size_t trainable_params = 0;
    double parameter_ratio = 1.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // one per block count, then the baseline
    TrainConfig config;
};

// Shared splits and seeds across every entry plus the classical baseline.
SweepResult sweep_blocks(const TrainConfig& config, const std::vector<int>& block_list);

void save_checkpoint(const Checkpoint& ckpt, const TrainConfig& config, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void write_run_record(const RunRecord& record, const std::string& path);
void write_metrics_csv(const RunRecord& record, const std::string& path);
void write_sweep_csv(const SweepResult& sweep, const std::string& path);
std::string format_sweep_table(const SweepResult& sweep);

// Component-by-component parameter accounting, including the deviation of
// the published reference totals from the exact breakdown.
std::string params_report(const nn::CnnArchitecture& arch, int n_blocks, int mapping_hidden);

// Flat-key JSON round trip of the effective configuration; absent keys keep
// their defaults on the way in.
std::string config_to_flat_json(const TrainConfig& config, int indent = 2);
TrainConfig config_from_flat_json(const std::string& text);

}  // namespace qtcnn::runner
