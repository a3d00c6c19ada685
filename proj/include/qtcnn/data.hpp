#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qtcnn::data {

// Parsed feature CSV: one row per audio frame, string labels as found.
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<double> values;  // rows x width, row-major
    std::vector<std::string> labels;
    std::vector<int> segments;  // from the SEGMENT column; all 0 when absent

    std::size_t width() const { return feature_names.size(); }
    std::size_t rows() const { return labels.size(); }
};

// Table after label encoding; label_names[k] is the string mapped to k
// (lexicographically smaller string -> 0).
struct EncodedTable {
    std::vector<std::string> feature_names;
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<int> segments;
    std::array<std::string, 2> label_names;

    std::size_t width() const { return feature_names.size(); }
    std::size_t rows() const { return labels.size(); }
};

// Per-feature min/max observed on the fitting rows.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;

    // Features with max == min; these map to 0 everywhere.
    std::vector<std::size_t> degenerate_features() const;
};

// Stride-1 windows of w consecutive frames; samples are row-major
// n_windows x (window * feature_width), frame-major within a window.
struct WindowedDataset {
    int window = 0;
    int feature_width = 0;
    std::vector<double> samples;
    std::vector<int> labels;
    std::vector<std::size_t> start_rows;  // source row of each window's first frame
    std::vector<std::string> warnings;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_width() const {
        return static_cast<std::size_t>(window) * feature_width;
    }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct DatasetSplits {
    WindowedDataset train;
    WindowedDataset validation;
    WindowedDataset test;
};

FeatureTable load_feature_csv(const std::string& path, const std::string& label_column = "LABEL",
                              const std::string& segment_column = "SEGMENT");

EncodedTable encode_labels(const FeatureTable& table);

// Fit on the given rows only (the training split).
ScalerParams minmax_fit(const EncodedTable& table, const std::vector<std::size_t>& fit_rows);

// Maps each feature so the fitted range spans [0, 1]; degenerate features
// map to 0; out-of-range values clamp to [0, 1].
EncodedTable minmax_apply(const ScalerParams& params, const EncodedTable& table);

// Windows never straddle a segment or label change; segments shorter than
// w contribute zero windows and a warning.
WindowedDataset make_windows(const EncodedTable& table, int window);

// Seeded per-class shuffle, then proportional allocation by largest
// remainder; per-split class counts stay within 1 of proportional.
SplitIndices stratified_split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

WindowedDataset take(const WindowedDataset& ds, const std::vector<std::size_t>& indices);

// Two Gaussian blobs in window space whose means sit `separation` apart
// (unit variance per coordinate). Desk-scale stand-in for the real corpus.
WindowedDataset synth_generate(std::size_t n_per_class, int window, int feature_width,
                               double separation, std::uint64_t seed);

// Everything needed to rebuild the exact training inputs from the source
// CSV: scaler, label mapping, window size, split membership, seed.
struct DatasetManifest {
    int version = 1;
    std::string source_csv;
    std::string label_column;
    std::string segment_column;
    std::array<std::string, 2> label_names;
    std::vector<std::string> feature_names;
    int window = 5;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 0;
    ScalerParams scaler;
    SplitIndices splits;
};

struct PrepareOptions {
    std::string label_column = "LABEL";
    std::string segment_column = "SEGMENT";
    int window = 5;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::uint64_t split_seed = 42;
};

struct PreparedDataset {
    DatasetManifest manifest;
    DatasetSplits splits;
    std::vector<std::string> warnings;
};

// encode -> window -> stratified split -> fit scaler on train rows ->
// apply -> materialize split datasets.
PreparedDataset prepare_dataset(const std::string& csv_path, const PrepareOptions& options);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Rebuilds the split datasets recorded in a manifest from its source CSV.
DatasetSplits load_dataset(const DatasetManifest& manifest);

}  // namespace qtcnn::data
