#include "qtcnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qtcnn/error.hpp"
#include "qtcnn/rng.hpp"

namespace qtcnn::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Maximal runs of constant (segment id, label); windows never cross them.
template <typename Label>
std::vector<std::pair<std::size_t, std::size_t>> contiguous_runs(
    const std::vector<Label>& labels, const std::vector<int>& segments) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= labels.size(); ++i) {
        if (i == labels.size() || labels[i] != labels[begin] || segments[i] != segments[begin]) {
            runs.emplace_back(begin, i);
            begin = i;
        }
    }
    return runs;
}

}  // namespace

std::vector<std::size_t> ScalerParams::degenerate_features() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < min.size(); ++c) {
        if (max[c] <= min[c]) out.push_back(c);
    }
    return out;
}

FeatureTable load_feature_csv(const std::string& path, const std::string& label_column,
                              const std::string& segment_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
    const auto header = split_csv_line(line);

    int label_idx = -1;
    int segment_idx = -1;
    std::vector<int> feature_cols;
    FeatureTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name.empty()) continue;  // unnamed columns (exported row indices) are skipped
        if (name == label_column) {
            label_idx = static_cast<int>(c);
        } else if (name == segment_column) {
            segment_idx = static_cast<int>(c);
        } else {
            feature_cols.push_back(static_cast<int>(c));
            table.feature_names.push_back(name);
        }
    }
    if (label_idx < 0) throw SchemaError(path + ": no \"" + label_column + "\" column");
    if (feature_cols.empty()) throw SchemaError(path + ": no feature columns");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            const std::string cell = trim(cells[feature_cols[k]]);
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                table.values.push_back(v);
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + ", column \"" +
                                 table.feature_names[k] + "\": not numeric: \"" + cell + "\"");
            }
        }
        table.labels.push_back(trim(cells[label_idx]));
        if (segment_idx >= 0) {
            const std::string cell = trim(cells[segment_idx]);
            try {
                table.segments.push_back(std::stoi(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + ", column \"" +
                                 segment_column + "\": not an integer: \"" + cell + "\"");
            }
        } else {
            table.segments.push_back(0);
        }
    }
    if (table.rows() == 0) throw SchemaError(path + ": no data rows");
    return table;
}

EncodedTable encode_labels(const FeatureTable& table) {
    std::set<std::string> classes(table.labels.begin(), table.labels.end());
    if (classes.size() != 2) {
        std::string list;
        for (const auto& c : classes) list += (list.empty() ? "\"" : ", \"") + c + "\"";
        throw SchemaError("expected exactly 2 classes, found " + std::to_string(classes.size()) +
                          ": " + list);
    }
    EncodedTable out;
    out.feature_names = table.feature_names;
    out.values = table.values;
    out.segments = table.segments;
    out.label_names = {*classes.begin(), *std::next(classes.begin())};
    out.labels.reserve(table.rows());
    for (const auto& l : table.labels) {
        out.labels.push_back(l == out.label_names[0] ? 0 : 1);
    }
    return out;
}

ScalerParams minmax_fit(const EncodedTable& table, const std::vector<std::size_t>& fit_rows) {
    if (fit_rows.empty()) throw InvalidArgument("scaler fit needs at least one row");
    const std::size_t width = table.width();
    ScalerParams params;
    params.min.assign(width, std::numeric_limits<double>::infinity());
    params.max.assign(width, -std::numeric_limits<double>::infinity());
    for (std::size_t r : fit_rows) {
        for (std::size_t c = 0; c < width; ++c) {
            const double v = table.values[r * width + c];
            params.min[c] = std::min(params.min[c], v);
            params.max[c] = std::max(params.max[c], v);
        }
    }
    return params;
}

EncodedTable minmax_apply(const ScalerParams& params, const EncodedTable& table) {
    const std::size_t width = table.width();
    if (params.min.size() != width || params.max.size() != width) {
        throw InvalidArgument("scaler width " + std::to_string(params.min.size()) +
                              " != table width " + std::to_string(width));
    }
    EncodedTable out = table;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double span = params.max[c] - params.min[c];
            double v = 0.0;  // degenerate features collapse to 0
            if (span > 0.0) {
                v = (table.values[r * width + c] - params.min[c]) / span;
                v = std::clamp(v, 0.0, 1.0);
            }
            out.values[r * width + c] = v;
        }
    }
    return out;
}

WindowedDataset make_windows(const EncodedTable& table, int window) {
    if (window < 1) throw InvalidArgument("window length must be >= 1");
    WindowedDataset ds;
    ds.window = window;
    ds.feature_width = static_cast<int>(table.width());
    const std::size_t width = table.width();
    for (const auto& [begin, end] : contiguous_runs(table.labels, table.segments)) {
        const std::size_t frames = end - begin;
        if (frames < static_cast<std::size_t>(window)) {
            ds.warnings.push_back("segment at row " + std::to_string(begin) + " has " +
                                  std::to_string(frames) + " frames, shorter than window " +
                                  std::to_string(window) + "; skipped");
            continue;
        }
        for (std::size_t s = begin; s + window <= end; ++s) {
            ds.samples.insert(ds.samples.end(), table.values.begin() + s * width,
                              table.values.begin() + (s + window) * width);
            ds.labels.push_back(table.labels[begin]);
            ds.start_rows.push_back(s);
        }
    }
    return ds;
}

SplitIndices stratified_split(const std::vector<int>& labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw InvalidArgument("split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidArgument("split ratios sum to " + std::to_string(sum) + ", expected 1");
    }

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    SplitIndices out;
    std::vector<std::size_t>* buckets[3] = {&out.train, &out.validation, &out.test};
    for (auto& [cls, indices] : by_class) {
        if (indices.size() < 3) {
            throw InvalidArgument("class " + std::to_string(cls) + " has only " +
                                  std::to_string(indices.size()) + " samples, fewer than 3 splits");
        }
        rng.shuffle(indices);

        // floor allocation, then largest fractional remainders take the rest
        const double n = static_cast<double>(indices.size());
        std::array<std::size_t, 3> counts;
        std::array<std::pair<double, int>, 3> remainders;
        std::size_t assigned = 0;
        for (int j = 0; j < 3; ++j) {
            const double exact = n * ratios[j];
            counts[j] = static_cast<std::size_t>(exact);
            remainders[j] = {exact - std::floor(exact), j};
            assigned += counts[j];
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t k = 0; assigned < indices.size(); ++k, ++assigned) {
            counts[remainders[k % 3].second] += 1;
        }

        std::size_t pos = 0;
        for (int j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < counts[j]; ++k) {
                buckets[j]->push_back(indices[pos++]);
            }
        }
    }
    for (auto* b : buckets) std::sort(b->begin(), b->end());
    return out;
}

WindowedDataset take(const WindowedDataset& ds, const std::vector<std::size_t>& indices) {
    WindowedDataset out;
    out.window = ds.window;
    out.feature_width = ds.feature_width;
    const std::size_t width = ds.sample_width();
    out.samples.reserve(indices.size() * width);
    for (std::size_t i : indices) {
        if (i >= ds.size()) {
            throw InvalidArgument("window index " + std::to_string(i) + " out of range");
        }
        out.samples.insert(out.samples.end(), ds.samples.begin() + i * width,
                           ds.samples.begin() + (i + 1) * width);
        out.labels.push_back(ds.labels[i]);
        out.start_rows.push_back(ds.start_rows.empty() ? 0 : ds.start_rows[i]);
    }
    return out;
}

WindowedDataset synth_generate(std::size_t n_per_class, int window, int feature_width,
                               double separation, std::uint64_t seed) {
    if (separation < 0.0) throw InvalidArgument("separation must be >= 0");
    if (window < 1 || feature_width < 1 || n_per_class == 0) {
        throw InvalidArgument("synth dataset needs positive window, width and size");
    }
    WindowedDataset ds;
    ds.window = window;
    ds.feature_width = feature_width;
    const std::size_t dim = ds.sample_width();
    // place the class means +-separation/2 apart along the all-ones direction
    const double offset = separation / (2.0 * std::sqrt(static_cast<double>(dim)));
    Rng rng(seed);
    ds.samples.reserve(2 * n_per_class * dim);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = i < n_per_class ? 0 : 1;
        const double mean = label == 0 ? -offset : offset;
        for (std::size_t k = 0; k < dim; ++k) ds.samples.push_back(mean + rng.gaussian());
        ds.labels.push_back(label);
        ds.start_rows.push_back(i);
    }
    return ds;
}

namespace {

using nlohmann::json;

json scaler_to_json(const ScalerParams& s) {
    return json{{"min", s.min}, {"max", s.max}};
}

ScalerParams scaler_from_json(const json& j) {
    ScalerParams s;
    s.min = j.at("min").get<std::vector<double>>();
    s.max = j.at("max").get<std::vector<double>>();
    return s;
}

}  // namespace

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    json j{
        {"format", "qtcnn-manifest"},
        {"version", manifest.version},
        {"source_csv", manifest.source_csv},
        {"label_column", manifest.label_column},
        {"segment_column", manifest.segment_column},
        {"label_names", manifest.label_names},
        {"feature_names", manifest.feature_names},
        {"window", manifest.window},
        {"ratios", manifest.ratios},
        {"split_seed", manifest.split_seed},
        {"scaler", scaler_to_json(manifest.scaler)},
        {"splits",
         {{"train", manifest.splits.train},
          {"validation", manifest.splits.validation},
          {"test", manifest.splits.test}}},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        if (j.at("format") != "qtcnn-manifest") throw SchemaError(path + ": not a manifest");
        DatasetManifest m;
        m.version = j.at("version").get<int>();
        m.source_csv = j.at("source_csv").get<std::string>();
        m.label_column = j.at("label_column").get<std::string>();
        m.segment_column = j.at("segment_column").get<std::string>();
        m.label_names = j.at("label_names").get<std::array<std::string, 2>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.window = j.at("window").get<int>();
        m.ratios = j.at("ratios").get<std::array<double, 3>>();
        m.split_seed = j.at("split_seed").get<std::uint64_t>();
        m.scaler = scaler_from_json(j.at("scaler"));
        m.splits.train = j.at("splits").at("train").get<std::vector<std::size_t>>();
        m.splits.validation = j.at("splits").at("validation").get<std::vector<std::size_t>>();
        m.splits.test = j.at("splits").at("test").get<std::vector<std::size_t>>();
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

namespace {

// Rows covered by at least one training window, deduplicated.
std::vector<std::size_t> train_rows(const WindowedDataset& windows,
                                    const std::vector<std::size_t>& train_indices) {
    std::set<std::size_t> rows;
    for (std::size_t i : train_indices) {
        const std::size_t start = windows.start_rows[i];
        for (int k = 0; k < windows.window; ++k) rows.insert(start + k);
    }
    return {rows.begin(), rows.end()};
}

DatasetSplits materialize(const EncodedTable& scaled, int window, const SplitIndices& splits) {
    const WindowedDataset windows = make_windows(scaled, window);
    DatasetSplits out;
    out.train = take(windows, splits.train);
    out.validation = take(windows, splits.validation);
    out.test = take(windows, splits.test);
    return out;
}

}  // namespace

PreparedDataset prepare_dataset(const std::string& csv_path, const PrepareOptions& options) {
    const FeatureTable raw = load_feature_csv(csv_path, options.label_column,
                                              options.segment_column);
    const EncodedTable encoded = encode_labels(raw);
    const WindowedDataset unscaled = make_windows(encoded, options.window);
    if (unscaled.size() == 0) throw SchemaError(csv_path + ": no windows could be formed");
    const SplitIndices splits =
        stratified_split(unscaled.labels, options.ratios, options.split_seed);

    const ScalerParams scaler = minmax_fit(encoded, train_rows(unscaled, splits.train));
    const EncodedTable scaled = minmax_apply(scaler, encoded);

    PreparedDataset out;
    out.warnings = unscaled.warnings;
    for (std::size_t c : scaler.degenerate_features()) {
        out.warnings.push_back("feature \"" + encoded.feature_names[c] +
                               "\" is constant on the training rows; it scales to 0");
    }
    out.manifest.source_csv = csv_path;
    out.manifest.label_column = options.label_column;
    out.manifest.segment_column = options.segment_column;
    out.manifest.label_names = encoded.label_names;
    out.manifest.feature_names = encoded.feature_names;
    out.manifest.window = options.window;
    out.manifest.ratios = options.ratios;
    out.manifest.split_seed = options.split_seed;
    out.manifest.scaler = scaler;
    out.manifest.splits = splits;
    out.splits = materialize(scaled, options.window, splits);
    return out;
}

DatasetSplits load_dataset(const DatasetManifest& manifest) {
    const FeatureTable raw = load_feature_csv(manifest.source_csv, manifest.label_column,
                                              manifest.segment_column);
    const EncodedTable encoded = encode_labels(raw);
    if (encoded.feature_names != manifest.feature_names) {
        throw SchemaError(manifest.source_csv + ": feature columns changed since prepare");
    }
    if (encoded.label_names != manifest.label_names) {
        throw SchemaError(manifest.source_csv + ": labels changed since prepare");
    }
    const EncodedTable scaled = minmax_apply(manifest.scaler, encoded);
    return materialize(scaled, manifest.window, manifest.splits);
}

}  // namespace qtcnn::data
