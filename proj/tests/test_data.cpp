#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qtcnn/data.hpp"
#include "qtcnn/error.hpp"

using namespace qtcnn;
using namespace qtcnn::data;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("qtcnn_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = (path / name).string();
        std::ofstream out(p);
        out << content;
        return p;
    }
};

EncodedTable simple_table(std::size_t rows, int width, int label_period) {
    EncodedTable t;
    for (int c = 0; c < width; ++c) t.feature_names.push_back("f" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        for (int c = 0; c < width; ++c) t.values.push_back(static_cast<double>(r + c));
        t.labels.push_back(static_cast<int>(r / label_period) % 2);
        t.segments.push_back(0);
    }
    t.label_names = {"a", "b"};
    return t;
}

}  // namespace

TEST_CASE("load_feature_csv") {
    TempDir tmp;
    SUBCASE("plain two-row file") {
        const auto path = tmp.file("ok.csv", "x,y,z,LABEL\n1,2,3,REAL\n4,5,6,FAKE\n");
        const FeatureTable t = load_feature_csv(path);
        CHECK(t.rows() == 2);
        CHECK(t.width() == 3);
        CHECK(t.values == std::vector<double>{1, 2, 3, 4, 5, 6});
        CHECK(t.labels == std::vector<std::string>{"REAL", "FAKE"});
    }
    SUBCASE("unnamed index column is skipped") {
        const auto path = tmp.file("idx.csv", ",x,LABEL\n0,1.5,REAL\n1,2.5,FAKE\n");
        const FeatureTable t = load_feature_csv(path);
        CHECK(t.width() == 1);
        CHECK(t.values == std::vector<double>{1.5, 2.5});
    }
    SUBCASE("label column only is a schema error") {
        const auto path = tmp.file("lab.csv", "LABEL\nREAL\n");
        CHECK_THROWS_AS(load_feature_csv(path), SchemaError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_feature_csv((tmp.path / "absent.csv").string()), IoError);
    }
    SUBCASE("non-numeric cell names row and column") {
        const auto path = tmp.file("bad.csv", "x,LABEL\n1,REAL\noops,FAKE\n");
        CHECK_THROWS_WITH_AS(load_feature_csv(path),
                             doctest::Contains("row 2"), ParseError);
    }
    SUBCASE("missing label column") {
        const auto path = tmp.file("nolabel.csv", "x,y\n1,2\n");
        CHECK_THROWS_AS(load_feature_csv(path), SchemaError);
    }
    SUBCASE("segment column is read when present") {
        const auto path = tmp.file("seg.csv", "x,SEGMENT,LABEL\n1,0,REAL\n2,1,REAL\n");
        const FeatureTable t = load_feature_csv(path);
        CHECK(t.segments == std::vector<int>{0, 1});
        CHECK(t.width() == 1);
    }
}

TEST_CASE("encode_labels") {
    FeatureTable t;
    t.feature_names = {"x"};
    t.values = {1, 2, 3};
    t.segments = {0, 0, 0};

    SUBCASE("lexicographically smaller label becomes 0") {
        t.labels = {"REAL", "FAKE", "REAL"};
        const EncodedTable e = encode_labels(t);
        CHECK(e.label_names[0] == "FAKE");
        CHECK(e.label_names[1] == "REAL");
        CHECK(e.labels == std::vector<int>{1, 0, 1});
    }
    SUBCASE("three classes is a schema error") {
        t.labels = {"a", "b", "c"};
        CHECK_THROWS_WITH_AS(encode_labels(t), doctest::Contains("\"c\""), SchemaError);
    }
    SUBCASE("idempotent on rendered 0/1 labels") {
        t.labels = {"0", "1", "0"};
        const EncodedTable e = encode_labels(t);
        CHECK(e.labels == std::vector<int>{0, 1, 0});
    }
}

TEST_CASE("minmax scaling") {
    EncodedTable t = simple_table(3, 1, 2);
    t.values = {2, 4, 6};

    SUBCASE("linear map onto [0, 1]") {
        const ScalerParams params = minmax_fit(t, {0, 1, 2});
        const EncodedTable scaled = minmax_apply(params, t);
        CHECK(scaled.values == std::vector<double>{0.0, 0.5, 1.0});
    }
    SUBCASE("constant feature collapses to 0 and is flagged") {
        EncodedTable c = simple_table(2, 1, 2);
        c.values = {5, 5};
        const ScalerParams params = minmax_fit(c, {0, 1});
        CHECK(params.degenerate_features() == std::vector<std::size_t>{0});
        const EncodedTable scaled = minmax_apply(params, c);
        CHECK(scaled.values == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("out-of-range values clamp to [0, 1]") {
        const ScalerParams params = minmax_fit(t, {0, 2});  // range [2, 6]
        EncodedTable probe = t;
        probe.values = {8, 1, 4};
        const EncodedTable scaled = minmax_apply(params, probe);
        CHECK(scaled.values == std::vector<double>{1.0, 0.0, 0.5});
    }
    SUBCASE("empty fit split") {
        CHECK_THROWS_AS(minmax_fit(t, {}), InvalidArgument);
    }
}

TEST_CASE("make_windows") {
    SUBCASE("10 frames with window 5 give 6 windows") {
        const WindowedDataset ds = make_windows(simple_table(10, 2, 100), 5);
        CHECK(ds.size() == 6);
        CHECK(ds.sample_width() == 10);
    }
    SUBCASE("window 1 keeps one window per frame") {
        const WindowedDataset ds = make_windows(simple_table(7, 1, 100), 1);
        CHECK(ds.size() == 7);
    }
    SUBCASE("segments of 7 and 6 frames yield 3 + 2 windows") {
        EncodedTable t = simple_table(13, 1, 100);
        for (std::size_t r = 7; r < 13; ++r) t.segments[r] = 1;
        const WindowedDataset ds = make_windows(t, 5);
        CHECK(ds.size() == 5);
        // no window crosses the boundary at row 7
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const bool before = ds.start_rows[i] + 5 <= 7;
            const bool after = ds.start_rows[i] >= 7;
            CHECK((before || after));
        }
    }
    SUBCASE("windows never straddle a label change") {
        const WindowedDataset ds = make_windows(simple_table(12, 1, 6), 5);
        CHECK(ds.size() == 4);  // two 6-frame label runs, 2 windows each
        CHECK(ds.labels == std::vector<int>{0, 0, 1, 1});
    }
    SUBCASE("short segment yields zero windows and a warning") {
        const WindowedDataset ds = make_windows(simple_table(3, 1, 100), 5);
        CHECK(ds.size() == 0);
        REQUIRE(ds.warnings.size() == 1);
        CHECK(ds.warnings[0].find("shorter than window") != std::string::npos);
    }
}

TEST_CASE("stratified_split") {
    SUBCASE("exact divisibility: 100 samples 50/50 at 0.8/0.1/0.1") {
        std::vector<int> labels(100);
        for (std::size_t i = 50; i < 100; ++i) labels[i] = 1;
        const SplitIndices s = stratified_split(labels, {0.8, 0.1, 0.1}, 42);
        CHECK(s.train.size() == 80);
        CHECK(s.validation.size() == 10);
        CHECK(s.test.size() == 10);
        auto positives = [&](const std::vector<std::size_t>& idx) {
            std::size_t n = 0;
            for (auto i : idx) n += labels[i];
            return n;
        };
        CHECK(positives(s.train) == 40);
        CHECK(positives(s.validation) == 5);
        CHECK(positives(s.test) == 5);
    }
    SUBCASE("same seed gives identical membership") {
        std::vector<int> labels(60);
        for (std::size_t i = 0; i < 60; i += 3) labels[i] = 1;
        const SplitIndices a = stratified_split(labels, {0.8, 0.1, 0.1}, 7);
        const SplitIndices b = stratified_split(labels, {0.8, 0.1, 0.1}, 7);
        CHECK(a.train == b.train);
        CHECK(a.validation == b.validation);
        CHECK(a.test == b.test);
    }
    SUBCASE("101 samples stay within 1 of proportional per class") {
        std::vector<int> labels(101);
        for (std::size_t i = 50; i < 101; ++i) labels[i] = 1;  // 50 / 51
        const SplitIndices s = stratified_split(labels, {0.8, 0.1, 0.1}, 3);
        const std::vector<const std::vector<std::size_t>*> splits{&s.train, &s.validation,
                                                                  &s.test};
        const std::array<double, 3> ratios{0.8, 0.1, 0.1};
        for (int cls = 0; cls < 2; ++cls) {
            const double n_cls = cls == 0 ? 50.0 : 51.0;
            for (int j = 0; j < 3; ++j) {
                std::size_t count = 0;
                for (auto i : *splits[j]) count += (labels[i] == cls) ? 1 : 0;
                CHECK(std::abs(static_cast<double>(count) - n_cls * ratios[j]) <= 1.0);
            }
        }
    }
    SUBCASE("class smaller than the split count") {
        CHECK_THROWS_AS(stratified_split({0, 0, 0, 1, 1}, {0.8, 0.1, 0.1}, 1), InvalidArgument);
    }
    SUBCASE("ratios must be positive and sum to 1") {
        std::vector<int> labels(10, 0);
        labels[5] = labels[6] = labels[7] = labels[8] = labels[9] = 1;
        CHECK_THROWS_AS(stratified_split(labels, {0.8, 0.1, 0.2}, 1), InvalidArgument);
        CHECK_THROWS_AS(stratified_split(labels, {0.9, 0.1, 0.0}, 1), InvalidArgument);
    }
}

TEST_CASE("synth_generate") {
    SUBCASE("deterministic under seed") {
        const WindowedDataset a = synth_generate(50, 3, 4, 2.0, 9);
        const WindowedDataset b = synth_generate(50, 3, 4, 2.0, 9);
        CHECK(a.samples == b.samples);
        CHECK(a.labels == b.labels);
    }
    SUBCASE("separation 6 is nearly separable by a threshold on the mean") {
        const WindowedDataset ds = synth_generate(500, 5, 26, 6.0, 123);
        std::size_t correct = 0;
        const std::size_t dim = ds.sample_width();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double mean = 0.0;
            for (std::size_t k = 0; k < dim; ++k) mean += ds.samples[i * dim + k];
            mean /= static_cast<double>(dim);
            const int predicted = mean >= 0.0 ? 1 : 0;
            correct += predicted == ds.labels[i] ? 1 : 0;
        }
        CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) > 0.99);
    }
    SUBCASE("separation 0 makes the classes indistinguishable") {
        const WindowedDataset ds = synth_generate(500, 2, 4, 0.0, 77);
        std::size_t correct = 0;
        const std::size_t dim = ds.sample_width();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double mean = 0.0;
            for (std::size_t k = 0; k < dim; ++k) mean += ds.samples[i * dim + k];
            const int predicted = mean >= 0.0 ? 1 : 0;
            correct += predicted == ds.labels[i] ? 1 : 0;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(ds.size());
        CHECK(acc > 0.4);
        CHECK(acc < 0.6);
    }
    SUBCASE("rejects negative separation") {
        CHECK_THROWS_AS(synth_generate(10, 2, 2, -1.0, 0), InvalidArgument);
    }
}

TEST_CASE("prepare_dataset and manifest round trip") {
    TempDir tmp;
    // 2 segments per class, 30 frames each: enough windows for 0.8/0.1/0.1
    std::string csv = "f0,f1,SEGMENT,LABEL\n";
    int seg = 0;
    for (const char* label : {"REAL", "FAKE", "REAL", "FAKE"}) {
        for (int r = 0; r < 30; ++r) {
            csv += std::to_string(r * 0.1 + seg) + "," + std::to_string(r * -0.2) + "," +
                   std::to_string(seg) + "," + label + "\n";
        }
        ++seg;
    }
    const auto path = tmp.file("features.csv", csv);

    PrepareOptions options;
    options.window = 5;
    options.split_seed = 11;
    const PreparedDataset prepared = prepare_dataset(path, options);

    SUBCASE("split sizes and class balance") {
        const std::size_t total = prepared.splits.train.size() +
                                  prepared.splits.validation.size() +
                                  prepared.splits.test.size();
        CHECK(total == 4 * (30 - 5 + 1));
        auto frac_positive = [](const WindowedDataset& ds) {
            double p = 0;
            for (int l : ds.labels) p += l;
            return p / static_cast<double>(ds.size());
        };
        CHECK(frac_positive(prepared.splits.train) == doctest::Approx(0.5).epsilon(0.02));
        CHECK(frac_positive(prepared.splits.test) == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("train features are scaled into [0, 1]") {
        for (double v : prepared.splits.train.samples) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("manifest round trip rebuilds identical splits") {
        const auto manifest_path = (tmp.path / "manifest.json").string();
        save_manifest(prepared.manifest, manifest_path);
        const DatasetManifest loaded = load_manifest(manifest_path);
        const DatasetSplits rebuilt = load_dataset(loaded);
        CHECK(rebuilt.train.samples == prepared.splits.train.samples);
        CHECK(rebuilt.train.labels == prepared.splits.train.labels);
        CHECK(rebuilt.validation.samples == prepared.splits.validation.samples);
        CHECK(rebuilt.test.samples == prepared.splits.test.samples);
    }
    SUBCASE("reprepare with the same seed is identical") {
        const PreparedDataset again = prepare_dataset(path, options);
        CHECK(again.splits.train.samples == prepared.splits.train.samples);
        CHECK(again.manifest.splits.train == prepared.manifest.splits.train);
    }
}
