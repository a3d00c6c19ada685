#include "qtcnn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "qtcnn/error.hpp"
#include "qtcnn/rng.hpp"

namespace qtcnn::runner {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSeedDerive = 0x9e3779b97f4a7c15ULL;

// Flat trainable vector of the QT path: phi | gamma | scale | shift.
std::vector<double> pack_qt(const QtParams& p) {
    std::vector<double> flat;
    flat.reserve(p.phi.size() + p.mapping.gamma.size() + 8);
    flat.insert(flat.end(), p.phi.begin(), p.phi.end());
    flat.insert(flat.end(), p.mapping.gamma.begin(), p.mapping.gamma.end());
    flat.insert(flat.end(), p.scaling.scale.begin(), p.scaling.scale.end());
    flat.insert(flat.end(), p.scaling.shift.begin(), p.scaling.shift.end());
    return flat;
}

void unpack_qt(const std::vector<double>& flat, QtParams& p) {
    const std::size_t n_phi = p.phi.size();
    const std::size_t n_gamma = p.mapping.gamma.size();
    std::copy_n(flat.begin(), n_phi, p.phi.begin());
    std::copy_n(flat.begin() + n_phi, n_gamma, p.mapping.gamma.begin());
    std::copy_n(flat.begin() + n_phi + n_gamma, 4, p.scaling.scale.begin());
    std::copy_n(flat.begin() + n_phi + n_gamma + 4, 4, p.scaling.shift.begin());
}

std::vector<double> pack_qt_grads(const qtcore::GenerationGradients& g) {
    std::vector<double> flat;
    flat.reserve(g.phi.size() + g.gamma.size() + 8);
    flat.insert(flat.end(), g.phi.begin(), g.phi.end());
    flat.insert(flat.end(), g.gamma.begin(), g.gamma.end());
    flat.insert(flat.end(), g.scale.begin(), g.scale.end());
    flat.insert(flat.end(), g.shift.begin(), g.shift.end());
    return flat;
}

QtParams init_qt_params(const TrainConfig& config) {
    const std::size_t m = nn::count_cnn_params(config.arch);
    const int n_qubits = qtcore::required_qubits(m);
    QtParams p;
    p.qnn = qsim::QnnConfig(n_qubits, config.n_blocks);
    p.phi.resize(p.qnn.n_params());
    Rng rng(config.seeds.init);
    for (double& a : p.phi) a = rng.uniform(-M_PI, M_PI);
    p.mapping = qtcore::MappingModel::init(n_qubits + 1, config.mapping_hidden,
                                           config.seeds.init ^ kSeedDerive);
    // The scaling model starts standardizing, not at (1, 0): one generation
    // pass measures the mean and spread of the raw mapping outputs per layer
    // group, and (scale, shift) are set so the generated weights begin
    // zero-mean at the group's conventional init spread. Unit scales leave
    // every layer an order of magnitude too large (the mapping net emits
    // O(1) values) and the shared mean saturates the logits.
    const nn::CnnArchitecture& a = config.arch;
    const double fans[4][2] = {
        {static_cast<double>(a.window_frames * a.conv1_kernel),
         static_cast<double>(a.conv1_channels * a.conv1_kernel)},
        {static_cast<double>(a.conv1_channels * a.conv2_kernel),
         static_cast<double>(a.conv2_channels * a.conv2_kernel)},
        {static_cast<double>(a.flatten_size()), static_cast<double>(a.hidden_units)},
        {static_cast<double>(a.hidden_units), static_cast<double>(a.output_units)}};

    const qtcore::LayerGroups groups = qtcore::LayerGroups::from_architecture(a);
    const qtcore::GenerationResult probe =
        qtcore::generate_theta_cached(p.qnn, p.phi, p.mapping, p.scaling, groups);
    std::size_t begin = 0;
    for (int g = 0; g < 4; ++g) {
        const std::size_t end = begin + groups.sizes[g];
        double mean = 0.0;
        for (std::size_t i = begin; i < end; ++i) mean += probe.cache.raw_outputs[i];
        mean /= static_cast<double>(end - begin);
        double var = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double d = probe.cache.raw_outputs[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(end - begin);
        const double target = std::sqrt(6.0 / (fans[g][0] + fans[g][1])) / std::sqrt(3.0);
        p.scaling.scale[g] = target / std::max(std::sqrt(var), 1e-3);
        p.scaling.shift[g] = -p.scaling.scale[g] * mean;
        begin = end;
    }
    return p;
}

// An initialization whose predictions do not depend on the input (a conv
// stage with every ReLU dead) can never recover: no gradient reaches a
// fully dead layer. Detect that and reseed deterministically.
bool input_independent(const std::vector<double>& predictions) {
    const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
    return *hi - *lo < 1e-12;
}

template <typename InitFn, typename PredictFn>
auto init_with_reseed(const TrainConfig& config, InitFn init, PredictFn predict) {
    auto params = init(config.seeds.init);
    for (int attempt = 1; attempt <= 8; ++attempt) {
        if (!input_independent(predict(params))) break;
        params = init(config.seeds.init ^ (kSeedDerive * static_cast<std::uint64_t>(attempt)));
    }
    return params;
}

struct BatchBuffer {
    std::vector<double> samples;
    std::vector<int> labels;

    void fill(const data::WindowedDataset& ds, const std::vector<std::size_t>& order,
              std::size_t begin, std::size_t end) {
        const std::size_t width = ds.sample_width();
        samples.resize((end - begin) * width);
        labels.resize(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t src = order[i];
            std::copy_n(ds.samples.begin() + src * width, width,
                        samples.begin() + (i - begin) * width);
            labels[i - begin] = ds.labels[src];
        }
    }
};

Metrics metrics_from_predictions(const std::vector<int>& labels,
                                 const std::vector<double>& predictions) {
    Metrics m;
    m.loss = nn::bce_loss(labels, predictions);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int predicted = predictions[i] >= 0.5 ? 1 : 0;
        if (predicted == 1 && labels[i] == 1) m.confusion.true_positive += 1;
        if (predicted == 0 && labels[i] == 0) m.confusion.true_negative += 1;
        if (predicted == 1 && labels[i] == 0) m.confusion.false_positive += 1;
        if (predicted == 0 && labels[i] == 1) m.confusion.false_negative += 1;
    }
    m.accuracy = static_cast<double>(m.confusion.true_positive + m.confusion.true_negative) /
                 static_cast<double>(labels.size());
    return m;
}

std::size_t batch_correct(const std::vector<int>& labels, const std::vector<double>& preds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += ((preds[i] >= 0.5 ? 1 : 0) == labels[i]) ? 1 : 0;
    }
    return correct;
}

void check_config(const TrainConfig& config, const data::DatasetSplits& splits) {
    config.arch.validate_runnable();
    if (config.epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (config.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (config.mode == TrainMode::qt && config.n_blocks < 1) {
        throw InvalidArgument("qt mode needs n_blocks >= 1");
    }
    if (splits.train.size() == 0 || splits.validation.size() == 0 || splits.test.size() == 0) {
        throw InvalidArgument("every split must be non-empty");
    }
    const int window = splits.train.window;
    const int width = splits.train.feature_width;
    if (window != config.arch.window_frames || width != config.arch.feature_width) {
        throw InvalidArgument("dataset windows are " + std::to_string(window) + "x" +
                              std::to_string(width) + " but the architecture expects " +
                              std::to_string(config.arch.window_frames) + "x" +
                              std::to_string(config.arch.feature_width));
    }
}

// Shared epoch loop. step(batch, lr) must update the trained parameters and
// return (loss, predictions); snapshot() captures them for the best record.
template <typename StepFn, typename EvalFn, typename SnapshotFn>
RunRecord run_training(const TrainConfig& config, const data::DatasetSplits& splits,
                       std::size_t trainable, double ratio, StepFn step, EvalFn eval_val,
                       SnapshotFn snapshot, const EpochCallback& on_epoch) {
    RunRecord record;
    record.config = config;
    record.trainable_params = trainable;
    record.parameter_ratio = ratio;

    // the initial parameters are the first best-checkpoint candidate
    Metrics best_val = eval_val();
    record.best = snapshot();
    record.best_epoch = 0;

    Rng shuffle_rng(config.seeds.shuffle);
    std::vector<std::size_t> order(splits.train.size());
    BatchBuffer batch;
    const std::size_t n_train = splits.train.size();

    // Ramp the early optimizer steps: Adam moves each coordinate by about
    // the learning rate regardless of gradient size, and the first coherent
    // full-size steps can kill a ReLU stage outright. Short runs get a
    // proportionally shorter ramp.
    const std::int64_t steps_per_epoch =
        static_cast<std::int64_t>((n_train + config.batch_size - 1) / config.batch_size);
    const std::int64_t warmup_steps =
        std::max<std::int64_t>(1, std::min<std::int64_t>(100, config.epochs * steps_per_epoch / 10));

    std::int64_t step_count = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const std::size_t end = std::min(n_train, begin + config.batch_size);
            batch.fill(splits.train, order, begin, end);
            ++step_count;
            const double lr = config.learning_rate *
                              std::min<double>(1.0, static_cast<double>(step_count) /
                                                        static_cast<double>(warmup_steps));
            const auto [loss, preds] = step(batch, lr);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(begin / config.batch_size));
            }
            loss_sum += loss * static_cast<double>(end - begin);
            correct += batch_correct(batch.labels, preds);
        }

        EpochMetrics em;
        em.train_loss = loss_sum / static_cast<double>(n_train);
        em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n_train);
        const Metrics val = eval_val();
        em.val_loss = val.loss;
        em.val_accuracy = val.accuracy;
        em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.epochs.push_back(em);
        if (on_epoch) on_epoch(epoch, em);

        if (val.accuracy > best_val.accuracy ||
            (val.accuracy == best_val.accuracy && val.loss < best_val.loss)) {
            best_val = val;
            record.best = snapshot();
            record.best_epoch = epoch;
        }
    }
    return record;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(TrainMode mode) {
    return mode == TrainMode::qt ? "qt" : "classical";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "qt") return TrainMode::qt;
    if (s == "classical") return TrainMode::classical;
    throw InvalidArgument("unknown mode \"" + s + "\" (expected qt or classical)");
}

bool RunRecord::metrics_equal(const RunRecord& other) const {
    if (epochs.size() != other.epochs.size()) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (epochs[i].train_loss != other.epochs[i].train_loss ||
            epochs[i].train_accuracy != other.epochs[i].train_accuracy ||
            epochs[i].val_loss != other.epochs[i].val_loss ||
            epochs[i].val_accuracy != other.epochs[i].val_accuracy) {
            return false;
        }
    }
    return test == other.test && trainable_params == other.trainable_params &&
           parameter_ratio == other.parameter_ratio && best_epoch == other.best_epoch;
}

Metrics evaluate(const nn::CnnArchitecture& arch, const nn::ThetaVector& theta,
                 const data::WindowedDataset& split) {
    if (split.size() == 0) throw InvalidArgument("cannot evaluate an empty split");
    const std::vector<double> preds = nn::cnn_forward(arch, theta, split.samples);
    return metrics_from_predictions(split.labels, preds);
}

Metrics evaluate(const QtParams& params, const nn::CnnArchitecture& arch,
                 const data::WindowedDataset& split) {
    const nn::ThetaVector theta =
        qtcore::generate_theta(params.qnn, params.phi, params.mapping, params.scaling, arch);
    return evaluate(arch, theta, split);
}

data::DatasetSplits load_splits(const TrainConfig& config) {
    if (config.dataset.kind == DatasetSpec::Kind::synth) {
        const data::WindowedDataset all = data::synth_generate(
            config.dataset.synth_per_class, config.arch.window_frames, config.arch.feature_width,
            config.dataset.synth_separation, config.seeds.split);
        const data::SplitIndices idx = data::stratified_split(
            all.labels, config.dataset.synth_ratios, config.seeds.split ^ kSeedDerive);
        return {data::take(all, idx.train), data::take(all, idx.validation),
                data::take(all, idx.test)};
    }
    const data::DatasetManifest manifest = data::load_manifest(config.dataset.manifest_path);
    return data::load_dataset(manifest);
}

RunRecord train_classical(const TrainConfig& config, const data::DatasetSplits& splits,
                          const EpochCallback& on_epoch) {
    check_config(config, splits);
    nn::ThetaVector theta = init_with_reseed(
        config, [&](std::uint64_t seed) { return nn::init_theta(config.arch, seed); },
        [&](const nn::ThetaVector& t) {
            return nn::cnn_forward(config.arch, t, splits.train.samples);
        });
    nn::AdamState adam(theta.size(), config.learning_rate);

    RunRecord record = run_training(
        config, splits, theta.size(), 1.0,
        [&](const BatchBuffer& batch, double lr) {
            nn::BackwardResult bw =
                nn::cnn_backward(config.arch, theta, batch.samples, batch.labels);
            adam.learning_rate = lr;
            nn::adam_step(adam, theta, bw.grad);
            return std::pair<double, std::vector<double>>(bw.loss, std::move(bw.predictions));
        },
        [&] { return evaluate(config.arch, theta, splits.validation); },
        [&] {
            Checkpoint c;
            c.mode = TrainMode::classical;
            c.arch = config.arch;
            c.theta = theta;
            return c;
        },
        on_epoch);
    record.test = evaluate(config.arch, record.best.theta, splits.test);
    return record;
}

RunRecord train_qt(const TrainConfig& config, const data::DatasetSplits& splits,
                   const EpochCallback& on_epoch) {
    check_config(config, splits);
    QtParams params = init_with_reseed(
        config,
        [&](std::uint64_t seed) {
            TrainConfig seeded = config;
            seeded.seeds.init = seed;
            return init_qt_params(seeded);
        },
        [&](const QtParams& p) {
            const nn::ThetaVector theta =
                qtcore::generate_theta(p.qnn, p.phi, p.mapping, p.scaling, config.arch);
            return nn::cnn_forward(config.arch, theta, splits.train.samples);
        });
    const qtcore::LayerGroups groups = qtcore::LayerGroups::from_architecture(config.arch);
    std::vector<double> flat = pack_qt(params);
    nn::AdamState adam(flat.size(), config.learning_rate);
    const std::size_t m = groups.total();
    const double ratio = static_cast<double>(flat.size()) / static_cast<double>(m);

    RunRecord record = run_training(
        config, splits, flat.size(), ratio,
        [&](const BatchBuffer& batch, double lr) {
            // theta is regenerated from (phi, gamma, s) on every step and
            // never updated directly
            qtcore::GenerationResult gen = qtcore::generate_theta_cached(
                params.qnn, params.phi, params.mapping, params.scaling, groups);
            nn::BackwardResult bw =
                nn::cnn_backward(config.arch, gen.theta, batch.samples, batch.labels);
            const qtcore::GenerationGradients grads =
                qtcore::backprop_generation(bw.grad, gen.cache);
            std::vector<double> flat_grads = pack_qt_grads(grads);
            adam.learning_rate = lr;
            nn::adam_step(adam, flat, flat_grads);
            unpack_qt(flat, params);
            return std::pair<double, std::vector<double>>(bw.loss, std::move(bw.predictions));
        },
        [&] { return evaluate(params, config.arch, splits.validation); },
        [&] {
            Checkpoint c;
            c.mode = TrainMode::qt;
            c.arch = config.arch;
            c.qt = params;
            return c;
        },
        on_epoch);
    record.test = evaluate(record.best.qt, config.arch, splits.test);
    return record;
}

RunRecord train(const TrainConfig& config, const EpochCallback& on_epoch) {
    const data::DatasetSplits splits = load_splits(config);
    return config.mode == TrainMode::qt ? train_qt(config, splits, on_epoch)
                                        : train_classical(config, splits, on_epoch);
}

SweepResult sweep_blocks(const TrainConfig& config, const std::vector<int>& block_list) {
    if (block_list.empty()) throw InvalidArgument("block list is empty");
    const data::DatasetSplits splits = load_splits(config);
    SweepResult result;
    result.config = config;

    for (int blocks : block_list) {
        TrainConfig qt_config = config;
        qt_config.mode = TrainMode::qt;
        qt_config.n_blocks = blocks;
        const RunRecord record = train_qt(qt_config, splits);
        SweepRow row;
        row.n_blocks = blocks;
        row.trainable_params = record.trainable_params;
        row.parameter_ratio = record.parameter_ratio;
        row.train_accuracy = evaluate(record.best.qt, config.arch, splits.train).accuracy;
        row.test_accuracy = record.test.accuracy;
        result.rows.push_back(row);
    }

    TrainConfig cl_config = config;
    cl_config.mode = TrainMode::classical;
    const RunRecord baseline = train_classical(cl_config, splits);
    SweepRow row;
    row.n_blocks = 0;
    row.trainable_params = baseline.trainable_params;
    row.parameter_ratio = 1.0;
    row.train_accuracy = evaluate(config.arch, baseline.best.theta, splits.train).accuracy;
    row.test_accuracy = baseline.test.accuracy;
    result.rows.push_back(row);
    return result;
}

namespace {

json arch_to_json(const nn::CnnArchitecture& a) {
    return json{{"window_frames", a.window_frames},   {"feature_width", a.feature_width},
                {"conv1_channels", a.conv1_channels}, {"conv1_kernel", a.conv1_kernel},
                {"conv2_channels", a.conv2_channels}, {"conv2_kernel", a.conv2_kernel},
                {"hidden_units", a.hidden_units},     {"output_units", a.output_units}};
}

nn::CnnArchitecture arch_from_json(const json& j) {
    nn::CnnArchitecture a;
    a.window_frames = j.at("window_frames").get<int>();
    a.feature_width = j.at("feature_width").get<int>();
    a.conv1_channels = j.at("conv1_channels").get<int>();
    a.conv1_kernel = j.at("conv1_kernel").get<int>();
    a.conv2_channels = j.at("conv2_channels").get<int>();
    a.conv2_kernel = j.at("conv2_kernel").get<int>();
    a.hidden_units = j.at("hidden_units").get<int>();
    a.output_units = j.at("output_units").get<int>();
    return a;
}

json config_to_json(const TrainConfig& c) {
    return json{{"format", "qtcnn-config"},
                {"version", 1},
                {"mode", to_string(c.mode)},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"n_blocks", c.n_blocks},
                {"mapping_hidden", c.mapping_hidden},
                {"arch.window_frames", c.arch.window_frames},
                {"arch.feature_width", c.arch.feature_width},
                {"arch.conv1_channels", c.arch.conv1_channels},
                {"arch.conv1_kernel", c.arch.conv1_kernel},
                {"arch.conv2_channels", c.arch.conv2_channels},
                {"arch.conv2_kernel", c.arch.conv2_kernel},
                {"arch.hidden_units", c.arch.hidden_units},
                {"arch.output_units", c.arch.output_units},
                {"seed.init", c.seeds.init},
                {"seed.shuffle", c.seeds.shuffle},
                {"seed.split", c.seeds.split},
                {"data.kind",
                 c.dataset.kind == DatasetSpec::Kind::synth ? "synth" : "manifest"},
                {"data.manifest", c.dataset.manifest_path},
                {"data.synth_per_class", c.dataset.synth_per_class},
                {"data.synth_separation", c.dataset.synth_separation},
                {"data.synth_ratios", c.dataset.synth_ratios}};
}

json metrics_to_json(const Metrics& m) {
    return json{{"loss", m.loss},
                {"accuracy", m.accuracy},
                {"true_positive", m.confusion.true_positive},
                {"true_negative", m.confusion.true_negative},
                {"false_positive", m.confusion.false_positive},
                {"false_negative", m.confusion.false_negative}};
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const TrainConfig& config, const std::string& path) {
    json j{{"format", "qtcnn-checkpoint"},
           {"version", 1},
           {"mode", to_string(ckpt.mode)},
           {"arch", arch_to_json(ckpt.arch)},
           {"config", config_to_json(config)}};
    if (ckpt.mode == TrainMode::classical) {
        j["theta"] = ckpt.theta;
    } else {
        j["qt"] = json{{"n_qubits", ckpt.qt.qnn.n_qubits},
                       {"n_blocks", ckpt.qt.qnn.n_blocks},
                       {"mapping_hidden", ckpt.qt.mapping.hidden},
                       {"phi", ckpt.qt.phi},
                       {"gamma", ckpt.qt.mapping.gamma},
                       {"scale", ckpt.qt.scaling.scale},
                       {"shift", ckpt.qt.scaling.shift}};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        if (j.at("format") != "qtcnn-checkpoint") throw SchemaError(path + ": not a checkpoint");
        Checkpoint c;
        c.mode = train_mode_from_string(j.at("mode").get<std::string>());
        c.arch = arch_from_json(j.at("arch"));
        if (c.mode == TrainMode::classical) {
            c.theta = j.at("theta").get<std::vector<double>>();
        } else {
            const json& q = j.at("qt");
            c.qt.qnn = qsim::QnnConfig(q.at("n_qubits").get<int>(), q.at("n_blocks").get<int>());
            c.qt.phi = q.at("phi").get<std::vector<double>>();
            c.qt.mapping =
                qtcore::MappingModel(c.qt.qnn.n_qubits + 1, q.at("mapping_hidden").get<int>(),
                                     q.at("gamma").get<std::vector<double>>());
            c.qt.scaling.scale = q.at("scale").get<std::array<double, 4>>();
            c.qt.scaling.shift = q.at("shift").get<std::array<double, 4>>();
        }
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

void write_run_record(const RunRecord& record, const std::string& path) {
    json epochs = json::array();
    for (const EpochMetrics& em : record.epochs) {
        epochs.push_back(json{{"train_loss", em.train_loss},
                              {"train_accuracy", em.train_accuracy},
                              {"val_loss", em.val_loss},
                              {"val_accuracy", em.val_accuracy},
                              {"seconds", em.seconds}});
    }
    json j{{"format", "qtcnn-run-record"},
           {"version", 1},
           {"config", config_to_json(record.config)},
           {"epochs", epochs},
           {"test", metrics_to_json(record.test)},
           {"trainable_params", record.trainable_params},
           {"parameter_ratio", record.parameter_ratio},
           {"best_epoch", record.best_epoch}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_metrics_csv(const RunRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds\n";
    for (std::size_t i = 0; i < record.epochs.size(); ++i) {
        const EpochMetrics& em = record.epochs[i];
        out << (i + 1) << ',' << format_double(em.train_loss) << ','
            << format_double(em.train_accuracy) << ',' << format_double(em.val_loss) << ','
            << format_double(em.val_accuracy) << ',' << format_double(em.seconds) << '\n';
    }
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "n_blocks,trainable_params,parameter_ratio,train_accuracy,test_accuracy\n";
    for (const SweepRow& row : sweep.rows) {
        out << row.n_blocks << ',' << row.trainable_params << ','
            << format_double(row.parameter_ratio) << ',' << format_double(row.train_accuracy)
            << ',' << format_double(row.test_accuracy) << '\n';
    }
}

std::string format_sweep_table(const SweepResult& sweep) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%10s %10s %8s %11s %10s\n", "blocks", "trainable", "ratio",
                  "train_acc", "test_acc");
    os << line;
    for (const SweepRow& row : sweep.rows) {
        const std::string label = row.n_blocks == 0 ? "classical" : std::to_string(row.n_blocks);
        std::snprintf(line, sizeof(line), "%10s %10zu %7.2f%% %11.4f %10.4f\n", label.c_str(),
                      row.trainable_params, 100.0 * row.parameter_ratio, row.train_accuracy,
                      row.test_accuracy);
        os << line;
    }
    return os.str();
}

std::string params_report(const nn::CnnArchitecture& arch, int n_blocks, int mapping_hidden) {
    const std::size_t m = nn::count_cnn_params(arch);
    const int n_qubits = qtcore::required_qubits(m);
    const auto groups = arch.group_sizes();
    const std::size_t qnn = static_cast<std::size_t>(n_qubits) * n_blocks;
    const std::size_t mapping =
        qtcore::MappingModel::expected_params(n_qubits + 1, mapping_hidden);
    const std::size_t scaling = qtcore::ScalingModel::param_count();
    const std::size_t total = qnn + mapping + scaling;
    const double ratio = 100.0 * static_cast<double>(total) / static_cast<double>(m);

    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "cnn parameters (M)       : %zu  [conv1 %zu | conv2 %zu | fc1 %zu | fc2 %zu]\n",
                  m, groups[0], groups[1], groups[2], groups[3]);
    os << line;
    std::snprintf(line, sizeof(line), "qubits (N = ceil log2 M) : %d\n", n_qubits);
    os << line;
    std::snprintf(line, sizeof(line), "qnn angles (N x blocks)  : %zu  (blocks = %d)\n", qnn,
                  n_blocks);
    os << line;
    std::snprintf(line, sizeof(line), "mapping model            : %zu\n", mapping);
    os << line;
    std::snprintf(line, sizeof(line), "scaling model            : %zu\n", scaling);
    os << line;
    std::snprintf(line, sizeof(line), "qt trainable total       : %zu\n", total);
    os << line;
    std::snprintf(line, sizeof(line), "parameter ratio          : %.2f%%  (%zu / %zu)\n", ratio,
                  total, m);
    os << line;
    if (m == 3373 && n_qubits == 12 && mapping_hidden == 20) {
        os << "note: reference totals published for this configuration (456 at 12 blocks,\n"
              "1464 at 96 blocks) exceed the exact component sums (453, 1461) by 3; the\n"
              "counts above are the exact sums of the components listed.\n";
    }
    return os.str();
}

std::string config_to_flat_json(const TrainConfig& config, int indent) {
    return config_to_json(config).dump(indent);
}

TrainConfig config_from_flat_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    try {
        TrainConfig c;
        if (j.contains("format") && j.at("format") != "qtcnn-config") {
            throw SchemaError("config: unexpected format tag");
        }
        if (j.contains("mode")) c.mode = train_mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
        if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("n_blocks")) c.n_blocks = j.at("n_blocks").get<int>();
        if (j.contains("mapping_hidden")) c.mapping_hidden = j.at("mapping_hidden").get<int>();
        auto arch_int = [&](const char* key, int& field) {
            if (j.contains(key)) field = j.at(key).get<int>();
        };
        arch_int("arch.window_frames", c.arch.window_frames);
        arch_int("arch.feature_width", c.arch.feature_width);
        arch_int("arch.conv1_channels", c.arch.conv1_channels);
        arch_int("arch.conv1_kernel", c.arch.conv1_kernel);
        arch_int("arch.conv2_channels", c.arch.conv2_channels);
        arch_int("arch.conv2_kernel", c.arch.conv2_kernel);
        arch_int("arch.hidden_units", c.arch.hidden_units);
        arch_int("arch.output_units", c.arch.output_units);
        if (j.contains("seed.init")) c.seeds.init = j.at("seed.init").get<std::uint64_t>();
        if (j.contains("seed.shuffle")) c.seeds.shuffle = j.at("seed.shuffle").get<std::uint64_t>();
        if (j.contains("seed.split")) c.seeds.split = j.at("seed.split").get<std::uint64_t>();
        if (j.contains("data.kind")) {
            const std::string kind = j.at("data.kind").get<std::string>();
            if (kind == "synth") {
                c.dataset.kind = DatasetSpec::Kind::synth;
            } else if (kind == "manifest") {
                c.dataset.kind = DatasetSpec::Kind::manifest;
            } else {
                throw SchemaError("config: unknown data.kind \"" + kind + "\"");
            }
        }
        if (j.contains("data.manifest")) {
            c.dataset.manifest_path = j.at("data.manifest").get<std::string>();
        }
        if (j.contains("data.synth_per_class")) {
            c.dataset.synth_per_class = j.at("data.synth_per_class").get<std::size_t>();
        }
        if (j.contains("data.synth_separation")) {
            c.dataset.synth_separation = j.at("data.synth_separation").get<double>();
        }
        if (j.contains("data.synth_ratios")) {
            c.dataset.synth_ratios = j.at("data.synth_ratios").get<std::array<double, 3>>();
        }
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
}

}  // namespace qtcnn::runner
