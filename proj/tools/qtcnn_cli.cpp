// qtcnn: data preparation, training, evaluation, block sweeps and parameter
// accounting for the quantum-trained CNN.
//
// Exit codes: 0 success, 2 usage/config/schema errors, 3 numeric failures.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qtcnn/data.hpp"
#include "qtcnn/error.hpp"
#include "qtcnn/runner.hpp"

namespace fs = std::filesystem;
using namespace qtcnn;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir = ".";
    bool quiet = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

// "12,24,36" or "12:96:12" (inclusive range with step).
std::vector<int> parse_block_list(const std::string& text) {
    std::vector<int> blocks;
    try {
        if (text.find(':') != std::string::npos) {
            int lo = 0, hi = 0, step = 0;
            if (std::sscanf(text.c_str(), "%d:%d:%d", &lo, &hi, &step) != 3 || step <= 0) {
                throw InvalidArgument("");
            }
            for (int b = lo; b <= hi; b += step) blocks.push_back(b);
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) blocks.push_back(std::stoi(item));
        }
    } catch (const std::exception&) {
        throw InvalidArgument("cannot parse block list \"" + text +
                              "\" (use 12,24,36 or 12:96:12)");
    }
    if (blocks.empty()) throw InvalidArgument("block list is empty");
    for (int b : blocks) {
        if (b < 1) throw InvalidArgument("block counts must be >= 1");
    }
    return blocks;
}

void print_metrics(const char* split, const runner::Metrics& m) {
    std::printf("%s: loss %.6f accuracy %.4f  [tp %zu tn %zu fp %zu fn %zu]\n", split, m.loss,
                m.accuracy, m.confusion.true_positive, m.confusion.true_negative,
                m.confusion.false_positive, m.confusion.false_negative);
}

runner::EpochCallback progress_printer(bool quiet) {
    if (quiet) return {};
    return [](int epoch, const runner::EpochMetrics& em) {
        std::printf("epoch %3d  train loss %.6f acc %.4f  val loss %.6f acc %.4f  (%.2fs)\n",
                    epoch, em.train_loss, em.train_accuracy, em.val_loss, em.val_accuracy,
                    em.seconds);
        std::fflush(stdout);
    };
}

int run_prepare(const GlobalFlags& global, const std::string& input,
                const data::PrepareOptions& options) {
    const data::PreparedDataset prepared = data::prepare_dataset(input, options);
    ensure_out_dir(global.out_dir);
    const std::string manifest_path = (fs::path(global.out_dir) / "manifest.json").string();
    data::save_manifest(prepared.manifest, manifest_path);
    if (!global.quiet) {
        for (const auto& w : prepared.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        std::printf("labels: \"%s\" -> 0, \"%s\" -> 1\n", prepared.manifest.label_names[0].c_str(),
                    prepared.manifest.label_names[1].c_str());
        std::printf("windows: train %zu, validation %zu, test %zu (window %d, %zu features)\n",
                    prepared.splits.train.size(), prepared.splits.validation.size(),
                    prepared.splits.test.size(), prepared.manifest.window,
                    prepared.manifest.feature_names.size());
        std::printf("wrote %s\n", manifest_path.c_str());
    }
    return 0;
}

int run_train(const GlobalFlags& global, const runner::TrainConfig& config) {
    const data::DatasetSplits splits = runner::load_splits(config);
    const runner::RunRecord record =
        config.mode == runner::TrainMode::qt
            ? runner::train_qt(config, splits, progress_printer(global.quiet))
            : runner::train_classical(config, splits, progress_printer(global.quiet));

    ensure_out_dir(global.out_dir);
    const fs::path dir(global.out_dir);
    {
        std::ofstream out(dir / "config.json");
        out << runner::config_to_flat_json(config) << "\n";
    }
    runner::write_run_record(record, (dir / "record.json").string());
    runner::write_metrics_csv(record, (dir / "metrics.csv").string());
    runner::save_checkpoint(record.best, config, (dir / "checkpoint.json").string());

    if (!global.quiet) {
        std::printf("mode %s, trainable parameters %zu, parameter ratio %.2f%%\n",
                    runner::to_string(config.mode).c_str(), record.trainable_params,
                    100.0 * record.parameter_ratio);
        std::printf("best epoch %d\n", record.best_epoch);
        print_metrics("test", record.test);
        std::printf("wrote %s\n", (dir / "record.json").string().c_str());
    }
    return 0;
}

int run_sweep(const GlobalFlags& global, const runner::TrainConfig& config,
              const std::vector<int>& blocks) {
    const runner::SweepResult sweep = runner::sweep_blocks(config, blocks);
    ensure_out_dir(global.out_dir);
    const fs::path dir(global.out_dir);
    {
        std::ofstream out(dir / "config.json");
        out << runner::config_to_flat_json(config) << "\n";
    }
    runner::write_sweep_csv(sweep, (dir / "sweep.csv").string());
    const std::string table = runner::format_sweep_table(sweep);
    {
        std::ofstream out(dir / "sweep.txt");
        if (!out) throw IoError("cannot write sweep.txt");
        out << table;
    }
    if (!global.quiet) std::fputs(table.c_str(), stdout);
    return 0;
}

int run_eval(const std::string& checkpoint_path, const runner::TrainConfig& config,
             const std::string& split_name) {
    const runner::Checkpoint ckpt = runner::load_checkpoint(checkpoint_path);
    runner::TrainConfig effective = config;
    effective.arch = ckpt.arch;
    const data::DatasetSplits splits = runner::load_splits(effective);
    const data::WindowedDataset* split = &splits.test;
    if (split_name == "train") {
        split = &splits.train;
    } else if (split_name == "validation") {
        split = &splits.validation;
    } else if (split_name != "test") {
        throw InvalidArgument("unknown split \"" + split_name + "\"");
    }
    const runner::Metrics m = ckpt.mode == runner::TrainMode::qt
                                  ? runner::evaluate(ckpt.qt, ckpt.arch, *split)
                                  : runner::evaluate(ckpt.arch, ckpt.theta, *split);
    print_metrics(split_name.c_str(), m);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-trained CNN: train a small CNN whose weights are generated\n"
                 "from a simulated quantum circuit, or train the same CNN classically"};
    app.require_subcommand(1);

    GlobalFlags global;
    app.add_option("--config", global.config_path, "flat-key JSON config file")
        ->envname("QTCNN_CONFIG");
    app.add_option("--out-dir", global.out_dir, "directory for output artifacts");
    app.add_flag("--quiet", global.quiet, "suppress progress output");
    std::uint64_t seed_all = 0;
    auto* seed_opt =
        app.add_option("--seed", seed_all, "derive init/shuffle/split seeds from one value");

    // prepare
    auto* prepare = app.add_subcommand("prepare", "ingest a feature CSV and write a manifest");
    std::string input_csv;
    data::PrepareOptions prep_options;
    std::vector<double> ratio_list;
    prepare->add_option("--input", input_csv, "feature CSV with a header row")->required();
    prepare->add_option("--label-col", prep_options.label_column, "label column name");
    prepare->add_option("--segment-col", prep_options.segment_column, "segment column name");
    prepare->add_option("--window", prep_options.window, "sliding window length");
    prepare->add_option("--ratios", ratio_list, "train/validation/test ratios")->expected(3);
    auto* prep_seed = prepare->add_option("--split-seed", prep_options.split_seed,
                                          "seed of the stratified split");

    // shared train/sweep/eval options
    runner::TrainConfig cli_config;
    std::string mode_name, manifest_path, blocks_text, checkpoint_path, split_name = "test";
    bool use_synth = false;
    auto add_train_options = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode_name, "qt or classical");
        cmd->add_option("--epochs", cli_config.epochs, "training epochs");
        cmd->add_option("--batch-size", cli_config.batch_size, "mini-batch size");
        cmd->add_option("--lr", cli_config.learning_rate, "learning rate");
        cmd->add_option("--blocks", cli_config.n_blocks, "QNN blocks (qt mode)");
        cmd->add_option("--hidden", cli_config.mapping_hidden, "mapping model hidden width");
        cmd->add_option("--manifest", manifest_path, "dataset manifest from `prepare`");
        cmd->add_flag("--synth", use_synth, "use the synthetic dataset");
        cmd->add_option("--synth-per-class", cli_config.dataset.synth_per_class,
                        "synthetic windows per class");
        cmd->add_option("--separation", cli_config.dataset.synth_separation,
                        "synthetic class separation");
        cmd->add_option("--window", cli_config.arch.window_frames, "architecture window frames");
        cmd->add_option("--features", cli_config.arch.feature_width, "architecture feature width");
    };

    auto* train = app.add_subcommand("train", "train one model and write a run directory");
    add_train_options(train);

    auto* sweep = app.add_subcommand("sweep", "train across block counts plus the baseline");
    add_train_options(sweep);
    sweep->add_option("--block-list", blocks_text, "12,24,36 or 12:96:12")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    add_train_options(eval);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--split", split_name, "train, validation or test");

    // params
    auto* params = app.add_subcommand("params", "parameter accounting report");
    int params_blocks = 12;
    int params_hidden = 20;
    params->add_option("--blocks", params_blocks, "QNN blocks");
    params->add_option("--hidden", params_hidden, "mapping model hidden width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) {
            if (ratio_list.size() == 3) {
                prep_options.ratios = {ratio_list[0], ratio_list[1], ratio_list[2]};
            }
            if (seed_opt->count() > 0 && prep_seed->count() == 0) {
                prep_options.split_seed = seed_all;
            }
            return run_prepare(global, input_csv, prep_options);
        }
        if (params->parsed()) {
            nn::CnnArchitecture arch;
            if (!global.config_path.empty()) {
                arch = runner::config_from_flat_json(read_file(global.config_path)).arch;
            }
            std::fputs(runner::params_report(arch, params_blocks, params_hidden).c_str(), stdout);
            return 0;
        }

        // train / sweep / eval assemble the config the same way:
        // file values first, then explicit flags on top
        runner::TrainConfig config;
        if (!global.config_path.empty()) {
            config = runner::config_from_flat_json(read_file(global.config_path));
        }
        CLI::App* cmd = train->parsed() ? train : (sweep->parsed() ? sweep : eval);
        if (cmd->count("--epochs") > 0) config.epochs = cli_config.epochs;
        if (cmd->count("--batch-size") > 0) config.batch_size = cli_config.batch_size;
        if (cmd->count("--lr") > 0) config.learning_rate = cli_config.learning_rate;
        if (cmd->count("--blocks") > 0) config.n_blocks = cli_config.n_blocks;
        if (cmd->count("--hidden") > 0) config.mapping_hidden = cli_config.mapping_hidden;
        if (cmd->count("--mode") > 0) config.mode = runner::train_mode_from_string(mode_name);
        if (cmd->count("--window") > 0) {
            config.arch.window_frames = cli_config.arch.window_frames;
        }
        if (cmd->count("--features") > 0) {
            config.arch.feature_width = cli_config.arch.feature_width;
        }
        if (cmd->count("--manifest") > 0) {
            config.dataset.kind = runner::DatasetSpec::Kind::manifest;
            config.dataset.manifest_path = manifest_path;
        }
        if (cmd->count("--synth") > 0) config.dataset.kind = runner::DatasetSpec::Kind::synth;
        if (cmd->count("--synth-per-class") > 0) {
            config.dataset.synth_per_class = cli_config.dataset.synth_per_class;
        }
        if (cmd->count("--separation") > 0) {
            config.dataset.synth_separation = cli_config.dataset.synth_separation;
        }
        if (seed_opt->count() > 0) {
            config.seeds = runner::SeedSet{seed_all, seed_all + 1, seed_all + 2};
        }
        if (config.dataset.kind == runner::DatasetSpec::Kind::manifest) {
            // the manifest pins window size and feature width
            const data::DatasetManifest m = data::load_manifest(config.dataset.manifest_path);
            config.arch.window_frames = m.window;
            config.arch.feature_width = static_cast<int>(m.feature_names.size());
        }

        if (train->parsed()) return run_train(global, config);
        if (sweep->parsed()) return run_sweep(global, config, parse_block_list(blocks_text));
        return run_eval(checkpoint_path, config, split_name);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
