// Command-line front end: data synthesis, training, evaluation, fine-tuning,
// pruning, benchmarking, and model inspection.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adbn/bench.hpp"
#include "adbn/config.hpp"
#include "adbn/data.hpp"
#include "adbn/dbn.hpp"
#include "adbn/errors.hpp"
#include "adbn/finetune.hpp"
#include "adbn/model_io.hpp"
#include "adbn/structure.hpp"

namespace fs = std::filesystem;
using namespace adbn;

namespace {

// Exit codes shared with the error hierarchy in errors.hpp.
constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;
constexpr int kExitTraining = 5;

struct SharedFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool out_dir_given = false;
    std::vector<std::string> overrides;  // key=value pairs from --set
};

void add_shared_flags(CLI::App* cmd, SharedFlags& shared) {
    cmd->add_option("--config", shared.config_path, "key=value config file");
    cmd->add_option("--seed", shared.seed, "root RNG seed (overrides the config)")
        ->each([&shared](const std::string&) { shared.seed_given = true; });
    cmd->add_option("--out-dir", shared.out_dir, "directory for run artifacts")
        ->each([&shared](const std::string&) { shared.out_dir_given = true; });
    cmd->add_option("--set", shared.overrides, "extra config overrides, key=value")
        ->take_all();
}

RunConfig resolve_config(const SharedFlags& shared) {
    RunConfig config;
    if (!shared.config_path.empty()) config.load_file(shared.config_path);
    for (const std::string& pair : shared.overrides) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw UsageError("--set expects key=value, got '" + pair + "'");
        config.set(pair.substr(0, eq), pair.substr(eq + 1));
    }
    if (shared.seed_given) config.set("seed", std::to_string(shared.seed));
    if (shared.out_dir_given) config.set("out_dir", shared.out_dir);
    return config;
}

// Creates the artifact directory and records the resolved snapshot that
// reproduces this run.
fs::path prepare_out_dir(const RunConfig& config) {
    const fs::path out_dir = config.get_string("out_dir");
    fs::create_directories(out_dir);
    config.write_snapshot(out_dir / "config-resolved.txt");
    return out_dir;
}

struct SplitSets {
    LabeledPatchSet train;
    LabeledPatchSet test;
    std::string source_summary;
};

SplitSets load_splits(const RunConfig& config, bool synthetic) {
    const PreprocessConfig pp = preprocess_config_from(config);
    SplitSets out;
    if (synthetic) {
        const int train_pairs = static_cast<int>(config.get_int("synth.train_per_class"));
        const int test_pairs = static_cast<int>(config.get_int("synth.test_per_class"));
        const SyntheticConfig synth = synthetic_config_from(config, train_pairs + test_pairs);
        const std::vector<ImagePatch> all = generate_synthetic_crack_set(synth);
        std::vector<ImagePatch> train_patches, test_patches;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const bool is_train = static_cast<int>(i / 2) < train_pairs;
            (is_train ? train_patches : test_patches).push_back(all[i]);
        }
        out.train = preprocess_all(train_patches, pp);
        out.test = preprocess_all(test_patches, pp);
        std::ostringstream summary;
        summary << "synthetic data: " << train_patches.size() << " train / "
                << test_patches.size() << " test patches, side " << synth.side;
        out.source_summary = summary.str();
    } else {
        const std::string root = config.get_string("data.root");
        if (root.empty())
            throw UsageError("no dataset: provide --data (or data.root) or pass --synthetic");
        const std::string manifest = config.get_string("data.manifest");
        const DatasetLoadResult loaded =
            load_dataset(root, manifest.empty() ? fs::path{} : fs::path(manifest));
        for (std::size_t i = 0; i < loaded.errors.size(); ++i) {
            if (i == 8) {
                std::cerr << "  ... " << (loaded.errors.size() - i) << " more\n";
                break;
            }
            std::cerr << "warning: " << loaded.errors[i] << '\n';
        }
        out.train = preprocess_all(loaded.train, pp);
        out.test = preprocess_all(loaded.test, pp);
        out.source_summary = format_category_counts(loaded.train_counts, loaded.test_counts);
    }
    return out;
}

void require_matching_preprocess(const DbnModel& model, const PreprocessConfig& pp) {
    if (model.preprocess_hash != pp.hash()) {
        char expected[16], got[16];
        std::snprintf(expected, sizeof(expected), "%08X", model.preprocess_hash);
        std::snprintf(got, sizeof(got), "%08X", pp.hash());
        throw DataError(std::string("preprocessing mismatch: model was built with pipeline hash ") +
                        expected + " but the current configuration hashes to " + got);
    }
}

std::string arrow_sizes(const std::vector<Eigen::Index>& sizes) {
    std::ostringstream out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i > 0) out << " -> ";
        out << sizes[i];
    }
    return out.str();
}

std::size_t parameter_count(const DbnModel& model) {
    std::size_t n = 0;
    for (const RbmParams& layer : model.layers)
        n += static_cast<std::size_t>(layer.visible_bias.size() + layer.hidden_bias.size() +
                                      layer.weights.size());
    n += static_cast<std::size_t>(model.head.weights.size() + model.head.bias.size());
    return n;
}

const std::vector<std::string> kClassNames = {"non-cracked", "cracked"};

int cmd_train(const SharedFlags& shared, bool synthetic, const std::string& model_out) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    const SplitSets data = load_splits(config, synthetic);
    if (data.train.size() == 0) throw DataError("training split is empty");

    const TrainConfig train_config = train_config_from(config);
    const StructureThresholds thresholds = thresholds_from(config);
    Rng rng(config.get_u64("seed"));

    const fs::path model_path =
        model_out.empty() ? out_dir / "model.adbn" : fs::path(model_out);
    DbnModel model;
    try {
        model = train_adaptive_dbn(data.train, train_config, thresholds, rng);
    } catch (const TrainingError& e) {
        std::ofstream marker(out_dir / "FAILED.txt");
        marker << "training failed: " << e.what() << '\n';
        throw;
    }
    save_model(model, model_path);

    std::ostringstream report;
    report << data.source_summary << '\n';
    report << "hidden layers: " << arrow_sizes(model.hidden_sizes()) << '\n';
    report << "parameters: " << parameter_count(model) << "\n\n";
    const EvalMetrics train_metrics = evaluate(model, data.train);
    report << "training split:\n"
           << format_classification_report(train_metrics, kClassNames) << '\n';
    if (data.test.size() > 0) {
        const EvalMetrics test_metrics = evaluate(model, data.test);
        report << "test split:\n" << format_classification_report(test_metrics, kClassNames)
               << '\n';
    }
    report << "structure log:\n";
    for (const StructureEvent& event : model.structure_log)
        report << "  " << event.to_line() << '\n';

    std::ofstream report_file(out_dir / "train-report.txt");
    report_file << report.str();
    std::cout << report.str();
    std::cout << "model written to " << model_path.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const SharedFlags& shared, bool synthetic, const std::string& model_path) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    const DbnModel model = load_model(fs::path(model_path));
    const PreprocessConfig pp = preprocess_config_from(config);
    require_matching_preprocess(model, pp);

    const SplitSets data = load_splits(config, synthetic);
    const bool use_test = data.test.size() > 0;
    const LabeledPatchSet& split = use_test ? data.test : data.train;
    if (split.size() == 0) throw DataError("no samples to evaluate");

    const EvalMetrics metrics = evaluate(model, split);
    std::ostringstream report;
    report << (use_test ? "test split:\n" : "training split (no test split found):\n");
    report << format_classification_report(metrics, kClassNames);
    std::ofstream report_file(out_dir / "eval-report.txt");
    report_file << report.str();
    std::cout << report.str();
    return kExitOk;
}

int cmd_finetune(const SharedFlags& shared, bool synthetic, const std::string& model_path,
                 const std::string& model_out, bool skip_prune) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    DbnModel model = load_model(fs::path(model_path));
    const PreprocessConfig pp = preprocess_config_from(config);
    require_matching_preprocess(model, pp);

    const SplitSets data = load_splits(config, synthetic);
    if (data.train.size() == 0) throw DataError("training split is empty");
    Rng rng(config.get_u64("seed"));

    const ActivationStats before = collect_activation_stats(model, data.train);
    std::cout << "pre-tune train accuracy: " << before.accuracy() * 100.0 << "%\n";

    const FinetuneConfig ft = finetune_config_from(config);
    DbnModel tuned = finetune_weights(model, data.train, ft, rng);
    const ActivationStats after = collect_activation_stats(tuned, data.train);
    std::cout << "post-tune train accuracy: " << after.accuracy() * 100.0 << "%\n";

    DbnModel final_model = std::move(tuned);
    std::ostringstream report;
    if (!skip_prune) {
        const PruneConfig prune_config = prune_config_from(config);
        auto [pruned, prune_report] = prune_inactive_neurons(final_model, after, prune_config);
        prune_report.accuracy_after =
            static_cast<double>(evaluate(pruned, data.train).correct) /
            static_cast<double>(data.train.size());
        final_model = std::move(pruned);
        report << prune_report.to_text();
    }
    if (data.test.size() > 0) {
        const EvalMetrics test_metrics = evaluate(final_model, data.test);
        report << "test split:\n" << format_classification_report(test_metrics, kClassNames);
    }

    const fs::path out_path =
        model_out.empty() ? out_dir / "model-finetuned.adbn" : fs::path(model_out);
    save_model(final_model, out_path);
    std::ofstream report_file(out_dir / "finetune-report.txt");
    report_file << report.str();
    std::cout << report.str();
    std::cout << "model written to " << out_path.string() << '\n';
    return kExitOk;
}

int cmd_prune(const SharedFlags& shared, bool synthetic, const std::string& model_path,
              const std::string& model_out) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    const DbnModel model = load_model(fs::path(model_path));
    const PreprocessConfig pp = preprocess_config_from(config);
    require_matching_preprocess(model, pp);

    const SplitSets data = load_splits(config, synthetic);
    if (data.train.size() == 0) throw DataError("training split is empty");

    const ActivationStats stats = collect_activation_stats(model, data.train);
    auto [pruned, report] = prune_inactive_neurons(model, stats, prune_config_from(config));
    report.accuracy_after = static_cast<double>(evaluate(pruned, data.train).correct) /
                            static_cast<double>(data.train.size());

    const fs::path out_path =
        model_out.empty() ? out_dir / "model-pruned.adbn" : fs::path(model_out);
    save_model(pruned, out_path);
    std::ofstream report_file(out_dir / "prune-report.txt");
    report_file << report.to_text();
    std::cout << report.to_text();
    std::cout << "model written to " << out_path.string() << '\n';
    return kExitOk;
}

int cmd_bench(const SharedFlags& shared, const std::string& model_path,
              const std::string& model_b_path) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    const DbnModel model = load_model(fs::path(model_path));
    const PreprocessConfig pp = preprocess_config_from(config);
    require_matching_preprocess(model, pp);
    const BenchConfig bench_config = bench_config_from(config);
    const FrameStreamConfig stream_config = frame_stream_config_from(config);

    FrameStream stream(stream_config);
    const BenchReport report =
        benchmark_inference(model, stream, pp, bench_config, fs::path(model_path).filename());
    write_bench_report(report, out_dir / "bench-summary.txt", out_dir / "bench-samples.csv");
    std::cout << format_bench_summary(report);

    if (!model_b_path.empty()) {
        const DbnModel model_b = load_model(fs::path(model_b_path));
        require_matching_preprocess(model_b, pp);
        FrameStream stream_b(stream_config);  // same frames for a fair comparison
        const BenchReport report_b = benchmark_inference(model_b, stream_b, pp, bench_config,
                                                         fs::path(model_b_path).filename());
        write_bench_report(report_b, out_dir / "bench-summary-b.txt",
                           out_dir / "bench-samples-b.csv");
        const BenchComparison cmp = compare_models(report, report_b);
        if (cmp.machine_mismatch)
            std::cerr << "warning: reports come from different machine descriptors\n";
        std::cout << "--- comparison (b vs a) ---\n";
        std::cout << "b mean_ms=" << report_b.mean_ms << " fps=" << report_b.fps << '\n';
        std::cout << "latency_delta_percent=" << cmp.latency_delta_percent << '\n';
        std::cout << "fps_delta=" << cmp.fps_delta << '\n';
    }
    return kExitOk;
}

int cmd_synth_data(const SharedFlags& shared, const std::string& target) {
    const RunConfig config = resolve_config(shared);
    const fs::path out_dir = prepare_out_dir(config);
    const int train_pairs = static_cast<int>(config.get_int("synth.train_per_class"));
    const int test_pairs = static_cast<int>(config.get_int("synth.test_per_class"));
    const SyntheticConfig synth = synthetic_config_from(config, train_pairs + test_pairs);
    const std::vector<ImagePatch> patches = generate_synthetic_crack_set(synth);

    const fs::path root = target.empty() ? out_dir / "synthetic-data" : fs::path(target);
    const fs::path manifest = write_image_dataset(patches, root, train_pairs);
    std::cout << "wrote " << patches.size() << " images under " << root.string() << '\n';
    std::cout << "manifest: " << manifest.string() << '\n';
    return kExitOk;
}

int cmd_inspect(const std::string& model_path) {
    const DbnModel model = load_model(fs::path(model_path));

    std::cout << "input dim: " << model.input_dim << '\n';
    std::cout << "classes: " << model.num_classes() << '\n';
    std::cout << "parameters: " << parameter_count(model) << '\n';
    char hash[16];
    std::snprintf(hash, sizeof(hash), "%08X", model.preprocess_hash);
    std::cout << "preprocess hash: " << hash << '\n';

    // Replay without the post-training prune events to recover the shape the
    // trainer produced, next to the shape the file actually holds.
    std::vector<StructureEvent> training_only;
    bool has_prune = false;
    for (const StructureEvent& event : model.structure_log) {
        if (event.kind == StructureEvent::Kind::neurons_pruned)
            has_prune = true;
        else
            training_only.push_back(event);
    }
    if (has_prune) {
        std::cout << "neurons before pruning: " << arrow_sizes(replay_structure_log(training_only))
                  << '\n';
        std::cout << "neurons after pruning:  " << arrow_sizes(model.hidden_sizes()) << '\n';
    } else {
        std::cout << "neurons: " << arrow_sizes(model.hidden_sizes()) << '\n';
    }
    std::cout << "structure log:\n";
    for (const StructureEvent& event : model.structure_log)
        std::cout << "  " << event.to_line() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive deep-belief-network crack classifier"};
    app.require_subcommand(1);

    SharedFlags shared;
    bool synthetic = false;
    std::string model_path, model_b_path, model_out, target_dir;
    bool skip_prune = false;

    CLI::App* train = app.add_subcommand("train", "pre-train an adaptive DBN and fit its head");
    add_shared_flags(train, shared);
    train->add_flag("--synthetic", synthetic, "train on generated crack patches");
    train->add_option("--data", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.root=" + v.back());
        return true;
    }, "dataset root directory");
    train->add_option("--manifest", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.manifest=" + v.back());
        return true;
    }, "split manifest (relative-path<TAB>train|test)");
    train->add_option("--model-out", model_out, "output model path");

    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a model on a dataset");
    add_shared_flags(evaluate_cmd, shared);
    evaluate_cmd->add_flag("--synthetic", synthetic, "evaluate on generated crack patches");
    evaluate_cmd->add_option("--data", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.root=" + v.back());
        return true;
    }, "dataset root directory");
    evaluate_cmd->add_option("--manifest", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.manifest=" + v.back());
        return true;
    }, "split manifest");
    evaluate_cmd->add_option("--model", model_path, "model file")->required();

    CLI::App* finetune_cmd =
        app.add_subcommand("finetune", "supervised fine-tune, then prune inactive neurons");
    add_shared_flags(finetune_cmd, shared);
    finetune_cmd->add_flag("--synthetic", synthetic, "tune on generated crack patches");
    finetune_cmd->add_option("--data", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.root=" + v.back());
        return true;
    }, "dataset root directory");
    finetune_cmd->add_option("--manifest", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.manifest=" + v.back());
        return true;
    }, "split manifest");
    finetune_cmd->add_option("--model", model_path, "model file")->required();
    finetune_cmd->add_option("--model-out", model_out, "output model path");
    finetune_cmd->add_flag("--no-prune", skip_prune, "skip the pruning pass");

    CLI::App* prune_cmd = app.add_subcommand("prune", "remove inactive neurons from a model");
    add_shared_flags(prune_cmd, shared);
    prune_cmd->add_flag("--synthetic", synthetic, "measure activations on generated patches");
    prune_cmd->add_option("--data", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.root=" + v.back());
        return true;
    }, "dataset root directory");
    prune_cmd->add_option("--manifest", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("data.manifest=" + v.back());
        return true;
    }, "split manifest");
    prune_cmd->add_option("--model", model_path, "model file")->required();
    prune_cmd->add_option("--model-out", model_out, "output model path");

    CLI::App* bench_cmd = app.add_subcommand("bench", "measure inference latency and FPS");
    add_shared_flags(bench_cmd, shared);
    bench_cmd->add_option("--model", model_path, "model file")->required();
    bench_cmd->add_option("--model-b", model_b_path, "second model to compare against");
    bench_cmd->add_option("--frames", [&shared](const std::vector<std::string>& v) {
        shared.overrides.push_back("bench.frames_dir=" + v.back());
        return true;
    }, "directory of frames to replay (default: synthetic frames)");

    CLI::App* synth_cmd = app.add_subcommand("synth-data", "write a synthetic crack dataset");
    add_shared_flags(synth_cmd, shared);
    synth_cmd->add_option("--out", target_dir, "dataset directory (default <out-dir>/synthetic-data)");

    CLI::App* inspect_cmd = app.add_subcommand("inspect", "print a model's structure");
    inspect_cmd->add_option("--model", model_path, "model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(shared, synthetic, model_out);
        if (evaluate_cmd->parsed()) return cmd_evaluate(shared, synthetic, model_path);
        if (finetune_cmd->parsed())
            return cmd_finetune(shared, synthetic, model_path, model_out, skip_prune);
        if (prune_cmd->parsed()) return cmd_prune(shared, synthetic, model_path, model_out);
        if (bench_cmd->parsed()) return cmd_bench(shared, model_path, model_b_path);
        if (synth_cmd->parsed()) return cmd_synth_data(shared, target_dir);
        if (inspect_cmd->parsed()) return cmd_inspect(model_path);
        std::cerr << "error: no command\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const ModelIoError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnexpected;
    }
}
