#include "qadsb/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "qadsb/rng.hpp"
#include "qadsb/version.hpp"

namespace qadsb::pipeline {

namespace fs = std::filesystem;

namespace {

// Sub-seed streams so every stage is a pure function of (config seed, stage).
enum SeedStream : std::uint64_t {
    kSynthStream = 101,
    kSampleStream = 102,
    kSplitStream = 103,
};

// Rethrows with the failing pipeline stage named, preserving the error type.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const SchemaError& e) {
        throw SchemaError("stage " + name + ": " + e.what());
    } catch (const TrainingError& e) {
        throw TrainingError("stage " + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage " + name + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError("stage " + name + ": " + e.what());
    } catch (const IndexError& e) {
        throw IndexError("stage " + name + ": " + e.what());
    } catch (const StateError& e) {
        throw StateError("stage " + name + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + name + ": " + e.what());
    }
}

json tensor_to_json(const Tensor2& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor2 tensor_from_json(const json& j) {
    Tensor2 t(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    t.data = j.at("data").get<std::vector<double>>();
    if (t.data.size() != t.rows * t.cols) throw DataError("tensor payload size mismatch");
    return t;
}

json layer_to_json(const nn::DenseLayer& l) {
    return json{{"w", tensor_to_json(l.weights)}, {"b", l.bias}};
}

nn::DenseLayer layer_from_json(const json& j) {
    nn::DenseLayer l;
    l.weights = tensor_from_json(j.at("w"));
    l.bias = j.at("b").get<std::vector<double>>();
    return l;
}

json history_to_json(const std::vector<nn::EpochStats>& history) {
    json arr = json::array();
    for (const auto& e : history) {
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_accuracy", e.val.accuracy},
                       {"val_precision", e.val.precision},
                       {"val_recall", e.val.recall},
                       {"val_f1", e.val.f1},
                       {"val_undefined", e.val.undefined}});
    }
    return arr;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct PreparedData {
    data::SplitSet splits; // already standardized
    data::Standardizer standardizer;
    std::vector<std::string> kept_features;
    std::vector<std::string> dropped_features;
    std::size_t skipped_rows = 0;
};

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

json feature_matrix_to_json(const data::FeatureMatrix& fm) {
    return json{{"names", fm.feature_names},
                {"labels", fm.labels},
                {"values", tensor_to_json(fm.values)}};
}

data::FeatureMatrix feature_matrix_from_json(const json& j) {
    data::FeatureMatrix fm;
    fm.feature_names = j.at("names").get<std::vector<std::string>>();
    fm.labels = j.at("labels").get<std::vector<int>>();
    fm.values = tensor_from_json(j.at("values"));
    return fm;
}

data::LoadResult load_dataset(const ExperimentConfig& config) {
    if (config.dataset == "synthetic") {
        // Pool twice the requested sizes so sampling stays a genuine draw.
        const std::size_t pool_attack = 2 * config.attack_samples;
        const std::size_t pool_normal =
            2 * static_cast<std::size_t>(
                    std::floor(config.ratio * static_cast<double>(config.attack_samples)));
        data::LoadResult lr;
        lr.records = data::generate_synthetic(pool_normal, pool_attack,
                                              derive_seed(config.seed, kSynthStream));
        return lr;
    }
    return data::load_csv(config.dataset);
}

// Pre-standardization splits, cached when a cache dir is configured.
PreparedData prepare_data(const ExperimentConfig& config) {
    std::string cache_file;
    if (!config.split_cache_dir.empty()) {
        std::uint64_t key = config.dataset == "synthetic"
                                ? derive_seed(config.seed, kSynthStream)
                                : fnv1a_file(config.dataset);
        key = derive_seed(key, config.attack_samples);
        key = derive_seed(key, static_cast<std::uint64_t>(config.ratio * 1e6));
        key = derive_seed(key, static_cast<std::uint64_t>(config.feature_threshold * 1e6));
        key = derive_seed(key, config.seed);
        char name[32];
        std::snprintf(name, sizeof(name), "%016llx",
                      static_cast<unsigned long long>(key));
        fs::create_directories(config.split_cache_dir);
        cache_file = (fs::path(config.split_cache_dir) / (std::string(name) + ".json")).string();
        if (fs::exists(cache_file)) {
            std::ifstream in(cache_file);
            json j = json::parse(in);
            if (j.at("format_version").get<int>() == 1) {
                PreparedData prep;
                prep.splits.train = feature_matrix_from_json(j.at("train"));
                prep.splits.val = feature_matrix_from_json(j.at("val"));
                prep.splits.test = feature_matrix_from_json(j.at("test"));
                prep.kept_features = j.at("kept_features").get<std::vector<std::string>>();
                prep.dropped_features = j.at("dropped_features").get<std::vector<std::string>>();
                prep.skipped_rows = j.at("skipped_rows").get<std::size_t>();
                prep.standardizer = data::fit_standardizer(prep.splits.train);
                prep.splits.train = prep.standardizer.transform(prep.splits.train);
                prep.splits.val = prep.standardizer.transform(prep.splits.val);
                prep.splits.test = prep.standardizer.transform(prep.splits.test);
                return prep;
            }
        }
    }

    PreparedData prep;
    const data::LoadResult loaded = stage("load", [&] { return load_dataset(config); });
    prep.skipped_rows = loaded.skipped_rows;

    const data::FeatureMatrix full =
        stage("features", [&] { return data::to_feature_matrix(loaded.records); });
    data::FeatureSelection sel = stage(
        "select_features", [&] { return data::select_features(full, config.feature_threshold); });
    prep.kept_features = sel.kept;
    prep.dropped_features = sel.dropped;

    const data::SamplingPlan plan{config.attack_samples, config.ratio,
                                  derive_seed(config.seed, kSampleStream)};
    const data::FeatureMatrix sampled =
        stage("sample", [&] { return data::sample_stratified(sel.features, plan); });
    prep.splits = stage(
        "split", [&] { return data::split_70_20_10(sampled, derive_seed(config.seed, kSplitStream)); });

    if (!cache_file.empty()) {
        json j{{"format_version", 1},
               {"kept_features", prep.kept_features},
               {"dropped_features", prep.dropped_features},
               {"skipped_rows", prep.skipped_rows},
               {"train", feature_matrix_to_json(prep.splits.train)},
               {"val", feature_matrix_to_json(prep.splits.val)},
               {"test", feature_matrix_to_json(prep.splits.test)}};
        std::ofstream out(cache_file);
        out << j.dump();
    }

    prep.standardizer = stage("standardize", [&] {
        return data::fit_standardizer(prep.splits.train);
    });
    prep.splits.train = prep.standardizer.transform(prep.splits.train);
    prep.splits.val = prep.standardizer.transform(prep.splits.val);
    prep.splits.test = prep.standardizer.transform(prep.splits.test);
    return prep;
}

nn::ModelSpec model_spec_for(const ExperimentConfig& config, int n_features) {
    if (config.model == nn::ModelKind::Hfqnn) {
        return nn::ModelSpec::hfqnn(n_features, config.qubits, config.layers,
                                    config.rescale_inputs);
    }
    return nn::ModelSpec::fnn(n_features, config.qubits);
}

json model_spec_to_json(const nn::ModelSpec& spec) {
    return json{{"kind", nn::to_string(spec.kind)},
                {"n_features", spec.n_features},
                {"n_qubits", spec.n_qubits},
                {"n_layers", spec.circuit.n_layers},
                {"entangle_ranges", spec.circuit.entangle_ranges},
                {"rescale_inputs", spec.rescale_inputs}};
}

nn::ModelSpec model_spec_from_json(const json& j) {
    nn::ModelSpec spec;
    spec.kind = nn::model_kind_from_string(j.at("kind").get<std::string>());
    spec.n_features = j.at("n_features").get<int>();
    spec.n_qubits = j.at("n_qubits").get<int>();
    if (spec.kind == nn::ModelKind::Hfqnn) {
        spec.circuit.n_qubits = spec.n_qubits;
        spec.circuit.n_layers = j.at("n_layers").get<int>();
        spec.circuit.entangle_ranges = j.at("entangle_ranges").get<std::vector<int>>();
    }
    spec.rescale_inputs = j.at("rescale_inputs").get<bool>();
    spec.validate();
    return spec;
}

json params_to_json(const nn::ModelSpec& spec, const nn::ModelParams& p) {
    json j{{"input", layer_to_json(p.input)},
           {"hidden", layer_to_json(p.hidden)},
           {"output", layer_to_json(p.output)}};
    if (spec.kind == nn::ModelKind::Fnn) {
        j["bridge"] = layer_to_json(p.bridge);
    } else {
        j["quantum"] = json{{"n_layers", p.quantum.n_layers},
                            {"n_qubits", p.quantum.n_qubits},
                            {"values", p.quantum.values}};
    }
    return j;
}

nn::ModelParams params_from_json(const nn::ModelSpec& spec, const json& j) {
    nn::ModelParams p = nn::zero_grads(spec);
    p.input = layer_from_json(j.at("input"));
    p.hidden = layer_from_json(j.at("hidden"));
    p.output = layer_from_json(j.at("output"));
    if (spec.kind == nn::ModelKind::Fnn) {
        p.bridge = layer_from_json(j.at("bridge"));
    } else {
        const json& q = j.at("quantum");
        p.quantum.n_layers = q.at("n_layers").get<int>();
        p.quantum.n_qubits = q.at("n_qubits").get<int>();
        p.quantum.values = q.at("values").get<std::vector<double>>();
    }
    return p;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("invalid JSON in " + path + ": " + e.what());
    }
}

metrics::Derived evaluate_split(const nn::ModelSpec& spec, const nn::ModelParams& params,
                                const data::FeatureMatrix& split,
                                metrics::ConfusionMatrix& cm_out) {
    const std::vector<int> pred = nn::predict(spec, params, split.values);
    cm_out = metrics::confusion(pred, split.labels);
    return metrics::derive(cm_out);
}

} // namespace

void ExperimentConfig::validate() const {
    if (dataset.empty()) throw ConfigError("dataset must be a CSV path or 'synthetic'");
    if (dataset != "synthetic" && !fs::exists(dataset)) {
        throw ConfigError("dataset file does not exist: " + dataset);
    }
    if (attack_samples < 1) throw ConfigError("attack-samples must be >= 1");
    if (!(ratio > 0.0)) throw ConfigError("ratio must be positive");
    if (qubits < 1 || qubits > 12) throw ConfigError("qubits must be in [1, 12]");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (batch_size < 1) throw ConfigError("batch-size must be >= 1");
    if (!(feature_threshold > 0.0 && feature_threshold <= 1.0)) {
        throw ConfigError("feature threshold must be in (0, 1]");
    }
}

json ExperimentConfig::to_json() const {
    return json{{"dataset", dataset},
                {"model", nn::to_string(model)},
                {"loss", nn::to_string(loss)},
                {"attack_samples", attack_samples},
                {"ratio", ratio},
                {"qubits", qubits},
                {"layers", layers},
                {"epochs", epochs},
                {"learning_rate", learning_rate},
                {"batch_size", batch_size},
                {"seed", seed},
                {"out_dir", out_dir},
                {"feature_threshold", feature_threshold},
                {"rescale_inputs", rescale_inputs},
                {"split_cache_dir", split_cache_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    return from_json(j, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::from_json(const json& j, ExperimentConfig base) {
    static const std::set<std::string> known = {
        "dataset",       "model",      "loss",           "attack_samples",
        "ratio",         "qubits",     "layers",         "epochs",
        "learning_rate", "batch_size", "seed",           "out_dir",
        "feature_threshold", "rescale_inputs", "split_cache_dir"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (j.contains("dataset")) base.dataset = j["dataset"].get<std::string>();
    if (j.contains("model")) base.model = nn::model_kind_from_string(j["model"].get<std::string>());
    if (j.contains("loss")) base.loss = nn::loss_kind_from_string(j["loss"].get<std::string>());
    if (j.contains("attack_samples")) base.attack_samples = j["attack_samples"].get<std::size_t>();
    if (j.contains("ratio")) base.ratio = j["ratio"].get<double>();
    if (j.contains("qubits")) base.qubits = j["qubits"].get<int>();
    if (j.contains("layers")) base.layers = j["layers"].get<int>();
    if (j.contains("epochs")) base.epochs = j["epochs"].get<int>();
    if (j.contains("learning_rate")) base.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) base.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) base.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("feature_threshold")) base.feature_threshold = j["feature_threshold"].get<double>();
    if (j.contains("rescale_inputs")) base.rescale_inputs = j["rescale_inputs"].get<bool>();
    if (j.contains("split_cache_dir")) base.split_cache_dir = j["split_cache_dir"].get<std::string>();
    return base;
}

std::string ExperimentConfig::run_name() const {
    std::ostringstream s;
    s << nn::to_string(model) << "_" << nn::to_string(loss) << "_a" << attack_samples << "_q"
      << qubits << "_r" << format_double(ratio) << "_s" << seed;
    return s.str();
}

json RunReport::to_json() const {
    json test{{"confusion",
               {{"tp", test_confusion.tp},
                {"tn", test_confusion.tn},
                {"fp", test_confusion.fp},
                {"fn", test_confusion.fn}}},
              {"accuracy", test_metrics.accuracy},
              {"precision", test_metrics.precision},
              {"recall", test_metrics.recall},
              {"f1", test_metrics.f1},
              {"undefined", test_metrics.undefined},
              {"averaging", "positive_class"}};
    return json{{"format_version", 1},
                {"build", {{"version", build_version}, {"git", build_revision}}},
                {"config", config.to_json()},
                {"data",
                 {{"kept_features", kept_features},
                  {"dropped_features", dropped_features},
                  {"skipped_rows", skipped_rows},
                  {"split_rows",
                   {{"train", train_rows}, {"val", val_rows}, {"test", test_rows}}}}},
                {"history", history_to_json(history)},
                {"test", test},
                {"timings",
                 {{"train_seconds", train_seconds}, {"total_seconds", total_seconds}}}};
}

RunReport run_train(const ExperimentConfig& config) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    config.validate();

    RunReport report;
    report.config = config;
    report.build_version = kVersion;
    report.build_revision = kGitRevision;

    PreparedData prep = prepare_data(config);
    report.kept_features = prep.kept_features;
    report.dropped_features = prep.dropped_features;
    report.skipped_rows = prep.skipped_rows;
    report.train_rows = prep.splits.train.n_rows();
    report.val_rows = prep.splits.val.n_rows();
    report.test_rows = prep.splits.test.n_rows();

    const nn::ModelSpec spec =
        model_spec_for(config, static_cast<int>(prep.splits.train.n_features()));
    nn::TrainConfig tc;
    tc.epochs = config.epochs;
    tc.learning_rate = config.learning_rate;
    tc.batch_size = config.batch_size;
    tc.loss = config.loss;
    tc.seed = config.seed;

    // The label encoding required by the chosen loss is applied inside the
    // training loop; run it here once so encoding errors surface as a stage.
    stage("encode", [&] { return data::encode_labels(prep.splits.train.labels, config.loss); });

    const auto t_train = clock::now();
    nn::TrainResult trained = stage("train", [&] {
        return nn::train(spec, tc, prep.splits.train.values, prep.splits.train.labels,
                         prep.splits.val.values, prep.splits.val.labels);
    });
    report.train_seconds = std::chrono::duration<double>(clock::now() - t_train).count();
    report.history = std::move(trained.history);

    report.test_metrics = stage("test", [&] {
        return evaluate_split(spec, trained.params, prep.splits.test, report.test_confusion);
    });

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        report.checkpoint_path = (fs::path(config.out_dir) / "checkpoint.json").string();
        json ckpt{{"format_version", 1},
                  {"build", {{"version", kVersion}, {"git", kGitRevision}}},
                  {"config", config.to_json()},
                  {"feature_names", prep.kept_features},
                  {"standardizer",
                   {{"mean", prep.standardizer.means()}, {"std", prep.standardizer.stds()}}},
                  {"model", model_spec_to_json(spec)},
                  {"params", params_to_json(spec, trained.params)}};
        write_json_file(report.checkpoint_path, ckpt);
    }

    report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
    if (!config.out_dir.empty()) {
        report.report_path = (fs::path(config.out_dir) / "report.json").string();
        write_json_file(report.report_path, report.to_json());
    }
    return report;
}

RunReport run_eval(const std::string& checkpoint_path, const std::string& dataset,
                   std::optional<std::uint64_t> seed,
                   std::optional<nn::ModelKind> expected_kind, const std::string& out_dir) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    const json ckpt = read_json_file(checkpoint_path);
    const int version = ckpt.value("format_version", -1);
    if (version != 1) {
        throw ConfigError("checkpoint format version " + std::to_string(version) +
                          " is not compatible with this build (expected 1)");
    }
    ExperimentConfig config = ExperimentConfig::from_json(ckpt.at("config"));
    const nn::ModelSpec spec = model_spec_from_json(ckpt.at("model"));
    if (expected_kind && *expected_kind != spec.kind) {
        throw ConfigError("checkpoint holds a " + nn::to_string(spec.kind) +
                          " model, " + nn::to_string(*expected_kind) + " requested");
    }
    const nn::ModelParams params = params_from_json(spec, ckpt.at("params"));
    const auto feature_names = ckpt.at("feature_names").get<std::vector<std::string>>();
    const data::Standardizer standardizer = data::Standardizer::from_stats(
        ckpt.at("standardizer").at("mean").get<std::vector<double>>(),
        ckpt.at("standardizer").at("std").get<std::vector<double>>());

    if (!dataset.empty()) config.dataset = dataset;
    // The synthetic pool is regenerated from the training seed so that the
    // "dataset" itself is stable; the provided seed only re-rolls the split.
    const std::uint64_t eval_seed = seed.value_or(config.seed);
    config.validate();

    RunReport report;
    report.config = config;
    report.config.seed = eval_seed;
    report.build_version = kVersion;
    report.build_revision = kGitRevision;

    const data::LoadResult loaded = stage("load", [&] { return load_dataset(config); });
    report.skipped_rows = loaded.skipped_rows;
    const data::FeatureMatrix full =
        stage("features", [&] { return data::to_feature_matrix(loaded.records); });

    // Project onto the checkpoint's feature list by name.
    data::FeatureMatrix projected;
    projected.feature_names = feature_names;
    projected.labels = full.labels;
    projected.values = Tensor2(full.n_rows(), feature_names.size());
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        const auto it = std::find(full.feature_names.begin(), full.feature_names.end(),
                                  feature_names[j]);
        if (it == full.feature_names.end()) {
            throw ShapeError("checkpoint expects " + std::to_string(feature_names.size()) +
                             " features, dataset provides " +
                             std::to_string(full.n_features()) + " (missing '" +
                             feature_names[j] + "')");
        }
        const std::size_t src = static_cast<std::size_t>(it - full.feature_names.begin());
        for (std::size_t i = 0; i < full.n_rows(); ++i) {
            projected.values(i, j) = full.values(i, src);
        }
    }
    if (static_cast<int>(projected.n_features()) != spec.n_features) {
        throw ShapeError("checkpoint model expects " + std::to_string(spec.n_features) +
                         " features, dataset provides " +
                         std::to_string(projected.n_features()));
    }
    report.kept_features = feature_names;

    const data::SamplingPlan plan{config.attack_samples, config.ratio,
                                  derive_seed(eval_seed, kSampleStream)};
    const data::FeatureMatrix sampled =
        stage("sample", [&] { return data::sample_stratified(projected, plan); });
    data::SplitSet splits = stage(
        "split", [&] { return data::split_70_20_10(sampled, derive_seed(eval_seed, kSplitStream)); });
    const data::FeatureMatrix test = standardizer.transform(splits.test);
    report.train_rows = splits.train.n_rows();
    report.val_rows = splits.val.n_rows();
    report.test_rows = splits.test.n_rows();

    report.test_metrics = stage(
        "test", [&] { return evaluate_split(spec, params, test, report.test_confusion); });

    report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        report.report_path = (fs::path(out_dir) / "eval_report.json").string();
        write_json_file(report.report_path, report.to_json());
    }
    return report;
}

namespace {

struct GridAxes {
    std::vector<std::string> models, losses;
    std::vector<std::size_t> attack_samples;
    std::vector<int> qubits;
    std::vector<double> ratios;
    std::vector<std::uint64_t> seeds;
    bool has_seed_axis = false;
};

GridAxes parse_axes(const json& axes) {
    static const std::set<std::string> known = {"model", "loss", "attack_samples",
                                                "qubits", "ratio", "seed"};
    GridAxes g;
    for (const auto& [key, value] : axes.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown grid axis '" + key +
                              "' (allowed: model, loss, attack_samples, qubits, ratio, seed)");
        }
        if (!value.is_array() || value.empty()) {
            throw ConfigError("grid axis '" + key + "' must be a non-empty array");
        }
    }
    if (axes.contains("model")) g.models = axes["model"].get<std::vector<std::string>>();
    if (axes.contains("loss")) g.losses = axes["loss"].get<std::vector<std::string>>();
    if (axes.contains("attack_samples"))
        g.attack_samples = axes["attack_samples"].get<std::vector<std::size_t>>();
    if (axes.contains("qubits")) g.qubits = axes["qubits"].get<std::vector<int>>();
    if (axes.contains("ratio")) g.ratios = axes["ratio"].get<std::vector<double>>();
    if (axes.contains("seed")) {
        g.seeds = axes["seed"].get<std::vector<std::uint64_t>>();
        g.has_seed_axis = true;
    }
    return g;
}

void write_series_files(const std::vector<GridCell>& cells, const std::string& out_dir) {
    struct AxisView {
        const char* name;
        std::function<double(const ExperimentConfig&)> value;
    };
    const std::vector<AxisView> axes = {
        {"attack_samples",
         [](const ExperimentConfig& c) { return static_cast<double>(c.attack_samples); }},
        {"qubits", [](const ExperimentConfig& c) { return static_cast<double>(c.qubits); }},
        {"ratio", [](const ExperimentConfig& c) { return c.ratio; }},
    };
    for (const auto& axis : axes) {
        std::set<double> distinct;
        for (const auto& cell : cells) distinct.insert(axis.value(cell.config));
        if (distinct.size() < 2) continue;

        // group by (axis value, model, loss), mean over seeds and leftovers
        std::map<std::tuple<double, std::string, std::string>, std::vector<metrics::Derived>>
            groups;
        for (const auto& cell : cells) {
            if (!cell.report) continue;
            groups[{axis.value(cell.config), nn::to_string(cell.config.model),
                    nn::to_string(cell.config.loss)}]
                .push_back(cell.report->test_metrics);
        }
        if (groups.empty()) continue;
        std::ofstream out(fs::path(out_dir) / ("series_" + std::string(axis.name) + ".csv"));
        out << axis.name << ",model,loss,accuracy,recall,precision,f1,n_runs\n";
        for (const auto& [key, values] : groups) {
            metrics::Derived mean;
            for (const auto& v : values) {
                mean.accuracy += v.accuracy;
                mean.recall += v.recall;
                mean.precision += v.precision;
                mean.f1 += v.f1;
            }
            const double n = static_cast<double>(values.size());
            out << format_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
                << std::get<2>(key) << "," << format_double(mean.accuracy / n) << ","
                << format_double(mean.recall / n) << "," << format_double(mean.precision / n)
                << "," << format_double(mean.f1 / n) << "," << values.size() << "\n";
        }
    }
}

} // namespace

std::string format_table(const std::vector<GridCell>& cells) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %-6s %15s %13s %11s %14s %13s\n", "Model", "Loss",
                  "Attack samples", "Accuracy (%)", "Recall (%)", "Precision (%)",
                  "F1 Score (%)");
    out << line;
    out << std::string(95, '-') << "\n";
    for (const auto& cell : cells) {
        if (cell.report) {
            const auto& m = cell.report->test_metrics;
            std::snprintf(line, sizeof(line), "%-8s %-6s %15zu %13.2f %11.2f %14.2f %13.2f\n",
                          nn::to_string(cell.config.model).c_str(),
                          nn::to_string(cell.config.loss).c_str(), cell.config.attack_samples,
                          100.0 * m.accuracy, 100.0 * m.recall, 100.0 * m.precision,
                          100.0 * m.f1);
        } else {
            std::snprintf(line, sizeof(line), "%-8s %-6s %15zu %s\n",
                          nn::to_string(cell.config.model).c_str(),
                          nn::to_string(cell.config.loss).c_str(), cell.config.attack_samples,
                          ("FAILED: " + cell.error).c_str());
        }
        out << line;
    }

    // mean +/- std per configuration over seed repeats
    std::map<std::string, std::vector<const RunReport*>> by_group;
    for (const auto& cell : cells) {
        if (!cell.report) continue;
        ExperimentConfig key = cell.config;
        key.seed = 0;
        key.out_dir.clear();
        by_group[key.to_json().dump()].push_back(&*cell.report);
    }
    bool any_multi = false;
    for (const auto& [key, reports] : by_group) any_multi |= reports.size() > 1;
    if (any_multi) {
        out << "\nSeed aggregates (mean +/- std over repeated seeds)\n";
        for (const auto& [key, reports] : by_group) {
            if (reports.size() < 2) continue;
            auto stat = [&](auto get) {
                double mean = 0.0, sq = 0.0;
                for (const RunReport* r : reports) mean += get(r->test_metrics);
                mean /= static_cast<double>(reports.size());
                for (const RunReport* r : reports) {
                    const double d = get(r->test_metrics) - mean;
                    sq += d * d;
                }
                return std::pair<double, double>(
                    mean, std::sqrt(sq / static_cast<double>(reports.size())));
            };
            const auto acc = stat([](const metrics::Derived& m) { return m.accuracy; });
            const auto rec = stat([](const metrics::Derived& m) { return m.recall; });
            const auto prec = stat([](const metrics::Derived& m) { return m.precision; });
            const auto f1 = stat([](const metrics::Derived& m) { return m.f1; });
            const auto& c = reports.front();
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "%-8s %-6s %15zu  acc %5.2f+/-%4.2f  rec %5.2f+/-%4.2f  prec "
                          "%5.2f+/-%4.2f  f1 %5.2f+/-%4.2f  (%zu seeds)\n",
                          nn::to_string(c->config.model).c_str(),
                          nn::to_string(c->config.loss).c_str(), c->config.attack_samples,
                          100 * acc.first, 100 * acc.second, 100 * rec.first, 100 * rec.second,
                          100 * prec.first, 100 * prec.second, 100 * f1.first, 100 * f1.second,
                          reports.size());
            out << buf;
        }
    }
    return out.str();
}

GridResult run_grid(const std::string& spec_path, const ExperimentConfig& base) {
    const json spec = read_json_file(spec_path);
    if (!spec.contains("axes") || !spec["axes"].is_object() || spec["axes"].empty()) {
        throw ConfigError("grid spec needs a non-empty 'axes' object");
    }
    ExperimentConfig grid_base = base;
    if (spec.contains("base")) {
        grid_base = ExperimentConfig::from_json(spec["base"], base);
    }
    const GridAxes axes = parse_axes(spec["axes"]);

    auto or_default = [](auto values, auto fallback) {
        if (values.empty()) values.push_back(fallback);
        return values;
    };
    const auto models = or_default(axes.models, nn::to_string(grid_base.model));
    const auto losses = or_default(axes.losses, nn::to_string(grid_base.loss));
    const auto samples = or_default(axes.attack_samples, grid_base.attack_samples);
    const auto qubit_axis = or_default(axes.qubits, grid_base.qubits);
    const auto ratio_axis = or_default(axes.ratios, grid_base.ratio);
    const auto seed_axis =
        axes.has_seed_axis ? axes.seeds : std::vector<std::uint64_t>{grid_base.seed};

    GridResult result;
    std::size_t coords[6];
    coords[0] = 0;
    for (std::size_t im = 0; im < models.size(); ++im) {
        for (std::size_t il = 0; il < losses.size(); ++il) {
            for (std::size_t ia = 0; ia < samples.size(); ++ia) {
                for (std::size_t iq = 0; iq < qubit_axis.size(); ++iq) {
                    for (std::size_t ir = 0; ir < ratio_axis.size(); ++ir) {
                        for (std::size_t is = 0; is < seed_axis.size(); ++is) {
                            GridCell cell;
                            cell.config = grid_base;
                            cell.config.model = nn::model_kind_from_string(models[im]);
                            cell.config.loss = nn::loss_kind_from_string(losses[il]);
                            cell.config.attack_samples = samples[ia];
                            cell.config.qubits = qubit_axis[iq];
                            cell.config.ratio = ratio_axis[ir];
                            if (axes.has_seed_axis) {
                                cell.config.seed = seed_axis[is];
                            } else {
                                // cell seed from (base seed, coordinates)
                                coords[0] = im; coords[1] = il; coords[2] = ia;
                                coords[3] = iq; coords[4] = ir; coords[5] = is;
                                std::uint64_t s = grid_base.seed;
                                for (std::size_t k = 0; k < 6; ++k) {
                                    s = derive_seed(s, coords[k] + 1);
                                }
                                cell.config.seed = s;
                            }
                            if (!grid_base.out_dir.empty()) {
                                cell.config.out_dir =
                                    (fs::path(grid_base.out_dir) / cell.config.run_name())
                                        .string();
                            }
                            try {
                                cell.report = run_train(cell.config);
                            } catch (const TrainingError& e) {
                                cell.error = e.what();
                                cell.error_category = 3;
                                result.all_ok = false;
                            } catch (const DataError& e) {
                                cell.error = e.what();
                                cell.error_category = 2;
                                result.all_ok = false;
                            } catch (const Error& e) {
                                cell.error = e.what();
                                cell.error_category = 1;
                                result.all_ok = false;
                            }
                            result.cells.push_back(std::move(cell));
                        }
                    }
                }
            }
        }
    }

    result.table = format_table(result.cells);
    if (!grid_base.out_dir.empty()) {
        fs::create_directories(grid_base.out_dir);
        std::ofstream table_out(fs::path(grid_base.out_dir) / "grid_table.txt");
        table_out << result.table;
        json cells_json = json::array();
        for (const auto& cell : result.cells) {
            json c{{"config", cell.config.to_json()}};
            if (cell.report) {
                c["test"] = cell.report->to_json()["test"];
            } else {
                c["error"] = cell.error;
            }
            cells_json.push_back(std::move(c));
        }
        write_json_file((fs::path(grid_base.out_dir) / "grid_results.json").string(),
                        json{{"format_version", 1}, {"cells", cells_json}});
        write_series_files(result.cells, grid_base.out_dir);
    }
    return result;
}

} // namespace qadsb::pipeline
