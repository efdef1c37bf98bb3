#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qadsb/pipeline.hpp"
#include "qadsb/version.hpp"

namespace {

using qadsb::pipeline::ExperimentConfig;
using qadsb::pipeline::GridCell;
using qadsb::pipeline::RunReport;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

// Optional holders so that config-file values lose only to flags the user set.
struct CliOverrides {
    std::optional<std::string> dataset, model, loss, out, cache;
    std::optional<std::size_t> attack_samples;
    std::optional<double> ratio, lr, threshold;
    std::optional<int> qubits, layers, epochs, batch_size;
    std::optional<std::uint64_t> seed;
    bool rescale_inputs = false;
};

void add_config_flags(CLI::App* cmd, CliOverrides& o, std::string& config_file) {
    cmd->add_option("--config", config_file, "JSON config file (flags override it)");
    cmd->add_option("--dataset", o.dataset, "CSV path or 'synthetic'");
    cmd->add_option("--model", o.model, "fnn | hfqnn")
        ->check(CLI::IsMember({"fnn", "hfqnn"}));
    cmd->add_option("--loss", o.loss, "bce | ce")->check(CLI::IsMember({"bce", "ce"}));
    cmd->add_option("--attack-samples", o.attack_samples, "attack rows to sample");
    cmd->add_option("--ratio", o.ratio, "normal-to-attack ratio");
    cmd->add_option("--qubits", o.qubits, "quantum layer width");
    cmd->add_option("--layers", o.layers, "entangling layers");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "output directory for report + checkpoint");
    cmd->add_option("--threshold", o.threshold, "feature correlation threshold");
    cmd->add_flag("--rescale-inputs", o.rescale_inputs,
                  "squash hidden activations to pi*tanh before embedding");
    cmd->add_option("--split-cache", o.cache, "directory for cached splits");
}

ExperimentConfig resolve_config(const CliOverrides& o, const std::string& config_file) {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw qadsb::ConfigError("cannot open config file: " + config_file);
        cfg = ExperimentConfig::from_json(nlohmann::json::parse(in), cfg);
    }
    if (o.dataset) cfg.dataset = *o.dataset;
    if (o.model) cfg.model = qadsb::nn::model_kind_from_string(*o.model);
    if (o.loss) cfg.loss = qadsb::nn::loss_kind_from_string(*o.loss);
    if (o.attack_samples) cfg.attack_samples = *o.attack_samples;
    if (o.ratio) cfg.ratio = *o.ratio;
    if (o.qubits) cfg.qubits = *o.qubits;
    if (o.layers) cfg.layers = *o.layers;
    if (o.epochs) cfg.epochs = *o.epochs;
    if (o.lr) cfg.learning_rate = *o.lr;
    if (o.batch_size) cfg.batch_size = *o.batch_size;
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.threshold) cfg.feature_threshold = *o.threshold;
    if (o.rescale_inputs) cfg.rescale_inputs = true;
    if (o.cache) cfg.split_cache_dir = *o.cache;
    return cfg;
}

void print_report_summary(const RunReport& r) {
    GridCell cell;
    cell.config = r.config;
    cell.report = r;
    std::cout << qadsb::pipeline::format_table({cell});
    std::printf("confusion: tp=%lld tn=%lld fp=%lld fn=%lld  (test rows: %zu)\n",
                static_cast<long long>(r.test_confusion.tp),
                static_cast<long long>(r.test_confusion.tn),
                static_cast<long long>(r.test_confusion.fp),
                static_cast<long long>(r.test_confusion.fn), r.test_rows);
    if (!r.report_path.empty()) std::cout << "report:     " << r.report_path << "\n";
    if (!r.checkpoint_path.empty()) std::cout << "checkpoint: " << r.checkpoint_path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ADS-B anomaly detection with a hybrid quantum-classical classifier"};
    app.set_version_flag("--version",
                         std::string(qadsb::kVersion) + " (" + qadsb::kGitRevision + ")");
    app.require_subcommand(1);

    CliOverrides train_opts;
    std::string train_config_file;
    CLI::App* train_cmd = app.add_subcommand("train", "train one model and report test metrics");
    add_config_flags(train_cmd, train_opts, train_config_file);

    std::string eval_checkpoint, eval_dataset, eval_out, eval_model;
    std::optional<std::uint64_t> eval_seed;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a fresh split");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint.json from train")
        ->required();
    eval_cmd->add_option("--dataset", eval_dataset, "CSV path or 'synthetic' (default: stored)");
    eval_cmd->add_option("--seed", eval_seed, "split seed (default: stored)");
    eval_cmd->add_option("--model", eval_model, "assert the checkpoint's model kind")
        ->check(CLI::IsMember({"fnn", "hfqnn"}));
    eval_cmd->add_option("--out", eval_out, "output directory");

    CliOverrides grid_opts;
    std::string grid_config_file, grid_spec;
    CLI::App* grid_cmd = app.add_subcommand("grid", "run a cartesian experiment grid");
    grid_cmd->add_option("--spec", grid_spec, "grid spec JSON with an 'axes' object")
        ->required();
    add_config_flags(grid_cmd, grid_opts, grid_config_file);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (train_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(train_opts, train_config_file);
            if (cfg.out_dir.empty()) cfg.out_dir = "runs/" + cfg.run_name();
            print_report_summary(qadsb::pipeline::run_train(cfg));
        } else if (eval_cmd->parsed()) {
            std::optional<qadsb::nn::ModelKind> expect;
            if (!eval_model.empty()) expect = qadsb::nn::model_kind_from_string(eval_model);
            print_report_summary(qadsb::pipeline::run_eval(eval_checkpoint, eval_dataset,
                                                           eval_seed, expect, eval_out));
        } else if (grid_cmd->parsed()) {
            const ExperimentConfig base = resolve_config(grid_opts, grid_config_file);
            const auto result = qadsb::pipeline::run_grid(grid_spec, base);
            std::cout << result.table;
            if (!result.all_ok) {
                std::size_t failed = 0;
                int category = kExitConfig;
                for (const auto& cell : result.cells) {
                    if (!cell.error.empty()) {
                        if (failed == 0) category = cell.error_category;
                        ++failed;
                    }
                }
                std::cerr << failed << " of " << result.cells.size() << " grid cells failed\n";
                return category;
            }
        }
    } catch (const qadsb::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const qadsb::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const qadsb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
