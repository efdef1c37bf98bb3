#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qadsb/data.hpp"
#include "qadsb/metrics.hpp"
#include "qadsb/nn.hpp"

namespace qadsb::pipeline {

using nlohmann::json;

/**
 * Everything one experiment needs. Defaults mirror the reference protocol:
 * 150 epochs, learning rate 0.02, normal-to-attack ratio 2, 6 qubits,
 * 2 entangling layers.
 */
struct ExperimentConfig {
    std::string dataset = "synthetic"; // CSV path or "synthetic"
    nn::ModelKind model = nn::ModelKind::Hfqnn;
    nn::LossKind loss = nn::LossKind::BceWithLogits;
    std::size_t attack_samples = 1000;
    double ratio = 2.0;
    int qubits = 6;
    int layers = 2;
    int epochs = 150;
    double learning_rate = 0.02;
    int batch_size = 64;
    std::uint64_t seed = 1;
    std::string out_dir; // empty: no files written
    double feature_threshold = 0.90;
    bool rescale_inputs = false;
    std::string split_cache_dir; // empty: caching off

    void validate() const;
    json to_json() const;
    // Overlays the keys present in j onto base; unknown keys are rejected.
    static ExperimentConfig from_json(const json& j);
    static ExperimentConfig from_json(const json& j, ExperimentConfig base);
    // Stable name used for output files: model_loss_aN_qN_rR_sS.
    std::string run_name() const;
};

struct RunReport {
    ExperimentConfig config;
    std::string build_version;
    std::string build_revision;
    std::vector<nn::EpochStats> history;
    metrics::ConfusionMatrix test_confusion;
    metrics::Derived test_metrics;
    std::vector<std::string> kept_features;
    std::vector<std::string> dropped_features;
    std::size_t skipped_rows = 0;
    std::size_t train_rows = 0, val_rows = 0, test_rows = 0;
    double train_seconds = 0.0;
    double total_seconds = 0.0;
    std::string report_path;     // set when written
    std::string checkpoint_path; // set when written (train only)

    json to_json() const;
};

// Full pipeline: load -> select features -> sample -> split -> standardize ->
// encode -> train -> held-out test metrics. Writes report + checkpoint into
// config.out_dir when set.
RunReport run_train(const ExperimentConfig& config);

// Re-evaluates a stored checkpoint on a fresh deterministic split, without
// retraining. dataset/seed default to the values stored in the checkpoint.
RunReport run_eval(const std::string& checkpoint_path, const std::string& dataset,
                   std::optional<std::uint64_t> seed,
                   std::optional<nn::ModelKind> expected_kind, const std::string& out_dir);

struct GridCell {
    ExperimentConfig config;
    std::optional<RunReport> report;
    std::string error;      // empty on success
    int error_category = 0; // CLI exit code flavor: 1 config, 2 data, 3 training
};

struct GridResult {
    std::vector<GridCell> cells;
    std::string table;
    bool all_ok = true;
};

// Cartesian product over the axes in a grid-spec file; each cell failure is
// recorded and the grid keeps going.
GridResult run_grid(const std::string& spec_path, const ExperimentConfig& base);

// Aligned text table in the reference column order:
// Model | Attack samples | Accuracy | Recall | Precision | F1.
std::string format_table(const std::vector<GridCell>& cells);

} // namespace qadsb::pipeline
