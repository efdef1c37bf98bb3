#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qadsb/metrics.hpp"
#include "qadsb/tensor.hpp"
#include "qadsb/vqc.hpp"

namespace qadsb::nn {

enum class ModelKind { Hfqnn, Fnn };
enum class LossKind { BceWithLogits, CrossEntropy };

std::string to_string(ModelKind kind);
std::string to_string(LossKind loss);
ModelKind model_kind_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);

struct DenseLayer {
    Tensor2 weights;          // [out, in]
    std::vector<double> bias; // [out]
};

/**
 * Both models share the classical front end:
 *   dense(F -> F) + ReLU, dense(F -> Q) + ReLU
 * then either the variational quantum layer (Hfqnn) or dense(Q -> Q) + ReLU
 * (Fnn), and finally dense(Q -> 2) with no output activation (both losses
 * apply sigmoid/softmax internally).
 */
struct ModelSpec {
    ModelKind kind = ModelKind::Hfqnn;
    int n_features = 6;
    int n_qubits = 6; // hidden width of the replacement layer for Fnn
    int n_outputs = 2;
    vqc::CircuitSpec circuit; // Hfqnn only
    // Squash hidden activations to pi*tanh before RX embedding. Off by
    // default: ReLU outputs go in as raw angles.
    bool rescale_inputs = false;

    static ModelSpec hfqnn(int n_features, int n_qubits, int n_layers,
                           bool rescale_inputs = false);
    static ModelSpec fnn(int n_features, int n_hidden);
    void validate() const;
};

struct ModelParams {
    DenseLayer input;        // F -> F
    DenseLayer hidden;       // F -> Q
    DenseLayer bridge;       // Q -> Q, Fnn only
    vqc::VqcWeights quantum; // Hfqnn only
    DenseLayer output;       // Q -> 2
};

// Gradients mirror the parameter shapes.
using ModelGrads = ModelParams;

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
ModelGrads zero_grads(const ModelSpec& spec);

// Mutable views over every parameter tensor in a fixed canonical order.
std::vector<std::span<double>> param_views(const ModelSpec& spec, ModelParams& p);
std::vector<std::span<const double>> param_views(const ModelSpec& spec, const ModelParams& p);
std::size_t param_count(const ModelSpec& spec);

Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& x);
Tensor2 relu(Tensor2 x);

double bce_with_logits_loss(const Tensor2& logits, const Tensor2& onehot_targets);
double cross_entropy_loss(const Tensor2& logits, std::span<const int> class_indices);

Tensor2 model_forward(const ModelSpec& spec, const ModelParams& params, const Tensor2& x);

// Argmax of the two logits per row.
std::vector<int> predict(const ModelSpec& spec, const ModelParams& params, const Tensor2& x);

struct BackwardResult {
    double loss = 0.0;
    Tensor2 logits;
    ModelGrads grads;
};

// Exact gradient of the batch loss w.r.t. every parameter; the quantum
// layer contributes through its parameter-shift Jacobians.
BackwardResult model_backward(const ModelSpec& spec, const ModelParams& params,
                              const Tensor2& x, LossKind loss,
                              std::span<const int> labels);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    static AdamState for_size(std::size_t n);
};

// Standard Adam with bias correction over one flat parameter block.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);
// Model-shaped convenience: walks the canonical views.
void adam_step(AdamState& state, const ModelSpec& spec, ModelParams& params,
               const ModelGrads& grads, double lr);

struct TrainConfig {
    int epochs = 150;
    double learning_rate = 0.02;
    int batch_size = 64;
    LossKind loss = LossKind::BceWithLogits;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    metrics::Derived val;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
};

// Mini-batch Adam training, deterministic given the seed.
TrainResult train(const ModelSpec& spec, const TrainConfig& config, const Tensor2& x_train,
                  std::span<const int> y_train, const Tensor2& x_val,
                  std::span<const int> y_val);

} // namespace qadsb::nn
