#include "qadsb/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qadsb/rng.hpp"

namespace qadsb::nn {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_labels(std::span<const int> labels, std::size_t rows, const char* what) {
    if (labels.size() != rows) {
        throw ShapeError(std::string(what) + ": " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("class label must be 0 or 1, got " + std::to_string(y));
    }
}

Tensor2 one_hot(std::span<const int> labels) {
    Tensor2 t(labels.size(), 2);
    for (std::size_t b = 0; b < labels.size(); ++b) t(b, labels[b]) = 1.0;
    return t;
}

DenseLayer make_dense(int out, int in) {
    DenseLayer layer;
    layer.weights = Tensor2(out, in);
    layer.bias.assign(out, 0.0);
    return layer;
}

void fill_uniform_init(DenseLayer& layer, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
}

// dL/dx for y = x W^T + b given dL/dy.
Tensor2 dense_backward_input(const DenseLayer& layer, const Tensor2& dy) {
    Tensor2 dx(dy.rows, layer.weights.cols);
    for (std::size_t b = 0; b < dy.rows; ++b)
        for (std::size_t o = 0; o < layer.weights.rows; ++o) {
            const double g = dy(b, o);
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < layer.weights.cols; ++i)
                dx(b, i) += g * layer.weights(o, i);
        }
    return dx;
}

void dense_backward_params(const Tensor2& x, const Tensor2& dy, DenseLayer& grad) {
    for (std::size_t b = 0; b < dy.rows; ++b)
        for (std::size_t o = 0; o < grad.weights.rows; ++o) {
            const double g = dy(b, o);
            grad.bias[o] += g;
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < grad.weights.cols; ++i)
                grad.weights(o, i) += g * x(b, i);
        }
}

Tensor2 relu_mask_backward(const Tensor2& pre, const Tensor2& dy) {
    Tensor2 dz = dy;
    for (std::size_t k = 0; k < dz.data.size(); ++k) {
        if (pre.data[k] <= 0.0) dz.data[k] = 0.0;
    }
    return dz;
}

struct ForwardCache {
    Tensor2 z1, h1, z2, h2;
    Tensor2 z3;        // Fnn pre-activation
    Tensor2 act;       // layer-3 output feeding the output layer
    Tensor2 qin;       // Hfqnn: angles actually embedded (h2 or pi*tanh(h2))
    Tensor2 logits;
};

ForwardCache forward_cached(const ModelSpec& spec, const ModelParams& params,
                            const Tensor2& x) {
    spec.validate();
    if (x.cols != static_cast<std::size_t>(spec.n_features)) {
        throw ShapeError("input has " + std::to_string(x.cols) + " features, model expects " +
                         std::to_string(spec.n_features));
    }
    ForwardCache c;
    c.z1 = dense_forward(params.input, x);
    c.h1 = relu(c.z1);
    c.z2 = dense_forward(params.hidden, c.h1);
    c.h2 = relu(c.z2);
    if (spec.kind == ModelKind::Hfqnn) {
        c.qin = c.h2;
        if (spec.rescale_inputs) {
            for (double& v : c.qin.data) v = std::numbers::pi * std::tanh(v);
        }
        c.act = Tensor2(x.rows, spec.n_qubits);
        for (std::size_t b = 0; b < x.rows; ++b) {
            const auto expv = vqc::forward(spec.circuit, params.quantum, c.qin.row(b));
            std::copy(expv.begin(), expv.end(), c.act.row(b).begin());
        }
    } else {
        c.z3 = dense_forward(params.bridge, c.h2);
        c.act = relu(c.z3);
    }
    c.logits = dense_forward(params.output, c.act);
    return c;
}

} // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::Hfqnn ? "hfqnn" : "fnn"; }
std::string to_string(LossKind loss) {
    return loss == LossKind::BceWithLogits ? "bce" : "ce";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "hfqnn") return ModelKind::Hfqnn;
    if (s == "fnn") return ModelKind::Fnn;
    throw ConfigError("unknown model kind '" + s + "' (expected fnn or hfqnn)");
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "bce") return LossKind::BceWithLogits;
    if (s == "ce") return LossKind::CrossEntropy;
    throw ConfigError("unknown loss '" + s + "' (expected bce or ce)");
}

ModelSpec ModelSpec::hfqnn(int n_features, int n_qubits, int n_layers, bool rescale_inputs) {
    ModelSpec spec;
    spec.kind = ModelKind::Hfqnn;
    spec.n_features = n_features;
    spec.n_qubits = n_qubits;
    spec.circuit = vqc::CircuitSpec::make(n_qubits, n_layers);
    spec.rescale_inputs = rescale_inputs;
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::fnn(int n_features, int n_hidden) {
    ModelSpec spec;
    spec.kind = ModelKind::Fnn;
    spec.n_features = n_features;
    spec.n_qubits = n_hidden;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (n_outputs != 2) throw ConfigError("output layer is fixed at 2 neurons");
    if (n_features < 1) throw ConfigError("n_features must be positive");
    if (n_qubits < 1) throw ConfigError("layer-3 width must be positive");
    if (kind == ModelKind::Hfqnn) {
        circuit.validate();
        if (circuit.n_qubits != n_qubits) {
            throw ConfigError("circuit has " + std::to_string(circuit.n_qubits) +
                              " qubits, model expects " + std::to_string(n_qubits));
        }
    }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ModelParams p = zero_grads(spec);
    Rng rng(derive_seed(seed, 0x636c61u)); // classical stream
    fill_uniform_init(p.input, rng);
    fill_uniform_init(p.hidden, rng);
    if (spec.kind == ModelKind::Fnn) {
        fill_uniform_init(p.bridge, rng);
    } else {
        p.quantum = vqc::VqcWeights::random_uniform(spec.circuit, derive_seed(seed, 0x717561u));
    }
    fill_uniform_init(p.output, rng);
    return p;
}

ModelGrads zero_grads(const ModelSpec& spec) {
    ModelGrads g;
    g.input = make_dense(spec.n_features, spec.n_features);
    g.hidden = make_dense(spec.n_qubits, spec.n_features);
    if (spec.kind == ModelKind::Fnn) {
        g.bridge = make_dense(spec.n_qubits, spec.n_qubits);
    } else {
        g.quantum = vqc::VqcWeights::zeros(spec.circuit);
    }
    g.output = make_dense(spec.n_outputs, spec.n_qubits);
    return g;
}

std::vector<std::span<double>> param_views(const ModelSpec& spec, ModelParams& p) {
    std::vector<std::span<double>> v;
    auto add_layer = [&v](DenseLayer& l) {
        v.emplace_back(l.weights.data);
        v.emplace_back(l.bias);
    };
    add_layer(p.input);
    add_layer(p.hidden);
    if (spec.kind == ModelKind::Fnn) {
        add_layer(p.bridge);
    } else {
        v.emplace_back(p.quantum.values);
    }
    add_layer(p.output);
    return v;
}

std::vector<std::span<const double>> param_views(const ModelSpec& spec, const ModelParams& p) {
    auto views = param_views(spec, const_cast<ModelParams&>(p));
    return {views.begin(), views.end()};
}

std::size_t param_count(const ModelSpec& spec) {
    std::size_t n = 0;
    ModelParams p = zero_grads(spec);
    for (const auto& view : param_views(spec, p)) n += view.size();
    return n;
}

Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& x) {
    if (x.cols != layer.weights.cols) {
        throw ShapeError("dense layer expects " + std::to_string(layer.weights.cols) +
                         " inputs, got " + std::to_string(x.cols));
    }
    if (layer.bias.size() != layer.weights.rows) {
        throw ShapeError("dense layer bias/weight mismatch");
    }
    Tensor2 y(x.rows, layer.weights.rows);
    for (std::size_t b = 0; b < x.rows; ++b) {
        for (std::size_t o = 0; o < layer.weights.rows; ++o) {
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < x.cols; ++i) acc += x(b, i) * layer.weights(o, i);
            y(b, o) = acc;
        }
    }
    return y;
}

Tensor2 relu(Tensor2 x) {
    for (double& v : x.data) v = std::max(0.0, v);
    return x;
}

double bce_with_logits_loss(const Tensor2& logits, const Tensor2& onehot_targets) {
    if (!logits.same_shape(onehot_targets)) {
        throw ShapeError("logits [" + std::to_string(logits.rows) + ", " +
                         std::to_string(logits.cols) + "] vs targets [" +
                         std::to_string(onehot_targets.rows) + ", " +
                         std::to_string(onehot_targets.cols) + "]");
    }
    if (logits.cols != 2 || logits.rows == 0) throw ShapeError("expected a [B, 2] logit matrix");
    for (std::size_t b = 0; b < onehot_targets.rows; ++b) {
        const double t0 = onehot_targets(b, 0), t1 = onehot_targets(b, 1);
        const bool valid = (t0 == 1.0 && t1 == 0.0) || (t0 == 0.0 && t1 == 1.0);
        if (!valid) {
            throw DataError("target row " + std::to_string(b) + " is not one-hot");
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < logits.data.size(); ++k) {
        const double z = logits.data[k];
        const double t = onehot_targets.data[k];
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(logits.data.size());
}

double cross_entropy_loss(const Tensor2& logits, std::span<const int> class_indices) {
    if (logits.cols != 2 || logits.rows == 0) throw ShapeError("expected a [B, 2] logit matrix");
    check_labels(class_indices, logits.rows, "cross_entropy_loss");
    double total = 0.0;
    for (std::size_t b = 0; b < logits.rows; ++b) {
        const double z0 = logits(b, 0), z1 = logits(b, 1);
        const double m = std::max(z0, z1);
        const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
        total += lse - logits(b, class_indices[b]);
    }
    return total / static_cast<double>(logits.rows);
}

Tensor2 model_forward(const ModelSpec& spec, const ModelParams& params, const Tensor2& x) {
    return forward_cached(spec, params, x).logits;
}

std::vector<int> predict(const ModelSpec& spec, const ModelParams& params, const Tensor2& x) {
    const Tensor2 logits = model_forward(spec, params, x);
    std::vector<int> out(logits.rows);
    for (std::size_t b = 0; b < logits.rows; ++b) out[b] = logits(b, 1) > logits(b, 0) ? 1 : 0;
    return out;
}

BackwardResult model_backward(const ModelSpec& spec, const ModelParams& params,
                              const Tensor2& x, LossKind loss,
                              std::span<const int> labels) {
    check_labels(labels, x.rows, "model_backward");
    ForwardCache c = forward_cached(spec, params, x);
    const std::size_t batch = x.rows;

    BackwardResult result;
    result.grads = zero_grads(spec);
    result.logits = c.logits;

    // dL/dlogits for the mean-reduced losses.
    Tensor2 dlogits(batch, 2);
    if (loss == LossKind::BceWithLogits) {
        const Tensor2 targets = one_hot(labels);
        result.loss = bce_with_logits_loss(c.logits, targets);
        const double scale = 1.0 / static_cast<double>(batch * 2);
        for (std::size_t k = 0; k < dlogits.data.size(); ++k) {
            dlogits.data[k] =
                (stable_sigmoid(c.logits.data[k]) - targets.data[k]) * scale;
        }
    } else {
        result.loss = cross_entropy_loss(c.logits, labels);
        const double scale = 1.0 / static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            const double z0 = c.logits(b, 0), z1 = c.logits(b, 1);
            const double m = std::max(z0, z1);
            const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
            const double sum = e0 + e1;
            dlogits(b, 0) = (e0 / sum - (labels[b] == 0 ? 1.0 : 0.0)) * scale;
            dlogits(b, 1) = (e1 / sum - (labels[b] == 1 ? 1.0 : 0.0)) * scale;
        }
    }

    dense_backward_params(c.act, dlogits, result.grads.output);
    Tensor2 dact = dense_backward_input(params.output, dlogits);

    Tensor2 dh2;
    if (spec.kind == ModelKind::Hfqnn) {
        Tensor2 dqin(batch, spec.n_qubits);
        for (std::size_t b = 0; b < batch; ++b) {
            const vqc::Jacobians jac =
                vqc::parameter_shift_grad(spec.circuit, params.quantum, c.qin.row(b));
            for (int w = 0; w < spec.n_qubits; ++w) {
                const double g = dact(b, w);
                if (g == 0.0) continue;
                for (int p = 0; p < spec.circuit.param_count(); ++p) {
                    result.grads.quantum.values[p] += g * jac.weights(w, p);
                }
                for (int i = 0; i < spec.n_qubits; ++i) {
                    dqin(b, i) += g * jac.inputs(w, i);
                }
            }
        }
        if (spec.rescale_inputs) {
            // qin = pi * tanh(h2)
            dh2 = dqin;
            for (std::size_t k = 0; k < dh2.data.size(); ++k) {
                const double th = std::tanh(c.h2.data[k]);
                dh2.data[k] *= std::numbers::pi * (1.0 - th * th);
            }
        } else {
            dh2 = std::move(dqin);
        }
    } else {
        const Tensor2 dz3 = relu_mask_backward(c.z3, dact);
        dense_backward_params(c.h2, dz3, result.grads.bridge);
        dh2 = dense_backward_input(params.bridge, dz3);
    }

    const Tensor2 dz2 = relu_mask_backward(c.z2, dh2);
    dense_backward_params(c.h1, dz2, result.grads.hidden);
    const Tensor2 dh1 = dense_backward_input(params.hidden, dz2);

    const Tensor2 dz1 = relu_mask_backward(c.z1, dh1);
    dense_backward_params(x, dz1, result.grads.input);

    return result;
}

AdamState AdamState::for_size(std::size_t n) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
}

namespace {

void adam_update_block(AdamState& state, std::size_t offset, std::span<double> params,
                       std::span<const double> grads, double lr) {
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
        v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

} // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state sizes disagree");
    }
    ++state.step;
    adam_update_block(state, 0, params, grads, lr);
}

void adam_step(AdamState& state, const ModelSpec& spec, ModelParams& params,
               const ModelGrads& grads, double lr) {
    auto pviews = param_views(spec, params);
    auto gviews = param_views(spec, const_cast<ModelGrads&>(grads));
    ++state.step;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < pviews.size(); ++k) {
        if (offset + pviews[k].size() > state.m.size()) {
            throw ShapeError("adam_step: state smaller than parameter set");
        }
        adam_update_block(state, offset, pviews[k], gviews[k], lr);
        offset += pviews[k].size();
    }
    if (offset != state.m.size()) {
        throw ShapeError("adam_step: state larger than parameter set");
    }
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
    if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (batch_size < 1) {
        throw ConfigError("batch size must be >= 1, got " + std::to_string(batch_size));
    }
}

TrainResult train(const ModelSpec& spec, const TrainConfig& config, const Tensor2& x_train,
                  std::span<const int> y_train, const Tensor2& x_val,
                  std::span<const int> y_val) {
    spec.validate();
    config.validate();
    if (x_train.rows == 0) throw DataError("training set is empty");
    if (x_val.rows == 0) throw DataError("validation set is empty");
    check_labels(y_train, x_train.rows, "train");
    check_labels(y_val, x_val.rows, "train (validation)");

    TrainResult result;
    result.params = init_params(spec, derive_seed(config.seed, 0x696e69u));
    AdamState adam = AdamState::for_size(param_count(spec));
    Rng shuffle_rng(derive_seed(config.seed, 0x736875u));

    std::vector<std::size_t> order(x_train.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::size_t rows = end - start;
            Tensor2 xb(rows, x_train.cols);
            std::vector<int> yb(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t src = order[start + r];
                std::copy(x_train.row(src).begin(), x_train.row(src).end(), xb.row(r).begin());
                yb[r] = y_train[src];
            }
            BackwardResult back = model_backward(spec, result.params, xb, config.loss, yb);
            if (!std::isfinite(back.loss)) {
                throw TrainingError("training diverged (non-finite loss) at epoch " +
                                    std::to_string(epoch));
            }
            adam_step(adam, spec, result.params, back.grads, config.learning_rate);
            loss_sum += back.loss * static_cast<double>(rows);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(x_train.rows);
        const std::vector<int> val_pred = predict(spec, result.params, x_val);
        stats.val = metrics::derive(metrics::confusion(val_pred, y_val));
        result.history.push_back(stats);
    }
    return result;
}

} // namespace qadsb::nn
