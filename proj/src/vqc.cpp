#include "qadsb/vqc.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qadsb/rng.hpp"

namespace qadsb::vqc {

namespace {

void check_inputs(std::span<const double> inputs, int n_qubits) {
    if (static_cast<int>(inputs.size()) != n_qubits) {
        throw ShapeError("expected " + std::to_string(n_qubits) + " input angles, got " +
                         std::to_string(inputs.size()));
    }
    for (double x : inputs) {
        if (!std::isfinite(x)) throw DataError("non-finite input angle");
    }
}

void check_weights(const CircuitSpec& spec, const VqcWeights& w) {
    if (w.n_layers != spec.n_layers || w.n_qubits != spec.n_qubits ||
        static_cast<int>(w.values.size()) != spec.param_count()) {
        throw ShapeError("weight shape [" + std::to_string(w.n_layers) + ", " +
                         std::to_string(w.n_qubits) + ", 3] does not match circuit [" +
                         std::to_string(spec.n_layers) + ", " + std::to_string(spec.n_qubits) +
                         ", 3]");
    }
}

// Fast path used by forward(): applies the circuit without materializing a
// gate list. Equivalence with embed_inputs + entangling_layers is pinned by
// the unit tests.
void run_circuit(const CircuitSpec& spec, const VqcWeights& weights,
                 std::span<const double> inputs, sv::Statevector& state) {
    for (int q = 0; q < spec.n_qubits; ++q) {
        sv::apply_1q_inplace(state, sv::rx(q, inputs[q]));
    }
    for (int l = 0; l < spec.n_layers; ++l) {
        for (int q = 0; q < spec.n_qubits; ++q) {
            sv::apply_1q_inplace(
                state, sv::rot_zyz(q, weights.at(l, q, 0), weights.at(l, q, 1),
                                   weights.at(l, q, 2)));
        }
        if (spec.n_qubits >= 2) {
            const int r = spec.entangle_ranges[l];
            for (int q = 0; q < spec.n_qubits; ++q) {
                sv::apply_2q_inplace(state, sv::cnot(q, (q + r) % spec.n_qubits));
            }
        }
    }
}

std::vector<double> expectations(const sv::Statevector& state) {
    std::vector<double> out(state.n_qubits());
    for (int q = 0; q < state.n_qubits(); ++q) out[q] = sv::expval_z(state, q);
    return out;
}

} // namespace

CircuitSpec CircuitSpec::make(int n_qubits, int n_layers) {
    CircuitSpec spec;
    spec.n_qubits = n_qubits;
    spec.n_layers = n_layers;
    if (n_qubits >= 2) {
        spec.entangle_ranges.reserve(n_layers);
        for (int l = 0; l < n_layers; ++l) {
            spec.entangle_ranges.push_back(l % (n_qubits - 1) + 1);
        }
    }
    spec.validate();
    return spec;
}

void CircuitSpec::validate() const {
    if (n_qubits < 1 || n_qubits > sv::kMaxQubits) {
        throw ConfigError("circuit n_qubits must be in [1, " + std::to_string(sv::kMaxQubits) +
                          "], got " + std::to_string(n_qubits));
    }
    if (n_layers < 1) {
        throw ConfigError("circuit needs at least one entangling layer, got " +
                          std::to_string(n_layers));
    }
    if (n_qubits >= 2) {
        if (static_cast<int>(entangle_ranges.size()) != n_layers) {
            throw ConfigError("expected one entangle range per layer (" +
                              std::to_string(n_layers) + "), got " +
                              std::to_string(entangle_ranges.size()));
        }
        for (int r : entangle_ranges) {
            if (r < 1 || r > n_qubits - 1) {
                throw ConfigError("entangle range " + std::to_string(r) +
                                  " outside [1, " + std::to_string(n_qubits - 1) + "]");
            }
        }
    }
}

VqcWeights VqcWeights::zeros(const CircuitSpec& spec) {
    spec.validate();
    VqcWeights w;
    w.n_layers = spec.n_layers;
    w.n_qubits = spec.n_qubits;
    w.values.assign(spec.param_count(), 0.0);
    return w;
}

VqcWeights VqcWeights::random_uniform(const CircuitSpec& spec, std::uint64_t seed) {
    VqcWeights w = zeros(spec);
    Rng rng(seed);
    for (double& v : w.values) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return w;
}

sv::Circuit embed_inputs(std::span<const double> inputs) {
    if (inputs.empty()) throw ShapeError("embedding needs at least one input angle");
    for (double x : inputs) {
        if (!std::isfinite(x)) throw DataError("non-finite input angle");
    }
    sv::Circuit gates;
    gates.reserve(inputs.size());
    for (std::size_t q = 0; q < inputs.size(); ++q) {
        gates.emplace_back(sv::rx(static_cast<int>(q), inputs[q]));
    }
    return gates;
}

sv::Circuit entangling_layers(const CircuitSpec& spec, const VqcWeights& weights) {
    spec.validate();
    check_weights(spec, weights);
    sv::Circuit gates;
    gates.reserve(static_cast<std::size_t>(spec.n_layers) * spec.n_qubits * 2);
    for (int l = 0; l < spec.n_layers; ++l) {
        for (int q = 0; q < spec.n_qubits; ++q) {
            gates.emplace_back(sv::rot_zyz(q, weights.at(l, q, 0), weights.at(l, q, 1),
                                           weights.at(l, q, 2)));
        }
        if (spec.n_qubits >= 2) {
            const int r = spec.entangle_ranges[l];
            for (int q = 0; q < spec.n_qubits; ++q) {
                gates.emplace_back(sv::cnot(q, (q + r) % spec.n_qubits));
            }
        }
    }
    return gates;
}

std::vector<double> forward(const CircuitSpec& spec, const VqcWeights& weights,
                            std::span<const double> inputs) {
    spec.validate();
    check_weights(spec, weights);
    check_inputs(inputs, spec.n_qubits);
    sv::Statevector state(spec.n_qubits);
    run_circuit(spec, weights, inputs, state);
    return expectations(state);
}

Jacobians parameter_shift_grad(const CircuitSpec& spec, const VqcWeights& weights,
                               std::span<const double> inputs) {
    spec.validate();
    check_weights(spec, weights);
    check_inputs(inputs, spec.n_qubits);

    const double shift = std::numbers::pi / 2.0;
    const int n = spec.n_qubits;
    Jacobians jac;
    jac.weights = Tensor2(n, spec.param_count());
    jac.inputs = Tensor2(n, n);

    VqcWeights w = weights;
    std::vector<double> x(inputs.begin(), inputs.end());
    sv::Statevector state(n);

    auto eval = [&](std::vector<double>& out) {
        state = sv::Statevector(n);
        run_circuit(spec, w, x, state);
        out = expectations(state);
    };

    std::vector<double> plus, minus;
    for (int p = 0; p < spec.param_count(); ++p) {
        const double saved = w.values[p];
        w.values[p] = saved + shift;
        eval(plus);
        w.values[p] = saved - shift;
        eval(minus);
        w.values[p] = saved;
        for (int q = 0; q < n; ++q) jac.weights(q, p) = (plus[q] - minus[q]) / 2.0;
    }
    for (int i = 0; i < n; ++i) {
        const double saved = x[i];
        x[i] = saved + shift;
        eval(plus);
        x[i] = saved - shift;
        eval(minus);
        x[i] = saved;
        for (int q = 0; q < n; ++q) jac.inputs(q, i) = (plus[q] - minus[q]) / 2.0;
    }
    return jac;
}

} // namespace qadsb::vqc
