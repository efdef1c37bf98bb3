#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qadsb/statevector.hpp"
#include "qadsb/tensor.hpp"

namespace qadsb::vqc {

/**
 * Layout of the variational circuit: RX angle embedding on every wire,
 * then n_layers strongly entangling layers (per-wire Z-Y-Z rotations
 * followed by a CNOT ring with a per-layer offset), then <Z> on every wire.
 */
struct CircuitSpec {
    int n_qubits = 1;
    int n_layers = 1;
    // CNOT offset r_l per layer; empty for a single qubit (no ring).
    std::vector<int> entangle_ranges;

    // Default ranges r_l = (l mod (n_qubits - 1)) + 1.
    static CircuitSpec make(int n_qubits, int n_layers);

    int param_count() const { return n_layers * n_qubits * 3; }
    void validate() const;
};

struct VqcWeights {
    int n_layers = 0;
    int n_qubits = 0;
    std::vector<double> values; // [layer][qubit][3] row-major, radians

    double& at(int layer, int qubit, int k) {
        return values[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + k];
    }
    double at(int layer, int qubit, int k) const {
        return values[(static_cast<std::size_t>(layer) * n_qubits + qubit) * 3 + k];
    }

    static VqcWeights zeros(const CircuitSpec& spec);
    // Uniform angles on [0, 2*pi), seeded.
    static VqcWeights random_uniform(const CircuitSpec& spec, std::uint64_t seed);
};

// One RX(inputs[i]) on wire i per input.
sv::Circuit embed_inputs(std::span<const double> inputs);

// Per layer: RotZYZ on every wire, then CNOT(i, (i + r_l) mod n) for every i.
sv::Circuit entangling_layers(const CircuitSpec& spec, const VqcWeights& weights);

// zero state -> embedding -> entangling layers -> <Z> per wire.
std::vector<double> forward(const CircuitSpec& spec, const VqcWeights& weights,
                            std::span<const double> inputs);

struct Jacobians {
    // d<Z_w>/d theta_p, [n_qubits, param_count]; p indexes weights.values.
    Tensor2 weights;
    // d<Z_w>/d x_i, [n_qubits, n_qubits].
    Tensor2 inputs;
};

// Exact gradients via the parameter-shift rule,
// d f / d theta = (f(theta + pi/2) - f(theta - pi/2)) / 2,
// applied to every weight angle and every input embedding angle.
Jacobians parameter_shift_grad(const CircuitSpec& spec, const VqcWeights& weights,
                               std::span<const double> inputs);

} // namespace qadsb::vqc
