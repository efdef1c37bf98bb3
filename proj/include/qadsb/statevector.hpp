#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "qadsb/errors.hpp"

namespace qadsb::sv {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 12;

/**
 * Dense amplitude vector of an n-qubit register.
 *
 * Bit convention: qubit 0 is the most significant bit of the basis-state
 * index, so |q0 q1 ... q(n-1)> lives at index q0*2^(n-1) + ... + q(n-1).
 * This matches |00> = |0> (x) |0> = [1 0 0 0]^T.
 */
class Statevector {
public:
    // |0...0>
    explicit Statevector(int n_qubits);

    int n_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return amps_.size(); }
    std::span<const Complex> amplitudes() const noexcept { return amps_; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

    double norm_sq() const noexcept;

private:
    friend void apply_1q_inplace(Statevector&, const struct Gate1Q&);
    friend void apply_2q_inplace(Statevector&, const struct Gate2Q&);

    int n_qubits_;
    std::vector<Complex> amps_;
};

enum class Gate1QKind { RX, RY, RZ, RotZYZ };

// Single-qubit gate. RX/RY/RZ use angles[0]; RotZYZ is the Z-Y-Z learnable
// unitary U(t1, t2, t3) = RZ(t1) * RY(t2) * RZ(t3)  (RZ(t3) applied first).
struct Gate1Q {
    Gate1QKind kind = Gate1QKind::RX;
    int wire = 0;
    std::array<double, 3> angles{};
};

struct Gate2Q {
    int control = 0;
    int target = 1;
};

inline Gate1Q rx(int wire, double theta) { return {Gate1QKind::RX, wire, {theta, 0, 0}}; }
inline Gate1Q ry(int wire, double theta) { return {Gate1QKind::RY, wire, {theta, 0, 0}}; }
inline Gate1Q rz(int wire, double theta) { return {Gate1QKind::RZ, wire, {theta, 0, 0}}; }
inline Gate1Q rot_zyz(int wire, double t1, double t2, double t3) {
    return {Gate1QKind::RotZYZ, wire, {t1, t2, t3}};
}
inline Gate2Q cnot(int control, int target) { return {control, target}; }

using GateOp = std::variant<Gate1Q, Gate2Q>;
using Circuit = std::vector<GateOp>;

// Row-major 2x2 unitary realized by the gate.
std::array<Complex, 4> gate_matrix(const Gate1Q& gate);

Statevector zero_state(int n_qubits);

// Value-semantics gate application; in-place variants are the fast path.
Statevector apply_1q(const Statevector& state, const Gate1Q& gate);
Statevector apply_2q(const Statevector& state, const Gate2Q& gate);
Statevector apply_circuit(Statevector state, std::span<const GateOp> circuit);

void apply_1q_inplace(Statevector& state, const Gate1Q& gate);
void apply_2q_inplace(Statevector& state, const Gate2Q& gate);
void apply_circuit_inplace(Statevector& state, std::span<const GateOp> circuit);

// <Z> on one wire: sum of |amp|^2 signed by that wire's bit.
double expval_z(const Statevector& state, int wire);

// Full 2^n x 2^n circuit unitary, row-major.
struct DenseUnitary {
    std::size_t dim = 0;
    std::vector<Complex> m;

    Complex at(std::size_t r, std::size_t c) const { return m[r * dim + c]; }
};

/**
 * Brute-force test oracle: builds the whole circuit unitary from explicit
 * Kronecker products and matrix multiplication. Refuses n_qubits > 4.
 */
DenseUnitary dense_unitary_oracle(std::span<const GateOp> circuit, int n_qubits);

std::vector<Complex> apply_dense(const DenseUnitary& u, std::span<const Complex> amps);

} // namespace qadsb::sv
