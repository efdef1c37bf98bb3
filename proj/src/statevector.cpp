#include "qadsb/statevector.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace qadsb::sv {

namespace {

void check_wire(int wire, int n_qubits) {
    if (wire < 0 || wire >= n_qubits) {
        throw IndexError("wire " + std::to_string(wire) + " out of range for " +
                         std::to_string(n_qubits) + " qubits");
    }
}

// Index mask for a wire under the qubit-0-is-MSB convention.
std::size_t wire_mask(int wire, int n_qubits) {
    return std::size_t{1} << (n_qubits - 1 - wire);
}

} // namespace

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw ConfigError("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                          std::to_string(n_qubits));
    }
    amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amps_[0] = Complex{1.0, 0.0};
}

double Statevector::norm_sq() const noexcept {
    double s = 0.0;
    for (const Complex& a : amps_) s += std::norm(a);
    return s;
}

std::array<Complex, 4> gate_matrix(const Gate1Q& gate) {
    const Complex i{0.0, 1.0};
    switch (gate.kind) {
    case Gate1QKind::RX: {
        const double h = gate.angles[0] / 2.0;
        const double c = std::cos(h), s = std::sin(h);
        return {Complex{c, 0}, -i * s, -i * s, Complex{c, 0}};
    }
    case Gate1QKind::RY: {
        const double h = gate.angles[0] / 2.0;
        const double c = std::cos(h), s = std::sin(h);
        return {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}};
    }
    case Gate1QKind::RZ: {
        const double h = gate.angles[0] / 2.0;
        return {std::exp(-i * h), Complex{0, 0}, Complex{0, 0}, std::exp(i * h)};
    }
    case Gate1QKind::RotZYZ: {
        const double t1 = gate.angles[0], t2 = gate.angles[1], t3 = gate.angles[2];
        const double c = std::cos(t2 / 2.0), s = std::sin(t2 / 2.0);
        return {std::exp(-i * ((t1 + t3) / 2.0)) * c, -std::exp(-i * ((t1 - t3) / 2.0)) * s,
                std::exp(i * ((t1 - t3) / 2.0)) * s, std::exp(i * ((t1 + t3) / 2.0)) * c};
    }
    }
    throw ConfigError("unknown 1q gate kind");
}

Statevector zero_state(int n_qubits) { return Statevector(n_qubits); }

void apply_1q_inplace(Statevector& state, const Gate1Q& gate) {
    check_wire(gate.wire, state.n_qubits_);
    const auto u = gate_matrix(gate);
    const std::size_t stride = wire_mask(gate.wire, state.n_qubits_);
    const std::size_t dim = state.amps_.size();
    auto& a = state.amps_;
    for (std::size_t base = 0; base < dim; base += stride << 1) {
        for (std::size_t off = 0; off < stride; ++off) {
            const std::size_t i0 = base + off;
            const std::size_t i1 = i0 + stride;
            const Complex a0 = a[i0], a1 = a[i1];
            a[i0] = u[0] * a0 + u[1] * a1;
            a[i1] = u[2] * a0 + u[3] * a1;
        }
    }
}

void apply_2q_inplace(Statevector& state, const Gate2Q& gate) {
    check_wire(gate.control, state.n_qubits_);
    check_wire(gate.target, state.n_qubits_);
    if (gate.control == gate.target) {
        throw IndexError("CNOT control and target must differ, both are " +
                         std::to_string(gate.control));
    }
    const std::size_t mc = wire_mask(gate.control, state.n_qubits_);
    const std::size_t mt = wire_mask(gate.target, state.n_qubits_);
    auto& a = state.amps_;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((i & mc) != 0 && (i & mt) == 0) std::swap(a[i], a[i | mt]);
    }
}

Statevector apply_1q(const Statevector& state, const Gate1Q& gate) {
    Statevector out = state;
    apply_1q_inplace(out, gate);
    return out;
}

Statevector apply_2q(const Statevector& state, const Gate2Q& gate) {
    Statevector out = state;
    apply_2q_inplace(out, gate);
    return out;
}

void apply_circuit_inplace(Statevector& state, std::span<const GateOp> circuit) {
    for (const GateOp& op : circuit) {
        if (const Gate1Q* g1 = std::get_if<Gate1Q>(&op)) {
            apply_1q_inplace(state, *g1);
        } else {
            apply_2q_inplace(state, std::get<Gate2Q>(op));
        }
    }
}

Statevector apply_circuit(Statevector state, std::span<const GateOp> circuit) {
    apply_circuit_inplace(state, circuit);
    return state;
}

double expval_z(const Statevector& state, int wire) {
    check_wire(wire, state.n_qubits());
    const std::size_t mask = wire_mask(wire, state.n_qubits());
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

namespace {

DenseUnitary dense_identity(std::size_t dim) {
    DenseUnitary u;
    u.dim = dim;
    u.m.assign(dim * dim, Complex{0, 0});
    for (std::size_t k = 0; k < dim; ++k) u.m[k * dim + k] = Complex{1, 0};
    return u;
}

DenseUnitary dense_matmul(const DenseUnitary& a, const DenseUnitary& b) {
    DenseUnitary out;
    out.dim = a.dim;
    out.m.assign(a.dim * a.dim, Complex{0, 0});
    for (std::size_t r = 0; r < a.dim; ++r) {
        for (std::size_t k = 0; k < a.dim; ++k) {
            const Complex arc = a.m[r * a.dim + k];
            if (arc == Complex{0, 0}) continue;
            for (std::size_t c = 0; c < a.dim; ++c) {
                out.m[r * out.dim + c] += arc * b.m[k * b.dim + c];
            }
        }
    }
    return out;
}

DenseUnitary dense_kron(const DenseUnitary& a, const DenseUnitary& b) {
    DenseUnitary out;
    out.dim = a.dim * b.dim;
    out.m.assign(out.dim * out.dim, Complex{0, 0});
    for (std::size_t ra = 0; ra < a.dim; ++ra)
        for (std::size_t ca = 0; ca < a.dim; ++ca)
            for (std::size_t rb = 0; rb < b.dim; ++rb)
                for (std::size_t cb = 0; cb < b.dim; ++cb)
                    out.m[(ra * b.dim + rb) * out.dim + (ca * b.dim + cb)] =
                        a.m[ra * a.dim + ca] * b.m[rb * b.dim + cb];
    return out;
}

DenseUnitary dense_from_2x2(const std::array<Complex, 4>& u) {
    DenseUnitary out;
    out.dim = 2;
    out.m = {u[0], u[1], u[2], u[3]};
    return out;
}

// (x)_{w=0..n-1} factor(w), qubit 0 as the leftmost Kronecker factor.
DenseUnitary kron_chain(int n_qubits,
                        const std::vector<std::pair<int, std::array<Complex, 4>>>& factors) {
    DenseUnitary out;
    out.dim = 1;
    out.m = {Complex{1, 0}};
    const std::array<Complex, 4> eye = {Complex{1, 0}, Complex{0, 0}, Complex{0, 0},
                                        Complex{1, 0}};
    for (int w = 0; w < n_qubits; ++w) {
        std::array<Complex, 4> f = eye;
        for (const auto& [wire, mat] : factors) {
            if (wire == w) f = mat;
        }
        out = dense_kron(out, dense_from_2x2(f));
    }
    return out;
}

DenseUnitary dense_gate(const GateOp& op, int n_qubits) {
    if (const Gate1Q* g1 = std::get_if<Gate1Q>(&op)) {
        check_wire(g1->wire, n_qubits);
        return kron_chain(n_qubits, {{g1->wire, gate_matrix(*g1)}});
    }
    const Gate2Q& g2 = std::get<Gate2Q>(op);
    check_wire(g2.control, n_qubits);
    check_wire(g2.target, n_qubits);
    if (g2.control == g2.target) throw IndexError("CNOT control and target must differ");
    // CNOT = P0(control) (x) I + P1(control) (x) X(target)
    const std::array<Complex, 4> p0 = {Complex{1, 0}, {}, {}, Complex{0, 0}};
    const std::array<Complex, 4> p1 = {Complex{0, 0}, {}, {}, Complex{1, 0}};
    const std::array<Complex, 4> x = {Complex{0, 0}, Complex{1, 0}, Complex{1, 0},
                                      Complex{0, 0}};
    DenseUnitary a = kron_chain(n_qubits, {{g2.control, p0}});
    const DenseUnitary b = kron_chain(n_qubits, {{g2.control, p1}, {g2.target, x}});
    for (std::size_t k = 0; k < a.m.size(); ++k) a.m[k] += b.m[k];
    return a;
}

} // namespace

DenseUnitary dense_unitary_oracle(std::span<const GateOp> circuit, int n_qubits) {
    if (n_qubits < 1 || n_qubits > 4) {
        throw ConfigError("dense_unitary_oracle is limited to 1..4 qubits, got " +
                          std::to_string(n_qubits));
    }
    DenseUnitary total = dense_identity(std::size_t{1} << n_qubits);
    for (const GateOp& op : circuit) {
        total = dense_matmul(dense_gate(op, n_qubits), total);
    }
    return total;
}

std::vector<Complex> apply_dense(const DenseUnitary& u, std::span<const Complex> amps) {
    if (amps.size() != u.dim) {
        throw ShapeError("dense unitary dim " + std::to_string(u.dim) +
                         " does not match state dim " + std::to_string(amps.size()));
    }
    std::vector<Complex> out(u.dim, Complex{0, 0});
    for (std::size_t r = 0; r < u.dim; ++r)
        for (std::size_t c = 0; c < u.dim; ++c) out[r] += u.m[r * u.dim + c] * amps[c];
    return out;
}

} // namespace qadsb::sv
