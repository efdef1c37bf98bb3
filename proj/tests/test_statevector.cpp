#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qadsb/statevector.hpp"
#include "test_util.hpp"

using namespace qadsb;
using sv::Complex;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
} // namespace

TEST_CASE("zero_state pins |0...0>") {
    const auto one = sv::zero_state(1);
    REQUIRE(one.dim() == 2);
    CHECK(one[0] == Complex{1.0, 0.0});
    CHECK(one[1] == Complex{0.0, 0.0});

    const auto two = sv::zero_state(2);
    REQUIRE(two.dim() == 4);
    CHECK(two[0] == Complex{1.0, 0.0});
    for (std::size_t i = 1; i < 4; ++i) CHECK(two[i] == Complex{0.0, 0.0});

    const auto three = sv::zero_state(3);
    REQUIRE(three.dim() == 8);
    CHECK(three[0] == Complex{1.0, 0.0});
}

TEST_CASE("zero_state rejects out-of-range register sizes") {
    CHECK_THROWS_AS(sv::zero_state(0), ConfigError);
    CHECK_THROWS_AS(sv::zero_state(13), ConfigError);
    CHECK_NOTHROW(sv::zero_state(12));
}

TEST_CASE("single-qubit rotations on |0>") {
    const auto zero = sv::zero_state(1);

    SUBCASE("RX(0) is the identity") {
        const auto out = sv::apply_1q(zero, sv::rx(0, 0.0));
        CHECK(std::abs(out[0] - Complex{1, 0}) < 1e-15);
        CHECK(std::abs(out[1]) < 1e-15);
    }
    SUBCASE("RX(pi)|0> = [0, -i]") {
        const auto out = sv::apply_1q(zero, sv::rx(0, kPi));
        CHECK(std::abs(out[0]) < 1e-15);
        CHECK(std::abs(out[1] - Complex{0, -1}) < 1e-15);
    }
    SUBCASE("RY(pi/2)|0> = [1/sqrt2, 1/sqrt2]") {
        const auto out = sv::apply_1q(zero, sv::ry(0, kPi / 2));
        CHECK(out[0].real() == Approx(kInvSqrt2).epsilon(1e-14));
        CHECK(out[1].real() == Approx(kInvSqrt2).epsilon(1e-14));
        CHECK(std::abs(out[0].imag()) < 1e-15);
        CHECK(std::abs(out[1].imag()) < 1e-15);
    }
    SUBCASE("invalid wire") {
        CHECK_THROWS_AS(sv::apply_1q(zero, sv::rx(1, 0.5)), IndexError);
        CHECK_THROWS_AS(sv::apply_1q(zero, sv::rx(-1, 0.5)), IndexError);
    }
}

TEST_CASE("CNOT on basis and superposed states") {
    SUBCASE("|10> -> |11>") {
        auto state = sv::apply_1q(sv::zero_state(2), sv::rx(0, kPi)); // -i|10>
        state = sv::apply_2q(state, sv::cnot(0, 1));
        CHECK(std::abs(state[3] - Complex{0, -1}) < 1e-15); // global phase -i from RX
        CHECK(std::abs(state[2]) < 1e-15);
    }
    SUBCASE("control 0 leaves |00> unchanged") {
        const auto out = sv::apply_2q(sv::zero_state(2), sv::cnot(0, 1));
        CHECK(std::abs(out[0] - Complex{1, 0}) < 1e-15);
    }
    SUBCASE("Bell state from a superposed control") {
        auto state = sv::apply_1q(sv::zero_state(2), sv::ry(0, kPi / 2)); // (|00>+|10>)/sqrt2
        state = sv::apply_2q(state, sv::cnot(0, 1));
        CHECK(state[0].real() == Approx(kInvSqrt2).epsilon(1e-14));
        CHECK(state[3].real() == Approx(kInvSqrt2).epsilon(1e-14));
        CHECK(std::abs(state[1]) < 1e-15);
        CHECK(std::abs(state[2]) < 1e-15);
    }
    SUBCASE("invalid wires") {
        const auto state = sv::zero_state(2);
        CHECK_THROWS_AS(sv::apply_2q(state, sv::cnot(0, 0)), IndexError);
        CHECK_THROWS_AS(sv::apply_2q(state, sv::cnot(0, 2)), IndexError);
    }
}

TEST_CASE("expval_z examples") {
    const auto zero = sv::zero_state(1);
    CHECK(sv::expval_z(zero, 0) == Approx(1.0));

    const auto one = sv::apply_1q(zero, sv::rx(0, kPi));
    CHECK(sv::expval_z(one, 0) == Approx(-1.0));

    const auto plus = sv::apply_1q(zero, sv::ry(0, kPi / 2));
    CHECK(std::abs(sv::expval_z(plus, 0)) < 1e-12);

    CHECK_THROWS_AS(sv::expval_z(zero, 1), IndexError);
}

TEST_CASE("expval_z stays in [-1, 1] on random states") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const auto state = testutil::random_state(rng, n);
        for (int w = 0; w < n; ++w) {
            const double e = sv::expval_z(state, w);
            CHECK(e >= -1.0 - 1e-12);
            CHECK(e <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("gate matrices are unitary for random angles") {
    Rng rng(7);
    for (int draw = 0; draw < 100; ++draw) {
        const double a = rng.uniform(-10.0, 10.0);
        const double b = rng.uniform(-10.0, 10.0);
        const double c = rng.uniform(-10.0, 10.0);
        for (const auto& gate :
             {sv::rx(0, a), sv::ry(0, a), sv::rz(0, a), sv::rot_zyz(0, a, b, c)}) {
            const auto u = sv::gate_matrix(gate);
            // U * U^dagger == I
            const Complex r00 = u[0] * std::conj(u[0]) + u[1] * std::conj(u[1]);
            const Complex r01 = u[0] * std::conj(u[2]) + u[1] * std::conj(u[3]);
            const Complex r10 = u[2] * std::conj(u[0]) + u[3] * std::conj(u[1]);
            const Complex r11 = u[2] * std::conj(u[2]) + u[3] * std::conj(u[3]);
            CHECK(std::abs(r00 - Complex{1, 0}) < 1e-12);
            CHECK(std::abs(r01) < 1e-12);
            CHECK(std::abs(r10) < 1e-12);
            CHECK(std::abs(r11 - Complex{1, 0}) < 1e-12);
        }
    }
}

TEST_CASE("norm conservation under random gates") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        auto state = sv::zero_state(n);
        const auto circuit = testutil::random_circuit(rng, n, 25);
        for (const auto& op : circuit) {
            if (const auto* g1 = std::get_if<sv::Gate1Q>(&op)) {
                state = sv::apply_1q(state, *g1);
            } else {
                state = sv::apply_2q(state, std::get<sv::Gate2Q>(op));
            }
            CHECK(std::abs(state.norm_sq() - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("rotation involution and CNOT self-inverse") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(3));
        const auto start = testutil::random_state(rng, n);
        const double theta = rng.uniform(-6.0, 6.0);
        const int wire = static_cast<int>(rng.below(n));

        for (auto make : {sv::rx, sv::ry, sv::rz}) {
            auto state = sv::apply_1q(start, make(wire, theta));
            state = sv::apply_1q(state, make(wire, -theta));
            CHECK(testutil::max_abs_diff(state.amplitudes(), start.amplitudes()) < 1e-12);
        }

        const int target = static_cast<int>((wire + 1) % n);
        auto state = sv::apply_2q(start, sv::cnot(wire, target));
        state = sv::apply_2q(state, sv::cnot(wire, target));
        CHECK(testutil::max_abs_diff(state.amplitudes(), start.amplitudes()) < 1e-12);
    }
}

TEST_CASE("dense oracle pins the documented examples") {
    SUBCASE("RX(0) is the 2x2 identity") {
        const sv::Circuit circuit = {sv::rx(0, 0.0)};
        const auto u = sv::dense_unitary_oracle(circuit, 1);
        CHECK(std::abs(u.at(0, 0) - Complex{1, 0}) < 1e-15);
        CHECK(std::abs(u.at(0, 1)) < 1e-15);
        CHECK(std::abs(u.at(1, 0)) < 1e-15);
        CHECK(std::abs(u.at(1, 1) - Complex{1, 0}) < 1e-15);
    }
    SUBCASE("CNOT(0,1) reproduces the 4x4 permutation") {
        const sv::Circuit circuit = {sv::cnot(0, 1)};
        const auto u = sv::dense_unitary_oracle(circuit, 2);
        const double expected[4][4] = {
            {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                CHECK(std::abs(u.at(r, c) - Complex{expected[r][c], 0}) < 1e-15);
    }
    SUBCASE("RX(0.7) on wire 1 equals I (x) RX(0.7)") {
        const sv::Circuit circuit = {sv::rx(1, 0.7)};
        const auto u = sv::dense_unitary_oracle(circuit, 2);
        const auto rx = sv::gate_matrix(sv::rx(0, 0.7));
        // I (x) RX: block-diagonal with the 2x2 in both blocks
        for (int blk = 0; blk < 2; ++blk) {
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    CHECK(std::abs(u.at(2 * blk + r, 2 * blk + c) - rx[r * 2 + c]) < 1e-15);
        }
        CHECK(std::abs(u.at(0, 2)) < 1e-15);
        CHECK(std::abs(u.at(3, 1)) < 1e-15);
    }
    SUBCASE("more than 4 qubits refused") {
        const sv::Circuit circuit = {sv::rx(0, 0.1)};
        CHECK_THROWS_AS(sv::dense_unitary_oracle(circuit, 5), ConfigError);
    }
}

TEST_CASE("simulator equals the dense oracle on random circuits") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int gates = 1 + static_cast<int>(rng.below(20));
        const auto circuit = testutil::random_circuit(rng, n, gates);

        const auto fast = sv::apply_circuit(sv::zero_state(n), circuit);
        const auto u = sv::dense_unitary_oracle(circuit, n);
        const auto slow = sv::apply_dense(u, sv::zero_state(n).amplitudes());

        CHECK(testutil::max_abs_diff(fast.amplitudes(), slow) < 1e-12);
    }
}
