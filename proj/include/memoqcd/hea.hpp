#pragma once

#include <stdexcept>

#include "memoqcd/circuit.hpp"

namespace memoqcd {

/// Wire layout of the training-state circuit: d feature blocks of n_x qubits
/// followed by n_a auxiliary qubits, prepared by an n_layers ansatz.
struct HEALayout {
    int n_x = 3;
    int d = 2;
    int n_a = 1;
    int n_layers = 5;

    int data_qubits() const { return d * n_x; }
    int total_qubits() const { return d * n_x + n_a; }

    void check_valid() const {
        if (n_x < 1 || d < 1 || n_a < 1 || n_layers < 1)
            throw std::invalid_argument("layout fields must all be positive");
    }
};

/// Hardware-efficient ansatz: n_layers repetitions of per-qubit R_y, R_z
/// followed by a linear CNOT cascade, closed by a final per-qubit R_y, R_z
/// block. Parameter count is 2*n_qubits*(n_layers+1). Rotations are plain
/// variational angles unless data_scaled is set (the kernel-fit variant).
inline ParamCircuit build_hea(int n_qubits, int n_layers, bool data_scaled = false) {
    if (n_qubits < 1)
        throw std::invalid_argument("need at least one qubit");
    if (n_layers < 1)
        throw std::invalid_argument("need at least one layer");

    ParamCircuit circ;
    circ.n_qubits = n_qubits;
    auto rotation_block = [&]() {
        for (int q = 0; q < n_qubits; ++q) {
            circ.gates.push_back(make_rotation(GateKind::RY, q, circ.n_params++, data_scaled));
            circ.gates.push_back(make_rotation(GateKind::RZ, q, circ.n_params++, data_scaled));
        }
    };
    for (int layer = 0; layer < n_layers; ++layer) {
        rotation_block();
        for (int q = 0; q + 1 < n_qubits; ++q)
            circ.gates.push_back(make_cnot(q, q + 1));
    }
    rotation_block();
    circ.init_params.assign(static_cast<std::size_t>(circ.n_params), 0.0);
    return circ;
}

} // namespace memoqcd
