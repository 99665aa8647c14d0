#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace memoqcd {

enum class GateKind { H, RX, RY, RZ, CNOT, IDENTITY };

inline const char* gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::IDENTITY: return "IDENTITY";
    }
    return "?";
}

/// One circuit element. `control` is meaningful only for CNOT and
/// `param_slot` only for rotations; both are -1 otherwise. When
/// `data_scaled` is set the effective rotation angle is params[slot] * x
/// for the feature value x supplied at execution time.
struct Gate {
    GateKind kind = GateKind::IDENTITY;
    int target = 0;
    int control = -1;
    int param_slot = -1;
    bool data_scaled = false;

    bool is_rotation() const {
        return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
    }
};

inline Gate make_h(int target) { return {GateKind::H, target, -1, -1, false}; }
inline Gate make_cnot(int control, int target) {
    return {GateKind::CNOT, target, control, -1, false};
}
inline Gate make_rotation(GateKind kind, int target, int param_slot, bool data_scaled) {
    return {kind, target, -1, param_slot, data_scaled};
}
inline Gate make_identity(int target) {
    return {GateKind::IDENTITY, target, -1, -1, false};
}

/// A parameterized circuit acting on n_qubits wires. Parameter slots are
/// contiguous from 0 in gate order; init_params holds one starting angle per
/// slot.
struct ParamCircuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    int n_params = 0;
    std::vector<double> init_params;

    void check_valid() const {
        if (n_qubits < 1)
            throw std::invalid_argument("circuit must act on at least one qubit");
        int next_slot = 0;
        for (const Gate& g : gates) {
            if (g.target < 0 || g.target >= n_qubits)
                throw std::invalid_argument("gate target out of range");
            if (g.kind == GateKind::CNOT) {
                if (g.control < 0 || g.control >= n_qubits)
                    throw std::invalid_argument("CNOT control out of range");
                if (g.control == g.target)
                    throw std::invalid_argument("CNOT control equals target");
            }
            if (g.is_rotation()) {
                if (g.param_slot != next_slot)
                    throw std::invalid_argument("param slots must be contiguous in gate order");
                ++next_slot;
            }
        }
        if (next_slot != n_params)
            throw std::invalid_argument("n_params disagrees with rotation count");
        if (static_cast<int>(init_params.size()) != n_params)
            throw std::invalid_argument("init_params length disagrees with n_params");
    }
};

} // namespace memoqcd
