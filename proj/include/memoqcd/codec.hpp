#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "memoqcd/circuit.hpp"
#include "memoqcd/rng.hpp"

namespace memoqcd {

/// Bit-string genome; each gene is 5 bits (3 selecting the gate kind, 2
/// selecting either the initial rotation angle or the CNOT target offset).
struct Chromosome {
    std::vector<std::uint8_t> bits;

    int n_gates() const { return static_cast<int>(bits.size()) / 5; }

    void check_valid() const {
        if (bits.empty() || bits.size() % 5 != 0)
            throw std::invalid_argument("chromosome length must be a positive multiple of 5");
        for (std::uint8_t b : bits)
            if (b > 1) throw std::invalid_argument("chromosome entries must be 0 or 1");
    }

    std::string to_string() const {
        std::string s;
        s.reserve(bits.size());
        for (std::uint8_t b : bits) s.push_back(b ? '1' : '0');
        return s;
    }

    static Chromosome from_string(const std::string& s) {
        Chromosome c;
        c.bits.reserve(s.size());
        for (char ch : s) {
            if (ch != '0' && ch != '1')
                throw std::invalid_argument("chromosome string must contain only 0 and 1");
            c.bits.push_back(ch == '1' ? 1 : 0);
        }
        c.check_valid();
        return c;
    }

    bool operator==(const Chromosome& other) const { return bits == other.bits; }
};

/// Rotation initialization angles selected by the trailing 2 bits of a gene.
inline constexpr std::array<double, 4> kInitAngles = {
    3.14159265358979323846,      // 00
    1.57079632679489661923,      // 01
    0.78539816339744830962,      // 10
    0.39269908169872415481       // 11
};

/// Decode a chromosome into a circuit on n_qubits wires. Gene g targets
/// qubit g mod n_qubits. Gate selection by the first 3 bits: 000 H, 011 RX,
/// 111 RY, 100 RZ, 001 CNOT, anything else IDENTITY. Rotations are
/// data-scaled and get an initial angle from the last 2 bits (00 pi, 01 pi/2,
/// 10 pi/4, 11 pi/8). CNOTs use control = target qubit of the gene and
/// target = control + offset (mod n_qubits) with offset = last 2 bits + 1; a
/// wrap back onto the control decodes as IDENTITY so decode stays total.
inline ParamCircuit decode(const Chromosome& chromosome, int n_qubits) {
    chromosome.check_valid();
    if (n_qubits < 1)
        throw std::invalid_argument("need at least one qubit");

    ParamCircuit circ;
    circ.n_qubits = n_qubits;
    const int n_genes = chromosome.n_gates();
    circ.gates.reserve(static_cast<std::size_t>(n_genes));

    for (int g = 0; g < n_genes; ++g) {
        const std::uint8_t* gene = &chromosome.bits[static_cast<std::size_t>(5 * g)];
        const int qubit = g % n_qubits;
        const int head = gene[0] * 4 + gene[1] * 2 + gene[2];
        const int tail = gene[3] * 2 + gene[4];

        switch (head) {
            case 0b000:
                circ.gates.push_back(make_h(qubit));
                break;
            case 0b011:
            case 0b111:
            case 0b100: {
                GateKind kind = head == 0b011 ? GateKind::RX
                              : head == 0b111 ? GateKind::RY
                                              : GateKind::RZ;
                circ.gates.push_back(make_rotation(kind, qubit, circ.n_params, true));
                circ.init_params.push_back(kInitAngles[static_cast<std::size_t>(tail)]);
                ++circ.n_params;
                break;
            }
            case 0b001: {
                const int target = (qubit + tail + 1) % n_qubits;
                if (target == qubit)
                    circ.gates.push_back(make_identity(qubit));
                else
                    circ.gates.push_back(make_cnot(qubit, target));
                break;
            }
            default:
                circ.gates.push_back(make_identity(qubit));
                break;
        }
    }
    return circ;
}

/// Chromosome whose decode reproduces the hardware-efficient ansatz with
/// data-scaled rotations: per layer, RY on every qubit, RZ on every qubit,
/// a CNOT ladder q -> q+1, and one IDENTITY pad so the next layer starts on
/// qubit 0 again; a final RY+RZ block closes the circuit. Gene g targets
/// qubit g mod n, so each block is laid out qubit-major: the RY sweep and RZ
/// sweep land on qubits 0..n-1 in order, which commutes with the interleaved
/// per-qubit ordering of build_hea and yields the same unitary for matching
/// per-gate parameters.
inline Chromosome hea_chromosome(int n_qubits, int n_layers) {
    if (n_qubits < 1) throw std::invalid_argument("need at least one qubit");
    if (n_layers < 1) throw std::invalid_argument("need at least one layer");

    Chromosome c;
    c.bits.reserve(static_cast<std::size_t>(5 * n_qubits * (3 * n_layers + 2)));
    auto gene = [&c](std::initializer_list<std::uint8_t> bits5) {
        c.bits.insert(c.bits.end(), bits5.begin(), bits5.end());
    };
    auto rotation_block = [&] {
        for (int q = 0; q < n_qubits; ++q) gene({1, 1, 1, 0, 0});  // RY
        for (int q = 0; q < n_qubits; ++q) gene({1, 0, 0, 0, 0});  // RZ
    };
    for (int l = 0; l < n_layers; ++l) {
        rotation_block();
        for (int q = 0; q + 1 < n_qubits; ++q) gene({0, 0, 1, 0, 0});  // CNOT q -> q+1
        gene({0, 1, 0, 0, 0});  // IDENTITY pad on qubit n-1
    }
    rotation_block();
    return c;
}

inline Chromosome random_chromosome(int n_gates, std::uint64_t seed) {
    if (n_gates < 1)
        throw std::invalid_argument("need at least one gene");
    Rng rng(seed);
    Chromosome c;
    c.bits.resize(static_cast<std::size_t>(5 * n_gates));
    for (std::uint8_t& b : c.bits)
        b = static_cast<std::uint8_t>(rng.bits() >> 63);
    return c;
}

struct CircuitMetrics {
    int depth = 0;
    int n_h = 0, n_rx = 0, n_ry = 0, n_rz = 0, n_cnot = 0;

    int total_gates() const { return n_h + n_rx + n_ry + n_rz + n_cnot; }
};

/// Depth by greedy as-soon-as-possible layering; IDENTITY gates occupy no
/// layer and are excluded from counts.
inline CircuitMetrics circuit_metrics(const ParamCircuit& circuit) {
    CircuitMetrics m;
    std::vector<int> busy(static_cast<std::size_t>(circuit.n_qubits), 0);
    for (const Gate& g : circuit.gates) {
        switch (g.kind) {
            case GateKind::IDENTITY: continue;
            case GateKind::H: ++m.n_h; break;
            case GateKind::RX: ++m.n_rx; break;
            case GateKind::RY: ++m.n_ry; break;
            case GateKind::RZ: ++m.n_rz; break;
            case GateKind::CNOT: ++m.n_cnot; break;
        }
        int layer = busy[static_cast<std::size_t>(g.target)];
        if (g.kind == GateKind::CNOT)
            layer = std::max(layer, busy[static_cast<std::size_t>(g.control)]);
        ++layer;
        busy[static_cast<std::size_t>(g.target)] = layer;
        if (g.kind == GateKind::CNOT) busy[static_cast<std::size_t>(g.control)] = layer;
        m.depth = std::max(m.depth, layer);
    }
    return m;
}

} // namespace memoqcd
