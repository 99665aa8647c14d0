#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "memoqcd/circuit.hpp"
#include "memoqcd/rng.hpp"

namespace memoqcd {

using cdouble = std::complex<double>;

inline constexpr int kMaxQubits = 20;

/// Statevector over n_qubits wires. Basis index is the big-endian bit string
/// of the qubit readouts: qubit 0 is the most significant bit, so qubit q
/// contributes bit (n_qubits - 1 - q) of the index.
struct PureState {
    int n_qubits = 0;
    std::vector<cdouble> amplitudes;

    std::size_t dim() const { return amplitudes.size(); }

    double norm() const {
        double s = 0.0;
        for (const cdouble& a : amplitudes) s += std::norm(a);
        return std::sqrt(s);
    }
};

/// Density matrix, stored row-major.
struct MixedState {
    int n_qubits = 0;
    std::vector<cdouble> matrix;

    std::size_t dim() const { return std::size_t{1} << n_qubits; }
    cdouble& at(std::size_t r, std::size_t c) { return matrix[r * dim() + c]; }
    const cdouble& at(std::size_t r, std::size_t c) const { return matrix[r * dim() + c]; }

    double trace_real() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) t += at(i, i).real();
        return t;
    }
};

inline PureState zero_state(int n_qubits) {
    if (n_qubits < 1)
        throw std::invalid_argument("need at least one qubit");
    if (n_qubits > kMaxQubits)
        throw std::length_error("statevector would exceed the supported qubit bound");
    PureState s;
    s.n_qubits = n_qubits;
    s.amplitudes.assign(std::size_t{1} << n_qubits, cdouble{0.0, 0.0});
    s.amplitudes[0] = 1.0;
    return s;
}

namespace detail {

/// Visit all basis-index pairs (i0, i1) that differ only in the target
/// qubit's bit, calling f(i0, i1) with i0 having bit value 0.
template <class F>
inline void for_target_pairs(int n_qubits, int target, F&& f) {
    const std::size_t tbit = std::size_t{1} << (n_qubits - 1 - target);
    const std::size_t dim = std::size_t{1} << n_qubits;
    for (std::size_t base = 0; base < dim; base += 2 * tbit)
        for (std::size_t low = 0; low < tbit; ++low) {
            std::size_t i0 = base + low;
            f(i0, i0 + tbit);
        }
}

} // namespace detail

/// Apply a single gate in place. `angle` is the resolved rotation angle in
/// radians and is ignored for H, CNOT, and IDENTITY.
inline void apply_gate_inplace(PureState& state, const Gate& gate, double angle = 0.0) {
    const int n = state.n_qubits;
    if (gate.target < 0 || gate.target >= n)
        throw std::invalid_argument("gate target out of range");
    switch (gate.kind) {
        case GateKind::IDENTITY:
            return;
        case GateKind::H: {
            const double inv_sqrt2 = 0.70710678118654752440;
            detail::for_target_pairs(n, gate.target, [&](std::size_t i0, std::size_t i1) {
                cdouble a = state.amplitudes[i0], b = state.amplitudes[i1];
                state.amplitudes[i0] = (a + b) * inv_sqrt2;
                state.amplitudes[i1] = (a - b) * inv_sqrt2;
            });
            return;
        }
        case GateKind::RX: {
            double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
            detail::for_target_pairs(n, gate.target, [&](std::size_t i0, std::size_t i1) {
                cdouble a = state.amplitudes[i0], b = state.amplitudes[i1];
                state.amplitudes[i0] = c * a - cdouble{0, 1} * s * b;
                state.amplitudes[i1] = c * b - cdouble{0, 1} * s * a;
            });
            return;
        }
        case GateKind::RY: {
            double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
            detail::for_target_pairs(n, gate.target, [&](std::size_t i0, std::size_t i1) {
                cdouble a = state.amplitudes[i0], b = state.amplitudes[i1];
                state.amplitudes[i0] = c * a - s * b;
                state.amplitudes[i1] = s * a + c * b;
            });
            return;
        }
        case GateKind::RZ: {
            cdouble e0{std::cos(0.5 * angle), -std::sin(0.5 * angle)};
            cdouble e1 = std::conj(e0);
            detail::for_target_pairs(n, gate.target, [&](std::size_t i0, std::size_t i1) {
                state.amplitudes[i0] *= e0;
                state.amplitudes[i1] *= e1;
            });
            return;
        }
        case GateKind::CNOT: {
            if (gate.control < 0 || gate.control >= n)
                throw std::invalid_argument("CNOT control out of range");
            if (gate.control == gate.target)
                throw std::invalid_argument("CNOT control equals target");
            const std::size_t cbit = std::size_t{1} << (n - 1 - gate.control);
            detail::for_target_pairs(n, gate.target, [&](std::size_t i0, std::size_t i1) {
                if (i0 & cbit) std::swap(state.amplitudes[i0], state.amplitudes[i1]);
            });
            return;
        }
    }
}

inline PureState apply_gate(const PureState& state, const Gate& gate, double angle = 0.0) {
    PureState out = state;
    apply_gate_inplace(out, gate, angle);
    return out;
}

/// Resolve the effective angle of a rotation gate for given parameters and
/// optional feature value.
inline double resolve_angle(const Gate& gate, const std::vector<double>& params,
                            const std::optional<double>& feature) {
    double theta = params[static_cast<std::size_t>(gate.param_slot)];
    if (gate.data_scaled) {
        if (!feature)
            throw std::invalid_argument("circuit has data-scaled gates but no feature value given");
        theta *= *feature;
    }
    return theta;
}

/// Execute a circuit on |0...0>. `feature` is required iff any gate is
/// data-scaled.
inline PureState run_circuit(const ParamCircuit& circuit, const std::vector<double>& params,
                             std::optional<double> feature = std::nullopt) {
    if (static_cast<int>(params.size()) != circuit.n_params)
        throw std::invalid_argument("parameter vector length does not match circuit");
    PureState state = zero_state(circuit.n_qubits);
    for (const Gate& g : circuit.gates) {
        double angle = g.is_rotation() ? resolve_angle(g, params, feature) : 0.0;
        apply_gate_inplace(state, g, angle);
    }
    return state;
}

/// Reduced density matrix over the kept qubits (duplicates rejected). The
/// reduced state orders kept qubits by ascending original index, preserving
/// the big-endian convention.
inline MixedState partial_trace(const PureState& state, std::vector<int> keep) {
    if (keep.empty())
        throw std::invalid_argument("keep set must be nonempty");
    std::sort(keep.begin(), keep.end());
    if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
        throw std::invalid_argument("keep set has duplicate qubits");
    const int n = state.n_qubits;
    for (int q : keep)
        if (q < 0 || q >= n) throw std::invalid_argument("keep qubit out of range");

    const int m = static_cast<int>(keep.size());
    const int n_env = n - m;
    const std::size_t dim_keep = std::size_t{1} << m;
    const std::size_t dim_env = std::size_t{1} << n_env;

    // Bit positions (within the full index) of kept and traced qubits.
    std::vector<int> keep_pos, env_pos;
    {
        std::vector<bool> kept(n, false);
        for (int q : keep) kept[static_cast<std::size_t>(q)] = true;
        for (int q = 0; q < n; ++q)
            (kept[static_cast<std::size_t>(q)] ? keep_pos : env_pos).push_back(n - 1 - q);
    }

    auto expand = [](std::size_t compact, const std::vector<int>& pos) {
        // compact's bit j (big-endian over pos order) goes to full-index bit pos[j].
        std::size_t full = 0;
        const int m2 = static_cast<int>(pos.size());
        for (int j = 0; j < m2; ++j)
            if (compact >> (m2 - 1 - j) & 1) full |= std::size_t{1} << pos[static_cast<std::size_t>(j)];
        return full;
    };

    MixedState rho;
    rho.n_qubits = m;
    rho.matrix.assign(dim_keep * dim_keep, cdouble{0.0, 0.0});

    std::vector<cdouble> sub(dim_keep);
    for (std::size_t e = 0; e < dim_env; ++e) {
        std::size_t env_bits = expand(e, env_pos);
        for (std::size_t r = 0; r < dim_keep; ++r)
            sub[r] = state.amplitudes[env_bits | expand(r, keep_pos)];
        for (std::size_t r = 0; r < dim_keep; ++r) {
            if (sub[r] == cdouble{0.0, 0.0}) continue;
            for (std::size_t c = 0; c < dim_keep; ++c)
                rho.matrix[r * dim_keep + c] += sub[r] * std::conj(sub[c]);
        }
    }
    return rho;
}

/// <psi| rho |psi>, clamped to [0,1].
inline double projection_prob(const MixedState& rho, const PureState& psi) {
    if (rho.n_qubits != psi.n_qubits)
        throw std::invalid_argument("state dimensions do not match");
    const std::size_t d = rho.dim();
    cdouble acc{0.0, 0.0};
    for (std::size_t r = 0; r < d; ++r) {
        cdouble row{0.0, 0.0};
        for (std::size_t c = 0; c < d; ++c)
            row += rho.matrix[r * d + c] * psi.amplitudes[c];
        acc += std::conj(psi.amplitudes[r]) * row;
    }
    return std::clamp(acc.real(), 0.0, 1.0);
}

/// Probability that every qubit in `subset` reads 0, marginalizing the rest.
inline double prob_zero_on(const PureState& state, const std::vector<int>& subset) {
    if (subset.empty())
        throw std::invalid_argument("subset must be nonempty");
    std::size_t mask = 0;
    for (int q : subset) {
        if (q < 0 || q >= state.n_qubits)
            throw std::invalid_argument("subset qubit out of range");
        mask |= std::size_t{1} << (state.n_qubits - 1 - q);
    }
    double p = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i)
        if ((i & mask) == 0) p += std::norm(state.amplitudes[i]);
    return std::clamp(p, 0.0, 1.0);
}

/// Number of shots (out of M) in which all qubits in `subset` read 0.
/// Bernoulli sampling against the exact marginal keeps the draw binomial and
/// reproducible under the seed.
inline long long sample_zero_count(const PureState& state, const std::vector<int>& subset,
                                   long long shots, std::uint64_t seed) {
    if (shots < 1)
        throw std::invalid_argument("shot count must be at least 1");
    const double p = prob_zero_on(state, subset);
    Rng rng(seed);
    long long count = 0;
    for (long long s = 0; s < shots; ++s)
        if (rng.uniform() < p) ++count;
    return count;
}

} // namespace memoqcd
