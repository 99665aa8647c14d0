#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "memoqcd/circuit.hpp"
#include "memoqcd/rng.hpp"
#include "memoqcd/sim.hpp"

namespace memoqcd {

/// Target kernel definition: Gaussian bandwidth, the training interval the
/// fit must cover, and how many sample pairs to draw from it.
struct KernelSpec {
    double gamma = 0.1;
    double a = -3.0;
    double b = 3.0;
    int n_pairs = 10000;

    void check_valid() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("bandwidth must be positive");
        if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
        if (n_pairs < 1) throw std::invalid_argument("need at least one pair");
    }
};

/// Frozen set of scalar training pairs, stored column-wise for vectorized
/// evaluation.
struct PairSet {
    std::vector<double> x;
    std::vector<double> xp;

    std::size_t size() const { return x.size(); }
};

/// exp(-gamma * sum_i (x_i - x'_i)^2): the squared-overlap target the
/// circuit kernel is fitted against. Factorizes over coordinates.
inline double gaussian_kernel_sq(const std::vector<double>& x, const std::vector<double>& xp,
                                 double gamma) {
    if (x.size() != xp.size())
        throw std::invalid_argument("kernel arguments must have equal dimension");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - xp[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

inline double gaussian_kernel_sq(double x, double xp, double gamma) {
    double d = x - xp;
    return std::exp(-gamma * d * d);
}

/// Draw n_pairs i.i.d. (x, x') pairs with both coordinates uniform on [a,b].
inline PairSet sample_pairs(const KernelSpec& spec, std::uint64_t seed) {
    spec.check_valid();
    Rng rng(seed);
    PairSet out;
    out.x.resize(static_cast<std::size_t>(spec.n_pairs));
    out.xp.resize(static_cast<std::size_t>(spec.n_pairs));
    for (int i = 0; i < spec.n_pairs; ++i) {
        out.x[static_cast<std::size_t>(i)] = rng.uniform(spec.a, spec.b);
        out.xp[static_cast<std::size_t>(i)] = rng.uniform(spec.a, spec.b);
    }
    return out;
}

/// |<psi(x)|psi(x')>|^2 from two statevector runs of a single-feature
/// circuit.
inline double circuit_kernel_sq(const ParamCircuit& circuit, const std::vector<double>& params,
                                double x, double xp) {
    PureState sx = run_circuit(circuit, params, x);
    PureState sxp = run_circuit(circuit, params, xp);
    cdouble o{0.0, 0.0};
    for (std::size_t i = 0; i < sx.dim(); ++i)
        o += std::conj(sx.amplitudes[i]) * sxp.amplitudes[i];
    return std::clamp(std::norm(o), 0.0, 1.0);
}

/// Feature-map state for a d-dimensional point: the tensor product of the
/// single-feature circuit state over coordinates, features stacked in order
/// (feature 0 on the most significant qubit block).
inline PureState qfm_state(const ParamCircuit& circuit, const std::vector<double>& params,
                           const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("feature vector must be nonempty");
    const int d = static_cast<int>(x.size());
    const int total_qubits = d * circuit.n_qubits;
    if (total_qubits > kMaxQubits)
        throw std::length_error("feature-map state would exceed the supported qubit bound");

    PureState out = run_circuit(circuit, params, x[0]);
    for (int j = 1; j < d; ++j) {
        PureState factor = run_circuit(circuit, params, x[static_cast<std::size_t>(j)]);
        PureState next;
        next.n_qubits = out.n_qubits + factor.n_qubits;
        next.amplitudes.resize(out.dim() * factor.dim());
        for (std::size_t i = 0; i < out.dim(); ++i)
            for (std::size_t k = 0; k < factor.dim(); ++k)
                next.amplitudes[i * factor.dim() + k] = out.amplitudes[i] * factor.amplitudes[k];
        out = std::move(next);
    }
    return out;
}

} // namespace memoqcd
