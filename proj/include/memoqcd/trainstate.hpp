#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "memoqcd/circuit.hpp"
#include "memoqcd/data.hpp"
#include "memoqcd/hea.hpp"
#include "memoqcd/kernel.hpp"
#include "memoqcd/rng.hpp"
#include "memoqcd/sim.hpp"

namespace memoqcd {

/// Guard added inside the log to keep the objective finite when every
/// projection vanishes.
inline constexpr double kLLEpsilon = 1e-12;

/// Largest density-matrix register exact_rho_train will materialize.
inline constexpr int kMaxRhoQubits = 10;

enum class LLObjective {
    log_of_sum,   // log(sum_i p_i + eps)
    sum_of_logs,  // sum_i log(p_i + eps)
};

struct TrainReport {
    std::vector<double> params;
    std::vector<double> ll_trace;  // epochs + 1 entries, initial value first
    int epochs = 0;
    double learning_rate = 0.0;
};

/// (1/N) sum_i |psi(x_i)><psi(x_i)| over the d*n_x data qubits.
inline MixedState exact_rho_train(const ParamCircuit& qfm, const std::vector<double>& qfm_params,
                                  const Dataset& dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("dataset must be nonempty");
    const int k = dataset.d * qfm.n_qubits;
    if (k > kMaxRhoQubits)
        throw std::length_error("density matrix would exceed the supported qubit bound");
    MixedState rho;
    rho.n_qubits = k;
    const std::size_t dim = rho.dim();
    rho.matrix.assign(dim * dim, cdouble{0.0, 0.0});
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        PureState psi = qfm_state(qfm, qfm_params, dataset.point_vec(i));
        for (std::size_t r = 0; r < dim; ++r) {
            const cdouble pr = psi.amplitudes[r] * inv_n;
            if (pr == cdouble{0.0, 0.0}) continue;
            for (std::size_t c = 0; c < dim; ++c)
                rho.matrix[r * dim + c] += pr * std::conj(psi.amplitudes[c]);
        }
    }
    return rho;
}

/// State prepared by the training ansatz on data + auxiliary qubits.
inline PureState prepared_training_state(const HEALayout& layout,
                                         const std::vector<double>& hea_params) {
    layout.check_valid();
    return run_circuit(build_hea(layout.total_qubits(), layout.n_layers), hea_params);
}

/// Reduced state of the trained ansatz over the data qubits.
inline MixedState hea_rho(const HEALayout& layout, const std::vector<double>& hea_params) {
    PureState full = prepared_training_state(layout, hea_params);
    std::vector<int> keep(static_cast<std::size_t>(layout.data_qubits()));
    std::iota(keep.begin(), keep.end(), 0);
    return partial_trace(full, keep);
}

namespace detail {

inline void apply_gate_adjoint_inplace(PureState& state, const Gate& gate, double angle) {
    // H and CNOT are involutions; rotations invert by negating the angle.
    apply_gate_inplace(state, gate, gate.is_rotation() ? -angle : 0.0);
}

/// <lam| P |phi> for the Pauli axis of a rotation kind on `target`.
inline cdouble pauli_bracket_state(GateKind kind, int target, const PureState& lam,
                                   const PureState& phi) {
    cdouble t{0.0, 0.0};
    detail::for_target_pairs(lam.n_qubits, target, [&](std::size_t i0, std::size_t i1) {
        const cdouble l0 = lam.amplitudes[i0], l1 = lam.amplitudes[i1];
        const cdouble p0 = phi.amplitudes[i0], p1 = phi.amplitudes[i1];
        switch (kind) {
            case GateKind::RX: t += std::conj(l0) * p1 + std::conj(l1) * p0; break;
            case GateKind::RY:
                t += cdouble{0.0, 1.0} * (std::conj(l1) * p0 - std::conj(l0) * p1);
                break;
            default: t += std::conj(l0) * p0 - std::conj(l1) * p1; break;
        }
    });
    return t;
}

} // namespace detail

/// Log-likelihood objective of the training-state circuit with an adjoint
/// gradient: S_w(theta) = sum_i w_i <psi_i| Tr_a(U|0><0|U^dag) |psi_i> is
/// differentiated as the expectation of the fixed observable
/// (sum_i w_i |psi_i><psi_i|) (x) I_a in the prepared full state.
class LogLikelihoodObjective {
  public:
    LogLikelihoodObjective(const HEALayout& layout, const ParamCircuit& qfm,
                           const std::vector<double>& qfm_params, const Dataset& dataset,
                           LLObjective objective = LLObjective::log_of_sum)
        : layout_(layout), objective_(objective) {
        layout_.check_valid();
        if (dataset.size() == 0) throw std::invalid_argument("dataset must be nonempty");
        if (qfm.n_qubits != layout_.n_x)
            throw std::invalid_argument("feature-map qubit count does not match the layout");
        if (dataset.d != layout_.d)
            throw std::invalid_argument("dataset dimension does not match the layout");
        hea_ = build_hea(layout_.total_qubits(), layout_.n_layers);
        m_ = std::size_t{1} << layout_.data_qubits();
        a_dim_ = std::size_t{1} << layout_.n_a;

        const std::size_t n = dataset.size();
        psi_conj_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < n; ++i) {
            PureState psi = qfm_state(qfm, qfm_params, dataset.point_vec(i));
            for (std::size_t c = 0; c < m_; ++c)
                psi_conj_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    std::conj(psi.amplitudes[c]);
        }
    }

    const ParamCircuit& circuit() const { return hea_; }
    int n_params() const { return hea_.n_params; }

    double value(const std::vector<double>& params) const {
        PureState phi = run_circuit(hea_, params);
        Eigen::MatrixXcd g = overlaps(phi);
        return log_likelihood_of(projections(g));
    }

    double value_and_grad(const std::vector<double>& params, std::vector<double>& grad) const {
        PureState phi = run_circuit(hea_, params);
        Eigen::MatrixXcd g = overlaps(phi);
        Eigen::VectorXd proj = projections(g);

        const double s = proj.sum();
        Eigen::VectorXd w(proj.size());
        if (objective_ == LLObjective::log_of_sum)
            w.setConstant(1.0 / (s + kLLEpsilon));
        else
            for (Eigen::Index i = 0; i < proj.size(); ++i) w(i) = 1.0 / (proj(i) + kLLEpsilon);

        // lam = (sum_i w_i |psi_i><psi_i| (x) I_a) |phi>
        Eigen::MatrixXcd lam_mat =
            psi_conj_.adjoint() * (w.asDiagonal() * g);  // m x a_dim, data-major
        PureState lam;
        lam.n_qubits = phi.n_qubits;
        lam.amplitudes.resize(phi.dim());
        for (std::size_t alpha = 0; alpha < m_; ++alpha)
            for (std::size_t beta = 0; beta < a_dim_; ++beta)
                lam.amplitudes[alpha * a_dim_ + beta] =
                    lam_mat(static_cast<Eigen::Index>(alpha), static_cast<Eigen::Index>(beta));

        grad.assign(static_cast<std::size_t>(hea_.n_params), 0.0);
        for (auto it = hea_.gates.rbegin(); it != hea_.gates.rend(); ++it) {
            const Gate& gate = *it;
            const double angle =
                gate.is_rotation() ? params[static_cast<std::size_t>(gate.param_slot)] : 0.0;
            if (gate.is_rotation()) {
                cdouble t = detail::pauli_bracket_state(gate.kind, gate.target, lam, phi);
                grad[static_cast<std::size_t>(gate.param_slot)] += t.imag();
            }
            detail::apply_gate_adjoint_inplace(phi, gate, angle);
            detail::apply_gate_adjoint_inplace(lam, gate, angle);
        }
        return log_likelihood_of(proj);
    }

  private:
    Eigen::MatrixXcd overlaps(const PureState& phi) const {
        Eigen::Map<const Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            phi_mat(phi.amplitudes.data(), static_cast<Eigen::Index>(m_),
                    static_cast<Eigen::Index>(a_dim_));
        return psi_conj_ * phi_mat;  // (i, beta) = <psi_i (x) beta | phi>
    }

    Eigen::VectorXd projections(const Eigen::MatrixXcd& g) const {
        return g.cwiseAbs2().rowwise().sum();
    }

    double log_likelihood_of(const Eigen::VectorXd& proj) const {
        if (objective_ == LLObjective::log_of_sum) return std::log(proj.sum() + kLLEpsilon);
        double ll = 0.0;
        for (Eigen::Index i = 0; i < proj.size(); ++i) ll += std::log(proj(i) + kLLEpsilon);
        return ll;
    }

    HEALayout layout_;
    LLObjective objective_;
    ParamCircuit hea_;
    std::size_t m_ = 0, a_dim_ = 0;
    Eigen::MatrixXcd psi_conj_;  // (i, alpha) = conj(psi(x_i)[alpha])
};

/// Log of the summed data projections onto the reduced training state (or the
/// per-point sum of logs under the alternative objective).
inline double log_likelihood(const HEALayout& layout, const std::vector<double>& hea_params,
                             const ParamCircuit& qfm, const std::vector<double>& qfm_params,
                             const Dataset& dataset,
                             LLObjective objective = LLObjective::log_of_sum) {
    return LogLikelihoodObjective(layout, qfm, qfm_params, dataset, objective).value(hea_params);
}

/// Gradient ascent on the log-likelihood from a seeded uniform [0, 2pi) start.
inline TrainReport train_state_circuit(const HEALayout& layout, const ParamCircuit& qfm,
                                       const std::vector<double>& qfm_params,
                                       const Dataset& dataset, int epochs = 5000,
                                       double learning_rate = 0.4, std::uint64_t seed = 0,
                                       LLObjective objective = LLObjective::log_of_sum) {
    if (epochs < 0) throw std::invalid_argument("epoch count must be nonnegative");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be positive and finite");
    LogLikelihoodObjective objective_fn(layout, qfm, qfm_params, dataset, objective);

    Rng rng(derive_seed(seed, 1));
    std::vector<double> params(static_cast<std::size_t>(objective_fn.n_params()));
    for (double& p : params) p = rng.uniform(0.0, 6.28318530717958647692);

    TrainReport report;
    report.epochs = epochs;
    report.learning_rate = learning_rate;
    report.ll_trace.reserve(static_cast<std::size_t>(epochs) + 1);

    std::vector<double> grad;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double ll = objective_fn.value_and_grad(params, grad);
        if (!std::isfinite(ll)) throw std::runtime_error("log-likelihood became non-finite");
        report.ll_trace.push_back(ll);
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] += learning_rate * grad[i];
    }
    double final_ll = objective_fn.value(params);
    if (!std::isfinite(final_ll)) throw std::runtime_error("log-likelihood became non-finite");
    report.ll_trace.push_back(final_ll);
    report.params = std::move(params);
    return report;
}

/// Unitary completion of a purification of rho: the first column prepares
/// |Phi> = sum_{alpha beta} V_{alpha beta} sqrt(lambda_beta) |alpha beta>
/// (data qubits leading), and the remaining columns are Gram-Schmidt
/// completions of seeded random vectors.
struct Purification {
    int n_data_qubits = 0;
    int n_ancilla = 0;
    std::vector<cdouble> unitary;  // row-major dim() x dim()

    std::size_t dim() const { return std::size_t{1} << (n_data_qubits + n_ancilla); }

    PureState prepared_state() const {
        PureState s;
        s.n_qubits = n_data_qubits + n_ancilla;
        s.amplitudes.resize(dim());
        for (std::size_t r = 0; r < dim(); ++r) s.amplitudes[r] = unitary[r * dim()];
        return s;
    }
};

inline Purification purification_unitary(const MixedState& rho,
                                         std::uint64_t seed = 0x70757269667921ULL) {
    const std::size_t m = rho.dim();
    using RowMat = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> rho_map(rho.matrix.data(), static_cast<Eigen::Index>(m),
                                     static_cast<Eigen::Index>(m));

    if ((rho_map - rho_map.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(rho.trace_real() - 1.0) > 1e-6)
        throw std::invalid_argument("density matrix trace is not 1");

    Eigen::MatrixXcd herm = 0.5 * (rho_map + rho_map.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const Eigen::VectorXd& lambda = es.eigenvalues();  // ascending
    if (lambda(0) < -1e-10)
        throw std::invalid_argument("density matrix is not positive semidefinite");

    constexpr double kRankCutoff = 1e-12;
    int rank = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (lambda(i) > kRankCutoff) ++rank;
    if (rank == 0) throw std::invalid_argument("density matrix has no spectral mass");

    int n_ancilla = 0;
    while ((1 << n_ancilla) < rank) ++n_ancilla;

    Purification out;
    out.n_data_qubits = rho.n_qubits;
    out.n_ancilla = n_ancilla;
    const std::size_t a_dim = std::size_t{1} << n_ancilla;
    const std::size_t dim = m * a_dim;

    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
    for (int j = 0; j < rank; ++j) {
        const Eigen::Index src = static_cast<Eigen::Index>(m) - 1 - j;  // descending eigenvalues
        const double root = std::sqrt(std::max(lambda(src), 0.0));
        for (std::size_t alpha = 0; alpha < m; ++alpha)
            u(static_cast<Eigen::Index>(alpha * a_dim + static_cast<std::size_t>(j)), 0) +=
                es.eigenvectors()(static_cast<Eigen::Index>(alpha), src) * root;
    }

    Rng rng(seed);
    for (std::size_t col = 1; col < dim; ++col) {
        Eigen::VectorXcd v(static_cast<Eigen::Index>(dim));
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (Eigen::Index r = 0; r < v.size(); ++r) v(r) = cdouble{rng.normal(), rng.normal()};
            for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize for 1e-10-grade unitarity
                for (std::size_t k = 0; k < col; ++k)
                    v -= u.col(static_cast<Eigen::Index>(k)).dot(v) *
                         u.col(static_cast<Eigen::Index>(k));
            double norm = v.norm();
            if (norm > 1e-6) {
                v /= norm;
                break;
            }
            if (attempt == 99) throw std::runtime_error("Gram-Schmidt completion failed");
        }
        u.col(static_cast<Eigen::Index>(col)) = v;
    }

    out.unitary.resize(dim * dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            out.unitary[r * dim + c] =
                u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return out;
}

} // namespace memoqcd
