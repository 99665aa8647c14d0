#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "memoqcd/circuit.hpp"
#include "memoqcd/kernel.hpp"
#include "memoqcd/vecmath.hpp"

namespace memoqcd {

/// Mean squared error between the Gaussian target kernel and a circuit's
/// squared-overlap kernel over a frozen pair set, with an analytic gradient.
///
/// States for a block of pairs are held column-wise (one row per basis
/// amplitude component, one column per pair), so gate application and the
/// adjoint-style backward sweeps run as flat loops over the block that the
/// compiler vectorizes. The gradient costs a small constant times the
/// forward evaluation, independent of the number of parameters, which is
/// what makes per-individual gradient refinement inside the evolutionary
/// search affordable.
///
/// Not thread-safe: each instance carries reusable scratch buffers, so use
/// one instance per thread.
class KernelMseObjective {
public:
    KernelMseObjective(const ParamCircuit& circuit, const PairSet& pairs, double gamma,
                       int block = 64)
        : n_qubits_(circuit.n_qubits),
          dim_(1 << circuit.n_qubits),
          n_params_(circuit.n_params),
          block_(block),
          n_pairs_(pairs.size()),
          x_(pairs.x),
          xp_(pairs.xp) {
        circuit.check_valid();
        if (n_pairs_ == 0) throw std::invalid_argument("pair set is empty");
        if (block_ < 1) throw std::invalid_argument("block size must be positive");

        // Pre-resolve the gate list, dropping identities.
        int rot_index = 0;
        for (const Gate& g : circuit.gates) {
            if (g.kind == GateKind::IDENTITY) continue;
            Op op;
            op.kind = g.kind;
            op.tbit = std::size_t{1} << (n_qubits_ - 1 - g.target);
            op.cbit = g.kind == GateKind::CNOT
                          ? std::size_t{1} << (n_qubits_ - 1 - g.control)
                          : 0;
            op.slot = g.param_slot;
            op.scaled = g.data_scaled;
            op.rot = g.is_rotation() ? rot_index++ : -1;
            ops_.push_back(op);
        }
        n_rot_ = rot_index;

        g_.resize(n_pairs_);
        for (std::size_t p = 0; p < n_pairs_; ++p)
            g_[p] = gaussian_kernel_sq(x_[p], xp_[p], gamma);

        const std::size_t rows = static_cast<std::size_t>(dim_) * static_cast<std::size_t>(block_);
        sa_re_.resize(rows); sa_im_.resize(rows);
        sb_re_.resize(rows); sb_im_.resize(rows);
        lam_re_.resize(rows); lam_im_.resize(rows);
        phi_re_.resize(rows); phi_im_.resize(rows);
        const std::size_t stash = static_cast<std::size_t>(std::max(n_rot_, 1)) * 2 *
                                  static_cast<std::size_t>(block_);
        stash_c_.resize(stash); stash_s_.resize(stash);
        half_.resize(static_cast<std::size_t>(block_));
        o_re_.resize(static_cast<std::size_t>(block_));
        o_im_.resize(static_cast<std::size_t>(block_));
        w_.resize(static_cast<std::size_t>(block_));
        t_re_.resize(static_cast<std::size_t>(block_));
        t_im_.resize(static_cast<std::size_t>(block_));
    }

    int n_params() const { return n_params_; }
    std::size_t n_pairs() const { return n_pairs_; }

    double value(const std::vector<double>& params) {
        return run(params, nullptr);
    }

    /// Returns the MSE and writes its gradient with respect to the circuit
    /// parameters into `grad`.
    double value_and_grad(const std::vector<double>& params, std::vector<double>& grad) {
        grad.assign(static_cast<std::size_t>(n_params_), 0.0);
        return run(params, &grad);
    }

private:
    struct Op {
        GateKind kind;
        std::size_t tbit, cbit;
        int slot;
        bool scaled;
        int rot;
    };

    int n_qubits_, dim_, n_params_, block_;
    int n_rot_ = 0;
    std::size_t n_pairs_;
    std::vector<Op> ops_;
    std::vector<double> x_, xp_, g_;

    std::vector<double> sa_re_, sa_im_, sb_re_, sb_im_;
    std::vector<double> lam_re_, lam_im_, phi_re_, phi_im_;
    std::vector<double> stash_c_, stash_s_;
    std::vector<double> half_, o_re_, o_im_, w_, t_re_, t_im_;

    double* row(std::vector<double>& v, std::size_t c) { return v.data() + c * static_cast<std::size_t>(block_); }
    double* stash(std::vector<double>& v, int rot, int side) {
        return v.data() + (static_cast<std::size_t>(rot) * 2 + static_cast<std::size_t>(side)) *
                              static_cast<std::size_t>(block_);
    }

    static void apply_h(double* re, double* im, std::size_t dim, std::size_t tbit,
                        std::size_t block, int nb) {
        const double is2 = 0.70710678118654752440;
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                double* __restrict__ r0 = re + (base + low) * block;
                double* __restrict__ i0 = im + (base + low) * block;
                double* __restrict__ r1 = re + (base + low + tbit) * block;
                double* __restrict__ i1 = im + (base + low + tbit) * block;
                for (int j = 0; j < nb; ++j) {
                    double ar = r0[j], ai = i0[j], br = r1[j], bi = i1[j];
                    r0[j] = (ar + br) * is2; i0[j] = (ai + bi) * is2;
                    r1[j] = (ar - br) * is2; i1[j] = (ai - bi) * is2;
                }
            }
    }

    static void apply_cnot(double* re, double* im, std::size_t dim, std::size_t cbit,
                           std::size_t tbit, std::size_t block, int nb) {
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                std::size_t c0 = base + low;
                if (!(c0 & cbit)) continue;
                double* __restrict__ r0 = re + c0 * block;
                double* __restrict__ i0 = im + c0 * block;
                double* __restrict__ r1 = re + (c0 + tbit) * block;
                double* __restrict__ i1 = im + (c0 + tbit) * block;
                for (int j = 0; j < nb; ++j) {
                    double tr = r0[j]; r0[j] = r1[j]; r1[j] = tr;
                    double ti = i0[j]; i0[j] = i1[j]; i1[j] = ti;
                }
            }
    }

    // The row pointers in the rotation kernels address pairwise-disjoint
    // slices (offsets differ by at least `block` >= nb), so restrict
    // qualification is sound and lets the inner loops vectorize.  Each kind
    // gets its own loop nest: a switch inside the nest defeats the
    // vectorizer.
    static void apply_rx(double* re, double* im, std::size_t dim, std::size_t tbit,
                         const double* __restrict__ c, const double* __restrict__ s,
                         double sign, std::size_t block, int nb) {
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                double* __restrict__ r0 = re + (base + low) * block;
                double* __restrict__ i0 = im + (base + low) * block;
                double* __restrict__ r1 = re + (base + low + tbit) * block;
                double* __restrict__ i1 = im + (base + low + tbit) * block;
                for (int j = 0; j < nb; ++j) {
                    double cj = c[j], sj = sign * s[j];
                    double ar = r0[j], ai = i0[j], br = r1[j], bi = i1[j];
                    r0[j] = cj * ar + sj * bi; i0[j] = cj * ai - sj * br;
                    r1[j] = cj * br + sj * ai; i1[j] = cj * bi - sj * ar;
                }
            }
    }

    static void apply_ry(double* re, double* im, std::size_t dim, std::size_t tbit,
                         const double* __restrict__ c, const double* __restrict__ s,
                         double sign, std::size_t block, int nb) {
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                double* __restrict__ r0 = re + (base + low) * block;
                double* __restrict__ i0 = im + (base + low) * block;
                double* __restrict__ r1 = re + (base + low + tbit) * block;
                double* __restrict__ i1 = im + (base + low + tbit) * block;
                for (int j = 0; j < nb; ++j) {
                    double cj = c[j], sj = sign * s[j];
                    double ar = r0[j], ai = i0[j], br = r1[j], bi = i1[j];
                    r0[j] = cj * ar - sj * br; i0[j] = cj * ai - sj * bi;
                    r1[j] = sj * ar + cj * br; i1[j] = sj * ai + cj * bi;
                }
            }
    }

    static void apply_rz(double* re, double* im, std::size_t dim, std::size_t tbit,
                         const double* __restrict__ c, const double* __restrict__ s,
                         double sign, std::size_t block, int nb) {
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                double* __restrict__ r0 = re + (base + low) * block;
                double* __restrict__ i0 = im + (base + low) * block;
                double* __restrict__ r1 = re + (base + low + tbit) * block;
                double* __restrict__ i1 = im + (base + low + tbit) * block;
                for (int j = 0; j < nb; ++j) {
                    double cj = c[j], sj = sign * s[j];
                    double ar = r0[j], ai = i0[j], br = r1[j], bi = i1[j];
                    r0[j] = cj * ar + sj * ai; i0[j] = cj * ai - sj * ar;
                    r1[j] = cj * br - sj * bi; i1[j] = cj * bi + sj * br;
                }
            }
    }

    /// sign = +1 applies the rotation, -1 its inverse (negated angle).
    static void apply_rot(GateKind kind, double* re, double* im, std::size_t dim,
                          std::size_t tbit, const double* c, const double* s, double sign,
                          std::size_t block, int nb) {
        switch (kind) {
            case GateKind::RX: apply_rx(re, im, dim, tbit, c, s, sign, block, nb); break;
            case GateKind::RY: apply_ry(re, im, dim, tbit, c, s, sign, block, nb); break;
            default: apply_rz(re, im, dim, tbit, c, s, sign, block, nb); break;
        }
    }

    /// t_j = <lam | P | phi> summed over components, with P the Pauli axis of
    /// the rotation kind on the op's target qubit.
    struct BracketRows {
        const double* __restrict__ l0r;
        const double* __restrict__ l0i;
        const double* __restrict__ l1r;
        const double* __restrict__ l1i;
        const double* __restrict__ p0r;
        const double* __restrict__ p0i;
        const double* __restrict__ p1r;
        const double* __restrict__ p1i;
    };

    BracketRows bracket_rows(std::size_t c0, std::size_t tbit) const {
        const std::size_t block = static_cast<std::size_t>(block_);
        return {lam_re_.data() + c0 * block,          lam_im_.data() + c0 * block,
                lam_re_.data() + (c0 + tbit) * block, lam_im_.data() + (c0 + tbit) * block,
                phi_re_.data() + c0 * block,          phi_im_.data() + c0 * block,
                phi_re_.data() + (c0 + tbit) * block, phi_im_.data() + (c0 + tbit) * block};
    }

    // t += conj(l0) p1 + conj(l1) p0
    void bracket_x(std::size_t tbit, int nb) {
        const std::size_t dim = static_cast<std::size_t>(dim_);
        double* __restrict__ tr = t_re_.data();
        double* __restrict__ ti = t_im_.data();
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                const BracketRows r = bracket_rows(base + low, tbit);
                for (int j = 0; j < nb; ++j) {
                    tr[j] += r.l0r[j] * r.p1r[j] + r.l0i[j] * r.p1i[j] +
                             r.l1r[j] * r.p0r[j] + r.l1i[j] * r.p0i[j];
                    ti[j] += r.l0r[j] * r.p1i[j] - r.l0i[j] * r.p1r[j] +
                             r.l1r[j] * r.p0i[j] - r.l1i[j] * r.p0r[j];
                }
            }
    }

    // t += i*(conj(l1) p0 - conj(l0) p1)
    void bracket_y(std::size_t tbit, int nb) {
        const std::size_t dim = static_cast<std::size_t>(dim_);
        double* __restrict__ tr = t_re_.data();
        double* __restrict__ ti = t_im_.data();
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                const BracketRows r = bracket_rows(base + low, tbit);
                for (int j = 0; j < nb; ++j) {
                    double ur = r.l1r[j] * r.p0r[j] + r.l1i[j] * r.p0i[j] -
                                (r.l0r[j] * r.p1r[j] + r.l0i[j] * r.p1i[j]);
                    double ui = r.l1r[j] * r.p0i[j] - r.l1i[j] * r.p0r[j] -
                                (r.l0r[j] * r.p1i[j] - r.l0i[j] * r.p1r[j]);
                    tr[j] += -ui;
                    ti[j] += ur;
                }
            }
    }

    // t += conj(l0) p0 - conj(l1) p1
    void bracket_z(std::size_t tbit, int nb) {
        const std::size_t dim = static_cast<std::size_t>(dim_);
        double* __restrict__ tr = t_re_.data();
        double* __restrict__ ti = t_im_.data();
        for (std::size_t base = 0; base < dim; base += 2 * tbit)
            for (std::size_t low = 0; low < tbit; ++low) {
                const BracketRows r = bracket_rows(base + low, tbit);
                for (int j = 0; j < nb; ++j) {
                    tr[j] += r.l0r[j] * r.p0r[j] + r.l0i[j] * r.p0i[j] -
                             (r.l1r[j] * r.p1r[j] + r.l1i[j] * r.p1i[j]);
                    ti[j] += r.l0r[j] * r.p0i[j] - r.l0i[j] * r.p0r[j] -
                             (r.l1r[j] * r.p1i[j] - r.l1i[j] * r.p1r[j]);
                }
            }
    }

    void pauli_bracket(const Op& op, int nb) {
        std::fill(t_re_.begin(), t_re_.begin() + nb, 0.0);
        std::fill(t_im_.begin(), t_im_.begin() + nb, 0.0);
        switch (op.kind) {
            case GateKind::RX: bracket_x(op.tbit, nb); break;
            case GateKind::RY: bracket_y(op.tbit, nb); break;
            default: bracket_z(op.tbit, nb); break;
        }
    }

    /// Fill the cos/sin stash for one rotation op on one side (0 = x side,
    /// 1 = x' side) and block offset p0..p0+nb.
    void fill_trig(const Op& op, const std::vector<double>& params, int side, std::size_t p0,
                   int nb) {
        double* c = stash(stash_c_, op.rot, side);
        double* s = stash(stash_s_, op.rot, side);
        const double theta = params[static_cast<std::size_t>(op.slot)];
        if (op.scaled) {
            const double* feat = (side == 0 ? x_.data() : xp_.data()) + p0;
            const double h = 0.5 * theta;
            for (int j = 0; j < nb; ++j) half_[static_cast<std::size_t>(j)] = h * feat[j];
            sincos_block(half_.data(), s, c, static_cast<std::size_t>(nb));
        } else {
            const double cv = std::cos(0.5 * theta), sv = std::sin(0.5 * theta);
            std::fill(c, c + nb, cv);
            std::fill(s, s + nb, sv);
        }
    }

    void apply_op(const Op& op, double* re, double* im, const double* c, const double* s,
                  double sign, int nb) {
        const std::size_t dim = static_cast<std::size_t>(dim_);
        const std::size_t block = static_cast<std::size_t>(block_);
        switch (op.kind) {
            case GateKind::H: apply_h(re, im, dim, op.tbit, block, nb); break;
            case GateKind::CNOT: apply_cnot(re, im, dim, op.cbit, op.tbit, block, nb); break;
            default: apply_rot(op.kind, re, im, dim, op.tbit, c, s, sign, block, nb); break;
        }
    }

    double run(const std::vector<double>& params, std::vector<double>* grad) {
        if (static_cast<int>(params.size()) != n_params_)
            throw std::invalid_argument("parameter vector length does not match circuit");
        const std::size_t rows = static_cast<std::size_t>(dim_) * static_cast<std::size_t>(block_);
        double mse = 0.0;

        for (std::size_t p0 = 0; p0 < n_pairs_; p0 += static_cast<std::size_t>(block_)) {
            const int nb = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(block_),
                                                                  n_pairs_ - p0));
            // |0...0> on both sides.
            std::fill(sa_re_.begin(), sa_re_.end(), 0.0);
            std::fill(sa_im_.begin(), sa_im_.end(), 0.0);
            std::fill(sb_re_.begin(), sb_re_.end(), 0.0);
            std::fill(sb_im_.begin(), sb_im_.end(), 0.0);
            std::fill(sa_re_.begin(), sa_re_.begin() + nb, 1.0);
            std::fill(sb_re_.begin(), sb_re_.begin() + nb, 1.0);

            // Forward: evolve state columns for x (side A) and x' (side B).
            for (const Op& op : ops_) {
                if (op.rot >= 0) {
                    fill_trig(op, params, 0, p0, nb);
                    fill_trig(op, params, 1, p0, nb);
                }
                apply_op(op, sa_re_.data(), sa_im_.data(), stash(stash_c_, std::max(op.rot, 0), 0),
                         stash(stash_s_, std::max(op.rot, 0), 0), 1.0, nb);
                apply_op(op, sb_re_.data(), sb_im_.data(), stash(stash_c_, std::max(op.rot, 0), 1),
                         stash(stash_s_, std::max(op.rot, 0), 1), 1.0, nb);
            }

            // Overlap o = <psi(x)|psi(x')> per column.
            std::fill(o_re_.begin(), o_re_.begin() + nb, 0.0);
            std::fill(o_im_.begin(), o_im_.begin() + nb, 0.0);
            double* __restrict__ our = o_re_.data();
            double* __restrict__ oui = o_im_.data();
            for (int c = 0; c < dim_; ++c) {
                const double* __restrict__ ar = row(sa_re_, static_cast<std::size_t>(c));
                const double* __restrict__ ai = row(sa_im_, static_cast<std::size_t>(c));
                const double* __restrict__ br = row(sb_re_, static_cast<std::size_t>(c));
                const double* __restrict__ bi = row(sb_im_, static_cast<std::size_t>(c));
                for (int j = 0; j < nb; ++j) {
                    our[j] += ar[j] * br[j] + ai[j] * bi[j];
                    oui[j] += ar[j] * bi[j] - ai[j] * br[j];
                }
            }

            double block_mse = 0.0;
            for (int j = 0; j < nb; ++j) {
                double f = o_re_[static_cast<std::size_t>(j)] * o_re_[static_cast<std::size_t>(j)] +
                           o_im_[static_cast<std::size_t>(j)] * o_im_[static_cast<std::size_t>(j)];
                f = std::clamp(f, 0.0, 1.0);
                double e = f - g_[p0 + static_cast<std::size_t>(j)];
                block_mse += e * e;
                w_[static_cast<std::size_t>(j)] = 2.0 * e;
            }
            mse += block_mse;

            if (grad && n_rot_ > 0) {
                // Backward sweep 1: derivatives through the x'-side states.
                std::memcpy(lam_re_.data(), sa_re_.data(), rows * sizeof(double));
                std::memcpy(lam_im_.data(), sa_im_.data(), rows * sizeof(double));
                std::memcpy(phi_re_.data(), sb_re_.data(), rows * sizeof(double));
                std::memcpy(phi_im_.data(), sb_im_.data(), rows * sizeof(double));
                sweep(params, grad, /*side=*/1, p0, nb);

                // Backward sweep 2: derivatives through the x-side states.
                std::memcpy(lam_re_.data(), sb_re_.data(), rows * sizeof(double));
                std::memcpy(lam_im_.data(), sb_im_.data(), rows * sizeof(double));
                std::memcpy(phi_re_.data(), sa_re_.data(), rows * sizeof(double));
                std::memcpy(phi_im_.data(), sa_im_.data(), rows * sizeof(double));
                sweep(params, grad, /*side=*/0, p0, nb);
            }
        }

        mse /= static_cast<double>(n_pairs_);
        if (grad)
            for (double& gk : *grad) gk /= static_cast<double>(n_pairs_);
        return mse;
    }

    /// Unwind the circuit on (lam, phi), accumulating dMSE/dtheta for the
    /// rotation occurrences on one side of the overlap. For side 1 (x'),
    /// dF/da = Im(conj(o) t); for side 0 (x), dF/da = Im(o t); both scale by
    /// the side's feature value for data-scaled gates.
    void sweep(const std::vector<double>& params, std::vector<double>* grad, int side,
               std::size_t p0, int nb) {
        (void)params;
        for (std::size_t k = ops_.size(); k-- > 0;) {
            const Op& op = ops_[k];
            if (op.rot >= 0) {
                pauli_bracket(op, nb);
                const double* feat = (side == 0 ? x_.data() : xp_.data()) + p0;
                double acc = 0.0;
                if (side == 1) {
                    for (int j = 0; j < nb; ++j) {
                        double im = o_re_[static_cast<std::size_t>(j)] * t_im_[static_cast<std::size_t>(j)] -
                                    o_im_[static_cast<std::size_t>(j)] * t_re_[static_cast<std::size_t>(j)];
                        double f = op.scaled ? feat[j] : 1.0;
                        acc += w_[static_cast<std::size_t>(j)] * f * im;
                    }
                } else {
                    for (int j = 0; j < nb; ++j) {
                        double im = o_re_[static_cast<std::size_t>(j)] * t_im_[static_cast<std::size_t>(j)] +
                                    o_im_[static_cast<std::size_t>(j)] * t_re_[static_cast<std::size_t>(j)];
                        double f = op.scaled ? feat[j] : 1.0;
                        acc += w_[static_cast<std::size_t>(j)] * f * im;
                    }
                }
                (*grad)[static_cast<std::size_t>(op.slot)] += acc;
            }
            const double* c = stash(stash_c_, std::max(op.rot, 0), side);
            const double* s = stash(stash_s_, std::max(op.rot, 0), side);
            apply_op(op, phi_re_.data(), phi_im_.data(), c, s, -1.0, nb);
            apply_op(op, lam_re_.data(), lam_im_.data(), c, s, -1.0, nb);
        }
    }
};

/// Mean over pairs of (gaussian_kernel_sq - circuit_kernel_sq)^2, evaluated
/// block-wise in a fixed order so results are bit-stable.
inline double kernel_mse(const ParamCircuit& circuit, const std::vector<double>& params,
                         const PairSet& pairs, double gamma) {
    KernelMseObjective obj(circuit, pairs, gamma);
    return obj.value(params);
}

} // namespace memoqcd
