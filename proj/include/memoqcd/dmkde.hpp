#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memoqcd/codec.hpp"
#include "memoqcd/data.hpp"
#include "memoqcd/hea.hpp"
#include "memoqcd/kernel.hpp"
#include "memoqcd/optimize.hpp"
#include "memoqcd/parallel.hpp"
#include "memoqcd/sim.hpp"
#include "memoqcd/trainstate.hpp"

namespace memoqcd {

/// Assembled density-estimation model: a feature-map circuit found by the
/// search stage plus the variational training-state ansatz over it.
struct DMKDEModel {
    HEALayout layout;
    SearchMode qfm_mode = SearchMode::memetic;
    Chromosome qfm_chromosome;
    std::vector<double> qfm_params;
    std::vector<double> hea_params;  // empty until trained
    KernelSpec kernel;
    std::optional<double> norm_constant;
    std::optional<double> qfm_mse;
    std::optional<ScaleTransform> scale;
    std::uint64_t search_seed = 0;
    std::uint64_t train_seed = 0;

    bool trained() const { return !hea_params.empty(); }

    ParamCircuit qfm_circuit() const { return decode(qfm_chromosome, layout.n_x); }

    void check_valid() const {
        layout.check_valid();
        kernel.check_valid();
        ParamCircuit qfm = qfm_circuit();
        if (static_cast<int>(qfm_params.size()) != qfm.n_params)
            throw std::invalid_argument("feature-map parameter count does not match chromosome");
        const int hea_expected = 2 * layout.total_qubits() * (layout.n_layers + 1);
        if (!hea_params.empty() && static_cast<int>(hea_params.size()) != hea_expected)
            throw std::invalid_argument("ansatz parameter count does not match layout");
    }
};

/// Read-only context for repeated density evaluation: the reduced training
/// state plus the feature map that built it.
struct DensityEstimator {
    MixedState rho;
    ParamCircuit qfm;
    std::vector<double> qfm_params;
};

inline DensityEstimator make_estimator(const DMKDEModel& model) {
    model.check_valid();
    if (!model.trained()) throw std::invalid_argument("model has no trained ansatz parameters");
    return {hea_rho(model.layout, model.hea_params), model.qfm_circuit(), model.qfm_params};
}

/// Estimator whose training state is an explicitly given density matrix
/// (e.g. the exact mixture or a purification's reduced state).
inline DensityEstimator make_estimator_from_rho(MixedState rho, const ParamCircuit& qfm,
                                                const std::vector<double>& qfm_params) {
    return {std::move(rho), qfm, qfm_params};
}

/// <psi(x)| rho |psi(x)>, in [0,1].
inline double estimate_exact(const DensityEstimator& est, const std::vector<double>& x) {
    PureState psi = qfm_state(est.qfm, est.qfm_params, x);
    if (psi.n_qubits != est.rho.n_qubits)
        throw std::invalid_argument("point dimension does not match the training state");
    return projection_prob(est.rho, psi);
}

inline double estimate_exact(const DMKDEModel& model, const std::vector<double>& x) {
    return estimate_exact(make_estimator(model), x);
}

/// Apply the adjoint of the separable feature map to the leading d*n_x
/// qubits of a larger state (feature j acts on qubits [j*n_x, (j+1)*n_x)).
inline void apply_qfm_adjoint(PureState& state, const ParamCircuit& qfm,
                              const std::vector<double>& params, const std::vector<double>& x) {
    if (static_cast<int>(params.size()) != qfm.n_params)
        throw std::invalid_argument("parameter vector length does not match circuit");
    const int d = static_cast<int>(x.size());
    if (d * qfm.n_qubits > state.n_qubits)
        throw std::invalid_argument("feature blocks exceed the state's qubit count");
    for (int j = 0; j < d; ++j) {
        const int offset = j * qfm.n_qubits;
        for (auto it = qfm.gates.rbegin(); it != qfm.gates.rend(); ++it) {
            Gate g = *it;
            g.target += offset;
            if (g.control >= 0) g.control += offset;
            const double angle =
                g.is_rotation() ? resolve_angle(*it, params, x[static_cast<std::size_t>(j)]) : 0.0;
            apply_gate_inplace(state, g, g.is_rotation() ? -angle : 0.0);
        }
    }
}

/// Shot-based estimate from an explicit prepared training state on
/// n_data + n_ancilla qubits: applies the adjoint feature map at x, then
/// counts all-zeros outcomes on the data qubits over M shots (ancilla
/// outcomes ignored).
inline double estimate_shots_from_state(PureState full, int n_data_qubits,
                                        const ParamCircuit& qfm,
                                        const std::vector<double>& qfm_params,
                                        const std::vector<double>& x, long long shots,
                                        std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("shot count must be at least 1");
    if (static_cast<int>(x.size()) * qfm.n_qubits != n_data_qubits)
        throw std::invalid_argument("point dimension does not match the data register");
    apply_qfm_adjoint(full, qfm, qfm_params, x);
    std::vector<int> data(static_cast<std::size_t>(n_data_qubits));
    for (int q = 0; q < n_data_qubits; ++q) data[static_cast<std::size_t>(q)] = q;
    long long zeros = sample_zero_count(full, data, shots, seed);
    return static_cast<double>(zeros) / static_cast<double>(shots);
}

inline double estimate_shots(const DMKDEModel& model, const std::vector<double>& x,
                             long long shots, std::uint64_t seed) {
    model.check_valid();
    if (!model.trained()) throw std::invalid_argument("model has no trained ansatz parameters");
    return estimate_shots_from_state(prepared_training_state(model.layout, model.hea_params),
                                     model.layout.data_qubits(), model.qfm_circuit(),
                                     model.qfm_params, x, shots, seed);
}

/// (1/N) sum_i |<psi(x)|psi(x_i)>|^2 — the projected-mixture form the
/// variational model approximates.
inline double classical_dmkde(const ParamCircuit& qfm, const std::vector<double>& qfm_params,
                              const Dataset& dataset, const std::vector<double>& x) {
    if (dataset.size() == 0) throw std::invalid_argument("dataset must be nonempty");
    PureState star = qfm_state(qfm, qfm_params, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        PureState psi = qfm_state(qfm, qfm_params, dataset.point_vec(i));
        cdouble o{0.0, 0.0};
        for (std::size_t a = 0; a < star.dim(); ++a)
            o += std::conj(star.amplitudes[a]) * psi.amplitudes[a];
        acc += std::norm(o);
    }
    return acc / static_cast<double>(dataset.size());
}

struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int res = 0;

    double step() const { return (hi - lo) / res; }
    double center(int i) const { return lo + (i + 0.5) * step(); }
};

/// Density values at the cell centers of a rectangular grid, row-major with
/// the last axis fastest.
struct DensityGrid {
    std::vector<GridAxis> axes;
    std::vector<double> values;

    int dims() const { return static_cast<int>(axes.size()); }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (const GridAxis& a : axes) n *= static_cast<std::size_t>(a.res);
        return n;
    }

    double cell_volume() const {
        double v = 1.0;
        for (const GridAxis& a : axes) v *= a.step();
        return v;
    }

    std::vector<double> center(std::size_t flat) const {
        std::vector<double> x(axes.size());
        for (int j = dims() - 1; j >= 0; --j) {
            const GridAxis& ax = axes[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(j)] = ax.center(static_cast<int>(flat % ax.res));
            flat /= static_cast<std::size_t>(ax.res);
        }
        return x;
    }

    /// Piecewise-constant lookup at an arbitrary point inside the bounds.
    double value_at(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != dims())
            throw std::invalid_argument("point dimension does not match grid");
        std::size_t flat = 0;
        for (int j = 0; j < dims(); ++j) {
            const GridAxis& ax = axes[static_cast<std::size_t>(j)];
            int i = static_cast<int>(std::floor((x[static_cast<std::size_t>(j)] - ax.lo) / ax.step()));
            i = std::clamp(i, 0, ax.res - 1);
            flat = flat * static_cast<std::size_t>(ax.res) + static_cast<std::size_t>(i);
        }
        return values[flat];
    }
};

namespace detail {

inline void check_grid_spec(const std::vector<std::pair<double, double>>& bounds, int resolution) {
    if (bounds.empty()) throw std::invalid_argument("grid needs at least one axis");
    if (resolution < 1) throw std::invalid_argument("grid resolution must be positive");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi)) throw std::invalid_argument("grid bounds must satisfy lo < hi");
}

} // namespace detail

/// Evaluate the model's density at every cell center.  Shot mode draws M
/// shots per cell with a per-cell derived seed.  If the model has no stored
/// normalization constant it is computed from this grid's Riemann sum and
/// stored; the returned values are normalized with the stored constant.
inline DensityGrid density_grid(DMKDEModel& model,
                                const std::vector<std::pair<double, double>>& bounds,
                                int resolution, long long shots = 0, std::uint64_t seed = 0,
                                int threads = 1) {
    detail::check_grid_spec(bounds, resolution);
    if (static_cast<int>(bounds.size()) != model.layout.d)
        throw std::invalid_argument("grid dimension does not match the model layout");

    DensityGrid grid;
    for (const auto& [lo, hi] : bounds) grid.axes.push_back({lo, hi, resolution});
    grid.values.assign(grid.cell_count(), 0.0);

    if (shots > 0) {
        parallel_for(grid.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                grid.values[i] =
                    estimate_shots(model, grid.center(i), shots, derive_seed(seed, i));
        });
    } else {
        const DensityEstimator est = make_estimator(model);
        parallel_for(grid.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                grid.values[i] = estimate_exact(est, grid.center(i));
        });
    }

    if (!model.norm_constant) {
        double mass = 0.0;
        for (double v : grid.values) mass += v;
        mass *= grid.cell_volume();
        if (!(mass > 0.0)) throw std::runtime_error("density has zero total mass on the grid");
        model.norm_constant = 1.0 / mass;
    }
    for (double& v : grid.values) v *= *model.norm_constant;
    return grid;
}

inline void write_grid_csv(const DensityGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[32];
    if (grid.dims() == 2) out << "x0,x1,density\n";
    else out << "x0,density\n";
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const std::vector<double> x = grid.center(i);
        for (double c : x) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", grid.values[i]);
        out << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Min-max scaled ASCII portable graymap; rows sweep the second axis from
/// high to low so the image y-axis points up.
inline void write_grid_pgm(const DensityGrid& grid, const std::string& path) {
    if (grid.dims() != 2) throw std::invalid_argument("PGM export needs a 2-D grid");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const int w = grid.axes[0].res, h = grid.axes[1].res;
    const auto [mn_it, mx_it] = std::minmax_element(grid.values.begin(), grid.values.end());
    const double mn = *mn_it, mx = *mx_it;
    out << "P2\n" << w << " " << h << "\n255\n";
    for (int row = h - 1; row >= 0; --row) {
        for (int col = 0; col < w; ++col) {
            double v = grid.values[static_cast<std::size_t>(col) * static_cast<std::size_t>(h) +
                                   static_cast<std::size_t>(row)];
            int g = mx > mn ? static_cast<int>(std::lround(255.0 * (v - mn) / (mx - mn))) : 0;
            out << g << (col + 1 < w ? " " : "\n");
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace memoqcd
