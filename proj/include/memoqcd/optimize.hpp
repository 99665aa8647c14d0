#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "memoqcd/codec.hpp"
#include "memoqcd/hea.hpp"
#include "memoqcd/kernel_objective.hpp"
#include "memoqcd/rng.hpp"

namespace memoqcd {

using ObjectiveFn = std::function<double(const std::vector<double>&)>;
using ValueGradFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

/// Central finite-difference gradient with step h. This is the reference
/// gradient; analytic paths must agree with it.
inline std::vector<double> gradient(const ObjectiveFn& objective, std::vector<double> params,
                                    double h = 1e-4) {
    if (!std::isfinite(objective(params)))
        throw std::runtime_error("objective is not finite at the given parameters");
    std::vector<double> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + h;
        double fp = objective(params);
        params[k] = saved - h;
        double fm = objective(params);
        params[k] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("objective is not finite near the given parameters");
        grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

namespace detail {

/// run_circuit with an extra angle offset applied to one gate (by gate
/// index), used by the parameter-shift rule.
inline PureState run_circuit_shifted(const ParamCircuit& circuit,
                                     const std::vector<double>& params,
                                     std::optional<double> feature, int shift_gate,
                                     double shift) {
    PureState state = zero_state(circuit.n_qubits);
    int gi = 0;
    for (const Gate& g : circuit.gates) {
        double angle = 0.0;
        if (g.is_rotation()) {
            angle = resolve_angle(g, params, feature);
            if (gi == shift_gate) angle += shift;
        }
        apply_gate_inplace(state, g, angle);
        ++gi;
    }
    return state;
}

inline double overlap_sq(const PureState& a, const PureState& b) {
    cdouble o{0.0, 0.0};
    for (std::size_t i = 0; i < a.dim(); ++i)
        o += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return std::clamp(std::norm(o), 0.0, 1.0);
}

} // namespace detail

/// Parameter-shift gradient of kernel_mse. Each rotation's effective angle is
/// shifted by +-pi/2 on one side of the overlap at a time; the two side
/// derivatives combine through the chain rule with the side's feature value
/// for data-scaled gates. Exact for rotation generators, so it must match the
/// finite-difference reference within discretization error.
inline std::vector<double> kernel_mse_gradient_shift(const ParamCircuit& circuit,
                                                     const std::vector<double>& params,
                                                     const PairSet& pairs, double gamma) {
    circuit.check_valid();
    std::vector<double> grad(static_cast<std::size_t>(circuit.n_params), 0.0);
    const std::size_t n = pairs.size();
    const double half_pi = 1.57079632679489661923;

    for (std::size_t p = 0; p < n; ++p) {
        const double x = pairs.x[p], xp = pairs.xp[p];
        PureState sx = run_circuit(circuit, params, x);
        PureState sxp = run_circuit(circuit, params, xp);
        const double f = detail::overlap_sq(sx, sxp);
        const double e = 2.0 * (f - gaussian_kernel_sq(x, xp, gamma));

        int gi = 0;
        for (const Gate& g : circuit.gates) {
            if (g.is_rotation()) {
                // x' side occurrence.
                double fp = detail::overlap_sq(sx, detail::run_circuit_shifted(circuit, params, xp, gi, half_pi));
                double fm = detail::overlap_sq(sx, detail::run_circuit_shifted(circuit, params, xp, gi, -half_pi));
                double da = 0.5 * (fp - fm);
                grad[static_cast<std::size_t>(g.param_slot)] += e * (g.data_scaled ? xp : 1.0) * da;
                // x side occurrence.
                fp = detail::overlap_sq(detail::run_circuit_shifted(circuit, params, x, gi, half_pi), sxp);
                fm = detail::overlap_sq(detail::run_circuit_shifted(circuit, params, x, gi, -half_pi), sxp);
                da = 0.5 * (fp - fm);
                grad[static_cast<std::size_t>(g.param_slot)] += e * (g.data_scaled ? x : 1.0) * da;
            }
            ++gi;
        }
    }
    for (double& gk : grad) gk /= static_cast<double>(n);
    return grad;
}

struct GdResult {
    std::vector<double> params;
    std::vector<double> trace; // objective value per epoch, including the initial one
};

/// Plain gradient descent with a caller-supplied combined value/gradient
/// function. The trace has epochs+1 entries (initial value first).
inline GdResult gd_minimize(const ValueGradFn& value_and_grad, std::vector<double> init,
                            int epochs, double learning_rate) {
    if (epochs < 1) throw std::invalid_argument("need at least one epoch");
    GdResult result;
    result.trace.reserve(static_cast<std::size_t>(epochs) + 1);
    std::vector<double> grad;
    for (int t = 0; t < epochs; ++t) {
        double v = value_and_grad(init, grad);
        if (!std::isfinite(v))
            throw std::runtime_error("gradient descent diverged: objective not finite at epoch " +
                                     std::to_string(t));
        result.trace.push_back(v);
        for (std::size_t k = 0; k < init.size(); ++k)
            init[k] -= learning_rate * grad[k];
    }
    std::vector<double> unused;
    double final_v = value_and_grad(init, unused);
    if (!std::isfinite(final_v))
        throw std::runtime_error("gradient descent diverged: final objective not finite");
    result.trace.push_back(final_v);
    result.params = std::move(init);
    return result;
}

/// Gradient descent with the finite-difference reference gradient.
inline GdResult gd_minimize(const ObjectiveFn& objective, std::vector<double> init, int epochs,
                            double learning_rate) {
    return gd_minimize(
        [&](const std::vector<double>& p, std::vector<double>& g) {
            g = gradient(objective, p);
            return objective(p);
        },
        std::move(init), epochs, learning_rate);
}

enum class SearchMode { genetic, memetic, hea };

inline const char* search_mode_name(SearchMode m) {
    switch (m) {
        case SearchMode::genetic: return "genetic";
        case SearchMode::memetic: return "memetic";
        case SearchMode::hea: return "hea";
    }
    return "?";
}

inline SearchMode search_mode_from_name(const std::string& s) {
    if (s == "genetic") return SearchMode::genetic;
    if (s == "memetic") return SearchMode::memetic;
    if (s == "hea") return SearchMode::hea;
    throw std::invalid_argument("unknown search mode: " + s);
}

struct SearchConfig {
    int generations = 30;
    int population = 15;
    int epochs = 2000;
    double learning_rate = 0.2;
    std::optional<double> mutation_rate; // per-bit; default 1/(5*n_gates)
    double crossover_rate = 0.9;
    int tournament_size = 3;
    int elitism = 1;
    int n_gates = 8;
    int n_qubits = 3;
    std::uint64_t seed = 0;
    SearchMode mode = SearchMode::memetic;

    double resolved_mutation_rate() const {
        return mutation_rate ? *mutation_rate : 1.0 / (5.0 * static_cast<double>(n_gates));
    }

    void check_valid() const {
        if (generations < 1) throw std::invalid_argument("need at least one generation");
        if (population < 2) throw std::invalid_argument("population must be at least 2");
        if (elitism < 0 || elitism >= population)
            throw std::invalid_argument("elitism must lie in [0, population)");
        if (tournament_size < 1 || tournament_size > population)
            throw std::invalid_argument("tournament size must lie in [1, population]");
        double mr = resolved_mutation_rate();
        if (mr < 0.0 || mr > 1.0 || crossover_rate < 0.0 || crossover_rate > 1.0)
            throw std::invalid_argument("rates must lie in [0,1]");
        if (n_gates < 1) throw std::invalid_argument("need at least one gene");
        if (n_qubits < 1) throw std::invalid_argument("need at least one qubit");
        if (mode == SearchMode::memetic) {
            if (epochs < 1) throw std::invalid_argument("memetic mode needs epochs >= 1");
            if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
        }
    }
};

/// One individual of the evolutionary search. `fitness` is the selection
/// value: the kernel MSE at (chromosome, params), plus 1 when the decoded
/// depth exceeds the single-layer HEA depth bound. `mse` is the raw MSE.
struct Agent {
    Chromosome chromosome;
    std::vector<double> params;
    double fitness = 0.0;
    double mse = 0.0;
    bool depth_ok = true;
    bool evaluated = false;
};

struct GenStat {
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
};

struct EvolveResult {
    Agent best;
    std::vector<GenStat> trace;
};

/// Evolutionary architecture search over chromosomes. In memetic mode each
/// individual's angles are refined by gradient descent on the kernel MSE
/// before its fitness is read; in genetic mode fitness uses the decoded
/// initial angles unchanged. Fully deterministic under config.seed: the pair
/// set, population init, and variation operators each draw from an
/// independent derived stream.
inline EvolveResult evolve(const SearchConfig& config, const KernelSpec& kernel) {
    config.check_valid();
    if (config.mode == SearchMode::hea)
        throw std::invalid_argument("evolve handles genetic and memetic modes only");
    kernel.check_valid();

    const PairSet pairs = sample_pairs(kernel, derive_seed(config.seed, 0));
    Rng rng_init(derive_seed(config.seed, 1));
    Rng rng_evo(derive_seed(config.seed, 2));

    const int depth_limit = circuit_metrics(build_hea(config.n_qubits, 1)).depth;
    const double mutation_rate = config.resolved_mutation_rate();
    const int n_bits = 5 * config.n_gates;

    struct MemoEntry {
        std::vector<double> params;
        double fitness, mse;
        bool depth_ok;
    };
    std::unordered_map<std::string, MemoEntry> memo;

    auto evaluate = [&](Agent& agent) {
        if (agent.evaluated) return;
        const std::string key = agent.chromosome.to_string();
        auto it = memo.find(key);
        if (it == memo.end()) {
            ParamCircuit circuit = decode(agent.chromosome, config.n_qubits);
            const bool depth_ok = circuit_metrics(circuit).depth <= depth_limit;
            MemoEntry entry;
            entry.depth_ok = depth_ok;
            KernelMseObjective obj(circuit, pairs, kernel.gamma);
            if (config.mode == SearchMode::memetic && circuit.n_params > 0) {
                GdResult gd = gd_minimize(
                    [&obj](const std::vector<double>& p, std::vector<double>& g) {
                        return obj.value_and_grad(p, g);
                    },
                    circuit.init_params, config.epochs, config.learning_rate);
                entry.params = std::move(gd.params);
                entry.mse = gd.trace.back();
            } else {
                entry.params = circuit.init_params;
                entry.mse = obj.value(entry.params);
            }
            entry.fitness = entry.mse + (depth_ok ? 0.0 : 1.0);
            it = memo.emplace(key, std::move(entry)).first;
        }
        agent.params = it->second.params;
        agent.fitness = it->second.fitness;
        agent.mse = it->second.mse;
        agent.depth_ok = it->second.depth_ok;
        agent.evaluated = true;
    };

    std::vector<Agent> population(static_cast<std::size_t>(config.population));
    for (Agent& a : population)
        a.chromosome = random_chromosome(config.n_gates, rng_init.bits());

    auto tournament = [&]() -> const Agent& {
        int winner = rng_evo.index(config.population);
        for (int t = 1; t < config.tournament_size; ++t) {
            int c = rng_evo.index(config.population);
            if (population[static_cast<std::size_t>(c)].fitness <
                population[static_cast<std::size_t>(winner)].fitness)
                winner = c;
        }
        return population[static_cast<std::size_t>(winner)];
    };

    EvolveResult result;
    result.best.fitness = std::numeric_limits<double>::infinity();
    result.trace.reserve(static_cast<std::size_t>(config.generations));

    for (int gen = 0; gen < config.generations; ++gen) {
        for (Agent& a : population) evaluate(a);

        double best_f = std::numeric_limits<double>::infinity();
        double mean_f = 0.0;
        for (const Agent& a : population) {
            mean_f += a.fitness;
            best_f = std::min(best_f, a.fitness);
            if (a.fitness < result.best.fitness) result.best = a;
        }
        mean_f /= static_cast<double>(config.population);
        result.trace.push_back({gen, best_f, mean_f});

        if (gen + 1 == config.generations) break;

        std::vector<Agent> next;
        next.reserve(static_cast<std::size_t>(config.population));
        if (config.elitism > 0) {
            std::vector<int> order(static_cast<std::size_t>(config.population));
            for (int i = 0; i < config.population; ++i) order[static_cast<std::size_t>(i)] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return population[static_cast<std::size_t>(a)].fitness <
                       population[static_cast<std::size_t>(b)].fitness;
            });
            for (int e = 0; e < config.elitism; ++e)
                next.push_back(population[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]);
        }
        while (static_cast<int>(next.size()) < config.population) {
            const Agent& p1 = tournament();
            const Agent& p2 = tournament();
            Agent child;
            child.chromosome = p1.chromosome;
            if (rng_evo.uniform() < config.crossover_rate && config.n_gates > 1) {
                // Cut at a gene boundary, keeping the 5-bit alphabet intact.
                int cut = 5 * (1 + rng_evo.index(config.n_gates - 1));
                for (int b = cut; b < n_bits; ++b)
                    child.chromosome.bits[static_cast<std::size_t>(b)] =
                        p2.chromosome.bits[static_cast<std::size_t>(b)];
            }
            bool mutated = false;
            for (int b = 0; b < n_bits; ++b)
                if (rng_evo.uniform() < mutation_rate) {
                    child.chromosome.bits[static_cast<std::size_t>(b)] ^= 1;
                    mutated = true;
                }
            (void)mutated;
            next.push_back(std::move(child));
        }
        population = std::move(next);
    }
    return result;
}

struct HeaFitResult {
    std::vector<double> params;
    std::vector<double> trace;
};

/// Fit the angles of a fixed single-feature HEA (data-scaled rotations) to
/// the Gaussian kernel by gradient descent on the same pair set an evolve run
/// with the same seed would use.
inline HeaFitResult hea_kernel_fit(int n_qubits, int n_layers, const KernelSpec& kernel,
                                   int epochs, double learning_rate, std::uint64_t seed) {
    if (n_layers < 1) throw std::invalid_argument("need at least one layer");
    kernel.check_valid();
    ParamCircuit circuit = build_hea(n_qubits, n_layers, /*data_scaled=*/true);
    const PairSet pairs = sample_pairs(kernel, derive_seed(seed, 0));
    Rng rng(derive_seed(seed, 1));
    std::vector<double> init(static_cast<std::size_t>(circuit.n_params));
    for (double& v : init) v = rng.uniform(0.0, 6.28318530717958647692);

    KernelMseObjective obj(circuit, pairs, kernel.gamma);
    GdResult gd = gd_minimize(
        [&obj](const std::vector<double>& p, std::vector<double>& g) {
            return obj.value_and_grad(p, g);
        },
        std::move(init), epochs, learning_rate);
    return {std::move(gd.params), std::move(gd.trace)};
}

/// One line per generation: index, best fitness, mean fitness.
inline void write_trace_csv(std::ostream& out, const std::vector<GenStat>& trace) {
    out << "generation,best_fitness,mean_fitness\n";
    for (const GenStat& g : trace) {
        std::ostringstream line;
        line.precision(17);
        line << g.generation << "," << g.best_fitness << "," << g.mean_fitness << "\n";
        out << line.str();
    }
}

} // namespace memoqcd
