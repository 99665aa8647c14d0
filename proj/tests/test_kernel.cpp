#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "memoqcd/codec.hpp"
#include "memoqcd/kernel.hpp"
#include "memoqcd/kernel_objective.hpp"
#include "memoqcd/optimize.hpp"
#include "memoqcd/rng.hpp"

using namespace memoqcd;
using Catch::Matchers::WithinAbs;

namespace {

/// Straightforward per-pair reference for the batched evaluator.
double kernel_mse_reference(const ParamCircuit& c, const std::vector<double>& params,
                            const PairSet& pairs, double gamma) {
    double acc = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        double e = gaussian_kernel_sq(pairs.x[p], pairs.xp[p], gamma) -
                   circuit_kernel_sq(c, params, pairs.x[p], pairs.xp[p]);
        acc += e * e;
    }
    return acc / static_cast<double>(pairs.size());
}

ParamCircuit pick_random_circuit(int n_gates, int n_qubits, std::uint64_t seed,
                                 int min_params = 1) {
    for (std::uint64_t s = seed;; ++s) {
        ParamCircuit c = decode(random_chromosome(n_gates, s), n_qubits);
        if (c.n_params >= min_params) return c;
    }
}

} // namespace

TEST_CASE("gaussian_kernel_sq values and structure") {
    REQUIRE_THAT(gaussian_kernel_sq({1.0, 2.0}, {1.0, 2.0}, 0.5), WithinAbs(1.0, 1e-15));

    // d=1, gamma=0.1, squared distance 10 -> e^{-1}.
    double x = 0.0, xp = std::sqrt(10.0);
    REQUIRE_THAT(gaussian_kernel_sq({x}, {xp}, 0.1), WithinAbs(std::exp(-1.0), 1e-12));

    SECTION("factorizes over coordinates") {
        Rng rng(31);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> a{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            std::vector<double> b{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            double joint = gaussian_kernel_sq(a, b, 0.1);
            double prod = gaussian_kernel_sq({a[0]}, {b[0]}, 0.1) *
                          gaussian_kernel_sq({a[1]}, {b[1]}, 0.1);
            REQUIRE_THAT(joint, WithinAbs(prod, 1e-12));
        }
    }
    REQUIRE_THROWS_AS(gaussian_kernel_sq({1.0}, {1.0, 2.0}, 0.1), std::invalid_argument);
}

TEST_CASE("sample_pairs is bounded, sized, and seeded") {
    KernelSpec spec; // defaults: gamma 0.1, [-3,3], 10^4 pairs
    PairSet p = sample_pairs(spec, 9);
    REQUIRE(p.size() == 10000);
    for (std::size_t i = 0; i < p.size(); ++i) {
        REQUIRE(p.x[i] >= -3.0);
        REQUIRE(p.x[i] < 3.0);
        REQUIRE(p.xp[i] >= -3.0);
        REQUIRE(p.xp[i] < 3.0);
    }
    PairSet q = sample_pairs(spec, 9);
    REQUIRE(p.x == q.x);
    REQUIRE(p.xp == q.xp);

    KernelSpec tight;
    tight.a = 1.0;
    tight.b = 1.0 + 1e-9;
    tight.n_pairs = 100;
    PairSet t = sample_pairs(tight, 3);
    for (std::size_t i = 0; i < t.size(); ++i)
        REQUIRE(std::abs(t.x[i] - t.xp[i]) <= 1e-9);

    KernelSpec bad;
    bad.gamma = 0.0;
    REQUIRE_THROWS_AS(sample_pairs(bad, 1), std::invalid_argument);
}

TEST_CASE("circuit_kernel_sq closed forms and symmetry") {
    SECTION("self-overlap is exactly 1") {
        ParamCircuit c = pick_random_circuit(8, 3, 11);
        Rng rng(4);
        for (int t = 0; t < 20; ++t) {
            double x = rng.uniform(-3, 3);
            REQUIRE_THAT(circuit_kernel_sq(c, c.init_params, x, x), WithinAbs(1.0, 1e-12));
        }
    }
    SECTION("feature-independent circuits give constant kernel 1") {
        ParamCircuit c = decode(Chromosome::from_string("000000010000000"), 3);
        REQUIRE(c.n_params == 0);
        Rng rng(6);
        for (int t = 0; t < 20; ++t)
            REQUIRE_THAT(circuit_kernel_sq(c, {}, rng.uniform(-3, 3), rng.uniform(-3, 3)),
                         WithinAbs(1.0, 1e-12));
    }
    SECTION("single data-scaled R_y(theta=1) has kernel cos^2((x-x')/2)") {
        ParamCircuit c;
        c.n_qubits = 1;
        c.gates.push_back(make_rotation(GateKind::RY, 0, 0, true));
        c.n_params = 1;
        c.init_params = {1.0};
        Rng rng(14);
        for (int t = 0; t < 50; ++t) {
            double x = rng.uniform(-3, 3), xp = rng.uniform(-3, 3);
            double expected = std::cos(0.5 * (x - xp));
            expected *= expected;
            REQUIRE_THAT(circuit_kernel_sq(c, c.init_params, x, xp), WithinAbs(expected, 1e-12));
        }
    }
    SECTION("symmetric in its arguments") {
        ParamCircuit c = pick_random_circuit(8, 3, 21);
        Rng rng(3);
        for (int t = 0; t < 30; ++t) {
            double x = rng.uniform(-3, 3), xp = rng.uniform(-3, 3);
            REQUIRE_THAT(circuit_kernel_sq(c, c.init_params, x, xp),
                         WithinAbs(circuit_kernel_sq(c, c.init_params, xp, x), 1e-10));
        }
    }
}

TEST_CASE("qfm_state tensor structure") {
    ParamCircuit c = pick_random_circuit(8, 2, 5);
    SECTION("d=1 equals a plain circuit run") {
        PureState direct = run_circuit(c, c.init_params, 1.3);
        PureState mapped = qfm_state(c, c.init_params, {1.3});
        for (std::size_t i = 0; i < direct.dim(); ++i)
            REQUIRE(std::abs(direct.amplitudes[i] - mapped.amplitudes[i]) < 1e-14);
    }
    SECTION("normalized with unit self-overlap") {
        PureState s = qfm_state(c, c.init_params, {0.4, 0.4});
        REQUIRE(s.n_qubits == 4);
        REQUIRE_THAT(s.norm(), WithinAbs(1.0, 1e-12));
    }
    SECTION("induced d-dim kernel factorizes over features") {
        Rng rng(69);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            std::vector<double> xp{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            PureState sx = qfm_state(c, c.init_params, x);
            PureState sxp = qfm_state(c, c.init_params, xp);
            cdouble o{0, 0};
            for (std::size_t i = 0; i < sx.dim(); ++i)
                o += std::conj(sx.amplitudes[i]) * sxp.amplitudes[i];
            double prod = circuit_kernel_sq(c, c.init_params, x[0], xp[0]) *
                          circuit_kernel_sq(c, c.init_params, x[1], xp[1]);
            REQUIRE_THAT(std::norm(o), WithinAbs(prod, 1e-10));
        }
    }
    SECTION("resource bound on total qubits") {
        ParamCircuit big = pick_random_circuit(8, 6, 7, 0);
        REQUIRE_THROWS_AS(qfm_state(big, big.init_params, {1.0, 2.0, 3.0, 4.0}),
                          std::length_error);
    }
}

TEST_CASE("kernel_mse reference cases") {
    SECTION("zero error when every pair is diagonal") {
        ParamCircuit c = pick_random_circuit(8, 3, 33);
        PairSet pairs;
        Rng rng(10);
        for (int i = 0; i < 64; ++i) {
            double v = rng.uniform(-3, 3);
            pairs.x.push_back(v);
            pairs.xp.push_back(v);
        }
        REQUIRE_THAT(kernel_mse(c, c.init_params, pairs, 0.1), WithinAbs(0.0, 1e-12));
    }
    SECTION("constant circuit kernel against fixed-distance pairs") {
        ParamCircuit c = decode(Chromosome::from_string("00000"), 2);
        PairSet pairs;
        const double d = std::sqrt(10.0);
        for (int i = 0; i < 10; ++i) {
            pairs.x.push_back(-1.0);
            pairs.xp.push_back(-1.0 + d);
        }
        double expected = (1.0 - std::exp(-1.0)) * (1.0 - std::exp(-1.0));
        REQUIRE_THAT(kernel_mse(c, {}, pairs, 0.1), WithinAbs(expected, 1e-12));
    }
    SECTION("invariant under pair permutation") {
        ParamCircuit c = pick_random_circuit(8, 2, 17);
        KernelSpec spec;
        spec.n_pairs = 777;
        PairSet pairs = sample_pairs(spec, 20);
        double v1 = kernel_mse(c, c.init_params, pairs, spec.gamma);
        PairSet rev;
        rev.x.assign(pairs.x.rbegin(), pairs.x.rend());
        rev.xp.assign(pairs.xp.rbegin(), pairs.xp.rend());
        double v2 = kernel_mse(c, c.init_params, rev, spec.gamma);
        REQUIRE_THAT(v1, WithinAbs(v2, 1e-13));
    }
    SECTION("bounded in [0,1]") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            ParamCircuit c = decode(random_chromosome(8, s), 3);
            KernelSpec spec;
            spec.n_pairs = 200;
            PairSet pairs = sample_pairs(spec, s);
            double v = kernel_mse(c, c.init_params, pairs, spec.gamma);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

TEST_CASE("batched evaluator matches the per-pair reference") {
    KernelSpec spec;
    spec.n_pairs = 400; // spans multiple blocks plus a partial tail
    PairSet pairs = sample_pairs(spec, 8);
    for (std::uint64_t s = 0; s < 12; ++s) {
        ParamCircuit c = decode(random_chromosome(8, 100 + s), 3);
        KernelMseObjective obj(c, pairs, spec.gamma);
        double batched = obj.value(c.init_params);
        double reference = kernel_mse_reference(c, c.init_params, pairs, spec.gamma);
        REQUIRE_THAT(batched, WithinAbs(reference, 1e-12));
    }
}

TEST_CASE("analytic gradient agrees with finite differences and parameter shift") {
    KernelSpec spec;
    spec.n_pairs = 60;
    PairSet pairs = sample_pairs(spec, 15);

    for (std::uint64_t s = 0; s < 8; ++s) {
        ParamCircuit c = pick_random_circuit(8, s % 2 ? 2 : 3, 200 + s);
        KernelMseObjective obj(c, pairs, spec.gamma);

        std::vector<double> params = c.init_params;
        // Move off the init point so gradients are generic.
        Rng rng(50 + s);
        for (double& p : params) p += rng.uniform(-0.3, 0.3);

        std::vector<double> analytic;
        obj.value_and_grad(params, analytic);

        std::vector<double> fd = gradient(
            [&](const std::vector<double>& p) { return obj.value(p); }, params, 1e-5);
        std::vector<double> shift = kernel_mse_gradient_shift(c, params, pairs, spec.gamma);

        double scale = 0.0;
        for (double g : fd) scale = std::max(scale, std::abs(g));
        scale = std::max(scale, 1e-8);
        for (std::size_t k = 0; k < analytic.size(); ++k) {
            REQUIRE_THAT(analytic[k], WithinAbs(fd[k], 1e-6 * std::max(1.0, scale)));
            REQUIRE_THAT(analytic[k], WithinAbs(shift[k], 1e-11));
        }
    }
}

TEST_CASE("gradient descent on the objective reduces the MSE") {
    KernelSpec spec;
    spec.n_pairs = 500;
    PairSet pairs = sample_pairs(spec, 77);
    ParamCircuit c = pick_random_circuit(8, 3, 301, 2);
    KernelMseObjective obj(c, pairs, spec.gamma);

    GdResult gd = gd_minimize(
        [&obj](const std::vector<double>& p, std::vector<double>& g) {
            return obj.value_and_grad(p, g);
        },
        c.init_params, 150, 0.2);
    REQUIRE(gd.trace.size() == 151);
    REQUIRE(gd.trace.back() < gd.trace.front());
}
