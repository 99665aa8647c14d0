// Throughput probe for the batched kernel-MSE evaluator: measures epochs/sec
// of value_and_grad on a representative search circuit, which bounds the wall
// time of the evolutionary runs.
#include <chrono>
#include <cstdio>
#include <string>

#include "memoqcd/codec.hpp"
#include "memoqcd/kernel.hpp"
#include "memoqcd/kernel_objective.hpp"

int main(int argc, char** argv) {
    using namespace memoqcd;
    int n_qubits = argc > 1 ? std::stoi(argv[1]) : 3;
    int n_gates = argc > 2 ? std::stoi(argv[2]) : 8;
    int epochs = argc > 3 ? std::stoi(argv[3]) : 200;
    int block = argc > 4 ? std::stoi(argv[4]) : 256;

    KernelSpec spec;
    PairSet pairs = sample_pairs(spec, 42);

    // Pick a chromosome with a healthy rotation count.
    Chromosome chrom;
    ParamCircuit circuit;
    for (std::uint64_t s = 0;; ++s) {
        chrom = random_chromosome(n_gates, s);
        circuit = decode(chrom, n_qubits);
        if (circuit.n_params >= n_gates / 2) break;
    }
    std::printf("circuit: %d qubits, %zu gates, %d params\n", n_qubits, circuit.gates.size(),
                circuit.n_params);

    KernelMseObjective obj(circuit, pairs, spec.gamma, block);
    std::vector<double> params = circuit.init_params;
    std::vector<double> grad;

    auto t0 = std::chrono::steady_clock::now();
    double v = 0.0;
    for (int e = 0; e < epochs; ++e) {
        v = obj.value_and_grad(params, grad);
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= 0.2 * grad[k];
    }
    auto t1 = std::chrono::steady_clock::now();
    double sec = std::chrono::duration<double>(t1 - t0).count();
    std::printf("%d epochs x %zu pairs: %.3f s (%.1f epochs/s), final mse %.6f\n", epochs,
                pairs.size(), sec, epochs / sec, v);

    auto t2 = std::chrono::steady_clock::now();
    for (int e = 0; e < epochs; ++e) v = obj.value(params);
    auto t3 = std::chrono::steady_clock::now();
    double sec_v = std::chrono::duration<double>(t3 - t2).count();
    std::printf("value-only: %.3f s (%.1f evals/s)\n", sec_v, epochs / sec_v);
    return v == 12345.0 ? 1 : 0;
}
