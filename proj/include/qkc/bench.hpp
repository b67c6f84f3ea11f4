#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkc/circuit.hpp"

namespace qkc {

struct graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // u < v
};

// Simple 3-regular graph via the seeded configuration model (pair random
// stubs, retry on loops / duplicate edges).  Requires n >= 4 and even;
// throws when no simple pairing is found.
graph random_regular_graph(int n, int degree, uint64_t seed);

// QAOA for Max-Cut on a random 3-regular graph: H layer, then per iteration
// a cost layer (CNOT-RZ(2*gamma)-CNOT per edge) and a mixer layer (RX(2*beta)
// per qubit).  gammas/betas must each have `iterations` entries.
circuit build_qaoa_maxcut(int n, int iterations, uint64_t seed,
                          const std::vector<double>& gammas,
                          const std::vector<double>& betas);
circuit build_qaoa_maxcut(const graph& g, const std::vector<double>& gammas,
                          const std::vector<double>& betas);

// VQE ansatz for a 2D Ising grid: per step, CNOT-RZ-CNOT couplings between
// lattice neighbors followed by an RX/RZ rotation pair on every qubit.
// angles supplies steps * (1 + 2 * rows * cols) values: per step, one
// coupling angle then (rx, rz) per qubit.
circuit build_vqe_ising(int rows, int cols, int steps, const std::vector<double>& angles);

// Random circuit sampling template: initial H layer, then per layer one
// random single-qubit gate (RX(pi/2), RY(pi/2) or T) per qubit followed by
// CZ gates on an alternating linear chain.
circuit build_rcs(int n, int depth, uint64_t seed);

// Named small algorithm instances with known output distributions:
// bell, teleport-core, deutsch-jozsa, bernstein-vazirani, simon,
// hidden-shift, qft, grover.  Throws on unknown names.
circuit build_algorithm(const std::string& name);
const std::vector<std::string>& algorithm_names();

// Inserts a noise op after each gate, on each qubit the gate touches.
circuit add_noise(const circuit& c, noise_kind kind, const std::vector<double>& params);

// One rebind-sweep query record: the angle set used and the amplitude
// obtained for the fixed spot-check evidence.
struct sweep_record {
    std::vector<double> gammas;
    std::vector<double> betas;
    cx amplitude;
    double seconds = 0.0;
};

struct sweep_result {
    int compile_count = 0;
    double compile_seconds = 0.0;
    size_t ac_nodes = 0;
    std::vector<sweep_record> records;
};

// Compiles a QAOA instance once, then rebinds K angle sets and evaluates a
// fixed basis amplitude for each (compile-once / query-many).
sweep_result qaoa_rebind_sweep(int n, int iterations, uint64_t seed, int k_rebinds);

// Command-line driver (subcommands: compile, amplitude, density, sample,
// validate, bench).  Returns the process exit code: 0 success, 1 usage
// error, 2 computation error.
int cli_main(int argc, char** argv);

}  // namespace qkc
