#pragma once

#include <map>
#include <vector>

#include "qkc/circuit.hpp"
#include "qkc/cnf.hpp"
#include "qkc/common.hpp"

// Brute-force reference implementations used as ground truth in tests and by
// the `validate` CLI subcommand.  Deliberately straightforward dense linear
// algebra, sharing no evaluation logic with the compiled pipeline.
namespace qkc::oracle {

// Full state-vector simulation of an ideal circuit.  Index bit convention:
// qubit 0 is the most significant bit of the state index.
// Throws on noise ops or more than 20 qubits.
std::vector<cx> statevector_simulate(const circuit& c);

// Density-matrix simulation: gates as U rho U^dagger, noise channels as
// sum_k E_k rho E_k^dagger on the target qubit.  Throws above 10 qubits.
cmatrix density_matrix_simulate(const circuit& c);

// Exhaustive weighted model counting.  Enumerates every assignment of the
// CNF variables; for satisfying ones multiplies indicator weights (1 when
// consistent with `evidence` or unassigned, 0 otherwise), parameter weights
// on positive assignment (1 on negative), plus the contribution of variables
// fixed by simplify_units.  Throws above 24 variables.
cx brute_force_wmc(const weighted_cnf& cnf, const std::map<node_id, int>& evidence);

}  // namespace qkc::oracle
