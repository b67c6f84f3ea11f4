#pragma once

#include <string>
#include <vector>

#include "qkc/bayesnet.hpp"

namespace qkc {

enum class cnf_var_kind : uint8_t { indicator, parameter };

// Meaning of one CNF variable: either an indicator "node takes this value"
// or a stand-in for a numeric parameter.
struct cnf_var {
    cnf_var_kind kind = cnf_var_kind::indicator;
    node_id node;     // indicator only
    int value = 0;    // indicator only
    int param = -1;   // parameter only

    bool operator==(const cnf_var&) const = default;
};

// A variable eliminated by unit propagation, with the polarity it was fixed
// to.  The weight keeps the parameter value alive after the variable itself
// is renumbered away.
struct fixed_assignment {
    cnf_var var;
    bool value = false;
    cx weight = 1.0;

    bool operator==(const fixed_assignment&) const = default;
};

struct weighted_cnf {
    std::vector<cnf_var> vars;              // vars[i] describes DIMACS var i+1
    std::vector<cx> weights;                // parallel to vars; 1.0 for indicators
    std::vector<std::vector<int>> clauses;  // DIMACS literals, no terminating 0
    std::vector<int> query_vars;            // sorted 1-based var indices
    std::vector<int> summed_vars;           // sorted 1-based var indices
    std::vector<fixed_assignment> fixed;    // recorded by simplify_units
    // Output nodes in qubit order and noise-event nodes in circuit order.
    // Carried from the BayesNet so downstream consumers can map bitstrings
    // and event tuples without reparsing labels (SWAPs permute outputs).
    std::vector<node_id> output_nodes;
    std::vector<node_id> event_nodes;

    int num_vars() const { return static_cast<int>(vars.size()); }
    bool operator==(const weighted_cnf&) const = default;
};

// Encodes the network as weighted CNF: exactly-one constraints per node,
// unit clauses for initial evidence, blocking clauses for ZERO cells,
// implications for deterministic cells, and forward plus reverse implications
// that make each parameter variable equivalent to the disjunction of its
// cells (so every path has exactly one satisfying assignment).
weighted_cnf bn_to_cnf(const bayes_net& bn, const param_table& params);

// Unit propagation to fixpoint: fixed variables are recorded in `fixed` and
// removed (remaining variables renumbered densely); satisfied clauses and
// falsified literals are dropped.  Throws std::runtime_error if an empty
// clause is derived (the encoder never produces an inconsistent CNF).
weighted_cnf simplify_units(const weighted_cnf& cnf);

// Extended DIMACS: `p cnf V C` header, then comment lines carrying weights
// (`c w`), parameter ids (`c p`), indicator meanings (`c ind`), query/summed
// markers (`c q`/`c s`), output/event node order (`c o`/`c e`), fixed
// assignments (`c fx`/`c fxp`), then clause lines terminated by 0.
std::string emit_dimacs(const weighted_cnf& cnf);

// Inverse of emit_dimacs; throws std::runtime_error on malformed input.
weighted_cnf parse_dimacs(const std::string& text);

}  // namespace qkc
