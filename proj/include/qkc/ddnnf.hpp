#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qkc/cnf.hpp"

namespace qkc {

enum class ac_kind : uint8_t { constant_true, constant_false, literal, and_node, or_node };

struct ac_node {
    ac_kind kind = ac_kind::constant_true;
    int var = 0;             // literal: variable; or_node: decision variable
    bool positive = true;    // literal polarity
    std::vector<int> children;  // and_node: any arity; or_node: {low, high}

    bool operator==(const ac_node&) const = default;
};

// Per-variable annotations carried into the circuit so that a serialized AC
// is self-describing (weights, meanings, query/summed classification).
struct ac_var {
    cnf_var meaning;
    cx weight = 1.0;         // parameters only; 1.0 for indicators
    bool is_query = false;
    bool is_summed = false;

    bool operator==(const ac_var&) const = default;
};

struct compile_stats {
    size_t node_count = 0;
    size_t edge_count = 0;
    size_t decision_count = 0;
    size_t cache_hits = 0;
    size_t cache_entries = 0;
    bool cache_disabled = false;  // set when the cache budget was exhausted
    double wall_seconds = 0.0;
};

// Smooth deterministic-decomposable arithmetic circuit.  Nodes are stored in
// topological order (children before parents) with the root last.
struct arithmetic_circuit {
    std::vector<ac_node> nodes;
    int root = -1;
    std::vector<ac_var> vars;            // vars[i] describes variable i+1
    std::vector<node_id> output_nodes;   // qubit order
    std::vector<node_id> event_nodes;    // circuit order
    compile_stats stats;

    int num_vars() const { return static_cast<int>(vars.size()); }
    // Positive-literal leaf occurrences per variable (1-based index); used by
    // the downward pass.  Rebuilt by finalize_indexes().
    std::vector<std::vector<int>> positive_leaves;
    void finalize_indexes();

    bool same_structure(const arithmetic_circuit& o) const {
        return nodes == o.nodes && root == o.root && vars == o.vars &&
               output_nodes == o.output_nodes && event_nodes == o.event_nodes;
    }
};

enum class var_order_kind : uint8_t { min_fill, lexicographic };

struct compile_options {
    var_order_kind order = var_order_kind::min_fill;
    bool elide_summed = true;
    // Maximum number of cached components; once exhausted, compilation
    // proceeds without inserting new entries and the stats flag it.
    size_t cache_budget = std::numeric_limits<size_t>::max();
};

// Decision order over all variables.  min_fill runs the min-fill elimination
// heuristic on the clause interaction graph; lexicographic orders indicators
// by (time, qubit) and parameters last.  With elide_summed, summed variables
// are placed first.
std::vector<int> choose_var_order(const weighted_cnf& cnf, const compile_options& opts);

// Exhaustive DPLL with unit propagation, connected-component decomposition
// (AND nodes), binary decisions (OR nodes) and component caching.  Every
// variable is decided or propagated in every branch, so the result is smooth
// by construction; FALSE children are removed by a final pruning pass.
// An unsatisfiable CNF compiles to a single FALSE node.
arithmetic_circuit compile(const weighted_cnf& cnf, const compile_options& opts = {});

// Inserts (v + not v) gadgets wherever an OR branch fails to mention a query
// variable that its sibling mentions, and at the root for query variables
// missing entirely.  Parameter and summed variables are left alone.
// Idempotent on already-smooth circuits.
arithmetic_circuit smooth(const arithmetic_circuit& ac);

// Structural verification: topological order, decomposability of AND nodes,
// determinism of OR nodes, smoothness over query variables.  Empty iff all
// hold.
std::vector<std::string> check_ddnnf(const arithmetic_circuit& ac);

// Text round trip.  Header `nnf N E V`, one node per line (`L lit`,
// `A k child...`, `O var 2 low high`, `T`, `F`), preceded by `c` metadata
// lines describing the variable table.
std::string serialize_ac(const arithmetic_circuit& ac);
arithmetic_circuit parse_ac(const std::string& text);

compile_stats compile_stats_of(const arithmetic_circuit& ac);

}  // namespace qkc
