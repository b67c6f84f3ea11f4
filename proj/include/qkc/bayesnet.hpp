#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkc/circuit.hpp"
#include "qkc/common.hpp"

namespace qkc {

// Identifies a network variable.  Qubit-state nodes are written `q{i}m{t}`
// (qubit i after the t-th circuit op); noise-event nodes append `rv`.
struct node_id {
    int qubit = 0;
    int time = 0;
    bool event = false;

    auto operator<=>(const node_id&) const = default;
    std::string label() const;
    // Parses a label back; throws std::invalid_argument on malformed input.
    static node_id from_label(const std::string& s);
};

enum class entry_kind : uint8_t { zero, one, param };

struct cat_entry {
    entry_kind kind = entry_kind::zero;
    int param = -1;  // valid when kind == param

    bool operator==(const cat_entry&) const = default;
};

// Conditional amplitude table: rows indexed by the parent value tuple
// (first parent most significant), columns by this node's value.
struct cond_amp_table {
    std::vector<node_id> parents;
    std::vector<int> parent_domains;  // parallel to parents
    int node_domain = 2;
    std::vector<cat_entry> entries;   // rows() x node_domain, row-major

    int rows() const {
        int r = 1;
        for (int d : parent_domains) r *= d;
        return r;
    }
    const cat_entry& at(int row, int value) const {
        return entries[static_cast<size_t>(row) * node_domain + value];
    }
    cat_entry& at(int row, int value) {
        return entries[static_cast<size_t>(row) * node_domain + value];
    }
};

enum class node_kind : uint8_t { qubit_state, noise_event };

struct bayes_node {
    node_id id;
    node_kind kind = node_kind::qubit_state;
    int domain = 2;
    cond_amp_table cat;
};

// Numeric side table: param ids index into `values`; provenance records
// where each value came from (op index and table cell) for debugging.
struct param_provenance {
    int op_index = -1;
    int row = 0;
    int value = 0;
};

struct param_table {
    std::vector<cx> values;
    std::vector<param_provenance> provenance;

    int add(cx v, param_provenance where) {
        values.push_back(v);
        provenance.push_back(where);
        return static_cast<int>(values.size()) - 1;
    }
    size_t size() const { return values.size(); }
};

struct bayes_net {
    int num_qubits = 0;
    std::vector<bayes_node> nodes;              // topological order
    std::vector<node_id> frontier;              // latest state node per qubit
    std::vector<node_id> outputs;               // frontier at end of circuit
    std::vector<node_id> noise_events;          // circuit order
    std::map<node_id, int> initial_evidence;    // root nodes -> initial bit

    // Index of a node in `nodes`, or -1.
    int node_index(const node_id& id) const;
    const bayes_node& node(const node_id& id) const;
};

// Table for a single-qubit gate: entry(parent b, value b') = u[b', b]
// (the transpose rule).  Exact 0/1 entries fold to ZERO/ONE; the rest become
// params, deduplicated within the table.
cond_amp_table cat_from_single_qubit_gate(const cmatrix& u, param_table& params, int op_index);

// Table for a monomial two-qubit gate that preserves one qubit (the control).
// Parents are (control, target) and the table gives the new target value's
// amplitude.  control_first says whether u's high-order index bit is the
// control.  Throws if u is not monomial or does not preserve the control.
cond_amp_table cat_from_controlled_gate(const cmatrix& u, bool control_first,
                                        param_table& params, int op_index);

struct noise_cats {
    cond_amp_table event_cat;
    std::optional<cond_amp_table> post_cat;  // absent when all operators are diagonal
};

// Tables for a noise channel.  event_cat(parent b, value j) is the single
// nonzero entry of column b of E_j (ZERO when that column vanishes); post_cat
// is the deterministic row-index map and is omitted when every operator is
// diagonal, since then the state value cannot change.
noise_cats cats_from_noise(const std::vector<cmatrix>& kraus, param_table& params, int op_index);

// Converts a validated circuit into a Bayesian network plus its numeric
// parameter table.  Throws std::invalid_argument when validate_circuit
// reports problems.
std::pair<bayes_net, param_table> circuit_to_bn(const circuit& c);

// Debug rendering of the network (node list, parents, tables); not a
// stability contract.
std::string describe_bn(const bayes_net& bn, const param_table& params);

}  // namespace qkc
