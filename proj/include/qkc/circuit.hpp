#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qkc/common.hpp"

namespace qkc {

// Closed set of gates understood by the whole toolchain.  `custom` carries an
// explicit unitary and is only constructible through the API (it has no text
// form); validate_circuit reports whether such a gate is representable.
enum class gate_kind {
    h, x, y, z, s, t,
    rx, ry, rz,          // one angle
    cnot, cz, swap,
    cphase,              // one angle
    custom,
};

enum class noise_kind {
    bit_flip,                  // p
    phase_flip,                // p
    depolarizing,              // p, split evenly over X/Y/Z
    asym_depolarizing,         // px py pz
    amplitude_damping,         // gamma
    generalized_amplitude_damping,  // gamma p
    phase_damping,             // gamma
};

struct gate_app {
    gate_kind kind;
    std::vector<int> qubits;
    std::vector<double> params;
    // Only meaningful for gate_kind::custom.
    std::string custom_name;
    cmatrix custom_unitary;

    bool operator==(const gate_app& o) const {
        return kind == o.kind && qubits == o.qubits && params == o.params &&
               custom_name == o.custom_name && custom_unitary.data == o.custom_unitary.data;
    }
};

struct noise_app {
    noise_kind kind;
    int qubit = 0;
    std::vector<double> params;

    bool operator==(const noise_app& o) const = default;
};

using circuit_op = std::variant<gate_app, noise_app>;

struct circuit {
    int num_qubits = 0;
    std::vector<int> initial;  // one 0/1 entry per qubit; empty means all zero
    std::vector<circuit_op> ops;

    bool operator==(const circuit& o) const = default;

    int initial_bit(int qubit) const {
        return initial.empty() ? 0 : initial[qubit];
    }
};

// Number of arguments each op takes in the text form: {qubit count, param count}.
struct op_arity {
    int qubits;
    int params;
};

// Unitary matrix of a gate: 2x2 for single-qubit kinds, 4x4 for two-qubit
// kinds with the first listed qubit as the high-order index bit.
cmatrix gate_unitary(const gate_app& g);

// Kraus operators of a noise op.  Mixture channels are returned as
// sqrt(p_k) * U_k; operators whose weight vanishes are dropped, so the list
// never contains an all-zero matrix.
std::vector<cmatrix> kraus_set(const noise_app& n);

// Parses the line-oriented text form.  Throws std::runtime_error with a
// 1-based line number on syntax errors, unknown op names, arity mismatches,
// or out-of-range qubit indices.
circuit parse_circuit(const std::string& text);

// Inverse of parse_circuit: emits a text form that parses back to an equal
// circuit (angles and probabilities are printed with full precision).
// Throws if the circuit contains a custom gate.
std::string serialize_circuit(const circuit& c);

// Semantic checks that parsing cannot catch: probability ranges, Kraus
// completeness, unitarity and representability of custom gates.  Returns one
// human-readable message per problem; empty means valid.
std::vector<std::string> validate_circuit(const circuit& c);

}  // namespace qkc
