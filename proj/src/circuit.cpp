#include "qkc/circuit.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

namespace qkc {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0') throw std::invalid_argument("bad number '" + tok + "'");
    return v;
}

namespace {

const double kSqrtHalf = 1.0 / std::sqrt(2.0);

cmatrix mat2(cx a, cx b, cx c, cx d) {
    cmatrix m(2, 2);
    m.at(0, 0) = a; m.at(0, 1) = b;
    m.at(1, 0) = c; m.at(1, 1) = d;
    return m;
}

cmatrix diag4(cx a, cx b, cx c, cx d) {
    cmatrix m(4, 4);
    m.at(0, 0) = a; m.at(1, 1) = b; m.at(2, 2) = c; m.at(3, 3) = d;
    return m;
}

cmatrix pauli_x() { return mat2(0, 1, 1, 0); }
cmatrix pauli_y() { return mat2(0, cx(0, -1), cx(0, 1), 0); }
cmatrix pauli_z() { return mat2(1, 0, 0, -1); }

cmatrix scaled(cmatrix m, double s) {
    for (auto& v : m.data) v *= s;
    return m;
}

bool all_zero(const cmatrix& m) {
    for (const auto& v : m.data)
        if (v != cx{}) return false;
    return true;
}

struct op_spec {
    op_arity arity;
    bool is_noise;
    gate_kind gate;
    noise_kind noise;
};

const std::map<std::string, op_spec>& op_table() {
    static const std::map<std::string, op_spec> t = {
        {"h", {{1, 0}, false, gate_kind::h, {}}},
        {"x", {{1, 0}, false, gate_kind::x, {}}},
        {"y", {{1, 0}, false, gate_kind::y, {}}},
        {"z", {{1, 0}, false, gate_kind::z, {}}},
        {"s", {{1, 0}, false, gate_kind::s, {}}},
        {"t", {{1, 0}, false, gate_kind::t, {}}},
        {"rx", {{1, 1}, false, gate_kind::rx, {}}},
        {"ry", {{1, 1}, false, gate_kind::ry, {}}},
        {"rz", {{1, 1}, false, gate_kind::rz, {}}},
        {"cnot", {{2, 0}, false, gate_kind::cnot, {}}},
        {"cz", {{2, 0}, false, gate_kind::cz, {}}},
        {"swap", {{2, 0}, false, gate_kind::swap, {}}},
        {"cphase", {{2, 1}, false, gate_kind::cphase, {}}},
        {"bf", {{1, 1}, true, {}, noise_kind::bit_flip}},
        {"pf", {{1, 1}, true, {}, noise_kind::phase_flip}},
        {"dep", {{1, 1}, true, {}, noise_kind::depolarizing}},
        {"adep", {{1, 3}, true, {}, noise_kind::asym_depolarizing}},
        {"ad", {{1, 1}, true, {}, noise_kind::amplitude_damping}},
        {"gad", {{1, 2}, true, {}, noise_kind::generalized_amplitude_damping}},
        {"pd", {{1, 1}, true, {}, noise_kind::phase_damping}},
    };
    return t;
}

const char* gate_name(gate_kind k) {
    switch (k) {
        case gate_kind::h: return "h";
        case gate_kind::x: return "x";
        case gate_kind::y: return "y";
        case gate_kind::z: return "z";
        case gate_kind::s: return "s";
        case gate_kind::t: return "t";
        case gate_kind::rx: return "rx";
        case gate_kind::ry: return "ry";
        case gate_kind::rz: return "rz";
        case gate_kind::cnot: return "cnot";
        case gate_kind::cz: return "cz";
        case gate_kind::swap: return "swap";
        case gate_kind::cphase: return "cphase";
        case gate_kind::custom: return "custom";
    }
    return "?";
}

const char* noise_name(noise_kind k) {
    switch (k) {
        case noise_kind::bit_flip: return "bf";
        case noise_kind::phase_flip: return "pf";
        case noise_kind::depolarizing: return "dep";
        case noise_kind::asym_depolarizing: return "adep";
        case noise_kind::amplitude_damping: return "ad";
        case noise_kind::generalized_amplitude_damping: return "gad";
        case noise_kind::phase_damping: return "pd";
    }
    return "?";
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::string body = line.substr(0, line.find('#'));
    std::istringstream in(body);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(std::move(t));
    return toks;
}

}  // namespace

cmatrix gate_unitary(const gate_app& g) {
    switch (g.kind) {
        case gate_kind::h: return mat2(kSqrtHalf, kSqrtHalf, kSqrtHalf, -kSqrtHalf);
        case gate_kind::x: return pauli_x();
        case gate_kind::y: return pauli_y();
        case gate_kind::z: return pauli_z();
        case gate_kind::s: return mat2(1, 0, 0, cx(0, 1));
        case gate_kind::t: return mat2(1, 0, 0, std::polar(1.0, M_PI / 4));
        case gate_kind::rx: {
            double h = g.params.at(0) / 2;
            return mat2(std::cos(h), cx(0, -std::sin(h)), cx(0, -std::sin(h)), std::cos(h));
        }
        case gate_kind::ry: {
            double h = g.params.at(0) / 2;
            return mat2(std::cos(h), -std::sin(h), std::sin(h), std::cos(h));
        }
        case gate_kind::rz: {
            double h = g.params.at(0) / 2;
            return mat2(std::polar(1.0, -h), 0, 0, std::polar(1.0, h));
        }
        case gate_kind::cnot: {
            cmatrix m(4, 4);
            m.at(0, 0) = m.at(1, 1) = 1;
            m.at(2, 3) = m.at(3, 2) = 1;
            return m;
        }
        case gate_kind::cz: return diag4(1, 1, 1, -1);
        case gate_kind::cphase: return diag4(1, 1, 1, std::polar(1.0, g.params.at(0)));
        case gate_kind::swap: {
            cmatrix m(4, 4);
            m.at(0, 0) = m.at(3, 3) = 1;
            m.at(1, 2) = m.at(2, 1) = 1;
            return m;
        }
        case gate_kind::custom: return g.custom_unitary;
    }
    throw std::logic_error("gate_unitary: bad kind");
}

std::vector<cmatrix> kraus_set(const noise_app& n) {
    const auto& p = n.params;
    std::vector<cmatrix> ops;
    switch (n.kind) {
        case noise_kind::bit_flip:
            ops = {scaled(cmatrix::identity(2), std::sqrt(1 - p.at(0))),
                   scaled(pauli_x(), std::sqrt(p.at(0)))};
            break;
        case noise_kind::phase_flip:
            ops = {scaled(cmatrix::identity(2), std::sqrt(1 - p.at(0))),
                   scaled(pauli_z(), std::sqrt(p.at(0)))};
            break;
        case noise_kind::depolarizing: {
            double q = p.at(0) / 3;
            ops = {scaled(cmatrix::identity(2), std::sqrt(1 - p.at(0))),
                   scaled(pauli_x(), std::sqrt(q)), scaled(pauli_y(), std::sqrt(q)),
                   scaled(pauli_z(), std::sqrt(q))};
            break;
        }
        case noise_kind::asym_depolarizing:
            ops = {scaled(cmatrix::identity(2), std::sqrt(1 - p.at(0) - p.at(1) - p.at(2))),
                   scaled(pauli_x(), std::sqrt(p.at(0))), scaled(pauli_y(), std::sqrt(p.at(1))),
                   scaled(pauli_z(), std::sqrt(p.at(2)))};
            break;
        case noise_kind::amplitude_damping: {
            double g = p.at(0);
            ops = {mat2(1, 0, 0, std::sqrt(1 - g)), mat2(0, std::sqrt(g), 0, 0)};
            break;
        }
        case noise_kind::generalized_amplitude_damping: {
            double g = p.at(0), q = p.at(1);
            ops = {scaled(mat2(1, 0, 0, std::sqrt(1 - g)), std::sqrt(q)),
                   scaled(mat2(0, std::sqrt(g), 0, 0), std::sqrt(q)),
                   scaled(mat2(std::sqrt(1 - g), 0, 0, 1), std::sqrt(1 - q)),
                   scaled(mat2(0, 0, std::sqrt(g), 0), std::sqrt(1 - q))};
            break;
        }
        case noise_kind::phase_damping: {
            double g = p.at(0);
            ops = {mat2(1, 0, 0, std::sqrt(1 - g)), mat2(0, 0, 0, std::sqrt(g))};
            break;
        }
    }
    // Zero-weight components contribute nothing and would break the
    // one-event-per-operator bookkeeping downstream, so drop them.
    std::vector<cmatrix> out;
    for (auto& m : ops)
        if (!all_zero(m)) out.push_back(std::move(m));
    return out;
}

circuit parse_circuit(const std::string& text) {
    circuit c;
    bool saw_qubits = false, saw_init = false, saw_op = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        const std::string& head = toks[0];
        if (!saw_qubits) {
            if (head != "qubits") parse_fail(lineno, "expected 'qubits N' as the first statement");
            if (toks.size() != 2) parse_fail(lineno, "expected 'qubits N'");
            int n = 0;
            try {
                size_t pos = 0;
                n = std::stoi(toks[1], &pos);
                if (pos != toks[1].size()) throw std::invalid_argument("");
            } catch (...) {
                parse_fail(lineno, "bad qubit count '" + toks[1] + "'");
            }
            if (n < 1) parse_fail(lineno, "qubit count must be positive");
            c.num_qubits = n;
            saw_qubits = true;
            continue;
        }
        if (head == "qubits") parse_fail(lineno, "duplicate 'qubits' statement");
        if (head == "init") {
            if (saw_init) parse_fail(lineno, "duplicate 'init' statement");
            if (saw_op) parse_fail(lineno, "'init' must precede all ops");
            if (toks.size() != 2) parse_fail(lineno, "expected 'init BITSTRING'");
            const std::string& bits = toks[1];
            if ((int)bits.size() != c.num_qubits)
                parse_fail(lineno, "init bitstring length " + std::to_string(bits.size()) +
                                       " does not match qubit count " +
                                       std::to_string(c.num_qubits));
            c.initial.assign(c.num_qubits, 0);
            for (int i = 0; i < c.num_qubits; ++i) {
                if (bits[i] != '0' && bits[i] != '1')
                    parse_fail(lineno, "init bitstring must contain only 0 and 1");
                c.initial[i] = bits[i] - '0';
            }
            saw_init = true;
            continue;
        }
        auto it = op_table().find(head);
        if (it == op_table().end()) parse_fail(lineno, "unknown op '" + head + "'");
        const op_spec& spec = it->second;
        int want = spec.arity.qubits + spec.arity.params;
        if ((int)toks.size() - 1 != want)
            parse_fail(lineno, "'" + head + "' expects " + std::to_string(want) +
                                   " arguments, got " + std::to_string(toks.size() - 1));
        std::vector<int> qubits;
        for (int i = 0; i < spec.arity.qubits; ++i) {
            int q = 0;
            try {
                size_t pos = 0;
                q = std::stoi(toks[1 + i], &pos);
                if (pos != toks[1 + i].size()) throw std::invalid_argument("");
            } catch (...) {
                parse_fail(lineno, "bad qubit index '" + toks[1 + i] + "'");
            }
            if (q < 0 || q >= c.num_qubits)
                parse_fail(lineno, "qubit index " + std::to_string(q) + " out of range [0, " +
                                       std::to_string(c.num_qubits) + ")");
            qubits.push_back(q);
        }
        if (qubits.size() == 2 && qubits[0] == qubits[1])
            parse_fail(lineno, "'" + head + "' requires two distinct qubits");
        std::vector<double> params;
        for (int i = 0; i < spec.arity.params; ++i) {
            try {
                params.push_back(parse_double(toks[1 + spec.arity.qubits + i]));
            } catch (const std::exception&) {
                parse_fail(lineno, "bad numeric argument '" + toks[1 + spec.arity.qubits + i] + "'");
            }
        }
        if (spec.is_noise) {
            c.ops.push_back(noise_app{spec.noise, qubits[0], std::move(params)});
        } else {
            gate_app g;
            g.kind = spec.gate;
            g.qubits = std::move(qubits);
            g.params = std::move(params);
            c.ops.push_back(std::move(g));
        }
        saw_op = true;
    }
    if (!saw_qubits) throw std::runtime_error("line 1: missing 'qubits N' statement");
    return c;
}

std::string serialize_circuit(const circuit& c) {
    std::ostringstream out;
    out << "qubits " << c.num_qubits << "\n";
    if (!c.initial.empty()) {
        out << "init ";
        for (int i = 0; i < c.num_qubits; ++i) out << c.initial_bit(i);
        out << "\n";
    }
    for (const auto& op : c.ops) {
        if (const auto* g = std::get_if<gate_app>(&op)) {
            if (g->kind == gate_kind::custom)
                throw std::runtime_error("serialize_circuit: custom gates have no text form");
            out << gate_name(g->kind);
            for (int q : g->qubits) out << ' ' << q;
            for (double p : g->params) out << ' ' << format_double(p);
        } else {
            const auto& n = std::get<noise_app>(op);
            out << noise_name(n.kind) << ' ' << n.qubit;
            for (double p : n.params) out << ' ' << format_double(p);
        }
        out << "\n";
    }
    return out.str();
}

namespace {

// A two-qubit unitary is representable as a conditional table on the second
// qubit only if it is monomial (one nonzero entry per column) and the first
// qubit's value passes through unchanged, i.e. every column (c,t) has support
// only on rows (c,*).  Structural zeros are exact: the table takes entries
// verbatim, so numerical dust would become spurious parameters.
bool is_monomial(const cmatrix& u) {
    for (int col = 0; col < u.cols; ++col) {
        int nonzero = 0;
        for (int row = 0; row < u.rows; ++row)
            if (u.at(row, col) != cx{}) ++nonzero;
        if (nonzero != 1) return false;
    }
    return true;
}

bool preserves_first_qubit(const cmatrix& u) {
    for (int col = 0; col < 4; ++col)
        for (int row = 0; row < 4; ++row)
            if (u.at(row, col) != cx{} && (row >> 1) != (col >> 1)) return false;
    return true;
}

bool is_unitary(const cmatrix& u, double tol) {
    cmatrix p = u.dagger() * u;
    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c)
            if (std::abs(p.at(r, c) - (r == c ? cx(1) : cx(0))) > tol) return false;
    return true;
}

}  // namespace

std::vector<std::string> validate_circuit(const circuit& c) {
    std::vector<std::string> diags;
    auto complain = [&](int op_index, const std::string& msg) {
        diags.push_back("op " + std::to_string(op_index) + ": " + msg);
    };
    if (c.num_qubits < 1) diags.push_back("circuit has no qubits");
    if (!c.initial.empty() && (int)c.initial.size() != c.num_qubits)
        diags.push_back("initial state length does not match qubit count");
    for (int b : c.initial)
        if (b != 0 && b != 1) {
            diags.push_back("initial state must be a 0/1 bitstring");
            break;
        }
    for (size_t i = 0; i < c.ops.size(); ++i) {
        if (const auto* g = std::get_if<gate_app>(&c.ops[i])) {
            int want_qubits;
            size_t want_params;
            switch (g->kind) {
                case gate_kind::rx: case gate_kind::ry: case gate_kind::rz:
                    want_qubits = 1; want_params = 1; break;
                case gate_kind::cphase:
                    want_qubits = 2; want_params = 1; break;
                case gate_kind::cnot: case gate_kind::cz: case gate_kind::swap:
                    want_qubits = 2; want_params = 0; break;
                case gate_kind::custom:
                    want_qubits = g->custom_unitary.rows == 4 ? 2 : 1; want_params = 0; break;
                default:
                    want_qubits = 1; want_params = 0; break;
            }
            if ((int)g->qubits.size() != want_qubits)
                complain(i, "wrong qubit count for gate");
            if (g->params.size() != want_params)
                complain(i, "wrong parameter count for gate");
            bool in_range = true;
            for (int q : g->qubits)
                if (q < 0 || q >= c.num_qubits) {
                    complain(i, "qubit index out of range");
                    in_range = false;
                }
            if (g->qubits.size() == 2 && g->qubits[0] == g->qubits[1])
                complain(i, "two-qubit gate requires distinct qubits");
            if (g->kind == gate_kind::custom && in_range) {
                const cmatrix& u = g->custom_unitary;
                if (!((u.rows == 2 && u.cols == 2) || (u.rows == 4 && u.cols == 4))) {
                    complain(i, "custom gate must be 2x2 or 4x4");
                } else if (!is_unitary(u, 1e-12)) {
                    complain(i, "custom gate is not unitary");
                } else if (u.rows == 4 && !is_monomial(u)) {
                    complain(i, "gate not encodable as a conditional table: "
                                "unitary is not monomial; decompose into supported gates");
                } else if (u.rows == 4 && !preserves_first_qubit(u)) {
                    complain(i, "gate not encodable as a conditional table: "
                                "first qubit is not preserved; decompose into supported gates");
                }
            }
        } else {
            const auto& n = std::get<noise_app>(c.ops[i]);
            if (n.qubit < 0 || n.qubit >= c.num_qubits) complain(i, "qubit index out of range");
            auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
            bool range_ok = true;
            switch (n.kind) {
                case noise_kind::bit_flip:
                case noise_kind::phase_flip:
                case noise_kind::depolarizing:
                case noise_kind::amplitude_damping:
                case noise_kind::phase_damping:
                    range_ok = in01(n.params.at(0));
                    if (!range_ok) complain(i, "noise parameter must lie in [0, 1]");
                    break;
                case noise_kind::asym_depolarizing: {
                    double s = n.params.at(0) + n.params.at(1) + n.params.at(2);
                    range_ok = in01(n.params.at(0)) && in01(n.params.at(1)) &&
                               in01(n.params.at(2)) && s <= 1.0 + 1e-15;
                    if (!range_ok)
                        complain(i, "component probabilities must be nonnegative and sum to at most 1");
                    break;
                }
                case noise_kind::generalized_amplitude_damping:
                    range_ok = in01(n.params.at(0)) && in01(n.params.at(1));
                    if (!range_ok) complain(i, "noise parameters must lie in [0, 1]");
                    break;
            }
            if (range_ok) {
                auto ops = kraus_set(n);
                cmatrix sum(2, 2);
                for (const auto& e : ops) {
                    cmatrix t = e.dagger() * e;
                    for (size_t k = 0; k < t.data.size(); ++k) sum.data[k] += t.data[k];
                }
                bool complete = true;
                for (int r = 0; r < 2; ++r)
                    for (int col = 0; col < 2; ++col)
                        if (std::abs(sum.at(r, col) - (r == col ? cx(1) : cx(0))) > 1e-12)
                            complete = false;
                if (!complete) complain(i, "Kraus operators do not satisfy completeness");
            }
        }
    }
    return diags;
}

}  // namespace qkc
