#include "qkc/bayesnet.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <sstream>
#include <variant>

namespace qkc {

std::string node_id::label() const {
    std::string s = "q" + std::to_string(qubit) + "m" + std::to_string(time);
    if (event) s += "rv";
    return s;
}

node_id node_id::from_label(const std::string& s) {
    size_t m = s.find('m');
    if (s.size() < 4 || s[0] != 'q' || m == std::string::npos || m < 2)
        throw std::invalid_argument("bad node label '" + s + "'");
    node_id id;
    bool ev = s.size() > m + 2 && s.compare(s.size() - 2, 2, "rv") == 0;
    try {
        size_t pos = 0;
        id.qubit = std::stoi(s.substr(1, m - 1), &pos);
        if (pos != m - 1) throw std::invalid_argument("");
        std::string t = s.substr(m + 1, s.size() - m - 1 - (ev ? 2 : 0));
        id.time = std::stoi(t, &pos);
        if (pos != t.size() || t.empty()) throw std::invalid_argument("");
    } catch (...) {
        throw std::invalid_argument("bad node label '" + s + "'");
    }
    id.event = ev;
    if (id.qubit < 0 || id.time < 0) throw std::invalid_argument("bad node label '" + s + "'");
    return id;
}

int bayes_net::node_index(const node_id& id) const {
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

const bayes_node& bayes_net::node(const node_id& id) const {
    int i = node_index(id);
    if (i < 0) throw std::invalid_argument("unknown node " + id.label());
    return nodes[i];
}

namespace {

// Folds exact 0/1 amplitudes into structural entries; other values become
// params, deduplicated within one table by exact bit pattern.
struct entry_builder {
    param_table& params;
    int op_index;
    std::map<std::pair<uint64_t, uint64_t>, int> seen;

    cat_entry make(cx v, int row, int value) {
        if (v == cx{0.0, 0.0}) return {entry_kind::zero, -1};
        if (v == cx{1.0, 0.0}) return {entry_kind::one, -1};
        auto key = std::make_pair(std::bit_cast<uint64_t>(v.real()),
                                  std::bit_cast<uint64_t>(v.imag()));
        auto it = seen.find(key);
        int id = it != seen.end() ? it->second : params.add(v, {op_index, row, value});
        seen.emplace(key, id);
        return {entry_kind::param, id};
    }
};

bool is_diagonal(const cmatrix& m) {
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (r != c && m.at(r, c) != cx{}) return false;
    return true;
}

}  // namespace

cond_amp_table cat_from_single_qubit_gate(const cmatrix& u, param_table& params, int op_index) {
    if (u.rows != 2 || u.cols != 2)
        throw std::invalid_argument("cat_from_single_qubit_gate: matrix must be 2x2");
    cond_amp_table cat;
    cat.parent_domains = {2};
    cat.node_domain = 2;
    cat.entries.resize(4);
    entry_builder eb{params, op_index, {}};
    for (int b = 0; b < 2; ++b)
        for (int v = 0; v < 2; ++v) cat.at(b, v) = eb.make(u.at(v, b), b, v);
    return cat;
}

cond_amp_table cat_from_controlled_gate(const cmatrix& u, bool control_first,
                                        param_table& params, int op_index) {
    if (u.rows != 4 || u.cols != 4)
        throw std::invalid_argument("cat_from_controlled_gate: matrix must be 4x4");
    auto idx = [&](int control, int target) {
        return control_first ? (control << 1) | target : (target << 1) | control;
    };
    // Monomial with the control value preserved: every column has exactly one
    // nonzero entry and it sits in the same control block.
    for (int col = 0; col < 4; ++col) {
        int nonzero = 0;
        for (int row = 0; row < 4; ++row)
            if (u.at(row, col) != cx{}) ++nonzero;
        if (nonzero != 1)
            throw std::invalid_argument("cat_from_controlled_gate: unitary is not monomial");
    }
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 2; ++t)
            for (int row = 0; row < 4; ++row)
                if (u.at(row, idx(c, t)) != cx{} && row != idx(c, 0) && row != idx(c, 1))
                    throw std::invalid_argument(
                        "cat_from_controlled_gate: control value is not preserved");

    cond_amp_table cat;
    cat.parent_domains = {2, 2};  // (control, target)
    cat.node_domain = 2;
    cat.entries.resize(8);
    entry_builder eb{params, op_index, {}};
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 2; ++t) {
            int row = c * 2 + t;
            for (int v = 0; v < 2; ++v) cat.at(row, v) = eb.make(u.at(idx(c, v), idx(c, t)), row, v);
        }
    return cat;
}

noise_cats cats_from_noise(const std::vector<cmatrix>& kraus, param_table& params, int op_index) {
    int k = static_cast<int>(kraus.size());
    if (k == 0) throw std::invalid_argument("cats_from_noise: empty Kraus set");
    if (k > 16) throw std::invalid_argument("cats_from_noise: too many Kraus operators");

    noise_cats out;
    out.event_cat.parent_domains = {2};
    out.event_cat.node_domain = k;
    out.event_cat.entries.resize(static_cast<size_t>(2) * k);
    entry_builder eb{params, op_index, {}};

    // nonzero_row[b][j]: row of the single nonzero entry of column b of E_j,
    // or -1 when that column vanishes.
    int nonzero_row[2][16];
    bool all_diagonal = true;
    for (int j = 0; j < k; ++j) {
        const cmatrix& e = kraus[j];
        if (e.rows != 2 || e.cols != 2)
            throw std::invalid_argument("cats_from_noise: operators must be 2x2");
        if (!is_diagonal(e)) all_diagonal = false;
        for (int b = 0; b < 2; ++b) {
            int row = -1;
            for (int r = 0; r < 2; ++r)
                if (e.at(r, b) != cx{}) {
                    if (row >= 0)
                        throw std::invalid_argument("cats_from_noise: operator is not column-monomial");
                    row = r;
                }
            nonzero_row[b][j] = row;
            out.event_cat.at(b, j) =
                row < 0 ? cat_entry{entry_kind::zero, -1} : eb.make(e.at(row, b), b, j);
        }
    }

    if (!all_diagonal) {
        cond_amp_table post;
        post.parent_domains = {2, k};  // (input state, event)
        post.node_domain = 2;
        post.entries.resize(static_cast<size_t>(2) * k * 2);
        for (int b = 0; b < 2; ++b)
            for (int j = 0; j < k; ++j) {
                // Blocked (zero-column) combinations keep an inert identity row
                // so every row retains a non-ZERO entry.
                int target = nonzero_row[b][j] < 0 ? b : nonzero_row[b][j];
                for (int v = 0; v < 2; ++v)
                    post.at(b * k + j, v) =
                        cat_entry{v == target ? entry_kind::one : entry_kind::zero, -1};
            }
        out.post_cat = std::move(post);
    }
    return out;
}

std::pair<bayes_net, param_table> circuit_to_bn(const circuit& c) {
    auto diags = validate_circuit(c);
    if (!diags.empty()) {
        std::string msg = "circuit_to_bn: invalid circuit:";
        for (const auto& d : diags) msg += " [" + d + "]";
        throw std::invalid_argument(msg);
    }

    bayes_net bn;
    param_table params;
    bn.num_qubits = c.num_qubits;
    bn.frontier.resize(c.num_qubits);

    for (int q = 0; q < c.num_qubits; ++q) {
        bayes_node root;
        root.id = {q, 0, false};
        root.kind = node_kind::qubit_state;
        root.domain = 2;
        // Parentless row: all values open; constrained only by evidence.
        root.cat.node_domain = 2;
        root.cat.entries = {{entry_kind::one, -1}, {entry_kind::one, -1}};
        bn.nodes.push_back(std::move(root));
        bn.frontier[q] = {q, 0, false};
        bn.initial_evidence[{q, 0, false}] = c.initial_bit(q);
    }

    for (size_t t = 0; t < c.ops.size(); ++t) {
        int time = static_cast<int>(t) + 1;
        if (const auto* g = std::get_if<gate_app>(&c.ops[t])) {
            if (g->kind == gate_kind::swap) {
                std::swap(bn.frontier[g->qubits[0]], bn.frontier[g->qubits[1]]);
                continue;
            }
            cmatrix u = gate_unitary(*g);
            bayes_node node;
            node.kind = node_kind::qubit_state;
            node.domain = 2;
            if (u.rows == 2) {
                int q = g->qubits[0];
                node.id = {q, time, false};
                node.cat = cat_from_single_qubit_gate(u, params, static_cast<int>(t));
                node.cat.parents = {bn.frontier[q]};
                bn.frontier[q] = node.id;
            } else {
                int control = g->qubits[0], target = g->qubits[1];
                node.id = {target, time, false};
                node.cat = cat_from_controlled_gate(u, true, params, static_cast<int>(t));
                node.cat.parents = {bn.frontier[control], bn.frontier[target]};
                bn.frontier[target] = node.id;
            }
            bn.nodes.push_back(std::move(node));
        } else {
            const auto& nz = std::get<noise_app>(c.ops[t]);
            auto kraus = kraus_set(nz);
            auto cats = cats_from_noise(kraus, params, static_cast<int>(t));
            int q = nz.qubit;

            bayes_node event;
            event.id = {q, time, true};
            event.kind = node_kind::noise_event;
            event.domain = static_cast<int>(kraus.size());
            event.cat = std::move(cats.event_cat);
            event.cat.parents = {bn.frontier[q]};
            bn.noise_events.push_back(event.id);
            bn.nodes.push_back(std::move(event));

            if (cats.post_cat) {
                bayes_node post;
                post.id = {q, time, false};
                post.kind = node_kind::qubit_state;
                post.domain = 2;
                post.cat = std::move(*cats.post_cat);
                post.cat.parents = {bn.frontier[q], node_id{q, time, true}};
                bn.frontier[q] = post.id;
                bn.nodes.push_back(std::move(post));
            }
        }
    }

    bn.outputs = bn.frontier;
    return {std::move(bn), std::move(params)};
}

std::string describe_bn(const bayes_net& bn, const param_table& params) {
    std::ostringstream out;
    out << "bayes_net qubits=" << bn.num_qubits << " nodes=" << bn.nodes.size() << "\n";
    for (const auto& n : bn.nodes) {
        out << (n.kind == node_kind::noise_event ? "event " : "state ") << n.id.label()
            << " domain=" << n.domain << " parents=[";
        for (size_t i = 0; i < n.cat.parents.size(); ++i)
            out << (i ? " " : "") << n.cat.parents[i].label();
        out << "]\n";
        for (int r = 0; r < n.cat.rows(); ++r) {
            out << "  row " << r << ":";
            for (int v = 0; v < n.cat.node_domain; ++v) {
                const cat_entry& e = n.cat.at(r, v);
                switch (e.kind) {
                    case entry_kind::zero: out << " 0"; break;
                    case entry_kind::one: out << " 1"; break;
                    case entry_kind::param: {
                        cx val = params.values[e.param];
                        out << " p" << e.param << "=(" << format_double(val.real()) << ","
                            << format_double(val.imag()) << ")";
                        break;
                    }
                }
            }
            out << "\n";
        }
    }
    out << "outputs:";
    for (const auto& id : bn.outputs) out << " " << id.label();
    out << "\nevents:";
    for (const auto& id : bn.noise_events) out << " " << id.label();
    out << "\n";
    return out.str();
}

}  // namespace qkc
