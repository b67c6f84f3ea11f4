#include "qkc/cnf.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace qkc {

namespace {

// True when the row has a ONE cell; such a row is deterministic (row
// coherence forces every other cell to ZERO), so a single implication clause
// captures it and the per-cell blocking clauses would be redundant.
int one_cell_of_row(const cond_amp_table& cat, int row) {
    for (int v = 0; v < cat.node_domain; ++v)
        if (cat.at(row, v).kind == entry_kind::one) return v;
    return -1;
}

}  // namespace

weighted_cnf bn_to_cnf(const bayes_net& bn, const param_table& params) {
    weighted_cnf cnf;
    cnf.output_nodes = bn.outputs;
    cnf.event_nodes = bn.noise_events;

    // Variable layout: indicators per node in network order, then parameters
    // by id.  DIMACS indices are 1-based.
    std::map<std::pair<node_id, int>, int> ind;  // (node, value) -> 1-based var
    for (const auto& n : bn.nodes)
        for (int v = 0; v < n.domain; ++v) {
            cnf.vars.push_back({cnf_var_kind::indicator, n.id, v, -1});
            cnf.weights.push_back(1.0);
            ind[{n.id, v}] = cnf.num_vars();
        }
    int param_base = cnf.num_vars();
    for (size_t p = 0; p < params.size(); ++p) {
        cnf.vars.push_back({cnf_var_kind::parameter, {}, 0, static_cast<int>(p)});
        cnf.weights.push_back(params.values[p]);
    }
    auto pvar = [&](int id) { return param_base + id + 1; };

    std::vector<bool> is_query(cnf.vars.size() + 1, false);
    auto mark_query = [&](const node_id& id) {
        int n = bn.node_index(id);
        for (int v = 0; v < bn.nodes[n].domain; ++v) is_query[ind.at({id, v})] = true;
    };
    for (const auto& id : bn.outputs) mark_query(id);
    for (const auto& id : bn.noise_events) mark_query(id);

    for (const auto& n : bn.nodes) {
        // Exactly-one over this node's value indicators.
        std::vector<int> alo;
        for (int v = 0; v < n.domain; ++v) alo.push_back(ind.at({n.id, v}));
        cnf.clauses.push_back(alo);
        for (int a = 0; a < n.domain; ++a)
            for (int b = a + 1; b < n.domain; ++b)
                cnf.clauses.push_back({-ind.at({n.id, a}), -ind.at({n.id, b})});

        if (auto it = bn.initial_evidence.find(n.id); it != bn.initial_evidence.end())
            cnf.clauses.push_back({ind.at({n.id, it->second})});

        // Root nodes carry no table constraints: their all-ONE parentless row
        // is vacuous and is handled entirely by evidence.
        if (n.cat.parents.empty()) continue;

        // Literals negating "parents take the tuple encoded by row".
        auto parent_negation = [&](int row) {
            std::vector<int> lits;
            for (size_t pi = n.cat.parents.size(); pi-- > 0;) {
                int d = n.cat.parent_domains[pi];
                lits.push_back(-ind.at({n.cat.parents[pi], row % d}));
                row /= d;
            }
            std::reverse(lits.begin(), lits.end());
            return lits;
        };

        std::vector<int> owned_params;  // table's params in first-use order
        for (int r = 0; r < n.cat.rows(); ++r) {
            std::vector<int> base = parent_negation(r);
            int det = one_cell_of_row(n.cat, r);
            if (det >= 0) {
                auto clause = base;
                clause.push_back(ind.at({n.id, det}));
                cnf.clauses.push_back(std::move(clause));
                continue;
            }
            for (int v = 0; v < n.cat.node_domain; ++v) {
                const cat_entry& e = n.cat.at(r, v);
                if (e.kind == entry_kind::zero) {
                    auto clause = base;
                    clause.push_back(-ind.at({n.id, v}));
                    cnf.clauses.push_back(std::move(clause));
                } else {
                    auto clause = base;
                    clause.push_back(-ind.at({n.id, v}));
                    clause.push_back(pvar(e.param));
                    cnf.clauses.push_back(std::move(clause));
                    if (std::find(owned_params.begin(), owned_params.end(), e.param) ==
                        owned_params.end())
                        owned_params.push_back(e.param);
                }
            }
        }

        // Reverse direction: a parameter variable may only hold when the
        // active cell of its table is one of its own.  Blocking every other
        // non-ZERO cell makes the parameter functionally defined, so each
        // value assignment extends to exactly one model.
        std::sort(owned_params.begin(), owned_params.end());
        for (int p : owned_params)
            for (int r = 0; r < n.cat.rows(); ++r)
                for (int v = 0; v < n.cat.node_domain; ++v) {
                    const cat_entry& e = n.cat.at(r, v);
                    if (e.kind == entry_kind::zero) continue;
                    if (e.kind == entry_kind::param && e.param == p) continue;
                    std::vector<int> clause = {-pvar(p)};
                    for (int lit : parent_negation(r)) clause.push_back(lit);
                    clause.push_back(-ind.at({n.id, v}));
                    cnf.clauses.push_back(std::move(clause));
                }
    }

    for (int v = 1; v <= cnf.num_vars(); ++v) {
        if (cnf.vars[v - 1].kind != cnf_var_kind::indicator) continue;
        (is_query[v] ? cnf.query_vars : cnf.summed_vars).push_back(v);
    }
    return cnf;
}

weighted_cnf simplify_units(const weighted_cnf& cnf) {
    int nv = cnf.num_vars();
    std::vector<std::optional<bool>> assigned(nv + 1);
    std::vector<std::vector<int>> clauses = cnf.clauses;
    std::vector<bool> gone(clauses.size(), false);

    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t ci = 0; ci < clauses.size(); ++ci) {
            if (gone[ci]) continue;
            auto& cl = clauses[ci];
            bool satisfied = false;
            std::vector<int> live;
            for (int lit : cl) {
                auto a = assigned[std::abs(lit)];
                if (!a) {
                    live.push_back(lit);
                } else if (*a == (lit > 0)) {
                    satisfied = true;
                    break;
                }
            }
            if (satisfied) {
                gone[ci] = true;
                changed = true;
                continue;
            }
            if (live.empty())
                throw std::runtime_error("simplify_units: derived empty clause (inconsistent CNF)");
            if (live.size() != cl.size()) {
                cl = live;
                changed = true;
            }
            if (live.size() == 1) {
                int lit = live[0];
                assigned[std::abs(lit)] = lit > 0;
                gone[ci] = true;
                changed = true;
            }
        }
    }

    weighted_cnf out;
    out.query_vars.reserve(cnf.query_vars.size());
    out.summed_vars.reserve(cnf.summed_vars.size());
    out.fixed = cnf.fixed;
    out.output_nodes = cnf.output_nodes;
    out.event_nodes = cnf.event_nodes;

    std::vector<int> remap(nv + 1, 0);
    for (int v = 1; v <= nv; ++v) {
        if (assigned[v]) {
            bool val = *assigned[v];
            cx w = 1.0;
            if (cnf.vars[v - 1].kind == cnf_var_kind::parameter && val) w = cnf.weights[v - 1];
            out.fixed.push_back({cnf.vars[v - 1], val, w});
        } else {
            out.vars.push_back(cnf.vars[v - 1]);
            out.weights.push_back(cnf.weights[v - 1]);
            remap[v] = out.num_vars();
        }
    }
    for (int v : cnf.query_vars)
        if (remap[v]) out.query_vars.push_back(remap[v]);
    for (int v : cnf.summed_vars)
        if (remap[v]) out.summed_vars.push_back(remap[v]);
    for (size_t ci = 0; ci < clauses.size(); ++ci) {
        if (gone[ci]) continue;
        auto cl = clauses[ci];
        for (int& lit : cl) lit = lit > 0 ? remap[lit] : -remap[-lit];
        out.clauses.push_back(std::move(cl));
    }
    return out;
}

std::string emit_dimacs(const weighted_cnf& cnf) {
    std::ostringstream out;
    out << "p cnf " << cnf.num_vars() << ' ' << cnf.clauses.size() << "\n";
    for (int v = 1; v <= cnf.num_vars(); ++v) {
        const cnf_var& cv = cnf.vars[v - 1];
        if (cv.kind == cnf_var_kind::indicator)
            out << "c ind " << v << ' ' << cv.node.label() << ' ' << cv.value << "\n";
    }
    for (int v = 1; v <= cnf.num_vars(); ++v)
        if (cnf.vars[v - 1].kind == cnf_var_kind::parameter)
            out << "c p " << v << ' ' << cnf.vars[v - 1].param << "\n";
    for (int v = 1; v <= cnf.num_vars(); ++v)
        if (cnf.vars[v - 1].kind == cnf_var_kind::parameter)
            out << "c w " << v << ' ' << format_double(cnf.weights[v - 1].real()) << ' '
                << format_double(cnf.weights[v - 1].imag()) << "\n";
    for (int v : cnf.query_vars) out << "c q " << v << "\n";
    for (int v : cnf.summed_vars) out << "c s " << v << "\n";
    if (!cnf.output_nodes.empty()) {
        out << "c o";
        for (const auto& id : cnf.output_nodes) out << ' ' << id.label();
        out << "\n";
    }
    if (!cnf.event_nodes.empty()) {
        out << "c e";
        for (const auto& id : cnf.event_nodes) out << ' ' << id.label();
        out << "\n";
    }
    for (const auto& f : cnf.fixed) {
        if (f.var.kind == cnf_var_kind::indicator)
            out << "c fx " << f.var.node.label() << ' ' << f.var.value << ' ' << (f.value ? 1 : 0)
                << "\n";
        else
            out << "c fxp " << f.var.param << ' ' << (f.value ? 1 : 0) << ' '
                << format_double(f.weight.real()) << ' ' << format_double(f.weight.imag()) << "\n";
    }
    for (const auto& cl : cnf.clauses) {
        for (int lit : cl) out << lit << ' ';
        out << "0\n";
    }
    return out.str();
}

namespace {

struct dimacs_parser {
    weighted_cnf cnf;
    int declared_vars = -1;
    size_t declared_clauses = 0;
    std::vector<bool> has_meaning;
    std::vector<bool> is_param;
    std::vector<bool> has_param_id;
    bool saw_marker = false;  // any c q / c s line
    std::vector<int> pending;  // literals of a clause spanning lines
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) {
        throw std::runtime_error("parse_dimacs: line " + std::to_string(line_no) + ": " + msg);
    }

    int parse_var(const std::string& tok) {
        int v = parse_int(tok);
        if (v < 1 || v > declared_vars) fail("variable index out of range");
        return v;
    }

    int parse_int(const std::string& tok) {
        try {
            size_t pos = 0;
            int v = std::stoi(tok, &pos);
            if (pos != tok.size()) fail("bad integer '" + tok + "'");
            return v;
        } catch (const std::runtime_error&) {
            throw;
        } catch (...) {
            fail("bad integer '" + tok + "'");
        }
    }

    double parse_num(const std::string& tok) {
        try {
            return parse_double(tok);
        } catch (...) {
            fail("bad number '" + tok + "'");
        }
    }

    node_id parse_label(const std::string& tok) {
        try {
            return node_id::from_label(tok);
        } catch (...) {
            fail("bad node label '" + tok + "'");
        }
    }

    void handle_comment(const std::vector<std::string>& t) {
        if (t.size() < 2) return;  // bare "c" comment
        const std::string& tag = t[1];
        if (declared_vars < 0 && (tag == "ind" || tag == "p" || tag == "w" || tag == "q" ||
                                  tag == "s" || tag == "fx" || tag == "fxp" || tag == "o" ||
                                  tag == "e"))
            fail("meaning line before header");
        if (tag == "ind") {
            if (t.size() != 5) fail("c ind expects: var label value");
            int v = parse_var(t[2]);
            if (is_param[v]) fail("variable " + t[2] + " marked both indicator and parameter");
            cnf.vars[v - 1] = {cnf_var_kind::indicator, parse_label(t[3]), parse_int(t[4]), -1};
            has_meaning[v] = true;
        } else if (tag == "p") {
            if (t.size() != 4) fail("c p expects: var param-id");
            int v = parse_var(t[2]);
            if (has_meaning[v] && !is_param[v]) fail("variable " + t[2] + " marked both indicator and parameter");
            cnf.vars[v - 1].kind = cnf_var_kind::parameter;
            cnf.vars[v - 1].param = parse_int(t[3]);
            is_param[v] = has_meaning[v] = has_param_id[v] = true;
        } else if (tag == "w") {
            if (t.size() != 5) fail("c w expects: var re im");
            int v = parse_var(t[2]);
            if (has_meaning[v] && !is_param[v]) fail("weight line for an indicator variable");
            cnf.vars[v - 1].kind = cnf_var_kind::parameter;
            cnf.weights[v - 1] = {parse_num(t[3]), parse_num(t[4])};
            is_param[v] = has_meaning[v] = true;
        } else if (tag == "q" || tag == "s") {
            if (t.size() != 3) fail("c " + tag + " expects: var");
            (tag == "q" ? cnf.query_vars : cnf.summed_vars).push_back(parse_var(t[2]));
            saw_marker = true;
        } else if (tag == "o") {
            for (size_t i = 2; i < t.size(); ++i) cnf.output_nodes.push_back(parse_label(t[i]));
        } else if (tag == "e") {
            for (size_t i = 2; i < t.size(); ++i) cnf.event_nodes.push_back(parse_label(t[i]));
        } else if (tag == "fx") {
            if (t.size() != 5) fail("c fx expects: label value truth");
            fixed_assignment f;
            f.var = {cnf_var_kind::indicator, parse_label(t[2]), parse_int(t[3]), -1};
            f.value = parse_int(t[4]) != 0;
            cnf.fixed.push_back(f);
        } else if (tag == "fxp") {
            if (t.size() != 6) fail("c fxp expects: param-id truth re im");
            fixed_assignment f;
            f.var = {cnf_var_kind::parameter, {}, 0, parse_int(t[2])};
            f.value = parse_int(t[3]) != 0;
            f.weight = {parse_num(t[4]), parse_num(t[5])};
            cnf.fixed.push_back(f);
        }
        // Unknown comment tags are skipped.
    }

    weighted_cnf run(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ls(line);
            std::vector<std::string> t;
            std::string tok;
            while (ls >> tok) t.push_back(tok);
            if (t.empty()) continue;
            if (t[0] == "c") {
                handle_comment(t);
                continue;
            }
            if (t[0] == "p") {
                if (declared_vars >= 0) fail("duplicate header");
                if (t.size() != 4 || t[1] != "cnf") fail("bad header");
                declared_vars = parse_int(t[2]);
                int c = parse_int(t[3]);
                if (declared_vars < 0 || c < 0) fail("bad header counts");
                declared_clauses = static_cast<size_t>(c);
                cnf.vars.resize(declared_vars);
                cnf.weights.assign(declared_vars, 1.0);
                has_meaning.assign(declared_vars + 1, false);
                is_param.assign(declared_vars + 1, false);
                has_param_id.assign(declared_vars + 1, false);
                continue;
            }
            if (declared_vars < 0) fail("clause before header");
            for (const auto& s : t) {
                int lit = parse_int(s);
                if (lit == 0) {
                    if (pending.empty()) fail("empty clause");
                    cnf.clauses.push_back(pending);
                    pending.clear();
                } else {
                    if (std::abs(lit) > declared_vars) fail("literal out of range");
                    pending.push_back(lit);
                }
            }
        }
        if (declared_vars < 0) fail("missing header");
        if (!pending.empty()) fail("unterminated clause");
        if (cnf.clauses.size() != declared_clauses) fail("clause count does not match header");

        // Bare variables (no meaning line) get synthetic indicator meanings;
        // parameters without explicit ids are numbered in variable order.
        int next_param = 0;
        for (int v = 1; v <= declared_vars; ++v)
            if (is_param[v] && has_param_id[v]) next_param = std::max(next_param, cnf.vars[v - 1].param + 1);
        for (int v = 1; v <= declared_vars; ++v) {
            if (!has_meaning[v])
                cnf.vars[v - 1] = {cnf_var_kind::indicator, {v - 1, 0, false}, 1, -1};
            else if (is_param[v] && !has_param_id[v])
                cnf.vars[v - 1].param = next_param++;
        }
        if (!saw_marker) {
            for (int v = 1; v <= declared_vars; ++v)
                if (cnf.vars[v - 1].kind == cnf_var_kind::indicator) cnf.query_vars.push_back(v);
        }
        std::sort(cnf.query_vars.begin(), cnf.query_vars.end());
        std::sort(cnf.summed_vars.begin(), cnf.summed_vars.end());
        return std::move(cnf);
    }
};

}  // namespace

weighted_cnf parse_dimacs(const std::string& text) {
    dimacs_parser p;
    return p.run(text);
}

}  // namespace qkc
