#include "qkc/ddnnf.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace qkc {

void arithmetic_circuit::finalize_indexes() {
    positive_leaves.assign(vars.size() + 1, {});
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].kind == ac_kind::literal && nodes[i].positive)
            positive_leaves[nodes[i].var].push_back(static_cast<int>(i));
}

namespace {

struct lex_key {
    int group;  // 0 = indicator, 1 = parameter
    int a, b, c, d, var;
    bool operator<(const lex_key& o) const {
        return std::tie(group, a, b, c, d, var) < std::tie(o.group, o.a, o.b, o.c, o.d, o.var);
    }
};

std::vector<int> min_fill_order(const weighted_cnf& cnf, const std::vector<char>& summed,
                                bool summed_first) {
    int nv = cnf.num_vars();
    std::vector<std::set<int>> adj(nv + 1);
    for (const auto& cl : cnf.clauses)
        for (size_t i = 0; i < cl.size(); ++i)
            for (size_t j = i + 1; j < cl.size(); ++j) {
                int a = std::abs(cl[i]), b = std::abs(cl[j]);
                if (a != b) {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }

    std::vector<char> live(nv + 1, 1);
    int summed_left = 0;
    for (int v = 1; v <= nv; ++v)
        if (summed[v]) ++summed_left;

    auto fill_of = [&](int v) {
        long fill = 0;
        std::vector<int> nb(adj[v].begin(), adj[v].end());
        for (size_t i = 0; i < nb.size(); ++i)
            for (size_t j = i + 1; j < nb.size(); ++j)
                if (!adj[nb[i]].count(nb[j])) ++fill;
        return fill;
    };

    std::vector<int> order;
    order.reserve(nv);
    for (int step = 0; step < nv; ++step) {
        bool restrict_summed = summed_first && summed_left > 0;
        int best = -1;
        long best_fill = 0;
        for (int v = 1; v <= nv; ++v) {
            if (!live[v]) continue;
            if (restrict_summed && !summed[v]) continue;
            long f = fill_of(v);
            if (best < 0 || f < best_fill) {
                best = v;
                best_fill = f;
            }
        }
        live[best] = 0;
        if (summed[best]) --summed_left;
        std::vector<int> nb(adj[best].begin(), adj[best].end());
        for (size_t i = 0; i < nb.size(); ++i)
            for (size_t j = i + 1; j < nb.size(); ++j) {
                adj[nb[i]].insert(nb[j]);
                adj[nb[j]].insert(nb[i]);
            }
        for (int u : nb) adj[u].erase(best);
        adj[best].clear();
        order.push_back(best);
    }
    return order;
}

}  // namespace

std::vector<int> choose_var_order(const weighted_cnf& cnf, const compile_options& opts) {
    int nv = cnf.num_vars();
    std::vector<char> summed(nv + 1, 0);
    for (int v : cnf.summed_vars) summed[v] = 1;

    if (opts.order == var_order_kind::min_fill)
        return min_fill_order(cnf, summed, opts.elide_summed);

    std::vector<std::pair<lex_key, int>> keyed;
    keyed.reserve(nv);
    for (int v = 1; v <= nv; ++v) {
        const cnf_var& cv = cnf.vars[v - 1];
        lex_key k;
        if (cv.kind == cnf_var_kind::indicator) {
            // Noise events sort before the state node of the same step.
            k = {0, cv.node.time, cv.node.qubit, cv.node.event ? 0 : 1, cv.value, v};
        } else {
            k = {1, cv.param, 0, 0, 0, v};
        }
        keyed.emplace_back(k, v);
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<int> order;
    order.reserve(nv);
    for (const auto& [k, v] : keyed) order.push_back(v);
    if (opts.elide_summed)
        std::stable_partition(order.begin(), order.end(), [&](int v) { return summed[v] != 0; });
    return order;
}

namespace {

struct key_hash {
    size_t operator()(const std::vector<int32_t>& key) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (int32_t x : key) {
            h ^= static_cast<uint64_t>(static_cast<uint32_t>(x)) + 0x9e3779b97f4a7c15ull +
                 (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdull;
        }
        return static_cast<size_t>(h ^ (h >> 33));
    }
};

// Top-down exhaustive DPLL compiler.  Every variable handed to solve() is
// decided, propagated, or emitted as a free-variable gadget in every branch,
// which makes the output smooth over query variables by construction.
struct compiler {
    const weighted_cnf& cnf;
    compile_options opts;
    std::vector<int> order_pos;   // var -> decision rank
    std::vector<int8_t> assign;   // var -> -1 unassigned / 0 / 1
    std::vector<char> vclass;     // 0 summed indicator, 1 query indicator / bare, 2 parameter

    std::vector<ac_node> nodes;
    int true_id = -1, false_id = -1;
    std::vector<int> pos_leaf, neg_leaf, gadget_id;  // var -> node id or -1
    std::unordered_map<std::vector<int32_t>, int, key_hash> cache;
    compile_stats stats;

    compiler(const weighted_cnf& c, const compile_options& o) : cnf(c), opts(o) {
        int nv = cnf.num_vars();
        order_pos.assign(nv + 1, 0);
        auto order = choose_var_order(cnf, opts);
        for (size_t i = 0; i < order.size(); ++i) order_pos[order[i]] = static_cast<int>(i);
        assign.assign(nv + 1, -1);
        vclass.assign(nv + 1, 1);
        for (int v = 1; v <= nv; ++v)
            if (cnf.vars[v - 1].kind == cnf_var_kind::parameter) vclass[v] = 2;
        for (int v : cnf.summed_vars) vclass[v] = 0;
        pos_leaf.assign(nv + 1, -1);
        neg_leaf.assign(nv + 1, -1);
        gadget_id.assign(nv + 1, -1);
    }

    int true_node() {
        if (true_id < 0) {
            true_id = static_cast<int>(nodes.size());
            nodes.push_back({ac_kind::constant_true, 0, true, {}});
        }
        return true_id;
    }
    int false_node() {
        if (false_id < 0) {
            false_id = static_cast<int>(nodes.size());
            nodes.push_back({ac_kind::constant_false, 0, true, {}});
        }
        return false_id;
    }

    // Literal leaves that cannot influence any query are dropped: summed
    // indicators when elision is on, and negative parameter literals always
    // (they evaluate to the constant 1).
    bool elided(int var, bool positive) const {
        if (vclass[var] == 2) return !positive;
        if (vclass[var] == 0) return opts.elide_summed;
        return false;
    }

    int leaf(int var, bool positive) {
        int& slot = positive ? pos_leaf[var] : neg_leaf[var];
        if (slot < 0) {
            slot = static_cast<int>(nodes.size());
            nodes.push_back({ac_kind::literal, var, positive, {}});
        }
        return slot;
    }

    // Shared (v + not v) gadget for a variable no live clause constrains; it
    // keeps the model count exact (factor weight+1) and the circuit smooth.
    int free_gadget(int var) {
        if (gadget_id[var] < 0) {
            int lo = elided(var, false) ? true_node() : leaf(var, false);
            int hi = elided(var, true) ? true_node() : leaf(var, true);
            gadget_id[var] = static_cast<int>(nodes.size());
            nodes.push_back({ac_kind::or_node, var, true, {lo, hi}});
        }
        return gadget_id[var];
    }

    // owned: sorted unassigned variables this call must account for.
    // live: clause ids, unsatisfied so far, mentioning only owned or assigned vars.
    int solve(const std::vector<int>& owned, std::vector<int> live) {
        std::vector<int> trail;
        bool conflict = false;
        bool changed = true;
        while (changed && !conflict) {
            changed = false;
            std::vector<int> still;
            still.reserve(live.size());
            for (int id : live) {
                const auto& cl = cnf.clauses[id];
                bool sat = false;
                int unassigned = 0, unit_lit = 0;
                for (int lit : cl) {
                    int8_t a = assign[std::abs(lit)];
                    if (a < 0) {
                        ++unassigned;
                        unit_lit = lit;
                    } else if (a == (lit > 0 ? 1 : 0)) {
                        sat = true;
                        break;
                    }
                }
                if (sat) {
                    changed = true;
                    continue;
                }
                if (unassigned == 0) {
                    conflict = true;
                    break;
                }
                if (unassigned == 1) {
                    assign[std::abs(unit_lit)] = unit_lit > 0 ? 1 : 0;
                    trail.push_back(unit_lit);
                    changed = true;
                    continue;
                }
                still.push_back(id);
            }
            live.swap(still);
        }
        if (conflict) {
            for (int lit : trail) assign[std::abs(lit)] = -1;
            return false_node();
        }

        std::vector<int> children;
        for (int lit : trail)
            if (!elided(std::abs(lit), lit > 0)) children.push_back(leaf(std::abs(lit), lit > 0));

        // Split remaining clauses into connected components over shared vars.
        std::map<int, int> comp_of;  // var -> component root var
        std::function<int(int)> find = [&](int v) {
            auto it = comp_of.find(v);
            if (it == comp_of.end() || it->second == v) return v;
            int r = find(it->second);
            it->second = r;
            return r;
        };
        for (int id : live) {
            int first = -1;
            for (int lit : cnf.clauses[id]) {
                int v = std::abs(lit);
                if (assign[v] >= 0) continue;
                comp_of.emplace(v, v);
                if (first < 0)
                    first = find(v);
                else
                    comp_of[find(v)] = first = find(first);
            }
        }
        // Free variables: owned, unassigned, untouched by any live clause.
        for (int v : owned)
            if (assign[v] < 0 && !comp_of.count(v)) children.push_back(free_gadget(v));

        std::map<int, std::pair<std::vector<int>, std::vector<int>>> comps;  // root -> (vars, clauses)
        for (int v : owned)
            if (assign[v] < 0 && comp_of.count(v)) comps[find(v)].first.push_back(v);
        for (int id : live) {
            int root = -1;
            for (int lit : cnf.clauses[id])
                if (assign[std::abs(lit)] < 0) {
                    root = find(std::abs(lit));
                    break;
                }
            comps[root].second.push_back(id);
        }
        for (auto& [root, comp] : comps)
            children.push_back(decide_component(comp.first, comp.second));

        for (int lit : trail) assign[std::abs(lit)] = -1;

        if (children.empty()) return true_node();
        if (children.size() == 1) return children[0];
        int id = static_cast<int>(nodes.size());
        nodes.push_back({ac_kind::and_node, 0, true, std::move(children)});
        return id;
    }

    std::vector<int32_t> cache_key(const std::vector<int>& comp_vars,
                                   const std::vector<int>& clause_ids) {
        std::vector<int32_t> key;
        key.reserve(clause_ids.size() + comp_vars.size() + 8);
        for (int id : clause_ids) key.push_back(id);
        key.push_back(INT32_MIN);  // separator
        std::set<int> mentioned;
        for (int id : clause_ids)
            for (int lit : cnf.clauses[id]) mentioned.insert(std::abs(lit));
        for (int v : mentioned)
            if (assign[v] >= 0) key.push_back(assign[v] ? v : -v);
        return key;
    }

    int decide_component(const std::vector<int>& comp_vars, const std::vector<int>& clause_ids) {
        auto key = cache_key(comp_vars, clause_ids);
        if (auto it = cache.find(key); it != cache.end()) {
            ++stats.cache_hits;
            return it->second;
        }

        int v = -1;
        for (int u : comp_vars)
            if (v < 0 || order_pos[u] < order_pos[v]) v = u;
        ++stats.decision_count;

        std::vector<int> rest;
        rest.reserve(comp_vars.size() - 1);
        for (int u : comp_vars)
            if (u != v) rest.push_back(u);

        int branch[2];
        for (int val = 0; val < 2; ++val) {
            assign[v] = static_cast<int8_t>(val);
            int sub = solve(rest, clause_ids);
            assign[v] = -1;
            if (elided(v, val != 0)) {
                branch[val] = sub;
            } else {
                int lf = leaf(v, val != 0);
                if (sub == true_id && true_id >= 0) {
                    branch[val] = lf;
                } else {
                    branch[val] = static_cast<int>(nodes.size());
                    nodes.push_back({ac_kind::and_node, 0, true, {lf, sub}});
                }
            }
        }
        int id = static_cast<int>(nodes.size());
        nodes.push_back({ac_kind::or_node, v, true, {branch[0], branch[1]}});
        if (cache.size() < opts.cache_budget)
            cache.emplace(std::move(key), id);
        else
            stats.cache_disabled = true;
        return id;
    }
};

// Prunes FALSE children and rebuilds reachable nodes in topological order
// (children first, root last).  Expects `nodes` itself to be topological,
// which creation order guarantees.
arithmetic_circuit rebuild_pruned(const std::vector<ac_node>& nodes, int root) {
    enum cls : int8_t { k_false = 0, k_true = 1, k_keep = 2 };
    size_t n = nodes.size();
    std::vector<int8_t> c(n);
    std::vector<int> alias(n);
    std::vector<std::vector<int>> kept_children(n);

    auto classify = [&](int i) {
        const ac_node& nd = nodes[static_cast<size_t>(i)];
        alias[i] = i;
        switch (nd.kind) {
            case ac_kind::constant_true: c[i] = k_true; break;
            case ac_kind::constant_false: c[i] = k_false; break;
            case ac_kind::literal: c[i] = k_keep; break;
            case ac_kind::and_node: {
                bool dead = false;
                std::vector<int> ch;
                for (int child : nd.children) {
                    if (c[child] == k_false) {
                        dead = true;
                        break;
                    }
                    if (c[child] == k_true) continue;
                    ch.push_back(alias[child]);
                }
                if (dead) {
                    c[i] = k_false;
                } else if (ch.empty()) {
                    c[i] = k_true;
                } else if (ch.size() == 1) {
                    c[i] = k_keep;
                    alias[i] = ch[0];
                } else {
                    c[i] = k_keep;
                    kept_children[i] = std::move(ch);
                }
                break;
            }
            case ac_kind::or_node: {
                int lo = nd.children[0], hi = nd.children[1];
                bool lo_dead = c[lo] == k_false, hi_dead = c[hi] == k_false;
                if (lo_dead && hi_dead) {
                    c[i] = k_false;
                } else if (lo_dead) {
                    c[i] = c[hi];
                    alias[i] = alias[hi];
                } else if (hi_dead) {
                    c[i] = c[lo];
                    alias[i] = alias[lo];
                } else {
                    c[i] = k_keep;
                    kept_children[i] = {lo, hi};
                }
                break;
            }
        }
    };
    // Classify children before parents by walking the graph from the root:
    // inputs patched after construction may hold forward child references, so
    // a plain ascending index scan would read unclassified children.
    if (root >= 0 && root < static_cast<int>(n)) {
        std::vector<int8_t> seen(n, 0);
        std::vector<int> dfs = {root};
        while (!dfs.empty()) {
            int cur = dfs.back();
            if (seen[cur] == 2) {
                dfs.pop_back();
                continue;
            }
            if (seen[cur] == 0) {
                seen[cur] = 1;
                for (int child : nodes[static_cast<size_t>(cur)].children)
                    if (seen[child] != 2) dfs.push_back(child);
                continue;
            }
            dfs.pop_back();
            seen[cur] = 2;
            classify(cur);
        }
    }

    arithmetic_circuit out;
    if (root < 0 || c[root] != k_keep) {
        out.nodes.push_back({root >= 0 && c[root] == k_true ? ac_kind::constant_true
                                                            : ac_kind::constant_false,
                             0, true, {}});
        out.root = 0;
        return out;
    }

    // Children-first DFS from the root alias; allocates new dense ids.
    std::vector<int> new_id(n, -1);
    int true_new = -1;
    std::vector<int> stack = {alias[root]};
    std::vector<int8_t> expanded(n, 0);
    while (!stack.empty()) {
        int cur = stack.back();
        if (new_id[cur] >= 0) {
            stack.pop_back();
            continue;
        }
        const ac_node& nd = nodes[cur];
        if (!expanded[cur]) {
            expanded[cur] = 1;
            if (nd.kind == ac_kind::or_node) {
                // OR children may resolve to TRUE (elided branches).
                for (int child : kept_children[cur])
                    if (c[child] == k_keep) stack.push_back(alias[child]);
            } else if (nd.kind == ac_kind::and_node) {
                for (int child : kept_children[cur]) stack.push_back(child);
            }
            continue;
        }
        stack.pop_back();
        ac_node copy;
        copy.kind = nd.kind;
        copy.var = nd.var;
        copy.positive = nd.positive;
        if (nd.kind == ac_kind::or_node) {
            for (int child : kept_children[cur]) {
                if (c[child] == k_true) {
                    if (true_new < 0) {
                        true_new = static_cast<int>(out.nodes.size());
                        out.nodes.push_back({ac_kind::constant_true, 0, true, {}});
                    }
                    copy.children.push_back(true_new);
                } else {
                    copy.children.push_back(new_id[alias[child]]);
                }
            }
        } else if (nd.kind == ac_kind::and_node) {
            for (int child : kept_children[cur]) copy.children.push_back(new_id[alias[child]]);
        }
        new_id[cur] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(std::move(copy));
    }
    out.root = new_id[alias[root]];
    return out;
}

}  // namespace

arithmetic_circuit compile(const weighted_cnf& cnf, const compile_options& opts) {
    auto t0 = std::chrono::steady_clock::now();
    compiler comp(cnf, opts);

    std::vector<int> owned(cnf.num_vars());
    std::iota(owned.begin(), owned.end(), 1);
    std::vector<int> all_clauses(cnf.clauses.size());
    std::iota(all_clauses.begin(), all_clauses.end(), 0);
    int root = comp.solve(owned, std::move(all_clauses));

    // Variable table: compiled variables keep their CNF indices; fixed
    // variables re-enter with fresh indices so evidence and rebinding see
    // them.  Fixed summed indicators and false parameters contribute the
    // constant 1 and are dropped.
    std::vector<ac_var> vars;
    vars.reserve(cnf.vars.size() + cnf.fixed.size());
    std::vector<char> is_q(cnf.num_vars() + 1, 0), is_s(cnf.num_vars() + 1, 0);
    for (int v : cnf.query_vars) is_q[v] = 1;
    for (int v : cnf.summed_vars) is_s[v] = 1;
    for (int v = 1; v <= cnf.num_vars(); ++v)
        vars.push_back({cnf.vars[v - 1], cnf.weights[v - 1], is_q[v] != 0, is_s[v] != 0});

    std::set<node_id> query_nodes(cnf.output_nodes.begin(), cnf.output_nodes.end());
    query_nodes.insert(cnf.event_nodes.begin(), cnf.event_nodes.end());

    std::vector<int> extra;
    for (const auto& f : cnf.fixed) {
        if (f.var.kind == cnf_var_kind::indicator) {
            if (!query_nodes.count(f.var.node)) continue;
            vars.push_back({f.var, 1.0, true, false});
            extra.push_back(static_cast<int>(comp.nodes.size()));
            comp.nodes.push_back({ac_kind::literal, static_cast<int>(vars.size()), f.value, {}});
        } else if (f.value) {
            vars.push_back({f.var, f.weight, false, false});
            extra.push_back(static_cast<int>(comp.nodes.size()));
            comp.nodes.push_back({ac_kind::literal, static_cast<int>(vars.size()), true, {}});
        }
    }
    if (!extra.empty()) {
        extra.insert(extra.begin(), root);
        root = static_cast<int>(comp.nodes.size());
        comp.nodes.push_back({ac_kind::and_node, 0, true, std::move(extra)});
    }

    arithmetic_circuit ac = rebuild_pruned(comp.nodes, root);
    ac.vars = std::move(vars);
    ac.output_nodes = cnf.output_nodes;
    ac.event_nodes = cnf.event_nodes;
    ac.stats = comp.stats;
    ac.stats.cache_entries = comp.cache.size();
    ac.stats.node_count = ac.nodes.size();
    ac.stats.edge_count = 0;
    for (const auto& nd : ac.nodes) ac.stats.edge_count += nd.children.size();
    ac.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ac.finalize_indexes();
    return ac;
}

namespace {

// Query-variable mention masks, one fixed-width bitset per node.
struct mention_table {
    int words = 0;
    std::vector<uint64_t> bits;  // nodes * words
    std::vector<int> qslot;      // var -> dense query slot or -1

    uint64_t* row(size_t i) { return bits.data() + i * words; }
    const uint64_t* row(size_t i) const { return bits.data() + i * words; }
};

mention_table query_mentions(const arithmetic_circuit& ac) {
    mention_table t;
    t.qslot.assign(ac.vars.size() + 1, -1);
    int q = 0;
    for (size_t i = 0; i < ac.vars.size(); ++i)
        if (ac.vars[i].is_query) t.qslot[i + 1] = q++;
    t.words = std::max(1, (q + 63) / 64);
    t.bits.assign(ac.nodes.size() * t.words, 0);
    for (size_t i = 0; i < ac.nodes.size(); ++i) {
        const ac_node& nd = ac.nodes[i];
        uint64_t* r = t.row(i);
        if (nd.kind == ac_kind::literal) {
            int s = t.qslot[nd.var];
            if (s >= 0) r[s / 64] |= 1ull << (s % 64);
        } else {
            for (int child : nd.children) {
                const uint64_t* cr = t.row(child);
                for (int w = 0; w < t.words; ++w) r[w] |= cr[w];
            }
        }
    }
    return t;
}

}  // namespace

arithmetic_circuit smooth(const arithmetic_circuit& ac) {
    if (ac.nodes.empty()) return ac;
    mention_table mt = query_mentions(ac);
    int words = mt.words;

    // Missing query vars per deficient OR branch, and at the root.
    auto missing_vars = [&](const uint64_t* have, const uint64_t* want) {
        std::vector<int> out;
        for (size_t v = 1; v <= ac.vars.size(); ++v) {
            int s = mt.qslot[v];
            if (s < 0) continue;
            bool w = want[s / 64] >> (s % 64) & 1, h = have[s / 64] >> (s % 64) & 1;
            if (w && !h) out.push_back(static_cast<int>(v));
        }
        return out;
    };

    struct patch {
        int node;          // OR node to patch, or -1 for the root
        int branch;        // 0 = low, 1 = high, -1 for the root
        std::vector<int> missing;
    };
    std::vector<patch> patches;
    std::vector<uint64_t> unions(words);
    for (size_t i = 0; i < ac.nodes.size(); ++i) {
        const ac_node& nd = ac.nodes[i];
        if (nd.kind != ac_kind::or_node) continue;
        const uint64_t* lo = mt.row(nd.children[0]);
        const uint64_t* hi = mt.row(nd.children[1]);
        for (int w = 0; w < words; ++w) unions[w] = lo[w] | hi[w];
        if (!std::equal(unions.begin(), unions.end(), lo))
            patches.push_back({static_cast<int>(i), 0, missing_vars(lo, unions.data())});
        if (!std::equal(unions.begin(), unions.end(), hi))
            patches.push_back({static_cast<int>(i), 1, missing_vars(hi, unions.data())});
    }
    {
        std::vector<uint64_t> all(words, 0);
        for (size_t v = 1; v <= ac.vars.size(); ++v) {
            int s = mt.qslot[v];
            if (s >= 0) all[s / 64] |= 1ull << (s % 64);
        }
        auto miss = missing_vars(mt.row(ac.root), all.data());
        if (!miss.empty()) patches.push_back({-1, -1, std::move(miss)});
    }
    if (patches.empty()) return ac;

    arithmetic_circuit out = ac;
    std::map<std::pair<int, bool>, int> leaves;
    for (size_t i = 0; i < out.nodes.size(); ++i)
        if (out.nodes[i].kind == ac_kind::literal)
            leaves[{out.nodes[i].var, out.nodes[i].positive}] = static_cast<int>(i);
    auto leaf = [&](int var, bool pos) {
        auto it = leaves.find({var, pos});
        if (it != leaves.end()) return it->second;
        int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::literal, var, pos, {}});
        leaves[{var, pos}] = id;
        return id;
    };

    // Gadget for one missing variable: (not v + v), value 1 + leaf(v).
    // Leaves are materialized before the index is taken: leaf() may itself
    // append a node.
    auto var_gadget = [&](int v) {
        int neg = leaf(v, false), pos = leaf(v, true);
        int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::or_node, v, true, {neg, pos}});
        return id;
    };
    // Exactly-one gadget over a whole node's indicator variables: evaluates to
    // sum of the positive leaves, mentions every variable in both branches of
    // each internal OR.
    std::function<int(const std::vector<int>&, size_t)> one_of =
        [&](const std::vector<int>& vs, size_t i) -> int {
        if (i + 1 == vs.size()) return leaf(vs[i], true);
        std::vector<int> hi_children = {leaf(vs[i], true)};
        for (size_t j = i + 1; j < vs.size(); ++j) hi_children.push_back(leaf(vs[j], false));
        int hi = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::and_node, 0, true, std::move(hi_children)});
        int rest = one_of(vs, i + 1);
        int neg = leaf(vs[i], false);
        int lo = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::and_node, 0, true, {neg, rest}});
        int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::or_node, vs[i], true, {lo, hi}});
        return id;
    };

    // Group a branch's missing variables by BN node; a fully-missing node gets
    // the exactly-one gadget (value = sum of its indicators), anything partial
    // falls back to per-variable gadgets, which cannot collide with mentions
    // already in the branch.
    auto gadgets_for = [&](const std::vector<int>& missing, const uint64_t* branch_mask) {
        std::map<node_id, std::vector<int>> by_node;
        std::vector<int> param_like;
        for (int v : missing) {
            const cnf_var& m = out.vars[v - 1].meaning;
            if (m.kind == cnf_var_kind::indicator)
                by_node[m.node].push_back(v);
            else
                param_like.push_back(v);
        }
        std::vector<int> gadgets;
        for (auto& [node, vs] : by_node) {
            // All query vars of this BN node, and whether any is already mentioned.
            std::vector<int> all_vs;
            bool mentioned = false;
            for (size_t v = 1; v <= out.vars.size(); ++v) {
                const ac_var& av = out.vars[v - 1];
                if (!av.is_query || av.meaning.kind != cnf_var_kind::indicator ||
                    !(av.meaning.node == node))
                    continue;
                all_vs.push_back(static_cast<int>(v));
                int s = mt.qslot[v];
                if (s >= 0 && (branch_mask[s / 64] >> (s % 64) & 1)) mentioned = true;
            }
            if (!mentioned && all_vs == vs && vs.size() > 1)
                gadgets.push_back(one_of(vs, 0));
            else
                for (int v : vs) gadgets.push_back(var_gadget(v));
        }
        for (int v : param_like) gadgets.push_back(var_gadget(v));
        return gadgets;
    };

    for (const auto& p : patches) {
        if (p.node < 0) continue;  // root handled after the loop
        int child = out.nodes[p.node].children[p.branch];
        auto gadgets = gadgets_for(p.missing, mt.row(child));
        std::vector<int> ch = {child};
        ch.insert(ch.end(), gadgets.begin(), gadgets.end());
        int wrapped = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::and_node, 0, true, std::move(ch)});
        out.nodes[p.node].children[p.branch] = wrapped;
    }
    for (const auto& p : patches) {
        if (p.node >= 0) continue;
        auto gadgets = gadgets_for(p.missing, mt.row(out.root));
        std::vector<int> ch = {out.root};
        ch.insert(ch.end(), gadgets.begin(), gadgets.end());
        out.root = static_cast<int>(out.nodes.size());
        out.nodes.push_back({ac_kind::and_node, 0, true, std::move(ch)});
    }

    arithmetic_circuit rebuilt = rebuild_pruned(out.nodes, out.root);
    rebuilt.vars = out.vars;
    rebuilt.output_nodes = out.output_nodes;
    rebuilt.event_nodes = out.event_nodes;
    rebuilt.stats = out.stats;
    rebuilt.stats.node_count = rebuilt.nodes.size();
    rebuilt.stats.edge_count = 0;
    for (const auto& nd : rebuilt.nodes) rebuilt.stats.edge_count += nd.children.size();
    rebuilt.finalize_indexes();
    return rebuilt;
}

std::vector<std::string> check_ddnnf(const arithmetic_circuit& ac) {
    std::vector<std::string> diags;
    size_t n = ac.nodes.size();
    if (n == 0 || ac.root < 0 || ac.root >= static_cast<int>(n)) {
        diags.push_back("missing or out-of-range root");
        return diags;
    }
    if (ac.root != static_cast<int>(n) - 1) diags.push_back("root is not the last node");

    int nv = static_cast<int>(ac.vars.size());
    for (size_t i = 0; i < n; ++i) {
        const ac_node& nd = ac.nodes[i];
        if (nd.kind == ac_kind::literal && (nd.var < 1 || nd.var > nv))
            diags.push_back("node " + std::to_string(i) + ": literal variable out of range");
        if (nd.kind == ac_kind::or_node && nd.children.size() != 2)
            diags.push_back("node " + std::to_string(i) + ": OR node must have two children");
        if (nd.kind == ac_kind::or_node && (nd.var < 1 || nd.var > nv))
            diags.push_back("node " + std::to_string(i) + ": decision variable out of range");
        for (int child : nd.children)
            if (child < 0 || child >= static_cast<int>(i))
                diags.push_back("node " + std::to_string(i) +
                                ": child index breaks topological order");
    }
    if (!diags.empty()) return diags;

    // Polarity-separated mention masks over all variables.
    int words = std::max(1, (nv + 63) / 64);
    std::vector<uint64_t> pos(n * words, 0), neg(n * words, 0);
    auto bit_set = [&](std::vector<uint64_t>& m, size_t i, int v) {
        m[i * words + (v - 1) / 64] |= 1ull << ((v - 1) % 64);
    };
    auto bit_get = [&](const std::vector<uint64_t>& m, size_t i, int v) {
        return m[i * words + (v - 1) / 64] >> ((v - 1) % 64) & 1;
    };
    std::vector<uint64_t> acc(words);
    for (size_t i = 0; i < n; ++i) {
        const ac_node& nd = ac.nodes[i];
        if (nd.kind == ac_kind::literal) {
            bit_set(nd.positive ? pos : neg, i, nd.var);
            continue;
        }
        if (nd.kind == ac_kind::and_node) {
            std::fill(acc.begin(), acc.end(), 0);
            bool overlap = false;
            for (int child : nd.children)
                for (int w = 0; w < words; ++w) {
                    uint64_t cm = pos[child * words + w] | neg[child * words + w];
                    if (acc[w] & cm) overlap = true;
                    acc[w] |= cm;
                }
            if (overlap)
                diags.push_back("node " + std::to_string(i) +
                                ": AND children share variables (not decomposable)");
        }
        if (nd.kind == ac_kind::or_node) {
            int lo = nd.children[0], hi = nd.children[1];
            if (bit_get(pos, lo, nd.var))
                diags.push_back("node " + std::to_string(i) +
                                ": decision variable appears positively in the low branch");
            if (bit_get(neg, hi, nd.var))
                diags.push_back("node " + std::to_string(i) +
                                ": decision variable appears negatively in the high branch");
            for (size_t v = 1; v <= ac.vars.size(); ++v) {
                if (!ac.vars[v - 1].is_query) continue;
                bool in_lo = bit_get(pos, lo, static_cast<int>(v)) ||
                             bit_get(neg, lo, static_cast<int>(v));
                bool in_hi = bit_get(pos, hi, static_cast<int>(v)) ||
                             bit_get(neg, hi, static_cast<int>(v));
                if (in_lo != in_hi) {
                    diags.push_back("node " + std::to_string(i) +
                                    ": branches mention different query variables (not smooth)");
                    break;
                }
            }
        }
        for (int child : nd.children)
            for (int w = 0; w < words; ++w) {
                pos[i * words + w] |= pos[child * words + w];
                neg[i * words + w] |= neg[child * words + w];
            }
    }
    return diags;
}

std::string serialize_ac(const arithmetic_circuit& ac) {
    std::ostringstream out;
    for (size_t i = 0; i < ac.vars.size(); ++i) {
        const ac_var& v = ac.vars[i];
        if (v.meaning.kind == cnf_var_kind::indicator)
            out << "c ind " << i + 1 << ' ' << v.meaning.node.label() << ' ' << v.meaning.value
                << "\n";
    }
    for (size_t i = 0; i < ac.vars.size(); ++i)
        if (ac.vars[i].meaning.kind == cnf_var_kind::parameter)
            out << "c p " << i + 1 << ' ' << ac.vars[i].meaning.param << "\n";
    for (size_t i = 0; i < ac.vars.size(); ++i)
        if (ac.vars[i].meaning.kind == cnf_var_kind::parameter)
            out << "c w " << i + 1 << ' ' << format_double(ac.vars[i].weight.real()) << ' '
                << format_double(ac.vars[i].weight.imag()) << "\n";
    for (size_t i = 0; i < ac.vars.size(); ++i)
        if (ac.vars[i].is_query) out << "c q " << i + 1 << "\n";
    for (size_t i = 0; i < ac.vars.size(); ++i)
        if (ac.vars[i].is_summed) out << "c s " << i + 1 << "\n";
    if (!ac.output_nodes.empty()) {
        out << "c o";
        for (const auto& id : ac.output_nodes) out << ' ' << id.label();
        out << "\n";
    }
    if (!ac.event_nodes.empty()) {
        out << "c e";
        for (const auto& id : ac.event_nodes) out << ' ' << id.label();
        out << "\n";
    }

    size_t edges = 0;
    for (const auto& nd : ac.nodes) edges += nd.children.size();
    out << "nnf " << ac.nodes.size() << ' ' << edges << ' ' << ac.vars.size() << "\n";
    for (const auto& nd : ac.nodes) {
        switch (nd.kind) {
            case ac_kind::constant_true: out << "T\n"; break;
            case ac_kind::constant_false: out << "F\n"; break;
            case ac_kind::literal: out << "L " << (nd.positive ? nd.var : -nd.var) << "\n"; break;
            case ac_kind::and_node: {
                out << "A " << nd.children.size();
                for (int child : nd.children) out << ' ' << child;
                out << "\n";
                break;
            }
            case ac_kind::or_node:
                out << "O " << nd.var << " 2 " << nd.children[0] << ' ' << nd.children[1] << "\n";
                break;
        }
    }
    return out.str();
}

arithmetic_circuit parse_ac(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw std::runtime_error("parse_ac: line " + std::to_string(line_no) + ": " + msg);
    };

    arithmetic_circuit ac;
    long declared_nodes = -1, declared_edges = -1, declared_vars = -1;
    size_t edges = 0;
    std::vector<bool> has_meaning, is_param;
    bool saw_marker = false;

    auto parse_i = [&](const std::string& tok) -> long {
        try {
            size_t pos = 0;
            long v = std::stol(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            fail("bad integer '" + tok + "'");
        }
        return 0;
    };
    auto parse_n = [&](const std::string& tok) -> double {
        try {
            return parse_double(tok);
        } catch (...) {
            fail("bad number '" + tok + "'");
        }
        return 0;
    };
    auto parse_lab = [&](const std::string& tok) -> node_id {
        try {
            return node_id::from_label(tok);
        } catch (...) {
            fail("bad node label '" + tok + "'");
        }
        return {};
    };
    auto var_of = [&](const std::string& tok) -> int {
        long v = parse_i(tok);
        if (declared_vars < 0) fail("meaning line before header");
        if (v < 1 || v > declared_vars) fail("variable index out of range");
        return static_cast<int>(v);
    };

    std::vector<std::vector<std::string>> meta;  // c-lines buffered until header
    auto apply_meta = [&](const std::vector<std::string>& t) {
        const std::string& tag = t[1];
        if (tag == "ind") {
            if (t.size() != 5) fail("c ind expects: var label value");
            int v = var_of(t[2]);
            if (is_param[v]) fail("variable marked both indicator and parameter");
            ac.vars[v - 1].meaning = {cnf_var_kind::indicator, parse_lab(t[3]),
                                      static_cast<int>(parse_i(t[4])), -1};
            has_meaning[v] = true;
        } else if (tag == "p") {
            if (t.size() != 4) fail("c p expects: var param-id");
            int v = var_of(t[2]);
            if (has_meaning[v] && !is_param[v]) fail("variable marked both indicator and parameter");
            ac.vars[v - 1].meaning.kind = cnf_var_kind::parameter;
            ac.vars[v - 1].meaning.param = static_cast<int>(parse_i(t[3]));
            has_meaning[v] = is_param[v] = true;
        } else if (tag == "w") {
            if (t.size() != 5) fail("c w expects: var re im");
            int v = var_of(t[2]);
            if (has_meaning[v] && !is_param[v]) fail("weight line for an indicator variable");
            ac.vars[v - 1].meaning.kind = cnf_var_kind::parameter;
            ac.vars[v - 1].weight = {parse_n(t[3]), parse_n(t[4])};
            has_meaning[v] = is_param[v] = true;
        } else if (tag == "q" || tag == "s") {
            if (t.size() != 3) fail("c q/s expects: var");
            int v = var_of(t[2]);
            (tag == "q" ? ac.vars[v - 1].is_query : ac.vars[v - 1].is_summed) = true;
            saw_marker = true;
        } else if (tag == "o") {
            for (size_t i = 2; i < t.size(); ++i) ac.output_nodes.push_back(parse_lab(t[i]));
        } else if (tag == "e") {
            for (size_t i = 2; i < t.size(); ++i) ac.event_nodes.push_back(parse_lab(t[i]));
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<std::string> t;
        std::string tok;
        while (ls >> tok) t.push_back(tok);
        if (t.empty()) continue;
        if (t[0] == "c") {
            if (t.size() < 2) continue;
            if (declared_vars < 0)
                meta.push_back(t);
            else
                apply_meta(t);
            continue;
        }
        if (t[0] == "nnf") {
            if (declared_nodes >= 0) fail("duplicate header");
            if (t.size() != 4) fail("bad header");
            declared_nodes = parse_i(t[1]);
            declared_edges = parse_i(t[2]);
            declared_vars = parse_i(t[3]);
            if (declared_nodes < 1 || declared_edges < 0 || declared_vars < 0)
                fail("bad header counts");
            ac.vars.assign(declared_vars, {});
            has_meaning.assign(declared_vars + 1, false);
            is_param.assign(declared_vars + 1, false);
            for (const auto& m : meta) apply_meta(m);
            meta.clear();
            continue;
        }
        if (declared_nodes < 0) fail("node line before header");
        int cur = static_cast<int>(ac.nodes.size());
        ac_node nd;
        if (t[0] == "T") {
            if (t.size() != 1) fail("bad T line");
            nd.kind = ac_kind::constant_true;
        } else if (t[0] == "F") {
            if (t.size() != 1) fail("bad F line");
            nd.kind = ac_kind::constant_false;
        } else if (t[0] == "L") {
            if (t.size() != 2) fail("L expects one literal");
            long lit = parse_i(t[1]);
            if (lit == 0 || std::abs(lit) > declared_vars) fail("literal out of range");
            nd.kind = ac_kind::literal;
            nd.var = static_cast<int>(std::abs(lit));
            nd.positive = lit > 0;
        } else if (t[0] == "A") {
            if (t.size() < 2) fail("A expects a child count");
            long k = parse_i(t[1]);
            if (k < 0 || static_cast<size_t>(k) != t.size() - 2) fail("A child count mismatch");
            nd.kind = ac_kind::and_node;
            for (size_t i = 2; i < t.size(); ++i) {
                long child = parse_i(t[i]);
                if (child < 0 || child >= cur) fail("dangling child index");
                nd.children.push_back(static_cast<int>(child));
            }
        } else if (t[0] == "O") {
            if (t.size() != 5) fail("O expects: var 2 low high");
            long v = parse_i(t[1]);
            if (v < 1 || v > declared_vars) fail("decision variable out of range");
            if (parse_i(t[2]) != 2) fail("O arity must be 2");
            nd.kind = ac_kind::or_node;
            nd.var = static_cast<int>(v);
            for (size_t i = 3; i < t.size(); ++i) {
                long child = parse_i(t[i]);
                if (child < 0 || child >= cur) fail("dangling child index");
                nd.children.push_back(static_cast<int>(child));
            }
        } else {
            fail("unknown node line '" + t[0] + "'");
        }
        edges += nd.children.size();
        ac.nodes.push_back(std::move(nd));
    }
    line_no = 0;
    if (declared_nodes < 0) fail("missing header");
    if (static_cast<long>(ac.nodes.size()) != declared_nodes) fail("node count does not match header");
    if (static_cast<long>(edges) != declared_edges) fail("edge count does not match header");

    for (long v = 1; v <= declared_vars; ++v)
        if (!has_meaning[v])
            ac.vars[v - 1].meaning = {cnf_var_kind::indicator,
                                      {static_cast<int>(v) - 1, 0, false}, 1, -1};
    if (!saw_marker)
        for (auto& v : ac.vars)
            if (v.meaning.kind == cnf_var_kind::indicator) v.is_query = true;

    ac.root = static_cast<int>(ac.nodes.size()) - 1;
    ac.stats = compile_stats_of(ac);
    ac.finalize_indexes();
    return ac;
}

compile_stats compile_stats_of(const arithmetic_circuit& ac) {
    compile_stats s = ac.stats;
    s.node_count = ac.nodes.size();
    s.edge_count = 0;
    s.decision_count = 0;
    for (const auto& nd : ac.nodes) {
        s.edge_count += nd.children.size();
        if (nd.kind == ac_kind::or_node) ++s.decision_count;
    }
    return s;
}

}  // namespace qkc
