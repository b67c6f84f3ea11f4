#include "qkc/query.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace qkc {

param_binding binding_from_table(const param_table& params) {
    param_binding b;
    for (size_t i = 0; i < params.size(); ++i) b[static_cast<int>(i)] = params.values[i];
    return b;
}

session::session(const arithmetic_circuit& ac) : ac_(ac) {
    bound_weight_.assign(ac_.vars.size() + 1, 1.0);
    for (size_t i = 0; i < ac_.vars.size(); ++i)
        if (ac_.vars[i].meaning.kind == cnf_var_kind::parameter)
            bound_weight_[i + 1] = ac_.vars[i].weight;

    std::set<node_id> query_nodes(ac_.output_nodes.begin(), ac_.output_nodes.end());
    query_nodes.insert(ac_.event_nodes.begin(), ac_.event_nodes.end());
    for (size_t i = 0; i < ac_.vars.size(); ++i) {
        const cnf_var& m = ac_.vars[i].meaning;
        if (m.kind != cnf_var_kind::indicator || !query_nodes.count(m.node)) continue;
        int v = static_cast<int>(i) + 1;
        node_vars_[m.node].push_back(v);
        int& d = node_domain_[m.node];
        d = std::max(d, m.value + 1);
        var_of_value_[{m.node, m.value}] = v;
    }
    consistent_.assign(ac_.vars.size() + 1, 1);

    for (const auto& ev : ac_.event_nodes) {
        auto it = node_domain_.find(ev);
        event_domains_.push_back(it == node_domain_.end() ? 2 : it->second);
    }
}

session::session(const arithmetic_circuit& ac, const param_binding& binding) : session(ac) {
    rebind_params(binding);
}

void session::rebind_params(const param_binding& binding) {
    for (size_t i = 0; i < ac_.vars.size(); ++i) {
        if (ac_.vars[i].meaning.kind != cnf_var_kind::parameter) continue;
        auto it = binding.find(ac_.vars[i].meaning.param);
        if (it == binding.end())
            throw std::invalid_argument("rebind_params: missing value for parameter " +
                                        std::to_string(ac_.vars[i].meaning.param));
        bound_weight_[i + 1] = it->second;
    }
    has_upward_ = has_downward_ = false;
}

cx session::evaluate(const evidence& e) {
    for (int v : dirty_) consistent_[v] = 1;
    dirty_.clear();
    for (const auto& [node, value] : e) {
        auto it = node_vars_.find(node);
        if (it == node_vars_.end())
            throw std::invalid_argument("evaluate: evidence on non-query node " + node.label());
        if (value < 0 || value >= node_domain_[node])
            throw std::invalid_argument("evaluate: value " + std::to_string(value) +
                                        " out of range for node " + node.label());
        for (int v : it->second) {
            consistent_[v] = ac_.vars[v - 1].meaning.value == value ? 1 : 0;
            dirty_.push_back(v);
        }
    }

    upward_.resize(ac_.nodes.size());
    for (size_t i = 0; i < ac_.nodes.size(); ++i) {
        const ac_node& n = ac_.nodes[i];
        switch (n.kind) {
            case ac_kind::constant_true: upward_[i] = 1.0; break;
            case ac_kind::constant_false: upward_[i] = 0.0; break;
            case ac_kind::literal:
                if (!n.positive)
                    upward_[i] = 1.0;
                else if (ac_.vars[n.var - 1].meaning.kind == cnf_var_kind::parameter)
                    upward_[i] = bound_weight_[n.var];
                else
                    upward_[i] = consistent_[n.var] ? 1.0 : 0.0;
                break;
            case ac_kind::and_node: {
                cx p = 1.0;
                for (int c : n.children) p *= upward_[c];
                upward_[i] = p;
                break;
            }
            case ac_kind::or_node:
                upward_[i] = upward_[n.children[0]] + upward_[n.children[1]];
                break;
        }
    }
    last_visit_count_ = ac_.nodes.size();
    last_evidence_ = e;
    has_upward_ = true;
    has_downward_ = false;
    return upward_[ac_.root];
}

void session::require_fresh_upward() const {
    if (!has_upward_)
        throw std::logic_error("differentiate: no evaluate() result for the current binding");
}

void session::differentiate() {
    require_fresh_upward();
    downward_.assign(ac_.nodes.size(), 0.0);
    downward_[ac_.root] = 1.0;
    std::vector<cx> prefix;
    for (size_t i = ac_.nodes.size(); i-- > 0;) {
        const ac_node& n = ac_.nodes[i];
        cx d = downward_[i];
        if (n.kind == ac_kind::or_node) {
            downward_[n.children[0]] += d;
            downward_[n.children[1]] += d;
        } else if (n.kind == ac_kind::and_node) {
            // Sibling products without division: prefix then suffix sweep.
            size_t k = n.children.size();
            prefix.resize(k);
            cx acc = 1.0;
            for (size_t j = 0; j < k; ++j) {
                prefix[j] = acc;
                acc *= upward_[n.children[j]];
            }
            cx suffix = 1.0;
            for (size_t j = k; j-- > 0;) {
                downward_[n.children[j]] += d * prefix[j] * suffix;
                suffix *= upward_[n.children[j]];
            }
        }
    }
    last_visit_count_ = ac_.nodes.size();
    has_downward_ = true;
}

cx session::derivative(const node_id& node, int value) const {
    if (!has_downward_) throw std::logic_error("derivative: differentiate() has not been run");
    auto dom = node_domain_.find(node);
    if (dom == node_domain_.end())
        throw std::invalid_argument("derivative: not a query node: " + node.label());
    if (value < 0 || value >= dom->second)
        throw std::invalid_argument("derivative: value out of range for node " + node.label());
    auto it = var_of_value_.find({node, value});
    if (it == var_of_value_.end()) return 0.0;
    cx sum = 0.0;
    for (int leaf : ac_.positive_leaves[it->second]) sum += downward_[leaf];
    return sum;
}

std::map<std::pair<node_id, int>, cx> session::derivatives() const {
    if (!has_downward_) throw std::logic_error("derivatives: differentiate() has not been run");
    std::map<std::pair<node_id, int>, cx> out;
    for (const auto& [key, var] : var_of_value_) {
        cx sum = 0.0;
        for (int leaf : ac_.positive_leaves[var]) sum += downward_[leaf];
        out[key] = sum;
    }
    return out;
}

cx session::basis_amplitude(const std::string& outputs, const std::vector<int>& events) {
    if (static_cast<int>(outputs.size()) != num_outputs())
        throw std::invalid_argument("basis_amplitude: bitstring length does not match qubit count");
    if (events.size() != ac_.event_nodes.size())
        throw std::invalid_argument("basis_amplitude: noise-event count mismatch");
    evidence e;
    for (int q = 0; q < num_outputs(); ++q) {
        char c = outputs[q];
        if (c != '0' && c != '1')
            throw std::invalid_argument("basis_amplitude: bitstring must be over {0,1}");
        e[ac_.output_nodes[q]] = c - '0';
    }
    for (size_t j = 0; j < events.size(); ++j) e[ac_.event_nodes[j]] = events[j];
    return evaluate(e);
}

namespace {

// Mixed-radix enumeration over noise-event values; calls fn per assignment.
template <typename F>
void for_each_event_tuple(const std::vector<int>& domains, F&& fn) {
    std::vector<int> v(domains.size(), 0);
    while (true) {
        fn(v);
        size_t i = 0;
        while (i < v.size() && ++v[i] == domains[i]) v[i++] = 0;
        if (i == v.size()) break;
    }
}

size_t enumeration_size(int num_outputs, const std::vector<int>& domains, size_t limit) {
    size_t total = size_t(1) << num_outputs;
    for (int d : domains) {
        total *= static_cast<size_t>(d);
        if (total > limit) return limit + 1;
    }
    return total;
}

}  // namespace

cmatrix session::density_matrix() {
    int n = num_outputs();
    if (enumeration_size(n, event_domains_, enumeration_limit) > enumeration_limit)
        throw std::runtime_error("density_matrix: enumeration limit exceeded");
    size_t dim = size_t(1) << n;

    cmatrix rho(static_cast<int>(dim), static_cast<int>(dim));
    std::vector<cx> a(dim);
    std::string bits(n, '0');
    for_each_event_tuple(event_domains_, [&](const std::vector<int>& events) {
        for (size_t x = 0; x < dim; ++x) {
            for (int q = 0; q < n; ++q) bits[q] = (x >> (n - 1 - q)) & 1 ? '1' : '0';
            a[x] = basis_amplitude(bits, events);
        }
        for (size_t r = 0; r < dim; ++r) {
            if (a[r] == cx{}) continue;
            for (size_t c = 0; c < dim; ++c)
                rho.at(static_cast<int>(r), static_cast<int>(c)) += a[r] * std::conj(a[c]);
        }
    });
    return rho;
}

std::map<std::string, double> session::output_distribution() {
    int n = num_outputs();
    if (enumeration_size(n, event_domains_, enumeration_limit) > enumeration_limit)
        throw std::runtime_error("output_distribution: enumeration limit exceeded");
    size_t dim = size_t(1) << n;

    std::map<std::string, double> dist;
    std::string bits(n, '0');
    for (size_t x = 0; x < dim; ++x) {
        for (int q = 0; q < n; ++q) bits[q] = (x >> (n - 1 - q)) & 1 ? '1' : '0';
        double p = 0.0;
        for_each_event_tuple(event_domains_, [&](const std::vector<int>& events) {
            p += std::norm(basis_amplitude(bits, events));
        });
        dist[bits] = p;
    }
    return dist;
}

}  // namespace qkc
