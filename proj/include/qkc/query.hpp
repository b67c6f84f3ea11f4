#pragma once

#include <map>
#include <string>
#include <vector>

#include "qkc/ddnnf.hpp"

namespace qkc {

// Partial assignment of output / noise-event nodes.  Other nodes may not be
// assigned (evaluate rejects them).
using evidence = std::map<node_id, int>;

// Values for every parameter id referenced by an AC.
using param_binding = std::map<int, cx>;

// Binding derived from a construction-time parameter table.
param_binding binding_from_table(const param_table& params);

// Query session over one compiled circuit: owns the upward/downward value
// arrays and the current binding.  The AC itself is shared read-only; one
// session must stay on one thread, but several sessions may share an AC.
class session {
  public:
    explicit session(const arithmetic_circuit& ac);
    session(const arithmetic_circuit& ac, const param_binding& binding);

    // Replaces parameter values without recompiling; invalidates caches.
    // Throws std::invalid_argument if any parameter id in the AC is missing.
    void rebind_params(const param_binding& binding);

    // Upward pass: returns the amplitude (coherent path sum) of the
    // evidence.  Unassigned query nodes are summed over coherently.
    cx evaluate(const evidence& e);

    // Downward pass over the last evaluate() call.  After it,
    // derivative(node, value) is d f / d lambda_{node=value}, which by
    // evidence retraction equals evaluate() with that node reassigned.
    // Throws std::logic_error when caches are stale.
    void differentiate();
    cx derivative(const node_id& node, int value) const;
    // All query-var derivatives keyed by (node, value).
    std::map<std::pair<node_id, int>, cx> derivatives() const;

    // Full evidence wrapper: outputs as a bitstring (index = qubit), noise
    // events as one value per event node in circuit order.
    cx basis_amplitude(const std::string& outputs, const std::vector<int>& events = {});

    // rho = sum over noise-event assignments v of a_v a_v^dagger, where a_v
    // is the amplitude vector over output bitstrings.  Throws when
    // 2^n * prod(event domains) exceeds the enumeration limit.
    cmatrix density_matrix();

    // Diagonal of rho keyed by bitstring: P(x) = sum_v |a_v(x)|^2.
    std::map<std::string, double> output_distribution();

    const arithmetic_circuit& ac() const { return ac_; }
    const std::vector<node_id>& output_nodes() const { return ac_.output_nodes; }
    const std::vector<node_id>& event_nodes() const { return ac_.event_nodes; }
    const std::vector<int>& event_domains() const { return event_domains_; }
    int num_outputs() const { return static_cast<int>(ac_.output_nodes.size()); }

    // Nodes touched by the most recent upward / downward pass (each pass
    // visits every node exactly once; exposed for the linearity tests).
    size_t last_visit_count() const { return last_visit_count_; }

    static constexpr size_t enumeration_limit = size_t(1) << 20;

  private:
    void require_fresh_upward() const;

    const arithmetic_circuit& ac_;
    std::vector<cx> bound_weight_;   // per var (1-based), parameters only
    std::vector<cx> upward_;
    std::vector<cx> downward_;
    evidence last_evidence_;
    bool has_upward_ = false;
    bool has_downward_ = false;
    std::vector<int> event_domains_;
    size_t last_visit_count_ = 0;

    // Index over the variable table: per query node its indicator variables
    // and value domain, and the (node, value) -> variable map.  The upward
    // pass reads evidence through a per-variable consistency array that is
    // reset via a dirty list, keeping each evaluate call linear.
    std::map<node_id, std::vector<int>> node_vars_;
    std::map<node_id, int> node_domain_;
    std::map<std::pair<node_id, int>, int> var_of_value_;
    std::vector<int8_t> consistent_;
    std::vector<int> dirty_;
};

}  // namespace qkc
