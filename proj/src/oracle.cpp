#include "qkc/oracle.hpp"

#include <stdexcept>
#include <variant>

namespace qkc::oracle {

namespace {

// Applies a 2x2 or 4x4 matrix to the given qubits of a dense state vector.
// Qubit 0 owns the most significant index bit.
void apply_to_vector(std::vector<cx>& psi, int n, const cmatrix& m, const std::vector<int>& qs) {
    if (m.rows == 2) {
        size_t bit = size_t(1) << (n - 1 - qs[0]);
        for (size_t i = 0; i < psi.size(); ++i) {
            if (i & bit) continue;
            cx a = psi[i], b = psi[i | bit];
            psi[i] = m.at(0, 0) * a + m.at(0, 1) * b;
            psi[i | bit] = m.at(1, 0) * a + m.at(1, 1) * b;
        }
    } else {
        size_t b0 = size_t(1) << (n - 1 - qs[0]);  // high-order matrix index bit
        size_t b1 = size_t(1) << (n - 1 - qs[1]);
        for (size_t i = 0; i < psi.size(); ++i) {
            if ((i & b0) || (i & b1)) continue;
            size_t idx[4] = {i, i | b1, i | b0, i | b0 | b1};
            cx v[4] = {psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
            for (int r = 0; r < 4; ++r) {
                cx s = 0;
                for (int k = 0; k < 4; ++k) s += m.at(r, k) * v[k];
                psi[idx[r]] = s;
            }
        }
    }
}

cmatrix conj_of(const cmatrix& m) {
    cmatrix r = m;
    for (auto& v : r.data) v = std::conj(v);
    return r;
}

// rho <- M rho (per column), then optionally rho <- rho M^dagger via the
// conjugate matrix applied to rows.
void left_apply(cmatrix& rho, int n, const cmatrix& m, const std::vector<int>& qs) {
    int dim = rho.rows;
    std::vector<cx> col(dim);
    for (int c = 0; c < dim; ++c) {
        for (int r = 0; r < dim; ++r) col[r] = rho.at(r, c);
        apply_to_vector(col, n, m, qs);
        for (int r = 0; r < dim; ++r) rho.at(r, c) = col[r];
    }
}

void right_apply_dagger(cmatrix& rho, int n, const cmatrix& m, const std::vector<int>& qs) {
    cmatrix mc = conj_of(m);
    int dim = rho.rows;
    std::vector<cx> row(dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) row[c] = rho.at(r, c);
        apply_to_vector(row, n, mc, qs);
        for (int c = 0; c < dim; ++c) rho.at(r, c) = row[c];
    }
}

size_t basis_index(const circuit& c) {
    size_t idx = 0;
    for (int i = 0; i < c.num_qubits; ++i)
        if (c.initial_bit(i)) idx |= size_t(1) << (c.num_qubits - 1 - i);
    return idx;
}

}  // namespace

std::vector<cx> statevector_simulate(const circuit& c) {
    if (c.num_qubits > 20)
        throw std::invalid_argument("statevector_simulate: more than 20 qubits");
    std::vector<cx> psi(size_t(1) << c.num_qubits);
    psi[basis_index(c)] = 1.0;
    for (const auto& op : c.ops) {
        const auto* g = std::get_if<gate_app>(&op);
        if (!g) throw std::invalid_argument("statevector_simulate: circuit contains noise");
        apply_to_vector(psi, c.num_qubits, gate_unitary(*g), g->qubits);
    }
    return psi;
}

cmatrix density_matrix_simulate(const circuit& c) {
    if (c.num_qubits > 10)
        throw std::invalid_argument("density_matrix_simulate: more than 10 qubits");
    int dim = 1 << c.num_qubits;
    cmatrix rho(dim, dim);
    rho.at(basis_index(c), basis_index(c)) = 1.0;
    for (const auto& op : c.ops) {
        if (const auto* g = std::get_if<gate_app>(&op)) {
            cmatrix u = gate_unitary(*g);
            left_apply(rho, c.num_qubits, u, g->qubits);
            right_apply_dagger(rho, c.num_qubits, u, g->qubits);
        } else {
            const auto& nz = std::get<noise_app>(op);
            cmatrix next(dim, dim);
            for (const cmatrix& e : kraus_set(nz)) {
                cmatrix term = rho;
                left_apply(term, c.num_qubits, e, {nz.qubit});
                right_apply_dagger(term, c.num_qubits, e, {nz.qubit});
                for (size_t k = 0; k < next.data.size(); ++k) next.data[k] += term.data[k];
            }
            rho = std::move(next);
        }
    }
    return rho;
}

cx brute_force_wmc(const weighted_cnf& cnf, const std::map<node_id, int>& evidence) {
    int v = cnf.num_vars();
    if (v > 24) throw std::invalid_argument("brute_force_wmc: more than 24 variables");

    // Per-variable factor when assigned true (false assignments contribute 1).
    std::vector<cx> true_factor(v);
    for (int i = 0; i < v; ++i) {
        const cnf_var& cv = cnf.vars[i];
        if (cv.kind == cnf_var_kind::parameter) {
            true_factor[i] = cnf.weights[i];
        } else {
            auto it = evidence.find(cv.node);
            true_factor[i] = (it == evidence.end() || it->second == cv.value) ? 1.0 : 0.0;
        }
    }

    // Contribution of variables fixed away by simplify_units.
    cx fixed_factor = 1.0;
    for (const auto& f : cnf.fixed) {
        if (!f.value) continue;
        if (f.var.kind == cnf_var_kind::parameter) {
            fixed_factor *= f.weight;
        } else {
            auto it = evidence.find(f.var.node);
            if (it != evidence.end() && it->second != f.var.value) fixed_factor = 0.0;
        }
    }

    std::vector<uint32_t> pos_mask(cnf.clauses.size()), neg_mask(cnf.clauses.size());
    for (size_t ci = 0; ci < cnf.clauses.size(); ++ci)
        for (int lit : cnf.clauses[ci]) {
            int var = lit > 0 ? lit : -lit;
            if (lit > 0) pos_mask[ci] |= uint32_t(1) << (var - 1);
            else neg_mask[ci] |= uint32_t(1) << (var - 1);
        }

    cx total = 0.0;
    for (uint32_t a = 0;; ++a) {
        bool sat = true;
        for (size_t ci = 0; ci < cnf.clauses.size() && sat; ++ci)
            sat = (a & pos_mask[ci]) || (~a & neg_mask[ci]);
        if (sat) {
            cx w = 1.0;
            for (int i = 0; i < v && w != cx{}; ++i)
                if (a & (uint32_t(1) << i)) w *= true_factor[i];
            total += w;
        }
        if (v < 32 && a + 1 == (uint32_t(1) << v)) break;
        if (v == 0) break;
    }
    return fixed_factor * total;
}

}  // namespace qkc::oracle
