#include "qkc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "qkc/bayesnet.hpp"
#include "qkc/cnf.hpp"
#include "qkc/ddnnf.hpp"
#include "qkc/oracle.hpp"
#include "qkc/query.hpp"
#include "qkc/sampler.hpp"

namespace qkc {

namespace {

constexpr double pi = std::numbers::pi;

gate_app g1(gate_kind k, int q, std::vector<double> params = {}) {
    gate_app g;
    g.kind = k;
    g.qubits = {q};
    g.params = std::move(params);
    return g;
}

gate_app g2(gate_kind k, int a, int b, std::vector<double> params = {}) {
    gate_app g;
    g.kind = k;
    g.qubits = {a, b};
    g.params = std::move(params);
    return g;
}

// splitmix64 finalizer, used to derive independent-looking RNG seeds.
uint64_t derive_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// CCZ as CNOT/T/RZ(-pi/4) ladder (the Toffoli network without the Hadamard
// pair on the target); equals CCZ up to a global phase.
void append_ccz(circuit& c, int a, int b, int t) {
    const double tdg = -pi / 4;
    c.ops.push_back(g2(gate_kind::cnot, b, t));
    c.ops.push_back(g1(gate_kind::rz, t, {tdg}));
    c.ops.push_back(g2(gate_kind::cnot, a, t));
    c.ops.push_back(g1(gate_kind::t, t));
    c.ops.push_back(g2(gate_kind::cnot, b, t));
    c.ops.push_back(g1(gate_kind::rz, t, {tdg}));
    c.ops.push_back(g2(gate_kind::cnot, a, t));
    c.ops.push_back(g1(gate_kind::t, b));
    c.ops.push_back(g1(gate_kind::t, t));
    c.ops.push_back(g2(gate_kind::cnot, a, b));
    c.ops.push_back(g1(gate_kind::t, a));
    c.ops.push_back(g1(gate_kind::rz, b, {tdg}));
    c.ops.push_back(g2(gate_kind::cnot, a, b));
}

void append_h_layer(circuit& c) {
    for (int q = 0; q < c.num_qubits; ++q) c.ops.push_back(g1(gate_kind::h, q));
}

}  // namespace

graph random_regular_graph(int n, int degree, uint64_t seed) {
    if (n < 4 || n % 2 != 0 || degree < 1 || degree >= n || (n * degree) % 2 != 0)
        throw std::invalid_argument(
            "random_regular_graph: need even n >= 4 and 1 <= degree < n");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<size_t>(n) * degree);
        for (int v = 0; v < n; ++v)
            for (int d = 0; d < degree; ++d) stubs.push_back(v);
        // Fisher-Yates with our own uniform draw, so the result depends only
        // on the mt19937_64 stream and not on library shuffle internals.
        for (size_t i = stubs.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_unit(rng) * static_cast<double>(i));
            if (j >= i) j = i - 1;
            std::swap(stubs[i - 1], stubs[j]);
        }
        std::set<std::pair<int, int>> edges;
        bool simple = true;
        for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = std::min(stubs[i], stubs[i + 1]);
            int v = std::max(stubs[i], stubs[i + 1]);
            if (u == v || !edges.insert({u, v}).second) {
                simple = false;
                break;
            }
        }
        if (!simple) continue;
        graph g;
        g.n = n;
        g.edges.assign(edges.begin(), edges.end());
        return g;
    }
    throw std::runtime_error("random_regular_graph: no simple pairing found");
}

circuit build_qaoa_maxcut(const graph& g, const std::vector<double>& gammas,
                          const std::vector<double>& betas) {
    if (gammas.size() != betas.size())
        throw std::invalid_argument("build_qaoa_maxcut: gamma/beta length mismatch");
    circuit c;
    c.num_qubits = g.n;
    append_h_layer(c);
    for (size_t it = 0; it < gammas.size(); ++it) {
        for (const auto& [u, v] : g.edges) {
            c.ops.push_back(g2(gate_kind::cnot, u, v));
            c.ops.push_back(g1(gate_kind::rz, v, {2.0 * gammas[it]}));
            c.ops.push_back(g2(gate_kind::cnot, u, v));
        }
        for (int q = 0; q < g.n; ++q)
            c.ops.push_back(g1(gate_kind::rx, q, {2.0 * betas[it]}));
    }
    return c;
}

circuit build_qaoa_maxcut(int n, int iterations, uint64_t seed,
                          const std::vector<double>& gammas,
                          const std::vector<double>& betas) {
    if (static_cast<int>(gammas.size()) != iterations ||
        static_cast<int>(betas.size()) != iterations)
        throw std::invalid_argument(
            "build_qaoa_maxcut: need one gamma and one beta per iteration");
    return build_qaoa_maxcut(random_regular_graph(n, 3, seed), gammas, betas);
}

circuit build_vqe_ising(int rows, int cols, int steps, const std::vector<double>& angles) {
    if (rows < 1 || cols < 1 || rows * cols < 2)
        throw std::invalid_argument("build_vqe_ising: grid must have at least 2 sites");
    if (steps < 0) throw std::invalid_argument("build_vqe_ising: steps must be >= 0");
    const int n = rows * cols;
    const size_t per_step = 1 + 2 * static_cast<size_t>(n);
    if (angles.size() != per_step * static_cast<size_t>(steps))
        throw std::invalid_argument("build_vqe_ising: need steps * (1 + 2 * sites) angles");

    std::vector<std::pair<int, int>> edges;
    for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col) {
            int q = r * cols + col;
            if (col + 1 < cols) edges.emplace_back(q, q + 1);
            if (r + 1 < rows) edges.emplace_back(q, q + cols);
        }

    circuit c;
    c.num_qubits = n;
    for (int s = 0; s < steps; ++s) {
        const size_t base = per_step * static_cast<size_t>(s);
        double coupling = angles[base];
        for (const auto& [u, v] : edges) {
            c.ops.push_back(g2(gate_kind::cnot, u, v));
            c.ops.push_back(g1(gate_kind::rz, v, {coupling}));
            c.ops.push_back(g2(gate_kind::cnot, u, v));
        }
        for (int q = 0; q < n; ++q) {
            c.ops.push_back(g1(gate_kind::rx, q, {angles[base + 1 + 2 * static_cast<size_t>(q)]}));
            c.ops.push_back(g1(gate_kind::rz, q, {angles[base + 2 + 2 * static_cast<size_t>(q)]}));
        }
    }
    return c;
}

circuit build_rcs(int n, int depth, uint64_t seed) {
    if (n < 1 || n > 24)
        throw std::invalid_argument("build_rcs: qubit count must be in [1, 24]");
    if (depth < 0) throw std::invalid_argument("build_rcs: depth must be >= 0");
    circuit c;
    c.num_qubits = n;
    append_h_layer(c);
    std::mt19937_64 rng(seed);
    for (int layer = 0; layer < depth; ++layer) {
        for (int q = 0; q < n; ++q) {
            int pick = std::min(static_cast<int>(uniform_unit(rng) * 3.0), 2);
            if (pick == 0)
                c.ops.push_back(g1(gate_kind::rx, q, {pi / 2}));
            else if (pick == 1)
                c.ops.push_back(g1(gate_kind::ry, q, {pi / 2}));
            else
                c.ops.push_back(g1(gate_kind::t, q));
        }
        for (int q = layer % 2; q + 1 < n; q += 2)
            c.ops.push_back(g2(gate_kind::cz, q, q + 1));
    }
    return c;
}

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names = {
        "bell",         "teleport-core", "deutsch-jozsa", "bernstein-vazirani",
        "simon",        "hidden-shift",  "qft",           "grover",
    };
    return names;
}

circuit build_algorithm(const std::string& name) {
    circuit c;
    if (name == "bell") {
        c.num_qubits = 2;
        c.ops.push_back(g1(gate_kind::h, 0));
        c.ops.push_back(g2(gate_kind::cnot, 0, 1));
    } else if (name == "teleport-core") {
        // Deferred-measurement teleportation of RY(1.1)|0> from qubit 0 to
        // qubit 2; the classical corrections become CNOT/CZ.
        c.num_qubits = 3;
        c.ops.push_back(g1(gate_kind::ry, 0, {1.1}));
        c.ops.push_back(g1(gate_kind::h, 1));
        c.ops.push_back(g2(gate_kind::cnot, 1, 2));
        c.ops.push_back(g2(gate_kind::cnot, 0, 1));
        c.ops.push_back(g1(gate_kind::h, 0));
        c.ops.push_back(g2(gate_kind::cnot, 1, 2));
        c.ops.push_back(g2(gate_kind::cz, 0, 2));
    } else if (name == "deutsch-jozsa") {
        // Balanced oracle f(x) = x0 on three query qubits; the ancilla is
        // uncomputed back to |0>, so the output 1000 is deterministic.
        c.num_qubits = 4;
        c.ops.push_back(g1(gate_kind::x, 3));
        append_h_layer(c);
        c.ops.push_back(g2(gate_kind::cnot, 0, 3));
        for (int q = 0; q < 3; ++q) c.ops.push_back(g1(gate_kind::h, q));
        c.ops.push_back(g1(gate_kind::h, 3));
        c.ops.push_back(g1(gate_kind::x, 3));
    } else if (name == "bernstein-vazirani") {
        // Secret string 1011; ancilla uncomputed, output 10110.
        c.num_qubits = 5;
        c.ops.push_back(g1(gate_kind::x, 4));
        append_h_layer(c);
        c.ops.push_back(g2(gate_kind::cnot, 0, 4));
        c.ops.push_back(g2(gate_kind::cnot, 2, 4));
        c.ops.push_back(g2(gate_kind::cnot, 3, 4));
        for (int q = 0; q < 4; ++q) c.ops.push_back(g1(gate_kind::h, q));
        c.ops.push_back(g1(gate_kind::h, 4));
        c.ops.push_back(g1(gate_kind::x, 4));
    } else if (name == "simon") {
        // Secret s = 11 with oracle f(x) = (0, x0 xor x1): measurement of the
        // first register yields only strings orthogonal to s (00 and 11).
        c.num_qubits = 4;
        c.ops.push_back(g1(gate_kind::h, 0));
        c.ops.push_back(g1(gate_kind::h, 1));
        c.ops.push_back(g2(gate_kind::cnot, 0, 3));
        c.ops.push_back(g2(gate_kind::cnot, 1, 3));
        c.ops.push_back(g1(gate_kind::h, 0));
        c.ops.push_back(g1(gate_kind::h, 1));
    } else if (name == "hidden-shift") {
        // Bent function f(x) = x0 x1 xor x2 x3 (its own dual) with shift
        // s = 1001; the algorithm returns s deterministically.
        c.num_qubits = 4;
        append_h_layer(c);
        c.ops.push_back(g1(gate_kind::x, 0));
        c.ops.push_back(g1(gate_kind::x, 3));
        c.ops.push_back(g2(gate_kind::cz, 0, 1));
        c.ops.push_back(g2(gate_kind::cz, 2, 3));
        c.ops.push_back(g1(gate_kind::x, 0));
        c.ops.push_back(g1(gate_kind::x, 3));
        append_h_layer(c);
        c.ops.push_back(g2(gate_kind::cz, 0, 1));
        c.ops.push_back(g2(gate_kind::cz, 2, 3));
        append_h_layer(c);
    } else if (name == "qft") {
        c.num_qubits = 3;
        c.ops.push_back(g1(gate_kind::h, 0));
        c.ops.push_back(g2(gate_kind::cphase, 0, 1, {pi / 2}));
        c.ops.push_back(g2(gate_kind::cphase, 0, 2, {pi / 4}));
        c.ops.push_back(g1(gate_kind::h, 1));
        c.ops.push_back(g2(gate_kind::cphase, 1, 2, {pi / 2}));
        c.ops.push_back(g1(gate_kind::h, 2));
        c.ops.push_back(g2(gate_kind::swap, 0, 2));
    } else if (name == "grover") {
        // Three qubits, marked item 101, two iterations: P(101) ~ 0.945.
        c.num_qubits = 3;
        append_h_layer(c);
        for (int round = 0; round < 2; ++round) {
            c.ops.push_back(g1(gate_kind::x, 1));
            append_ccz(c, 0, 1, 2);
            c.ops.push_back(g1(gate_kind::x, 1));
            append_h_layer(c);
            for (int q = 0; q < 3; ++q) c.ops.push_back(g1(gate_kind::x, q));
            append_ccz(c, 0, 1, 2);
            for (int q = 0; q < 3; ++q) c.ops.push_back(g1(gate_kind::x, q));
            append_h_layer(c);
        }
    } else {
        throw std::invalid_argument("build_algorithm: unknown algorithm '" + name + "'");
    }
    return c;
}

circuit add_noise(const circuit& c, noise_kind kind, const std::vector<double>& params) {
    circuit out;
    out.num_qubits = c.num_qubits;
    out.initial = c.initial;
    for (const circuit_op& op : c.ops) {
        out.ops.push_back(op);
        if (const auto* g = std::get_if<gate_app>(&op)) {
            for (int q : g->qubits) {
                noise_app n;
                n.kind = kind;
                n.qubit = q;
                n.params = params;
                out.ops.push_back(n);
            }
        }
    }
    return out;
}

namespace {

// Angle sets for the rebind sweep: uniform in [0.1, 1.3], away from the
// degenerate values (0 and pi/2) where table entries fold to exact 0/1 and
// the parameter layout would change.
void sweep_angles(uint64_t seed, int k, int iterations, std::vector<double>& gammas,
                  std::vector<double>& betas) {
    std::mt19937_64 rng(derive_seed(seed ^ (0xA5A5ULL + static_cast<uint64_t>(k))));
    gammas.clear();
    betas.clear();
    for (int i = 0; i < iterations; ++i) {
        gammas.push_back(0.1 + 1.2 * uniform_unit(rng));
        betas.push_back(0.1 + 1.2 * uniform_unit(rng));
    }
}

}  // namespace

sweep_result qaoa_rebind_sweep(int n, int iterations, uint64_t seed, int k_rebinds) {
    if (k_rebinds < 1)
        throw std::invalid_argument("qaoa_rebind_sweep: need at least one rebind");
    graph g = random_regular_graph(n, 3, seed);

    sweep_result res;
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> gammas, betas;
    sweep_angles(seed, 0, iterations, gammas, betas);
    circuit c0 = build_qaoa_maxcut(g, gammas, betas);
    auto [bn, params] = circuit_to_bn(c0);
    weighted_cnf cnf = simplify_units(bn_to_cnf(bn, params));
    arithmetic_circuit ac = compile(cnf);
    res.compile_count = 1;
    res.compile_seconds = seconds_since(t0);
    res.ac_nodes = ac.nodes.size();

    session sess(ac, binding_from_table(params));
    const std::string bits(static_cast<size_t>(n), '0');
    for (int k = 0; k < k_rebinds; ++k) {
        auto t1 = std::chrono::steady_clock::now();
        sweep_angles(seed, k, iterations, gammas, betas);
        circuit ck = build_qaoa_maxcut(g, gammas, betas);
        auto [bn_k, params_k] = circuit_to_bn(ck);
        sess.rebind_params(binding_from_table(params_k));
        sweep_record rec;
        rec.gammas = gammas;
        rec.betas = betas;
        rec.amplitude = sess.basis_amplitude(bits);
        rec.seconds = seconds_since(t1);
        res.records.push_back(std::move(rec));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Command-line driver
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

// Problems with the invocation itself (bad paths, unknown workloads); these
// exit with code 1 instead of the computation-error code 2.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot open input file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

enum class text_kind { circuit_text, dimacs_text, nnf_text };

// Decides what an input file contains from its first significant token:
// "qubits" begins a circuit, "p" a DIMACS header, "nnf" an AC header;
// '#'-lines (circuit comments) and bare "c" lines (DIMACS/NNF metadata) are
// skipped.
text_kind sniff_kind(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok[0] == '#') continue;
        if (tok == "c") continue;
        if (tok == "qubits") return text_kind::circuit_text;
        if (tok == "p") return text_kind::dimacs_text;
        if (tok == "nnf") return text_kind::nnf_text;
        throw std::runtime_error("unrecognized input (expected a circuit, DIMACS CNF, or NNF file)");
    }
    throw std::runtime_error("empty input");
}

struct loaded_model {
    arithmetic_circuit ac;
    std::optional<param_binding> binding;
    std::optional<circuit> source;  // present when the input was a circuit
};

loaded_model load_model(const std::string& text, const compile_options& opts) {
    loaded_model m;
    switch (sniff_kind(text)) {
        case text_kind::circuit_text: {
            circuit c = parse_circuit(text);
            auto [bn, params] = circuit_to_bn(c);
            weighted_cnf cnf = simplify_units(bn_to_cnf(bn, params));
            m.ac = smooth(compile(cnf, opts));
            m.binding = binding_from_table(params);
            m.source = std::move(c);
            break;
        }
        case text_kind::dimacs_text: {
            weighted_cnf cnf = simplify_units(parse_dimacs(text));
            m.ac = smooth(compile(cnf, opts));
            break;
        }
        case text_kind::nnf_text:
            m.ac = parse_ac(text);
            break;
    }
    return m;
}

session make_session(const loaded_model& m) {
    return m.binding ? session(m.ac, *m.binding) : session(m.ac);
}

ordered_json json_cx(cx v) {
    return ordered_json{{"re", v.real()}, {"im", v.imag()}};
}

ordered_json json_stats(const compile_stats& st) {
    return ordered_json{
        {"node_count", st.node_count},     {"edge_count", st.edge_count},
        {"decision_count", st.decision_count}, {"cache_hits", st.cache_hits},
        {"cache_entries", st.cache_entries},   {"cache_disabled", st.cache_disabled},
        {"wall_seconds", st.wall_seconds},
    };
}

void print_json(const ordered_json& out) { std::cout << out.dump(2) << "\n"; }

struct cli_options {
    std::string input;
    std::string output;
    std::string order = "min-fill";
    bool no_elide = false;
    bool stats = false;

    std::string outputs;
    std::vector<int> events;

    int samples = 0;
    int burn_in = -1;
    uint64_t seed = 1;
    std::string scan = "fixed";
    int restart = 0;
    bool kl = false;

    std::string workload;
    int qubits = 8;
    int iterations = 1;
    int rows = 2, cols = 2, steps = 1;
    int depth = 4;
    int rebind_sweep = 0;
};

compile_options options_from(const cli_options& o) {
    compile_options opts;
    opts.order = o.order == "lex" ? var_order_kind::lexicographic : var_order_kind::min_fill;
    opts.elide_summed = !o.no_elide;
    return opts;
}

int run_compile(const cli_options& o) {
    loaded_model m = load_model(read_file(o.input), options_from(o));
    ordered_json out;
    out["format_version"] = 1;
    out["input"] = o.input;
    out["order"] = o.order;
    out["elide_summed"] = !o.no_elide;
    out["vars"] = m.ac.num_vars();
    out["nodes"] = m.ac.nodes.size();
    out["edges"] = m.ac.stats.edge_count;
    if (o.stats) out["stats"] = json_stats(m.ac.stats);
    std::string text = serialize_ac(m.ac);
    if (!o.output.empty()) {
        std::ofstream f(o.output, std::ios::binary);
        if (!f) throw usage_error("cannot open output file '" + o.output + "'");
        f << text;
        out["output"] = o.output;
    } else {
        out["ac"] = text;
    }
    print_json(out);
    return 0;
}

int run_amplitude(const cli_options& o) {
    loaded_model m = load_model(read_file(o.input), options_from(o));
    session sess = make_session(m);
    cx a = sess.basis_amplitude(o.outputs, o.events);
    ordered_json out;
    out["format_version"] = 1;
    out["outputs"] = o.outputs;
    out["events"] = o.events;
    out["amplitude"] = json_cx(a);
    out["probability"] = std::norm(a);
    print_json(out);
    return 0;
}

int run_density(const cli_options& o) {
    loaded_model m = load_model(read_file(o.input), options_from(o));
    session sess = make_session(m);
    cmatrix rho = sess.density_matrix();
    ordered_json out;
    out["format_version"] = 1;
    out["qubits"] = sess.num_outputs();
    cx trace = 0.0;
    for (int i = 0; i < rho.rows; ++i) trace += rho.at(i, i);
    out["trace"] = trace.real();
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < rho.rows; ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < rho.cols; ++c) row.push_back(json_cx(rho.at(r, c)));
        rows.push_back(std::move(row));
    }
    out["rho"] = std::move(rows);
    out["diagonal"] = sess.output_distribution();
    print_json(out);
    return 0;
}

int run_sample(const cli_options& o) {
    loaded_model m = load_model(read_file(o.input), options_from(o));
    session sess = make_session(m);
    gibbs_sampler sampler(sess);
    sampler_config cfg;
    cfg.samples = o.samples;
    cfg.burn_in = o.burn_in;
    cfg.seed = o.seed;
    cfg.scan = o.scan == "random" ? scan_kind::random : scan_kind::fixed;
    cfg.restart_period = o.restart;
    sample_report rep = sampler.run(cfg);
    if (o.kl) rep.kl_to_exact = kl_divergence(rep.counts, sess.output_distribution());
    ordered_json out;
    out["format_version"] = 1;
    out["samples"] = rep.samples;
    out["burn_in"] = rep.burn_in;
    out["seed"] = rep.seed;
    out["scan"] = o.scan;
    out["chain_length"] = rep.chain_length;
    out["gibbs_steps"] = rep.gibbs_steps;
    out["counts"] = rep.counts;
    if (o.kl) out["kl_to_exact"] = rep.kl_to_exact;
    print_json(out);
    return 0;
}

int run_validate(const cli_options& o) {
    std::string text = read_file(o.input);
    if (sniff_kind(text) != text_kind::circuit_text)
        throw usage_error("validate expects a circuit file");
    circuit c = parse_circuit(text);
    ordered_json out;
    out["format_version"] = 1;
    std::vector<std::string> diags = validate_circuit(c);
    if (!diags.empty()) {
        out["valid"] = false;
        out["diagnostics"] = diags;
        print_json(out);
        for (const std::string& d : diags) std::cerr << "invalid circuit: " << d << "\n";
        return 2;
    }

    bool noisy = false;
    for (const circuit_op& op : c.ops)
        if (std::holds_alternative<noise_app>(op)) noisy = true;

    auto [bn, params] = circuit_to_bn(c);
    weighted_cnf cnf = simplify_units(bn_to_cnf(bn, params));
    arithmetic_circuit ac = smooth(compile(cnf, compile_options{}));
    session sess(ac, binding_from_table(params));

    ordered_json checks = ordered_json::array();
    bool all_pass = true;
    auto add_check = [&](const std::string& name, double err, double tol) {
        bool pass = err <= tol;
        all_pass = all_pass && pass;
        checks.push_back(ordered_json{
            {"name", name}, {"max_error", err}, {"tolerance", tol}, {"pass", pass}});
    };

    std::vector<std::string> structural = check_ddnnf(ac);
    if (!structural.empty()) {
        out["valid"] = false;
        out["diagnostics"] = structural;
        print_json(out);
        for (const std::string& d : structural) std::cerr << "bad compile: " << d << "\n";
        return 2;
    }

    if (!noisy) {
        if (c.num_qubits > 12)
            throw std::runtime_error("validate: ideal cross-check limited to 12 qubits");
        std::vector<cx> sv = oracle::statevector_simulate(c);
        double err = 0.0;
        const int n = c.num_qubits;
        for (size_t x = 0; x < sv.size(); ++x) {
            std::string bits(static_cast<size_t>(n), '0');
            for (int q = 0; q < n; ++q)
                bits[static_cast<size_t>(q)] =
                    static_cast<char>('0' + ((x >> (n - 1 - q)) & 1));
            err = std::max(err, std::abs(sess.basis_amplitude(bits) - sv[x]));
        }
        add_check("statevector_amplitudes", err, 1e-9);
    } else {
        if (c.num_qubits > 10)
            throw std::runtime_error("validate: noisy cross-check limited to 10 qubits");
        cmatrix want = oracle::density_matrix_simulate(c);
        cmatrix got = sess.density_matrix();
        double err = 0.0;
        for (int r = 0; r < want.rows; ++r)
            for (int col = 0; col < want.cols; ++col)
                err = std::max(err, std::abs(want.at(r, col) - got.at(r, col)));
        add_check("density_matrix", err, 1e-8);
        cx trace = 0.0;
        for (int i = 0; i < got.rows; ++i) trace += got.at(i, i);
        add_check("trace_preservation", std::abs(trace - cx{1.0}), 1e-8);
    }

    out["valid"] = all_pass;
    out["checks"] = std::move(checks);
    print_json(out);
    return all_pass ? 0 : 2;
}

ordered_json bench_compile_report(const circuit& c, const std::string& workload) {
    auto t0 = std::chrono::steady_clock::now();
    auto [bn, params] = circuit_to_bn(c);
    weighted_cnf cnf = simplify_units(bn_to_cnf(bn, params));
    arithmetic_circuit ac = compile(cnf);
    double secs = seconds_since(t0);
    ordered_json out;
    out["format_version"] = 1;
    out["workload"] = workload;
    out["qubits"] = c.num_qubits;
    out["ops"] = c.ops.size();
    out["cnf_vars"] = cnf.num_vars();
    out["cnf_clauses"] = cnf.clauses.size();
    out["ac_nodes"] = ac.nodes.size();
    out["ac_edges"] = ac.stats.edge_count;
    out["compile_seconds"] = secs;
    out["stats"] = json_stats(ac.stats);
    return out;
}

int run_bench(const cli_options& o) {
    const std::vector<std::string>& algos = algorithm_names();
    bool is_algo = std::find(algos.begin(), algos.end(), o.workload) != algos.end();
    if (o.workload != "qaoa" && o.workload != "vqe" && o.workload != "rcs" && !is_algo)
        throw usage_error("unknown workload '" + o.workload +
                          "' (expected qaoa, vqe, rcs, or an algorithm name)");

    if (o.workload == "qaoa" && o.rebind_sweep > 0) {
        sweep_result res = qaoa_rebind_sweep(o.qubits, o.iterations, o.seed, o.rebind_sweep);
        ordered_json out;
        out["format_version"] = 1;
        out["workload"] = "qaoa";
        out["qubits"] = o.qubits;
        out["iterations"] = o.iterations;
        out["seed"] = o.seed;
        out["compile_count"] = res.compile_count;
        out["compile_seconds"] = res.compile_seconds;
        out["ac_nodes"] = res.ac_nodes;
        ordered_json records = ordered_json::array();
        for (const sweep_record& r : res.records)
            records.push_back(ordered_json{{"gammas", r.gammas},
                                           {"betas", r.betas},
                                           {"amplitude", json_cx(r.amplitude)},
                                           {"seconds", r.seconds}});
        out["records"] = std::move(records);
        print_json(out);
        return 0;
    }

    circuit c;
    if (o.workload == "qaoa") {
        std::vector<double> gammas, betas;
        sweep_angles(o.seed, 0, o.iterations, gammas, betas);
        c = build_qaoa_maxcut(o.qubits, o.iterations, o.seed, gammas, betas);
    } else if (o.workload == "vqe") {
        const size_t count =
            static_cast<size_t>(o.steps) * (1 + 2 * static_cast<size_t>(o.rows * o.cols));
        std::mt19937_64 rng(derive_seed(o.seed));
        std::vector<double> angles;
        for (size_t i = 0; i < count; ++i) angles.push_back(0.1 + 1.2 * uniform_unit(rng));
        c = build_vqe_ising(o.rows, o.cols, o.steps, angles);
    } else if (o.workload == "rcs") {
        c = build_rcs(o.qubits, o.depth, o.seed);
    } else {
        c = build_algorithm(o.workload);
    }
    print_json(bench_compile_report(c, o.workload));
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    cli_options o;
    CLI::App app{"knowledge-compilation simulator for noisy quantum circuits"};
    app.require_subcommand(1);

    CLI::App* cmd_compile =
        app.add_subcommand("compile", "compile a circuit or CNF into an arithmetic circuit");
    cmd_compile->add_option("input", o.input, "circuit or DIMACS file")->required();
    cmd_compile->add_option("-o,--output", o.output, "write the AC here instead of stdout JSON");
    cmd_compile->add_option("--order", o.order, "variable order")
        ->check(CLI::IsMember({"min-fill", "lex"}));
    cmd_compile->add_flag("--no-elide", o.no_elide, "keep summed-variable leaves");
    cmd_compile->add_flag("--stats", o.stats, "include compiler statistics");

    CLI::App* cmd_amplitude =
        app.add_subcommand("amplitude", "amplitude of one output/event assignment");
    cmd_amplitude->add_option("input", o.input, "circuit, DIMACS, or AC file")->required();
    cmd_amplitude->add_option("--outputs", o.outputs, "output bitstring, qubit 0 first")
        ->required();
    cmd_amplitude->add_option("--events", o.events, "noise-event values in circuit order")
        ->delimiter(',');

    CLI::App* cmd_density = app.add_subcommand("density", "density matrix and diagonal");
    cmd_density->add_option("input", o.input, "circuit, DIMACS, or AC file")->required();

    CLI::App* cmd_sample = app.add_subcommand("sample", "Gibbs-sample output bitstrings");
    cmd_sample->add_option("input", o.input, "circuit, DIMACS, or AC file")->required();
    cmd_sample->add_option("-n,--samples", o.samples, "recorded samples")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd_sample->add_option("--burn-in", o.burn_in, "burn-in sweeps (default 10x chain length)");
    cmd_sample->add_option("--seed", o.seed, "RNG seed");
    cmd_sample->add_option("--scan", o.scan, "variable scan order")
        ->check(CLI::IsMember({"fixed", "random"}));
    cmd_sample->add_option("--restart", o.restart, "re-initialize every R sweeps (0 = off)");
    cmd_sample->add_flag("--kl", o.kl, "report KL(empirical || exact)");

    CLI::App* cmd_validate =
        app.add_subcommand("validate", "cross-check a circuit against brute-force oracles");
    cmd_validate->add_option("input", o.input, "circuit file")->required();

    CLI::App* cmd_bench = app.add_subcommand("bench", "generate and compile a workload");
    cmd_bench->add_option("workload", o.workload, "qaoa | vqe | rcs | <algorithm>")->required();
    cmd_bench->add_option("--qubits", o.qubits, "qubit count (qaoa/rcs)");
    cmd_bench->add_option("--iterations", o.iterations, "QAOA iterations");
    cmd_bench->add_option("--rows", o.rows, "VQE grid rows");
    cmd_bench->add_option("--cols", o.cols, "VQE grid columns");
    cmd_bench->add_option("--steps", o.steps, "VQE ansatz repetitions");
    cmd_bench->add_option("--depth", o.depth, "RCS layers");
    cmd_bench->add_option("--seed", o.seed, "generator seed");
    cmd_bench->add_option("--rebind-sweep", o.rebind_sweep,
                          "compile once, rebind K angle sets (qaoa only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_compile->parsed()) return run_compile(o);
        if (cmd_amplitude->parsed()) return run_amplitude(o);
        if (cmd_density->parsed()) return run_density(o);
        if (cmd_sample->parsed()) return run_sample(o);
        if (cmd_validate->parsed()) return run_validate(o);
        if (cmd_bench->parsed()) return run_bench(o);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace qkc
