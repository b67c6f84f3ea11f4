#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace qt;

namespace {

const double kS = 1.0 / std::sqrt(2.0);

evidence noisy_bell_evidence(int rv, int out) {
    return {{node_id::from_label("q0m2rv"), rv},
            {node_id::from_label("q0m1"), out >> 1},
            {node_id::from_label("q1m3"), out & 1}};
}

// Two-qubit circuit text with five independent angles; used to exercise
// parameter rebinding against freshly built pipelines.
std::string angled_circuit(const std::array<double, 5>& a) {
    std::ostringstream out;
    out << "qubits 2\nh 0\nh 1\n";
    out << "rz 0 " << format_double(a[0]) << "\n";
    out << "rz 1 " << format_double(a[1]) << "\n";
    out << "cphase 0 1 " << format_double(a[2]) << "\n";
    out << "rx 0 " << format_double(a[3]) << "\n";
    out << "ry 1 " << format_double(a[4]) << "\n";
    return out.str();
}

evidence random_full_evidence(const pipeline& p, session& s, std::mt19937_64& rng) {
    evidence e;
    for (const auto& n : p.ac.output_nodes) e[n] = rnd_int(rng, 2);
    const auto& doms = s.event_domains();
    for (size_t i = 0; i < p.ac.event_nodes.size(); ++i)
        e[p.ac.event_nodes[i]] = rnd_int(rng, doms[i]);
    return e;
}

}  // namespace

TEST_CASE("noisy Bell amplitudes carry the damped weights on the output pairs") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    const double want[2][4] = {{kS, 0, 0, 0.8 * kS}, {0, 0, 0, 0.6 * kS}};
    for (int rv = 0; rv < 2; ++rv)
        for (int out = 0; out < 4; ++out) {
            cx amp = s.evaluate(noisy_bell_evidence(rv, out));
            CHECK_MESSAGE(std::abs(std::abs(amp) - want[rv][out]) < 1e-15,
                          "event ", rv, " outputs ", out);
            cx walked = bn_walk(p.bn, p.params, noisy_bell_evidence(rv, out));
            CHECK(cxdist(amp, walked) < 1e-15);
        }
    // The undamped pair is exactly the positive real amplitude.
    CHECK(cxdist(s.evaluate(noisy_bell_evidence(0, 0)), cx(kS)) < 1e-15);
}

TEST_CASE("partial evidence sums the unassigned nodes coherently") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    std::vector<evidence> cases = {
        {},
        {{node_id::from_label("q0m1"), 0}},
        {{node_id::from_label("q1m3"), 1}},
        {{node_id::from_label("q0m2rv"), 1}},
        {{node_id::from_label("q0m1"), 1}, {node_id::from_label("q0m2rv"), 0}},
    };
    for (const auto& e : cases)
        CHECK(cxdist(s.evaluate(e), oracle::brute_force_wmc(p.raw_cnf, e)) < 1e-12);
}

TEST_CASE("basis_amplitude maps bitstrings with qubit zero most significant") {
    pipeline p = pipe("qubits 2\nh 0\ncnot 0 1\n");
    session& s = p.s();
    CHECK(cxdist(s.basis_amplitude("00"), cx(kS)) < 1e-12);
    CHECK(cxdist(s.basis_amplitude("11"), cx(kS)) < 1e-12);
    CHECK(cxdist(s.basis_amplitude("01"), cx(0.0)) < 1e-12);
    CHECK(cxdist(s.basis_amplitude("10"), cx(0.0)) < 1e-12);
    CHECK_THROWS_AS(s.basis_amplitude("0"), std::invalid_argument);
    CHECK_THROWS_AS(s.basis_amplitude("012"), std::invalid_argument);
    CHECK_THROWS_AS(s.basis_amplitude("0x"), std::invalid_argument);
    CHECK_THROWS_AS(s.basis_amplitude("00", {0}), std::invalid_argument);

    pipeline noisy = pipe(kNoisyBell);
    CHECK(cxdist(noisy.s().basis_amplitude("11", {0}), cx(0.8 * kS)) < 1e-12);
    CHECK_THROWS_AS(noisy.s().basis_amplitude("11"), std::invalid_argument);
}

TEST_CASE("evaluate rejects evidence outside the query nodes or domain") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    CHECK_THROWS_AS(s.evaluate({{node_id::from_label("q0m0"), 0}}), std::invalid_argument);
    CHECK_THROWS_AS(s.evaluate({{node_id::from_label("q9m9"), 0}}), std::invalid_argument);
    CHECK_THROWS_AS(s.evaluate({{node_id::from_label("q0m1"), 2}}), std::invalid_argument);
    CHECK_THROWS_AS(s.evaluate({{node_id::from_label("q0m1"), -1}}), std::invalid_argument);
    try {
        s.evaluate({{node_id::from_label("q0m0"), 0}});
    } catch (const std::invalid_argument& ex) {
        CHECK(std::string(ex.what()).find("non-query node") != std::string::npos);
    }
}

TEST_CASE("derivatives equal reevaluation with the node reassigned") {
    std::mt19937_64 rng(700);
    for (int trial = 0; trial < 12; ++trial) {
        circuit c = random_circuit(rng, 2 + rnd_int(rng, 2), 2 + rnd_int(rng, 4),
                                   {.with_noise = true});
        pipeline p = run_pipeline(c, {});
        session& s = p.s();
        std::vector<evidence> cases = {random_full_evidence(p, s, rng), {}};
        cases.push_back(random_full_evidence(p, s, rng));
        cases[2].erase(cases[2].begin());  // drop one node: partial evidence
        for (const auto& e : cases) {
            s.evaluate(e);
            s.differentiate();
            auto all = s.derivatives();
            for (const auto& [key, dv] : all) {
                evidence flipped = e;
                flipped[key.first] = key.second;
                cx direct = s.evaluate(flipped);
                CHECK_MESSAGE(cxdist(dv, direct) < 1e-12, "trial ", trial, " node ",
                              key.first.label(), " value ", key.second);
            }
            // derivative() agrees with the derivatives() map.
            s.evaluate(e);
            s.differentiate();
            for (const auto& [key, dv] : all)
                CHECK(cxdist(s.derivative(key.first, key.second), dv) < 1e-15);
        }
    }
}

TEST_CASE("derivatives cover every output and event value exactly once") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    s.evaluate(noisy_bell_evidence(0, 0));
    s.differentiate();
    auto all = s.derivatives();
    std::set<std::pair<node_id, int>> want;
    for (const auto& n : p.ac.output_nodes)
        for (int v = 0; v < 2; ++v) want.insert({n, v});
    for (const auto& n : p.ac.event_nodes)
        for (int v = 0; v < 2; ++v) want.insert({n, v});
    std::set<std::pair<node_id, int>> got;
    for (const auto& [key, dv] : all) got.insert(key);
    CHECK(got == want);
}

TEST_CASE("hand-checked derivatives on the damped Bell pair") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    s.evaluate(noisy_bell_evidence(0, 0));
    s.differentiate();
    // Reassigning q1m3 to 1 moves to the (0,01) amplitude, which is zero.
    CHECK(cxdist(s.derivative(node_id::from_label("q1m3"), 1), cx(0.0)) < 1e-15);
    // Reassigning the noise event to 1 moves to the (1,00) amplitude: zero.
    CHECK(cxdist(s.derivative(node_id::from_label("q0m2rv"), 1), cx(0.0)) < 1e-15);
    CHECK(cxdist(s.derivative(node_id::from_label("q0m1"), 0), cx(kS)) < 1e-15);

    pipeline h = pipe("qubits 1\nh 0\n");
    session& hs = h.s();
    hs.evaluate({{node_id::from_label("q0m1"), 0}});
    hs.differentiate();
    CHECK(cxdist(hs.derivative(node_id::from_label("q0m1"), 1), cx(kS)) < 1e-15);
}

TEST_CASE("stale or out-of-order differentiation is rejected") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    CHECK_THROWS_AS(s.differentiate(), std::logic_error);
    CHECK_THROWS_AS(s.derivative(node_id::from_label("q0m1"), 0), std::logic_error);
    CHECK_THROWS_AS(s.derivatives(), std::logic_error);
    s.evaluate({});
    s.differentiate();
    CHECK_NOTHROW(s.derivative(node_id::from_label("q0m1"), 0));
    CHECK_THROWS_AS(s.derivative(node_id::from_label("q0m0"), 0), std::invalid_argument);
    CHECK_THROWS_AS(s.derivative(node_id::from_label("q0m1"), 7), std::invalid_argument);
    // Rebinding invalidates the passes until evaluate runs again.
    s.rebind_params(binding_from_table(p.params));
    CHECK_THROWS_AS(s.differentiate(), std::logic_error);
    s.evaluate({});
    CHECK_NOTHROW(s.differentiate());
}

TEST_CASE("each pass visits every circuit node exactly once") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    s.evaluate({});
    CHECK(s.last_visit_count() == p.ac.nodes.size());
    s.differentiate();
    CHECK(s.last_visit_count() == p.ac.nodes.size());
    s.evaluate(noisy_bell_evidence(1, 3));
    CHECK(s.last_visit_count() == p.ac.nodes.size());
}

TEST_CASE("rebinding parameters matches a freshly built pipeline") {
    std::array<double, 5> base = {0.3, 0.5, 0.7, 0.9, 1.1};
    pipeline first = pipe(angled_circuit(base));
    session& s = first.s();
    for (int k = 0; k < 10; ++k) {
        std::array<double, 5> a = {0.15 + 0.11 * k, 0.23 + 0.09 * k, 0.37 + 0.07 * k,
                                   0.49 + 0.05 * k, 0.61 + 0.03 * k};
        pipeline fresh = pipe(angled_circuit(a));
        REQUIRE(fresh.params.size() == first.params.size());
        s.rebind_params(binding_from_table(fresh.params));
        session& fs = fresh.s();
        for (int x = 0; x < 4; ++x) {
            std::string bits = bits_of(static_cast<size_t>(x), 2);
            CHECK_MESSAGE(cxdist(s.basis_amplitude(bits), fs.basis_amplitude(bits)) < 1e-12,
                          "set ", k, " outputs ", bits);
        }
    }
}

TEST_CASE("rebind_params requires a value for every parameter") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    param_binding full = binding_from_table(p.params);
    CHECK(full.size() == p.params.size());
    param_binding partial = full;
    partial.erase(partial.begin());
    CHECK_THROWS_AS(s.rebind_params(partial), std::invalid_argument);
    CHECK_NOTHROW(s.rebind_params(full));
    // Extra ids beyond the circuit's parameters are ignored.
    param_binding extra = full;
    extra[9999] = cx(0.0);
    CHECK_NOTHROW(s.rebind_params(extra));
}

TEST_CASE("output distributions cover every bitstring and sum to one") {
    pipeline ghz = pipe("qubits 3\nh 0\ncnot 0 1\ncnot 1 2\n");
    auto dist = ghz.s().output_distribution();
    REQUIRE(dist.size() == 8);
    CHECK(dist.at("000") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist.at("111") == doctest::Approx(0.5).epsilon(1e-12));
    double total = 0.0;
    for (const auto& [bits, pr] : dist) {
        total += pr;
        if (bits != "000" && bits != "111") CHECK(pr < 1e-12);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    pipeline flip = pipe("qubits 1\nx 0\n");
    auto fd = flip.s().output_distribution();
    CHECK(fd.at("1") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fd.at("0") == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("the damped Bell density matrix keeps diagonal weight and damped coherence") {
    pipeline p = pipe(kNoisyBell);
    cmatrix rho = p.s().density_matrix();
    REQUIRE(rho.rows == 4);
    REQUIRE(rho.cols == 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            cx want = 0.0;
            if (i == 0 && j == 0) want = 0.5;
            if (i == 3 && j == 3) want = 0.5;
            if ((i == 0 && j == 3) || (i == 3 && j == 0)) want = 0.4;
            CHECK_MESSAGE(cxdist(rho.at(i, j), want) < 1e-12, "entry ", i, ",", j);
        }
}

TEST_CASE("density matrices are Hermitian, unit-trace, and positive") {
    std::mt19937_64 rng(701);
    for (int trial = 0; trial < 8; ++trial) {
        circuit c = random_circuit(rng, 2 + rnd_int(rng, 2), 2 + rnd_int(rng, 3),
                                   {.with_noise = true});
        pipeline p = run_pipeline(c, {});
        session& s = p.s();
        cmatrix rho = s.density_matrix();
        cx trace = 0.0;
        for (int i = 0; i < rho.rows; ++i) trace += rho.at(i, i);
        CHECK_MESSAGE(cxdist(trace, cx(1.0)) < 1e-10, "trial ", trial);
        for (int i = 0; i < rho.rows; ++i)
            for (int j = 0; j < rho.cols; ++j)
                CHECK(cxdist(rho.at(i, j), std::conj(rho.at(j, i))) < 1e-12);
        auto eigs = hermitian_eigenvalues(rho);
        for (double ev : eigs) CHECK_MESSAGE(ev > -1e-9, "trial ", trial);
        // The diagonal is the output distribution.
        auto dist = s.output_distribution();
        int n = s.num_outputs();
        for (int x = 0; x < rho.rows; ++x) {
            std::string bits = bits_of(static_cast<size_t>(x), n);
            CHECK(std::abs(rho.at(x, x).real() - dist.at(bits)) < 1e-12);
        }
    }
}

TEST_CASE("density enumeration refuses to exceed the size limit") {
    std::ostringstream text;
    text << "qubits 1\nh 0\n";
    for (int i = 0; i < 10; ++i) text << "dep 0 0.01\n";
    pipeline p = pipe(text.str());
    session& s = p.s();
    CHECK_THROWS_AS(s.density_matrix(), std::runtime_error);
    CHECK_THROWS_AS(s.output_distribution(), std::runtime_error);
    try {
        s.density_matrix();
    } catch (const std::runtime_error& ex) {
        CHECK(std::string(ex.what()).find("enumeration limit") != std::string::npos);
    }
}

TEST_CASE("evaluate results do not depend on prior evidence") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    cx first = s.evaluate(noisy_bell_evidence(0, 3));
    s.evaluate(noisy_bell_evidence(1, 3));
    s.evaluate({});
    CHECK(cxdist(s.evaluate(noisy_bell_evidence(0, 3)), first) < 1e-15);
    // Two sessions over the same circuit stay independent.
    session other(p.ac, binding_from_table(p.params));
    param_binding zeros = binding_from_table(p.params);
    for (auto& [id, v] : zeros) v = 0.0;
    other.rebind_params(zeros);
    CHECK(std::abs(other.evaluate(noisy_bell_evidence(0, 0))) < 1e-15);
    CHECK(cxdist(s.evaluate(noisy_bell_evidence(0, 0)), cx(kS)) < 1e-15);
}
