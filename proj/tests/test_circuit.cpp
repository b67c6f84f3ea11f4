#include <cmath>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace qt;

namespace {

const double kS = 1.0 / std::sqrt(2.0);

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

bool is_identity(const cmatrix& m, double tol) {
    if (m.rows != m.cols) return false;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (cxdist(m.at(r, c), r == c ? cx(1.0) : cx(0.0)) > tol) return false;
    return true;
}

}  // namespace

TEST_CASE("Hadamard unitary") {
    cmatrix h = gate_unitary(g1(gate_kind::h, 0));
    REQUIRE(h.rows == 2);
    CHECK(cxdist(h.at(0, 0), kS) == 0.0);
    CHECK(cxdist(h.at(0, 1), kS) == 0.0);
    CHECK(cxdist(h.at(1, 0), kS) == 0.0);
    CHECK(cxdist(h.at(1, 1), -kS) == 0.0);
}

TEST_CASE("CNOT unitary permutes the target conditioned on the first qubit") {
    cmatrix u = gate_unitary(g2(gate_kind::cnot, 0, 1));
    REQUIRE(u.rows == 4);
    const double want[4][4] = {
        {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(cxdist(u.at(r, c), want[r][c]) == 0.0);
}

TEST_CASE("RZ with angle zero is the identity") {
    CHECK(is_identity(gate_unitary(g1(gate_kind::rz, 0, {0.0})), 0.0));
}

TEST_CASE("phase damping Kraus operators") {
    noise_app n{noise_kind::phase_damping, 0, {0.36}};
    auto ops = kraus_set(n);
    REQUIRE(ops.size() == 2);
    CHECK(cxdist(ops[0].at(0, 0), 1.0) == 0.0);
    CHECK(cxdist(ops[0].at(0, 1), 0.0) == 0.0);
    CHECK(cxdist(ops[0].at(1, 0), 0.0) == 0.0);
    CHECK(cxdist(ops[0].at(1, 1), 0.8) < 1e-15);
    CHECK(cxdist(ops[1].at(0, 0), 0.0) == 0.0);
    CHECK(cxdist(ops[1].at(1, 1), 0.6) < 1e-15);
}

TEST_CASE("bit flip with probability zero degenerates to one identity operator") {
    auto ops = kraus_set(noise_app{noise_kind::bit_flip, 0, {0.0}});
    REQUIRE(ops.size() == 1);
    CHECK(is_identity(ops[0], 0.0));
}

TEST_CASE("depolarizing channel has four Kraus operators") {
    auto ops = kraus_set(noise_app{noise_kind::depolarizing, 0, {0.005}});
    CHECK(ops.size() == 4);
    CHECK(cxdist(ops[0].at(0, 0), std::sqrt(0.995)) < 1e-15);
    // X, Y, Z components carry sqrt(p/3) each.
    CHECK(cxdist(ops[1].at(0, 1), std::sqrt(0.005 / 3)) < 1e-15);
}

TEST_CASE("Kraus completeness holds for every channel kind, randomized") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        noise_app n;
        n.qubit = 0;
        double u = uniform_unit(rng);
        switch (rnd_int(rng, 7)) {
            case 0: n.kind = noise_kind::bit_flip; n.params = {u}; break;
            case 1: n.kind = noise_kind::phase_flip; n.params = {u}; break;
            case 2: n.kind = noise_kind::depolarizing; n.params = {u}; break;
            case 3: n.kind = noise_kind::amplitude_damping; n.params = {u}; break;
            case 4: n.kind = noise_kind::phase_damping; n.params = {u}; break;
            case 5:
                n.kind = noise_kind::generalized_amplitude_damping;
                n.params = {u, uniform_unit(rng)};
                break;
            default: {
                double px = uniform_unit(rng) / 3, py = uniform_unit(rng) / 3,
                       pz = uniform_unit(rng) / 3;
                n.kind = noise_kind::asym_depolarizing;
                n.params = {px, py, pz};
                break;
            }
        }
        auto ops = kraus_set(n);
        cmatrix sum(2, 2);
        for (const auto& e : ops) {
            cmatrix t = e.dagger() * e;
            for (size_t i = 0; i < t.data.size(); ++i) sum.data[i] += t.data[i];
        }
        CHECK_MESSAGE(is_identity(sum, 1e-12), "trial ", trial);
    }
}

TEST_CASE("every gate unitary is unitary, randomized") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        circuit c = random_circuit(rng, 3, 1);
        if (c.ops.empty()) continue;
        const auto* g = std::get_if<gate_app>(&c.ops[0]);
        if (!g) continue;
        cmatrix u = gate_unitary(*g);
        cmatrix p = u.dagger() * u;
        CHECK_MESSAGE(is_identity(p, 1e-12), "trial ", trial);
    }
}

TEST_CASE("parse accepts the full text surface") {
    circuit c = parse_circuit(
        "# a comment\n"
        "qubits 3\n"
        "init 011\n"
        "\n"
        "h 0\n"
        "rx 1 0.5\n"
        "cphase 0 2 1.5707963267948966\n"
        "gad 2 0.3 0.25\n"
        "adep 0 0.01 0.02 0.03\n");
    CHECK(c.num_qubits == 3);
    REQUIRE(c.initial.size() == 3);
    CHECK(c.initial_bit(0) == 0);
    CHECK(c.initial_bit(1) == 1);
    CHECK(c.initial_bit(2) == 1);
    REQUIRE(c.ops.size() == 5);
    CHECK(std::get<gate_app>(c.ops[0]).kind == gate_kind::h);
    CHECK(std::get<noise_app>(c.ops[3]).kind == noise_kind::generalized_amplitude_damping);
    CHECK(std::get<noise_app>(c.ops[4]).params.size() == 3);
}

TEST_CASE("parse rejects an out-of-range qubit index with the line number") {
    try {
        parse_circuit("qubits 2\nh 5\n");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("out of range") != std::string::npos);
    }
}

TEST_CASE("parse rejects unknown ops, arity mistakes, and missing headers") {
    CHECK_THROWS_AS(parse_circuit("qubits 1\nfrobnicate 0\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_circuit("qubits 2\nh 0 1\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_circuit("qubits 1\nrx 0\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_circuit("h 0\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_circuit("qubits 2\ninit 0q\n"), std::runtime_error);
}

TEST_CASE("serialize then parse is the identity, randomized") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        random_circuit_opts o;
        o.with_noise = true;
        circuit c = random_circuit(rng, 1 + rnd_int(rng, 4), 1 + rnd_int(rng, 12), o);
        circuit back = parse_circuit(serialize_circuit(c));
        CHECK_MESSAGE(back == c, "trial ", trial);
    }
}

TEST_CASE("serialize refuses custom gates") {
    circuit c;
    c.num_qubits = 1;
    gate_app g;
    g.kind = gate_kind::custom;
    g.qubits = {0};
    g.custom_name = "u";
    g.custom_unitary = cmatrix::identity(2);
    c.ops.push_back(g);
    CHECK_THROWS_AS(serialize_circuit(c), std::runtime_error);
}

TEST_CASE("validate accepts SWAP without diagnostics") {
    CHECK(validate_circuit(parse_circuit("qubits 2\nswap 0 1\n")).empty());
}

TEST_CASE("validate flags out-of-range probabilities") {
    auto diags = validate_circuit(parse_circuit("qubits 1\nbf 0 1.5\n"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("[0, 1]") != std::string::npos);
    CHECK_FALSE(validate_circuit(parse_circuit("qubits 1\nad 0 -0.25\n")).empty());
}

TEST_CASE("validate flags a non-monomial custom two-qubit gate and suggests decomposition") {
    circuit c;
    c.num_qubits = 2;
    gate_app g;
    g.kind = gate_kind::custom;
    g.qubits = {0, 1};
    g.custom_name = "sqrt-swap";
    cmatrix u(4, 4);
    u.at(0, 0) = 1.0;
    u.at(3, 3) = 1.0;
    u.at(1, 1) = u.at(2, 2) = cx(0.5, 0.5);
    u.at(1, 2) = u.at(2, 1) = cx(0.5, -0.5);
    g.custom_unitary = u;
    c.ops.push_back(g);
    auto diags = validate_circuit(c);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].find("not encodable") != std::string::npos);
    CHECK(diags[0].find("decompose") != std::string::npos);
}

TEST_CASE("validate accepts a monomial control-preserving custom gate") {
    circuit c;
    c.num_qubits = 2;
    gate_app g;
    g.kind = gate_kind::custom;
    g.qubits = {0, 1};
    g.custom_name = "cy";
    cmatrix u(4, 4);
    u.at(0, 0) = u.at(1, 1) = 1.0;
    u.at(2, 3) = cx(0, -1);
    u.at(3, 2) = cx(0, 1);
    g.custom_unitary = u;
    c.ops.push_back(g);
    CHECK(validate_circuit(c).empty());
}

TEST_CASE("validate flags structural problems") {
    circuit c = parse_circuit("qubits 2\ncnot 0 1\n");
    std::get<gate_app>(c.ops[0]).qubits = {1, 1};
    CHECK_FALSE(validate_circuit(c).empty());

    circuit d;
    d.num_qubits = 0;
    CHECK_FALSE(validate_circuit(d).empty());

    circuit e = parse_circuit("qubits 2\nh 0\n");
    e.initial = {1};
    CHECK_FALSE(validate_circuit(e).empty());
}
