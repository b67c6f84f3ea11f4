#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace qt;

namespace {

const std::string kBell = "qubits 2\nh 0\ncnot 0 1\n";

// Small two-qubit circuit with interior structure, used as an irreducible
// sampling target (every output has nonzero probability).
const std::string kAngled =
    "qubits 2\nh 0\nh 1\nrz 0 0.4\ncphase 0 1 0.9\nrx 0 0.7\nry 1 1.1\n";

std::string values_key(const chain_state& st) {
    std::string out;
    for (int v : st.values) out += static_cast<char>('0' + v);
    return out;
}

}  // namespace

TEST_CASE("chain variables list noise events before outputs") {
    pipeline p = pipe(kNoisyBell);
    gibbs_sampler g(p.s());
    REQUIRE(g.chain_nodes().size() == 3);
    CHECK(g.chain_nodes()[0] == node_id::from_label("q0m2rv"));
    CHECK(g.chain_nodes()[1] == node_id::from_label("q0m1"));
    CHECK(g.chain_nodes()[2] == node_id::from_label("q1m3"));
    CHECK(g.domains() == std::vector<int>{2, 2, 2});

    chain_state st{{1, 0, 1}};
    CHECK(g.output_bits(st) == "01");
    evidence e = g.to_evidence(st);
    CHECK(e.at(node_id::from_label("q0m2rv")) == 1);
    CHECK(e.at(node_id::from_label("q0m1")) == 0);
    CHECK(e.at(node_id::from_label("q1m3")) == 1);

    pipeline ideal = pipe(kBell);
    gibbs_sampler gi(ideal.s());
    CHECK(gi.chain_nodes().size() == 2);
    CHECK(gi.domains() == std::vector<int>{2, 2});
}

TEST_CASE("init_chain always lands on a nonzero-amplitude state") {
    pipeline bell = pipe(kBell);
    gibbs_sampler g(bell.s());
    for (uint64_t seed = 0; seed < 20; ++seed) {
        chain_state st = g.init_chain(seed);
        CHECK_MESSAGE((values_key(st) == "00" || values_key(st) == "11"), "seed ", seed);
    }

    pipeline noisy = pipe(kNoisyBell);
    gibbs_sampler gn(noisy.s());
    std::set<std::string> support = {"000", "011", "111"};
    std::set<std::string> seen;
    for (uint64_t seed = 0; seed < 40; ++seed) {
        chain_state st = gn.init_chain(seed);
        CHECK(support.count(values_key(st)) == 1);
        seen.insert(values_key(st));
    }
    CHECK(seen.size() == 3);  // all support states reachable across seeds

    pipeline forced = pipe("qubits 1\nx 0\n");
    gibbs_sampler gf(forced.s());
    for (uint64_t seed = 0; seed < 5; ++seed)
        CHECK(values_key(gf.init_chain(seed)) == "1");
}

TEST_CASE("conditional weights equal the normalized squared amplitudes") {
    std::mt19937_64 rng(800);
    std::vector<std::string> texts = {"qubits 1\nh 0\n", kBell, kNoisyBell, kAngled};
    for (int t = 0; t < 4; ++t)
        texts.push_back(serialize_circuit(
            random_circuit(rng, 2, 2 + rnd_int(rng, 3), {.with_noise = true})));
    for (const auto& text : texts) {
        pipeline p = pipe(text);
        session& s = p.s();
        gibbs_sampler g(s);
        chain_support sup = enumerate_support(g, s);
        int length = static_cast<int>(g.chain_nodes().size());
        for (const auto& st : sup.states)
            for (int pos = 0; pos < length; ++pos) {
                std::vector<double> got = g.conditional_weights(st, pos);
                REQUIRE(static_cast<int>(got.size()) == g.domains()[pos]);
                // Brute force: squared amplitude of each value of this
                // variable with everything else clamped.
                std::vector<double> want(got.size());
                double norm = 0.0;
                for (int b = 0; b < g.domains()[pos]; ++b) {
                    chain_state flip = st;
                    flip.values[static_cast<size_t>(pos)] = b;
                    want[static_cast<size_t>(b)] = std::norm(s.evaluate(g.to_evidence(flip)));
                    norm += want[static_cast<size_t>(b)];
                }
                double sum = 0.0;
                for (size_t b = 0; b < got.size(); ++b) {
                    CHECK_MESSAGE(std::abs(got[b] - want[b] / norm) < 1e-12, text, " pos ",
                                  pos, " value ", b);
                    sum += got[b];
                }
                CHECK(std::abs(sum - 1.0) < 1e-12);
            }
    }
}

TEST_CASE("deterministic outputs give point-mass conditionals") {
    pipeline p = pipe("qubits 1\nx 0\n");
    gibbs_sampler g(p.s());
    chain_state st{{1}};
    std::vector<double> w = g.conditional_weights(st, 0);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-15));

    // Bell: given the partner bit, the output is forced.
    pipeline bell = pipe(kBell);
    gibbs_sampler gb(bell.s());
    chain_state b00{{0, 0}};
    std::vector<double> wb = gb.conditional_weights(b00, 0);
    CHECK(wb[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(wb[1] == doctest::Approx(0.0).epsilon(1e-15));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        gb.gibbs_step(b00, i % 2, rng);
        CHECK(values_key(b00) == "00");  // point-mass kernel cannot move
    }
}

TEST_CASE("a fixed-scan sweep leaves the squared-amplitude distribution invariant") {
    std::mt19937_64 rng(801);
    std::vector<std::string> texts = {"qubits 1\nh 0\n", kBell, kNoisyBell, kAngled,
                                      "qubits 2\nh 0\ncnot 0 1\nbf 1 0.2\n"};
    for (int t = 0; t < 3; ++t)
        texts.push_back(serialize_circuit(
            random_circuit(rng, 2 + rnd_int(rng, 2), 2 + rnd_int(rng, 3),
                           {.with_noise = true})));
    for (const auto& text : texts) {
        pipeline p = pipe(text);
        session& s = p.s();
        gibbs_sampler g(s);
        chain_support sup = enumerate_support(g, s);
        std::vector<double> moved = apply_sweep(g, sup, sup.pi);
        double drift = 0.0;
        for (size_t i = 0; i < sup.pi.size(); ++i) drift += std::abs(moved[i] - sup.pi[i]);
        CHECK_MESSAGE(drift < 1e-10, text);
    }
}

TEST_CASE("kl_divergence handles matches, mismatches, and support violations") {
    std::map<std::string, double> exact = {{"0", 0.5}, {"1", 0.5}};
    CHECK(kl_divergence({{"0", 500}, {"1", 500}}, exact) == doctest::Approx(0.0));
    CHECK(kl_divergence({{"0", 1000}}, exact) == doctest::Approx(std::log(2.0)));
    CHECK(std::isinf(kl_divergence({{"2", 10}}, {{"0", 1.0}})));
    // Empirical zeros contribute nothing (0 log 0 = 0).
    CHECK(kl_divergence({{"0", 800}, {"1", 200}}, exact) ==
          doctest::Approx(0.8 * std::log(1.6) + 0.2 * std::log(0.4)));
}

TEST_CASE("run reports its configuration and counts every sample") {
    pipeline bell = pipe(kBell);
    gibbs_sampler g(bell.s());
    sampler_config cfg;
    cfg.samples = 50;
    cfg.burn_in = 5;
    cfg.seed = 7;
    cfg.restart_period = 1;
    sample_report rep = g.run(cfg);
    CHECK(rep.samples == 50);
    CHECK(rep.burn_in == 5);
    CHECK(rep.seed == 7);
    CHECK(rep.chain_length == 2);
    CHECK(rep.gibbs_steps == 55 * 2);
    CHECK(rep.kl_to_exact < 0);
    int total = 0;
    for (const auto& [bits, n] : rep.counts) {
        total += n;
        CHECK((bits == "00" || bits == "11"));
    }
    CHECK(total == 50);

    // Same seed, same trace; the default burn-in is ten sweeps per variable.
    sample_report again = g.run(cfg);
    CHECK(again.counts == rep.counts);
    sampler_config dflt;
    dflt.samples = 3;
    dflt.seed = 9;
    CHECK(g.run(dflt).burn_in == 20);

    sampler_config one;
    one.samples = 1;
    one.burn_in = 0;
    sample_report single = g.run(one);
    CHECK(single.counts.size() == 1);
    CHECK(single.counts.begin()->second == 1);

    sampler_config bad;
    bad.samples = 0;
    CHECK_THROWS_AS(g.run(bad), std::invalid_argument);
    bad.samples = -4;
    CHECK_THROWS_AS(g.run(bad), std::invalid_argument);
}

TEST_CASE("restarts sample the uniform mixture over disconnected components") {
    // The ideal Bell chain has two single-state components; independent
    // restarts pick one uniformly, which here coincides with the exact
    // distribution.
    pipeline bell = pipe(kBell);
    gibbs_sampler g(bell.s());
    sampler_config cfg;
    cfg.samples = 10000;
    cfg.burn_in = 0;
    cfg.seed = 21;
    cfg.restart_period = 1;
    sample_report rep = g.run(cfg);
    double p00 = rep.counts["00"] / 10000.0;
    CHECK(std::abs(p00 - 0.5) < 0.03);
    CHECK(rep.counts["00"] + rep.counts["11"] == 10000);

    // Without restarts the kernel cannot leave the initial component.
    sampler_config stuck;
    stuck.samples = 2000;
    stuck.seed = 4;
    sample_report srep = g.run(stuck);
    CHECK(srep.counts.size() == 1);
}

TEST_CASE("the damped Bell chain splits into a singleton and a mixing pair") {
    pipeline p = pipe(kNoisyBell);
    session& s = p.s();
    gibbs_sampler g(s);

    // Exact conditional of the noise event given outputs 11: renormalized
    // squared amplitudes 0.8^2 : 0.6^2.
    chain_state st{{0, 1, 1}};
    std::vector<double> w = g.conditional_weights(st, 0);
    CHECK(std::abs(w[0] - 0.64) < 1e-12);
    CHECK(std::abs(w[1] - 0.36) < 1e-12);

    // Under single-variable moves, (0,00) cannot reach the 11 states, so
    // restarts converge to the uniform mixture over the two components, not
    // to the exact output distribution.
    sampler_config cfg;
    cfg.samples = 10000;
    cfg.burn_in = 0;
    cfg.seed = 33;
    cfg.restart_period = 1;
    sample_report rep = g.run(cfg);
    double p00 = rep.counts["00"] / 10000.0;
    CHECK(std::abs(p00 - 1.0 / 3.0) < 0.03);
    CHECK(rep.counts["00"] + rep.counts["11"] == 10000);

    // A trapped chain keeps producing one output forever.
    sampler_config stuck;
    stuck.samples = 1000;
    stuck.seed = 5;
    sample_report srep = g.run(stuck);
    CHECK(srep.counts.size() == 1);
}

TEST_CASE("samples stay inside the amplitude support") {
    std::mt19937_64 rng(802);
    for (int trial = 0; trial < 4; ++trial) {
        pipeline p = run_pipeline(
            random_circuit(rng, 2, 2 + rnd_int(rng, 3), {.with_noise = true}), {});
        session& s = p.s();
        gibbs_sampler g(s);
        chain_support sup = enumerate_support(g, s);
        std::set<std::string> outputs;
        for (const auto& st : sup.states) outputs.insert(g.output_bits(st));
        sampler_config cfg;
        cfg.samples = 200;
        cfg.seed = 100 + static_cast<uint64_t>(trial);
        cfg.restart_period = 4;
        sample_report rep = g.run(cfg);
        for (const auto& [bits, n] : rep.counts)
            CHECK_MESSAGE(outputs.count(bits) == 1, "trial ", trial, " got ", bits);
    }
}

TEST_CASE("random-scan updates also respect the support") {
    pipeline p = pipe(kAngled);
    gibbs_sampler g(p.s());
    sampler_config cfg;
    cfg.samples = 500;
    cfg.seed = 11;
    cfg.scan = scan_kind::random;
    sample_report rep = g.run(cfg);
    int total = 0;
    for (const auto& [bits, n] : rep.counts) total += n;
    CHECK(total == 500);
    sample_report again = g.run(cfg);
    CHECK(again.counts == rep.counts);
}

TEST_CASE("an irreducible chain converges to the output distribution") {
    pipeline p = pipe(kAngled);
    session& s = p.s();
    auto exact = s.output_distribution();
    gibbs_sampler g(s);
    sampler_config cfg;
    cfg.samples = 20000;
    cfg.seed = 17;
    sample_report rep = g.run(cfg);
    for (const auto& [bits, pr] : exact) {
        double freq = rep.counts.count(bits) ? rep.counts.at(bits) / 20000.0 : 0.0;
        CHECK_MESSAGE(std::abs(freq - pr) < 0.02, bits, " exact ", pr, " got ", freq);
    }
    CHECK(kl_divergence(rep.counts, exact) < 0.01);
}

TEST_CASE("direct_sample draws i.i.d. from an explicit distribution") {
    std::map<std::string, double> dist = {{"0", 0.25}, {"1", 0.75}};
    auto counts = direct_sample(dist, 20000, 3);
    int total = counts["0"] + counts["1"];
    CHECK(total == 20000);
    CHECK(std::abs(counts["1"] / 20000.0 - 0.75) < 0.02);
    CHECK(direct_sample(dist, 20000, 3) == counts);
    CHECK(direct_sample(dist, 20000, 4) != counts);

    pipeline noisy = pipe(kNoisyBell);
    auto exact = noisy.s().output_distribution();
    auto nb = direct_sample(exact, 10000, 8);
    CHECK(std::abs(nb["00"] / 10000.0 - 0.5) < 0.03);
    CHECK(nb["01"] == 0);
    CHECK(nb["10"] == 0);
    CHECK(kl_divergence(nb, exact) < 0.01);
}
