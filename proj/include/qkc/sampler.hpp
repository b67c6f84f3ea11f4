#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "qkc/query.hpp"

namespace qkc {

// Full assignment of the chain variables: noise-event nodes in circuit
// order, then output nodes in qubit order (the fixed scan order).
struct chain_state {
    std::vector<int> values;

    bool operator==(const chain_state&) const = default;
};

enum class scan_kind : uint8_t { fixed, random };

struct sampler_config {
    int samples = 0;
    int burn_in = -1;  // -1 selects the default 10 * (chain length)
    uint64_t seed = 0;
    scan_kind scan = scan_kind::fixed;
    int init_retries = 32;
    // Optional mitigation for reducible chains: independent re-initialization
    // every `restart_period` sweeps.  0 disables restarts (default).
    int restart_period = 0;
};

struct sample_report {
    std::map<std::string, int> counts;   // output bitstring -> occurrences
    double kl_to_exact = -1.0;           // < 0 when not requested
    int samples = 0;
    int burn_in = 0;
    uint64_t seed = 0;
    int chain_length = 0;
    long long gibbs_steps = 0;
};

// Gibbs sampler over a query session.  Each step resamples one chain
// variable from its exact full conditional, obtained from the downward pass:
// the derivative with respect to lambda_{node=b} is the amplitude with that
// node's evidence retracted and set to b, so w_b = |df/dlambda_{node=b}|^2.
class gibbs_sampler {
  public:
    explicit gibbs_sampler(session& s);

    const std::vector<node_id>& chain_nodes() const { return nodes_; }
    const std::vector<int>& domains() const { return domains_; }

    // Uniform random assignment, retried while the amplitude vanishes; falls
    // back to greedy construction via derivative support.  Throws
    // std::runtime_error when no nonzero-amplitude state can be found.
    chain_state init_chain(uint64_t seed, int retries = 32);

    // Normalized full conditional of chain variable `pos` given the rest.
    std::vector<double> conditional_weights(const chain_state& st, int pos);

    // Resamples variable `pos` in place.
    void gibbs_step(chain_state& st, int pos, std::mt19937_64& rng);

    sample_report run(const sampler_config& cfg);

    std::string output_bits(const chain_state& st) const;
    evidence to_evidence(const chain_state& st) const;

  private:
    session& sess_;
    std::vector<node_id> nodes_;  // events first, then outputs
    std::vector<int> domains_;
    int num_events_ = 0;
};

// KL(empirical || exact) with 0 log 0 = 0; +infinity when the empirical
// distribution puts mass where the exact one has none.
double kl_divergence(const std::map<std::string, int>& counts,
                     const std::map<std::string, double>& exact);

// Seeded i.i.d. sampling from an explicit distribution (the "ideal sampling"
// baseline used in convergence comparisons).
std::map<std::string, int> direct_sample(const std::map<std::string, double>& dist,
                                         int samples, uint64_t seed);

// Uniform double in [0,1) from 53 random bits; used everywhere randomness is
// consumed so that seeded runs are reproducible across platforms.
double uniform_unit(std::mt19937_64& rng);

}  // namespace qkc
