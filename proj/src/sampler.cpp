#include "qkc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qkc {

namespace {

// splitmix64 finalizer; decorrelates seeds derived for restarts and the
// sweep stream from the user-facing seed.
uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Inverse-CDF draw over unnormalized nonnegative weights.
int pick_index(const std::vector<double>& weights, double total, double u) {
    double target = u * total;
    double cum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (target < cum) return static_cast<int>(i);
    }
    // Rounding pushed the target past the final cumulative sum; fall back to
    // the last outcome that carries mass.
    for (size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return static_cast<int>(i);
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

gibbs_sampler::gibbs_sampler(session& s) : sess_(s) {
    nodes_ = s.event_nodes();
    num_events_ = static_cast<int>(nodes_.size());
    for (const node_id& out : s.output_nodes()) nodes_.push_back(out);
    domains_.reserve(nodes_.size());
    for (int j = 0; j < num_events_; ++j) domains_.push_back(s.event_domains()[j]);
    for (size_t q = static_cast<size_t>(num_events_); q < nodes_.size(); ++q)
        domains_.push_back(2);
}

evidence gibbs_sampler::to_evidence(const chain_state& st) const {
    evidence e;
    for (size_t i = 0; i < nodes_.size(); ++i) e[nodes_[i]] = st.values[i];
    return e;
}

std::string gibbs_sampler::output_bits(const chain_state& st) const {
    std::string bits(nodes_.size() - static_cast<size_t>(num_events_), '0');
    for (size_t q = 0; q < bits.size(); ++q)
        bits[q] = static_cast<char>('0' + st.values[static_cast<size_t>(num_events_) + q]);
    return bits;
}

chain_state gibbs_sampler::init_chain(uint64_t seed, int retries) {
    chain_state st;
    st.values.assign(nodes_.size(), 0);
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < retries; ++attempt) {
        for (size_t i = 0; i < nodes_.size(); ++i) {
            int v = static_cast<int>(uniform_unit(rng) * domains_[i]);
            st.values[i] = std::min(v, domains_[i] - 1);
        }
        if (std::abs(sess_.evaluate(to_evidence(st))) > 0.0) return st;
    }
    // Greedy fallback: extend a partial assignment one variable at a time,
    // keeping the first value whose retracted-evidence amplitude is nonzero
    // (unassigned variables are summed over, so a nonzero derivative proves
    // the prefix still has support).
    evidence e;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        sess_.evaluate(e);
        sess_.differentiate();
        int chosen = -1;
        for (int b = 0; b < domains_[i]; ++b) {
            if (std::abs(sess_.derivative(nodes_[i], b)) > 0.0) {
                chosen = b;
                break;
            }
        }
        if (chosen < 0)
            throw std::runtime_error(
                "init_chain: no nonzero-amplitude assignment found (empty support)");
        e[nodes_[i]] = chosen;
        st.values[i] = chosen;
    }
    return st;
}

std::vector<double> gibbs_sampler::conditional_weights(const chain_state& st, int pos) {
    sess_.evaluate(to_evidence(st));
    sess_.differentiate();
    std::vector<double> w(static_cast<size_t>(domains_[pos]), 0.0);
    double total = 0.0;
    for (int b = 0; b < domains_[pos]; ++b) {
        w[static_cast<size_t>(b)] = std::norm(sess_.derivative(nodes_[pos], b));
        total += w[static_cast<size_t>(b)];
    }
    if (!(total > 0.0))
        throw std::logic_error(
            "conditional_weights: all candidate weights vanish; chain state has "
            "zero amplitude");
    for (double& x : w) x /= total;
    return w;
}

void gibbs_sampler::gibbs_step(chain_state& st, int pos, std::mt19937_64& rng) {
    std::vector<double> w = conditional_weights(st, pos);
    st.values[static_cast<size_t>(pos)] = pick_index(w, 1.0, uniform_unit(rng));
}

sample_report gibbs_sampler::run(const sampler_config& cfg) {
    if (cfg.samples <= 0)
        throw std::invalid_argument("run: samples must be positive");
    const int length = static_cast<int>(nodes_.size());
    sample_report rep;
    rep.samples = cfg.samples;
    rep.seed = cfg.seed;
    rep.chain_length = length;
    rep.burn_in = cfg.burn_in < 0 ? 10 * length : cfg.burn_in;

    std::mt19937_64 rng(mix_seed(cfg.seed));
    chain_state st = init_chain(cfg.seed, cfg.init_retries);
    const long long total_sweeps =
        static_cast<long long>(rep.burn_in) + static_cast<long long>(cfg.samples);
    uint64_t restarts = 0;
    for (long long sweep = 0; sweep < total_sweeps; ++sweep) {
        if (cfg.restart_period > 0 && sweep > 0 && sweep % cfg.restart_period == 0)
            st = init_chain(mix_seed(cfg.seed + ++restarts), cfg.init_retries);
        for (int k = 0; k < length; ++k) {
            int pos = k;
            if (cfg.scan == scan_kind::random)
                pos = std::min(static_cast<int>(uniform_unit(rng) * length), length - 1);
            gibbs_step(st, pos, rng);
            ++rep.gibbs_steps;
        }
        if (sweep >= rep.burn_in) ++rep.counts[output_bits(st)];
    }
    return rep;
}

double kl_divergence(const std::map<std::string, int>& counts,
                     const std::map<std::string, double>& exact) {
    long long total = 0;
    for (const auto& [bits, c] : counts) {
        (void)bits;
        total += c;
    }
    if (total <= 0) return 0.0;
    double kl = 0.0;
    for (const auto& [bits, c] : counts) {
        if (c <= 0) continue;  // 0 log 0 = 0
        double p = static_cast<double>(c) / static_cast<double>(total);
        auto it = exact.find(bits);
        double q = it == exact.end() ? 0.0 : it->second;
        if (q <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p * std::log(p / q);
    }
    return kl;
}

std::map<std::string, int> direct_sample(const std::map<std::string, double>& dist,
                                         int samples, uint64_t seed) {
    std::vector<std::pair<std::string, double>> items(dist.begin(), dist.end());
    std::vector<double> weights;
    weights.reserve(items.size());
    double total = 0.0;
    for (const auto& [bits, p] : items) {
        (void)bits;
        weights.push_back(std::max(p, 0.0));
        total += weights.back();
    }
    if (!(total > 0.0))
        throw std::invalid_argument("direct_sample: distribution carries no mass");
    std::map<std::string, int> counts;
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s)
        ++counts[items[static_cast<size_t>(pick_index(weights, total, uniform_unit(rng)))]
                     .first];
    return counts;
}

}  // namespace qkc
