#pragma once

// Independent oracles used by the unit and acceptance suites. Everything here
// is derived from first principles, not from the library implementation.

#include <cstdint>
#include <random>
#include <vector>

#include "bcrn/mdp.hpp"

namespace bcrn::test {

/// Monte Carlo double-spend race. The honest network mines n_conf blocks while
/// the attacker mines in parallel; the attacker then wins outright when ahead
/// or even, otherwise races a biased walk to close the remaining deficit.
/// Deficits beyond `cutoff` count as a loss.
inline double mc_attack_probability(double q, int n_conf, std::size_t samples,
                                    std::mt19937_64& rng, int cutoff = 60) {
    std::bernoulli_distribution attacker_finds(q);
    std::size_t wins = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        int attacker = 0;
        int honest = 0;
        while (honest < n_conf) {
            if (attacker_finds(rng))
                ++attacker;
            else
                ++honest;
        }
        int deficit = n_conf - attacker;
        while (deficit > 0 && deficit < cutoff) {
            if (attacker_finds(rng))
                --deficit;
            else
                ++deficit;
        }
        if (deficit <= 0) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(samples);
}

/// Classic single-estimator target: y = r + gamma * max over feasible Q(s').
inline std::vector<double> classic_max_target(std::span<const Experience> batch,
                                              const QNetwork& net, double gamma,
                                              const std::function<const Mask&(const std::vector<double>&)>& mask_of) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& e : batch) {
        const Mask& mask = mask_of(e.next_state);
        const auto q = net.forward(e.next_state);
        double best = 0.0;
        bool found = false;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (!mask[i]) continue;
            if (!found || q[i] > best) {
                best = q[i];
                found = true;
            }
        }
        out.push_back(e.reward + gamma * best);
    }
    return out;
}

/// Tiny action grid used for brute-force comparisons: one transmitter, one
/// chain, one fee interval.
inline MdpConfig tiny_mdp_config(int frame_slots) {
    MdpConfig cfg;
    cfg.radio.frame_slots = frame_slots;
    cfg.radio.busy_min = 0;
    cfg.radio.busy_max = frame_slots;
    cfg.radio.transmitters.assign(1, TransmitterConfig{});
    cfg.chain.num_chains = 1;
    cfg.chain.fee_intervals = 1;
    cfg.chain.attacker_share = {0.0};
    return cfg;
}

/// Deterministic 2-state, 2-action MDP with known fixed point: the action
/// selects the next state, rewards are r[s][a].
struct TwoStateMdp {
    double reward[2][2] = {{1.0, 0.0}, {0.0, 2.0}};
    double gamma = 0.9;

    int next_state(int, int a) const { return a; }

    /// Q* by value iteration, run to numerical convergence.
    std::vector<std::vector<double>> optimal_q(int iterations = 10000) const {
        std::vector<std::vector<double>> q(2, std::vector<double>(2, 0.0));
        for (int it = 0; it < iterations; ++it) {
            auto prev = q;
            for (int s = 0; s < 2; ++s)
                for (int a = 0; a < 2; ++a)
                    q[s][a] = reward[s][a] + gamma * std::max(prev[a][0], prev[a][1]);
        }
        return q;
    }
};

}  // namespace bcrn::test
