#include "bcrn/radio.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bcrn {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

double success_draw(double payload, double prob, std::mt19937_64& rng, bool expected) {
    if (payload <= 0.0) return 0.0;
    if (expected) return payload * prob;
    std::bernoulli_distribution ok(prob);
    return ok(rng) ? payload : 0.0;
}

}  // namespace

void RadioConfig::validate() const {
    require(frame_slots > 0, "frame_slots must be positive");
    require(0 <= busy_min && busy_min <= busy_max && busy_max <= frame_slots,
            "busy range must satisfy 0 <= busy_min <= busy_max <= frame_slots");
    require(!transmitters.empty(), "at least one transmitter required");
    for (const auto& t : transmitters) {
        require(t.queue_capacity >= 0 && t.energy_capacity >= 0, "capacities must be nonnegative");
        require(t.harvest_rate >= 0 && t.active_energy >= 0, "energy rates must be nonnegative");
        require(t.backscatter_rate >= 0 && t.active_rate >= 0, "data rates must be nonnegative");
        require(t.success_backscatter >= 0.0 && t.success_backscatter <= 1.0 &&
                    t.success_active >= 0.0 && t.success_active <= 1.0,
                "success probabilities must be in [0,1]");
        require(t.arrival_rate >= 0.0, "arrival rate must be nonnegative");
    }
}

int sample_busy_slots(std::mt19937_64& rng, const RadioConfig& cfg) {
    if (cfg.busy_min == cfg.busy_max) return cfg.busy_min;
    std::uniform_int_distribution<int> d(cfg.busy_min, cfg.busy_max);
    return d(rng);
}

TransmitterState harvest_phase(TransmitterState s, int busy, int alpha,
                               const TransmitterConfig& cfg) {
    require(alpha >= 0 && alpha <= busy, "infeasible allocation: alpha exceeds busy slots");
    s.energy = std::min(s.energy + (busy - alpha) * cfg.harvest_rate, cfg.energy_capacity);
    return s;
}

std::pair<TransmitterState, double> backscatter_phase(TransmitterState s, int alpha,
                                                      const TransmitterConfig& cfg,
                                                      std::mt19937_64& rng,
                                                      bool expected_success) {
    require(alpha >= 0, "alpha must be nonnegative");
    double delivered = 0.0;
    for (int slot = 0; slot < alpha && s.queue > 0; ++slot) {
        int payload = std::min(cfg.backscatter_rate, s.queue);
        s.queue -= payload;
        delivered += success_draw(payload, cfg.success_backscatter, rng, expected_success);
    }
    return {s, delivered};
}

std::pair<TransmitterState, double> active_phase(TransmitterState s, int beta,
                                                 const TransmitterConfig& cfg,
                                                 std::mt19937_64& rng,
                                                 bool expected_success) {
    require(beta >= 0, "beta must be nonnegative");
    double delivered = 0.0;
    for (int slot = 0; slot < beta; ++slot) {
        if (s.queue <= 0 || s.energy < cfg.active_energy) break;
        int payload = std::min(cfg.active_rate, s.queue);
        s.queue -= payload;
        s.energy -= cfg.active_energy;
        delivered += success_draw(payload, cfg.success_active, rng, expected_success);
    }
    return {s, delivered};
}

TransmitterState arrival_phase(TransmitterState s, std::mt19937_64& rng,
                               const TransmitterConfig& cfg, int* dropped) {
    int arrivals = 0;
    if (cfg.arrival_rate > 0.0) {
        std::poisson_distribution<int> d(cfg.arrival_rate);
        arrivals = d(rng);
    }
    int accepted = std::min(cfg.queue_capacity - s.queue, arrivals);
    s.queue += accepted;
    if (dropped) *dropped += arrivals - accepted;
    return s;
}

FrameOutcome step_radio(std::vector<TransmitterState>& states, int busy,
                        const Allocation& alloc, const RadioConfig& cfg,
                        std::mt19937_64& rng) {
    const int n = cfg.num_transmitters();
    require(static_cast<int>(states.size()) == n, "state count does not match config");
    require(static_cast<int>(alloc.backscatter.size()) == n &&
                static_cast<int>(alloc.active.size()) == n,
            "allocation width does not match config");
    require(alloc.harvest_budget >= 0, "infeasible allocation: negative harvest budget");
    int sum_alpha = 0, sum_beta = 0;
    for (int i = 0; i < n; ++i) {
        require(alloc.backscatter[i] >= 0 && alloc.active[i] >= 0,
                "infeasible allocation: negative slot count");
        sum_alpha += alloc.backscatter[i];
        sum_beta += alloc.active[i];
    }
    require(alloc.harvest_budget + sum_alpha <= busy,
            "infeasible allocation: busy-slot constraint violated");
    require(alloc.harvest_budget + sum_alpha + sum_beta <= cfg.frame_slots,
            "infeasible allocation: frame-budget constraint violated");

    FrameOutcome out;
    out.delivered_backscatter.resize(n, 0.0);
    out.delivered_active.resize(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& tc = cfg.transmitters[i];
        TransmitterState s = harvest_phase(states[i], busy, alloc.backscatter[i], tc);
        auto [s1, db] = backscatter_phase(s, alloc.backscatter[i], tc, rng, cfg.expected_success);
        auto [s2, da] = active_phase(s1, alloc.active[i], tc, rng, cfg.expected_success);
        states[i] = arrival_phase(s2, rng, tc, &out.dropped_arrivals);
        out.delivered_backscatter[i] = db;
        out.delivered_active[i] = da;
        out.total_delivered += db + da;
    }
    return out;
}

}  // namespace bcrn
