#include "bcrn/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bcrn {

namespace {

std::vector<int> allocation_key(const Allocation& a) {
    std::vector<int> key;
    key.reserve(1 + a.backscatter.size() + a.active.size());
    key.push_back(a.harvest_budget);
    key.insert(key.end(), a.backscatter.begin(), a.backscatter.end());
    key.insert(key.end(), a.active.begin(), a.active.end());
    return key;
}

// Enumerate nonnegative integer vectors of the given length with sum <= budget,
// lexicographically, invoking fn on each.
template <typename Fn>
void enumerate_bounded(std::vector<int>& values, std::size_t pos, int budget, Fn&& fn) {
    if (pos == values.size()) {
        fn();
        return;
    }
    for (int v = 0; v <= budget; ++v) {
        values[pos] = v;
        enumerate_bounded(values, pos + 1, budget - v, fn);
    }
}

}  // namespace

void MdpConfig::validate() const {
    radio.validate();
    chain.validate();
    if (rho < 0.0) throw std::invalid_argument("rho must be nonnegative");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must be in [0,1]");
}

std::uint64_t allocation_grid_size(int frame_slots, int num_transmitters) {
    // C(Y + 2N + 1, 2N + 1): stars and bars with a slack variable.
    const int vars = 2 * num_transmitters + 1;
    std::uint64_t result = 1;
    for (int i = 1; i <= vars; ++i) {
        result = result * static_cast<std::uint64_t>(frame_slots + i) / static_cast<std::uint64_t>(i);
    }
    return result;
}

ActionTable ActionTable::build(const MdpConfig& cfg) {
    cfg.validate();
    const int n = cfg.radio.num_transmitters();
    const int budget = cfg.radio.frame_slots;
    const auto k = static_cast<std::uint64_t>(cfg.chain.num_chains);
    const auto m = static_cast<std::uint64_t>(cfg.chain.fee_intervals);
    const std::uint64_t total = allocation_grid_size(budget, n) * k * m;
    if (total > cfg.max_table_size)
        throw std::length_error("action table would hold " + std::to_string(total) +
                                " entries, above the configured limit of " +
                                std::to_string(cfg.max_table_size));

    ActionTable table;
    table.num_chains_ = cfg.chain.num_chains;
    table.num_fee_intervals_ = cfg.chain.fee_intervals;
    table.frame_slots_ = budget;
    table.actions_.reserve(total);

    std::vector<int> tuple(static_cast<std::size_t>(2 * n + 1), 0);
    enumerate_bounded(tuple, 0, budget, [&] {
        Allocation alloc;
        alloc.harvest_budget = tuple[0];
        alloc.backscatter.assign(tuple.begin() + 1, tuple.begin() + 1 + n);
        alloc.active.assign(tuple.begin() + 1 + n, tuple.end());
        table.allocation_ranks_.emplace(tuple, table.allocation_ranks_.size());
        for (int kappa = 1; kappa <= cfg.chain.num_chains; ++kappa)
            for (int f = 1; f <= cfg.chain.fee_intervals; ++f)
                table.actions_.push_back(Action{alloc, kappa, f});
    });
    return table;
}

std::size_t ActionTable::index_of(const Action& a) const {
    auto it = allocation_ranks_.find(allocation_key(a.alloc));
    if (it == allocation_ranks_.end())
        throw std::out_of_range("allocation tuple is not in the action grid");
    if (a.kappa < 1 || a.kappa > num_chains_ || a.fee_index < 1 || a.fee_index > num_fee_intervals_)
        throw std::out_of_range("chain or fee index out of range");
    const auto stride = static_cast<std::size_t>(num_chains_) * num_fee_intervals_;
    return it->second * stride +
           static_cast<std::size_t>(a.kappa - 1) * num_fee_intervals_ +
           static_cast<std::size_t>(a.fee_index - 1);
}

Mask feasible_mask_for_busy(int busy, const ActionTable& table) {
    Mask mask(table.size(), 0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& a = table[i].alloc;
        int sum_alpha = std::accumulate(a.backscatter.begin(), a.backscatter.end(), 0);
        int sum_beta = std::accumulate(a.active.begin(), a.active.end(), 0);
        // The frame-budget constraint holds for every table entry by
        // construction; the mask still checks both.
        mask[i] = a.harvest_budget + sum_alpha <= busy &&
                          a.harvest_budget + sum_alpha + sum_beta <= table.frame_slots()
                      ? 1
                      : 0;
    }
    return mask;
}

Mask feasible_mask(const NetworkState& state, const ActionTable& table) {
    return feasible_mask_for_busy(state.busy, table);
}

double fee_rate(int fee_index, const MdpConfig& cfg) {
    if (fee_index < 1 || fee_index > cfg.chain.fee_intervals)
        throw std::invalid_argument("fee index out of range");
    const auto& c = cfg.chain;
    return c.fee_min + (fee_index - 1 + cfg.eta) * (c.fee_max - c.fee_min) / c.fee_intervals;
}

std::vector<double> encode_state(const NetworkState& state, const MdpConfig& cfg) {
    const int n = cfg.radio.num_transmitters();
    std::vector<double> x;
    x.reserve(1 + 2 * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(cfg.chain.num_chains) * cfg.chain.fee_intervals);
    x.push_back(static_cast<double>(state.busy) / cfg.radio.frame_slots);
    for (int i = 0; i < n; ++i) {
        const auto& tc = cfg.radio.transmitters[i];
        x.push_back(tc.queue_capacity > 0
                        ? static_cast<double>(state.transmitters[i].queue) / tc.queue_capacity
                        : 0.0);
        x.push_back(tc.energy_capacity > 0
                        ? static_cast<double>(state.transmitters[i].energy) / tc.energy_capacity
                        : 0.0);
    }
    for (const auto& hist : state.mempools)
        for (double units : hist) x.push_back(units / cfg.chain.mempool_capacity);
    return x;
}

Environment::Environment(MdpConfig cfg) : cfg_(std::move(cfg)), table_(ActionTable::build(cfg_)) {
    masks_.reserve(static_cast<std::size_t>(cfg_.radio.frame_slots) + 1);
    for (int b = 0; b <= cfg_.radio.frame_slots; ++b)
        masks_.push_back(feasible_mask_for_busy(b, table_));
    transmitters_.assign(static_cast<std::size_t>(cfg_.radio.num_transmitters()), TransmitterState{});
    pools_.assign(static_cast<std::size_t>(cfg_.chain.num_chains), Mempool{});
    last_blocks_.assign(pools_.size(), {});
    refresh_observation();
}

int Environment::busy_from_encoding(const std::vector<double>& encoding) const {
    return static_cast<int>(std::llround(encoding.at(0) * cfg_.radio.frame_slots));
}

const std::vector<Transaction>& Environment::last_block(int k) const {
    return last_blocks_.at(static_cast<std::size_t>(k - 1));
}

void Environment::refresh_observation() {
    state_.transmitters = transmitters_;
    state_.mempools.clear();
    state_.mempools.reserve(pools_.size());
    for (const auto& pool : pools_) state_.mempools.push_back(observe_mempool(pool, cfg_.chain));
}

NetworkState Environment::reset(std::mt19937_64& rng) {
    for (auto& t : transmitters_) t = TransmitterState{};
    for (auto& p : pools_) p.clear();
    for (auto& b : last_blocks_) b.clear();
    next_tx_id_ = 0;
    next_seq_ = 0;
    state_.busy = sample_busy_slots(rng, cfg_.radio);
    refresh_observation();
    return state_;
}

StepResult Environment::step(const Action& action, std::mt19937_64& rng) {
    const std::size_t idx = table_.index_of(action);
    if (!current_mask()[idx])
        throw std::invalid_argument("infeasible action for the current busy-slot count");

    StepResult result;
    FrameOutcome frame = step_radio(transmitters_, state_.busy, action.alloc, cfg_.radio, rng);
    result.info.delivered = frame.total_delivered;
    result.info.dropped_arrivals = frame.dropped_arrivals;

    Transaction gateway;
    bool created = false;
    if (frame.total_delivered > 0.0) {
        gateway.id = next_tx_id_++;
        gateway.size = frame.total_delivered;
        gateway.fee_rate = fee_rate(action.fee_index, cfg_);
        gateway.arrival_seq = next_seq_++;
        gateway.is_gateway = true;
        created = true;
        submit_transaction(pools_[static_cast<std::size_t>(action.kappa - 1)], gateway, cfg_.chain);
    }
    for (auto& pool : pools_)
        background_arrivals(pool, rng, cfg_.chain, next_tx_id_, next_seq_);
    for (std::size_t k = 0; k < pools_.size(); ++k)
        last_blocks_[k] = mine_block(pools_[k], cfg_.chain);

    auto& selected_pool = pools_[static_cast<std::size_t>(action.kappa - 1)];
    SettleOutcome outcome = settle(last_blocks_[static_cast<std::size_t>(action.kappa - 1)],
                                   created ? &gateway : nullptr, cfg_.chain, action.kappa, rng);
    // A gateway transaction that missed this frame's block does not linger.
    std::erase_if(selected_pool.pending, [&](const Transaction& tx) {
        if (tx.is_gateway) {
            selected_pool.total_size -= tx.size;
            return true;
        }
        return false;
    });

    result.info.stored = outcome.stored_units;
    result.info.fee_charged = outcome.fee_charged;
    result.info.included = outcome.included;
    result.info.attacked = outcome.attacked;
    result.reward = cfg_.rho * outcome.stored_units - outcome.fee_charged;

    state_.busy = sample_busy_slots(rng, cfg_.radio);
    refresh_observation();
    result.next_state = state_;
    return result;
}

StepResult Environment::step_index(std::size_t action_index, std::mt19937_64& rng) {
    return step(table_[action_index], rng);
}

}  // namespace bcrn
