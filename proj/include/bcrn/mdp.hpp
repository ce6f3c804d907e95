#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "bcrn/chain.hpp"
#include "bcrn/radio.hpp"

namespace bcrn {

struct MdpConfig {
    RadioConfig radio;
    ChainConfig chain;
    double rho = 1.0;  // reward per successfully stored data unit
    double eta = 0.2;  // representative position within a fee interval
    std::size_t max_table_size = 1'000'000;

    void validate() const;
};

/// Composite observation: channel, transmitters, and all K mempool histograms.
struct NetworkState {
    int busy = 0;
    std::vector<TransmitterState> transmitters;
    std::vector<std::vector<double>> mempools; // K histograms of M entries
};

struct Action {
    Allocation alloc;
    int kappa = 1;     // blockchain index, 1..K
    int fee_index = 1; // fee interval, 1..M
};

using Mask = std::vector<std::uint8_t>;

/// Static grid of every allocation tuple with mu + sum(alpha) + sum(beta) <= Y,
/// crossed with the chain and fee indices. Enumeration order is lexicographic
/// in (mu, alpha..., beta..., kappa, f) and therefore stable across runs.
class ActionTable {
public:
    static ActionTable build(const MdpConfig& cfg); // throws when the grid exceeds max_table_size

    std::size_t size() const { return actions_.size(); }
    const Action& operator[](std::size_t i) const { return actions_[i]; }

    /// Dense index of an action; throws std::out_of_range for tuples not in the grid.
    std::size_t index_of(const Action& a) const;

    int num_chains() const { return num_chains_; }
    int num_fee_intervals() const { return num_fee_intervals_; }
    int frame_slots() const { return frame_slots_; }
    std::size_t allocation_count() const { return allocation_ranks_.size(); }

private:
    std::vector<Action> actions_;
    std::map<std::vector<int>, std::size_t> allocation_ranks_;
    int num_chains_ = 1;
    int num_fee_intervals_ = 1;
    int frame_slots_ = 0;
};

/// Closed-form size of the allocation grid: solutions of mu + sum(alpha+beta) <= Y.
std::uint64_t allocation_grid_size(int frame_slots, int num_transmitters);

/// mask[i] is true iff action i satisfies both scheduling constraints for a
/// frame with `busy` busy slots.
Mask feasible_mask_for_busy(int busy, const ActionTable& table);
Mask feasible_mask(const NetworkState& state, const ActionTable& table);

/// Representative fee rate of interval f: F_min + (f-1+eta) * (F_max-F_min) / M.
double fee_rate(int fee_index, const MdpConfig& cfg);

/// Normalized feature vector [b/Y, q_1/Q_1, c_1/C_1, ..., m^k_i/M_max, ...],
/// length 1 + 2N + K*M, every entry in [0,1].
std::vector<double> encode_state(const NetworkState& state, const MdpConfig& cfg);

struct StepInfo {
    double delivered = 0.0;    // D
    double stored = 0.0;       // D_th
    double fee_charged = 0.0;
    bool included = false;
    bool attacked = false;
    int dropped_arrivals = 0;
};

struct StepResult {
    NetworkState next_state;
    double reward = 0.0;
    StepInfo info;
};

/// The composed MDP: one instance owns the transmitter states, the K mempools,
/// and the current busy-slot count. All stochasticity flows through the rng
/// passed to reset/step, so instances replicated with independent streams are
/// fully reproducible.
class Environment {
public:
    explicit Environment(MdpConfig cfg);

    const MdpConfig& config() const { return cfg_; }
    const ActionTable& table() const { return table_; }
    const NetworkState& state() const { return state_; }
    const Mask& mask_for_busy(int busy) const { return masks_.at(static_cast<std::size_t>(busy)); }
    const Mask& current_mask() const { return mask_for_busy(state_.busy); }

    /// Busy-slot count recovered from an encoded state's first feature.
    int busy_from_encoding(const std::vector<double>& encoding) const;

    /// Most recently mined block of chain k (1-based); empty before the first frame.
    const std::vector<Transaction>& last_block(int k) const;

    NetworkState reset(std::mt19937_64& rng);
    StepResult step(const Action& action, std::mt19937_64& rng);
    StepResult step_index(std::size_t action_index, std::mt19937_64& rng);

private:
    void refresh_observation();

    MdpConfig cfg_;
    ActionTable table_;
    std::vector<Mask> masks_; // indexed by busy count 0..Y
    std::vector<TransmitterState> transmitters_;
    std::vector<Mempool> pools_;
    std::vector<std::vector<Transaction>> last_blocks_;
    NetworkState state_;
    std::uint64_t next_tx_id_ = 0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace bcrn
