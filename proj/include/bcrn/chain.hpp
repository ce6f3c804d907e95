#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bcrn {

struct ChainConfig {
    int num_chains = 3;             // K
    double mempool_capacity = 50.0; // M_max, data units
    double block_capacity = 30.0;   // B_max, data units
    int background_count = 5;       // Z transactions arriving per frame
    int background_size_max = 10;   // D_max, sizes drawn from U{1..D_max}
    double fee_min = 0.01;          // F_min, fee units per data unit
    double fee_max = 0.8;           // F_max
    int fee_intervals = 4;          // M
    std::vector<double> attacker_share; // q_k per chain; single value broadcasts
    int confirmation_depth = 2;     // n_conf in the double-spend race
    bool fee_on_submit = false;     // charge the fee even when not included
    bool refund_on_attack = false;  // refund the fee when the block is attacked

    double attacker_share_for(int chain) const; // chain is 1-based
    void validate() const;                      // throws std::invalid_argument
};

struct Transaction {
    std::uint64_t id = 0;
    double size = 0.0;      // data units, > 0
    double fee_rate = 0.0;  // fee units per data unit
    std::uint64_t arrival_seq = 0;
    bool is_gateway = false;
};

/// Waiting area of one blockchain's miners. Arrival order is preserved;
/// total_size never exceeds the configured capacity.
struct Mempool {
    std::vector<Transaction> pending;
    double total_size = 0.0;

    void clear() { pending.clear(); total_size = 0.0; }
};

struct SettleOutcome {
    bool included = false;
    bool attacked = false;
    double fee_charged = 0.0;
    double stored_units = 0.0; // D_th
};

/// Append tx, evicting the lowest-fee-rate non-gateway transactions (oldest
/// first on ties) until it fits. Returns false and leaves the pool unchanged
/// when no amount of eviction can make room.
bool submit_transaction(Mempool& pool, const Transaction& tx, const ChainConfig& cfg);

/// Z background transactions with sizes U{1..D_max} and fees U[F_min, F_max],
/// submitted under the same eviction semantics. `seq` and `id` counters are
/// advanced for every draw.
void background_arrivals(Mempool& pool, std::mt19937_64& rng, const ChainConfig& cfg,
                         std::uint64_t& next_id, std::uint64_t& next_seq);

/// Greedy block formation: scan transactions by fee rate descending (arrival
/// order on ties), include each one that still fits. Included transactions
/// leave the pool.
std::vector<Transaction> mine_block(Mempool& pool, const ChainConfig& cfg);

/// Probability that a confirmed transaction is overturned by an attacker that
/// finds each new block with probability q, evaluated exactly from the
/// confirmation-race series over m = 0..n_conf. Returns 1 when q >= 1/2.
double attack_probability(double q, int n_conf);

/// Resolve the gateway transaction's fate against this frame's block.
/// `gateway_tx` is the transaction submitted this frame, or nullptr.
SettleOutcome settle(const std::vector<Transaction>& block, const Transaction* gateway_tx,
                     const ChainConfig& cfg, int chain, std::mt19937_64& rng);

/// Data units pending per fee interval. Intervals are half-open [lo, hi)
/// except the last, which includes F_max.
std::vector<double> observe_mempool(const Mempool& pool, const ChainConfig& cfg);

/// Index (1-based) of the fee interval containing `fee`.
int fee_interval_of(double fee, const ChainConfig& cfg);

}  // namespace bcrn
