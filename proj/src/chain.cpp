#include "bcrn/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bcrn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double ChainConfig::attacker_share_for(int chain) const {
    if (attacker_share.empty()) return 0.0;
    if (attacker_share.size() == 1) return attacker_share.front();
    return attacker_share.at(static_cast<std::size_t>(chain - 1));
}

void ChainConfig::validate() const {
    require(num_chains >= 1, "num_chains must be >= 1");
    require(block_capacity > 0.0 && block_capacity <= mempool_capacity,
            "need 0 < block_capacity <= mempool_capacity");
    require(background_count >= 0, "background_count must be >= 0");
    require(background_size_max >= 1, "background_size_max must be >= 1");
    require(fee_min < fee_max, "need fee_min < fee_max");
    require(fee_intervals >= 1, "fee_intervals must be >= 1");
    require(confirmation_depth >= 1, "confirmation_depth must be >= 1");
    require(attacker_share.size() <= 1 ||
                attacker_share.size() == static_cast<std::size_t>(num_chains),
            "attacker_share must be a single value or one per chain");
    for (double q : attacker_share)
        require(q >= 0.0 && q < 1.0, "attacker share must be in [0,1)");
}

bool submit_transaction(Mempool& pool, const Transaction& tx, const ChainConfig& cfg) {
    require(tx.size > 0.0, "transaction size must be positive");
    double needed = pool.total_size + tx.size - cfg.mempool_capacity;
    if (needed <= 0.0) {
        pool.pending.push_back(tx);
        pool.total_size += tx.size;
        return true;
    }
    // Pick eviction victims: lowest fee rate first, oldest first on ties.
    std::vector<std::size_t> victims;
    for (std::size_t i = 0; i < pool.pending.size(); ++i)
        if (!pool.pending[i].is_gateway) victims.push_back(i);
    std::sort(victims.begin(), victims.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = pool.pending[a];
        const auto& tb = pool.pending[b];
        if (ta.fee_rate != tb.fee_rate) return ta.fee_rate < tb.fee_rate;
        return ta.arrival_seq < tb.arrival_seq;
    });
    double freed = 0.0;
    std::size_t take = 0;
    while (take < victims.size() && freed < needed) freed += pool.pending[victims[take++]].size;
    if (freed < needed) return false; // cannot fit even after evicting everything evictable

    victims.resize(take);
    std::sort(victims.begin(), victims.end());
    for (auto it = victims.rbegin(); it != victims.rend(); ++it)
        pool.pending.erase(pool.pending.begin() + static_cast<std::ptrdiff_t>(*it));
    pool.total_size -= freed;
    pool.pending.push_back(tx);
    pool.total_size += tx.size;
    return true;
}

void background_arrivals(Mempool& pool, std::mt19937_64& rng, const ChainConfig& cfg,
                         std::uint64_t& next_id, std::uint64_t& next_seq) {
    std::uniform_int_distribution<int> size_dist(1, cfg.background_size_max);
    std::uniform_real_distribution<double> fee_dist(cfg.fee_min, cfg.fee_max);
    for (int i = 0; i < cfg.background_count; ++i) {
        Transaction tx;
        tx.id = next_id++;
        tx.size = static_cast<double>(size_dist(rng));
        tx.fee_rate = fee_dist(rng);
        tx.arrival_seq = next_seq++;
        submit_transaction(pool, tx, cfg); // a rejected background tx is simply lost
    }
}

std::vector<Transaction> mine_block(Mempool& pool, const ChainConfig& cfg) {
    std::vector<std::size_t> order(pool.pending.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = pool.pending[a];
        const auto& tb = pool.pending[b];
        if (ta.fee_rate != tb.fee_rate) return ta.fee_rate > tb.fee_rate;
        return ta.arrival_seq < tb.arrival_seq;
    });
    std::vector<Transaction> block;
    std::vector<bool> taken(pool.pending.size(), false);
    double remaining = cfg.block_capacity;
    for (std::size_t i : order) {
        if (pool.pending[i].size <= remaining) {
            remaining -= pool.pending[i].size;
            taken[i] = true;
            block.push_back(pool.pending[i]);
        }
    }
    std::vector<Transaction> rest;
    rest.reserve(pool.pending.size() - block.size());
    double rest_size = 0.0;
    for (std::size_t i = 0; i < pool.pending.size(); ++i) {
        if (!taken[i]) {
            rest_size += pool.pending[i].size;
            rest.push_back(pool.pending[i]);
        }
    }
    pool.pending = std::move(rest);
    pool.total_size = rest_size;
    return block;
}

double attack_probability(double q, int n_conf) {
    require(q >= 0.0 && q <= 1.0, "q must be a probability");
    require(n_conf >= 1, "confirmation depth must be >= 1");
    const double p = 1.0 - q;
    if (q >= p) return 1.0;
    double sum = 0.0;
    double binom = 1.0; // C(m + n - 1, m), updated incrementally
    for (int m = 0; m <= n_conf; ++m) {
        if (m > 0) binom *= static_cast<double>(m + n_conf - 1) / static_cast<double>(m);
        sum += binom * (std::pow(p, n_conf) * std::pow(q, m) -
                        std::pow(p, m) * std::pow(q, n_conf));
    }
    return std::clamp(1.0 - sum, 0.0, 1.0);
}

SettleOutcome settle(const std::vector<Transaction>& block, const Transaction* gateway_tx,
                     const ChainConfig& cfg, int chain, std::mt19937_64& rng) {
    SettleOutcome out;
    if (gateway_tx) {
        for (const auto& tx : block) {
            if (tx.is_gateway && tx.id == gateway_tx->id) {
                out.included = true;
                break;
            }
        }
    }
    if (out.included) {
        double pa = attack_probability(cfg.attacker_share_for(chain), cfg.confirmation_depth);
        std::bernoulli_distribution attacked(pa);
        out.attacked = pa > 0.0 && attacked(rng);
        out.fee_charged = gateway_tx->size * gateway_tx->fee_rate;
        if (out.attacked && cfg.refund_on_attack) out.fee_charged = 0.0;
        if (!out.attacked) out.stored_units = gateway_tx->size;
    } else if (gateway_tx && cfg.fee_on_submit) {
        out.fee_charged = gateway_tx->size * gateway_tx->fee_rate;
    }
    return out;
}

int fee_interval_of(double fee, const ChainConfig& cfg) {
    const double width = (cfg.fee_max - cfg.fee_min) / cfg.fee_intervals;
    int idx = static_cast<int>(std::floor((fee - cfg.fee_min) / width));
    return std::clamp(idx, 0, cfg.fee_intervals - 1) + 1;
}

std::vector<double> observe_mempool(const Mempool& pool, const ChainConfig& cfg) {
    std::vector<double> hist(static_cast<std::size_t>(cfg.fee_intervals), 0.0);
    for (const auto& tx : pool.pending)
        hist[static_cast<std::size_t>(fee_interval_of(tx.fee_rate, cfg) - 1)] += tx.size;
    return hist;
}

}  // namespace bcrn
