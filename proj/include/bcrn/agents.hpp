#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "bcrn/mdp.hpp"
#include "bcrn/net.hpp"

namespace bcrn {

struct Experience {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
};

/// Ring buffer of experiences; once full, the oldest entry is overwritten.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Experience& operator[](std::size_t i) const { return buffer_[i]; }
    const Experience& sample(std::mt19937_64& rng) const;

    /// Entries ordered oldest to newest, for inspection in tests.
    std::vector<const Experience*> in_fifo_order() const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> buffer_;
};

struct EpsilonSchedule {
    double start = 0.9;
    double end = 0.0;
};

/// Linear interpolation between the schedule endpoints.
double epsilon_at(std::uint64_t step, std::uint64_t total_steps, const EpsilonSchedule& schedule);

/// Epsilon-greedy over the feasible subset; greedy ties resolve to the lowest
/// index. Throws std::invalid_argument when no action is feasible.
int select_action(std::span<const double> q_values, const Mask& mask, double epsilon,
                  std::mt19937_64& rng);

/// Feasibility mask of an encoded next state.
using MaskLookup = std::function<const Mask&(const std::vector<double>&)>;

/// Double-Q targets: the online network selects the best feasible next action,
/// the target network evaluates it.
std::vector<double> d3qn_target(std::span<const Experience> batch, const QNetwork& online,
                                const QNetwork& target, double gamma, const MaskLookup& mask_of);

struct TrainConfig {
    int episodes = 3000;           // T_e
    int steps_per_episode = 200;   // T_s
    int batch = 32;                // H
    double discount = 0.9;         // gamma
    EpsilonSchedule epsilon;
    std::uint64_t target_sync = 10000; // F_r, train steps between target refreshes
    double learning_rate = 1e-3;   // delta
    std::size_t replay_capacity = 50000;
    double qlearning_alpha = 0.1;

    void validate() const;
};

/// The D3QN learner: online and target dueling networks, replay memory, and
/// one adaptive-moment update per train step.
class D3QNLearner {
public:
    D3QNLearner(int input_width, int num_actions, const TrainConfig& cfg, MaskLookup mask_of,
                std::mt19937_64& init_rng);
    explicit D3QNLearner(QNetwork online, const TrainConfig& cfg, MaskLookup mask_of);

    int act(std::span<const double> encoding, const Mask& mask, double epsilon,
            std::mt19937_64& rng) const;

    void push(Experience e) { replay_.push(std::move(e)); }
    bool ready() const { return replay_.size() >= static_cast<std::size_t>(cfg_.batch); }

    /// One optimizer step on the batch-mean loss. Requires ready().
    double train_step(std::mt19937_64& rng);

    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }
    QNetwork& online() { return online_; }
    const ReplayMemory& replay() const { return replay_; }
    std::uint64_t train_steps() const { return train_steps_; }

private:
    TrainConfig cfg_;
    MaskLookup mask_of_;
    QNetwork online_;
    QNetwork target_;
    AdamState opt_;
    ReplayMemory replay_;
    std::uint64_t train_steps_ = 0;
};

/// Sparse tabular Q-function keyed by (discrete state tuple, action index);
/// unseen pairs read as zero.
class QTable {
public:
    using StateKey = std::vector<int>;

    double get(const StateKey& s, int a) const;
    void set(const StateKey& s, int a, double v);
    std::size_t entries() const { return values_.size(); }

    /// Greedy value max over the feasible actions of s.
    double max_feasible(const StateKey& s, const Mask& mask) const;
    /// Feasible greedy action, ties to the lowest index.
    int argmax_feasible(const StateKey& s, const Mask& mask, std::size_t num_actions) const;

    void save(std::ostream& out) const;
    static QTable load(std::istream& in);

private:
    struct KeyHash {
        std::size_t operator()(const std::pair<StateKey, int>& k) const;
    };
    std::unordered_map<std::pair<StateKey, int>, double, KeyHash> values_;
};

/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_{feasible a'} Q(s',a')).
void q_learning_update(QTable& table, const QTable::StateKey& s, int a, double r,
                       const QTable::StateKey& next, double alpha, double gamma,
                       const Mask& next_mask);

/// Discrete state tuple for the tabular learner.
QTable::StateKey state_key(const NetworkState& state);

/// Size-weighted mean fee rate of the last mined block, mapped to its fee
/// interval; an empty block falls back to interval 1.
int fee_estimate_last_block(const std::vector<Transaction>& last_block, const ChainConfig& cfg);

/// Harvest-then-transmit: harvest through the whole busy period, split the
/// idle slots equally across transmitters (remainder to the lowest indices).
Action htt_policy(const NetworkState& state, const ActionTable& table, int kappa, int fee_index);

/// Backscatter-only: split the busy slots equally as backscatter time.
Action backscatter_policy(const NetworkState& state, const ActionTable& table, int kappa,
                          int fee_index);

/// Uniform over the feasible allocation tuples, with the given chain and fee.
Action random_policy(const NetworkState& state, const ActionTable& table, int kappa, int fee_index,
                     std::mt19937_64& rng);

}  // namespace bcrn
