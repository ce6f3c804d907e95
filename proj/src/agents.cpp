#include "bcrn/agents.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "bcrn/rng.hpp"

namespace bcrn {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    buffer_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayMemory::push(Experience e) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(std::move(e));
    } else {
        buffer_[next_] = std::move(e);
    }
    next_ = (next_ + 1) % capacity_;
}

const Experience& ReplayMemory::sample(std::mt19937_64& rng) const {
    if (buffer_.empty()) throw std::out_of_range("replay memory is empty");
    std::uniform_int_distribution<std::size_t> d(0, buffer_.size() - 1);
    return buffer_[d(rng)];
}

std::vector<const Experience*> ReplayMemory::in_fifo_order() const {
    std::vector<const Experience*> out;
    out.reserve(buffer_.size());
    const std::size_t start = buffer_.size() < capacity_ ? 0 : next_;
    for (std::size_t i = 0; i < buffer_.size(); ++i)
        out.push_back(&buffer_[(start + i) % buffer_.size()]);
    return out;
}

double epsilon_at(std::uint64_t step, std::uint64_t total_steps, const EpsilonSchedule& schedule) {
    if (step > total_steps) throw std::invalid_argument("step beyond schedule length");
    if (total_steps == 0) return schedule.end;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return schedule.start + (schedule.end - schedule.start) * t;
}

int select_action(std::span<const double> q_values, const Mask& mask, double epsilon,
                  std::mt19937_64& rng) {
    if (q_values.size() != mask.size()) throw std::invalid_argument("mask width mismatch");
    int best = -1;
    int feasible = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++feasible;
        if (best < 0 || q_values[i] > q_values[static_cast<std::size_t>(best)])
            best = static_cast<int>(i);
    }
    if (best < 0) throw std::invalid_argument("no feasible action");
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < epsilon) {
            std::uniform_int_distribution<int> pick(0, feasible - 1);
            int target = pick(rng);
            for (std::size_t i = 0; i < mask.size(); ++i) {
                if (mask[i] && target-- == 0) return static_cast<int>(i);
            }
        }
    }
    return best;
}

std::vector<double> d3qn_target(std::span<const Experience> batch, const QNetwork& online,
                                const QNetwork& target, double gamma, const MaskLookup& mask_of) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    std::vector<double> targets;
    targets.reserve(batch.size());
    for (const auto& e : batch) {
        const Mask& mask = mask_of(e.next_state);
        const auto q_online = online.forward(e.next_state);
        int best = -1;
        for (std::size_t i = 0; i < q_online.size(); ++i) {
            if (!mask[i]) continue;
            if (best < 0 || q_online[i] > q_online[static_cast<std::size_t>(best)])
                best = static_cast<int>(i);
        }
        if (best < 0) throw std::invalid_argument("no feasible next action");
        const auto q_target = target.forward(e.next_state);
        targets.push_back(e.reward + gamma * q_target[static_cast<std::size_t>(best)]);
    }
    return targets;
}

void TrainConfig::validate() const {
    if (episodes < 0 || steps_per_episode < 0) throw std::invalid_argument("negative episode counts");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (discount < 0.0 || discount >= 1.0) throw std::invalid_argument("discount must be in [0,1)");
    if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0)
        throw std::invalid_argument("epsilon endpoints must be in [0,1]");
    if (target_sync == 0) throw std::invalid_argument("target_sync must be positive");
    if (static_cast<std::size_t>(batch) > replay_capacity)
        throw std::invalid_argument("batch exceeds replay capacity");
    if (qlearning_alpha < 0.0 || qlearning_alpha > 1.0)
        throw std::invalid_argument("qlearning_alpha must be in [0,1]");
}

D3QNLearner::D3QNLearner(int input_width, int num_actions, const TrainConfig& cfg,
                         MaskLookup mask_of, std::mt19937_64& init_rng)
    : D3QNLearner(QNetwork::init(input_width, {32, 32, 32}, num_actions, init_rng), cfg,
                  std::move(mask_of)) {}

D3QNLearner::D3QNLearner(QNetwork online, const TrainConfig& cfg, MaskLookup mask_of)
    : cfg_(cfg),
      mask_of_(std::move(mask_of)),
      online_(std::move(online)),
      target_(online_),
      replay_(cfg.replay_capacity) {
    cfg_.validate();
    opt_.learning_rate = cfg_.learning_rate;
}

int D3QNLearner::act(std::span<const double> encoding, const Mask& mask, double epsilon,
                     std::mt19937_64& rng) const {
    const auto q = online_.forward(encoding);
    return select_action(q, mask, epsilon, rng);
}

double D3QNLearner::train_step(std::mt19937_64& rng) {
    if (!ready()) throw std::logic_error("replay holds fewer experiences than one batch");
    std::vector<Experience> batch;
    batch.reserve(static_cast<std::size_t>(cfg_.batch));
    for (int i = 0; i < cfg_.batch; ++i) batch.push_back(replay_.sample(rng));

    const auto targets = d3qn_target(batch, online_, target_, cfg_.discount, mask_of_);
    QNetwork grads = online_.zeros_like();
    double loss_sum = 0.0;
    const double scale = 1.0 / cfg_.batch;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        loss_sum += online_.backward_accumulate(batch[k].state, batch[k].action, targets[k],
                                                grads, scale);
    }
    adam_step(online_, grads, opt_);
    ++train_steps_;
    if (train_steps_ % cfg_.target_sync == 0) sync_target(online_, target_);
    return loss_sum / cfg_.batch;
}

std::size_t QTable::KeyHash::operator()(const std::pair<StateKey, int>& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (int v : k.first) mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.second)) | (1ull << 40));
    return static_cast<std::size_t>(h);
}

double QTable::get(const StateKey& s, int a) const {
    auto it = values_.find({s, a});
    return it == values_.end() ? 0.0 : it->second;
}

void QTable::set(const StateKey& s, int a, double v) { values_[{s, a}] = v; }

double QTable::max_feasible(const StateKey& s, const Mask& mask) const {
    double best = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double v = get(s, static_cast<int>(i));
        if (!found || v > best) {
            best = v;
            found = true;
        }
    }
    if (!found) throw std::invalid_argument("no feasible action");
    return best;
}

int QTable::argmax_feasible(const StateKey& s, const Mask& mask, std::size_t num_actions) const {
    int best = -1;
    double best_v = 0.0;
    for (std::size_t i = 0; i < num_actions && i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double v = get(s, static_cast<int>(i));
        if (best < 0 || v > best_v) {
            best = static_cast<int>(i);
            best_v = v;
        }
    }
    if (best < 0) throw std::invalid_argument("no feasible action");
    return best;
}

void QTable::save(std::ostream& out) const {
    out << "bcrn-qtable 1\n" << values_.size() << "\n";
    out << std::setprecision(17);
    for (const auto& [key, value] : values_) {
        out << key.first.size();
        for (int v : key.first) out << ' ' << v;
        out << ' ' << key.second << ' ' << value << "\n";
    }
}

QTable QTable::load(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "bcrn-qtable" || version != 1)
        throw std::runtime_error("unrecognized Q-table file header");
    std::size_t count = 0;
    in >> count;
    QTable table;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t width = 0;
        in >> width;
        StateKey key(width);
        for (auto& v : key) in >> v;
        int action = 0;
        double value = 0.0;
        in >> action >> value;
        if (!in) throw std::runtime_error("Q-table file truncated");
        table.set(key, action, value);
    }
    return table;
}

void q_learning_update(QTable& table, const QTable::StateKey& s, int a, double r,
                       const QTable::StateKey& next, double alpha, double gamma,
                       const Mask& next_mask) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
    const double backup = r + gamma * table.max_feasible(next, next_mask);
    table.set(s, a, (1.0 - alpha) * table.get(s, a) + alpha * backup);
}

QTable::StateKey state_key(const NetworkState& state) {
    QTable::StateKey key;
    key.reserve(1 + 2 * state.transmitters.size() +
                (state.mempools.empty() ? 0 : state.mempools.size() * state.mempools[0].size()));
    key.push_back(state.busy);
    for (const auto& t : state.transmitters) {
        key.push_back(t.queue);
        key.push_back(t.energy);
    }
    for (const auto& hist : state.mempools)
        for (double units : hist) key.push_back(static_cast<int>(std::llround(units)));
    return key;
}

int fee_estimate_last_block(const std::vector<Transaction>& last_block, const ChainConfig& cfg) {
    if (last_block.empty()) return 1;
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& tx : last_block) {
        weighted += tx.size * tx.fee_rate;
        total += tx.size;
    }
    return fee_interval_of(weighted / total, cfg);
}

namespace {

std::vector<int> equal_split(int slots, int parts) {
    std::vector<int> out(static_cast<std::size_t>(parts), slots / parts);
    for (int i = 0; i < slots % parts; ++i) ++out[static_cast<std::size_t>(i)];
    return out;
}

}  // namespace

Action htt_policy(const NetworkState& state, const ActionTable& table, int kappa, int fee_index) {
    const int n = static_cast<int>(state.transmitters.size());
    Action a;
    a.alloc.harvest_budget = state.busy;
    a.alloc.backscatter.assign(static_cast<std::size_t>(n), 0);
    a.alloc.active = equal_split(table.frame_slots() - state.busy, n);
    a.kappa = kappa;
    a.fee_index = fee_index;
    return a;
}

Action backscatter_policy(const NetworkState& state, const ActionTable& /*table*/, int kappa,
                          int fee_index) {
    const int n = static_cast<int>(state.transmitters.size());
    Action a;
    a.alloc.harvest_budget = 0;
    a.alloc.backscatter = equal_split(state.busy, n);
    a.alloc.active.assign(static_cast<std::size_t>(n), 0);
    a.kappa = kappa;
    a.fee_index = fee_index;
    return a;
}

Action random_policy(const NetworkState& state, const ActionTable& table, int kappa, int fee_index,
                     std::mt19937_64& rng) {
    const Mask mask = feasible_mask(state, table);
    // The mask is independent of (kappa, f): counting entries with the target
    // pair walks exactly one entry per feasible allocation.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!mask[i]) continue;
        if (table[i].kappa == kappa && table[i].fee_index == fee_index) candidates.push_back(i);
    }
    if (candidates.empty()) throw std::logic_error("no feasible allocation");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return table[candidates[pick(rng)]];
}

}  // namespace bcrn
