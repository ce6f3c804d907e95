#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bcrn/harness.hpp"
#include "bcrn/rng.hpp"

namespace bcrn {

const char* const kMetricsSchemaLine = "# bcrn episode metrics v1";
const char* const kMetricsColumnsLine =
    "episode,mean_reward,mean_throughput,fee_per_stored_unit,epsilon,seconds";

void Agent::save_checkpoint(const std::string&) const {}
void Agent::load_checkpoint(const std::string&) {
    throw std::runtime_error("this agent kind has no checkpoint format");
}

namespace {

class D3QNAgent final : public Agent {
public:
    D3QNAgent(Environment& env, const ExperimentConfig& cfg, std::mt19937_64& init_rng)
        : cfg_(cfg.train),
          learner_(static_cast<int>(encode_state(env.state(), env.config()).size()),
                   static_cast<int>(env.table().size()), cfg.train, make_mask_lookup(env),
                   init_rng),
          env_(env) {}

    int act(Environment& env, const std::vector<double>& encoding, double epsilon,
            std::mt19937_64& rng) override {
        return learner_.act(encoding, env.current_mask(), epsilon, rng);
    }

    void observe(const Transition& t, std::mt19937_64& rng) override {
        learner_.push(Experience{*t.state, t.action, t.reward, *t.next_state});
        if (learner_.ready()) learner_.train_step(rng);
    }

    bool learns() const override { return true; }

    void save_checkpoint(const std::string& path) const override {
        learner_.online().save_file(path);
    }

    void load_checkpoint(const std::string& path) override {
        QNetwork net = QNetwork::load_file(path);
        if (!net.same_architecture(learner_.online()))
            throw std::runtime_error("checkpoint architecture does not match this configuration");
        learner_ = D3QNLearner(std::move(net), learner_cfg(), make_mask_lookup(env_));
    }

    D3QNLearner& learner() { return learner_; }

private:
    TrainConfig learner_cfg() const { return cfg_; }
    static MaskLookup make_mask_lookup(Environment& env) {
        return [&env](const std::vector<double>& enc) -> const Mask& {
            return env.mask_for_busy(env.busy_from_encoding(enc));
        };
    }

    TrainConfig cfg_;
    D3QNLearner learner_;
    Environment& env_;
};

class QLearningAgent final : public Agent {
public:
    QLearningAgent(const ExperimentConfig& cfg) : alpha_(cfg.train.qlearning_alpha),
                                                  gamma_(cfg.train.discount) {}

    int act(Environment& env, const std::vector<double>&, double epsilon,
            std::mt19937_64& rng) override {
        const auto key = state_key(env.state());
        const Mask& mask = env.current_mask();
        if (epsilon > 0.0) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (u(rng) < epsilon) {
                int feasible = static_cast<int>(std::count(mask.begin(), mask.end(), 1));
                std::uniform_int_distribution<int> pick(0, feasible - 1);
                int target = pick(rng);
                for (std::size_t i = 0; i < mask.size(); ++i)
                    if (mask[i] && target-- == 0) return static_cast<int>(i);
            }
        }
        return table_.argmax_feasible(key, mask, mask.size());
    }

    void observe(const Transition& t, std::mt19937_64&) override {
        // Next-state mask depends only on the busy count, the first component
        // of the key.
        const Mask& next_mask = env_->mask_for_busy(t.raw_next_state->busy);
        q_learning_update(table_, state_key(*t.raw_state), t.action, t.reward,
                          state_key(*t.raw_next_state), alpha_, gamma_, next_mask);
    }

    void bind(Environment& env) { env_ = &env; }
    bool learns() const override { return true; }

    void save_checkpoint(const std::string& path) const override {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        table_.save(out);
        if (!out) throw std::runtime_error("failed writing " + path);
    }

    void load_checkpoint(const std::string& path) override {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        table_ = QTable::load(in);
    }

private:
    QTable table_;
    double alpha_;
    double gamma_;
    Environment* env_ = nullptr;
};

// Shared base for the three non-learning baselines: the fee comes from the
// last-block estimator of the selected chain.
class BaselineAgent : public Agent {
public:
    int act(Environment& env, const std::vector<double>&, double, std::mt19937_64& rng) override {
        const int kappa = pick_chain(env, rng);
        const int f = fee_estimate_last_block(env.last_block(kappa), env.config().chain);
        return static_cast<int>(env.table().index_of(pick_action(env, kappa, f, rng)));
    }

protected:
    virtual int pick_chain(Environment&, std::mt19937_64&) { return 1; }
    virtual Action pick_action(Environment& env, int kappa, int f, std::mt19937_64& rng) = 0;
};

class HTTAgent final : public BaselineAgent {
    Action pick_action(Environment& env, int kappa, int f, std::mt19937_64&) override {
        return htt_policy(env.state(), env.table(), kappa, f);
    }
};

class BackscatterAgent final : public BaselineAgent {
    Action pick_action(Environment& env, int kappa, int f, std::mt19937_64&) override {
        return backscatter_policy(env.state(), env.table(), kappa, f);
    }
};

class RandomAgent final : public BaselineAgent {
    int pick_chain(Environment& env, std::mt19937_64& rng) override {
        std::uniform_int_distribution<int> d(1, env.config().chain.num_chains);
        return d(rng);
    }
    Action pick_action(Environment& env, int kappa, int f, std::mt19937_64& rng) override {
        return random_policy(env.state(), env.table(), kappa, f, rng);
    }
};

std::string format_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_record(std::ostream& out, const EpisodeRecord& r, bool timing) {
    out << r.episode << ',' << format_metric(r.mean_reward) << ','
        << format_metric(r.mean_throughput) << ',' << format_metric(r.fee_per_stored_unit) << ','
        << format_metric(r.epsilon) << ',' << format_metric(timing ? r.seconds : 0.0) << '\n';
}

int compute_convergence_episode(const std::vector<EpisodeRecord>& records, int window = 100,
                                double tolerance = 0.05) {
    if (static_cast<int>(records.size()) < window) return -1;
    std::vector<double> ma;
    double acc = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        acc += records[i].mean_reward;
        if (i + 1 >= static_cast<std::size_t>(window)) {
            ma.push_back(acc / window);
            acc -= records[i + 1 - window].mean_reward;
        }
    }
    const double final_ma = ma.back();
    const double band = tolerance * std::abs(final_ma);
    int converged = -1;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (std::abs(ma[i] - final_ma) <= band) {
            if (converged < 0) converged = static_cast<int>(i) + window - 1;
        } else {
            converged = -1;
        }
    }
    return converged;
}

}  // namespace

std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, Environment& env,
                                  std::mt19937_64& init_rng) {
    switch (cfg.agent) {
        case AgentKind::d3qn:
            return std::make_unique<D3QNAgent>(env, cfg, init_rng);
        case AgentKind::qlearning: {
            auto agent = std::make_unique<QLearningAgent>(cfg);
            agent->bind(env);
            return agent;
        }
        case AgentKind::htt:
            return std::make_unique<HTTAgent>();
        case AgentKind::backscatter:
            return std::make_unique<BackscatterAgent>();
        case AgentKind::random:
            return std::make_unique<RandomAgent>();
    }
    throw std::logic_error("unreachable agent kind");
}

EpisodeRecord run_episode(Agent& agent, Environment& env, int steps, double epsilon,
                          std::mt19937_64& env_rng, std::mt19937_64& agent_rng, bool learn) {
    const auto start = std::chrono::steady_clock::now();
    env.reset(env_rng);

    EpisodeRecord rec;
    rec.epsilon = epsilon;
    double reward_sum = 0.0;
    std::vector<double> enc = encode_state(env.state(), env.config());
    NetworkState prev = env.state();
    for (int step = 0; step < steps; ++step) {
        const int a = agent.act(env, enc, epsilon, agent_rng);
        StepResult res = env.step_index(static_cast<std::size_t>(a), env_rng);
        reward_sum += res.reward;
        rec.total_stored += res.info.stored;
        rec.total_fee += res.info.fee_charged;
        std::vector<double> next_enc = encode_state(res.next_state, env.config());
        if (learn) {
            Agent::Transition t{&enc, &prev, a, res.reward, &next_enc, &res.next_state};
            agent.observe(t, agent_rng);
        }
        prev = res.next_state;
        enc = std::move(next_enc);
    }
    if (steps > 0) {
        rec.mean_reward = reward_sum / steps;
        rec.mean_throughput = rec.total_stored / steps;
    }
    rec.fee_per_stored_unit = rec.total_stored > 0.0 ? rec.total_fee / rec.total_stored : 0.0;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

TrainResult train(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    Environment env(cfg.mdp);
    std::mt19937_64 init_rng = make_stream(cfg.seed, "init");
    auto agent = make_agent(cfg, env, init_rng);
    std::mt19937_64 agent_rng = make_stream(cfg.seed, "agent");

    TrainResult result;
    result.csv_path = (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
    if (agent->learns()) {
        const char* ext = cfg.agent == AgentKind::d3qn ? "checkpoint.qnet" : "checkpoint.qtable";
        result.checkpoint_path = (std::filesystem::path(cfg.out_dir) / ext).string();
    }

    std::ofstream csv(result.csv_path);
    if (!csv) throw std::runtime_error("cannot open " + result.csv_path + " for writing");
    csv << kMetricsSchemaLine << '\n' << kMetricsColumnsLine << '\n';

    for (int ep = 0; ep < cfg.train.episodes; ++ep) {
        const double eps =
            agent->learns()
                ? epsilon_at(static_cast<std::uint64_t>(ep),
                             static_cast<std::uint64_t>(cfg.train.episodes), cfg.train.epsilon)
                : 0.0;
        std::mt19937_64 env_rng = make_stream(cfg.seed, "env", static_cast<std::uint64_t>(ep));
        EpisodeRecord rec = run_episode(*agent, env, cfg.train.steps_per_episode, eps, env_rng,
                                        agent_rng, agent->learns());
        rec.episode = ep;
        write_record(csv, rec, cfg.timing);
        csv.flush();
        if (!csv) throw std::runtime_error("failed writing " + result.csv_path);
        result.records.push_back(rec);
        if (!result.checkpoint_path.empty() && cfg.checkpoint_interval > 0 &&
            (ep + 1) % cfg.checkpoint_interval == 0)
            agent->save_checkpoint(result.checkpoint_path);
    }
    if (!result.checkpoint_path.empty()) agent->save_checkpoint(result.checkpoint_path);
    result.convergence_episode = compute_convergence_episode(result.records);
    return result;
}

EvalSummary evaluate(const ExperimentConfig& cfg, int episodes,
                     const std::optional<std::string>& checkpoint) {
    cfg.validate();
    if (episodes <= 0) throw std::invalid_argument("evaluation needs at least one episode");

    Environment env(cfg.mdp);
    std::mt19937_64 init_rng = make_stream(cfg.seed, "init");
    auto agent = make_agent(cfg, env, init_rng);
    if (agent->learns()) {
        if (!checkpoint)
            throw std::invalid_argument("evaluating a learning agent requires a checkpoint");
        agent->load_checkpoint(*checkpoint);
    }

    std::vector<double> rewards, throughputs;
    double fee_total = 0.0, stored_total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        std::mt19937_64 env_rng = make_stream(cfg.seed, "eval-env", static_cast<std::uint64_t>(ep));
        std::mt19937_64 agent_rng =
            make_stream(cfg.seed, "eval-agent", static_cast<std::uint64_t>(ep));
        EpisodeRecord rec = run_episode(*agent, env, cfg.train.steps_per_episode, 0.0, env_rng,
                                        agent_rng, false);
        rewards.push_back(rec.mean_reward);
        throughputs.push_back(rec.mean_throughput);
        fee_total += rec.total_fee;
        stored_total += rec.total_stored;
    }

    auto mean_of = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto std_of = [&](const std::vector<double>& v, double mean) {
        if (v.size() < 2) return 0.0;
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };

    EvalSummary s;
    s.episodes = episodes;
    s.mean_reward = mean_of(rewards);
    s.std_reward = std_of(rewards, s.mean_reward);
    s.mean_throughput = mean_of(throughputs);
    s.std_throughput = std_of(throughputs, s.mean_throughput);
    s.fee_per_stored_unit = stored_total > 0.0 ? fee_total / stored_total : 0.0;
    return s;
}

namespace {

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const std::string& param,
                                   double value) {
    ExperimentConfig cfg = base;
    if (param == "busy_range") {
        cfg.mdp.radio.busy_min = cfg.mdp.radio.busy_max = static_cast<int>(value);
    } else if (param == "Y") {
        cfg.mdp.radio.frame_slots = static_cast<int>(value);
    } else if (param == "lambda") {
        for (auto& t : cfg.mdp.radio.transmitters) t.arrival_rate = value;
    } else if (param == "q") {
        cfg.mdp.chain.attacker_share.assign(1, value);
    } else if (param == "K") {
        cfg.mdp.chain.num_chains = static_cast<int>(value);
        if (cfg.mdp.chain.attacker_share.size() > 1)
            cfg.mdp.chain.attacker_share.resize(1);
    } else if (param == "Z") {
        cfg.mdp.chain.background_count = static_cast<int>(value);
    } else {
        throw std::invalid_argument("unknown sweep parameter '" + param +
                                    "'; expected one of busy_range, Y, lambda, q, K, Z");
    }
    return cfg;
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param,
                            const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<SweepRow> rows;
    for (double v : values) {
        ExperimentConfig point = apply_sweep_value(cfg, param, v);
        std::ostringstream sub;
        sub << param << "_" << format_metric(v);
        point.out_dir = (std::filesystem::path(cfg.out_dir) / sub.str()).string();
        std::optional<std::string> checkpoint;
        if (point.agent == AgentKind::d3qn || point.agent == AgentKind::qlearning) {
            // The state width changes with K and Y, so every learner re-trains.
            TrainResult tr = train(point);
            checkpoint = tr.checkpoint_path;
        }
        rows.push_back({param, v, evaluate(point, point.eval_episodes, checkpoint)});
    }

    const auto csv_path = std::filesystem::path(cfg.out_dir) / ("sweep_" + param + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
    csv << "# bcrn sweep metrics v1\n";
    csv << "param,value,episodes,mean_reward,std_reward,mean_throughput,std_throughput,"
           "fee_per_stored_unit\n";
    for (const auto& row : rows) {
        csv << row.param << ',' << format_metric(row.value) << ',' << row.summary.episodes << ','
            << format_metric(row.summary.mean_reward) << ','
            << format_metric(row.summary.std_reward) << ','
            << format_metric(row.summary.mean_throughput) << ','
            << format_metric(row.summary.std_throughput) << ','
            << format_metric(row.summary.fee_per_stored_unit) << '\n';
    }
    return rows;
}

}  // namespace bcrn
