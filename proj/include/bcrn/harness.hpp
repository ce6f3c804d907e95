#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcrn/agents.hpp"
#include "bcrn/mdp.hpp"

namespace bcrn {

enum class AgentKind { d3qn, qlearning, htt, backscatter, random };

AgentKind agent_kind_from_string(const std::string& name); // throws on unknown names
std::string to_string(AgentKind kind);

struct ExperimentConfig {
    MdpConfig mdp;
    TrainConfig train;
    AgentKind agent = AgentKind::d3qn;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int eval_episodes = 500;
    int checkpoint_interval = 0; // episodes between checkpoints; 0 = final only
    bool qlearning_ack = false;  // override the tabular state-space guard
    double qlearning_state_limit = 1e10;
    bool timing = false;         // write wall-clock seconds into the CSV

    void validate() const;
};

/// Desk-scale preset mirroring the reduced tabular setting: five-slot frames,
/// queue 5, energy 3, one blockchain with a 15-unit mempool and 10-unit blocks.
ExperimentConfig reduced_preset();

/// Full-scale preset with the published environment parameters.
ExperimentConfig full_preset();

/// Flat sectioned key-value config format; unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
void write_config(const ExperimentConfig& cfg, std::ostream& out);

/// Per-episode aggregates. Only the six schema columns reach the CSV; the
/// raw totals stay in memory for summaries.
struct EpisodeRecord {
    int episode = 0;
    double mean_reward = 0.0;
    double mean_throughput = 0.0;     // stored units per frame
    double fee_per_stored_unit = 0.0; // total fees / total stored units, 0 when none stored
    double epsilon = 0.0;
    double seconds = 0.0;
    double total_fee = 0.0;
    double total_stored = 0.0;
};

/// Decision policy wired to one environment instance.
class Agent {
public:
    virtual ~Agent() = default;
    virtual int act(Environment& env, const std::vector<double>& encoding, double epsilon,
                    std::mt19937_64& rng) = 0;
    struct Transition {
        const std::vector<double>* state;
        const NetworkState* raw_state;
        int action;
        double reward;
        const std::vector<double>* next_state;
        const NetworkState* raw_next_state;
    };
    virtual void observe(const Transition&, std::mt19937_64&) {}
    virtual bool learns() const { return false; }
    virtual void save_checkpoint(const std::string& path) const;
    virtual void load_checkpoint(const std::string& path);
};

std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, Environment& env,
                                  std::mt19937_64& init_rng);

/// One freshly initialized episode of `steps` frames.
EpisodeRecord run_episode(Agent& agent, Environment& env, int steps, double epsilon,
                          std::mt19937_64& env_rng, std::mt19937_64& agent_rng, bool learn);

struct TrainResult {
    std::vector<EpisodeRecord> records;
    std::string csv_path;
    std::string checkpoint_path; // empty for non-learning agents
    int convergence_episode = -1; // first episode whose 100-episode moving average
                                  // stays within 5% of the final one
};

TrainResult train(const ExperimentConfig& cfg);

struct EvalSummary {
    int episodes = 0;
    double mean_reward = 0.0;
    double std_reward = 0.0;
    double mean_throughput = 0.0;
    double std_throughput = 0.0;
    double fee_per_stored_unit = 0.0; // aggregate over all evaluation episodes
};

/// Fixed-seed evaluation with exploration disabled. Learned agents restore
/// their parameters from `checkpoint`.
EvalSummary evaluate(const ExperimentConfig& cfg, int episodes,
                     const std::optional<std::string>& checkpoint = std::nullopt);

struct SweepRow {
    std::string param;
    double value = 0.0;
    EvalSummary summary;
};

/// Re-run (train when the agent learns, then evaluate) per swept value.
/// Sweepable parameters: busy_range, Y, lambda, q, K, Z.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::string& param,
                            const std::vector<double>& values);

/// Fast invariant battery; prints one status line per check.
bool selfcheck(std::ostream& out);

/// The versioned metrics header shared by train CSVs.
extern const char* const kMetricsSchemaLine;
extern const char* const kMetricsColumnsLine;

}  // namespace bcrn
