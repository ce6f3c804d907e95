#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bcrn/harness.hpp"

namespace bcrn {

AgentKind agent_kind_from_string(const std::string& name) {
    if (name == "d3qn") return AgentKind::d3qn;
    if (name == "qlearning") return AgentKind::qlearning;
    if (name == "htt") return AgentKind::htt;
    if (name == "backscatter") return AgentKind::backscatter;
    if (name == "random") return AgentKind::random;
    throw std::invalid_argument("unknown agent kind: " + name);
}

std::string to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::d3qn: return "d3qn";
        case AgentKind::qlearning: return "qlearning";
        case AgentKind::htt: return "htt";
        case AgentKind::backscatter: return "backscatter";
        case AgentKind::random: return "random";
    }
    return "?";
}

namespace {

// Upper bound on the discrete state count, saturating instead of overflowing.
double state_space_bound(const MdpConfig& cfg) {
    double bound = cfg.radio.frame_slots + 1.0;
    for (const auto& t : cfg.radio.transmitters)
        bound *= (t.queue_capacity + 1.0) * (t.energy_capacity + 1.0);
    const double per_bin = std::floor(cfg.chain.mempool_capacity) + 1.0;
    for (int i = 0; i < cfg.chain.num_chains * cfg.chain.fee_intervals; ++i) {
        bound *= per_bin;
        if (bound > 1e30) return 1e30;
    }
    return bound;
}

}  // namespace

void ExperimentConfig::validate() const {
    mdp.validate();
    train.validate();
    if (eval_episodes < 0) throw std::invalid_argument("eval_episodes must be nonnegative");
    if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be nonnegative");
    if (agent == AgentKind::qlearning && !qlearning_ack) {
        const double pairs =
            state_space_bound(mdp) *
            static_cast<double>(allocation_grid_size(mdp.radio.frame_slots,
                                                     mdp.radio.num_transmitters()) *
                                static_cast<std::uint64_t>(mdp.chain.num_chains) *
                                static_cast<std::uint64_t>(mdp.chain.fee_intervals));
        if (pairs > qlearning_state_limit)
            throw std::invalid_argument(
                "qlearning on this configuration spans ~" + std::to_string(pairs) +
                " state-action pairs (limit " + std::to_string(qlearning_state_limit) +
                "); use the reduced preset or set qlearning_ack = true");
    }
}

ExperimentConfig reduced_preset() {
    ExperimentConfig cfg;
    TransmitterConfig t;
    t.queue_capacity = 5;
    t.energy_capacity = 3;
    t.harvest_rate = 1;
    t.active_energy = 1;
    t.backscatter_rate = 1;
    t.active_rate = 2;
    t.success_backscatter = 0.9;
    t.success_active = 0.9;
    t.arrival_rate = 4.0;
    cfg.mdp.radio.frame_slots = 5;
    cfg.mdp.radio.busy_min = 1;
    cfg.mdp.radio.busy_max = 4;
    cfg.mdp.radio.transmitters = {t};

    cfg.mdp.chain.num_chains = 1;
    cfg.mdp.chain.mempool_capacity = 15.0;
    cfg.mdp.chain.block_capacity = 10.0;
    cfg.mdp.chain.background_count = 2;
    cfg.mdp.chain.background_size_max = 5;
    cfg.mdp.chain.fee_min = 0.01;
    cfg.mdp.chain.fee_max = 0.8;
    cfg.mdp.chain.fee_intervals = 4;
    cfg.mdp.chain.attacker_share = {0.05};
    cfg.mdp.chain.confirmation_depth = 2;

    cfg.mdp.rho = 1.0;
    cfg.mdp.eta = 0.2;

    cfg.train.episodes = 3000;
    cfg.train.steps_per_episode = 200;
    return cfg;
}

ExperimentConfig full_preset() {
    ExperimentConfig cfg;
    TransmitterConfig t; // defaults already carry the published rates
    cfg.mdp.radio.frame_slots = 7;
    cfg.mdp.radio.busy_min = 1;
    cfg.mdp.radio.busy_max = 6;
    t.arrival_rate = 4.0;
    cfg.mdp.radio.transmitters = {t, t, t};

    cfg.mdp.chain.num_chains = 3;
    cfg.mdp.chain.mempool_capacity = 50.0;
    cfg.mdp.chain.block_capacity = 30.0;
    cfg.mdp.chain.background_count = 5;
    cfg.mdp.chain.background_size_max = 10;
    cfg.mdp.chain.attacker_share = {0.05, 0.05, 0.05};

    cfg.train.episodes = 50000;
    cfg.train.steps_per_episode = 200;
    return cfg;
}

namespace {

struct RawEntry {
    std::string section;
    std::string key;
    std::string value;
    int line;
};

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const RawEntry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw std::invalid_argument("line " + std::to_string(e.line) + ": expected a boolean for " +
                                e.key + ", got '" + e.value + "'");
}

double parse_double(const RawEntry& e, const std::string& v) {
    std::size_t used = 0;
    double out;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw std::invalid_argument("line " + std::to_string(e.line) + ": expected a number for " +
                                    e.key + ", got '" + v + "'");
    return out;
}

long long parse_int(const RawEntry& e, const std::string& v) {
    const double d = parse_double(e, v);
    if (d != std::floor(d))
        throw std::invalid_argument("line " + std::to_string(e.line) + ": expected an integer for " +
                                    e.key);
    return static_cast<long long>(d);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

// Broadcast a scalar or apply a full-length list across transmitters.
template <typename Setter>
void apply_per_transmitter(ExperimentConfig& cfg, const RawEntry& e, Setter set) {
    auto items = split_list(e.value);
    auto& txs = cfg.mdp.radio.transmitters;
    if (items.size() != 1 && items.size() != txs.size())
        throw std::invalid_argument("line " + std::to_string(e.line) + ": " + e.key +
                                    " must list one value or one per transmitter");
    for (std::size_t i = 0; i < txs.size(); ++i)
        set(txs[i], items[items.size() == 1 ? 0 : i]);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    std::vector<RawEntry> entries;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (auto pos = s.find('#'); pos != std::string::npos) s = trim(s.substr(0, pos));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("line " + std::to_string(lineno) + ": malformed section");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "radio" && section != "chain" && section != "train" &&
                section != "experiment")
                throw std::invalid_argument("line " + std::to_string(lineno) +
                                            ": unknown section [" + section + "]");
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": key outside any section");
        entries.push_back({section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), lineno});
    }

    ExperimentConfig cfg = reduced_preset();

    // Structural keys first so later per-element keys see the right widths.
    for (const auto& e : entries) {
        if (e.section == "radio" && e.key == "num_transmitters") {
            const auto n = parse_int(e, e.value);
            if (n < 1) throw std::invalid_argument("num_transmitters must be >= 1");
            cfg.mdp.radio.transmitters.assign(static_cast<std::size_t>(n),
                                              cfg.mdp.radio.transmitters.front());
        }
        if (e.section == "chain" && e.key == "num_chains") {
            cfg.mdp.chain.num_chains = static_cast<int>(parse_int(e, e.value));
        }
    }

    for (const auto& e : entries) {
        auto bad_key = [&]() {
            return std::invalid_argument("line " + std::to_string(e.line) + ": unknown key '" +
                                         e.key + "' in section [" + e.section + "]");
        };
        if (e.section == "radio") {
            auto& r = cfg.mdp.radio;
            if (e.key == "num_transmitters") continue; // handled above
            else if (e.key == "frame_slots") r.frame_slots = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "busy_min") r.busy_min = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "busy_max") r.busy_max = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "expected_success") r.expected_success = parse_bool(e);
            else if (e.key == "queue_capacity")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.queue_capacity = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "energy_capacity")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.energy_capacity = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "harvest_rate")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.harvest_rate = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "active_energy")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.active_energy = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "backscatter_rate")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.backscatter_rate = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "active_rate")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.active_rate = static_cast<int>(parse_int(e, v));
                });
            else if (e.key == "success_backscatter")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.success_backscatter = parse_double(e, v);
                });
            else if (e.key == "success_active")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.success_active = parse_double(e, v);
                });
            else if (e.key == "arrival_rate")
                apply_per_transmitter(cfg, e, [&](TransmitterConfig& t, const std::string& v) {
                    t.arrival_rate = parse_double(e, v);
                });
            else throw bad_key();
        } else if (e.section == "chain") {
            auto& c = cfg.mdp.chain;
            if (e.key == "num_chains") continue;
            else if (e.key == "mempool_capacity") c.mempool_capacity = parse_double(e, e.value);
            else if (e.key == "block_capacity") c.block_capacity = parse_double(e, e.value);
            else if (e.key == "background_count") c.background_count = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "background_size_max") c.background_size_max = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "fee_min") c.fee_min = parse_double(e, e.value);
            else if (e.key == "fee_max") c.fee_max = parse_double(e, e.value);
            else if (e.key == "fee_intervals") c.fee_intervals = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "confirmation_depth") c.confirmation_depth = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "fee_on_submit") c.fee_on_submit = parse_bool(e);
            else if (e.key == "refund_on_attack") c.refund_on_attack = parse_bool(e);
            else if (e.key == "attacker_share") {
                auto items = split_list(e.value);
                if (items.size() != 1 && items.size() != static_cast<std::size_t>(c.num_chains))
                    throw std::invalid_argument("line " + std::to_string(e.line) +
                                                ": attacker_share must list one value or one per chain");
                c.attacker_share.clear();
                for (const auto& v : items) c.attacker_share.push_back(parse_double(e, v));
            } else throw bad_key();
        } else if (e.section == "train") {
            auto& t = cfg.train;
            if (e.key == "episodes") t.episodes = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "steps_per_episode") t.steps_per_episode = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "batch") t.batch = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "discount") t.discount = parse_double(e, e.value);
            else if (e.key == "epsilon_start") t.epsilon.start = parse_double(e, e.value);
            else if (e.key == "epsilon_end") t.epsilon.end = parse_double(e, e.value);
            else if (e.key == "target_sync") t.target_sync = static_cast<std::uint64_t>(parse_int(e, e.value));
            else if (e.key == "learning_rate") t.learning_rate = parse_double(e, e.value);
            else if (e.key == "replay_capacity") t.replay_capacity = static_cast<std::size_t>(parse_int(e, e.value));
            else if (e.key == "qlearning_alpha") t.qlearning_alpha = parse_double(e, e.value);
            else throw bad_key();
        } else { // experiment
            if (e.key == "agent") cfg.agent = agent_kind_from_string(e.value);
            else if (e.key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(e, e.value));
            else if (e.key == "out") cfg.out_dir = e.value;
            else if (e.key == "eval_episodes") cfg.eval_episodes = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "rho") cfg.mdp.rho = parse_double(e, e.value);
            else if (e.key == "eta") cfg.mdp.eta = parse_double(e, e.value);
            else if (e.key == "checkpoint_interval") cfg.checkpoint_interval = static_cast<int>(parse_int(e, e.value));
            else if (e.key == "action_table_limit") cfg.mdp.max_table_size = static_cast<std::size_t>(parse_int(e, e.value));
            else if (e.key == "qlearning_ack") cfg.qlearning_ack = parse_bool(e);
            else if (e.key == "qlearning_state_limit") cfg.qlearning_state_limit = parse_double(e, e.value);
            else if (e.key == "timing") cfg.timing = parse_bool(e);
            else throw bad_key();
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse_config(in);
}

namespace {

template <typename T, typename Get>
std::string per_transmitter_list(const std::vector<TransmitterConfig>& txs, Get get) {
    std::ostringstream os;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        if (i) os << ",";
        os << get(txs[i]);
    }
    return os.str();
}

}  // namespace

void write_config(const ExperimentConfig& cfg, std::ostream& out) {
    const auto& r = cfg.mdp.radio;
    const auto& c = cfg.mdp.chain;
    const auto& t = cfg.train;
    out << "[radio]\n";
    out << "frame_slots = " << r.frame_slots << "\n";
    out << "busy_min = " << r.busy_min << "\n";
    out << "busy_max = " << r.busy_max << "\n";
    out << "num_transmitters = " << r.num_transmitters() << "\n";
    out << "expected_success = " << (r.expected_success ? "true" : "false") << "\n";
    out << "queue_capacity = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.queue_capacity; }) << "\n";
    out << "energy_capacity = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.energy_capacity; }) << "\n";
    out << "harvest_rate = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.harvest_rate; }) << "\n";
    out << "active_energy = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.active_energy; }) << "\n";
    out << "backscatter_rate = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.backscatter_rate; }) << "\n";
    out << "active_rate = " << per_transmitter_list<int>(r.transmitters, [](const auto& x) { return x.active_rate; }) << "\n";
    out << "success_backscatter = " << per_transmitter_list<double>(r.transmitters, [](const auto& x) { return x.success_backscatter; }) << "\n";
    out << "success_active = " << per_transmitter_list<double>(r.transmitters, [](const auto& x) { return x.success_active; }) << "\n";
    out << "arrival_rate = " << per_transmitter_list<double>(r.transmitters, [](const auto& x) { return x.arrival_rate; }) << "\n";
    out << "\n[chain]\n";
    out << "num_chains = " << c.num_chains << "\n";
    out << "mempool_capacity = " << c.mempool_capacity << "\n";
    out << "block_capacity = " << c.block_capacity << "\n";
    out << "background_count = " << c.background_count << "\n";
    out << "background_size_max = " << c.background_size_max << "\n";
    out << "fee_min = " << c.fee_min << "\n";
    out << "fee_max = " << c.fee_max << "\n";
    out << "fee_intervals = " << c.fee_intervals << "\n";
    out << "attacker_share = ";
    for (std::size_t i = 0; i < c.attacker_share.size(); ++i)
        out << (i ? "," : "") << c.attacker_share[i];
    out << "\n";
    out << "confirmation_depth = " << c.confirmation_depth << "\n";
    out << "fee_on_submit = " << (c.fee_on_submit ? "true" : "false") << "\n";
    out << "refund_on_attack = " << (c.refund_on_attack ? "true" : "false") << "\n";
    out << "\n[train]\n";
    out << "episodes = " << t.episodes << "\n";
    out << "steps_per_episode = " << t.steps_per_episode << "\n";
    out << "batch = " << t.batch << "\n";
    out << "discount = " << t.discount << "\n";
    out << "epsilon_start = " << t.epsilon.start << "\n";
    out << "epsilon_end = " << t.epsilon.end << "\n";
    out << "target_sync = " << t.target_sync << "\n";
    out << "learning_rate = " << t.learning_rate << "\n";
    out << "replay_capacity = " << t.replay_capacity << "\n";
    out << "qlearning_alpha = " << t.qlearning_alpha << "\n";
    out << "\n[experiment]\n";
    out << "agent = " << to_string(cfg.agent) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "out = " << cfg.out_dir << "\n";
    out << "eval_episodes = " << cfg.eval_episodes << "\n";
    out << "rho = " << cfg.mdp.rho << "\n";
    out << "eta = " << cfg.mdp.eta << "\n";
    out << "checkpoint_interval = " << cfg.checkpoint_interval << "\n";
    out << "action_table_limit = " << cfg.mdp.max_table_size << "\n";
    out << "qlearning_ack = " << (cfg.qlearning_ack ? "true" : "false") << "\n";
    out << "timing = " << (cfg.timing ? "true" : "false") << "\n";
}

}  // namespace bcrn
