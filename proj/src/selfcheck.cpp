#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "bcrn/harness.hpp"
#include "bcrn/rng.hpp"

namespace bcrn {

namespace {

bool check_eq1_points(std::string& detail) {
    for (int n : {1, 2, 6}) {
        if (attack_probability(0.0, n) != 0.0) {
            detail = "q=0 must be safe";
            return false;
        }
    }
    for (double q : {0.5, 0.7, 1.0}) {
        if (attack_probability(q, 2) != 1.0) {
            detail = "q >= 1/2 must always succeed";
            return false;
        }
    }
    const double pa = attack_probability(0.1, 2);
    if (std::abs(pa - 0.056) > 1e-9) {
        std::ostringstream os;
        os << "p_a(0.1, 2) = " << pa << ", expected 0.056";
        detail = os.str();
        return false;
    }
    return true;
}

bool check_gradients(std::string& detail) {
    std::mt19937_64 rng = make_stream(7, "selfcheck-grad");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        QNetwork net = QNetwork::init(5, {4, 4}, 6, rng);
        std::vector<double> x(5);
        for (auto& v : x) v = u(rng);
        const int action = static_cast<int>(rng() % 6);
        const double y = 2.0 * u(rng);
        worst = std::max(worst, grad_check(net, x, action, y));
    }
    if (worst > 1e-4) {
        std::ostringstream os;
        os << "max relative error " << worst;
        detail = os.str();
        return false;
    }
    return true;
}

bool check_dueling_identity(std::string& detail) {
    std::mt19937_64 rng = make_stream(11, "selfcheck-dueling");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    QNetwork net = QNetwork::init(7, {32, 32, 32}, 50, rng);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(7);
        for (auto& v : x) v = u(rng);
        auto detailopt = net.forward_detail(x);
        double mean_q = 0.0;
        for (double q : detailopt.q) mean_q += q;
        mean_q /= static_cast<double>(detailopt.q.size());
        if (std::abs(mean_q - detailopt.value) > 1e-6) {
            detail = "mean(Q) deviates from V";
            return false;
        }
    }
    return true;
}

bool check_action_counts(std::string& detail) {
    MdpConfig cfg;
    cfg.radio.transmitters.assign(1, TransmitterConfig{});
    cfg.chain.num_chains = 1;
    cfg.chain.fee_intervals = 1;
    cfg.radio.frame_slots = 2;
    cfg.radio.busy_max = 2;
    auto table2 = ActionTable::build(cfg);
    cfg.radio.frame_slots = 1;
    cfg.radio.busy_max = 1;
    auto table1 = ActionTable::build(cfg);
    if (table2.size() != 10 || table1.size() != 4) {
        std::ostringstream os;
        os << "grid sizes " << table2.size() << "/" << table1.size() << ", expected 10/4";
        detail = os.str();
        return false;
    }
    // Brute-force mask against the constraint definition for every busy count.
    for (int b = 0; b <= 2; ++b) {
        const Mask mask = feasible_mask_for_busy(b, table2);
        for (std::size_t i = 0; i < table2.size(); ++i) {
            const auto& a = table2[i].alloc;
            const bool expect = a.harvest_budget + a.backscatter[0] <= b &&
                                a.harvest_budget + a.backscatter[0] + a.active[0] <= 2;
            if (static_cast<bool>(mask[i]) != expect) {
                detail = "mask disagrees with the brute-force filter";
                return false;
            }
        }
    }
    return true;
}

bool check_transition_bounds(std::string& detail) {
    std::mt19937_64 rng = make_stream(23, "selfcheck-bounds");
    for (int round = 0; round < 100; ++round) {
        MdpConfig cfg;
        cfg.radio.frame_slots = 2 + static_cast<int>(rng() % 5);
        cfg.radio.busy_min = 0;
        cfg.radio.busy_max = cfg.radio.frame_slots;
        const int n = 1 + static_cast<int>(rng() % 3);
        cfg.radio.transmitters.clear();
        std::uniform_real_distribution<double> prob(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            TransmitterConfig t;
            t.queue_capacity = 1 + static_cast<int>(rng() % 8);
            t.energy_capacity = 1 + static_cast<int>(rng() % 6);
            t.harvest_rate = static_cast<int>(rng() % 3);
            t.active_energy = static_cast<int>(rng() % 3);
            t.backscatter_rate = static_cast<int>(rng() % 3);
            t.active_rate = static_cast<int>(rng() % 4);
            t.success_backscatter = prob(rng);
            t.success_active = prob(rng);
            t.arrival_rate = 4.0 * prob(rng);
            cfg.radio.transmitters.push_back(t);
        }
        cfg.chain.num_chains = 1;
        cfg.chain.mempool_capacity = 15;
        cfg.chain.block_capacity = 10;
        cfg.chain.background_count = 2;
        cfg.chain.background_size_max = 5;
        cfg.chain.attacker_share = {0.25 * prob(rng)};

        Environment env(cfg);
        env.reset(rng);
        for (int step = 0; step < 100; ++step) {
            const Mask& mask = env.current_mask();
            std::vector<std::size_t> feasible;
            for (std::size_t i = 0; i < mask.size(); ++i)
                if (mask[i]) feasible.push_back(i);
            const std::size_t pick = feasible[rng() % feasible.size()];
            const Action& act = env.table()[pick];
            StepResult res = env.step_index(pick, rng);

            double cap = 0.0;
            for (int i = 0; i < n; ++i)
                cap += act.alloc.backscatter[static_cast<std::size_t>(i)] *
                           cfg.radio.transmitters[static_cast<std::size_t>(i)].backscatter_rate +
                       act.alloc.active[static_cast<std::size_t>(i)] *
                           cfg.radio.transmitters[static_cast<std::size_t>(i)].active_rate;
            if (res.info.delivered > cap + 1e-9) {
                detail = "delivered more than the slot capacity";
                return false;
            }
            for (int i = 0; i < n; ++i) {
                const auto& s = res.next_state.transmitters[static_cast<std::size_t>(i)];
                const auto& t = cfg.radio.transmitters[static_cast<std::size_t>(i)];
                if (s.queue < 0 || s.queue > t.queue_capacity || s.energy < 0 ||
                    s.energy > t.energy_capacity) {
                    detail = "queue or energy bound violated";
                    return false;
                }
            }
            for (const auto& hist : res.next_state.mempools) {
                double total = 0.0;
                for (double units : hist) total += units;
                if (total > cfg.chain.mempool_capacity + 1e-9) {
                    detail = "mempool capacity exceeded";
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace

bool selfcheck(std::ostream& out) {
    struct Check {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const Check checks[] = {
        {"eq1-oracle-points", check_eq1_points},
        {"gradient-check", check_gradients},
        {"dueling-identity", check_dueling_identity},
        {"action-grid-count", check_action_counts},
        {"transition-bounds", check_transition_bounds},
    };
    bool all_ok = true;
    for (const auto& check : checks) {
        std::string detail;
        const bool ok = check.run(detail);
        all_ok = all_ok && ok;
        out << (ok ? "[ ok ] " : "[FAIL] ") << check.name;
        if (!ok && !detail.empty()) out << " (" << detail << ")";
        out << "\n";
    }
    return all_ok;
}

}  // namespace bcrn
