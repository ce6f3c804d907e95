#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bcrn/harness.hpp"
#include "bcrn/rng.hpp"

namespace py = pybind11;
using namespace bcrn;

namespace {

// Environment plus its own random stream, so python callers only deal with seeds.
struct PyEnvironment {
    PyEnvironment(const MdpConfig& cfg, std::uint64_t seed)
        : env(cfg), rng(make_stream(seed, "py-env")) {}

    std::vector<double> reset() {
        env.reset(rng);
        return encode_state(env.state(), env.config());
    }

    py::tuple step(std::size_t action_index) {
        StepResult res = env.step_index(action_index, rng);
        py::dict info;
        info["delivered"] = res.info.delivered;
        info["stored"] = res.info.stored;
        info["fee_charged"] = res.info.fee_charged;
        info["included"] = res.info.included;
        info["attacked"] = res.info.attacked;
        info["dropped_arrivals"] = res.info.dropped_arrivals;
        return py::make_tuple(encode_state(res.next_state, env.config()), res.reward, info);
    }

    std::vector<bool> feasible() {
        const Mask& mask = env.current_mask();
        return {mask.begin(), mask.end()};
    }

    Environment env;
    std::mt19937_64 rng;
};

QNetwork make_network(int input_width, const std::vector<int>& hidden, int actions,
                      std::uint64_t seed) {
    std::mt19937_64 rng = make_stream(seed, "py-net");
    return QNetwork::init(input_width, hidden, actions, rng);
}

}  // namespace

PYBIND11_MODULE(_bcrn, m) {
    m.doc() = "Blockchain-backed backscatter cognitive radio network simulator";

    py::class_<TransmitterConfig>(m, "TransmitterConfig")
        .def(py::init<>())
        .def_readwrite("queue_capacity", &TransmitterConfig::queue_capacity)
        .def_readwrite("energy_capacity", &TransmitterConfig::energy_capacity)
        .def_readwrite("harvest_rate", &TransmitterConfig::harvest_rate)
        .def_readwrite("active_energy", &TransmitterConfig::active_energy)
        .def_readwrite("backscatter_rate", &TransmitterConfig::backscatter_rate)
        .def_readwrite("active_rate", &TransmitterConfig::active_rate)
        .def_readwrite("success_backscatter", &TransmitterConfig::success_backscatter)
        .def_readwrite("success_active", &TransmitterConfig::success_active)
        .def_readwrite("arrival_rate", &TransmitterConfig::arrival_rate);

    py::class_<RadioConfig>(m, "RadioConfig")
        .def(py::init<>())
        .def_readwrite("frame_slots", &RadioConfig::frame_slots)
        .def_readwrite("busy_min", &RadioConfig::busy_min)
        .def_readwrite("busy_max", &RadioConfig::busy_max)
        .def_readwrite("expected_success", &RadioConfig::expected_success)
        .def_readwrite("transmitters", &RadioConfig::transmitters);

    py::class_<ChainConfig>(m, "ChainConfig")
        .def(py::init<>())
        .def_readwrite("num_chains", &ChainConfig::num_chains)
        .def_readwrite("mempool_capacity", &ChainConfig::mempool_capacity)
        .def_readwrite("block_capacity", &ChainConfig::block_capacity)
        .def_readwrite("background_count", &ChainConfig::background_count)
        .def_readwrite("background_size_max", &ChainConfig::background_size_max)
        .def_readwrite("fee_min", &ChainConfig::fee_min)
        .def_readwrite("fee_max", &ChainConfig::fee_max)
        .def_readwrite("fee_intervals", &ChainConfig::fee_intervals)
        .def_readwrite("attacker_share", &ChainConfig::attacker_share)
        .def_readwrite("confirmation_depth", &ChainConfig::confirmation_depth)
        .def_readwrite("fee_on_submit", &ChainConfig::fee_on_submit)
        .def_readwrite("refund_on_attack", &ChainConfig::refund_on_attack);

    py::class_<MdpConfig>(m, "MdpConfig")
        .def(py::init<>())
        .def_readwrite("radio", &MdpConfig::radio)
        .def_readwrite("chain", &MdpConfig::chain)
        .def_readwrite("rho", &MdpConfig::rho)
        .def_readwrite("eta", &MdpConfig::eta)
        .def_readwrite("max_table_size", &MdpConfig::max_table_size);

    py::class_<EpsilonSchedule>(m, "EpsilonSchedule")
        .def(py::init<>())
        .def_readwrite("start", &EpsilonSchedule::start)
        .def_readwrite("end", &EpsilonSchedule::end);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("episodes", &TrainConfig::episodes)
        .def_readwrite("steps_per_episode", &TrainConfig::steps_per_episode)
        .def_readwrite("batch", &TrainConfig::batch)
        .def_readwrite("discount", &TrainConfig::discount)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("target_sync", &TrainConfig::target_sync)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("replay_capacity", &TrainConfig::replay_capacity)
        .def_readwrite("qlearning_alpha", &TrainConfig::qlearning_alpha);

    py::enum_<AgentKind>(m, "AgentKind")
        .value("d3qn", AgentKind::d3qn)
        .value("qlearning", AgentKind::qlearning)
        .value("htt", AgentKind::htt)
        .value("backscatter", AgentKind::backscatter)
        .value("random", AgentKind::random);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("mdp", &ExperimentConfig::mdp)
        .def_readwrite("train", &ExperimentConfig::train)
        .def_readwrite("agent", &ExperimentConfig::agent)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("out_dir", &ExperimentConfig::out_dir)
        .def_readwrite("eval_episodes", &ExperimentConfig::eval_episodes)
        .def_readwrite("checkpoint_interval", &ExperimentConfig::checkpoint_interval)
        .def_readwrite("qlearning_ack", &ExperimentConfig::qlearning_ack)
        .def_readwrite("timing", &ExperimentConfig::timing)
        .def("validate", &ExperimentConfig::validate);

    py::class_<Action>(m, "Action")
        .def_property_readonly("harvest_budget",
                               [](const Action& a) { return a.alloc.harvest_budget; })
        .def_property_readonly("backscatter", [](const Action& a) { return a.alloc.backscatter; })
        .def_property_readonly("active", [](const Action& a) { return a.alloc.active; })
        .def_readonly("kappa", &Action::kappa)
        .def_readonly("fee_index", &Action::fee_index);

    py::class_<PyEnvironment>(m, "Environment")
        .def(py::init<const MdpConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed") = 1)
        .def("reset", &PyEnvironment::reset)
        .def("step", &PyEnvironment::step, py::arg("action_index"))
        .def("feasible", &PyEnvironment::feasible)
        .def_property_readonly("num_actions",
                               [](const PyEnvironment& e) { return e.env.table().size(); })
        .def("action", [](const PyEnvironment& e, std::size_t i) { return e.env.table()[i]; });

    py::class_<QNetwork>(m, "QNetwork")
        .def(py::init(&make_network), py::arg("input_width"), py::arg("hidden"),
             py::arg("actions"), py::arg("seed") = 1)
        .def_property_readonly("input_width", &QNetwork::input_width)
        .def_property_readonly("num_actions", &QNetwork::num_actions)
        .def("forward",
             [](const QNetwork& net, const std::vector<double>& x) { return net.forward(x); })
        .def("value_and_advantage",
             [](const QNetwork& net, const std::vector<double>& x) {
                 auto d = net.forward_detail(x);
                 return py::make_tuple(d.value, d.advantage, d.q);
             })
        .def("grad_check",
             [](const QNetwork& net, const std::vector<double>& x, int action, double y) {
                 return grad_check(net, x, action, y);
             })
        .def("save", &QNetwork::save_file)
        .def_static("load", &QNetwork::load_file);

    py::class_<EpisodeRecord>(m, "EpisodeRecord")
        .def_readonly("episode", &EpisodeRecord::episode)
        .def_readonly("mean_reward", &EpisodeRecord::mean_reward)
        .def_readonly("mean_throughput", &EpisodeRecord::mean_throughput)
        .def_readonly("fee_per_stored_unit", &EpisodeRecord::fee_per_stored_unit)
        .def_readonly("epsilon", &EpisodeRecord::epsilon);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("records", &TrainResult::records)
        .def_readonly("csv_path", &TrainResult::csv_path)
        .def_readonly("checkpoint_path", &TrainResult::checkpoint_path)
        .def_readonly("convergence_episode", &TrainResult::convergence_episode);

    py::class_<EvalSummary>(m, "EvalSummary")
        .def_readonly("episodes", &EvalSummary::episodes)
        .def_readonly("mean_reward", &EvalSummary::mean_reward)
        .def_readonly("std_reward", &EvalSummary::std_reward)
        .def_readonly("mean_throughput", &EvalSummary::mean_throughput)
        .def_readonly("std_throughput", &EvalSummary::std_throughput)
        .def_readonly("fee_per_stored_unit", &EvalSummary::fee_per_stored_unit);

    m.def("attack_probability", &attack_probability, py::arg("q"), py::arg("n_conf"),
          "Double-spend success probability for attacker share q and n_conf confirmations");
    m.def("fee_rate", &fee_rate, py::arg("fee_index"), py::arg("config"),
          "Representative fee rate of the given interval");
    m.def("allocation_grid_size", &allocation_grid_size, py::arg("frame_slots"),
          py::arg("num_transmitters"));
    m.def("reduced_preset", &reduced_preset);
    m.def("full_preset", &full_preset);
    m.def("train", &train, py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "evaluate",
        [](const ExperimentConfig& cfg, int episodes, const std::optional<std::string>& ckpt) {
            return evaluate(cfg, episodes, ckpt);
        },
        py::arg("config"), py::arg("episodes"), py::arg("checkpoint") = std::nullopt,
        py::call_guard<py::gil_scoped_release>());
    m.def("selfcheck", []() {
        std::ostringstream os;
        const bool ok = selfcheck(os);
        return py::make_tuple(ok, os.str());
    });
}
