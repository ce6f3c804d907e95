#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcrn/harness.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "Experiment config file (defaults to the reduced preset)");
    cmd->add_option("--seed", opts.seed, "Master seed override");
    cmd->add_option("--out", opts.out, "Output directory override");
    cmd->add_option("--episodes", opts.episodes, "Episode count override");
}

bcrn::ExperimentConfig resolve(const CommonOpts& opts, bool episodes_are_training) {
    bcrn::ExperimentConfig cfg =
        opts.config.empty() ? bcrn::reduced_preset() : bcrn::load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out) cfg.out_dir = *opts.out;
    if (opts.episodes) {
        if (episodes_are_training)
            cfg.train.episodes = *opts.episodes;
        else
            cfg.eval_episodes = *opts.episodes;
    }
    cfg.validate();
    return cfg;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> values;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    if (values.empty()) throw std::invalid_argument("--values needs at least one number");
    return values;
}

void print_summary(const std::string& label, const bcrn::EvalSummary& s) {
    std::printf("%s: episodes=%d mean_reward=%.4f (std %.4f) mean_throughput=%.4f "
                "fee_per_stored_unit=%.4f\n",
                label.c_str(), s.episodes, s.mean_reward, s.std_reward, s.mean_throughput,
                s.fee_per_stored_unit);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blockchain-backed backscatter cognitive radio network simulator"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train an agent and write per-episode metrics");
    add_common(train_cmd, train_opts);

    CommonOpts eval_opts;
    std::string eval_checkpoint;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy with exploration disabled");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--checkpoint", eval_checkpoint,
                         "Checkpoint file (required for learned agents)");

    CommonOpts sweep_opts;
    std::string sweep_param;
    std::string sweep_values;
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate across one parameter axis");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--param", sweep_param, "One of: busy_range, Y, lambda, q, K, Z")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required();

    auto* selfcheck_cmd = app.add_subcommand("selfcheck", "Run the fast invariant battery");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            const auto cfg = resolve(train_opts, true);
            const auto result = bcrn::train(cfg);
            std::printf("wrote %s (%zu episodes)\n", result.csv_path.c_str(),
                        result.records.size());
            if (!result.checkpoint_path.empty())
                std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
            if (result.convergence_episode >= 0)
                std::printf("converged around episode %d (100-episode moving average within "
                            "5%% of final)\n",
                            result.convergence_episode);
        } else if (eval_cmd->parsed()) {
            const auto cfg = resolve(eval_opts, false);
            std::optional<std::string> checkpoint;
            if (!eval_checkpoint.empty()) checkpoint = eval_checkpoint;
            const auto summary = bcrn::evaluate(cfg, cfg.eval_episodes, checkpoint);
            print_summary(bcrn::to_string(cfg.agent), summary);
        } else if (sweep_cmd->parsed()) {
            const auto cfg = resolve(sweep_opts, false);
            const auto rows = bcrn::sweep(cfg, sweep_param, parse_values(sweep_values));
            for (const auto& row : rows) {
                std::ostringstream label;
                label << row.param << "=" << row.value;
                print_summary(label.str(), row.summary);
            }
        } else if (selfcheck_cmd->parsed()) {
            if (!bcrn::selfcheck(std::cout)) return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
