// cyberdial train | eval | replay
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cyberdial/harness/run.hpp"
#include "cyberdial/replay_log.hpp"

namespace {

using namespace cyberdial;

std::optional<bool> on_off(const std::string& v)
{
    if (v.empty()) return std::nullopt;
    return v == "on";
}

struct ScenarioFlags {
    std::string scenario;
    double detection = -1.0;
    int message_bits = 0;
    std::string block;

    harness::ScenarioOverrides overrides() const
    {
        harness::ScenarioOverrides o;
        if (detection >= 0.0) o.detection = detection;
        if (message_bits > 0) o.message_bits = message_bits;
        o.block = on_off(block);
        return o;
    }
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f, bool required)
{
    auto* opt = cmd->add_option("--scenario", f.scenario, "small, small_green, large, or a scenario JSON path");
    if (required) opt->required();
    cmd->add_option("--detection", f.detection, "monitor detection rate for scans and exploits")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--message-bits", f.message_bits, "message width")->check(CLI::Range(1, 16));
    cmd->add_option("--block", f.block, "enable the block action")->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-agent cyber defence training with learned communication"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train dial or qmix defenders");
    ScenarioFlags train_scn;
    std::string algo;
    std::uint64_t train_seed = 1;
    int epochs = 5000;
    int episodes = 128;
    std::string out;
    std::string sau = "on";
    int eval_interval = 1;
    int eval_episodes = 128;
    int checkpoint_interval = 100;
    train->add_option("--algo", algo, "dial or qmix")->required()->check(CLI::IsMember({"dial", "qmix"}));
    add_scenario_flags(train, train_scn, true);
    train->add_option("--seed", train_seed, "master seed");
    train->add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
    train->add_option("--episodes", episodes, "episodes per epoch")->check(CLI::PositiveNumber);
    train->add_option("--out", out, "run directory");
    train->add_option("--sau", sau, "strategic action unmasking")->check(CLI::IsMember({"on", "off"}));
    train->add_option("--eval-interval", eval_interval, "epochs between curve evaluations")->check(CLI::PositiveNumber);
    train->add_option("--eval-episodes", eval_episodes, "episodes per curve evaluation")->check(CLI::PositiveNumber);
    train->add_option("--checkpoint-interval", checkpoint_interval, "epochs between checkpoints, 0 for final only")
        ->check(CLI::NonNegativeNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint greedily");
    ScenarioFlags eval_scn;
    std::string checkpoint;
    std::uint64_t eval_seed = 0;
    std::size_t eval_count = 128;
    std::string report_path;
    std::size_t replays = 0;
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    add_scenario_flags(eval, eval_scn, false);
    eval->add_option("--seed", eval_seed, "evaluation seed");
    eval->add_option("--episodes", eval_count, "evaluation episodes")->check(CLI::PositiveNumber);
    eval->add_option("--out", report_path, "report file (default: eval_seed<N>.json beside the checkpoint)");
    eval->add_option("--replays", replays, "write replay logs for the first N episodes");

    // replay
    auto* replay = app.add_subcommand("replay", "narrate a replay log");
    std::string log_path;
    replay->add_option("log", log_path, "replay log (.jsonl)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            harness::TrainOptions opts;
            opts.scenario = harness::resolve_scenario(train_scn.scenario, train_scn.overrides());
            opts.spec = harness::LearnerSpec::defaults(algo);
            opts.spec.sau = sau == "on";
            opts.spec.set_seed(train_seed);
            opts.spec.set_episodes_per_epoch(episodes);
            opts.epochs = epochs;
            opts.eval_interval = eval_interval;
            opts.eval_episodes = eval_episodes;
            opts.checkpoint_interval = checkpoint_interval;
            opts.out_dir = out.empty() ? harness::default_run_dir(algo, opts.scenario->name, train_seed)
                                       : std::filesystem::path(out);
            const auto summary = harness::run_training(opts, &std::cout);
            std::cout << "run directory " << summary.out_dir.string() << "\n";
            return 0;
        }
        if (*eval) {
            harness::EvalOptions opts;
            opts.checkpoint = checkpoint;
            opts.scenario = eval_scn.scenario;
            opts.overrides = eval_scn.overrides();
            opts.episodes = eval_count;
            opts.seed = eval_seed;
            opts.replay_episodes = replays;
            const std::filesystem::path dir = opts.checkpoint.parent_path();
            const harness::EvalReport report = harness::run_eval(opts);
            const std::filesystem::path path =
                report_path.empty() ? dir / ("eval_seed" + std::to_string(eval_seed) + ".json") : std::filesystem::path(report_path);
            std::ofstream f(path, std::ios::binary);
            f << report.to_text();
            f.close();
            if (!f) throw std::runtime_error("cannot write " + path.string());
            std::cout << "mean " << report.mean << " std " << report.stddev << " over " << report.returns.size()
                      << " episodes, message rate " << report.message_rate << "\nreport " << path.string() << "\n";
            return 0;
        }
        if (*replay) {
            std::ifstream in(log_path, std::ios::binary);
            const ReplayLog log = parse_replay(in);
            const Narrative n = narrate(log);
            std::cout << n.text;
            return n.matches_logged_return ? 0 : 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
