#include "cyberdial/harness/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cyberdial::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

json schedule_json(const dial::EpsilonSchedule& s)
{
    return {{"start", s.start}, {"end", s.end}, {"anneal_steps", s.anneal_steps}};
}

dial::EpsilonSchedule schedule_from(const json& j)
{
    return {j.at("start").get<double>(), j.at("end").get<double>(), j.at("anneal_steps").get<double>()};
}

}  // namespace

std::shared_ptr<const ScenarioConfig> resolve_scenario(const std::string& name_or_path, const ScenarioOverrides& overrides)
{
    ScenarioConfig config = is_builtin_scenario(name_or_path) ? builtin_scenario(name_or_path)
                                                              : load_scenario(read_file(name_or_path));
    if (overrides.detection) {
        config.detection.exploit_detection_rate = *overrides.detection;
        config.detection.scan_detection_rate = *overrides.detection;
    }
    if (overrides.message_bits) config.message_bits = *overrides.message_bits;
    if (overrides.block) config.block_enabled = *overrides.block;
    validate(config);
    return std::make_shared<const ScenarioConfig>(std::move(config));
}

LearnerSpec LearnerSpec::defaults(const std::string& algorithm)
{
    if (algorithm != "dial" && algorithm != "qmix") throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
    LearnerSpec spec;
    spec.algorithm = algorithm;
    return spec;
}

void LearnerSpec::set_seed(std::uint64_t seed)
{
    dial.seed = seed;
    qmix.seed = seed;
}

void LearnerSpec::set_episodes_per_epoch(int episodes)
{
    dial.batch_episodes = episodes;
    qmix.batch_episodes = episodes;
}

json LearnerSpec::to_json() const
{
    json j = {{"algorithm", algorithm}, {"sau", sau}};
    if (algorithm == "dial") {
        j["dial"] = {{"batch_episodes", dial.batch_episodes},
                     {"rollout_lanes", dial.rollout_lanes},
                     {"lr", dial.lr},
                     {"gamma", dial.gamma},
                     {"epsilon", schedule_json(dial.epsilon)},
                     {"hidden", dial.hidden},
                     {"target_update_epochs", dial.target_update_epochs},
                     {"dru_sigma", dial.dru_sigma},
                     {"epochs", dial.epochs},
                     {"grad_clip", dial.grad_clip},
                     {"seed", dial.seed}};
    } else {
        j["qmix"] = {{"batch_episodes", qmix.batch_episodes},
                     {"rollout_lanes", qmix.rollout_lanes},
                     {"sample_episodes", qmix.sample_episodes},
                     {"buffer_capacity", qmix.buffer_capacity},
                     {"lr", qmix.lr},
                     {"gamma", qmix.gamma},
                     {"epsilon", schedule_json(qmix.epsilon)},
                     {"hidden", qmix.hidden},
                     {"mixer_hidden", qmix.mixer_hidden},
                     {"target_update_epochs", qmix.target_update_epochs},
                     {"epochs", qmix.epochs},
                     {"grad_clip", qmix.grad_clip},
                     {"seed", qmix.seed}};
    }
    return j;
}

LearnerSpec LearnerSpec::from_json(const json& j)
{
    LearnerSpec spec = defaults(j.at("algorithm").get<std::string>());
    spec.sau = j.at("sau").get<bool>();
    if (spec.algorithm == "dial") {
        const json& d = j.at("dial");
        spec.dial.batch_episodes = d.at("batch_episodes").get<int>();
        spec.dial.rollout_lanes = d.at("rollout_lanes").get<int>();
        spec.dial.lr = d.at("lr").get<double>();
        spec.dial.gamma = d.at("gamma").get<double>();
        spec.dial.epsilon = schedule_from(d.at("epsilon"));
        spec.dial.hidden = d.at("hidden").get<int>();
        spec.dial.target_update_epochs = d.at("target_update_epochs").get<int>();
        spec.dial.dru_sigma = d.at("dru_sigma").get<double>();
        spec.dial.epochs = d.at("epochs").get<int>();
        spec.dial.grad_clip = d.at("grad_clip").get<double>();
        spec.dial.seed = d.at("seed").get<std::uint64_t>();
    } else {
        const json& q = j.at("qmix");
        spec.qmix.batch_episodes = q.at("batch_episodes").get<int>();
        spec.qmix.rollout_lanes = q.at("rollout_lanes").get<int>();
        spec.qmix.sample_episodes = q.at("sample_episodes").get<int>();
        spec.qmix.buffer_capacity = q.at("buffer_capacity").get<int>();
        spec.qmix.lr = q.at("lr").get<double>();
        spec.qmix.gamma = q.at("gamma").get<double>();
        spec.qmix.epsilon = schedule_from(q.at("epsilon"));
        spec.qmix.hidden = q.at("hidden").get<int>();
        spec.qmix.mixer_hidden = q.at("mixer_hidden").get<int>();
        spec.qmix.target_update_epochs = q.at("target_update_epochs").get<int>();
        spec.qmix.epochs = q.at("epochs").get<int>();
        spec.qmix.grad_clip = q.at("grad_clip").get<double>();
        spec.qmix.seed = q.at("seed").get<std::uint64_t>();
    }
    return spec;
}

TaskFactory cyber_task_factory(std::shared_ptr<const ScenarioConfig> scenario, bool sau)
{
    return [scenario, sau]() -> std::unique_ptr<Task> { return std::make_unique<CyberTask>(scenario, sau); };
}

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, std::shared_ptr<const ScenarioConfig> scenario)
{
    // QMix has no message channel, so SAU's message clause never fires for it.
    if (spec.algorithm == "dial")
        return std::make_unique<dial::DialTrainer>(spec.dial, cyber_task_factory(scenario, spec.sau));
    if (spec.algorithm == "qmix")
        return std::make_unique<qmix::QmixTrainer>(spec.qmix, cyber_task_factory(scenario, spec.sau));
    throw std::invalid_argument("unknown algorithm '" + spec.algorithm + "'");
}

std::string curve_header()
{
    return "epoch,episodes_seen,timesteps_seen,epsilon,eval_mean_return,eval_std_return,wall_seconds";
}

std::string format_curve_row(const CurveRow& row, bool with_wall)
{
    std::ostringstream os;
    os << row.epoch << ',' << row.episodes_seen << ',' << row.timesteps_seen << ',' << format_double(row.epsilon) << ','
       << format_double(row.eval_mean_return) << ',' << format_double(row.eval_std_return);
    if (with_wall) os << ',' << std::fixed << std::setprecision(3) << row.wall_seconds;
    return os.str();
}

fs::path default_run_dir(const std::string& algorithm, const std::string& scenario, std::uint64_t seed)
{
    const char* root = std::getenv(kOutRootEnv);
    const fs::path base = (root && *root) ? fs::path(root) : fs::path("runs");
    return base / (algorithm + "_" + scenario + "_seed" + std::to_string(seed));
}

TrainSummary run_training(const TrainOptions& options, std::ostream* progress)
{
    if (!options.scenario) throw std::invalid_argument("run_training: no scenario");
    if (options.epochs <= 0 || options.eval_interval <= 0 || options.eval_episodes <= 0 || options.checkpoint_interval < 0)
        throw std::invalid_argument("run_training: epochs, eval interval and eval episodes must be positive");
    LearnerSpec spec = options.spec;
    spec.dial.epochs = options.epochs;
    spec.qmix.epochs = options.epochs;
    const std::uint64_t seed = spec.algorithm == "dial" ? spec.dial.seed : spec.qmix.seed;

    TrainSummary summary;
    summary.out_dir = options.out_dir;
    fs::create_directories(options.out_dir);
    if (options.checkpoint_interval > 0) fs::create_directories(options.out_dir / "checkpoints");

    const json manifest = {{"format", "cyberdial-run"},
                           {"version", 1},
                           {"code_version", kCodeVersion},
                           {"scenario", options.scenario->name},
                           {"algorithm", spec.algorithm},
                           {"seed", seed},
                           {"epochs", options.epochs},
                           {"eval_interval", options.eval_interval},
                           {"eval_episodes", options.eval_episodes},
                           {"checkpoint_interval", options.checkpoint_interval},
                           {"hyperparameters", spec.to_json()},
                           {"started_at", utc_now()},
                           {"outputs",
                            {{"scenario", "scenario.json"},
                             {"curve", "curve.csv"},
                             {"checkpoints", "checkpoints"},
                             {"final_checkpoint", "final.ckpt"},
                             {"status", "status.json"}}}};
    write_file(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
    write_file(options.out_dir / "scenario.json", serialize_scenario(*options.scenario) + "\n");

    std::unique_ptr<Learner> learner = make_learner(spec, options.scenario);
    const std::uint64_t eval_seed = derive_seed(seed, 0, "curve.eval");

    std::ofstream curve(options.out_dir / "curve.csv", std::ios::binary);
    if (!curve) throw std::runtime_error("cannot write curve.csv");
    curve << curve_header() << "\n";
    const auto start = std::chrono::steady_clock::now();
    for (int e = 1; e <= options.epochs; ++e) {
        learner->train_epoch();
        CurveRow row;
        row.epoch = e;
        row.episodes_seen = learner->episodes_seen();
        row.timesteps_seen = learner->timesteps_seen();
        row.epsilon = learner->epsilon();
        row.eval_mean_return = std::nan("");
        row.eval_std_return = std::nan("");
        if (e % options.eval_interval == 0 || e == options.epochs) {
            const EvalResult r = learner->evaluate(static_cast<std::size_t>(options.eval_episodes), eval_seed);
            row.eval_mean_return = r.mean();
            row.eval_std_return = r.stddev();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        curve << format_curve_row(row) << "\n" << std::flush;
        summary.curve.push_back(row);
        if (progress && !std::isnan(row.eval_mean_return))
            *progress << "epoch " << e << " eval " << format_double(row.eval_mean_return) << " +- "
                      << format_double(row.eval_std_return) << " eps " << row.epsilon << "\n";
        if (options.checkpoint_interval > 0 && e % options.checkpoint_interval == 0 && e != options.epochs)
            nn::save_checkpoint(options.out_dir / "checkpoints" / ("epoch_" + std::to_string(e) + ".ckpt"),
                                learner->checkpoint_header(), learner->params());
    }
    if (!curve) throw std::runtime_error("cannot write curve.csv");
    summary.final_checkpoint = options.out_dir / "final.ckpt";
    nn::save_checkpoint(summary.final_checkpoint, learner->checkpoint_header(), learner->params());
    write_file(options.out_dir / "status.json",
               json{{"finished_at", utc_now()}, {"epochs_completed", options.epochs}}.dump(2) + "\n");
    return summary;
}

LoadedRun load_run(const EvalOptions& options)
{
    const nn::CheckpointHeader header = nn::read_checkpoint_header(options.checkpoint);
    // Periodic checkpoints live one level below the run directory.
    fs::path run_dir = options.checkpoint.parent_path();
    if (!fs::exists(run_dir / "manifest.json") && fs::exists(run_dir.parent_path() / "manifest.json"))
        run_dir = run_dir.parent_path();

    LoadedRun run;
    std::optional<json> manifest;
    if (fs::exists(run_dir / "manifest.json")) manifest = json::parse(read_file(run_dir / "manifest.json"));

    if (!options.scenario.empty()) {
        run.scenario = resolve_scenario(options.scenario, options.overrides);
    } else if (manifest) {
        run.scenario = resolve_scenario((run_dir / manifest->at("outputs").at("scenario").get<std::string>()).string(),
                                        options.overrides);
    } else {
        throw std::invalid_argument("no scenario given and no manifest.json next to " + options.checkpoint.string());
    }

    if (manifest) {
        run.spec = LearnerSpec::from_json(manifest->at("hyperparameters"));
    } else {
        run.spec = LearnerSpec::defaults(header.algorithm);
        run.spec.dial.hidden = header.hidden_dim;
        run.spec.qmix.hidden = header.hidden_dim;
        if (header.mixer_dim > 0) run.spec.qmix.mixer_hidden = header.mixer_dim;
    }
    if (run.spec.algorithm != header.algorithm)
        throw nn::CheckpointError("checkpoint algorithm '" + header.algorithm + "' does not match the run manifest");
    if (header.algorithm == "dial" && header.message_bits != run.scenario->message_bits)
        throw nn::CheckpointError("checkpoint has " + std::to_string(header.message_bits) +
                                  " message bits, scenario has " + std::to_string(run.scenario->message_bits));
    run.learner = make_learner(run.spec, run.scenario);
    nn::load_checkpoint(options.checkpoint, run.learner->params());
    run.learner->sync_target();
    return run;
}

EvalReport run_eval(const EvalOptions& options)
{
    LoadedRun run = load_run(options);
    EvalRequest request;
    request.episodes = options.episodes;
    request.seed = options.seed;
    request.replay_episodes = options.replay_episodes;
    request.replay_dir = options.replay_dir.empty()
                             ? options.checkpoint.parent_path() / ("replays_seed" + std::to_string(options.seed))
                             : options.replay_dir;
    return evaluate_learner(*run.learner, run.scenario->name, request);
}

}  // namespace cyberdial::harness
