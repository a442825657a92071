#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyberdial/dial/trainer.hpp"
#include "cyberdial/harness/eval_report.hpp"
#include "cyberdial/qmix/qmix.hpp"

namespace cyberdial::harness {

constexpr const char* kCodeVersion = "1.0.0";
constexpr const char* kOutRootEnv = "CYBERDIAL_OUT_ROOT";

struct ScenarioOverrides {
    std::optional<double> detection;  // sets both scan and exploit detection rates
    std::optional<int> message_bits;
    std::optional<bool> block;
};

// Builtin name or path to a scenario JSON file, then overrides.
std::shared_ptr<const ScenarioConfig> resolve_scenario(const std::string& name_or_path,
                                                       const ScenarioOverrides& overrides = {});

struct LearnerSpec {
    std::string algorithm = "dial";  // "dial" or "qmix"
    bool sau = true;
    dial::DialConfig dial;
    qmix::QmixConfig qmix;

    // Defaults for the algorithm; QMix pulls its own column (lr 0.001, hidden 64, target 200).
    static LearnerSpec defaults(const std::string& algorithm);
    void set_seed(std::uint64_t seed);
    void set_episodes_per_epoch(int episodes);
    nlohmann::json to_json() const;
    static LearnerSpec from_json(const nlohmann::json& j);
};

TaskFactory cyber_task_factory(std::shared_ptr<const ScenarioConfig> scenario, bool sau);
std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, std::shared_ptr<const ScenarioConfig> scenario);

struct CurveRow {
    int epoch = 0;
    std::uint64_t episodes_seen = 0;
    std::uint64_t timesteps_seen = 0;
    double epsilon = 0.0;
    double eval_mean_return = 0.0;  // NaN on epochs without evaluation
    double eval_std_return = 0.0;
    double wall_seconds = 0.0;
};

std::string curve_header();
// Comma separated; `with_wall` false drops the wall clock column.
std::string format_curve_row(const CurveRow& row, bool with_wall = true);

struct TrainOptions {
    LearnerSpec spec;
    std::shared_ptr<const ScenarioConfig> scenario;
    std::filesystem::path out_dir;
    int epochs = 5000;
    int eval_interval = 1;    // epochs between curve evaluations
    int eval_episodes = 128;
    int checkpoint_interval = 0;  // 0: final checkpoint only
};

struct TrainSummary {
    std::filesystem::path out_dir;
    std::vector<CurveRow> curve;
    std::filesystem::path final_checkpoint;
};

// Output directory: explicit --out, else $CYBERDIAL_OUT_ROOT (or "runs")
// joined with "<algo>_<scenario>_seed<seed>".
std::filesystem::path default_run_dir(const std::string& algorithm, const std::string& scenario, std::uint64_t seed);

// Writes manifest.json and scenario.json first, then curve.csv row by row,
// periodic checkpoints under checkpoints/, final.ckpt and status.json.
TrainSummary run_training(const TrainOptions& options, std::ostream* progress);

struct EvalOptions {
    std::filesystem::path checkpoint;
    // Empty: the scenario stored next to the checkpoint by run_training.
    std::string scenario;
    ScenarioOverrides overrides;
    std::size_t episodes = 128;
    std::uint64_t seed = 0;
    std::size_t replay_episodes = 0;
    // Empty: replays_seed<seed>/ beside the checkpoint.
    std::filesystem::path replay_dir;
};

struct LoadedRun {
    std::shared_ptr<const ScenarioConfig> scenario;
    LearnerSpec spec;
    std::unique_ptr<Learner> learner;
};

// Rebuilds a learner from a checkpoint plus the run manifest beside it.
LoadedRun load_run(const EvalOptions& options);
EvalReport run_eval(const EvalOptions& options);

}  // namespace cyberdial::harness
