#include "cyberdial/harness/eval_report.hpp"

#include <fstream>
#include <map>
#include <memory>

#include "cyberdial/replay_log.hpp"

namespace cyberdial::harness {

using nlohmann::json;

json EvalReport::to_json() const
{
    return {{"scenario", scenario},
            {"algorithm", algorithm},
            {"seed", seed},
            {"episodes", returns.size()},
            {"mean_return", mean},
            {"std_return", stddev},
            {"penalties_per_episode",
             {{"capture", penalties.capture},
              {"restore", penalties.restore},
              {"wasted", penalties.wasted},
              {"block", penalties.block}}},
            {"message_rate", message_rate},
            {"returns", returns}};
}

EvalReport EvalReport::from_json(const json& j)
{
    EvalReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mean = j.at("mean_return").get<double>();
    r.stddev = j.at("std_return").get<double>();
    const json& p = j.at("penalties_per_episode");
    r.penalties.capture = p.at("capture").get<double>();
    r.penalties.restore = p.at("restore").get<double>();
    r.penalties.wasted = p.at("wasted").get<double>();
    r.penalties.block = p.at("block").get<double>();
    r.message_rate = j.at("message_rate").get<double>();
    r.returns = j.at("returns").get<std::vector<double>>();
    return r;
}

std::string EvalReport::to_text() const { return to_json().dump(2) + "\n"; }

EvalReport evaluate_learner(Learner& learner, const std::string& scenario, const EvalRequest& request)
{
    RewardBreakdown sums;
    std::map<int, std::unique_ptr<ReplayRecorder>> recorders;
    StepObserver observer = [&](const StepView& v) {
        const auto* cyber = dynamic_cast<const CyberTask*>(v.task);
        if (!cyber) return;
        const RewardBreakdown& b = cyber->last_outcome().breakdown;
        sums.capture += b.capture;
        sums.restore += b.restore;
        sums.wasted += b.wasted;
        sums.block += b.block;
        if (static_cast<std::size_t>(v.lane) < request.replay_episodes) {
            auto& rec = recorders[v.lane];
            if (!rec)
                rec = std::make_unique<ReplayRecorder>(
                    *cyber, ReplayHeader{scenario, learner.algorithm(), request.seed, static_cast<std::uint64_t>(v.lane)});
            rec->record(v);
        }
    };
    const EvalResult result = learner.evaluate(request.episodes, request.seed, &observer, request.reset);

    EvalReport report;
    report.scenario = scenario;
    report.algorithm = learner.algorithm();
    report.seed = request.seed;
    report.returns = result.returns;
    report.mean = result.mean();
    report.stddev = result.stddev();
    const double n = result.returns.empty() ? 1.0 : static_cast<double>(result.returns.size());
    report.penalties = {sums.capture / n, sums.restore / n, sums.wasted / n, sums.block / n};
    report.message_rate = result.message_rate();

    if (!recorders.empty()) {
        std::filesystem::create_directories(request.replay_dir);
        for (const auto& [lane, rec] : recorders) {
            const auto path = request.replay_dir / ("episode_" + std::to_string(lane) + ".jsonl");
            std::ofstream out(path, std::ios::binary);
            out << rec->finish();
            if (!out) throw std::runtime_error("cannot write replay log " + path.string());
        }
    }
    return report;
}

}  // namespace cyberdial::harness
