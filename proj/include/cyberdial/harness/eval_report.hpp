#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyberdial/env.hpp"
#include "cyberdial/learner.hpp"

namespace cyberdial::harness {

struct EvalReport {
    std::string scenario;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::vector<double> returns;
    double mean = 0.0;
    double stddev = 0.0;  // population
    // Mean per episode of each penalty category.
    RewardBreakdown penalties;
    double message_rate = 0.0;  // fraction of agent steps with a nonzero exec message

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    std::string to_text() const;  // pretty JSON, newline terminated
};

struct EvalRequest {
    std::size_t episodes = 128;
    std::uint64_t seed = 0;
    // The first `replay_episodes` episodes are written as replay logs.
    std::size_t replay_episodes = 0;
    std::filesystem::path replay_dir;
    EpisodeReset reset;
};

// Greedy exec-mode evaluation with penalty bookkeeping for cyber tasks.
EvalReport evaluate_learner(Learner& learner, const std::string& scenario, const EvalRequest& request);

}  // namespace cyberdial::harness
