#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyberdial/learner.hpp"
#include "cyberdial/task.hpp"

namespace cyberdial {

// JSON lines: one header object, one object per step, one end object.
constexpr int kReplayVersion = 1;
constexpr const char* kReplayFormat = "cyberdial-replay";

class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReplayHeader {
    std::string scenario;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::uint64_t episode = 0;
};

// Records one cyber episode from evaluation observer callbacks.
class ReplayRecorder {
public:
    ReplayRecorder(const CyberTask& task, ReplayHeader header);

    void record(const StepView& view);
    // Serialized log including the end record.
    std::string finish() const;
    double episode_return() const { return episode_return_; }
    std::size_t steps() const { return steps_.size(); }

private:
    nlohmann::json header_;
    std::vector<nlohmann::json> steps_;
    double episode_return_ = 0.0;
};

struct ReplayLog {
    nlohmann::json header;  // null for an empty file
    std::vector<nlohmann::json> steps;
    std::optional<double> episode_return;
};

ReplayLog parse_replay(std::istream& in);

struct Narrative {
    std::string text;
    std::size_t steps = 0;
    double total = 0.0;  // step totals summed in log order
    bool matches_logged_return = true;
};

Narrative narrate(const ReplayLog& log);

}  // namespace cyberdial
