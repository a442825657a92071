#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cyberdial/nn/checkpoint.hpp"
#include "cyberdial/nn/param_store.hpp"
#include "cyberdial/task.hpp"

namespace cyberdial {

// What an observer sees right after one lane's environment step.
struct StepView {
    int lane = 0;
    int timestep = 0;  // timestep the actions were taken at
    const Task* task = nullptr;
    std::span<const int> actions;
    std::span<const std::uint8_t> incoming_nonzero;
    std::span<const std::uint8_t> message_bits;  // agents x message_bits sent this step
    double reward = 0.0;
};
using StepObserver = std::function<void(const StepView&)>;

// Resets `task` for evaluation episode `episode`. The default seeds it with
// derive_seed(seed, episode, "eval").
using EpisodeReset = std::function<void(Task& task, std::size_t episode)>;

struct EvalResult {
    std::vector<double> returns;
    std::uint64_t agent_steps = 0;
    std::uint64_t message_steps = 0;  // agent steps with a nonzero message

    double mean() const;
    double stddev() const;  // population
    double message_rate() const { return agent_steps ? static_cast<double>(message_steps) / agent_steps : 0.0; }
};

using TaskFactory = std::function<std::unique_ptr<Task>()>;

class Learner {
public:
    virtual ~Learner() = default;

    virtual std::string algorithm() const = 0;
    virtual void train_epoch() = 0;
    // Greedy, exec-mode evaluation; never mutates parameters.
    virtual EvalResult evaluate(std::size_t episodes, std::uint64_t seed, const StepObserver* observer = nullptr,
                                const EpisodeReset& reset = {}) = 0;

    virtual int epochs_done() const = 0;
    virtual std::uint64_t episodes_seen() const = 0;
    virtual std::uint64_t timesteps_seen() const = 0;
    virtual double epsilon() const = 0;

    virtual nn::ParamStore& params() = 0;
    virtual nn::CheckpointHeader checkpoint_header() const = 0;
    // Call after loading parameters from a checkpoint.
    virtual void sync_target() = 0;
};

}  // namespace cyberdial
