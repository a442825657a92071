#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cyberdial/env.hpp"

namespace cyberdial {

// Shapes shared by every episode of a task. Per-agent quantities are padded
// to the maximum across agents so one network serves all agents.
struct TaskLayout {
    std::string name;
    int agents = 0;
    int horizon = 0;
    int message_bits = 1;
    // Categorical observation slots fed to per-slot lookup tables.
    std::vector<int> slot_cardinality;
    int action_count = 0;  // max over agents
    std::vector<int> agent_action_count;
    int observation_bits = 0;  // max over agents
    std::vector<int> agent_observation_bits;
};

// A cooperative multi-agent episode as seen by the learners: categorical and
// binary views of each agent's observation, masks, message routing, and a
// team reward per step.
class Task {
public:
    virtual ~Task() = default;

    virtual const TaskLayout& layout() const = 0;
    virtual void reset(std::uint64_t seed) = 0;
    virtual bool done() const = 0;
    virtual int timestep() const = 0;

    // One index per slot; -1 for slots this agent does not have.
    virtual void slots(AgentId agent, std::span<int> out) const = 0;
    // Observation bits, zero padded to layout().observation_bits.
    virtual void bits(AgentId agent, std::span<double> out) const = 0;
    // Padded to layout().action_count; padding is never allowed.
    virtual void mask(AgentId agent, bool incoming_message_nonzero, std::span<std::uint8_t> out) const = 0;
    // Agents whose previous-step messages reach `agent` now.
    virtual void message_sources(AgentId agent, std::vector<int>& out) const = 0;

    // actions: one per agent. incoming_nonzero: the message flags the masks
    // were computed with. outgoing_bits: discretized messages (agents x bits).
    virtual double step(std::span<const int> actions, std::span<const std::uint8_t> incoming_nonzero,
                        std::span<const std::uint8_t> outgoing_bits) = 0;
};

class CyberTask : public Task {
public:
    CyberTask(std::shared_ptr<const ScenarioConfig> config, bool sau_enabled);

    const TaskLayout& layout() const override { return layout_; }
    void reset(std::uint64_t seed) override;
    bool done() const override { return world_.done(); }
    int timestep() const override { return world_.timestep; }
    void slots(AgentId agent, std::span<int> out) const override;
    void bits(AgentId agent, std::span<double> out) const override;
    void mask(AgentId agent, bool incoming_message_nonzero, std::span<std::uint8_t> out) const override;
    void message_sources(AgentId agent, std::vector<int>& out) const override;
    double step(std::span<const int> actions, std::span<const std::uint8_t> incoming_nonzero,
                std::span<const std::uint8_t> outgoing_bits) override;

    const WorldState& world() const { return world_; }
    const std::vector<Observation>& observations() const { return observations_; }
    const StepOutcome& last_outcome() const { return last_; }
    const ResetResult& last_reset() const { return reset_; }
    bool sau_enabled() const { return sau_; }

private:
    std::shared_ptr<const ScenarioConfig> config_;
    TaskLayout layout_;
    bool sau_;
    ResetResult reset_;
    WorldState world_;
    std::vector<Observation> observations_;
    StepOutcome last_;
};

TaskLayout cyber_layout(const ScenarioConfig& config);

}  // namespace cyberdial
