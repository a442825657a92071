#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cyberdial/rng.hpp"
#include "cyberdial/task.hpp"

namespace cyberdial::riddle {

enum SwitchAction : int { kNone = 0, kTell = 1 };

// One prisoner is in the interrogation room per day. Only that prisoner sees
// the switch (as its incoming message) and may Tell; its outgoing message bit
// becomes the new switch state.
struct SwitchState {
    int n_agents = 3;
    int day = 0;
    std::vector<int> schedule;  // schedule[d] = agent in the room on day d
    bool switch_on = false;
    std::vector<bool> has_been;
    int horizon = 6;
    bool done = false;

    int in_room() const { return schedule[day]; }
    bool operator==(const SwitchState&) const = default;
};

struct SwitchObservation {
    bool in_room = false;
    bool switch_bit = false;  // only ever set for the agent in the room
};

struct SwitchStepResult {
    std::vector<SwitchObservation> observations;
    double reward = 0.0;
    bool done = false;
};

class SwitchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

constexpr int switch_horizon(int n_agents) { return 4 * n_agents - 6; }

SwitchState switch_reset(int n_agents, Rng& rng);
SwitchState switch_reset(int n_agents, std::vector<int> schedule);
std::vector<SwitchObservation> switch_observe(const SwitchState& state);

// Tell by everyone-visited -> +1, Tell otherwise -> -1, horizon without a
// Tell -> 0. A Tell from an agent outside the room throws SwitchError.
SwitchStepResult switch_step(SwitchState& state, std::span<const int> actions, std::span<const std::uint8_t> messages);

class SwitchTask : public Task {
public:
    explicit SwitchTask(int n_agents = 3);

    const TaskLayout& layout() const override { return layout_; }
    void reset(std::uint64_t seed) override;
    void reset_with_schedule(std::vector<int> schedule);
    bool done() const override { return state_.done; }
    int timestep() const override { return state_.day; }
    void slots(AgentId agent, std::span<int> out) const override;
    void bits(AgentId agent, std::span<double> out) const override;
    void mask(AgentId agent, bool incoming_message_nonzero, std::span<std::uint8_t> out) const override;
    void message_sources(AgentId agent, std::vector<int>& out) const override;
    double step(std::span<const int> actions, std::span<const std::uint8_t> incoming_nonzero,
                std::span<const std::uint8_t> outgoing_bits) override;

    const SwitchState& state() const { return state_; }

private:
    TaskLayout layout_;
    SwitchState state_;
};

}  // namespace cyberdial::riddle
