#include "cyberdial/switch_riddle.hpp"

#include <algorithm>
#include <string>

namespace cyberdial::riddle {

SwitchState switch_reset(int n_agents, std::vector<int> schedule)
{
    if (n_agents < 2) throw SwitchError("switch riddle needs at least 2 agents");
    SwitchState s;
    s.n_agents = n_agents;
    s.horizon = switch_horizon(n_agents);
    if (static_cast<int>(schedule.size()) != s.horizon) throw SwitchError("schedule length must equal the horizon");
    for (int a : schedule)
        if (a < 0 || a >= n_agents) throw SwitchError("schedule names an unknown agent");
    s.schedule = std::move(schedule);
    s.has_been.assign(n_agents, false);
    s.has_been[s.schedule[0]] = true;
    return s;
}

SwitchState switch_reset(int n_agents, Rng& rng)
{
    std::vector<int> schedule(switch_horizon(n_agents));
    for (int& a : schedule) a = static_cast<int>(rng.index(static_cast<std::size_t>(n_agents)));
    return switch_reset(n_agents, std::move(schedule));
}

std::vector<SwitchObservation> switch_observe(const SwitchState& state)
{
    std::vector<SwitchObservation> obs(state.n_agents);
    if (state.done) return obs;
    obs[state.in_room()].in_room = true;
    obs[state.in_room()].switch_bit = state.switch_on;
    return obs;
}

SwitchStepResult switch_step(SwitchState& state, std::span<const int> actions, std::span<const std::uint8_t> messages)
{
    if (state.done) throw SwitchError("episode already finished");
    if (static_cast<int>(actions.size()) != state.n_agents) throw SwitchError("one action per agent required");
    const int room = state.in_room();
    for (int a = 0; a < state.n_agents; ++a)
        if (actions[a] == kTell && a != room) throw SwitchError("agent " + std::to_string(a) + " told from outside the room");

    SwitchStepResult result;
    if (actions[room] == kTell) {
        const bool all = std::all_of(state.has_been.begin(), state.has_been.end(), [](bool b) { return b; });
        result.reward = all ? 1.0 : -1.0;
        state.done = true;
    } else {
        if (!messages.empty()) state.switch_on = messages[room] != 0;
        ++state.day;
        if (state.day >= state.horizon) {
            state.done = true;
        } else {
            state.has_been[state.in_room()] = true;
        }
    }
    result.done = state.done;
    result.observations = switch_observe(state);
    return result;
}

SwitchTask::SwitchTask(int n_agents)
{
    layout_.name = "switch" + std::to_string(n_agents);
    layout_.agents = n_agents;
    layout_.horizon = switch_horizon(n_agents);
    layout_.message_bits = 1;
    layout_.slot_cardinality = {2};
    layout_.action_count = 2;
    layout_.agent_action_count.assign(n_agents, 2);
    layout_.observation_bits = 1;
    layout_.agent_observation_bits.assign(n_agents, 1);
    Rng rng(0);
    state_ = switch_reset(n_agents, rng);
}

void SwitchTask::reset(std::uint64_t seed)
{
    Rng rng(seed);
    state_ = switch_reset(layout_.agents, rng);
}

void SwitchTask::reset_with_schedule(std::vector<int> schedule)
{
    state_ = switch_reset(layout_.agents, std::move(schedule));
}

void SwitchTask::slots(AgentId agent, std::span<int> out) const
{
    out[0] = (!state_.done && state_.in_room() == agent) ? 1 : 0;
}

void SwitchTask::bits(AgentId agent, std::span<double> out) const
{
    out[0] = (!state_.done && state_.in_room() == agent) ? 1.0 : 0.0;
}

void SwitchTask::mask(AgentId agent, bool, std::span<std::uint8_t> out) const
{
    out[kNone] = 1;
    out[kTell] = (!state_.done && state_.in_room() == agent) ? 1 : 0;
}

void SwitchTask::message_sources(AgentId agent, std::vector<int>& out) const
{
    out.clear();
    if (!state_.done && state_.day > 0 && state_.in_room() == agent) out.push_back(state_.schedule[state_.day - 1]);
}

double SwitchTask::step(std::span<const int> actions, std::span<const std::uint8_t>,
                        std::span<const std::uint8_t> outgoing_bits)
{
    return switch_step(state_, actions, outgoing_bits).reward;
}

}  // namespace cyberdial::riddle
