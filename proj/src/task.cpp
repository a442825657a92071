#include "cyberdial/task.hpp"

#include <algorithm>

namespace cyberdial {

TaskLayout cyber_layout(const ScenarioConfig& config)
{
    const Topology topo(config);
    TaskLayout layout;
    layout.name = config.name;
    layout.agents = config.agent_count;
    layout.horizon = config.horizon;
    layout.message_bits = config.message_bits;
    int max_hosts = 0, max_block_bits = 0;
    for (int a = 0; a < config.agent_count; ++a) {
        max_hosts = std::max(max_hosts, static_cast<int>(topo.subnet_hosts[a].size()));
        max_block_bits = std::max(max_block_bits, topo.block_bits(a));
        layout.agent_action_count.push_back(topo.action_count(a));
        layout.agent_observation_bits.push_back(topo.observation_length(a));
    }
    // host_1 .. host_N tables with 16 rows (4-bit groups), then the block table.
    layout.slot_cardinality.assign(max_hosts, 16);
    layout.slot_cardinality.push_back(1 << max_block_bits);
    layout.action_count = *std::max_element(layout.agent_action_count.begin(), layout.agent_action_count.end());
    layout.observation_bits =
        *std::max_element(layout.agent_observation_bits.begin(), layout.agent_observation_bits.end());
    return layout;
}

CyberTask::CyberTask(std::shared_ptr<const ScenarioConfig> config, bool sau_enabled)
    : config_(std::move(config)), layout_(cyber_layout(*config_)), sau_(sau_enabled)
{
    reset(0);
}

void CyberTask::reset(std::uint64_t seed)
{
    reset_ = cyberdial::reset(config_, seed);
    world_ = reset_.world;
    observations_ = reset_.observations;
    last_ = {};
}

void CyberTask::slots(AgentId agent, std::span<int> out) const
{
    const Observation& obs = observations_[agent];
    const int host_slots = static_cast<int>(layout_.slot_cardinality.size()) - 1;
    for (int i = 0; i < host_slots; ++i) out[i] = i < obs.host_count ? obs.host_group(i) : -1;
    out[host_slots] = obs.block_index();
}

void CyberTask::bits(AgentId agent, std::span<double> out) const
{
    const Observation& obs = observations_[agent];
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < obs.bits.size(); ++i) out[i] = obs.bits[i];
}

void CyberTask::mask(AgentId agent, bool incoming_message_nonzero, std::span<std::uint8_t> out) const
{
    const ActionMask m = action_mask(*world_.topology, config_->block_enabled, agent, observations_[agent],
                                     incoming_message_nonzero, sau_);
    std::fill(out.begin(), out.end(), std::uint8_t{0});
    std::copy(m.allowed.begin(), m.allowed.end(), out.begin());
}

void CyberTask::message_sources(AgentId agent, std::vector<int>& out) const
{
    out.clear();
    for (int a = 0; a < layout_.agents; ++a)
        if (a != agent) out.push_back(a);
}

double CyberTask::step(std::span<const int> actions, std::span<const std::uint8_t> incoming_nonzero,
                       std::span<const std::uint8_t>)
{
    MaskContext context;
    context.sau_enabled = sau_;
    context.message_nonzero.assign(incoming_nonzero.begin(), incoming_nonzero.end());
    last_ = cyberdial::step(world_, actions, context);
    observations_ = last_.observations;
    return last_.reward;
}

}  // namespace cyberdial
