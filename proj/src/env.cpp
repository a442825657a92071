#include "cyberdial/env.hpp"

#include <algorithm>

namespace cyberdial {

std::string_view to_string(BlueActionKind kind)
{
    switch (kind) {
    case BlueActionKind::Sleep: return "Sleep";
    case BlueActionKind::Remove: return "Remove";
    case BlueActionKind::Restore: return "Restore";
    case BlueActionKind::Analyse: return "Analyse";
    case BlueActionKind::Block: return "Block";
    }
    return "?";
}

int Observation::host_group(int i) const
{
    const auto* g = &bits[4 * i];
    return g[0] | (g[1] << 1) | (g[2] << 2) | (g[3] << 3);
}

int Observation::block_index() const
{
    int index = 0;
    for (int j = 0; j < block_bit_count(); ++j) index |= bits[4 * host_count + j] << j;
    return index;
}

bool Observation::threat_visible() const
{
    for (int i = 0; i < 4 * host_count; ++i)
        if (bits[i]) return true;
    return false;
}

std::string Observation::to_string() const
{
    std::string out;
    for (int i = 0; i < host_count; ++i) {
        if (i) out += ' ';
        for (int b = 0; b < 4; ++b) out += bits[4 * i + b] ? '1' : '0';
    }
    out += " |";
    if (block_bit_count() > 0) out += ' ';
    for (int j = 0; j < block_bit_count(); ++j) out += bits[4 * host_count + j] ? '1' : '0';
    return out;
}

int ActionMask::count() const
{
    return static_cast<int>(std::count(allowed.begin(), allowed.end(), std::uint8_t{1}));
}

BlueAction decode_action(const Topology& topology, AgentId agent, int index)
{
    const auto& hosts = topology.subnet_hosts.at(agent);
    const int n = static_cast<int>(hosts.size());
    if (index < 0 || index >= topology.action_count(agent))
        throw std::out_of_range("action index " + std::to_string(index) + " out of range for agent " +
                                std::to_string(agent));
    if (index == 0) return {};
    const int k = index - 1;
    if (k < n) return {BlueActionKind::Remove, hosts[k], -1};
    if (k < 2 * n) return {BlueActionKind::Restore, hosts[k - n], -1};
    if (k < 3 * n) return {BlueActionKind::Analyse, hosts[k - 2 * n], -1};
    return {BlueActionKind::Block, -1, topology.incident_links[agent][k - 3 * n]};
}

int encode_action(const Topology& topology, AgentId agent, const BlueAction& action)
{
    const auto& hosts = topology.subnet_hosts.at(agent);
    const int n = static_cast<int>(hosts.size());
    auto slot = [&](int host) {
        auto it = std::find(hosts.begin(), hosts.end(), host);
        if (it == hosts.end()) throw std::out_of_range("host not in agent subnet");
        return static_cast<int>(it - hosts.begin());
    };
    switch (action.kind) {
    case BlueActionKind::Sleep: return 0;
    case BlueActionKind::Remove: return 1 + slot(action.host);
    case BlueActionKind::Restore: return 1 + n + slot(action.host);
    case BlueActionKind::Analyse: return 1 + 2 * n + slot(action.host);
    case BlueActionKind::Block: {
        const auto& links = topology.incident_links[agent];
        auto it = std::find(links.begin(), links.end(), action.link);
        if (it == links.end()) throw std::out_of_range("link not incident to agent subnet");
        return 1 + 3 * n + static_cast<int>(it - links.begin());
    }
    }
    return 0;
}

std::string describe_action(const ScenarioConfig& config, const Topology& topology, const BlueAction& action)
{
    auto host_name = [&](int h) {
        const int s = topology.host_subnet[h];
        const auto& hosts = topology.subnet_hosts[s];
        return config.subnets[s].hosts[std::find(hosts.begin(), hosts.end(), h) - hosts.begin()].id;
    };
    std::string out(to_string(action.kind));
    if (action.kind == BlueActionKind::Block) {
        const auto& [a, b] = topology.links[action.link];
        out += "(" + config.subnets[a].name + "-" + config.subnets[b].name + ")";
    } else if (action.kind != BlueActionKind::Sleep) {
        out += "(" + host_name(action.host) + ")";
    }
    return out;
}

StatusCode status_code(const TrueHostState& host)
{
    if (host.confirmed_by_analyse) {
        switch (host.foothold) {
        case Foothold::None: return StatusCode::Clear;
        case Foothold::UserShell: return StatusCode::UserConfirmed;
        case Foothold::PrivilegedShell: return StatusCode::PrivilegedConfirmed;
        }
    }
    return host.suspected ? StatusCode::Suspected : StatusCode::Clear;
}

Observation encode_observation(const WorldState& world, AgentId agent)
{
    const auto& topo = *world.topology;
    const auto& hosts = topo.subnet_hosts.at(agent);
    Observation obs;
    obs.host_count = static_cast<int>(hosts.size());
    obs.bits.reserve(topo.observation_length(agent));
    for (int h : hosts) {
        const auto& state = world.hosts[h];
        const auto code = static_cast<std::uint8_t>(status_code(state));
        obs.bits.push_back((state.alerts_this_step & kScanAlert) ? 1 : 0);
        obs.bits.push_back((state.alerts_this_step & kExploitAlert) ? 1 : 0);
        obs.bits.push_back((code >> 1) & 1);
        obs.bits.push_back(code & 1);
    }
    for (int l : topo.incident_links[agent]) obs.bits.push_back(world.blocked[l] ? 1 : 0);
    return obs;
}

ActionMask action_mask(const Topology& topology, bool block_enabled, AgentId agent, const Observation& obs,
                       bool incoming_message_nonzero, bool sau_enabled)
{
    const int n = obs.host_count;
    ActionMask mask;
    mask.allowed.assign(topology.action_count(agent), 0);
    mask.allowed[0] = 1;
    const bool analyse_open = obs.threat_visible() || (sau_enabled && incoming_message_nonzero);
    for (int i = 0; i < n; ++i) {
        const bool status_nonzero = obs.bits[4 * i + 2] || obs.bits[4 * i + 3];
        mask.allowed[1 + i] = status_nonzero;
        mask.allowed[1 + n + i] = status_nonzero;
        mask.allowed[1 + 2 * n + i] = analyse_open;
    }
    for (int j = 0; j < topology.block_bits(agent); ++j) mask.allowed[1 + 3 * n + j] = block_enabled;
    return mask;
}

ActionMask action_mask(const WorldState& world, AgentId agent, bool incoming_message_nonzero, bool sau_enabled)
{
    return action_mask(*world.topology, world.config->block_enabled, agent, encode_observation(world, agent),
                       incoming_message_nonzero, sau_enabled);
}

ResetResult reset(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed)
{
    auto topology = std::make_shared<const Topology>(*config);
    ResetResult result;
    WorldState& world = result.world;
    world.config = std::move(config);
    world.topology = topology;
    world.hosts.assign(topology->host_count, {});
    world.blocked.assign(topology->links.size(), false);
    world.timestep = 0;
    world.rng = Rng(seed);

    auto& red = world.red;
    red.known_subnets.assign(topology->subnet_hosts.size(), false);
    red.knowledge.assign(topology->host_count, Knowledge::Unknown);
    red.lost_sessions.assign(topology->host_count, false);
    const int start_subnet = topology->start_subnet;
    red.known_subnets[start_subnet] = true;
    for (int h : topology->subnet_hosts[start_subnet]) red.knowledge[h] = Knowledge::Discovered;

    if (world.config->red_enabled) {
        const auto& pool = topology->subnet_hosts[start_subnet];
        const int start = pool[world.rng.index(pool.size())];
        red.start_host = start;
        red.knowledge[start] = Knowledge::Scanned;
        world.hosts[start].foothold = Foothold::UserShell;
        world.hosts[start].scanned_by_red = true;
        AlertRecord record{{start, AlertKind::Exploit, AlertSource::Red}, false};
        if (world.rng.bernoulli(world.config->detection.exploit_detection_rate)) {
            record.raised = true;
            world.hosts[start].alerts_this_step |= kExploitAlert;
            world.hosts[start].suspected = true;
        }
        result.alerts.push_back(record);
    }

    for (int a = 0; a < world.config->agent_count; ++a) result.observations.push_back(encode_observation(world, a));
    return result;
}

ResetResult reset(const ScenarioConfig& config, std::uint64_t seed)
{
    return reset(std::make_shared<const ScenarioConfig>(config), seed);
}

std::vector<AppliedBlueAction> apply_blue_actions(WorldState& world, std::span<const BlueAction> actions)
{
    std::vector<AppliedBlueAction> applied;
    applied.reserve(actions.size());
    for (const auto& action : actions) {
        AppliedBlueAction record{action, false};
        switch (action.kind) {
        case BlueActionKind::Sleep:
            break;
        case BlueActionKind::Remove: {
            auto& host = world.hosts[action.host];
            if (host.foothold == Foothold::None) {
                record.wasted = true;
            } else if (host.foothold == Foothold::UserShell) {
                host.foothold = Foothold::None;
                host.suspected = false;
                host.confirmed_by_analyse = false;
                world.red.lost_sessions[action.host] = true;
            }
            break;
        }
        case BlueActionKind::Restore: {
            auto& host = world.hosts[action.host];
            if (host.foothold != Foothold::None) world.red.lost_sessions[action.host] = true;
            host.foothold = Foothold::None;
            host.suspected = false;
            host.confirmed_by_analyse = false;
            host.scanned_by_red = false;
            break;
        }
        case BlueActionKind::Analyse: {
            auto& host = world.hosts[action.host];
            if (host.foothold == Foothold::None) {
                record.wasted = true;
                host.suspected = false;
            } else {
                host.confirmed_by_analyse = true;
            }
            break;
        }
        case BlueActionKind::Block:
            world.blocked[action.link] = !world.blocked[action.link];
            break;
        }
        applied.push_back(record);
    }
    return applied;
}

RewardBreakdown compute_reward(const WorldState& world, std::span<const AppliedBlueAction> applied)
{
    const auto& config = *world.config;
    const auto& topo = *world.topology;
    RewardBreakdown r;
    for (int s = 0; s < static_cast<int>(config.subnets.size()); ++s) {
        const auto& hosts = config.subnets[s].hosts;
        for (std::size_t i = 0; i < hosts.size(); ++i)
            if (world.hosts[topo.subnet_hosts[s][i]].foothold == Foothold::PrivilegedShell)
                r.capture += hosts[i].capture_penalty;
    }
    for (const auto& record : applied) {
        switch (record.action.kind) {
        case BlueActionKind::Restore: {
            const int s = topo.host_subnet[record.action.host];
            const auto& ids = topo.subnet_hosts[s];
            const auto slot = std::find(ids.begin(), ids.end(), record.action.host) - ids.begin();
            r.restore += config.penalty_table.restore_cost.at(config.subnets[s].hosts[slot].role);
            break;
        }
        case BlueActionKind::Remove:
        case BlueActionKind::Analyse:
            if (record.wasted) r.wasted += config.penalty_table.wasted_action;
            break;
        case BlueActionKind::Block:
            r.block += config.penalty_table.block_cost;
            break;
        case BlueActionKind::Sleep:
            break;
        }
    }
    return r;
}

StepOutcome step(WorldState& world, std::span<const int> actions, const MaskContext& context)
{
    const auto& config = *world.config;
    const auto& topo = *world.topology;
    if (world.done()) throw EpisodeFinishedError("episode finished at timestep " + std::to_string(world.timestep));
    if (static_cast<int>(actions.size()) != config.agent_count)
        throw std::invalid_argument("expected one action per agent");

    std::vector<BlueAction> decoded;
    decoded.reserve(actions.size());
    for (int a = 0; a < config.agent_count; ++a) {
        const bool message = !context.message_nonzero.empty() && context.message_nonzero[a];
        const ActionMask mask = action_mask(world, a, message, context.sau_enabled);
        if (actions[a] < 0 || actions[a] >= mask.size() || !mask[actions[a]])
            throw MaskedActionError(a, actions[a],
                                    "agent " + std::to_string(a) + " chose masked action " +
                                        std::to_string(actions[a]));
        decoded.push_back(decode_action(topo, a, actions[a]));
    }

    StepOutcome out;
    for (auto& host : world.hosts) host.alerts_this_step = 0;

    // (1) blue
    out.blue = apply_blue_actions(world, decoded);

    auto raise = [&](const AlertCandidate& c) {
        auto& host = world.hosts[c.host];
        if (c.kind == AlertKind::Scan) {
            host.alerts_this_step |= kScanAlert;
        } else {
            host.alerts_this_step |= kExploitAlert;
            host.suspected = true;
        }
    };

    // (2) green
    if (config.green_enabled) {
        if (auto c = green_step(world, config.detection, world.rng)) {
            raise(*c);
            out.alerts.push_back({*c, true});
        }
    }

    // (3) red, (4) monitor
    std::optional<AlertCandidate> red_candidate;
    if (config.red_enabled) {
        out.red = red_decide(world, world.rng);
        red_candidate = red_apply(world, out.red);
    }
    if (red_candidate) {
        const double rate = red_candidate->kind == AlertKind::Scan ? config.detection.scan_detection_rate
                                                                  : config.detection.exploit_detection_rate;
        const bool detected = world.rng.bernoulli(rate);
        if (detected) raise(*red_candidate);
        out.alerts.push_back({*red_candidate, detected});
    }

    // (5) reward, (6) clock
    out.breakdown = compute_reward(world, out.blue);
    out.reward = out.breakdown.total();
    ++world.timestep;
    out.done = world.done();
    for (int a = 0; a < config.agent_count; ++a) out.observations.push_back(encode_observation(world, a));
    return out;
}

double worst_step_penalty(const ScenarioConfig& config)
{
    const Topology topo(config);
    double total = 0.0;
    for (const auto& subnet : config.subnets) {
        double worst_action = std::min(0.0, config.penalty_table.wasted_action);
        if (config.block_enabled) worst_action = std::min(worst_action, config.penalty_table.block_cost);
        for (const auto& host : subnet.hosts) {
            total += host.capture_penalty;
            worst_action = std::min(worst_action, config.penalty_table.restore_cost.at(host.role));
        }
        total += worst_action;
    }
    return total;
}

}  // namespace cyberdial
