#include "cyberdial/adversary.hpp"

#include <string>
#include <vector>

namespace cyberdial {

std::string_view to_string(RedActionKind kind)
{
    switch (kind) {
    case RedActionKind::DiscoverSubnet: return "DiscoverSubnet";
    case RedActionKind::ScanHost: return "ScanHost";
    case RedActionKind::Exploit: return "Exploit";
    case RedActionKind::Escalate: return "Escalate";
    case RedActionKind::Reestablish: return "Reestablish";
    case RedActionKind::Impact: return "Impact";
    case RedActionKind::Idle: return "Idle";
    }
    return "?";
}

bool red_present(const WorldState& world, int subnet)
{
    if (subnet == world.topology->start_subnet) return true;
    for (int h : world.topology->subnet_hosts[subnet])
        if (world.hosts[h].foothold != Foothold::None) return true;
    return false;
}

bool red_can_reach(const WorldState& world, int subnet)
{
    if (!world.red.known_subnets[subnet]) return false;
    if (red_present(world, subnet)) return true;
    for (int l : world.topology->incident_links[subnet]) {
        const int other = world.topology->other_end(l, subnet);
        if (!world.blocked[l] && red_present(world, other)) return true;
    }
    return false;
}

namespace {

bool has_privileged_pivot_to(const WorldState& world, int target_subnet)
{
    const auto& topo = *world.topology;
    for (int l : topo.incident_links[target_subnet]) {
        if (world.blocked[l]) continue;
        const int from = topo.other_end(l, target_subnet);
        for (int h : topo.subnet_hosts[from])
            if (world.hosts[h].foothold == Foothold::PrivilegedShell) return true;
    }
    return false;
}

bool host_reachable(const WorldState& world, int host)
{
    return red_can_reach(world, world.topology->host_subnet[host]);
}

RedAction pick(RedActionKind kind, const std::vector<int>& candidates, Rng& rng)
{
    return {kind, candidates[rng.index(candidates.size())]};
}

}  // namespace

RedAction red_decide(const WorldState& world, Rng& rng)
{
    const auto& topo = *world.topology;
    const auto& red = world.red;
    const int hosts = topo.host_count;

    const int op = topo.operational_server;
    if (world.hosts[op].foothold == Foothold::PrivilegedShell) return {RedActionKind::Impact, op};

    std::vector<int> candidates;
    for (int h = 0; h < hosts; ++h)
        if (world.hosts[h].foothold == Foothold::UserShell) candidates.push_back(h);
    if (!candidates.empty()) return pick(RedActionKind::Escalate, candidates, rng);

    for (int h = 0; h < hosts; ++h)
        if (red.lost_sessions[h] && world.hosts[h].foothold == Foothold::None && host_reachable(world, h))
            candidates.push_back(h);
    if (!candidates.empty()) return pick(RedActionKind::Reestablish, candidates, rng);

    for (int h = 0; h < hosts; ++h)
        if (red.knowledge[h] == Knowledge::Scanned && world.hosts[h].foothold == Foothold::None &&
            !red.lost_sessions[h] && host_reachable(world, h))
            candidates.push_back(h);
    if (!candidates.empty()) return pick(RedActionKind::Exploit, candidates, rng);

    for (int h = 0; h < hosts; ++h)
        if (red.knowledge[h] == Knowledge::Discovered && host_reachable(world, h)) candidates.push_back(h);
    if (!candidates.empty()) return pick(RedActionKind::ScanHost, candidates, rng);

    for (int s = 0; s < static_cast<int>(topo.subnet_hosts.size()); ++s)
        if (!red.known_subnets[s] && has_privileged_pivot_to(world, s)) candidates.push_back(s);
    if (!candidates.empty()) return pick(RedActionKind::DiscoverSubnet, candidates, rng);

    return {RedActionKind::Idle, -1};
}

std::optional<AlertCandidate> red_apply(WorldState& world, const RedAction& action)
{
    const auto& topo = *world.topology;
    auto& red = world.red;
    auto illegal = [&](const char* why) -> IllegalRedTransition {
        return IllegalRedTransition(std::string(to_string(action.kind)) + "(" + std::to_string(action.target) +
                                    "): " + why);
    };
    auto check_host = [&] {
        if (action.target < 0 || action.target >= topo.host_count) throw illegal("no such host");
    };

    switch (action.kind) {
    case RedActionKind::Idle:
        return std::nullopt;

    case RedActionKind::Impact:
        check_host();
        if (action.target != topo.operational_server) throw illegal("impact needs the operational server");
        if (world.hosts[action.target].foothold != Foothold::PrivilegedShell) throw illegal("no privileged shell");
        return std::nullopt;

    case RedActionKind::Escalate: {
        check_host();
        auto& host = world.hosts[action.target];
        if (host.foothold != Foothold::UserShell) throw illegal("no user shell to escalate");
        host.foothold = Foothold::PrivilegedShell;
        return std::nullopt;
    }

    case RedActionKind::Exploit:
    case RedActionKind::Reestablish: {
        check_host();
        const int h = action.target;
        if (!host_reachable(world, h)) throw illegal("target unreachable");
        if (world.hosts[h].foothold != Foothold::None) throw illegal("host already held");
        if (red.knowledge[h] != Knowledge::Scanned) throw illegal("host not scanned");
        if (action.kind == RedActionKind::Reestablish && !red.lost_sessions[h]) throw illegal("no lost session");
        world.hosts[h].foothold = Foothold::UserShell;
        red.lost_sessions[h] = false;
        return AlertCandidate{h, AlertKind::Exploit, AlertSource::Red};
    }

    case RedActionKind::ScanHost: {
        check_host();
        const int h = action.target;
        if (!host_reachable(world, h)) throw illegal("target unreachable");
        if (red.knowledge[h] == Knowledge::Unknown) throw illegal("host not discovered");
        red.knowledge[h] = Knowledge::Scanned;
        world.hosts[h].scanned_by_red = true;
        return AlertCandidate{h, AlertKind::Scan, AlertSource::Red};
    }

    case RedActionKind::DiscoverSubnet: {
        const int s = action.target;
        if (s < 0 || s >= static_cast<int>(topo.subnet_hosts.size())) throw illegal("no such subnet");
        if (red.known_subnets[s]) throw illegal("subnet already known");
        if (!has_privileged_pivot_to(world, s)) throw illegal("no privileged pivot over an open link");
        red.known_subnets[s] = true;
        for (int h : topo.subnet_hosts[s])
            if (red.knowledge[h] == Knowledge::Unknown) red.knowledge[h] = Knowledge::Discovered;
        return std::nullopt;
    }
    }
    return std::nullopt;
}

std::optional<AlertCandidate> green_step(const WorldState& world, const DetectionProfile& profile, Rng& rng)
{
    if (!rng.bernoulli(profile.green_activity_rate)) return std::nullopt;
    std::vector<int> pool;
    for (int h = 0; h < world.topology->host_count; ++h)
        if (world.config->subnets[world.topology->host_subnet[h]].kind == SubnetKind::User) pool.push_back(h);
    const int host = pool[rng.index(pool.size())];
    const AlertKind kind = rng.bernoulli(profile.green_false_alarm_rate) ? AlertKind::Exploit : AlertKind::Scan;
    return AlertCandidate{host, kind, AlertSource::Green};
}

}  // namespace cyberdial
