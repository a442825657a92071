#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cyberdial/rng.hpp"
#include "cyberdial/scenario.hpp"

namespace cyberdial {

enum class Foothold : std::uint8_t { None, UserShell, PrivilegedShell };
enum class Knowledge : std::uint8_t { Unknown, Discovered, Scanned };

// Bit flags for TrueHostState::alerts_this_step.
enum AlertBits : std::uint8_t { kScanAlert = 1, kExploitAlert = 2 };

struct TrueHostState {
    Foothold foothold = Foothold::None;
    bool scanned_by_red = false;
    std::uint8_t alerts_this_step = 0;
    bool confirmed_by_analyse = false;
    // An exploit alert was raised and has not been resolved by Remove/Restore.
    bool suspected = false;

    bool operator==(const TrueHostState&) const = default;
};

// Red's view of the network. The red sessions are the hosts' footholds in
// WorldState::hosts; lost_sessions marks hosts whose session blue removed.
struct RedState {
    std::vector<bool> known_subnets;
    std::vector<Knowledge> knowledge;
    std::vector<bool> lost_sessions;
    int start_host = -1;

    bool operator==(const RedState&) const = default;
};

struct WorldState {
    std::shared_ptr<const ScenarioConfig> config;
    std::shared_ptr<const Topology> topology;
    std::vector<TrueHostState> hosts;
    std::vector<bool> blocked;  // per link
    int timestep = 0;
    Rng rng;
    RedState red;

    int horizon() const { return config->horizon; }
    bool done() const { return timestep >= config->horizon; }
    bool link_open(int s, int t) const
    {
        const int l = topology->link_between(s, t);
        return l >= 0 && !blocked[l];
    }

    bool operator==(const WorldState& other) const
    {
        return *config == *other.config && hosts == other.hosts && blocked == other.blocked &&
               timestep == other.timestep && rng == other.rng && red == other.red;
    }
};

}  // namespace cyberdial
