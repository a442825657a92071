#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cyberdial/adversary.hpp"
#include "cyberdial/world.hpp"

namespace cyberdial {

using AgentId = int;

// Per-agent bit vector. Host group i occupies bits [4i, 4i+4):
// bit0 scan alert, bit1 exploit alert, bits2-3 status code (bit2 = first
// character of the code, so "01" sets bit3 only). Block bits follow, one per
// incident link in ascending link order.
struct Observation {
    std::vector<std::uint8_t> bits;
    int host_count = 0;

    int block_bit_count() const { return static_cast<int>(bits.size()) - 4 * host_count; }
    // Lookup index of host group i: bit0 + 2 bit1 + 4 bit2 + 8 bit3.
    int host_group(int i) const;
    int block_index() const;  // block bits packed little-endian
    bool threat_visible() const;
    std::string to_string() const;  // e.g. "0101 0000 | 0"

    bool operator==(const Observation&) const = default;
};

enum class StatusCode : std::uint8_t { Clear = 0, Suspected = 1, UserConfirmed = 2, PrivilegedConfirmed = 3 };

enum class BlueActionKind { Sleep, Remove, Restore, Analyse, Block };

std::string_view to_string(BlueActionKind kind);

struct BlueAction {
    BlueActionKind kind = BlueActionKind::Sleep;
    int host = -1;  // global host index
    int link = -1;  // global link index

    bool operator==(const BlueAction&) const = default;
};

// Per-agent action index layout: 0 Sleep, then Remove/Restore/Analyse for
// each host of the subnet, then Block for each incident link.
BlueAction decode_action(const Topology& topology, AgentId agent, int index);
int encode_action(const Topology& topology, AgentId agent, const BlueAction& action);
std::string describe_action(const ScenarioConfig& config, const Topology& topology, const BlueAction& action);

struct ActionMask {
    std::vector<std::uint8_t> allowed;

    bool operator[](int i) const { return allowed[i] != 0; }
    int size() const { return static_cast<int>(allowed.size()); }
    int count() const;
    bool operator==(const ActionMask&) const = default;
};

// Itemized team reward for one step. total() sums in a fixed order so
// replays reproduce it bit for bit.
struct RewardBreakdown {
    double capture = 0.0;
    double restore = 0.0;
    double wasted = 0.0;
    double block = 0.0;

    double total() const { return ((capture + restore) + wasted) + block; }
    bool operator==(const RewardBreakdown&) const = default;
};

struct AlertRecord {
    AlertCandidate candidate;
    bool raised = false;  // survived monitor sampling

    bool operator==(const AlertRecord&) const = default;
};

struct AppliedBlueAction {
    BlueAction action;
    bool wasted = false;  // Remove/Analyse on a host with no red presence

    bool operator==(const AppliedBlueAction&) const = default;
};

struct StepOutcome {
    std::vector<Observation> observations;
    double reward = 0.0;
    RewardBreakdown breakdown;
    bool done = false;
    // Ordered event log: blue actions, green, red, monitor.
    std::vector<AppliedBlueAction> blue;
    RedAction red;
    std::vector<AlertRecord> alerts;

    bool operator==(const StepOutcome&) const = default;
};

// Context needed to recompute masks inside step().
struct MaskContext {
    bool sau_enabled = false;
    std::vector<bool> message_nonzero;  // per agent; empty means no messages
};

class MaskedActionError : public std::invalid_argument {
public:
    MaskedActionError(AgentId agent, int index, const std::string& what)
        : std::invalid_argument(what), agent_(agent), index_(index) {}
    AgentId agent() const { return agent_; }
    int index() const { return index_; }

private:
    AgentId agent_;
    int index_;
};

class EpisodeFinishedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ResetResult {
    WorldState world;
    std::vector<Observation> observations;
    std::vector<AlertRecord> alerts;  // the initial-foothold alert candidate
};

// Red starts with a user shell on a uniformly chosen host of the start subnet;
// its exploit alert is sampled against the exploit detection rate. Draw order:
// start host, then detection.
ResetResult reset(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed);
ResetResult reset(const ScenarioConfig& config, std::uint64_t seed);

StatusCode status_code(const TrueHostState& host);
Observation encode_observation(const WorldState& world, AgentId agent);

ActionMask action_mask(const WorldState& world, AgentId agent, bool incoming_message_nonzero, bool sau_enabled);
// Same predicate, computed from the observation alone.
ActionMask action_mask(const Topology& topology, bool block_enabled, AgentId agent, const Observation& obs,
                       bool incoming_message_nonzero, bool sau_enabled);

// Stage (1) of step: applies blue actions in agent order.
std::vector<AppliedBlueAction> apply_blue_actions(WorldState& world, std::span<const BlueAction> actions);

// Stage (5): capture accrual over current footholds plus the costs of the
// applied blue actions.
RewardBreakdown compute_reward(const WorldState& world, std::span<const AppliedBlueAction> applied);

// Full step. actions are per-agent action indices.
StepOutcome step(WorldState& world, std::span<const int> actions, const MaskContext& context = {});

// Sum of the worst per-step penalties: every host captured, every agent
// paying the largest of (restore, wasted, block) costs available to it.
double worst_step_penalty(const ScenarioConfig& config);

}  // namespace cyberdial
