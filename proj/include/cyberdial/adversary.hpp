#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>

#include "cyberdial/world.hpp"

namespace cyberdial {

enum class RedActionKind { DiscoverSubnet, ScanHost, Exploit, Escalate, Reestablish, Impact, Idle };

std::string_view to_string(RedActionKind kind);

struct RedAction {
    RedActionKind kind = RedActionKind::Idle;
    int target = -1;  // host index, or subnet index for DiscoverSubnet

    bool operator==(const RedAction&) const = default;
};

enum class AlertKind { Scan, Exploit };
enum class AlertSource { Red, Green };

// An event the host monitor may turn into an alert bit. Red candidates are
// sampled against the detection profile; green candidates always fire and
// are tagged false positives in the replay log.
struct AlertCandidate {
    int host = -1;
    AlertKind kind = AlertKind::Scan;
    AlertSource source = AlertSource::Red;

    bool operator==(const AlertCandidate&) const = default;
};

class IllegalRedTransition : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Red has a presence in a subnet if it holds a session there; the start
// (User) subnet always counts as present because red keeps its external
// access vector into it.
bool red_present(const WorldState& world, int subnet);

// A target subnet is reachable if red is present in it or present in a
// neighbour joined by an unblocked link.
bool red_can_reach(const WorldState& world, int subnet);

// Priority policy:
//   Impact > Escalate > Reestablish > Exploit > ScanHost > DiscoverSubnet > Idle.
// Ties are broken uniformly with one draw from rng whenever the chosen
// priority class is non-empty (Impact and Idle draw nothing).
RedAction red_decide(const WorldState& world, Rng& rng);

// Applies a red action to the world; returns the alert candidate it raises.
std::optional<AlertCandidate> red_apply(WorldState& world, const RedAction& action);

// One green tick: with probability green_activity_rate a uniformly random host
// in a User-kind subnet raises a false alert, Exploit with probability
// green_false_alarm_rate, else Scan. Draw order: activity, host, kind.
std::optional<AlertCandidate> green_step(const WorldState& world, const DetectionProfile& profile, Rng& rng);

}  // namespace cyberdial
