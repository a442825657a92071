#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cyberdial {

enum class SubnetKind { User, Enterprise, Operational };
enum class HostRole { Workstation, Server, OperationalServer };

std::string_view to_string(SubnetKind kind);
std::string_view to_string(HostRole role);

struct HostSpec {
    std::string id;
    HostRole role = HostRole::Workstation;
    double capture_penalty = 0.0;  // per timestep while red holds a privileged shell

    bool operator==(const HostSpec&) const = default;
};

struct SubnetSpec {
    std::string name;
    SubnetKind kind = SubnetKind::User;
    std::vector<HostSpec> hosts;

    bool operator==(const SubnetSpec&) const = default;
};

struct LinkSpec {
    std::string a;
    std::string b;

    bool operator==(const LinkSpec&) const = default;
};

struct PenaltyTable {
    std::map<HostRole, double> capture;
    std::map<HostRole, double> restore_cost;
    double wasted_action = -0.5;
    double block_cost = -1.0;

    bool operator==(const PenaltyTable&) const = default;
};

struct DetectionProfile {
    double exploit_detection_rate = 0.5;
    double scan_detection_rate = 0.5;
    double green_activity_rate = 0.5;
    double green_false_alarm_rate = 0.5;

    bool operator==(const DetectionProfile&) const = default;
};

struct ScenarioConfig {
    std::string name;
    std::vector<SubnetSpec> subnets;
    std::vector<LinkSpec> links;
    PenaltyTable penalty_table;
    DetectionProfile detection;
    int horizon = 30;
    bool green_enabled = false;
    int message_bits = 1;
    int agent_count = 0;
    // Not part of the original game description: switches for the simple-game
    // variant (no block action) and for debugging (scripted red disabled).
    bool block_enabled = true;
    bool red_enabled = true;

    bool operator==(const ScenarioConfig&) const = default;
};

// Raised by load_scenario and validate; key() names the offending document key.
class ScenarioError : public std::runtime_error {
public:
    enum class Kind { Parse, Validation };
    ScenarioError(Kind kind, std::string key, const std::string& what)
        : std::runtime_error(what), kind_(kind), key_(std::move(key)) {}
    Kind kind() const { return kind_; }
    const std::string& key() const { return key_; }

private:
    Kind kind_;
    std::string key_;
};

// "small", "small_green" or "large". Throws std::invalid_argument otherwise.
ScenarioConfig builtin_scenario(std::string_view name);
bool is_builtin_scenario(std::string_view name);

void validate(const ScenarioConfig& config);

// JSON document; see docs in README for the key set. Unknown keys are errors.
ScenarioConfig load_scenario(std::string_view text);
std::string serialize_scenario(const ScenarioConfig& config);

// Dense integer indexing of a validated scenario. Hosts are numbered subnet by
// subnet in declaration order; links in declaration order.
struct Topology {
    int host_count = 0;
    std::vector<int> host_subnet;
    std::vector<std::vector<int>> subnet_hosts;
    std::vector<std::pair<int, int>> links;
    std::vector<std::vector<int>> incident_links;  // per subnet, ascending link index
    int operational_server = -1;
    int start_subnet = -1;  // first subnet of kind User

    explicit Topology(const ScenarioConfig& config);

    int block_bits(int subnet) const { return static_cast<int>(incident_links[subnet].size()); }
    int observation_length(int subnet) const
    {
        return 4 * static_cast<int>(subnet_hosts[subnet].size()) + block_bits(subnet);
    }
    // Sleep + Remove/Restore/Analyse per host + Block per incident link.
    int action_count(int subnet) const
    {
        return 1 + 3 * static_cast<int>(subnet_hosts[subnet].size()) + block_bits(subnet);
    }
    int other_end(int link, int subnet) const
    {
        return links[link].first == subnet ? links[link].second : links[link].first;
    }
    int link_between(int s, int t) const;  // -1 when not linked
};

}  // namespace cyberdial
