#include "cyberdial/scenario.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace cyberdial {

using nlohmann::json;

std::string_view to_string(SubnetKind kind)
{
    switch (kind) {
    case SubnetKind::User: return "User";
    case SubnetKind::Enterprise: return "Enterprise";
    case SubnetKind::Operational: return "Operational";
    }
    return "?";
}

std::string_view to_string(HostRole role)
{
    switch (role) {
    case HostRole::Workstation: return "Workstation";
    case HostRole::Server: return "Server";
    case HostRole::OperationalServer: return "OperationalServer";
    }
    return "?";
}

namespace {

constexpr HostRole kRoles[] = {HostRole::Workstation, HostRole::Server, HostRole::OperationalServer};

PenaltyTable default_penalties()
{
    PenaltyTable table;
    table.capture = {{HostRole::Workstation, -0.1}, {HostRole::Server, -1.0}, {HostRole::OperationalServer, -10.0}};
    table.restore_cost = {{HostRole::Workstation, -0.1}, {HostRole::Server, -0.5}, {HostRole::OperationalServer, -1.0}};
    table.wasted_action = -0.5;
    table.block_cost = -1.0;
    return table;
}

SubnetSpec make_subnet(std::string name, SubnetKind kind, int workstations, int servers, bool op_server,
                       const PenaltyTable& penalties)
{
    SubnetSpec subnet{std::move(name), kind, {}};
    auto add = [&](const std::string& prefix, int count, HostRole role) {
        for (int i = 0; i < count; ++i)
            subnet.hosts.push_back({subnet.name + "_" + prefix + std::to_string(i), role, penalties.capture.at(role)});
    };
    add("ws", workstations, HostRole::Workstation);
    add("srv", servers, HostRole::Server);
    if (op_server) add("opsrv", 1, HostRole::OperationalServer);
    return subnet;
}

[[noreturn]] void fail(const std::string& key, const std::string& message)
{
    throw ScenarioError(ScenarioError::Kind::Validation, key, key + ": " + message);
}

[[noreturn]] void parse_fail(const std::string& key, const std::string& message)
{
    throw ScenarioError(ScenarioError::Kind::Parse, key, key + ": " + message);
}

}  // namespace

bool is_builtin_scenario(std::string_view name)
{
    return name == "small" || name == "small_green" || name == "large";
}

ScenarioConfig builtin_scenario(std::string_view name)
{
    if (!is_builtin_scenario(name)) throw std::invalid_argument("unknown builtin scenario: " + std::string(name));

    ScenarioConfig config;
    config.name = std::string(name);
    config.penalty_table = default_penalties();
    config.detection = DetectionProfile{0.5, 0.5, 0.5, 0.5};
    config.message_bits = 1;
    const auto& p = config.penalty_table;

    if (name == "large") {
        config.subnets.push_back(make_subnet("user", SubnetKind::User, 5, 0, false, p));
        config.subnets.push_back(make_subnet("enterprise", SubnetKind::Enterprise, 0, 3, false, p));
        config.subnets.push_back(make_subnet("operational", SubnetKind::Operational, 0, 2, true, p));
        config.links = {{"user", "enterprise"}, {"user", "operational"}, {"enterprise", "operational"}};
        config.horizon = 60;
    } else {
        config.subnets.push_back(make_subnet("user", SubnetKind::User, 3, 0, false, p));
        config.subnets.push_back(make_subnet("operational", SubnetKind::Operational, 0, 2, true, p));
        config.links = {{"user", "operational"}};
        config.horizon = 30;
        config.green_enabled = (name == "small_green");
    }
    config.agent_count = static_cast<int>(config.subnets.size());
    return config;
}

void validate(const ScenarioConfig& config)
{
    if (config.name.empty()) fail("name", "empty name");
    if (config.horizon <= 0) fail("horizon", "must be positive");
    if (config.message_bits <= 0) fail("message_bits", "must be positive");
    if (config.subnets.empty()) fail("subnets", "no subnets");
    if (config.agent_count != static_cast<int>(config.subnets.size()))
        fail("agent_count", "must equal the number of subnets");

    std::set<std::string> subnet_names;
    std::set<std::string> host_ids;
    int op_servers = 0;
    bool has_user = false;
    for (const auto& subnet : config.subnets) {
        const std::string key = "subnets." + subnet.name;
        if (subnet.name.empty()) fail("subnets.name", "empty subnet name");
        if (!subnet_names.insert(subnet.name).second) fail(key, "duplicate subnet name");
        if (subnet.hosts.empty()) fail(key + ".hosts", "empty subnet");
        if (subnet.hosts.size() > 15) fail(key + ".hosts", "at most 15 hosts per subnet");
        has_user = has_user || subnet.kind == SubnetKind::User;
        for (const auto& host : subnet.hosts) {
            const std::string hkey = key + ".hosts." + host.id;
            if (host.id.empty()) fail(key + ".hosts.id", "empty host id");
            if (!host_ids.insert(host.id).second) fail(hkey, "duplicate host id");
            if (!(host.capture_penalty <= 0.0)) fail(hkey + ".capture_penalty", "must be <= 0");
            if (host.role == HostRole::OperationalServer) ++op_servers;
        }
    }
    if (op_servers != 1) fail("subnets", "exactly one OperationalServer host required");
    if (!has_user) fail("subnets", "a User subnet is required (red entry point)");

    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& link : config.links) {
        if (!subnet_names.count(link.a)) fail("links", "unknown subnet '" + link.a + "'");
        if (!subnet_names.count(link.b)) fail("links", "unknown subnet '" + link.b + "'");
        if (link.a == link.b) fail("links", "self link on '" + link.a + "'");
        auto key = std::minmax(link.a, link.b);
        if (!seen.insert({key.first, key.second}).second) fail("links", "duplicate link " + link.a + "-" + link.b);
    }

    const auto& p = config.penalty_table;
    for (HostRole role : kRoles) {
        const std::string r(to_string(role));
        if (!p.capture.count(role)) fail("penalties.capture." + r, "missing");
        if (!p.restore_cost.count(role)) fail("penalties.restore_cost." + r, "missing");
    }
    for (const auto& [role, v] : p.capture)
        if (!(v <= 0.0)) fail("penalties.capture." + std::string(to_string(role)), "must be <= 0");
    for (const auto& [role, v] : p.restore_cost)
        if (!(v <= 0.0)) fail("penalties.restore_cost." + std::string(to_string(role)), "must be <= 0");
    if (!(p.wasted_action <= 0.0)) fail("penalties.wasted_action", "must be <= 0");
    if (!(p.block_cost <= 0.0)) fail("penalties.block_cost", "must be <= 0");

    const auto& d = config.detection;
    auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!prob(d.exploit_detection_rate)) fail("detection.exploit_detection_rate", "must be in [0,1]");
    if (!prob(d.scan_detection_rate)) fail("detection.scan_detection_rate", "must be in [0,1]");
    if (!prob(d.green_activity_rate)) fail("detection.green_activity_rate", "must be in [0,1]");
    if (!prob(d.green_false_alarm_rate)) fail("detection.green_false_alarm_rate", "must be in [0,1]");
}

// ---------------------------------------------------------------------------
// Document I/O

namespace {

// `optional` keys may be absent; everything else is required.
void expect_keys(const json& object, const std::string& where, std::initializer_list<const char*> keys,
                 std::initializer_list<const char*> optional = {})
{
    if (!object.is_object()) parse_fail(where, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    allowed.insert(optional.begin(), optional.end());
    for (const auto& item : object.items())
        if (!allowed.count(item.key())) parse_fail(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
    for (const char* key : keys)
        if (!object.contains(key)) parse_fail(where.empty() ? key : where + "." + key, "missing key");
}

template <typename T>
T get_as(const json& object, const std::string& where, const char* key)
{
    const std::string full = where.empty() ? key : where + "." + key;
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        parse_fail(full, "wrong type");
    }
}

HostRole parse_role(const std::string& text, const std::string& key)
{
    for (HostRole role : kRoles)
        if (to_string(role) == text) return role;
    parse_fail(key, "unknown role '" + text + "'");
}

SubnetKind parse_kind(const std::string& text, const std::string& key)
{
    for (SubnetKind kind : {SubnetKind::User, SubnetKind::Enterprise, SubnetKind::Operational})
        if (to_string(kind) == text) return kind;
    parse_fail(key, "unknown subnet kind '" + text + "'");
}

std::map<HostRole, double> parse_role_map(const json& object, const std::string& where)
{
    if (!object.is_object()) parse_fail(where, "expected an object");
    std::map<HostRole, double> out;
    for (const auto& item : object.items()) {
        const std::string key = where + "." + item.key();
        if (!item.value().is_number()) parse_fail(key, "wrong type");
        out[parse_role(item.key(), key)] = item.value().get<double>();
    }
    return out;
}

json role_map_json(const std::map<HostRole, double>& values)
{
    json out = json::object();
    for (const auto& [role, v] : values) out[std::string(to_string(role))] = v;
    return out;
}

}  // namespace

ScenarioConfig load_scenario(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(ScenarioError::Kind::Parse, "", std::string("malformed scenario document: ") + e.what());
    }

    expect_keys(doc, "",
                {"name", "horizon", "message_bits", "agent_count", "green_enabled", "block_enabled", "red_enabled",
                 "subnets", "links", "penalties", "detection"});

    ScenarioConfig config;
    config.name = get_as<std::string>(doc, "", "name");
    config.horizon = get_as<int>(doc, "", "horizon");
    config.message_bits = get_as<int>(doc, "", "message_bits");
    config.agent_count = get_as<int>(doc, "", "agent_count");
    config.green_enabled = get_as<bool>(doc, "", "green_enabled");
    config.block_enabled = get_as<bool>(doc, "", "block_enabled");
    config.red_enabled = get_as<bool>(doc, "", "red_enabled");

    if (!doc["subnets"].is_array()) parse_fail("subnets", "expected an array");
    for (const auto& s : doc["subnets"]) {
        // a missing host list loads as empty and fails validation as "empty subnet"
        expect_keys(s, "subnets[]", {"name", "kind"}, {"hosts"});
        SubnetSpec subnet;
        subnet.name = get_as<std::string>(s, "subnets[]", "name");
        const std::string where = "subnets." + subnet.name;
        subnet.kind = parse_kind(get_as<std::string>(s, where, "kind"), where + ".kind");
        const json hosts = s.contains("hosts") ? s["hosts"] : json::array();
        if (!hosts.is_array()) parse_fail(where + ".hosts", "expected an array");
        for (const auto& h : hosts) {
            expect_keys(h, where + ".hosts[]", {"id", "role", "capture_penalty"});
            HostSpec host;
            host.id = get_as<std::string>(h, where + ".hosts[]", "id");
            const std::string hwhere = where + ".hosts." + host.id;
            host.role = parse_role(get_as<std::string>(h, hwhere, "role"), hwhere + ".role");
            host.capture_penalty = get_as<double>(h, hwhere, "capture_penalty");
            subnet.hosts.push_back(std::move(host));
        }
        config.subnets.push_back(std::move(subnet));
    }

    if (!doc["links"].is_array()) parse_fail("links", "expected an array");
    for (const auto& l : doc["links"]) {
        if (!l.is_array() || l.size() != 2 || !l[0].is_string() || !l[1].is_string())
            parse_fail("links", "each link must be a pair of subnet names");
        config.links.push_back({l[0].get<std::string>(), l[1].get<std::string>()});
    }

    const json& p = doc["penalties"];
    expect_keys(p, "penalties", {"capture", "restore_cost", "wasted_action", "block_cost"});
    config.penalty_table.capture = parse_role_map(p["capture"], "penalties.capture");
    config.penalty_table.restore_cost = parse_role_map(p["restore_cost"], "penalties.restore_cost");
    config.penalty_table.wasted_action = get_as<double>(p, "penalties", "wasted_action");
    config.penalty_table.block_cost = get_as<double>(p, "penalties", "block_cost");

    const json& d = doc["detection"];
    expect_keys(d, "detection",
                {"exploit_detection_rate", "scan_detection_rate", "green_activity_rate", "green_false_alarm_rate"});
    config.detection.exploit_detection_rate = get_as<double>(d, "detection", "exploit_detection_rate");
    config.detection.scan_detection_rate = get_as<double>(d, "detection", "scan_detection_rate");
    config.detection.green_activity_rate = get_as<double>(d, "detection", "green_activity_rate");
    config.detection.green_false_alarm_rate = get_as<double>(d, "detection", "green_false_alarm_rate");

    validate(config);
    return config;
}

std::string serialize_scenario(const ScenarioConfig& config)
{
    json doc;
    doc["name"] = config.name;
    doc["horizon"] = config.horizon;
    doc["message_bits"] = config.message_bits;
    doc["agent_count"] = config.agent_count;
    doc["green_enabled"] = config.green_enabled;
    doc["block_enabled"] = config.block_enabled;
    doc["red_enabled"] = config.red_enabled;
    doc["subnets"] = json::array();
    for (const auto& subnet : config.subnets) {
        json s;
        s["name"] = subnet.name;
        s["kind"] = std::string(to_string(subnet.kind));
        s["hosts"] = json::array();
        for (const auto& host : subnet.hosts)
            s["hosts"].push_back({{"id", host.id}, {"role", std::string(to_string(host.role))},
                                  {"capture_penalty", host.capture_penalty}});
        doc["subnets"].push_back(std::move(s));
    }
    doc["links"] = json::array();
    for (const auto& link : config.links) doc["links"].push_back({link.a, link.b});
    doc["penalties"] = {{"capture", role_map_json(config.penalty_table.capture)},
                        {"restore_cost", role_map_json(config.penalty_table.restore_cost)},
                        {"wasted_action", config.penalty_table.wasted_action},
                        {"block_cost", config.penalty_table.block_cost}};
    doc["detection"] = {{"exploit_detection_rate", config.detection.exploit_detection_rate},
                        {"scan_detection_rate", config.detection.scan_detection_rate},
                        {"green_activity_rate", config.detection.green_activity_rate},
                        {"green_false_alarm_rate", config.detection.green_false_alarm_rate}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

Topology::Topology(const ScenarioConfig& config)
{
    const int subnets = static_cast<int>(config.subnets.size());
    subnet_hosts.resize(subnets);
    incident_links.resize(subnets);
    for (int s = 0; s < subnets; ++s) {
        if (start_subnet < 0 && config.subnets[s].kind == SubnetKind::User) start_subnet = s;
        for (const auto& host : config.subnets[s].hosts) {
            if (host.role == HostRole::OperationalServer) operational_server = host_count;
            subnet_hosts[s].push_back(host_count++);
            host_subnet.push_back(s);
        }
    }
    auto subnet_index = [&](const std::string& name) {
        for (int s = 0; s < subnets; ++s)
            if (config.subnets[s].name == name) return s;
        throw std::invalid_argument("unknown subnet " + name);
    };
    for (const auto& link : config.links) {
        const int l = static_cast<int>(links.size());
        links.emplace_back(subnet_index(link.a), subnet_index(link.b));
        incident_links[links.back().first].push_back(l);
        incident_links[links.back().second].push_back(l);
    }
}

int Topology::link_between(int s, int t) const
{
    for (int l : incident_links[s])
        if (other_end(l, s) == t) return l;
    return -1;
}

}  // namespace cyberdial
