#include "cyberdial/replay_log.hpp"

#include <charconv>
#include <istream>
#include <sstream>

namespace cyberdial {

using nlohmann::json;

namespace {

std::string_view alert_kind(AlertKind k) { return k == AlertKind::Scan ? "scan" : "exploit"; }
std::string_view alert_source(AlertSource s) { return s == AlertSource::Red ? "red" : "green"; }

std::string_view foothold_name(Foothold f)
{
    switch (f) {
    case Foothold::None: return "none";
    case Foothold::UserShell: return "user";
    case Foothold::PrivilegedShell: return "privileged";
    }
    return "?";
}

std::vector<std::string> host_names(const ScenarioConfig& config)
{
    std::vector<std::string> names;
    for (const SubnetSpec& s : config.subnets)
        for (const HostSpec& h : s.hosts) names.push_back(h.id);
    return names;
}

json alert_json(const AlertRecord& a, const std::vector<std::string>& names)
{
    return {{"host", names.at(a.candidate.host)},
            {"kind", alert_kind(a.candidate.kind)},
            {"source", alert_source(a.candidate.source)},
            {"raised", a.raised},
            {"false_positive", a.candidate.source == AlertSource::Green}};
}

// Shortest text that parses back to the same double.
std::string format_number(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

ReplayRecorder::ReplayRecorder(const CyberTask& task, ReplayHeader header)
{
    const ScenarioConfig& config = *task.world().config;
    const auto names = host_names(config);
    json initial = json::array();
    for (const AlertRecord& a : task.last_reset().alerts) initial.push_back(alert_json(a, names));
    json start = nullptr;
    const WorldState& initial_world = task.last_reset().world;
    for (int h = 0; h < initial_world.topology->host_count; ++h)
        if (initial_world.hosts[h].foothold != Foothold::None) start = names[h];
    header_ = {{"type", "header"},
               {"format", kReplayFormat},
               {"version", kReplayVersion},
               {"scenario", header.scenario},
               {"algorithm", header.algorithm},
               {"seed", header.seed},
               {"episode", header.episode},
               {"agents", config.agent_count},
               {"red_start", start},
               {"initial_alerts", initial}};
}

void ReplayRecorder::record(const StepView& view)
{
    const auto* task = dynamic_cast<const CyberTask*>(view.task);
    if (!task) throw ReplayError("replay recording needs a cyber task");
    const ScenarioConfig& config = *task->world().config;
    const Topology& topo = *task->world().topology;
    const StepOutcome& out = task->last_outcome();
    const auto names = host_names(config);
    const int bits = config.message_bits;

    json blue = json::array();
    for (std::size_t a = 0; a < out.blue.size(); ++a)
        blue.push_back({{"agent", a},
                        {"index", view.actions[a]},
                        {"action", describe_action(config, topo, out.blue[a].action)},
                        {"wasted", out.blue[a].wasted}});
    json messages = json::array();
    for (int a = 0; a < config.agent_count; ++a) {
        if (view.message_bits.size() < static_cast<std::size_t>((a + 1) * bits)) break;
        json b = json::array();
        bool nonzero = false;
        for (int k = 0; k < bits; ++k) {
            b.push_back(view.message_bits[a * bits + k]);
            nonzero = nonzero || view.message_bits[a * bits + k];
        }
        if (nonzero) messages.push_back({{"agent", a}, {"bits", b}});
    }
    json red = {{"kind", to_string(out.red.kind)}, {"target", nullptr}};
    if (out.red.kind == RedActionKind::DiscoverSubnet)
        red["target"] = config.subnets.at(out.red.target).name;
    else if (out.red.target >= 0)
        red["target"] = names.at(out.red.target);
    json alerts = json::array();
    for (const AlertRecord& a : out.alerts) alerts.push_back(alert_json(a, names));
    json footholds = json::object();
    for (int h = 0; h < topo.host_count; ++h)
        if (task->world().hosts[h].foothold != Foothold::None)
            footholds[names[h]] = foothold_name(task->world().hosts[h].foothold);
    json blocked = json::array();
    for (std::size_t l = 0; l < task->world().blocked.size(); ++l)
        if (task->world().blocked[l]) blocked.push_back(l);

    episode_return_ += out.breakdown.total();
    steps_.push_back({{"type", "step"},
                      {"t", view.timestep},
                      {"blue", blue},
                      {"messages", messages},
                      {"red", red},
                      {"alerts", alerts},
                      {"reward",
                       {{"capture", out.breakdown.capture},
                        {"restore", out.breakdown.restore},
                        {"wasted", out.breakdown.wasted},
                        {"block", out.breakdown.block},
                        {"total", out.breakdown.total()}}},
                      {"footholds", footholds},
                      {"blocked_links", blocked}});
}

std::string ReplayRecorder::finish() const
{
    std::string out = header_.dump() + "\n";
    for (const json& s : steps_) out += s.dump() + "\n";
    out += json{{"type", "end"}, {"steps", steps_.size()}, {"episode_return", episode_return_}}.dump() + "\n";
    return out;
}

ReplayLog parse_replay(std::istream& in)
{
    ReplayLog log;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ReplayError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (log.header.is_null()) {
            if (type != "header" || j.value("format", "") != kReplayFormat)
                throw ReplayError("line " + std::to_string(line_no) + ": not a replay log header");
            if (j.value("version", -1) != kReplayVersion)
                throw ReplayError("unsupported replay version " + j.value("version", json(nullptr)).dump() +
                                  " (expected " + std::to_string(kReplayVersion) + ")");
            log.header = j;
        } else if (type == "step") {
            log.steps.push_back(j);
        } else if (type == "end") {
            log.episode_return = j.at("episode_return").get<double>();
        } else {
            throw ReplayError("line " + std::to_string(line_no) + ": unknown record type '" + type + "'");
        }
    }
    return log;
}

Narrative narrate(const ReplayLog& log)
{
    Narrative n;
    std::ostringstream os;
    if (!log.header.is_null()) {
        os << "scenario " << log.header.value("scenario", "?") << ", algorithm " << log.header.value("algorithm", "?")
           << ", seed " << log.header.value("seed", 0) << ", episode " << log.header.value("episode", 0) << "\n";
        if (log.header.contains("red_start") && !log.header["red_start"].is_null())
            os << "red starts on " << log.header["red_start"].get<std::string>() << "\n";
        for (const json& a : log.header.value("initial_alerts", json::array()))
            os << "  initial alert " << a.at("kind").get<std::string>() << " on " << a.at("host").get<std::string>()
               << (a.at("raised").get<bool>() ? " (raised)" : " (missed)") << "\n";
    }
    for (const json& s : log.steps) {
        const json& r = s.at("reward");
        const double total = r.at("total").get<double>();
        n.total += total;
        ++n.steps;
        os << "t=" << s.at("t").get<int>() << " reward " << format_number(total) << " (capture "
           << format_number(r.at("capture").get<double>()) << ", restore " << format_number(r.at("restore").get<double>())
           << ", wasted " << format_number(r.at("wasted").get<double>()) << ", block "
           << format_number(r.at("block").get<double>()) << ")\n";
        for (const json& b : s.at("blue"))
            os << "  blue " << b.at("agent").get<int>() << ": " << b.at("action").get<std::string>()
               << (b.at("wasted").get<bool>() ? " [wasted]" : "") << "\n";
        for (const json& m : s.at("messages")) {
            os << "  message from " << m.at("agent").get<int>() << ":";
            for (const json& bit : m.at("bits")) os << " " << bit.get<int>();
            os << "\n";
        }
        const json& red = s.at("red");
        os << "  red: " << red.at("kind").get<std::string>();
        if (!red.at("target").is_null()) os << " " << red.at("target").get<std::string>();
        os << "\n";
        for (const json& a : s.at("alerts")) {
            os << "  alert: " << a.at("kind").get<std::string>() << " on " << a.at("host").get<std::string>() << " from "
               << a.at("source").get<std::string>() << (a.at("raised").get<bool>() ? "" : " (missed by monitor)");
            if (a.at("false_positive").get<bool>()) os << " [FALSE POSITIVE]";
            os << "\n";
        }
    }
    os << n.steps << " steps";
    if (n.steps > 0 || log.episode_return) os << ", total " << format_number(n.total);
    if (log.episode_return) {
        n.matches_logged_return = n.total == *log.episode_return;
        os << ", logged return " << format_number(*log.episode_return)
           << (n.matches_logged_return ? " (match)" : " (MISMATCH)");
    }
    os << "\n";
    n.text = os.str();
    return n;
}

}  // namespace cyberdial
