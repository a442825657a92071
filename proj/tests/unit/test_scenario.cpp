#include <doctest.h>

#include <json.hpp>

#include "cyberdial/scenario.hpp"

using namespace cyberdial;
using nlohmann::json;

namespace {

ScenarioError load_error(const std::string& text)
{
    try {
        load_scenario(text);
    } catch (const ScenarioError& e) {
        return e;
    }
    FAIL("document was accepted");
    return ScenarioError(ScenarioError::Kind::Parse, "", "");
}

json small_doc() { return json::parse(serialize_scenario(builtin_scenario("small"))); }

}  // namespace

TEST_SUITE("scenario")
{
    TEST_CASE("small: 30 steps, two agents, one message bit, one block bit")
    {
        const ScenarioConfig c = builtin_scenario("small");
        CHECK(c.horizon == 30);
        CHECK(c.agent_count == 2);
        CHECK(c.message_bits == 1);
        CHECK_FALSE(c.green_enabled);
        const Topology t(c);
        for (int s = 0; s < 2; ++s) CHECK(t.block_bits(s) == 1);
    }

    TEST_CASE("large: 60 steps, three agents, two block bits each")
    {
        const ScenarioConfig c = builtin_scenario("large");
        CHECK(c.horizon == 60);
        CHECK(c.agent_count == 3);
        const Topology t(c);
        for (int s = 0; s < 3; ++s) CHECK(t.block_bits(s) == 2);
    }

    TEST_CASE("small_green differs from small only by the green flag")
    {
        ScenarioConfig g = builtin_scenario("small_green");
        CHECK(g.green_enabled);
        g.green_enabled = false;
        g.name = "small";
        CHECK(g == builtin_scenario("small"));
    }

    TEST_CASE("default host layout and penalties")
    {
        const ScenarioConfig small = builtin_scenario("small");
        REQUIRE(small.subnets.size() == 2);
        CHECK(small.subnets[0].kind == SubnetKind::User);
        CHECK(small.subnets[0].hosts.size() == 3);
        CHECK(small.subnets[1].hosts.size() == 3);
        const ScenarioConfig large = builtin_scenario("large");
        CHECK(large.subnets[0].hosts.size() == 5);
        CHECK(large.subnets[1].hosts.size() == 3);
        CHECK(large.subnets[2].hosts.size() == 3);
        for (const char* name : {"small", "small_green", "large"}) {
            int op = 0;
            for (const auto& s : builtin_scenario(name).subnets)
                for (const auto& h : s.hosts) {
                    const double p = h.capture_penalty;
                    CHECK((p == -0.1 || p == -1.0 || p == -10.0));
                    op += h.role == HostRole::OperationalServer;
                    if (h.role == HostRole::OperationalServer) CHECK(p == -10.0);
                    if (h.role == HostRole::Workstation) CHECK(p == -0.1);
                }
            CHECK(op == 1);
        }
        CHECK(small.penalty_table.wasted_action == -0.5);
        CHECK(small.penalty_table.block_cost == -1.0);
        CHECK(small.penalty_table.restore_cost.at(HostRole::Workstation) == -0.1);
        CHECK(small.penalty_table.restore_cost.at(HostRole::Server) == -0.5);
        CHECK(small.penalty_table.restore_cost.at(HostRole::OperationalServer) == -1.0);
    }

    TEST_CASE("observation length is 4 per host plus block bits")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            const ScenarioConfig c = builtin_scenario(name);
            const Topology t(c);
            const int block = c.subnets.size() == 2 ? 1 : 2;
            for (std::size_t s = 0; s < c.subnets.size(); ++s)
                CHECK(t.observation_length(static_cast<int>(s)) ==
                      4 * static_cast<int>(c.subnets[s].hosts.size()) + block);
        }
    }

    TEST_CASE("builtin_scenario is pure and rejects unknown names")
    {
        for (const char* name : {"small", "small_green", "large"}) CHECK(builtin_scenario(name) == builtin_scenario(name));
        CHECK_THROWS_AS(builtin_scenario("medium"), std::invalid_argument);
        CHECK(is_builtin_scenario("large"));
        CHECK_FALSE(is_builtin_scenario("medium"));
    }

    TEST_CASE("serialization round trip is the identity")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            ScenarioConfig c = builtin_scenario(name);
            CHECK(load_scenario(serialize_scenario(c)) == c);
            c.block_enabled = false;
            c.detection.exploit_detection_rate = 0.95;
            c.message_bits = 3;
            CHECK(load_scenario(serialize_scenario(c)) == c);
        }
    }

    TEST_CASE("omitting hosts is a validation error naming the subnet")
    {
        json doc = small_doc();
        doc["subnets"][1].erase("hosts");
        const ScenarioError e = load_error(doc.dump());
        CHECK(e.kind() == ScenarioError::Kind::Validation);
        CHECK(e.key() == "subnets.operational.hosts");
        CHECK(std::string(e.what()).find("empty subnet") != std::string::npos);

        doc["subnets"][1]["hosts"] = json::array();
        CHECK(load_error(doc.dump()).key() == "subnets.operational.hosts");
    }

    TEST_CASE("positive capture penalty is rejected")
    {
        json doc = small_doc();
        doc["subnets"][0]["hosts"][0]["capture_penalty"] = 1.0;
        const ScenarioError e = load_error(doc.dump());
        CHECK(e.kind() == ScenarioError::Kind::Validation);
        CHECK(e.key() == "subnets.user.hosts.user_ws0.capture_penalty");

        doc = small_doc();
        doc["penalties"]["block_cost"] = 0.5;
        CHECK(load_error(doc.dump()).key() == "penalties.block_cost");
    }

    TEST_CASE("unknown and missing keys are parse errors")
    {
        json doc = small_doc();
        doc["detection"]["detection_rate"] = 0.5;
        ScenarioError e = load_error(doc.dump());
        CHECK(e.kind() == ScenarioError::Kind::Parse);
        CHECK(e.key() == "detection.detection_rate");

        doc = small_doc();
        doc.erase("horizon");
        e = load_error(doc.dump());
        CHECK(e.kind() == ScenarioError::Kind::Parse);
        CHECK(e.key() == "horizon");

        doc = small_doc();
        doc["horizon"] = "thirty";
        CHECK(load_error(doc.dump()).key() == "horizon");

        CHECK(load_error("{ not json").kind() == ScenarioError::Kind::Parse);
    }

    TEST_CASE("structural invariants")
    {
        json doc = small_doc();
        doc["agent_count"] = 3;
        CHECK(load_error(doc.dump()).key() == "agent_count");

        doc = small_doc();
        doc["links"] = json::array({json::array({"user", "nowhere"})});
        CHECK(load_error(doc.dump()).key() == "links");

        doc = small_doc();
        doc["subnets"][1]["hosts"][2]["role"] = "Server";
        CHECK(load_error(doc.dump()).key() == "subnets");

        doc = small_doc();
        doc["subnets"][1]["hosts"][0]["id"] = "user_ws0";
        CHECK(load_error(doc.dump()).kind() == ScenarioError::Kind::Validation);

        doc = small_doc();
        doc["detection"]["scan_detection_rate"] = 1.5;
        CHECK(load_error(doc.dump()).key() == "detection.scan_detection_rate");

        doc = small_doc();
        doc["horizon"] = 0;
        CHECK(load_error(doc.dump()).key() == "horizon");
    }

    TEST_CASE("links are symmetric in the topology")
    {
        const Topology t(builtin_scenario("large"));
        for (int s = 0; s < 3; ++s)
            for (int u = 0; u < 3; ++u) CHECK(t.link_between(s, u) == t.link_between(u, s));
        CHECK(t.link_between(0, 0) == -1);
    }
}
