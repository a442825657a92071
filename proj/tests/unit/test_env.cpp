#include <doctest.h>

#include <algorithm>

#include "cyberdial/adversary.hpp"
#include "cyberdial/env.hpp"
#include "support/env_oracle.hpp"

using namespace cyberdial;

namespace {

std::shared_ptr<const ScenarioConfig> shared(ScenarioConfig c) { return std::make_shared<const ScenarioConfig>(std::move(c)); }

ScenarioConfig no_red(const char* name = "small")
{
    ScenarioConfig c = builtin_scenario(name);
    c.red_enabled = false;
    return c;
}

int host_index(const WorldState& w, int subnet, int local) { return w.topology->subnet_hosts[subnet][local]; }

std::vector<int> sleep_all(const WorldState& w) { return std::vector<int>(w.config->agent_count, 0); }

int random_allowed(const ActionMask& m, Rng& rng)
{
    std::vector<int> ok;
    for (int i = 0; i < m.size(); ++i)
        if (m[i]) ok.push_back(i);
    return ok[rng.index(ok.size())];
}

std::string status_bits(const Observation& o, int i)
{
    return std::to_string(o.bits[4 * i + 2]) + std::to_string(o.bits[4 * i + 3]);
}

}  // namespace

TEST_SUITE("env")
{
    TEST_CASE("reset is deterministic in the seed")
    {
        const auto c = shared(builtin_scenario("small"));
        const ResetResult a = reset(c, 7), b = reset(c, 7);
        CHECK(a.world == b.world);
        CHECK(a.observations == b.observations);
        CHECK(a.alerts == b.alerts);
        bool differs = false;
        for (std::uint64_t s = 0; s < 20 && !differs; ++s) differs = !(reset(c, s).world == a.world);
        CHECK(differs);
    }

    TEST_CASE("reset: red holds one user shell in the User subnet, links open, clock zero")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            const auto c = shared(builtin_scenario(name));
            for (std::uint64_t seed = 0; seed < 50; ++seed) {
                const ResetResult r = reset(c, seed);
                int shells = 0;
                for (int h = 0; h < r.world.topology->host_count; ++h)
                    if (r.world.hosts[h].foothold != Foothold::None) {
                        ++shells;
                        CHECK(r.world.hosts[h].foothold == Foothold::UserShell);
                        CHECK(c->subnets[r.world.topology->host_subnet[h]].kind == SubnetKind::User);
                    }
                CHECK(shells == 1);
                CHECK(r.world.timestep == 0);
                CHECK(std::none_of(r.world.blocked.begin(), r.world.blocked.end(), [](bool b) { return b; }));
            }
        }
    }

    TEST_CASE("reset observations are zero apart from the initial exploit alert")
    {
        // Both detection outcomes, simulated independently.
        for (const double rate : {0.0, 1.0, 0.5}) {
            ScenarioConfig c = builtin_scenario("small");
            c.detection.exploit_detection_rate = rate;
            const auto sc = shared(c);
            for (std::uint64_t seed = 0; seed < 40; ++seed) {
                const ResetResult r = reset(sc, seed);
                oracle::Env o(c, seed);
                REQUIRE(r.alerts == o.reset_alerts());
                for (int s = 0; s < 2; ++s) CHECK(r.observations[s] == o.observe(s));
                const bool seen = r.alerts[0].raised;
                if (rate == 0.0) CHECK_FALSE(seen);
                if (rate == 1.0) CHECK(seen);
                const int start = r.world.red.start_host;
                for (int s = 0; s < 2; ++s)
                    for (int i = 0; i < r.observations[s].host_count; ++i) {
                        const std::string g = r.observations[s].to_string().substr(5 * i, 4);
                        const bool is_start = host_index(r.world, s, i) == start;
                        CHECK(g == (is_start && seen ? "0101" : "0000"));
                    }
            }
        }
    }

    TEST_CASE("reset on large gives three observations ending in 00")
    {
        const ResetResult r = reset(builtin_scenario("large"), 3);
        REQUIRE(r.observations.size() == 3);
        for (const Observation& o : r.observations) {
            CHECK(o.block_bit_count() == 2);
            CHECK(o.bits[o.bits.size() - 2] == 0);
            CHECK(o.bits.back() == 0);
        }
    }

    TEST_CASE("masks on a clean observation")
    {
        const ResetResult r = reset(no_red(), 1);
        const Topology& t = *r.world.topology;
        for (int a = 0; a < 2; ++a) {
            const int n = static_cast<int>(t.subnet_hosts[a].size());
            const ActionMask quiet = action_mask(r.world, a, false, true);
            CHECK(quiet.count() == 2);  // Sleep + one Block
            CHECK(quiet[0]);
            CHECK(quiet[1 + 3 * n]);

            const ActionMask sau = action_mask(r.world, a, true, true);
            for (int i = 0; i < n; ++i) {
                CHECK(sau[1 + 2 * n + i]);
                CHECK_FALSE(sau[1 + i]);
                CHECK_FALSE(sau[1 + n + i]);
            }
            CHECK(action_mask(r.world, a, true, false) == quiet);
        }
    }

    TEST_CASE("observation-only mask agrees with the world mask")
    {
        const auto c = shared(builtin_scenario("small_green"));
        Rng rng(4);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            WorldState w = reset(c, seed).world;
            while (!w.done()) {
                std::vector<int> acts;
                for (int a = 0; a < 2; ++a) {
                    const Observation o = encode_observation(w, a);
                    for (bool msg : {false, true})
                        for (bool sau : {false, true})
                            CHECK(action_mask(*w.topology, true, a, o, msg, sau) == action_mask(w, a, msg, sau));
                    acts.push_back(random_allowed(action_mask(w, a, false, false), rng));
                }
                step(w, acts);
            }
        }
    }

    TEST_CASE("block disabled masks every Block action")
    {
        ScenarioConfig c = builtin_scenario("small");
        c.block_enabled = false;
        const ResetResult r = reset(c, 0);
        const ActionMask m = action_mask(r.world, 1, false, false);
        CHECK(m.count() == 1);
    }

    TEST_CASE("Remove clears a user shell without a wasted penalty")
    {
        WorldState w = reset(no_red(), 2).world;
        const int h = host_index(w, 1, 0);
        w.hosts[h].foothold = Foothold::UserShell;
        w.hosts[h].suspected = true;
        std::vector<int> acts{0, 1};
        const StepOutcome out = step(w, acts);
        CHECK(w.hosts[h].foothold == Foothold::None);
        CHECK_FALSE(out.blue[1].wasted);
        CHECK(out.breakdown.wasted == 0.0);
        CHECK(out.reward == 0.0);
        CHECK(w.red.lost_sessions[h]);
    }

    TEST_CASE("Remove leaves a privileged shell in place and Restore clears it")
    {
        WorldState w = reset(no_red(), 2).world;
        const int h = host_index(w, 1, 1);
        w.hosts[h].foothold = Foothold::PrivilegedShell;
        w.hosts[h].suspected = true;
        std::vector<int> remove{0, 2};
        StepOutcome out = step(w, remove);
        CHECK(w.hosts[h].foothold == Foothold::PrivilegedShell);
        CHECK_FALSE(out.blue[1].wasted);
        CHECK(out.reward == doctest::Approx(-1.0));  // server capture accrues

        std::vector<int> restore{0, 1 + 3 + 1};
        out = step(w, restore);
        CHECK(w.hosts[h].foothold == Foothold::None);
        CHECK(out.breakdown.restore == -0.5);
        CHECK(out.breakdown.capture == 0.0);
    }

    TEST_CASE("Analyse on a clean host costs 0.5")
    {
        WorldState w = reset(no_red(), 2).world;
        std::vector<int> acts{1 + 2 * 3, 0};
        MaskContext ctx{true, {true, false}};
        const StepOutcome out = step(w, acts, ctx);
        CHECK(out.reward == -0.5);
        CHECK(out.blue[0].wasted);
    }

    TEST_CASE("Block toggles the link at 1.0 per use")
    {
        WorldState w = reset(no_red(), 2).world;
        std::vector<int> acts{1 + 3 * 3, 0};
        StepOutcome out = step(w, acts);
        CHECK(w.blocked[0]);
        CHECK(out.reward == -1.0);
        CHECK(out.observations[0].bits.back() == 1);
        CHECK(out.observations[1].bits.back() == 1);
        out = step(w, acts);
        CHECK_FALSE(w.blocked[0]);
        CHECK(out.reward == -1.0);
    }

    TEST_CASE("reward examples")
    {
        WorldState w = reset(no_red(), 0).world;
        const int op = w.topology->operational_server;
        w.hosts[op].foothold = Foothold::PrivilegedShell;
        CHECK(compute_reward(w, {}).total() == -10.0);

        w.hosts[op].foothold = Foothold::None;
        CHECK(compute_reward(w, {}).total() == 0.0);

        // brute-force oracle: sum the table entries that apply
        const int ws = host_index(w, 0, 1);
        w.hosts[ws].foothold = Foothold::PrivilegedShell;
        const std::vector<AppliedBlueAction> applied{{{BlueActionKind::Block, -1, 0}, false},
                                                     {{BlueActionKind::Sleep, -1, -1}, false}};
        double expected = 0.0;
        for (const auto& s : w.config->subnets)
            for (const auto& h : s.hosts)
                if (h.id == w.config->subnets[0].hosts[1].id) expected += h.capture_penalty;
        expected += w.config->penalty_table.block_cost;
        CHECK(expected == doctest::Approx(-1.1));
        CHECK(compute_reward(w, applied).total() == doctest::Approx(expected));
    }

    TEST_CASE("observation status codes")
    {
        ScenarioConfig c = no_red();
        c.detection.exploit_detection_rate = 1.0;
        WorldState w = reset(c, 0).world;
        const int h = host_index(w, 0, 2);
        CHECK(encode_observation(w, 0).to_string().substr(10, 4) == "0000");

        w.hosts[h].foothold = Foothold::UserShell;
        w.hosts[h].alerts_this_step = kExploitAlert;
        w.hosts[h].suspected = true;
        CHECK(encode_observation(w, 0).to_string().substr(10, 4) == "0101");

        w.hosts[h].foothold = Foothold::PrivilegedShell;
        std::vector<int> analyse{1 + 2 * 3 + 2, 0};
        const StepOutcome out = step(w, analyse);
        CHECK(status_bits(out.observations[0], 2) == "11");
        CHECK(out.observations[0].to_string().substr(10, 4) == "0011");

        w.hosts[h].foothold = Foothold::UserShell;
        CHECK(status_bits(encode_observation(w, 0), 2) == "10");
    }

    TEST_CASE("masked actions and finished episodes are rejected")
    {
        WorldState w = reset(no_red(), 0).world;
        std::vector<int> remove{1, 0};
        try {
            step(w, remove);
            FAIL("masked action accepted");
        } catch (const MaskedActionError& e) {
            CHECK(e.agent() == 0);
            CHECK(e.index() == 1);
        }
        CHECK(w.timestep == 0);
        for (int t = 0; t < 30; ++t) step(w, sleep_all(w));
        CHECK(w.done());
        CHECK_THROWS_AS(step(w, sleep_all(w)), EpisodeFinishedError);
    }

    TEST_CASE("engine matches the flat oracle step for step")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            for (const double det : {0.5, 0.95}) {
                ScenarioConfig c = builtin_scenario(name);
                c.detection.exploit_detection_rate = det;
                c.detection.scan_detection_rate = det;
                const auto sc = shared(c);
                Rng pick(99);
                for (std::uint64_t seed = 0; seed < 30; ++seed) {
                    WorldState w = reset(sc, seed).world;
                    oracle::Env o(c, seed);
                    const bool sau = seed % 2 == 0;
                    while (!w.done()) {
                        std::vector<int> acts;
                        MaskContext ctx{sau, {}};
                        for (int a = 0; a < c.agent_count; ++a) {
                            const bool msg = pick.bernoulli(0.3);
                            ctx.message_nonzero.push_back(msg);
                            const ActionMask m = action_mask(w, a, msg, sau);
                            REQUIRE(m.allowed == o.mask(a, msg, sau));
                            acts.push_back(random_allowed(m, pick));
                        }
                        const StepOutcome got = step(w, acts, ctx);
                        const StepOutcome want = o.step(acts);
                        REQUIRE(got == want);
                    }
                    CHECK(o.done());
                }
            }
        }
    }

    TEST_CASE("fuzz: rewards bounded, masks enforced, identical replays")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            const auto c = shared(builtin_scenario(name));
            const double worst = worst_step_penalty(*c);
            Rng pick(5);
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                WorldState w = reset(c, seed).world;
                WorldState twin = w;
                double ret = 0.0;
                while (!w.done()) {
                    std::vector<int> acts;
                    for (int a = 0; a < c->agent_count; ++a) {
                        const ActionMask m = action_mask(w, a, false, false);
                        for (int i = 0; i < m.size(); ++i) {
                            if (m[i]) continue;
                            WorldState probe = w;
                            std::vector<int> bad = sleep_all(w);
                            bad[a] = i;
                            CHECK_THROWS_AS(step(probe, bad), MaskedActionError);
                        }
                        acts.push_back(random_allowed(m, pick));
                    }
                    const StepOutcome out = step(w, acts);
                    CHECK(step(twin, acts) == out);
                    CHECK(out.reward <= 0.0);
                    CHECK(out.reward >= worst);
                    CHECK(out.done == (w.timestep == c->horizon));
                    ret += out.reward;
                }
                CHECK(ret >= c->horizon * worst);
            }
        }
    }

    TEST_CASE("all links blocked from the start confine red to its subnet")
    {
        for (const char* name : {"small", "small_green", "large"}) {
            const auto c = shared(builtin_scenario(name));
            for (std::uint64_t seed = 0; seed < 1000; ++seed) {
                WorldState w = reset(c, seed).world;
                std::fill(w.blocked.begin(), w.blocked.end(), true);
                const int start = w.topology->start_subnet;
                bool escaped = false;
                while (!w.done() && !escaped) {
                    step(w, sleep_all(w));
                    for (int h = 0; h < w.topology->host_count; ++h)
                        escaped = escaped ||
                                  (w.hosts[h].foothold != Foothold::None && w.topology->host_subnet[h] != start);
                }
                CHECK_FALSE(escaped);
            }
        }
    }

    TEST_CASE("perfect detection flags every exploit on the target's observation")
    {
        for (const char* name : {"small", "large"}) {
            ScenarioConfig c = builtin_scenario(name);
            c.detection.exploit_detection_rate = 1.0;
            const auto sc = shared(c);
            int exploits = 0;
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                WorldState w = reset(sc, seed).world;
                while (!w.done()) {
                    const StepOutcome out = step(w, sleep_all(w));
                    if (out.red.kind == RedActionKind::Exploit || out.red.kind == RedActionKind::Reestablish) {
                        ++exploits;
                        const int s = w.topology->host_subnet[out.red.target];
                        const auto& members = w.topology->subnet_hosts[s];
                        const int local =
                            static_cast<int>(std::find(members.begin(), members.end(), out.red.target) - members.begin());
                        CHECK(out.observations[s].bits[4 * local + 1] == 1);
                    }
                }
            }
            CHECK(exploits > 0);
        }
    }

    TEST_CASE("observations never depend on other subnets")
    {
        const auto c = shared(builtin_scenario("large"));
        Rng rng(8);
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            WorldState w = reset(c, seed).world;
            for (int t = 0; t < 20; ++t) step(w, sleep_all(w));
            for (int a = 0; a < 3; ++a) {
                const Observation before = encode_observation(w, a);
                WorldState other = w;
                for (int h = 0; h < other.topology->host_count; ++h) {
                    if (other.topology->host_subnet[h] == a) continue;
                    auto& host = other.hosts[h];
                    host.foothold = static_cast<Foothold>(rng.index(3));
                    host.alerts_this_step = static_cast<std::uint8_t>(rng.index(4));
                    host.confirmed_by_analyse = rng.bernoulli(0.5);
                    host.suspected = rng.bernoulli(0.5);
                }
                // links not incident to a: in the triangle every link touches
                // two of the three subnets, so leave link state alone
                CHECK(encode_observation(other, a) == before);
            }
        }
    }

    TEST_CASE("action encoding round trips")
    {
        const ScenarioConfig c = builtin_scenario("large");
        const Topology t(c);
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < t.action_count(a); ++i) CHECK(encode_action(t, a, decode_action(t, a, i)) == i);
        CHECK(decode_action(t, 0, 0).kind == BlueActionKind::Sleep);
        CHECK(decode_action(t, 0, 1).kind == BlueActionKind::Remove);
        CHECK(decode_action(t, 0, 6).kind == BlueActionKind::Restore);
        CHECK(decode_action(t, 0, 11).kind == BlueActionKind::Analyse);
        CHECK(decode_action(t, 0, 16).kind == BlueActionKind::Block);
    }
}

TEST_SUITE("adversary")
{
    TEST_CASE("privileged shell on the operational server means Impact")
    {
        WorldState w = reset(builtin_scenario("small"), 0).world;
        w.hosts[w.topology->operational_server].foothold = Foothold::PrivilegedShell;
        Rng rng(1);
        const Rng before = rng;
        CHECK(red_decide(w, rng) == RedAction{RedActionKind::Impact, w.topology->operational_server});
        CHECK(rng == before);  // Impact draws nothing
    }

    TEST_CASE("fresh reset: escalate the start host")
    {
        for (const char* name : {"small", "large"})
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                const WorldState w = reset(builtin_scenario(name), seed).world;
                Rng rng(seed);
                CHECK(red_decide(w, rng) == RedAction{RedActionKind::Escalate, w.red.start_host});
            }
    }

    TEST_CASE("nothing to do means Idle")
    {
        WorldState w = reset(builtin_scenario("large"), 0).world;
        for (auto& h : w.hosts) h.foothold = Foothold::None;
        std::fill(w.red.knowledge.begin(), w.red.knowledge.end(), Knowledge::Unknown);
        std::fill(w.blocked.begin(), w.blocked.end(), true);
        Rng rng(1);
        CHECK(red_decide(w, rng).kind == RedActionKind::Idle);
    }

    TEST_CASE("Exploit on a scanned host opens a user shell and raises an exploit candidate")
    {
        WorldState w = reset(builtin_scenario("small"), 0).world;
        int h = host_index(w, 0, 0) == w.red.start_host ? host_index(w, 0, 1) : host_index(w, 0, 0);
        w.red.knowledge[h] = Knowledge::Scanned;
        const auto c = red_apply(w, {RedActionKind::Exploit, h});
        CHECK(w.hosts[h].foothold == Foothold::UserShell);
        REQUIRE(c.has_value());
        CHECK(*c == AlertCandidate{h, AlertKind::Exploit, AlertSource::Red});
    }

    TEST_CASE("Escalate is silent")
    {
        WorldState w = reset(builtin_scenario("small"), 0).world;
        const int h = w.red.start_host;
        CHECK_FALSE(red_apply(w, {RedActionKind::Escalate, h}).has_value());
        CHECK(w.hosts[h].foothold == Foothold::PrivilegedShell);
    }

    TEST_CASE("ScanHost raises a scan candidate and DiscoverSubnet reveals hosts")
    {
        WorldState w = reset(builtin_scenario("small"), 0).world;
        const int h = w.red.start_host == host_index(w, 0, 0) ? host_index(w, 0, 1) : host_index(w, 0, 0);
        const auto c = red_apply(w, {RedActionKind::ScanHost, h});
        REQUIRE(c.has_value());
        CHECK(c->kind == AlertKind::Scan);
        CHECK(w.red.knowledge[h] == Knowledge::Scanned);

        w.hosts[w.red.start_host].foothold = Foothold::PrivilegedShell;
        CHECK_FALSE(red_apply(w, {RedActionKind::DiscoverSubnet, 1}).has_value());
        for (int x : w.topology->subnet_hosts[1]) CHECK(w.red.knowledge[x] == Knowledge::Discovered);
    }

    TEST_CASE("Exploit across a blocked link is illegal")
    {
        WorldState w = reset(builtin_scenario("small"), 0).world;
        const int target = host_index(w, 1, 0);
        w.red.known_subnets[1] = true;
        w.red.knowledge[target] = Knowledge::Scanned;
        w.blocked[0] = true;
        CHECK_THROWS_AS(red_apply(w, {RedActionKind::Exploit, target}), IllegalRedTransition);
        w.blocked[0] = false;
        CHECK_NOTHROW(red_apply(w, {RedActionKind::Exploit, target}));
    }

    TEST_CASE("green: zero rate, forced branch, determinism")
    {
        const WorldState w = reset(builtin_scenario("small_green"), 0).world;
        DetectionProfile off;
        off.green_activity_rate = 0.0;
        Rng rng(3);
        for (int i = 0; i < 500; ++i) CHECK_FALSE(green_step(w, off, rng).has_value());

        DetectionProfile forced;
        forced.green_activity_rate = 1.0;
        forced.green_false_alarm_rate = 1.0;
        for (int i = 0; i < 500; ++i) {
            const auto c = green_step(w, forced, rng);
            REQUIRE(c.has_value());
            CHECK(c->kind == AlertKind::Exploit);
            CHECK(c->source == AlertSource::Green);
            CHECK(w.topology->host_subnet[c->host] == w.topology->start_subnet);
        }

        Rng a(11), b(11);
        for (int i = 0; i < 200; ++i) CHECK(green_step(w, w.config->detection, a) == green_step(w, w.config->detection, b));
    }

    TEST_CASE("knowledge only grows and red stays inside known subnets without blue interference")
    {
        for (const char* name : {"small", "large"}) {
            const auto c = shared(builtin_scenario(name));
            for (std::uint64_t seed = 0; seed < 200; ++seed) {
                WorldState w = reset(c, seed).world;
                while (!w.done()) {
                    const RedState before = w.red;
                    const StepOutcome out = step(w, sleep_all(w));
                    for (std::size_t h = 0; h < before.knowledge.size(); ++h) CHECK(w.red.knowledge[h] >= before.knowledge[h]);
                    if (out.red.kind != RedActionKind::Idle && out.red.kind != RedActionKind::DiscoverSubnet)
                        CHECK(before.known_subnets[w.topology->host_subnet[out.red.target]]);
                }
            }
        }
    }

    TEST_CASE("unopposed red captures the operational server within the pinned bound")
    {
        // Frozen from simulating the priority policy over 2000 seeds.
        struct Pin {
            const char* name;
            int earliest;
            int latest;
        };
        for (const Pin& pin : {Pin{"small", 11, 17}, Pin{"small_green", 11, 17}, Pin{"large", 17, 33}}) {
            const auto c = shared(builtin_scenario(pin.name));
            int lo = 1 << 30, hi = -1;
            for (std::uint64_t seed = 0; seed < 2000; ++seed) {
                WorldState w = reset(c, seed).world;
                const int op = w.topology->operational_server;
                int first = -1;
                while (!w.done() && first < 0) {
                    step(w, sleep_all(w));
                    if (w.hosts[op].foothold == Foothold::PrivilegedShell) first = w.timestep;
                }
                REQUIRE(first > 0);
                lo = std::min(lo, first);
                hi = std::max(hi, first);
            }
            INFO(pin.name);
            CHECK(lo == pin.earliest);
            CHECK(hi == pin.latest);
        }
    }
}
