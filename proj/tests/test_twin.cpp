#include "evtwin/twin.hpp"

#include <gtest/gtest.h>

using namespace evtwin;
using nlohmann::json;

namespace {

ScenarioConfig busy_campus(int evs = 200)
{
    auto c = campus_scenario();
    c.nb_electrical = evs;
    c.weather_ref = "synth:q2";
    c.horizon_days = 2;
    return c;
}

json step(int n) { return {{"command", "step"}, {"n", n}}; }

const json& area(const json& snap, const std::string& id)
{
    for (const auto& a : snap["areas"])
        if (a["area_id"] == id) return a;
    throw std::logic_error("no area " + id);
}

int expect_status(Twin& t, const json& cmd)
{
    try {
        t.apply(cmd);
    } catch (const CommandError& e) {
        return e.status();
    }
    return 200;
}

} // namespace

TEST(Twin, StartsPausedAtTickZero)
{
    Twin t(busy_campus(50));
    EXPECT_EQ(t.mode(), RunMode::paused);
    EXPECT_EQ(t.tick(), 0);
    EXPECT_EQ(t.snapshot()["tick"], 0);
    EXPECT_EQ(t.snapshot()["vehicle_count"], 80);
    EXPECT_EQ(t.snapshot()["schema_version"], kApiSchemaVersion);
}

TEST(Twin, PausedSnapshotsAreEqual)
{
    Twin t(busy_campus());
    t.apply(step(120));
    t.apply({{"command", "pause"}});
    const json a = t.snapshot();
    const auto ha = t.snapshot_hash();
    EXPECT_EQ(t.snapshot(), a);
    EXPECT_EQ(t.snapshot_hash(), ha);
    EXPECT_EQ(t.tick(), 120);
}

TEST(Twin, StepAckCarriesTicks)
{
    Twin t(busy_campus());
    const auto ack = t.apply(step(7));
    EXPECT_EQ(ack["applied_at_tick"], 0);
    EXPECT_EQ(ack["advanced"], 7);
    EXPECT_EQ(ack["tick"], 7);
    const auto ack2 = t.apply({{"command", "start"}, {"speed", 60}});
    EXPECT_EQ(ack2["applied_at_tick"], 7);
    EXPECT_EQ(t.mode(), RunMode::running);
    EXPECT_EQ(t.speed(), 60);
}

TEST(Twin, RejectsBadCommands)
{
    Twin t(busy_campus());
    EXPECT_EQ(expect_status(t, {{"command", "start"}, {"speed", 7}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "warp"}}), 400);
    EXPECT_EQ(expect_status(t, json::object()), 400);
    EXPECT_EQ(expect_status(t, step(0)), 400);
    EXPECT_EQ(expect_status(t, {{"command", "reset"}, {"seed", -3}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "reset"}, {"seed", 1.5}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "set_ports"}, {"area", "C-Parking"}, {"n30", 12}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "set_ports"}, {"area", "K-Parking"}, {"n11", 1}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "set_policies"}, {"policies", {{"idle_comply_prob_per_check", 2.0}}}}), 400);
    EXPECT_EQ(expect_status(t, {{"command", "set_policies"}, {"policies", {{"idle_fee", "yes"}}}}), 400);
    EXPECT_TRUE(t.command_log().empty());
    try {
        t.apply({{"command", "set_ports"}, {"area", "C-Parking"}, {"n30", 12}});
    } catch (const CommandError& e) {
        EXPECT_TRUE(e.body().contains("violations"));
    }
}

TEST(Twin, NotificationTakesEffectAtCommandBoundary)
{
    auto c = busy_campus();
    c.policies.relocate_full = true;
    Twin t(c);
    t.apply(step(9 * 12));
    const auto ack = t.apply({{"command", "set_policies"}, {"policies", {{"notification", true}}}});
    const std::int64_t at = ack["applied_at_tick"];
    EXPECT_TRUE(t.config().policies.notification);
    EXPECT_TRUE(t.config().policies.relocate_full);
    t.apply(step(200));
    std::optional<std::int64_t> first;
    for (const auto& e : t.events())
        if (e.event == "notify" || e.event == "enqueue") {
            first = e.tick;
            break;
        }
    ASSERT_TRUE(first);
    EXPECT_GE(*first, at);
}

TEST(Twin, ShrinkingPortsDrainsAsSessionsEnd)
{
    auto c = busy_campus();
    c.areas[0].n_ports_11kw = 20;
    c.areas[0].n_ports_30kw = 0;
    Twin t(c);
    while (area(t.snapshot(), "C-Parking")["occupied_11kw"].get<int>() < 12) {
        ASSERT_LT(t.tick(), 14 * 12) << "C-Parking never reached 12 occupied ports";
        t.apply(step(1));
    }
    const int occupied = area(t.snapshot(), "C-Parking")["occupied_11kw"];
    t.apply({{"command", "set_ports"}, {"area", "C-Parking"}, {"n11", 10}});
    {
        const auto& a = area(t.snapshot(), "C-Parking");
        EXPECT_EQ(a["ports_11kw"], 10);
        EXPECT_EQ(a["occupied_11kw"], occupied);
        EXPECT_EQ(a["retiring"], occupied - 10);
    }
    int prev_total = occupied;
    while (t.tick() < kTicksPerDay - 1) {
        t.apply(step(1));
        const auto& a = area(t.snapshot(), "C-Parking");
        const int total = a["ports_11kw"].get<int>() + a["retiring"].get<int>();
        EXPECT_EQ(a["ports_11kw"], 10);
        EXPECT_LE(total, prev_total);
        EXPECT_LE(a["occupied_11kw"].get<int>(), std::max(10, total));
        prev_total = total;
    }
    EXPECT_EQ(prev_total, 10);
    EXPECT_EQ(t.config().find_area("C-Parking")->n_ports_11kw, 10);
}

TEST(Twin, SnapshotOccupancyMatchesVehicles)
{
    Twin t(busy_campus());
    for (int i = 0; i < 24; ++i) {
        t.apply(step(12));
        const auto& s = t.snapshot();
        std::map<std::string, int> on_ports;
        for (const auto& v : s["vehicles"])
            if (v["slot"] == "active_CS") ++on_ports[v["area"].get<std::string>()];
        for (const auto& a : s["areas"]) {
            const int occ = a["occupied_11kw"].get<int>() + a["occupied_30kw"].get<int>();
            EXPECT_EQ(occ, on_ports[a["area_id"].get<std::string>()]) << "tick " << s["tick"];
            EXPECT_LE(a["inactive_used"].get<int>(), a["inactive_capacity"].get<int>());
        }
        EXPECT_FALSE(s["decimated"].get<bool>());
        EXPECT_EQ(s["vehicles"].size(), s["vehicle_count"].get<std::size_t>());
        for (const auto& v : s["vehicles"]) {
            EXPECT_TRUE(v.contains("lon") && v.contains("lat"));
            EXPECT_TRUE(v.contains("node") || v.contains("edge"));
        }
    }
}

TEST(Twin, ReplayReproducesSnapshotSequence)
{
    auto c = busy_campus(120);
    Twin t(c);
    t.apply(step(50));
    t.apply({{"command", "start"}, {"speed", 12}});
    t.apply(step(40));
    t.apply({{"command", "set_policies"}, {"policies", {{"idle_fee", true}, {"notification", true}}}});
    t.apply(step(60));
    t.apply({{"command", "set_ports"}, {"area", "J-Parking"}, {"n11", 5}, {"n30", 8}});
    t.apply(step(90));
    t.apply({{"command", "pause"}});
    t.apply({{"command", "reset"}, {"seed", 9}});
    t.apply(step(30));
    t.apply({{"command", "set_ports"}, {"area", "C-Parking"}, {"n11", 40}});
    t.apply(step(25));

    std::vector<LoggedCommand> log;
    for (const auto& lc : t.command_log()) log.push_back(logged_command_from_json(to_json(lc)));
    const auto hashes = replay(t.initial_config(), log, t.ticks_since_command());
    EXPECT_EQ(hashes.size(), t.snapshot_hashes().size());
    EXPECT_EQ(hashes, t.snapshot_hashes());

    auto tampered = log;
    tampered[3].command["policies"]["idle_fee"] = false;
    EXPECT_NE(replay(t.initial_config(), tampered, t.ticks_since_command()), t.snapshot_hashes());
}

TEST(Twin, ResetRestoresInitialWorld)
{
    Twin t(busy_campus());
    const auto start = t.snapshot();
    t.apply(step(100));
    t.apply({{"command", "set_ports"}, {"area", "J-Parking"}, {"n11", 3}});
    t.apply({{"command", "reset"}});
    EXPECT_EQ(t.tick(), 0);
    EXPECT_EQ(t.snapshot(), start);
    EXPECT_EQ(t.config().find_area("J-Parking")->n_ports_11kw, 15);
}

TEST(Twin, StopsAtHorizon)
{
    auto c = busy_campus(30);
    c.horizon_days = 1;
    Twin t(c);
    const auto ack = t.apply(step(kTicksPerDay + 50));
    EXPECT_EQ(ack["advanced"], kTicksPerDay);
    EXPECT_TRUE(t.finished());
    EXPECT_TRUE(t.snapshot()["finished"].get<bool>());
}

TEST(SnapshotDelta, RoundTrip)
{
    Twin t(busy_campus());
    json prev = t.snapshot();
    for (int i = 0; i < 30; ++i) {
        t.apply(step(5));
        const json& cur = t.snapshot();
        const json d = snapshot_delta(prev, cur);
        EXPECT_LE(d["vehicles"].size(), cur["vehicles"].size());
        EXPECT_EQ(apply_delta(prev, d), cur);
        prev = cur;
    }
    json shrunk = prev;
    shrunk["vehicles"].erase(shrunk["vehicles"].size() - 1);
    const json d = snapshot_delta(prev, shrunk);
    EXPECT_EQ(d["removed"].size(), 1u);
    EXPECT_EQ(apply_delta(prev, d), shrunk);
}

TEST(SessionConfig, NullBodyGivesCampusAndErrorsCarryViolations)
{
    EXPECT_EQ(session_config(nullptr), campus_scenario());
    try {
        session_config(json{{"nb_electrical", 5}, {"areas", {{{"area_id", "X-Parking"}}}}});
        FAIL();
    } catch (const ConfigError& e) {
        ASSERT_FALSE(e.violations().empty());
    }
}
