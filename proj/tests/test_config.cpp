#include "evtwin/config.hpp"
#include "evtwin/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace evtwin;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle)
{
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

std::vector<std::string> violations_of(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.violations();
    }
    return {};
}

} // namespace

TEST(ScenarioConfig, MinimalFileTakesDefaults)
{
    const auto c = parse_scenario(R"({"nb_electrical": 50,
        "areas": [{"area_id": "C-Parking", "n_ports_11kW": 20, "n_ports_30kW": 4}]})");
    EXPECT_EQ(c.nb_electrical, 50);
    ASSERT_EQ(c.areas.size(), 1u);
    EXPECT_EQ(c.areas[0].n_ports_11kw, 20);
    EXPECT_EQ(c.areas[0].n_ports_30kw, 4);
    EXPECT_DOUBLE_EQ(c.behavior.mid_charge_prob, 0.5);
    EXPECT_EQ(c.policies.idle_grace_minutes, 30);
    EXPECT_EQ(c.policies.idle_fee_rate_per_min, 1000);
    EXPECT_EQ(c.horizon_days, 1);
}

TEST(ScenarioConfig, OmittedAreasMeanCampus)
{
    EXPECT_EQ(parse_scenario("{}"), campus_scenario());
    EXPECT_EQ(parse_scenario(R"({"nb_electrical": 80})").areas, campus_scenario().areas);
    EXPECT_TRUE(mentions(violations_of(R"({"areas": []})"), "at least one area"));
}

TEST(ScenarioConfig, EvCountBound)
{
    const auto v = violations_of(R"({"nb_electrical": 250})");
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(mentions(v, "nb_electrical")) << v.front();
    EXPECT_TRUE(mentions(v, "[30, 200]")) << v.front();
}

TEST(ScenarioConfig, FastPortBound)
{
    const auto v = violations_of(R"({"areas": [{"area_id": "C-Parking", "n_ports_30kW": 12}]})");
    EXPECT_TRUE(mentions(v, "areas[0].n_ports_30kW"));
    EXPECT_TRUE(mentions(v, "[0, 10]"));
}

TEST(ScenarioConfig, ReportsEveryViolationWithFieldPath)
{
    const auto v = violations_of(R"({"nb_electrical": 10, "horizon_days": 0,
        "behavior": {"mid_charge_prob": 1.5}, "energy": {"wind": {"nb_wind": 25}}})");
    EXPECT_TRUE(mentions(v, "nb_electrical"));
    EXPECT_TRUE(mentions(v, "horizon_days"));
    EXPECT_TRUE(mentions(v, "behavior.mid_charge_prob"));
    EXPECT_TRUE(mentions(v, "energy.wind.nb_wind"));
}

TEST(ScenarioConfig, UnknownFieldsAndWrongTypes)
{
    auto v = violations_of(R"({"nb_electric": 50})");
    EXPECT_TRUE(mentions(v, "nb_electric: unknown field"));
    v = violations_of(R"({"policies": {"idle_fee": "yes"}})");
    EXPECT_TRUE(mentions(v, "policies.idle_fee: wrong type"));
    v = violations_of("{not json");
    EXPECT_TRUE(mentions(v, "parse error"));
}

TEST(ScenarioConfig, UnknownModelIdRejected)
{
    const auto v = violations_of(R"({"behavior": {"ev_model_mix": {"Tesla": 1.0}}})");
    EXPECT_TRUE(mentions(v, "unknown model id 'Tesla'"));
}

TEST(ScenarioConfig, StartWindowMustPrecedeEndWindow)
{
    const auto v = violations_of(R"({"behavior": {"start_work_windows": [[8, 9], [16, 18]]}})");
    EXPECT_TRUE(mentions(v, "start_work_windows"));
}

TEST(ScenarioConfig, RoundTripOfDefaults)
{
    const auto c = campus_scenario();
    EXPECT_EQ(parse_scenario(dump_scenario(c)), c);
}

TEST(ScenarioConfig, RoundTripOfRandomValidConfigs)
{
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        ScenarioConfig c = campus_scenario();
        c.nb_electrical = static_cast<int>(rng.uniform_int(30, 200));
        c.nb_gasoline = static_cast<int>(rng.uniform_int(0, 60));
        c.horizon_days = static_cast<int>(rng.uniform_int(1, 40));
        c.rng_seed = rng.next();
        for (auto& a : c.areas) {
            a.n_ports_11kw = static_cast<int>(rng.uniform_int(0, 50));
            a.n_ports_30kw = static_cast<int>(rng.uniform_int(0, 10));
            a.n_inactive_slots = static_cast<int>(rng.uniform_int(0, 100));
        }
        c.policies.ban_gasoline = rng.bernoulli(0.5);
        c.policies.idle_fee = rng.bernoulli(0.5);
        c.policies.relocate_full = rng.bernoulli(0.5);
        c.policies.notification = rng.bernoulli(0.5);
        c.policies.idle_comply_prob_per_check = rng.uniform();
        c.behavior.mid_charge_prob = rng.uniform();
        c.behavior.priority_fast_prob = rng.uniform();
        c.energy.pv.nb_solar = static_cast<int>(rng.uniform_int(0, 1000));
        c.energy.wind.nb_wind = static_cast<int>(rng.uniform_int(0, 20));
        c.energy.bess.capacity_kwh = rng.uniform(0, 500);
        c.objective.alternate_payback = rng.bernoulli(0.5);
        ASSERT_TRUE(validate(c).empty());
        const auto back = parse_scenario(dump_scenario(c));
        EXPECT_EQ(back, c);
        EXPECT_EQ(dump_scenario(back), dump_scenario(c));
    }
}

TEST(ScenarioConfig, LargeSeedSurvivesRoundTrip)
{
    auto c = campus_scenario();
    c.rng_seed = 18'446'744'073'709'551'615ULL;
    EXPECT_EQ(parse_scenario(dump_scenario(c)).rng_seed, c.rng_seed);
    EXPECT_FALSE(violations_of(R"({"rng_seed": -4})").empty());
}

TEST(ScenarioConfig, LoadResolvesRelativeReferencesAndChecksAreas)
{
    const auto dir = std::filesystem::temp_directory_path() / "evtwin_config_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "site.geojson") << default_site_geojson();
    std::ofstream(dir / "ok.json") << R"({"site_ref": "site.geojson", "weather_ref": "w.csv",
        "areas": [{"area_id": "C-Parking", "n_ports_11kW": 4}]})";
    const auto c = load_scenario(dir / "ok.json");
    EXPECT_EQ(std::filesystem::path(c.site_ref), (dir / "site.geojson").lexically_normal());
    EXPECT_EQ(std::filesystem::path(c.weather_ref), (dir / "w.csv").lexically_normal());

    std::ofstream(dir / "bad.json") << R"({"site_ref": "site.geojson", "areas": [{"area_id": "K-Parking"}]})";
    try {
        load_scenario(dir / "bad.json");
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(mentions(e.violations(), "unknown area id 'K-Parking'"));
    }
    EXPECT_THROW(load_scenario(dir / "missing.json"), ConfigError);
}

TEST(ScenarioConfig, SampleScenariosLoad)
{
    for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(EVTWIN_DATA_DIR) / "scenarios")) {
        SCOPED_TRACE(entry.path().string());
        const auto c = load_scenario(entry.path());
        EXPECT_TRUE(validate(c).empty());
    }
}
