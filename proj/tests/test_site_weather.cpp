#include "evtwin/rng.hpp"
#include "evtwin/site.hpp"
#include "evtwin/weather.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace evtwin;

namespace {

std::string day_csv(int rows, int skip_row = -1, int duplicate_row = -1)
{
    std::ostringstream os;
    os << kWeatherHeader << '\n';
    const std::int64_t start = *parse_timestamp("2024-07-01T00:00");
    for (int i = 0; i < rows; ++i) {
        if (i == skip_row) continue;
        const int t = i == duplicate_row ? i - 1 : i;
        os << format_timestamp(start + t * 5) << ',' << 5.0 * (i % 200) << ',' << 25 + 0.1 * i << ',' << 2.0 << '\n';
    }
    return os.str();
}

SiteGraph line_graph()
{
    SiteGraph g;
    g.add_node({"A", NodeKind::residential, 0, 0, ""});
    g.add_node({"B", NodeKind::junction, 0, 0, ""});
    g.add_node({"C", NodeKind::parking, 0, 0, "C-Parking"});
    g.add_node({"D", NodeKind::junction, 0, 0, ""});
    g.add_road("A", "B", 300, 5);
    g.add_road("B", "C", 600, 10);
    return g;
}

} // namespace

TEST(Weather, FullDayParses)
{
    std::istringstream in(day_csv(288));
    const auto s = parse_weather_csv(in);
    EXPECT_EQ(s.size(), 288u);
}

TEST(Weather, DuplicateTimestampNamesRow)
{
    std::istringstream in(day_csv(10, -1, 5));
    try {
        parse_weather_csv(in);
        FAIL();
    } catch (const WeatherError& e) {
        EXPECT_NE(std::string(e.what()).find("row 7"), std::string::npos) << e.what();
    }
}

TEST(Weather, SingleGapIsInterpolated)
{
    std::istringstream in(day_csv(10, 4));
    const auto s = parse_weather_csv(in);
    ASSERT_EQ(s.size(), 10u);
    EXPECT_DOUBLE_EQ(s.records[4].ghi, (s.records[3].ghi + s.records[5].ghi) / 2);
    EXPECT_DOUBLE_EQ(s.records[4].air_temp, (s.records[3].air_temp + s.records[5].air_temp) / 2);
    EXPECT_EQ(s.records[4].minute, s.records[3].minute + 5);
}

TEST(Weather, RejectsBadRows)
{
    std::istringstream bad_header("time,ghi\n");
    EXPECT_THROW(parse_weather_csv(bad_header), WeatherError);
    std::istringstream negative(kWeatherHeader + "\n2024-01-01T00:00,-1,20,1\n");
    EXPECT_THROW(parse_weather_csv(negative), WeatherError);
    std::istringstream big_gap(kWeatherHeader + "\n2024-01-01T00:00,1,20,1\n2024-01-01T00:30,1,20,1\n");
    EXPECT_THROW(parse_weather_csv(big_gap), WeatherError);
}

TEST(Weather, CsvRoundTrip)
{
    const auto s = synth_weather(2, 5, 2);
    std::stringstream io;
    write_weather_csv(io, s);
    const auto back = parse_weather_csv(io);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(back.records[i].minute, s.records[i].minute);
        EXPECT_NEAR(back.records[i].ghi, s.records[i].ghi, 1e-3);
    }
}

TEST(Weather, ExtensionCoversHorizon)
{
    std::istringstream in(day_csv(288));
    const auto s = parse_weather_csv(in);
    for (int days : {1, 2, 7, 30}) {
        const auto e = s.extended(days);
        EXPECT_EQ(e.size(), static_cast<std::size_t>(days) * 288);
        EXPECT_EQ(e.cyclic, days > 1);
        EXPECT_EQ(e.records.back().minute - e.records.front().minute, (days * 288 - 1) * 5);
    }
    EXPECT_EQ(resolve_weather("synth:q2", 3, 9).size(), 9u * 288);
}

TEST(SynthWeather, Deterministic)
{
    EXPECT_EQ(synth_weather(3, 1, 5), synth_weather(3, 1, 5));
    EXPECT_NE(synth_weather(3, 1, 5), synth_weather(3, 2, 5));
}

TEST(SynthWeather, SummerOutshinesWinter)
{
    for (std::uint64_t seed : {1, 2, 3, 42}) {
        const auto q1 = synth_weather(1, seed, 30);
        const auto q3 = synth_weather(3, seed, 30);
        double s1 = 0, s3 = 0;
        for (const auto& r : q1.records) s1 += r.ghi;
        for (const auto& r : q3.records) s3 += r.ghi;
        EXPECT_GE(s3 / s1, 1.2) << "seed " << seed;
    }
}

TEST(SynthWeather, DarkAtNight)
{
    for (int q = 0; q <= 4; ++q) {
        const auto s = synth_weather(q, 9, 3);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const int minute = static_cast<int>(i % 288) * 5;
            if (minute >= 20 * 60 || minute <= 4 * 60) {
                EXPECT_EQ(s.records[i].ghi, 0.0) << "q" << q << " step " << i;
            }
        }
    }
}

TEST(SynthWeather, UnknownReference)
{
    EXPECT_THROW(resolve_weather("synth:q5", 1, 1), WeatherError);
    EXPECT_THROW(resolve_weather("synth:", 1, 1), WeatherError);
}

TEST(Site, TravelTimeExamples)
{
    const auto g = line_graph();
    EXPECT_EQ(shortest_travel_time(g, "A", "A"), 0.0);
    EXPECT_DOUBLE_EQ(shortest_travel_time(g, "A", "B"), 1.0);
    EXPECT_DOUBLE_EQ(shortest_travel_time(g, "A", "C"), 2.0);
    EXPECT_EQ(shortest_travel_time(g, "A", "D"), kUnreachable);
    EXPECT_THROW(shortest_travel_time(g, "A", "Z"), SiteError);
}

TEST(Site, TriangleInequalityOnCampus)
{
    const auto g = default_site();
    const std::size_t n = g.nodes().size();
    std::vector<std::vector<double>> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(g.travel_times_from(i));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) EXPECT_LE(d[a][c], d[a][b] + d[b][c] + 1e-9);
}

TEST(Site, CampusIsGatedAndConnected)
{
    const auto g = default_site();
    EXPECT_TRUE(g.validate().empty());
    EXPECT_TRUE(g.parking_node("C-Parking"));
    EXPECT_TRUE(g.parking_node("J-Parking"));
    EXPECT_EQ(g.nodes_of(NodeKind::residential).size(), 4u);
}

TEST(Site, UngatedParkingRejected)
{
    auto fc = nlohmann::json::parse(default_site_geojson());
    fc["features"].push_back({{"type", "Feature"},
                              {"geometry", {{"type", "LineString"}, {"coordinates", {{0, 0}, {0, 0}}}}},
                              {"properties", {{"kind", "road"}, {"from", "R1"}, {"to", "PC"}, {"length_m", 100}}}});
    EXPECT_THROW(parse_site_geojson(fc), SiteError);
}

TEST(Site, ShippedGeoJsonMatchesBuiltIn)
{
    const auto shipped = load_site(std::filesystem::path(EVTWIN_DATA_DIR) / "campus_site.geojson");
    EXPECT_EQ(shipped.geojson(), default_site().geojson());
}
