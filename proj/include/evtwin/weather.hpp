#ifndef EVTWIN_WEATHER_HPP
#define EVTWIN_WEATHER_HPP

#include "evtwin/config.hpp"
#include "evtwin/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

inline const std::string kWeatherHeader = "timestamp,ghi_w_m2,air_temp_c,wind_speed_m_s";

struct WeatherRecord
{
    std::int64_t minute = 0; ///< minutes since 1970-01-01T00:00Z
    double ghi = 0.0;
    double air_temp = 0.0;
    double wind_speed_ref = 0.0;

    bool operator==(const WeatherRecord&) const = default;
};

/// Uniform 5-minute series. `at` wraps around when the series is shorter than the request.
struct WeatherSeries
{
    std::vector<WeatherRecord> records;
    bool cyclic = false; ///< set when values were repeated to cover a horizon

    std::size_t size() const { return records.size(); }
    const WeatherRecord& at(std::size_t step) const { return records[step % records.size()]; }

    /// Exactly `days` x 288 records, repeating from the start when needed.
    WeatherSeries extended(int days) const
    {
        if (records.empty()) throw std::invalid_argument("cannot extend an empty weather series");
        const std::size_t n = static_cast<std::size_t>(days) * kTicksPerDay;
        WeatherSeries out;
        out.cyclic = cyclic || n > records.size();
        out.records.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            WeatherRecord r = records[i % records.size()];
            r.minute = records.front().minute + static_cast<std::int64_t>(i) * kTimestepMinutes;
            out.records.push_back(r);
        }
        return out;
    }

    bool operator==(const WeatherSeries&) const = default;
};

class WeatherError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM]`. Offsets are ignored: timestamps are site-local.
inline std::optional<std::int64_t> parse_timestamp(const std::string& s)
{
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed) < 6) return std::nullopt;
    if (sep != 'T' && sep != ' ') return std::nullopt;
    std::string rest = s.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest[0] == ':') {
        int c2 = 0;
        if (std::sscanf(rest.c_str(), ":%2d%n", &sec, &c2) < 1) return std::nullopt;
        rest = rest.substr(static_cast<std::size_t>(c2));
    }
    if (!(rest.empty() || rest == "Z" || ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6))) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days_since) * 1440 + h * 60 + mi;
}

inline std::string format_timestamp(std::int64_t minute)
{
    using namespace std::chrono;
    const auto day_count = minute >= 0 ? minute / 1440 : (minute - 1439) / 1440;
    const auto mod = minute - day_count * 1440;
    const year_month_day ymd{sys_days{days{day_count}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(mod / 60),
                  static_cast<int>(mod % 60));
    return buf;
}

/// Parse the weather CSV. Single missing steps are linearly interpolated; anything else irregular is an error.
inline WeatherSeries parse_weather_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw WeatherError("weather: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line != kWeatherHeader) throw WeatherError("weather: header must be '" + kWeatherHeader + "'");

    WeatherSeries s;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string ts, ghi, temp, wind;
        if (!std::getline(ss, ts, ',') || !std::getline(ss, ghi, ',') || !std::getline(ss, temp, ',') ||
            !std::getline(ss, wind))
            throw WeatherError("weather: row " + std::to_string(row) + ": expected 4 columns");
        auto minute = parse_timestamp(ts);
        if (!minute) throw WeatherError("weather: row " + std::to_string(row) + ": bad timestamp '" + ts + "'");
        WeatherRecord r;
        r.minute = *minute;
        try {
            r.ghi = std::stod(ghi);
            r.air_temp = std::stod(temp);
            r.wind_speed_ref = std::stod(wind);
        } catch (const std::exception&) {
            throw WeatherError("weather: row " + std::to_string(row) + ": non-numeric value");
        }
        if (r.ghi < 0.0) throw WeatherError("weather: row " + std::to_string(row) + ": negative GHI");
        if (r.ghi > 1500.0) throw WeatherError("weather: row " + std::to_string(row) + ": GHI above 1500 W/m2");
        if (r.wind_speed_ref < 0.0) throw WeatherError("weather: row " + std::to_string(row) + ": negative wind speed");
        if (!s.records.empty()) {
            const auto& prev = s.records.back();
            const auto gap = r.minute - prev.minute;
            if (gap <= 0)
                throw WeatherError("weather: row " + std::to_string(row) + ": timestamp not strictly increasing");
            if (gap == 2 * kTimestepMinutes) {
                s.records.push_back({prev.minute + kTimestepMinutes, (prev.ghi + r.ghi) / 2,
                                     (prev.air_temp + r.air_temp) / 2, (prev.wind_speed_ref + r.wind_speed_ref) / 2});
            } else if (gap != kTimestepMinutes) {
                throw WeatherError("weather: row " + std::to_string(row) + ": gap of " + std::to_string(gap) +
                                   " minutes (at most one missing step is interpolated)");
            }
        }
        s.records.push_back(r);
    }
    if (s.records.empty()) throw WeatherError("weather: no records");
    return s;
}

inline WeatherSeries load_weather(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw WeatherError("cannot open weather file '" + path.string() + "'");
    return parse_weather_csv(in);
}

inline void write_weather_csv(std::ostream& out, const WeatherSeries& s)
{
    out << kWeatherHeader << '\n';
    char buf[128];
    for (const auto& r : s.records) {
        std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.3f\n", r.ghi, r.air_temp, r.wind_speed_ref);
        out << format_timestamp(r.minute) << buf;
    }
}

/// Seasonal shape of the synthetic generator.
struct QuarterProfile
{
    double sunrise_h;
    double sunset_h;
    double peak_ghi;
    double temp_mean;
    double temp_amplitude;
    double wind_mean;
};

/// Hanoi-like quarters: Q3 is the sunniest, Q1 the dimmest.
inline QuarterProfile quarter_profile(int quarter)
{
    switch (quarter) {
    case 1: return {6.5, 17.75, 700.0, 18.0, 4.0, 3.2};
    case 2: return {5.5, 18.5, 820.0, 28.0, 4.5, 2.8};
    case 3: return {5.5, 18.5, 800.0, 30.0, 4.0, 2.6};
    case 4: return {6.0, 17.5, 740.0, 23.0, 4.5, 3.0};
    default: throw std::invalid_argument("quarter must be 1..4");
    }
}

namespace detail {

inline double clear_sky(const QuarterProfile& p, double hour)
{
    if (hour <= p.sunrise_h || hour >= p.sunset_h) return 0.0;
    const double x = (hour - p.sunrise_h) / (p.sunset_h - p.sunrise_h);
    return p.peak_ghi * std::pow(std::sin(std::numbers::pi * x), 1.5);
}

} // namespace detail

/// Deterministic synthetic weather starting 2024-01-01T00:00. `quarter` 1..4 selects a
/// season, 0 averages the four seasons. Randomness (cloudiness, noise) depends only on
/// the seed, so two quarters with the same seed differ only by their seasonal shape.
inline WeatherSeries synth_weather(int quarter, std::uint64_t seed, int days = 1)
{
    if (quarter < 0 || quarter > 4) throw std::invalid_argument("quarter must be 0..4");
    if (days < 1) throw std::invalid_argument("days must be >= 1");
    std::vector<QuarterProfile> profiles;
    if (quarter == 0)
        for (int q = 1; q <= 4; ++q) profiles.push_back(quarter_profile(q));
    else
        profiles.push_back(quarter_profile(quarter));

    const std::int64_t start = *parse_timestamp("2024-01-01T00:00");
    Rng rng(derive_seed(seed, 0x77ea7e5ULL));
    WeatherSeries s;
    s.records.reserve(static_cast<std::size_t>(days) * kTicksPerDay);
    double wind_noise = 0.0;
    for (int d = 0; d < days; ++d) {
        const double cloud = 0.65 + 0.35 * rng.uniform();
        for (int t = 0; t < kTicksPerDay; ++t) {
            const double hour = t * kTimestepMinutes / 60.0;
            const double flicker = 1.0 + 0.05 * (rng.uniform() - 0.5);
            wind_noise = 0.9 * wind_noise + 0.35 * rng.normal();
            double ghi = 0.0, temp = 0.0, wind = 0.0;
            for (const auto& p : profiles) {
                ghi += detail::clear_sky(p, hour);
                temp += p.temp_mean + p.temp_amplitude * std::cos(2.0 * std::numbers::pi * (hour - 14.0) / 24.0);
                // evening/night wind peak
                wind += p.wind_mean * (1.0 + 0.35 * std::cos(2.0 * std::numbers::pi * (hour - 23.0) / 24.0));
            }
            const double n = static_cast<double>(profiles.size());
            WeatherRecord r;
            r.minute = start + (static_cast<std::int64_t>(d) * kTicksPerDay + t) * kTimestepMinutes;
            r.ghi = std::clamp(ghi / n * cloud * flicker, 0.0, 1500.0);
            r.air_temp = temp / n;
            r.wind_speed_ref = std::max(0.0, wind / n + wind_noise);
            s.records.push_back(r);
        }
    }
    return s;
}

/// Resolve a scenario weather reference: `synth:q1`..`synth:q4`, `synth:annual`, or a CSV path.
/// The result covers `days` days (cyclic repeat flagged when the source is shorter).
inline WeatherSeries resolve_weather(const std::string& ref, std::uint64_t seed, int days)
{
    if (ref.starts_with("synth:")) {
        const std::string kind = ref.substr(6);
        int q = -1;
        if (kind == "annual") q = 0;
        else if (kind.size() == 2 && kind[0] == 'q' && kind[1] >= '1' && kind[1] <= '4') q = kind[1] - '0';
        if (q < 0) throw WeatherError("unknown synthetic weather '" + ref + "'");
        return synth_weather(q, seed, days);
    }
    return load_weather(ref).extended(days);
}

} // namespace evtwin

#endif // EVTWIN_WEATHER_HPP
