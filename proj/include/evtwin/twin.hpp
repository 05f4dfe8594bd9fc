#ifndef EVTWIN_TWIN_HPP
#define EVTWIN_TWIN_HPP

#include "evtwin/config.hpp"
#include "evtwin/experiment.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/sim.hpp"
#include "evtwin/site.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

inline constexpr int kApiSchemaVersion = 1;
inline constexpr std::array<int, 4> kSpeeds{1, 6, 12, 60};
inline constexpr std::size_t kMaxSnapshotVehicles = 2000;
inline constexpr int kMaxStep = 30 * kTicksPerDay;

/// A rejected command or request; `status` is the HTTP status to answer with.
class CommandError : public std::runtime_error
{
public:
    CommandError(int status, const std::string& msg, std::vector<std::string> violations = {})
        : std::runtime_error(msg), status_(status), violations_(std::move(violations))
    {
    }
    int status() const noexcept { return status_; }
    const std::vector<std::string>& violations() const noexcept { return violations_; }

    nlohmann::json body() const
    {
        nlohmann::json j{{"error", what()}};
        if (!violations_.empty()) j["violations"] = violations_;
        return j;
    }

private:
    int status_;
    std::vector<std::string> violations_;
};

struct LoggedCommand
{
    std::int64_t ticks_before = 0;    ///< ticks advanced since the previous logged command
    std::int64_t applied_at_tick = 0;
    nlohmann::json command;
};

inline nlohmann::json to_json(const LoggedCommand& c)
{
    return {{"ticks_before", c.ticks_before}, {"applied_at_tick", c.applied_at_tick}, {"command", c.command}};
}

inline LoggedCommand logged_command_from_json(const nlohmann::json& j)
{
    return {j.at("ticks_before").get<std::int64_t>(), j.at("applied_at_tick").get<std::int64_t>(), j.at("command")};
}

enum class RunMode { paused, running };

/// Parse a scenario body for a new session; site mismatches are reported like field errors.
inline ScenarioConfig session_config(const nlohmann::json& body)
{
    ScenarioConfig c = body.is_null() || (body.is_object() && body.empty()) ? campus_scenario() : scenario_from_json(body);
    const auto problems = check_areas_against_site(c, resolve_site(c.site_ref));
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

/// One steerable world with a replayable command log. Not thread-safe; callers serialize.
class Twin
{
public:
    explicit Twin(ScenarioConfig config)
        : initial_(std::move(config)), site_(resolve_site(initial_.site_ref)), sim_(Simulation::from_config(initial_))
    {
        sim_.set_keep_events(true);
        refresh();
    }

    const ScenarioConfig& initial_config() const { return initial_; }
    const ScenarioConfig& config() const { return sim_.world().config; }
    const Simulation& simulation() const { return sim_; }
    const SiteGraph& site() const { return site_; }
    std::int64_t tick() const { return sim_.world().global_tick(); }
    bool finished() const { return sim_.finished(); }
    RunMode mode() const { return mode_; }
    int speed() const { return speed_; }
    const std::vector<LoggedCommand>& command_log() const { return log_; }
    std::int64_t ticks_since_command() const { return ticks_since_command_; }
    const std::vector<std::uint64_t>& snapshot_hashes() const { return hashes_; }
    const std::vector<Event>& events() const { return events_; }
    /// Snapshot at the current tick boundary, without wall clock or session fields.
    const nlohmann::json& snapshot() const { return snapshot_; }
    std::uint64_t snapshot_hash() const { return hash_; }

    /// Advance up to n ticks; stops at the end of the horizon. Returns ticks advanced.
    int advance(int n)
    {
        int done = 0;
        for (; done < n && !sim_.finished(); ++done) {
            sim_.tick();
            auto ev = sim_.take_events();
            last_tick_events_ = ev;
            events_.insert(events_.end(), ev.begin(), ev.end());
            ++ticks_since_command_;
            refresh();
            hashes_.push_back(hash_);
        }
        return done;
    }

    /// Validate and apply one command at the current boundary. Returns the ack body.
    nlohmann::json apply(const nlohmann::json& cmd)
    {
        if (!cmd.is_object() || !cmd.contains("command") || !cmd["command"].is_string())
            throw CommandError(400, "command body needs a string field 'command'");
        const std::string name = cmd["command"];
        const std::int64_t at = tick();
        nlohmann::json ack{{"command", name}, {"applied_at_tick", at}};

        if (name == "start") {
            const int s = cmd.value("speed", 1);
            if (std::find(kSpeeds.begin(), kSpeeds.end(), s) == kSpeeds.end())
                throw CommandError(400, "speed must be one of 1, 6, 12, 60");
            mode_ = RunMode::running;
            speed_ = s;
        } else if (name == "pause") {
            mode_ = RunMode::paused;
        } else if (name == "step") {
            const int n = cmd.value("n", 1);
            if (n < 1 || n > kMaxStep) throw CommandError(400, "step n must be in [1, " + std::to_string(kMaxStep) + "]");
            mode_ = RunMode::paused;
            record(cmd, at);
            ack["advanced"] = advance(n);
            ack["tick"] = tick();
            return ack;
        } else if (name == "set_policies") {
            if (!cmd.contains("policies")) throw CommandError(400, "set_policies needs 'policies'");
            mutate(cmd);
        } else if (name == "set_ports") {
            mutate(cmd);
        } else if (name == "reset") {
            mutate(cmd);
        } else {
            throw CommandError(400, "unknown command '" + name + "'");
        }
        record(cmd, at);
        ack["tick"] = tick();
        return ack;
    }

    /// Apply a world-changing command without logging (used by replay too).
    void mutate(const nlohmann::json& cmd)
    {
        const std::string name = cmd.at("command");
        if (name == "set_policies") {
            auto merged = to_json(config());
            merged["policies"].merge_patch(cmd.at("policies"));
            ScenarioConfig parsed;
            try {
                parsed = scenario_from_json(merged);
            } catch (const ConfigError& e) {
                throw CommandError(400, "invalid policies", e.violations());
            }
            sim_.set_policies(parsed.policies);
        } else if (name == "set_ports") {
            const std::string area = cmd.value("area", "");
            if (!config().find_area(area)) throw CommandError(400, "unknown area '" + area + "'");
            const auto* a = config().find_area(area);
            const int n11 = cmd.value("n11", a->n_ports_11kw);
            const int n30 = cmd.value("n30", a->n_ports_30kw);
            try {
                sim_.set_ports(area, n11, n30);
            } catch (const ConfigError& e) {
                throw CommandError(400, "port counts out of bounds", e.violations());
            }
        } else if (name == "reset") {
            auto c = initial_;
            if (cmd.contains("seed")) {
                const auto& seed = cmd["seed"];
                if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
                    throw CommandError(400, "seed must be a non-negative integer");
                c.rng_seed = cmd["seed"].get<std::uint64_t>();
            }
            sim_ = Simulation::from_config(c);
            sim_.set_keep_events(true);
            last_tick_events_.clear();
            mode_ = RunMode::paused;
        }
        refresh();
    }

private:
    void record(const nlohmann::json& cmd, std::int64_t at)
    {
        log_.push_back({ticks_since_command_, at, cmd});
        ticks_since_command_ = 0;
    }

    void refresh()
    {
        snapshot_ = build_snapshot();
        hash_ = fnv1a64(snapshot_.dump());
    }

    nlohmann::json build_snapshot() const
    {
        using nlohmann::json;
        const World& w = sim_.world();
        const int minute = w.tick * kTimestepMinutes;
        auto node_json = [&](std::size_t node) {
            const auto& n = site_.node(node);
            return json{{"node", n.id}, {"lon", n.lon}, {"lat", n.lat}};
        };
        auto area_of_vehicle = [&](const Vehicle& v) { return v.slot_area >= 0 ? std::size_t(v.slot_area) : v.area; };

        json vehicles = json::array();
        const std::size_t total = w.vehicles.size();
        const std::size_t stride = total > kMaxSnapshotVehicles ? (total + kMaxSnapshotVehicles - 1) / kMaxSnapshotVehicles : 1;
        for (std::size_t i = 0; i < total; i += stride) {
            const Vehicle& v = w.vehicles[i];
            json j{{"id", v.id},
                   {"kind", to_string(v.kind)},
                   {"state", to_string(v.moving)},
                   {"soc", v.soc},
                   {"slot", to_string(v.slot)},
                   {"area", w.areas[area_of_vehicle(v)].id},
                   {"port_id", v.port_id},
                   {"charging", v.is_charging},
                   {"queued", v.queued}};
            const std::size_t home = w.homes[v.home];
            const std::size_t park = w.areas[area_of_vehicle(v)].node;
            if (v.moving == Movement::commuting_in) {
                const double span = std::max(1, v.start_work - v.depart_minute);
                const double t = std::clamp((minute - v.depart_minute) / span, 0.0, 1.0);
                const auto& a = site_.node(home);
                const auto& b = site_.node(park);
                j["edge"] = {{"from", a.id}, {"to", b.id}, {"progress", t}};
                j["lon"] = a.lon + (b.lon - a.lon) * t;
                j["lat"] = a.lat + (b.lat - a.lat) * t;
            } else {
                j.update(node_json(v.moving == Movement::parking || v.moving == Movement::working ? park : home));
            }
            vehicles.push_back(std::move(j));
        }

        json areas = json::array();
        for (std::size_t a = 0; a < w.areas.size(); ++a) {
            int p11 = 0, p30 = 0, o11 = 0, o30 = 0, retiring = 0;
            for (const auto& p : w.ports) {
                if (p.area != a) continue;
                const bool fast = p.power_kw > 11.0;
                retiring += p.retiring;
                if (!p.retiring) (fast ? p30 : p11)++;
                if (!p.free()) (fast ? o30 : o11)++;
            }
            areas.push_back({{"area_id", w.areas[a].id},
                             {"ports_11kw", p11},
                             {"ports_30kw", p30},
                             {"occupied_11kw", o11},
                             {"occupied_30kw", o30},
                             {"retiring", retiring},
                             {"inactive_used", w.areas[a].inactive_used},
                             {"inactive_capacity", w.areas[a].inactive_capacity}});
        }

        long requested = w.requested, satisfied = w.satisfied;
        for (const auto& r : sim_.reports()) {
            requested += r.ev_requested;
            satisfied += r.ev_satisfied;
        }
        json kpi{{"requested", requested},
                 {"satisfied", satisfied},
                 {"satisfaction", requested == 0 ? 1.0 : double(satisfied) / double(requested)},
                 {"self_sufficiency", self_sufficiency(w.total_ledger)},
                 {"self_consumption", self_consumption(w.total_ledger)},
                 {"bess_soc_kwh", w.bess.soc_kwh},
                 {"ledger", to_json(w.total_ledger)}};

        json events = json::array();
        for (const auto& e : last_tick_events_) events.push_back(to_json(e));

        return {{"schema_version", kApiSchemaVersion},
                {"tick", w.global_tick()},
                {"day", w.day},
                {"minute_of_day", minute},
                {"finished", sim_.finished()},
                {"vehicle_count", total},
                {"decimated", stride > 1},
                {"vehicles", vehicles},
                {"areas", areas},
                {"queue_length", w.queue.size()},
                {"policies", to_json(w.config)["policies"]},
                {"kpi", kpi},
                {"events", events}};
    }

    ScenarioConfig initial_;
    SiteGraph site_;
    Simulation sim_;
    RunMode mode_ = RunMode::paused;
    int speed_ = 1;
    std::vector<LoggedCommand> log_;
    std::int64_t ticks_since_command_ = 0;
    std::vector<std::uint64_t> hashes_;
    std::vector<Event> events_;
    std::vector<Event> last_tick_events_;
    nlohmann::json snapshot_;
    std::uint64_t hash_ = 0;
};

/// Re-run a config and command log; returns one snapshot hash per tick advanced.
/// `tail_ticks` are advanced after the last command.
inline std::vector<std::uint64_t> replay(const ScenarioConfig& config, const std::vector<LoggedCommand>& log,
                                         std::int64_t tail_ticks)
{
    Twin t(config);
    for (const auto& c : log) {
        t.advance(static_cast<int>(c.ticks_before));
        const std::string name = c.command.at("command");
        if (name == "set_policies" || name == "set_ports" || name == "reset") t.mutate(c.command);
    }
    t.advance(static_cast<int>(tail_ticks));
    return t.snapshot_hashes();
}

/// Vehicles that changed between two snapshots; ids present before but not after are listed as removed.
inline nlohmann::json snapshot_delta(const nlohmann::json& prev, const nlohmann::json& cur)
{
    std::map<int, const nlohmann::json*> before;
    for (const auto& v : prev.at("vehicles")) before[v.at("id").get<int>()] = &v;
    nlohmann::json changed = nlohmann::json::array();
    std::map<int, bool> seen;
    for (const auto& v : cur.at("vehicles")) {
        const int id = v.at("id");
        seen[id] = true;
        auto it = before.find(id);
        if (it == before.end() || *it->second != v) changed.push_back(v);
    }
    nlohmann::json removed = nlohmann::json::array();
    for (const auto& [id, _] : before)
        if (!seen.contains(id)) removed.push_back(id);
    nlohmann::json d = cur;
    d["vehicles"] = changed;
    d["removed"] = removed;
    return d;
}

/// Apply a delta to a full snapshot (the client-side inverse of snapshot_delta).
inline nlohmann::json apply_delta(const nlohmann::json& base, const nlohmann::json& delta)
{
    std::map<int, nlohmann::json> vs;
    for (const auto& v : base.at("vehicles")) vs[v.at("id").get<int>()] = v;
    for (const auto& id : delta.at("removed")) vs.erase(id.get<int>());
    for (const auto& v : delta.at("vehicles")) vs[v.at("id").get<int>()] = v;
    nlohmann::json out = delta;
    out.erase("removed");
    out["vehicles"] = nlohmann::json::array();
    for (auto& [_, v] : vs) out["vehicles"].push_back(std::move(v));
    return out;
}

} // namespace evtwin

#endif // EVTWIN_TWIN_HPP
