#ifndef EVTWIN_SIM_HPP
#define EVTWIN_SIM_HPP

#include "evtwin/config.hpp"
#include "evtwin/energy.hpp"
#include "evtwin/rng.hpp"
#include "evtwin/site.hpp"
#include "evtwin/weather.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace evtwin {

enum class VehicleKind { ev, gasoline };
enum class Movement { resting, commuting_in, parking, working, leaving };
enum class SlotKind { none, active, inactive };

inline const char* to_string(VehicleKind k) { return k == VehicleKind::ev ? "ev" : "gasoline"; }
inline const char* to_string(Movement m)
{
    switch (m) {
    case Movement::resting: return "resting";
    case Movement::commuting_in: return "commuting_in";
    case Movement::parking: return "parking";
    case Movement::working: return "working";
    case Movement::leaving: return "leaving";
    }
    return "?";
}
inline const char* to_string(SlotKind s)
{
    switch (s) {
    case SlotKind::none: return "none";
    case SlotKind::active: return "active_CS";
    case SlotKind::inactive: return "inactive_CS";
    }
    return "?";
}

struct Vehicle
{
    int id = 0;
    VehicleKind kind = VehicleKind::ev;
    std::string ev_model;
    double battery_kwh = 0.0;
    double soc = 0.0; ///< percent
    bool priority_des = false;
    bool priority_fast = false;
    std::size_t home = 0;     ///< index into World::homes
    std::size_t area = 0;     ///< target parking area
    int start_work = 0;       ///< minute of day
    int end_work = 0;         ///< minute of day
    int depart_minute = 0;    ///< leaves home
    Movement moving = Movement::resting;
    SlotKind slot = SlotKind::none;
    int port_id = -1;
    int slot_area = -1;       ///< area of the current slot
    bool is_charging = false;
    bool requested_charge = false;
    bool satisfied = false;
    bool overflow = false;
    bool queued = false;
    std::optional<std::int64_t> idle_since; ///< tick boundary at which the battery became full on a port
    Vnd fees_accrued = 0;
    std::uint64_t rng_key = 0;

    bool operator==(const Vehicle&) const = default;
};

struct Port
{
    int id = 0;
    std::size_t area = 0;
    double power_kw = 11.0;
    int occupant = -1;
    std::int64_t session_start = -1;
    std::optional<std::int64_t> full_since;
    bool retiring = false; ///< removed once its occupant leaves

    bool free() const { return occupant < 0; }
    bool operator==(const Port&) const = default;
};

struct AreaState
{
    std::string id;
    std::size_t node = 0;
    int inactive_capacity = 0;
    int inactive_used = 0;

    bool operator==(const AreaState&) const = default;
};

struct Event
{
    std::int64_t tick = 0;
    int vehicle_id = -1;
    std::string event;
    std::string detail;

    bool operator==(const Event&) const = default;
};

struct DayReport
{
    int day = 0;
    int ev_count = 0;
    int ev_requested = 0;
    int ev_satisfied = 0;
    int gasoline_count = 0;
    int overflow = 0;
    std::vector<std::string> area_ids;
    std::vector<std::vector<int>> occupancy;   ///< [area][tick] occupied ports
    std::vector<std::vector<int>> port_counts; ///< [area][tick] ports present
    std::vector<int> queue_length;             ///< [tick]
    EnergyLedger ledger;                       ///< this day only
    double bess_soc_end_kwh = 0.0;

    Vnd fee_revenue() const { return ledger.idle_fee_revenue; }
};

/// Complete simulation state. A plain value: copying it forks the simulation.
struct World
{
    ScenarioConfig config;
    std::shared_ptr<const WeatherSeries> weather;
    std::vector<std::size_t> homes;              ///< residential site nodes
    std::vector<std::vector<double>> travel_min; ///< [home][area]
    std::vector<std::vector<double>> route_km;   ///< [home][area]
    std::vector<AreaState> areas;
    std::vector<Port> ports; ///< sorted by id
    int next_port_id = 0;
    std::vector<Vehicle> vehicles; ///< index == id
    std::deque<int> queue;
    int day = 0;
    int tick = 0; ///< next tick of the day to execute
    EnergyLedger day_ledger;
    EnergyLedger total_ledger;
    BessState bess;
    int requested = 0;
    int satisfied = 0;
    int overflow = 0;
    std::vector<Event> events; ///< pending, drained by the owner
    std::vector<std::vector<int>> occupancy_series;
    std::vector<std::vector<int>> port_count_series;
    std::vector<int> queue_series;

    std::int64_t global_tick() const { return static_cast<std::int64_t>(day) * kTicksPerDay + tick; }

    Port* port(int id)
    {
        auto it = std::lower_bound(ports.begin(), ports.end(), id, [](const Port& p, int v) { return p.id < v; });
        return it != ports.end() && it->id == id ? &*it : nullptr;
    }
    const Port* port(int id) const { return const_cast<World*>(this)->port(id); }

    std::size_t area_index(const std::string& id) const
    {
        for (std::size_t i = 0; i < areas.size(); ++i)
            if (areas[i].id == id) return i;
        throw std::out_of_range("unknown area '" + id + "'");
    }
};

namespace sim_detail {

enum Stream : std::uint64_t { spawn = 1, decide = 2, slot = 3, comply = 4 };

inline void log(World& w, int vehicle, std::string event, std::string detail = {})
{
    w.events.push_back({w.global_tick(), vehicle, std::move(event), std::move(detail)});
}

inline std::string port_detail(const World& w, const Port& p)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "port=%d area=%s kw=%g", p.id, w.areas[p.area].id.c_str(), p.power_kw);
    return buf;
}

/// Areas in order of travel time from the vehicle's home (ties by index).
inline std::vector<std::size_t> areas_by_travel(const World& w, const Vehicle& v)
{
    std::vector<std::size_t> order(w.areas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return w.travel_min[v.home][a] < w.travel_min[v.home][b];
    });
    return order;
}

/// Target area first, then the rest by travel time.
inline std::vector<std::size_t> areas_target_first(const World& w, const Vehicle& v)
{
    auto order = areas_by_travel(w, v);
    std::stable_partition(order.begin(), order.end(), [&](std::size_t a) { return a == v.area; });
    return order;
}

inline int take_inactive(World& w, const Vehicle& v)
{
    for (std::size_t a : areas_target_first(w, v)) {
        auto& area = w.areas[a];
        if (area.inactive_used < area.inactive_capacity) {
            ++area.inactive_used;
            return static_cast<int>(a);
        }
    }
    return -1;
}

inline void release_slot(World& w, Vehicle& v)
{
    if (v.slot == SlotKind::active) {
        if (Port* p = w.port(v.port_id)) {
            p->occupant = -1;
            p->session_start = -1;
            p->full_since.reset();
            if (p->retiring) {
                log(w, v.id, "port_retired", port_detail(w, *p));
                w.ports.erase(w.ports.begin() + (p - w.ports.data()));
            }
        }
    } else if (v.slot == SlotKind::inactive && v.slot_area >= 0) {
        --w.areas[static_cast<std::size_t>(v.slot_area)].inactive_used;
    }
    v.slot = SlotKind::none;
    v.port_id = -1;
    v.slot_area = -1;
    v.is_charging = false;
    v.idle_since.reset();
}

inline void occupy_port(World& w, Vehicle& v, Port& p)
{
    p.occupant = v.id;
    p.session_start = w.global_tick();
    p.full_since.reset();
    v.slot = SlotKind::active;
    v.port_id = p.id;
    v.slot_area = static_cast<int>(p.area);
}

inline void start_session(World& w, Vehicle& v, Port& p)
{
    occupy_port(w, v, p);
    v.is_charging = v.soc < 100.0;
    if (!v.is_charging) {
        p.full_since = w.global_tick();
        v.idle_since = p.full_since;
    }
    if (!w.config.behavior.strict_completion && v.requested_charge && !v.satisfied) {
        v.satisfied = true;
        ++w.satisfied;
    }
    log(w, v.id, "session_start", port_detail(w, p));
}

/// Move a port occupant off its port: to an inactive slot when one is free,
/// otherwise to general campus parking outside the charging areas.
inline void vacate_port(World& w, Vehicle& v, const char* event)
{
    std::string detail;
    if (const Port* p = w.port(v.port_id)) detail = port_detail(w, *p);
    release_slot(w, v);
    const int a = take_inactive(w, v);
    if (a >= 0) {
        v.slot = SlotKind::inactive;
        v.slot_area = a;
        detail += " to=" + w.areas[static_cast<std::size_t>(a)].id;
    } else {
        detail += " to=campus";
    }
    log(w, v.id, event, detail);
}

} // namespace sim_detail

/// Charging decision on arrival, from the state of charge.
enum class ChargeDecision { request, no_request };

inline ChargeDecision decide_charge(double soc, const BehaviorParams& b, Rng& rng)
{
    if (soc <= b.soc_low_threshold) return ChargeDecision::request;
    if (soc >= b.soc_high_threshold) return ChargeDecision::no_request;
    return rng.bernoulli(b.mid_charge_prob) ? ChargeDecision::request : ChargeDecision::no_request;
}

/// Free, non-retiring port matching the vehicle's preferences; nullptr if none.
/// `any_area` lifts the destination restriction (used when a queued vehicle is notified).
inline Port* find_port(World& w, const Vehicle& v, bool any_area = false)
{
    std::vector<std::size_t> areas;
    if (v.priority_des && !any_area) areas = {v.area};
    else areas = sim_detail::areas_by_travel(w, v);
    const double powers[2] = {v.priority_fast ? 30.0 : 11.0, v.priority_fast ? 11.0 : 30.0};
    for (double kw : powers)
        for (std::size_t a : areas)
            for (auto& p : w.ports)
                if (p.area == a && p.power_kw == kw && p.free() && !p.retiring) return &p;
    if (any_area)
        for (auto& p : w.ports)
            if (p.free() && !p.retiring) return &p;
    return nullptr;
}

struct Assignment
{
    SlotKind slot = SlotKind::none;
    int port_id = -1;
    int area = -1;
    int queue_position = 0; ///< 1-based when enqueued
    bool overflow = false;
};

/// Place an arriving vehicle. Gasoline cars take any free slot (inactive only under the ban);
/// EVs without a request park inactive; EVs with a request take a preferred free port or,
/// failing that, park inactive and, with notifications on, join the FIFO queue.
inline Assignment assign_slot(World& w, Vehicle& v, Rng& rng)
{
    using namespace sim_detail;
    Assignment out;
    const auto& pol = w.config.policies;
    auto park_inactive = [&]() -> bool {
        const int a = take_inactive(w, v);
        if (a < 0) return false;
        v.slot = SlotKind::inactive;
        v.slot_area = a;
        out.slot = SlotKind::inactive;
        out.area = a;
        log(w, v.id, "park_inactive", "area=" + w.areas[static_cast<std::size_t>(a)].id);
        return true;
    };
    auto overflowed = [&]() {
        out.overflow = true;
        v.overflow = true;
        ++w.overflow;
        log(w, v.id, "overflow");
        return out;
    };

    if (v.kind == VehicleKind::gasoline) {
        for (std::size_t a : areas_target_first(w, v)) {
            std::vector<Port*> free_ports;
            if (!pol.ban_gasoline)
                for (auto& p : w.ports)
                    if (p.area == a && p.free() && !p.retiring) free_ports.push_back(&p);
            auto& area = w.areas[a];
            const int free_inactive = area.inactive_capacity - area.inactive_used;
            const auto total = free_ports.size() + static_cast<std::size_t>(std::max(0, free_inactive));
            if (total == 0) continue;
            const std::size_t pick = rng.index(total);
            if (pick < free_ports.size()) {
                Port& p = *free_ports[pick];
                occupy_port(w, v, p);
                out.slot = SlotKind::active;
                out.port_id = p.id;
                out.area = static_cast<int>(a);
                log(w, v.id, "park_port", port_detail(w, p));
            } else {
                ++area.inactive_used;
                v.slot = SlotKind::inactive;
                v.slot_area = static_cast<int>(a);
                out.slot = SlotKind::inactive;
                out.area = static_cast<int>(a);
                log(w, v.id, "park_inactive", "area=" + area.id);
            }
            return out;
        }
        return overflowed();
    }

    const bool request = decide_charge(v.soc, w.config.behavior, rng) == ChargeDecision::request;
    if (!request) {
        if (!park_inactive()) return overflowed();
        return out;
    }
    v.requested_charge = true;
    ++w.requested;
    if (Port* p = find_port(w, v)) {
        start_session(w, v, *p);
        out.slot = SlotKind::active;
        out.port_id = p->id;
        out.area = static_cast<int>(p->area);
        return out;
    }
    if (!park_inactive()) overflowed();
    if (pol.notification) {
        w.queue.push_back(v.id);
        v.queued = true;
        out.queue_position = static_cast<int>(w.queue.size());
        log(w, v.id, "enqueue", "position=" + std::to_string(out.queue_position));
    }
    return out;
}

/// Spawn the day's vehicles. Each vehicle draws from its own stream keyed by
/// (seed, day, id), so fleet size or infrastructure changes leave other vehicles untouched.
inline std::vector<Vehicle> spawn_vehicles(const ScenarioConfig& c, const std::vector<std::vector<double>>& travel_min,
                                           std::size_t n_homes, int day)
{
    const auto& b = c.behavior;
    std::vector<std::string> models;
    std::vector<double> weights;
    for (const auto& [m, wgt] : b.ev_model_mix) {
        models.push_back(m);
        weights.push_back(wgt);
    }
    std::vector<Vehicle> out;
    const int total = c.nb_electrical + c.nb_gasoline;
    out.reserve(static_cast<std::size_t>(total));
    for (int id = 0; id < total; ++id) {
        Rng rng(derive_seed(c.rng_seed, day, id, sim_detail::spawn));
        Vehicle v;
        v.id = id;
        v.kind = id < c.nb_electrical ? VehicleKind::ev : VehicleKind::gasoline;
        v.home = rng.index(n_homes);
        v.area = rng.index(c.areas.size());
        const std::size_t win = rng.weighted(b.start_window_weights);
        const auto& sw = b.start_work_windows[win];
        v.start_work = static_cast<int>(rng.uniform_int(std::llround(sw.start * 60), std::llround(sw.end * 60)));
        v.end_work = static_cast<int>(
            rng.uniform_int(std::llround(b.end_work_window.start * 60), std::llround(b.end_work_window.end * 60)));
        v.depart_minute = v.start_work - static_cast<int>(std::ceil(travel_min[v.home][v.area]));
        const double soc = rng.uniform(b.arrival_soc_min, b.arrival_soc_max);
        const std::size_t model = rng.weighted(weights);
        const bool fast = rng.bernoulli(b.priority_fast_prob);
        const bool des = rng.bernoulli(b.priority_des_prob);
        if (v.kind == VehicleKind::ev) {
            v.soc = soc;
            v.ev_model = models[model];
            v.battery_kwh = b.battery_capacity_by_model.at(v.ev_model);
            v.priority_fast = fast;
            v.priority_des = des;
        }
        v.rng_key = derive_seed(c.rng_seed, day, id, 0xbe4a1ULL);
        out.push_back(std::move(v));
    }
    return out;
}

inline void record_series(World& w)
{
    for (std::size_t a = 0; a < w.areas.size(); ++a) {
        int occ = 0, cnt = 0;
        for (const auto& p : w.ports)
            if (p.area == a) {
                ++cnt;
                occ += p.free() ? 0 : 1;
            }
        w.occupancy_series[a].push_back(occ);
        w.port_count_series[a].push_back(cnt);
    }
    w.queue_series.push_back(static_cast<int>(w.queue.size()));
}

/// Reset per-day state and spawn the fleet for `day`. Ports persist; the BESS carries over.
inline void init_day(World& w, int day)
{
    w.day = day;
    w.tick = 0;
    std::erase_if(w.ports, [](const Port& p) { return p.retiring; });
    for (auto& p : w.ports) {
        p.occupant = -1;
        p.session_start = -1;
        p.full_since.reset();
    }
    for (auto& a : w.areas) a.inactive_used = 0;
    w.queue.clear();
    w.requested = w.satisfied = w.overflow = 0;
    w.day_ledger = EnergyLedger{};
    w.vehicles = spawn_vehicles(w.config, w.travel_min, w.homes.size(), day);
    w.occupancy_series.assign(w.areas.size(), {});
    w.port_count_series.assign(w.areas.size(), {});
    w.queue_series.clear();
}

inline void add_ports(World& w, std::size_t area, double kw, int n)
{
    for (int i = 0; i < n; ++i) {
        Port p;
        p.id = w.next_port_id++;
        p.area = area;
        p.power_kw = kw;
        w.ports.push_back(p);
    }
}

/// Build the world at day 0, tick 0.
inline World make_world(const ScenarioConfig& c, const SiteGraph& site, std::shared_ptr<const WeatherSeries> weather)
{
    require_valid(c);
    if (auto unknown = check_areas_against_site(c, site); !unknown.empty()) throw ConfigError(std::move(unknown));
    if (!weather || weather->size() == 0) throw WeatherError("weather series is empty");
    World w;
    w.config = c;
    w.weather = std::move(weather);
    w.homes = site.nodes_of(NodeKind::residential);
    for (const auto& a : c.areas) w.areas.push_back({a.area_id, *site.parking_node(a.area_id), a.n_inactive_slots, 0});
    for (std::size_t h : w.homes) {
        const auto times = site.travel_times_from(h);
        std::vector<double> row, km;
        for (const auto& a : w.areas) {
            row.push_back(times[a.node]);
            km.push_back(site.route_length_m(h, a.node) / 1000.0);
        }
        w.travel_min.push_back(std::move(row));
        w.route_km.push_back(std::move(km));
    }
    for (std::size_t a = 0; a < c.areas.size(); ++a) {
        add_ports(w, a, 11.0, c.areas[a].n_ports_11kw);
        add_ports(w, a, 30.0, c.areas[a].n_ports_30kw);
    }
    w.bess = BessState::from(c.energy.bess);
    init_day(w, 0);
    return w;
}

/// Idle-fee and relocation rules for ports whose occupant is fully charged.
/// Relocation fires at grace expiry; fees accrue for each check past grace while the
/// vehicle still holds the port, and each check the vehicle may comply and leave.
inline void apply_policies(World& w)
{
    using namespace sim_detail;
    const auto& pol = w.config.policies;
    if (!pol.idle_fee && !pol.relocate_full) return;
    const std::int64_t now = w.global_tick() + 1; // end of this tick
    std::vector<int> full_occupants;
    for (const auto& p : w.ports)
        if (!p.free() && p.full_since) full_occupants.push_back(p.occupant);
    for (int vid : full_occupants) {
        Vehicle& v = w.vehicles[static_cast<std::size_t>(vid)];
        Port* p = w.port(v.port_id);
        if (!p || !p->full_since) continue;
        const std::int64_t idle_minutes = (now - *p->full_since) * kTimestepMinutes;
        if (pol.relocate_full && idle_minutes >= pol.idle_grace_minutes) {
            vacate_port(w, v, "relocate");
            continue;
        }
        if (pol.idle_fee && idle_minutes > pol.idle_grace_minutes) {
            const Vnd fee = pol.idle_fee_rate_per_min * kTimestepMinutes;
            v.fees_accrued += fee;
            w.day_ledger.idle_fee_revenue += fee;
            w.total_ledger.idle_fee_revenue += fee;
            log(w, v.id, "idle_fee", "amount=" + std::to_string(fee));
            Rng rng(derive_seed(v.rng_key, comply, static_cast<std::uint64_t>(now)));
            if (rng.bernoulli(pol.idle_comply_prob_per_check)) vacate_port(w, v, "comply_vacate");
        }
    }
}

/// Offer free ports to the head of the notification queue.
inline void dispatch_notifications(World& w)
{
    using namespace sim_detail;
    while (!w.queue.empty()) {
        Vehicle& v = w.vehicles[static_cast<std::size_t>(w.queue.front())];
        Port* p = find_port(w, v, true);
        if (!p) break;
        w.queue.pop_front();
        v.queued = false;
        if (v.slot == SlotKind::inactive && v.slot_area >= 0) --w.areas[static_cast<std::size_t>(v.slot_area)].inactive_used;
        v.slot = SlotKind::none;
        v.slot_area = -1;
        log(w, v.id, "notify", port_detail(w, *p));
        start_session(w, v, *p);
    }
}

inline void leave(World& w, Vehicle& v)
{
    if (v.queued) {
        std::erase(w.queue, v.id);
        v.queued = false;
    }
    std::string detail;
    if (v.slot == SlotKind::active)
        if (const Port* p = w.port(v.port_id)) detail = sim_detail::port_detail(w, *p);
    sim_detail::release_slot(w, v);
    v.moving = Movement::leaving;
    sim_detail::log(w, v.id, "depart", detail);
}

/// Advance one 5-minute tick: generation, vehicle transitions, charging and dispatch,
/// policies, then notifications. Does not roll over the day (see Simulation).
inline void step(World& w)
{
    using namespace sim_detail;
    const std::int64_t g = w.global_tick();
    const int minute = w.tick * kTimestepMinutes;
    const auto& rec = w.weather->at(static_cast<std::size_t>(g));
    const Generation gen = station_generation(rec.ghi, rec.air_temp, rec.wind_speed_ref, w.config.energy);

    for (auto& v : w.vehicles) {
        if (v.moving == Movement::resting && minute >= v.depart_minute) {
            v.moving = Movement::commuting_in;
            log(w, v.id, "depart_home");
        }
        switch (v.moving) {
        case Movement::commuting_in:
            if (minute >= v.start_work) {
                if (v.kind == VehicleKind::ev && w.config.behavior.commute_kwh_per_km > 0.0) {
                    const double kwh = w.route_km[v.home][v.area] * w.config.behavior.commute_kwh_per_km;
                    v.soc = std::max(0.0, v.soc - kwh / v.battery_kwh * 100.0);
                }
                v.moving = Movement::parking;
                log(w, v.id, "arrive", "area=" + w.areas[v.area].id);
                Rng rng(derive_seed(v.rng_key, v.kind == VehicleKind::ev ? decide : slot));
                assign_slot(w, v, rng);
            }
            break;
        case Movement::parking:
            v.moving = Movement::working;
            [[fallthrough]];
        case Movement::working:
            if (minute >= v.end_work) leave(w, v);
            break;
        default: break;
        }
    }

    double demand = 0.0;
    const double eff = w.config.behavior.charger_efficiency;
    for (auto& p : w.ports) {
        if (p.free()) continue;
        Vehicle& v = w.vehicles[static_cast<std::size_t>(p.occupant)];
        if (!v.is_charging) continue;
        const double room = (100.0 - v.soc) / 100.0 * v.battery_kwh;
        const double stored = std::min(p.power_kw * kStepHours * eff, room);
        demand += stored / eff;
        v.soc = std::min(100.0, v.soc + stored / v.battery_kwh * 100.0);
        if (room - stored <= 1e-9) {
            v.soc = 100.0;
            v.is_charging = false;
            p.full_since = g + 1;
            v.idle_since = p.full_since;
            log(w, v.id, "full", port_detail(w, p));
            if (w.config.behavior.strict_completion && v.requested_charge && !v.satisfied) {
                v.satisfied = true;
                ++w.satisfied;
            }
        }
    }
    const auto res = step_energy(w.day_ledger, w.bess, gen, demand);
    w.day_ledger = res.ledger;
    w.bess = res.bess;
    const Vnd fees = w.total_ledger.idle_fee_revenue;
    w.total_ledger.add(res.flows);
    w.total_ledger.idle_fee_revenue = fees;

    apply_policies(w);
    if (w.config.policies.notification) dispatch_notifications(w);

    record_series(w);
    ++w.tick;
}

inline DayReport make_day_report(const World& w)
{
    DayReport r;
    r.day = w.day;
    for (const auto& v : w.vehicles) (v.kind == VehicleKind::ev ? r.ev_count : r.gasoline_count)++;
    r.ev_requested = w.requested;
    r.ev_satisfied = w.satisfied;
    r.overflow = w.overflow;
    for (const auto& a : w.areas) r.area_ids.push_back(a.id);
    r.occupancy = w.occupancy_series;
    r.port_counts = w.port_count_series;
    r.queue_length = w.queue_series;
    r.ledger = w.day_ledger;
    r.bess_soc_end_kwh = w.bess.soc_kwh;
    return r;
}

/// Invariant violations of the current state (empty when consistent).
inline std::vector<std::string> check_invariants(const World& w)
{
    std::vector<std::string> bad;
    auto fail = [&](std::string s) { bad.push_back("tick " + std::to_string(w.global_tick()) + ": " + std::move(s)); };
    int requested = 0, satisfied = 0;
    std::vector<int> inactive(w.areas.size(), 0);
    for (const auto& v : w.vehicles) {
        const std::string vid = "vehicle " + std::to_string(v.id);
        if (!(v.soc >= 0.0 && v.soc <= 100.0)) fail(vid + " soc out of range");
        if (v.is_charging && v.slot != SlotKind::active) fail(vid + " charging without an active slot");
        if (v.satisfied && !v.requested_charge) fail(vid + " satisfied without request");
        requested += v.requested_charge;
        satisfied += v.satisfied;
        if (v.slot == SlotKind::active) {
            const Port* p = w.port(v.port_id);
            if (!p || p->occupant != v.id) fail(vid + " holds a port that does not list it");
        }
        if (v.slot == SlotKind::inactive) {
            if (v.slot_area < 0) fail(vid + " inactive slot without area");
            else ++inactive[static_cast<std::size_t>(v.slot_area)];
        }
        if (v.queued && v.slot == SlotKind::active) fail(vid + " queued while holding a port");
    }
    if (requested != w.requested) fail("requested counter mismatch");
    if (satisfied != w.satisfied) fail("satisfied counter mismatch");
    if (w.satisfied > w.requested) fail("satisfied exceeds requested");
    std::size_t occupied = 0, free_ports = 0;
    for (const auto& p : w.ports) {
        if (p.free()) {
            ++free_ports;
            if (p.full_since) fail("free port " + std::to_string(p.id) + " has full_since");
            continue;
        }
        ++occupied;
        if (p.occupant >= static_cast<int>(w.vehicles.size())) {
            fail("port occupant out of range");
            continue;
        }
        const auto& v = w.vehicles[static_cast<std::size_t>(p.occupant)];
        if (v.slot != SlotKind::active || v.port_id != p.id) fail("port " + std::to_string(p.id) + " occupant mismatch");
    }
    if (occupied + free_ports != w.ports.size()) fail("port conservation");
    for (std::size_t a = 0; a < w.areas.size(); ++a) {
        if (inactive[a] != w.areas[a].inactive_used) fail("inactive slot count mismatch in " + w.areas[a].id);
        if (w.areas[a].inactive_used > w.areas[a].inactive_capacity) fail("inactive slots over capacity");
    }
    if (!(w.bess.soc_kwh >= 0.0 && w.bess.soc_kwh <= w.bess.capacity_kwh + 1e-9)) fail("BESS soc out of range");
    const auto& f = w.day_ledger.last_step;
    const double residual = std::abs(f.demand - (f.direct + f.bess_output + f.grid_import));
    if (residual > 1e-9 * std::max(1.0, f.demand)) fail("energy balance residual " + std::to_string(residual));
    return bad;
}

/// Owns a world across days: steps ticks, rolls days over and collects reports and events.
class Simulation
{
public:
    Simulation(const ScenarioConfig& c, const SiteGraph& site, std::shared_ptr<const WeatherSeries> weather)
        : world_(make_world(c, site, std::move(weather)))
    {
    }

    /// Resolve the config's site and weather references.
    static Simulation from_config(const ScenarioConfig& c)
    {
        const SiteGraph site = resolve_site(c.site_ref);
        auto weather = std::make_shared<const WeatherSeries>(resolve_weather(c.weather_ref, c.rng_seed, c.horizon_days));
        return Simulation(c, site, std::move(weather));
    }

    void set_keep_events(bool keep) { keep_events_ = keep; }

    /// One tick; finishing the last tick of a day emits its report and starts the next day.
    void tick()
    {
        step(world_);
        if (keep_events_) log_.insert(log_.end(), world_.events.begin(), world_.events.end());
        world_.events.clear();
        if (world_.tick == kTicksPerDay) {
            reports_.push_back(make_day_report(world_));
            init_day(world_, world_.day + 1);
        }
    }

    bool finished() const { return world_.day >= world_.config.horizon_days; }

    const std::vector<DayReport>& run_to_end()
    {
        while (!finished()) tick();
        return reports_;
    }

    const World& world() const { return world_; }
    World& world() { return world_; }
    const std::vector<DayReport>& reports() const { return reports_; }
    const std::vector<Event>& events() const { return log_; }
    std::vector<Event> take_events() { return std::exchange(log_, {}); }

    void set_policies(const PolicySet& p) { world_.config.policies = p; }

    /// Change port counts of one area. Growth is immediate; shrinking removes free ports
    /// first and marks occupied ones to be removed when their occupant leaves.
    void set_ports(const std::string& area_id, int n11, int n30)
    {
        if (n11 < 0 || n11 > kMax11kwPorts || n30 < 0 || n30 > kMax30kwPorts)
            throw ConfigError({"ports for " + area_id + ": n11 in [0, 50], n30 in [0, 10]"});
        auto& w = world_;
        const std::size_t a = w.area_index(area_id);
        for (auto [kw, target] : {std::pair{11.0, n11}, std::pair{30.0, n30}}) {
            auto active_count = [&] {
                int c = 0;
                for (const auto& p : w.ports) c += (p.area == a && p.power_kw == kw && !p.retiring);
                return c;
            };
            int have = active_count();
            for (auto it = w.ports.rbegin(); it != w.ports.rend() && have < target; ++it)
                if (it->area == a && it->power_kw == kw && it->retiring) {
                    it->retiring = false;
                    ++have;
                }
            if (have < target) add_ports(w, a, kw, target - have);
            for (int i = static_cast<int>(w.ports.size()) - 1; i >= 0 && active_count() > target; --i) {
                auto& p = w.ports[static_cast<std::size_t>(i)];
                if (p.area == a && p.power_kw == kw && !p.retiring && p.free())
                    w.ports.erase(w.ports.begin() + i);
            }
            for (int i = static_cast<int>(w.ports.size()) - 1; i >= 0 && active_count() > target; --i) {
                auto& p = w.ports[static_cast<std::size_t>(i)];
                if (p.area == a && p.power_kw == kw && !p.retiring) p.retiring = true;
            }
        }
        auto* cfg = w.config.find_area(area_id);
        cfg->n_ports_11kw = n11;
        cfg->n_ports_30kw = n30;
    }

private:
    World world_;
    std::vector<DayReport> reports_;
    std::vector<Event> log_;
    bool keep_events_ = false;
};

/// Run a scenario over its whole horizon.
inline std::vector<DayReport> run(const ScenarioConfig& c)
{
    auto sim = Simulation::from_config(c);
    return sim.run_to_end();
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const Vehicle& v)
{
    nlohmann::json j{{"id", v.id},
                     {"kind", to_string(v.kind)},
                     {"soc", v.soc},
                     {"home", v.home},
                     {"parking_area", v.area},
                     {"start_work", v.start_work},
                     {"end_work", v.end_work},
                     {"moving_obj", to_string(v.moving)},
                     {"parking_slot", to_string(v.slot)},
                     {"port_id", v.port_id},
                     {"is_charging", v.is_charging},
                     {"requested_charge", v.requested_charge},
                     {"satisfied", v.satisfied},
                     {"fees_accrued", v.fees_accrued}};
    if (v.kind == VehicleKind::ev) {
        j["ev_model"] = v.ev_model;
        j["battery_kwh"] = v.battery_kwh;
        j["priority_des"] = v.priority_des;
        j["priority_fast"] = v.priority_fast;
    }
    if (v.idle_since) j["idle_since"] = *v.idle_since;
    return j;
}

inline nlohmann::json to_json(const Event& e)
{
    return {{"tick", e.tick}, {"vehicle_id", e.vehicle_id}, {"event", e.event}, {"detail", e.detail}};
}

inline nlohmann::json to_json(const EnergyLedger& l)
{
    return {{"solar_generated_kwh", l.solar_generated_kwh},
            {"wind_generated_kwh", l.wind_generated_kwh},
            {"demand_kwh", l.demand_kwh},
            {"renewable_served_kwh", l.renewable_served_kwh},
            {"grid_import_kwh", l.grid_import_kwh},
            {"curtailed_kwh", l.curtailed_kwh},
            {"bess_charged_kwh", l.bess_charged_kwh},
            {"bess_discharged_kwh", l.bess_discharged_kwh},
            {"idle_fee_revenue", l.idle_fee_revenue}};
}

inline nlohmann::json to_json(const DayReport& r)
{
    nlohmann::json occ = nlohmann::json::object();
    for (std::size_t a = 0; a < r.area_ids.size(); ++a) occ[r.area_ids[a]] = r.occupancy[a];
    return {{"day", r.day},
            {"ev_count", r.ev_count},
            {"ev_requested", r.ev_requested},
            {"ev_satisfied", r.ev_satisfied},
            {"gasoline_count", r.gasoline_count},
            {"overflow", r.overflow},
            {"occupancy", occ},
            {"queue_length", r.queue_length},
            {"energy", to_json(r.ledger)},
            {"fee_revenue", r.fee_revenue()},
            {"bess_soc_end_kwh", r.bess_soc_end_kwh}};
}

} // namespace evtwin

#endif // EVTWIN_SIM_HPP
