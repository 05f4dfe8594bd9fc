#ifndef EVTWIN_CONFIG_HPP
#define EVTWIN_CONFIG_HPP

#include "evtwin/energy.hpp"
#include "evtwin/site.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kTimestepMinutes = 5;
inline constexpr int kTicksPerDay = 24 * 60 / kTimestepMinutes;

inline const std::array<std::string, 3> kEvModels{"VFe34", "VF8", "VF9"};

struct ChargingAreaConfig
{
    std::string area_id;
    int n_ports_11kw = 0;
    int n_ports_30kw = 0;
    int n_inactive_slots = 10; ///< plain parking slots inside the area

    bool operator==(const ChargingAreaConfig&) const = default;
};

struct PolicySet
{
    bool ban_gasoline = false;
    bool idle_fee = false;
    Vnd idle_fee_rate_per_min = 1000;
    int idle_grace_minutes = 30;
    bool relocate_full = false;
    bool notification = false;
    double idle_comply_prob_per_check = 0.25;

    bool operator==(const PolicySet&) const = default;
};

struct HourWindow
{
    double start = 0.0;
    double end = 0.0;
    bool operator==(const HourWindow&) const = default;
};

struct BehaviorParams
{
    double soc_low_threshold = 35.0;
    double soc_high_threshold = 70.0;
    double mid_charge_prob = 0.5;
    double arrival_soc_min = 20.0;
    double arrival_soc_max = 90.0;
    std::vector<HourWindow> start_work_windows{{8.0, 9.0}, {12.0, 14.0}};
    std::vector<double> start_window_weights{0.7, 0.3};
    HourWindow end_work_window{17.0, 19.0};
    double priority_fast_prob = 0.3;
    double priority_des_prob = 0.5;
    /// Non-authoritative defaults: the models are known, their capacities are not.
    std::map<std::string, double> battery_capacity_by_model{{"VFe34", 42.0}, {"VF8", 88.0}, {"VF9", 92.0}};
    std::map<std::string, double> ev_model_mix{{"VFe34", 0.5}, {"VF8", 0.3}, {"VF9", 0.2}};
    double charger_efficiency = 1.0;
    /// When set, a vehicle counts as satisfied only once it reaches 100 %.
    bool strict_completion = false;
    /// Commute energy use; 0 disables the drain.
    double commute_kwh_per_km = 0.0;

    bool operator==(const BehaviorParams&) const = default;
};

struct ObjectiveParams
{
    double payback_threshold_months = 60.0;
    double self_sufficiency_weight = 0.8;
    /// Use the decreasing payback normalization instead of the printed one.
    bool alternate_payback = false;

    bool operator==(const ObjectiveParams&) const = default;
};

struct ScenarioConfig
{
    int schema_version = kScenarioSchemaVersion;
    int nb_electrical = 50;
    int nb_gasoline = 30;
    std::vector<ChargingAreaConfig> areas;
    EnergyConfig energy;
    PolicySet policies;
    BehaviorParams behavior;
    ObjectiveParams objective;
    int horizon_days = 1;
    int timestep_minutes = kTimestepMinutes;
    std::uint64_t rng_seed = 1;
    std::string weather_ref = "synth:annual";
    std::string site_ref; ///< empty: built-in campus site

    const ChargingAreaConfig* find_area(const std::string& id) const
    {
        for (const auto& a : areas)
            if (a.area_id == id) return &a;
        return nullptr;
    }
    ChargingAreaConfig* find_area(const std::string& id)
    {
        for (auto& a : areas)
            if (a.area_id == id) return &a;
        return nullptr;
    }

    bool operator==(const ScenarioConfig&) const = default;
};

/// Raised on parse errors and invariant violations; `violations` lists every problem found.
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations))
    {
    }
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out = "invalid scenario:";
        for (const auto& s : v) out += "\n  " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

/// Campus scenario: C-Parking and J-Parking with the policy-study port counts.
inline ScenarioConfig campus_scenario()
{
    ScenarioConfig c;
    c.areas = {{"C-Parking", 20, 4, 10}, {"J-Parking", 15, 4, 10}};
    return c;
}

namespace detail {

template <typename T>
std::string fmt_num(T v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

template <typename T>
void check_range(std::vector<std::string>& out, const std::string& field, T v, T lo, T hi)
{
    if (v < lo || v > hi)
        out.push_back(field + ": " + fmt_num(v) + " outside [" + fmt_num(lo) + ", " + fmt_num(hi) + "]");
}

inline void check_prob(std::vector<std::string>& out, const std::string& field, double p)
{
    check_range(out, field, p, 0.0, 1.0);
}

inline void check_window(std::vector<std::string>& out, const std::string& field, const HourWindow& w)
{
    if (!(w.start >= 0.0 && w.end < 24.0 && w.start <= w.end))
        out.push_back(field + ": [" + fmt_num(w.start) + ", " + fmt_num(w.end) + "] must satisfy 0 <= start <= end < 24");
}

} // namespace detail

/// Port limits per area.
inline constexpr int kMax11kwPorts = 50;
inline constexpr int kMax30kwPorts = 10;

/// Every violated invariant, empty when the config is valid.
inline std::vector<std::string> validate(const ScenarioConfig& c)
{
    using detail::check_prob;
    using detail::check_range;
    std::vector<std::string> v;
    if (c.schema_version != kScenarioSchemaVersion)
        v.push_back("schema_version: " + std::to_string(c.schema_version) + " unsupported (expected " +
                    std::to_string(kScenarioSchemaVersion) + ")");
    check_range(v, "nb_electrical", c.nb_electrical, 30, 200);
    if (c.nb_gasoline < 0) v.push_back("nb_gasoline: must be >= 0");
    if (c.timestep_minutes != kTimestepMinutes)
        v.push_back("timestep_minutes: " + std::to_string(c.timestep_minutes) + " must be 5");
    if (c.horizon_days < 1) v.push_back("horizon_days: " + std::to_string(c.horizon_days) + " must be >= 1");
    if (c.areas.empty()) v.push_back("areas: at least one area required");
    for (std::size_t i = 0; i < c.areas.size(); ++i) {
        const auto& a = c.areas[i];
        const std::string p = "areas[" + std::to_string(i) + "]";
        if (a.area_id.empty()) v.push_back(p + ".area_id: empty");
        for (std::size_t j = 0; j < i; ++j)
            if (c.areas[j].area_id == a.area_id) v.push_back(p + ".area_id: duplicate '" + a.area_id + "'");
        check_range(v, p + ".n_ports_11kW", a.n_ports_11kw, 0, kMax11kwPorts);
        check_range(v, p + ".n_ports_30kW", a.n_ports_30kw, 0, kMax30kwPorts);
        if (a.n_inactive_slots < 0) v.push_back(p + ".n_inactive_slots: must be >= 0");
    }

    const auto& pol = c.policies;
    if (pol.idle_fee_rate_per_min < 0) v.push_back("policies.idle_fee_rate: must be >= 0");
    if (pol.idle_grace_minutes < 0) v.push_back("policies.idle_grace_minutes: must be >= 0");
    check_prob(v, "policies.idle_comply_prob_per_check", pol.idle_comply_prob_per_check);

    const auto& b = c.behavior;
    if (!(0.0 <= b.soc_low_threshold && b.soc_low_threshold < b.soc_high_threshold && b.soc_high_threshold <= 100.0))
        v.push_back("behavior.soc thresholds: require 0 <= low < high <= 100");
    check_prob(v, "behavior.mid_charge_prob", b.mid_charge_prob);
    check_prob(v, "behavior.priority_fast_prob", b.priority_fast_prob);
    check_prob(v, "behavior.priority_des_prob", b.priority_des_prob);
    if (!(0.0 <= b.arrival_soc_min && b.arrival_soc_min <= b.arrival_soc_max && b.arrival_soc_max <= 100.0))
        v.push_back("behavior.arrival_soc_range: must lie within [0, 100] with min <= max");
    if (b.start_work_windows.empty()) v.push_back("behavior.start_work_windows: empty");
    for (std::size_t i = 0; i < b.start_work_windows.size(); ++i)
        detail::check_window(v, "behavior.start_work_windows[" + std::to_string(i) + "]", b.start_work_windows[i]);
    if (b.start_window_weights.size() != b.start_work_windows.size())
        v.push_back("behavior.start_window_weights: must have one weight per start window");
    for (double w : b.start_window_weights)
        if (w < 0.0) v.push_back("behavior.start_window_weights: negative weight");
    detail::check_window(v, "behavior.end_work_window", b.end_work_window);
    for (const auto& w : b.start_work_windows)
        if (w.end > b.end_work_window.start)
            v.push_back("behavior.start_work_windows: must end before end_work_window starts");
    for (const auto& [model, kwh] : b.battery_capacity_by_model) {
        if (std::find(kEvModels.begin(), kEvModels.end(), model) == kEvModels.end())
            v.push_back("behavior.battery_capacity_by_model: unknown model id '" + model + "'");
        if (!(kwh > 0.0)) v.push_back("behavior.battery_capacity_by_model." + model + ": must be > 0");
    }
    double mix_total = 0.0;
    for (const auto& [model, w] : b.ev_model_mix) {
        if (!b.battery_capacity_by_model.contains(model))
            v.push_back("behavior.ev_model_mix: unknown model id '" + model + "'");
        if (w < 0.0) v.push_back("behavior.ev_model_mix." + model + ": negative weight");
        mix_total += w;
    }
    if (!(mix_total > 0.0)) v.push_back("behavior.ev_model_mix: weights must sum to > 0");
    if (!(b.charger_efficiency > 0.0 && b.charger_efficiency <= 1.0))
        v.push_back("behavior.charger_efficiency: must be in (0, 1]");
    if (b.commute_kwh_per_km < 0.0) v.push_back("behavior.commute_kwh_per_km: must be >= 0");

    const auto& pv = c.energy.pv;
    for (auto [name, val] : {std::pair{"k", pv.k}, {"g_ref", pv.g_ref}, {"p_stc", pv.p_stc}, {"eta", pv.eta},
                             {"beta_t", pv.beta_t}, {"t_c_stc", pv.t_c_stc}, {"noct", pv.noct},
                             {"unit_panel_area", pv.unit_panel_area}})
        if (!(val > 0.0)) v.push_back(std::string("energy.pv.") + name + ": must be > 0");
    check_range(v, "energy.pv.nb_solar", pv.nb_solar, 0, 1000);
    if (pv.unit_panel_cost < 0) v.push_back("energy.pv.unit_panel_cost: must be >= 0");
    const auto& w = c.energy.wind;
    if (!(w.v_cut_in < w.v_rated && w.v_rated < w.v_cut_out))
        v.push_back("energy.wind: require v_cut_in < v_rated < v_cut_out");
    if (!(w.p_rated > 0.0 && w.hub_height > 0.0 && w.ref_height > 0.0 && w.shear_alpha >= 0.0))
        v.push_back("energy.wind: p_rated, heights must be > 0 and shear_alpha >= 0");
    check_range(v, "energy.wind.nb_wind", w.nb_wind, 0, 20);
    if (w.unit_turbine_cost < 0) v.push_back("energy.wind.unit_turbine_cost: must be >= 0");
    const auto& bess = c.energy.bess;
    if (bess.capacity_kwh < 0.0) v.push_back("energy.bess.capacity_kwh: must be >= 0");
    if (!(0.0 <= bess.initial_soc_kwh && bess.initial_soc_kwh <= bess.capacity_kwh))
        v.push_back("energy.bess.initial_soc_kwh: must lie in [0, capacity_kwh]");
    if (!(bess.charge_eff > 0.0 && bess.charge_eff <= 1.0)) v.push_back("energy.bess.charge_eff: must be in (0, 1]");
    if (!(bess.discharge_eff > 0.0 && bess.discharge_eff <= 1.0))
        v.push_back("energy.bess.discharge_eff: must be in (0, 1]");
    if (bess.unit_cost_per_kwh < 0) v.push_back("energy.bess.unit_cost_per_kwh: must be >= 0");
    if (c.energy.grid_tariff_per_kwh < 0) v.push_back("energy.grid_tariff: must be >= 0");
    if (!(c.objective.payback_threshold_months > 0.0))
        v.push_back("objective.payback_threshold_months: must be > 0");
    if (c.objective.self_sufficiency_weight < 0.0) v.push_back("objective.self_sufficiency_weight: must be >= 0");
    return v;
}

/// Area ids the site graph does not know about.
inline std::vector<std::string> check_areas_against_site(const ScenarioConfig& c, const SiteGraph& site)
{
    std::vector<std::string> v;
    for (std::size_t i = 0; i < c.areas.size(); ++i)
        if (!site.parking_node(c.areas[i].area_id))
            v.push_back("areas[" + std::to_string(i) + "].area_id: unknown area id '" + c.areas[i].area_id + "'");
    return v;
}

inline void require_valid(const ScenarioConfig& c)
{
    auto v = validate(c);
    if (!v.empty()) throw ConfigError(std::move(v));
}

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json(const ScenarioConfig& c)
{
    using nlohmann::json;
    json areas = json::array();
    for (const auto& a : c.areas)
        areas.push_back({{"area_id", a.area_id},
                         {"n_ports_11kW", a.n_ports_11kw},
                         {"n_ports_30kW", a.n_ports_30kw},
                         {"n_inactive_slots", a.n_inactive_slots}});
    const auto& p = c.policies;
    const auto& b = c.behavior;
    json windows = json::array();
    for (const auto& w : b.start_work_windows) windows.push_back({w.start, w.end});
    const auto& pv = c.energy.pv;
    const auto& wd = c.energy.wind;
    const auto& bs = c.energy.bess;
    return {
        {"schema_version", c.schema_version},
        {"nb_electrical", c.nb_electrical},
        {"nb_gasoline", c.nb_gasoline},
        {"horizon_days", c.horizon_days},
        {"timestep_minutes", c.timestep_minutes},
        {"rng_seed", c.rng_seed},
        {"weather_ref", c.weather_ref},
        {"site_ref", c.site_ref},
        {"areas", areas},
        {"policies",
         {{"ban_gasoline", p.ban_gasoline},
          {"idle_fee", p.idle_fee},
          {"idle_fee_rate", p.idle_fee_rate_per_min},
          {"idle_grace_minutes", p.idle_grace_minutes},
          {"relocate_full", p.relocate_full},
          {"notification", p.notification},
          {"idle_comply_prob_per_check", p.idle_comply_prob_per_check}}},
        {"behavior",
         {{"soc_low_threshold", b.soc_low_threshold},
          {"soc_high_threshold", b.soc_high_threshold},
          {"mid_charge_prob", b.mid_charge_prob},
          {"arrival_soc_range", {b.arrival_soc_min, b.arrival_soc_max}},
          {"start_work_windows", windows},
          {"start_window_weights", b.start_window_weights},
          {"end_work_window", {b.end_work_window.start, b.end_work_window.end}},
          {"priority_fast_prob", b.priority_fast_prob},
          {"priority_des_prob", b.priority_des_prob},
          {"battery_capacity_by_model", b.battery_capacity_by_model},
          {"ev_model_mix", b.ev_model_mix},
          {"charger_efficiency", b.charger_efficiency},
          {"strict_completion", b.strict_completion},
          {"commute_kwh_per_km", b.commute_kwh_per_km}}},
        {"energy",
         {{"pv",
           {{"k", pv.k},
            {"g_ref", pv.g_ref},
            {"p_stc", pv.p_stc},
            {"eta", pv.eta},
            {"beta_t", pv.beta_t},
            {"t_c_stc", pv.t_c_stc},
            {"noct", pv.noct},
            {"nb_solar", pv.nb_solar},
            {"unit_panel_area", pv.unit_panel_area},
            {"unit_panel_cost", pv.unit_panel_cost}}},
          {"wind",
           {{"p_rated", wd.p_rated},
            {"v_cut_in", wd.v_cut_in},
            {"v_cut_out", wd.v_cut_out},
            {"v_rated", wd.v_rated},
            {"hub_height", wd.hub_height},
            {"ref_height", wd.ref_height},
            {"shear_alpha", wd.shear_alpha},
            {"nb_wind", wd.nb_wind},
            {"unit_turbine_cost", wd.unit_turbine_cost}}},
          {"bess",
           {{"capacity_kwh", bs.capacity_kwh},
            {"initial_soc_kwh", bs.initial_soc_kwh},
            {"charge_eff", bs.charge_eff},
            {"discharge_eff", bs.discharge_eff},
            {"unit_cost_per_kwh", bs.unit_cost_per_kwh}}},
          {"grid_tariff", c.energy.grid_tariff_per_kwh}}},
        {"objective",
         {{"payback_threshold_months", c.objective.payback_threshold_months},
          {"self_sufficiency_weight", c.objective.self_sufficiency_weight},
          {"alternate_payback", c.objective.alternate_payback}}},
    };
}

namespace detail {

/// Reads optional keys into typed fields, collecting errors with their field path.
class Reader
{
public:
    Reader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors)
    {
        if (!j_.is_object()) errors_.push_back(where("") + "expected an object");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.push_back(key);
        if (!j_.is_object() || !j_.contains(key)) return;
        try {
            out = j_.at(key).template get<T>();
        } catch (const nlohmann::json::exception& e) {
            errors_.push_back(where(key) + "wrong type (" + e.what() + ")");
        }
    }

    template <typename Fn>
    void nested(const char* key, Fn&& fn)
    {
        seen_.push_back(key);
        if (!j_.is_object() || !j_.contains(key)) return;
        Reader r(j_.at(key), path_of(key), errors_);
        fn(r);
        r.finish();
    }

    const nlohmann::json* raw(const char* key)
    {
        seen_.push_back(key);
        if (!j_.is_object() || !j_.contains(key)) return nullptr;
        return &j_.at(key);
    }

    void error(const char* key, const std::string& msg) { errors_.push_back(where(key) + msg); }

    void finish()
    {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                errors_.push_back(where(it.key().c_str()) + "unknown field");
    }

    std::string path_of(const std::string& key) const
    {
        return path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    }

    std::string where(const std::string& key) const
    {
        const std::string p = path_of(key);
        return p.empty() ? "" : p + ": ";
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::vector<std::string> seen_;
};

inline bool read_window(const nlohmann::json& j, HourWindow& w)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) return false;
    w = {j[0].get<double>(), j[1].get<double>()};
    return true;
}

} // namespace detail

/// Parse and validate; missing fields take defaults. Throws ConfigError listing every problem.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
    ScenarioConfig c = campus_scenario();
    std::vector<std::string> errors;
    detail::Reader r(j, "", errors);
    r.get("schema_version", c.schema_version);
    r.get("nb_electrical", c.nb_electrical);
    r.get("nb_gasoline", c.nb_gasoline);
    r.get("horizon_days", c.horizon_days);
    r.get("timestep_minutes", c.timestep_minutes);
    if (const auto* seed = r.raw("rng_seed")) {
        if (seed->is_number_unsigned()) c.rng_seed = seed->get<std::uint64_t>();
        else if (seed->is_number_integer() && seed->get<std::int64_t>() >= 0) c.rng_seed = seed->get<std::uint64_t>();
        else r.error("rng_seed", "must be a non-negative 64-bit integer");
    }
    r.get("weather_ref", c.weather_ref);
    r.get("site_ref", c.site_ref);
    if (const auto* areas = r.raw("areas")) {
        if (!areas->is_array()) {
            r.error("areas", "expected an array");
        } else {
            c.areas.clear();
            for (std::size_t i = 0; i < areas->size(); ++i) {
                ChargingAreaConfig a;
                detail::Reader ar((*areas)[i], "areas[" + std::to_string(i) + "]", errors);
                ar.get("area_id", a.area_id);
                ar.get("n_ports_11kW", a.n_ports_11kw);
                ar.get("n_ports_30kW", a.n_ports_30kw);
                ar.get("n_inactive_slots", a.n_inactive_slots);
                ar.finish();
                c.areas.push_back(std::move(a));
            }
        }
    }
    r.nested("policies", [&](detail::Reader& p) {
        p.get("ban_gasoline", c.policies.ban_gasoline);
        p.get("idle_fee", c.policies.idle_fee);
        p.get("idle_fee_rate", c.policies.idle_fee_rate_per_min);
        p.get("idle_grace_minutes", c.policies.idle_grace_minutes);
        p.get("relocate_full", c.policies.relocate_full);
        p.get("notification", c.policies.notification);
        p.get("idle_comply_prob_per_check", c.policies.idle_comply_prob_per_check);
    });
    r.nested("behavior", [&](detail::Reader& b) {
        auto& bh = c.behavior;
        b.get("soc_low_threshold", bh.soc_low_threshold);
        b.get("soc_high_threshold", bh.soc_high_threshold);
        b.get("mid_charge_prob", bh.mid_charge_prob);
        if (const auto* range = b.raw("arrival_soc_range")) {
            HourWindow w;
            if (detail::read_window(*range, w)) {
                bh.arrival_soc_min = w.start;
                bh.arrival_soc_max = w.end;
            } else {
                b.error("arrival_soc_range", "expected [min, max]");
            }
        }
        if (const auto* ws = b.raw("start_work_windows")) {
            bh.start_work_windows.clear();
            bool ok = ws->is_array();
            if (ok)
                for (const auto& wj : *ws) {
                    HourWindow w;
                    ok = ok && detail::read_window(wj, w);
                    bh.start_work_windows.push_back(w);
                }
            if (!ok) b.error("start_work_windows", "expected a list of [start, end] hour pairs");
        }
        b.get("start_window_weights", bh.start_window_weights);
        if (const auto* ew = b.raw("end_work_window"))
            if (!detail::read_window(*ew, bh.end_work_window)) b.error("end_work_window", "expected [start, end]");
        b.get("priority_fast_prob", bh.priority_fast_prob);
        b.get("priority_des_prob", bh.priority_des_prob);
        b.get("battery_capacity_by_model", bh.battery_capacity_by_model);
        b.get("ev_model_mix", bh.ev_model_mix);
        b.get("charger_efficiency", bh.charger_efficiency);
        b.get("strict_completion", bh.strict_completion);
        b.get("commute_kwh_per_km", bh.commute_kwh_per_km);
    });
    r.nested("energy", [&](detail::Reader& e) {
        e.nested("pv", [&](detail::Reader& p) {
            auto& pv = c.energy.pv;
            p.get("k", pv.k);
            p.get("g_ref", pv.g_ref);
            p.get("p_stc", pv.p_stc);
            p.get("eta", pv.eta);
            p.get("beta_t", pv.beta_t);
            p.get("t_c_stc", pv.t_c_stc);
            p.get("noct", pv.noct);
            p.get("nb_solar", pv.nb_solar);
            p.get("unit_panel_area", pv.unit_panel_area);
            p.get("unit_panel_cost", pv.unit_panel_cost);
        });
        e.nested("wind", [&](detail::Reader& w) {
            auto& wd = c.energy.wind;
            w.get("p_rated", wd.p_rated);
            w.get("v_cut_in", wd.v_cut_in);
            w.get("v_cut_out", wd.v_cut_out);
            w.get("v_rated", wd.v_rated);
            w.get("hub_height", wd.hub_height);
            w.get("ref_height", wd.ref_height);
            w.get("shear_alpha", wd.shear_alpha);
            w.get("nb_wind", wd.nb_wind);
            w.get("unit_turbine_cost", wd.unit_turbine_cost);
        });
        e.nested("bess", [&](detail::Reader& b) {
            auto& bs = c.energy.bess;
            b.get("capacity_kwh", bs.capacity_kwh);
            b.get("initial_soc_kwh", bs.initial_soc_kwh);
            b.get("charge_eff", bs.charge_eff);
            b.get("discharge_eff", bs.discharge_eff);
            b.get("unit_cost_per_kwh", bs.unit_cost_per_kwh);
        });
        e.get("grid_tariff", c.energy.grid_tariff_per_kwh);
    });
    r.nested("objective", [&](detail::Reader& o) {
        o.get("payback_threshold_months", c.objective.payback_threshold_months);
        o.get("self_sufficiency_weight", c.objective.self_sufficiency_weight);
        o.get("alternate_payback", c.objective.alternate_payback);
    });
    r.finish();
    if (!errors.empty()) throw ConfigError(std::move(errors));
    auto violations = validate(c);
    if (c.site_ref.empty()) {
        auto unknown = check_areas_against_site(c, default_site());
        violations.insert(violations.end(), unknown.begin(), unknown.end());
    }
    if (!violations.empty()) throw ConfigError(std::move(violations));
    return c;
}

inline ScenarioConfig parse_scenario(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("parse error: ") + e.what()});
    }
    return scenario_from_json(j);
}

/// Load a scenario file. Relative weather/site references are resolved against the file's directory.
inline ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open scenario file '" + path.string() + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    ScenarioConfig c = parse_scenario(ss.str());
    const auto base = path.parent_path();
    auto resolve = [&](std::string& ref) {
        if (ref.empty() || ref.starts_with("synth:")) return;
        std::filesystem::path p(ref);
        if (p.is_relative() && !base.empty()) ref = (base / p).lexically_normal().string();
    };
    resolve(c.weather_ref);
    resolve(c.site_ref);
    if (!c.site_ref.empty()) {
        try {
            auto unknown = check_areas_against_site(c, load_site(c.site_ref));
            if (!unknown.empty()) throw ConfigError(std::move(unknown));
        } catch (const SiteError& e) {
            throw ConfigError({std::string("site_ref: ") + e.what()});
        }
    }
    return c;
}

inline std::string dump_scenario(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

} // namespace evtwin

#endif // EVTWIN_CONFIG_HPP
