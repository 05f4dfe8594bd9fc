#ifndef EVTWIN_ENERGY_HPP
#define EVTWIN_ENERGY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace evtwin {

/// Currency is kept in whole VND.
using Vnd = std::int64_t;

/// Bifacial PV panel model parameters. Defaults are the campus panel.
struct PvParams
{
    double k = 1.15;            ///< bifacial absorption factor
    double g_ref = 800.0;       ///< reference irradiance, W/m2
    double p_stc = 610.0;       ///< rated panel power, W
    double eta = 0.226;         ///< absorption efficiency
    double beta_t = 0.0028;     ///< power degradation per degC
    double t_c_stc = 25.0;      ///< cell temperature at STC, degC
    double noct = 45.0;         ///< nominal operating cell temperature, degC
    int nb_solar = 500;
    double unit_panel_area = 2.7; ///< m2
    Vnd unit_panel_cost = 4'000'000;

    bool operator==(const PvParams&) const = default;
};

struct WindParams
{
    double p_rated = 3000.0; ///< W
    double v_cut_in = 3.5;   ///< m/s
    double v_cut_out = 45.0; ///< m/s
    double v_rated = 12.0;   ///< m/s
    double hub_height = 100.0;
    double ref_height = 10.0;
    double shear_alpha = 0.14;
    int nb_wind = 0;
    Vnd unit_turbine_cost = 33'600'000;

    bool operator==(const WindParams&) const = default;
};

struct BessConfig
{
    double capacity_kwh = 80.0;
    double initial_soc_kwh = 0.0;
    double charge_eff = 0.95;
    double discharge_eff = 0.95;
    Vnd unit_cost_per_kwh = 5'000'000;

    bool operator==(const BessConfig&) const = default;
};

struct EnergyConfig
{
    PvParams pv;
    WindParams wind;
    BessConfig bess;
    Vnd grid_tariff_per_kwh = 3'000;

    bool operator==(const EnergyConfig&) const = default;
};

struct BessState
{
    double capacity_kwh = 80.0;
    double soc_kwh = 0.0;
    double charge_eff = 0.95;
    double discharge_eff = 0.95;

    static BessState from(const BessConfig& c)
    {
        return {c.capacity_kwh, std::clamp(c.initial_soc_kwh, 0.0, c.capacity_kwh), c.charge_eff, c.discharge_eff};
    }

    bool operator==(const BessState&) const = default;
};

/// Flows of a single 5-minute step, all in kWh.
struct StepFlows
{
    double generated = 0.0;
    double solar = 0.0;
    double wind = 0.0;
    double demand = 0.0;
    double direct = 0.0;            ///< renewable used directly by chargers
    double bess_charged = 0.0;      ///< energy entering storage (after charge losses)
    double bess_discharged = 0.0;   ///< energy leaving storage (before discharge losses)
    double bess_output = 0.0;       ///< energy delivered from storage to chargers
    double grid_import = 0.0;
    double curtailed = 0.0;

    double renewable_served() const { return direct + bess_output; }
};

/// Accumulated energy and money. Every field only grows.
struct EnergyLedger
{
    double solar_generated_kwh = 0.0;
    double wind_generated_kwh = 0.0;
    double demand_kwh = 0.0;
    double renewable_served_kwh = 0.0;
    double grid_import_kwh = 0.0;
    double curtailed_kwh = 0.0;
    double bess_charged_kwh = 0.0;
    double bess_discharged_kwh = 0.0;
    Vnd idle_fee_revenue = 0;
    std::int64_t steps = 0;
    StepFlows last_step{};

    double generated_kwh() const { return solar_generated_kwh + wind_generated_kwh; }

    void add(const StepFlows& f)
    {
        solar_generated_kwh += f.solar;
        wind_generated_kwh += f.wind;
        demand_kwh += f.demand;
        renewable_served_kwh += f.renewable_served();
        grid_import_kwh += f.grid_import;
        curtailed_kwh += f.curtailed;
        bess_charged_kwh += f.bess_charged;
        bess_discharged_kwh += f.bess_discharged;
        ++steps;
        last_step = f;
    }

    /// Sum of two ledgers (e.g. consecutive days). `last_step` is taken from `other`.
    void merge(const EnergyLedger& other)
    {
        solar_generated_kwh += other.solar_generated_kwh;
        wind_generated_kwh += other.wind_generated_kwh;
        demand_kwh += other.demand_kwh;
        renewable_served_kwh += other.renewable_served_kwh;
        grid_import_kwh += other.grid_import_kwh;
        curtailed_kwh += other.curtailed_kwh;
        bess_charged_kwh += other.bess_charged_kwh;
        bess_discharged_kwh += other.bess_discharged_kwh;
        idle_fee_revenue += other.idle_fee_revenue;
        steps += other.steps;
        last_step = other.last_step;
    }
};

inline constexpr double kStepHours = 5.0 / 60.0;

/// NOCT cell temperature model.
constexpr double cell_temperature(double air_temp, double ghi, double noct) noexcept
{
    return air_temp + (noct - 20.0) * ghi / 800.0;
}

/// Output of one panel in W, with the cell temperature given explicitly.
constexpr double pv_power_at_cell_temp(double ghi, double t_cell, const PvParams& p) noexcept
{
    const double w = p.k * (ghi / p.g_ref) * p.p_stc * p.eta * (1.0 - p.beta_t * (t_cell - p.t_c_stc));
    return w > 0.0 ? w : 0.0;
}

/// Output of one panel in W for the given irradiance and air temperature.
constexpr double pv_power(double ghi, double air_temp, const PvParams& p) noexcept
{
    return pv_power_at_cell_temp(ghi, cell_temperature(air_temp, ghi, p.noct), p);
}

/// Power-law wind shear from the measurement height to the hub.
inline double wind_speed_at_hub(double v_ref, const WindParams& p)
{
    return v_ref * std::pow(p.hub_height / p.ref_height, p.shear_alpha);
}

/// Single turbine output in W on the cubic power curve.
constexpr double wind_power(double v_hub, const WindParams& p) noexcept
{
    if (v_hub <= p.v_cut_in || v_hub >= p.v_cut_out) return 0.0;
    if (v_hub < p.v_rated) {
        const double ci3 = p.v_cut_in * p.v_cut_in * p.v_cut_in;
        const double r3 = p.v_rated * p.v_rated * p.v_rated;
        return p.p_rated * (v_hub * v_hub * v_hub - ci3) / (r3 - ci3);
    }
    return p.p_rated;
}

/// Station generation over one step (kWh) split by source.
struct Generation
{
    double solar_kwh = 0.0;
    double wind_kwh = 0.0;
    double total() const { return solar_kwh + wind_kwh; }
};

inline Generation station_generation(double ghi, double air_temp, double wind_ref, const EnergyConfig& cfg,
                                     double hours = kStepHours)
{
    Generation g;
    g.solar_kwh = cfg.pv.nb_solar * pv_power(ghi, air_temp, cfg.pv) * hours / 1000.0;
    g.wind_kwh = cfg.wind.nb_wind * wind_power(wind_speed_at_hub(wind_ref, cfg.wind), cfg.wind) * hours / 1000.0;
    return g;
}

struct EnergyStepResult
{
    EnergyLedger ledger;
    BessState bess;
    double grid_import_kwh = 0.0;
    StepFlows flows;
};

/// Greedy dispatch of one step: renewables serve demand first, surplus charges the
/// BESS (rest curtailed), deficit discharges the BESS, and the remainder is imported.
inline EnergyStepResult step_energy(EnergyLedger ledger, BessState bess, Generation gen, double demand_kwh)
{
    StepFlows f;
    f.solar = std::max(0.0, gen.solar_kwh);
    f.wind = std::max(0.0, gen.wind_kwh);
    f.generated = f.solar + f.wind;
    f.demand = std::max(0.0, demand_kwh);
    f.direct = std::min(f.generated, f.demand);

    const double surplus = f.generated - f.direct;
    const double deficit = f.demand - f.direct;
    if (surplus > 0.0) {
        const double headroom = std::max(0.0, bess.capacity_kwh - bess.soc_kwh);
        f.bess_charged = std::min(surplus * bess.charge_eff, headroom);
        bess.soc_kwh = std::min(bess.capacity_kwh, bess.soc_kwh + f.bess_charged);
        f.curtailed = std::max(0.0, surplus - f.bess_charged / bess.charge_eff);
    }
    if (deficit > 0.0) {
        f.bess_output = std::min(deficit, bess.soc_kwh * bess.discharge_eff);
        f.bess_discharged = std::min(bess.soc_kwh, f.bess_output / bess.discharge_eff);
        bess.soc_kwh = std::max(0.0, bess.soc_kwh - f.bess_discharged);
        f.grid_import = deficit - f.bess_output;
    }
    ledger.add(f);
    return {ledger, bess, f.grid_import, f};
}

inline constexpr double kInfiniteMonths = std::numeric_limits<double>::infinity();

struct FinancialSummary
{
    Vnd investment = 0;
    Vnd monthly_profit = 0;
    double payback_months = kInfiniteMonths;
};

inline Vnd renewable_investment(const EnergyConfig& cfg)
{
    return static_cast<Vnd>(cfg.pv.nb_solar) * cfg.pv.unit_panel_cost +
           static_cast<Vnd>(cfg.wind.nb_wind) * cfg.wind.unit_turbine_cost +
           static_cast<Vnd>(std::llround(cfg.bess.capacity_kwh * static_cast<double>(cfg.bess.unit_cost_per_kwh)));
}

/// Investment, monthly profit (avoided grid cost plus idle fees, 30-day month) and payback.
inline FinancialSummary financial_summary(const EnergyLedger& ledger, const EnergyConfig& cfg, int days)
{
    FinancialSummary s;
    s.investment = renewable_investment(cfg);
    if (days <= 0) return s;
    const double served_per_day = ledger.renewable_served_kwh / days;
    const double fees_per_day = static_cast<double>(ledger.idle_fee_revenue) / days;
    s.monthly_profit = std::llround((served_per_day * static_cast<double>(cfg.grid_tariff_per_kwh) + fees_per_day) * 30.0);
    if (s.monthly_profit > 0) s.payback_months = static_cast<double>(s.investment) / static_cast<double>(s.monthly_profit);
    return s;
}

} // namespace evtwin

#endif // EVTWIN_ENERGY_HPP
