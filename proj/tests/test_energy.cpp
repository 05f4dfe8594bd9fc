#include "evtwin/energy.hpp"
#include "evtwin/rng.hpp"

#include <gtest/gtest.h>

using namespace evtwin;

TEST(CellTemperature, Examples)
{
    EXPECT_DOUBLE_EQ(cell_temperature(25, 0, 45), 25.0);
    EXPECT_DOUBLE_EQ(cell_temperature(30, 800, 45), 55.0);
    EXPECT_DOUBLE_EQ(cell_temperature(20, 400, 45), 32.5);
}

TEST(PvPower, ReferenceCase)
{
    const PvParams p;
    EXPECT_NEAR(pv_power_at_cell_temp(800, 25, p), 1.15 * 610 * 0.226, 1e-3);
    EXPECT_NEAR(pv_power_at_cell_temp(800, 25, p), 158.539, 1e-9);
    EXPECT_NEAR(pv_power_at_cell_temp(400, 35, p), 77.05, 1e-2);
    EXPECT_EQ(pv_power_at_cell_temp(0, 60, p), 0.0);
    EXPECT_EQ(pv_power(0, 30, p), 0.0);
}

TEST(PvPower, MonotoneInIrradianceAndTemperature)
{
    const PvParams p;
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double t = rng.uniform(-5, 45);
        const double g1 = rng.uniform(0, 1200), g2 = rng.uniform(0, 1200);
        const double lo = std::min(g1, g2), hi = std::max(g1, g2);
        EXPECT_LE(pv_power_at_cell_temp(lo, t, p), pv_power_at_cell_temp(hi, t, p) + 1e-12);
        const double ta = rng.uniform(-5, 45), tb = rng.uniform(-5, 45);
        EXPECT_GE(pv_power(g1, std::min(ta, tb), p), pv_power(g1, std::max(ta, tb), p) - 1e-12);
    }
}

TEST(WindSpeedAtHub, Examples)
{
    WindParams p;
    EXPECT_NEAR(wind_speed_at_hub(5, p), 6.90, 0.01);
    EXPECT_EQ(wind_speed_at_hub(0, p), 0.0);
    p.hub_height = p.ref_height;
    EXPECT_DOUBLE_EQ(wind_speed_at_hub(7.3, p), 7.3);
}

TEST(WindPower, CurveAnchors)
{
    const WindParams p;
    EXPECT_EQ(wind_power(3.0, p), 0.0);
    EXPECT_EQ(wind_power(p.v_cut_in, p), 0.0);
    EXPECT_EQ(wind_power(12.0, p), 3000.0);
    EXPECT_NEAR(wind_power(8.0, p), 835.2, 0.1);
    EXPECT_EQ(wind_power(45.0, p), 0.0);
    EXPECT_EQ(wind_power(30.0, p), 3000.0);
}

TEST(WindPower, ContinuousAtRatedSpeed)
{
    const WindParams p;
    EXPECT_NEAR(wind_power(p.v_rated - 1e-9, p), p.p_rated, 1e-5);
    EXPECT_NEAR(wind_power(p.v_cut_in + 1e-9, p), 0.0, 1e-5);
}

TEST(StationGeneration, LinearInUnitCounts)
{
    EnergyConfig c;
    c.wind.nb_wind = 3;
    const auto base = station_generation(650, 28, 6, c);
    c.pv.nb_solar *= 2;
    c.wind.nb_wind *= 2;
    const auto twice = station_generation(650, 28, 6, c);
    EXPECT_NEAR(twice.solar_kwh, 2 * base.solar_kwh, 1e-9);
    EXPECT_NEAR(twice.wind_kwh, 2 * base.wind_kwh, 1e-9);
    c.pv.nb_solar = 0;
    c.wind.nb_wind = 0;
    EXPECT_EQ(station_generation(650, 28, 6, c).total(), 0.0);
}

TEST(StepEnergy, SurplusChargesBess)
{
    const auto r = step_energy({}, BessState{80, 0, 0.95, 0.95}, {10, 0}, 4);
    EXPECT_DOUBLE_EQ(r.flows.direct, 4);
    EXPECT_NEAR(r.flows.bess_charged, 5.7, 1e-12);
    EXPECT_NEAR(r.bess.soc_kwh, 5.7, 1e-12);
    EXPECT_EQ(r.grid_import_kwh, 0.0);
    EXPECT_NEAR(r.flows.curtailed, 0.0, 1e-12);
}

TEST(StepEnergy, DeficitDischargesWithLoss)
{
    const auto r = step_energy({}, BessState{80, 10, 0.95, 0.95}, {0, 0}, 5);
    EXPECT_NEAR(r.flows.bess_output, 5, 1e-12);
    EXPECT_NEAR(r.flows.bess_discharged, 5 / 0.95, 1e-12);
    EXPECT_NEAR(r.bess.soc_kwh, 10 - 5.263157894736842, 1e-9);
    EXPECT_EQ(r.grid_import_kwh, 0.0);
}

TEST(StepEnergy, EmptyBessImports)
{
    const auto r = step_energy({}, BessState{80, 0, 0.95, 0.95}, {0, 0}, 5);
    EXPECT_DOUBLE_EQ(r.grid_import_kwh, 5);
}

TEST(StepEnergy, FullBessCurtails)
{
    const auto r = step_energy({}, BessState{80, 79, 0.95, 0.95}, {10, 0}, 0);
    EXPECT_NEAR(r.bess.soc_kwh, 80, 1e-12);
    EXPECT_NEAR(r.flows.curtailed, 10 - 1 / 0.95, 1e-12);
}

TEST(StepEnergy, RandomSequencesKeepBalanceAndBounds)
{
    Rng rng(2024);
    for (int run = 0; run < 50; ++run) {
        BessState bess{rng.uniform(0, 200), 0, rng.uniform(0.7, 1), rng.uniform(0.7, 1)};
        bess.soc_kwh = rng.uniform(0, bess.capacity_kwh);
        EnergyLedger ledger;
        for (int s = 0; s < 500; ++s) {
            const Generation g{rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 40), rng.uniform(0, 5)};
            const double demand = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 50);
            const auto r = step_energy(ledger, bess, g, demand);
            const auto& f = r.flows;
            EXPECT_LE(std::abs(f.demand - (f.direct + f.bess_output + f.grid_import)), 1e-9 * std::max(1.0, f.demand));
            EXPECT_GE(r.bess.soc_kwh, 0.0);
            EXPECT_LE(r.bess.soc_kwh, r.bess.capacity_kwh);
            EXPECT_GE(f.grid_import, 0.0);
            EXPECT_GE(f.curtailed, -1e-12);
            ledger = r.ledger;
            bess = r.bess;
        }
        EXPECT_EQ(ledger.steps, 500);
    }
}

TEST(Financials, InfinitePaybackWithoutProfit)
{
    EnergyConfig c;
    const auto s = financial_summary({}, c, 30);
    EXPECT_TRUE(std::isinf(s.payback_months));
    EXPECT_EQ(s.monthly_profit, 0);
}

TEST(Financials, DirectRatio)
{
    // 120e6 invested, 2e6 per month: 100 panels at 1.2e6, no BESS, 2e6/30 VND of energy per day.
    EnergyConfig c;
    c.pv.nb_solar = 100;
    c.pv.unit_panel_cost = 1'200'000;
    c.bess.capacity_kwh = 0;
    c.grid_tariff_per_kwh = 1000;
    EnergyLedger l;
    l.renewable_served_kwh = 2000.0;
    const auto s = financial_summary(l, c, 30);
    EXPECT_EQ(s.investment, 120'000'000);
    EXPECT_EQ(s.monthly_profit, 2'000'000);
    EXPECT_DOUBLE_EQ(s.payback_months, 60.0);
}

TEST(Financials, DoublingTariffHalvesPayback)
{
    EnergyConfig c;
    EnergyLedger l;
    l.renewable_served_kwh = 12'345.0;
    const double before = financial_summary(l, c, 7).payback_months;
    c.grid_tariff_per_kwh *= 2;
    EXPECT_NEAR(financial_summary(l, c, 7).payback_months, before / 2, before * 1e-6);
}

TEST(Financials, IdleFeesCountAsProfit)
{
    EnergyConfig c;
    EnergyLedger l;
    l.idle_fee_revenue = 30'000;
    EXPECT_EQ(financial_summary(l, c, 1).monthly_profit, 900'000);
}

TEST(EnergyLedger, MergeSumsFields)
{
    EnergyLedger a, b;
    a.add({10, 10, 0, 4, 4, 5.7, 0, 0, 0, 0});
    b.add({0, 0, 0, 5, 0, 0, 5.26, 5, 0, 0});
    b.idle_fee_revenue = 7;
    a.merge(b);
    EXPECT_DOUBLE_EQ(a.demand_kwh, 9);
    EXPECT_DOUBLE_EQ(a.renewable_served_kwh, 9);
    EXPECT_EQ(a.steps, 2);
    EXPECT_EQ(a.idle_fee_revenue, 7);
}
