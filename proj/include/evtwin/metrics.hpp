#ifndef EVTWIN_METRICS_HPP
#define EVTWIN_METRICS_HPP

#include "evtwin/config.hpp"
#include "evtwin/energy.hpp"
#include "evtwin/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <span>
#include <stdexcept>

namespace evtwin {

struct MetricSet
{
    double satisfaction = 1.0;
    double self_sufficiency = 0.0;
    double self_consumption = 1.0;
    double payback_months = kInfiniteMonths;
    double normalized_payback = 0.0;
    double objective = 0.0;
    double payback_threshold_months = 60.0;
    Vnd investment = 0;
    Vnd monthly_profit = 0;

    bool operator==(const MetricSet&) const = default;
};

/// Satisfied over requested; 1 when nothing was requested.
inline double satisfaction(std::span<const DayReport> reports)
{
    if (reports.empty()) throw std::invalid_argument("satisfaction needs at least one day report");
    long requested = 0, satisfied = 0;
    for (const auto& r : reports) {
        requested += r.ev_requested;
        satisfied += r.ev_satisfied;
    }
    return requested == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(requested);
}

inline double self_sufficiency(const EnergyLedger& l)
{
    return l.demand_kwh <= 0.0 ? 1.0 : std::clamp(l.renewable_served_kwh / l.demand_kwh, 0.0, 1.0);
}

inline double self_consumption(const EnergyLedger& l)
{
    const double gen = l.generated_kwh();
    return gen <= 0.0 ? 1.0 : std::clamp(l.renewable_served_kwh / gen, 0.0, 1.0);
}

/// Payback score: rises linearly to 1 at the threshold, decays exponentially beyond it.
/// An infinite payback scores 0.
inline double normalize_payback(double months, double threshold)
{
    if (!(threshold > 0.0)) throw std::invalid_argument("payback threshold must be positive");
    if (std::isinf(months)) return 0.0;
    if (!(months > 0.0)) throw std::invalid_argument("payback must be positive");
    return months <= threshold ? months / threshold : std::exp((threshold - months) / threshold);
}

/// Decreasing variant: 1 for an immediate payback, 0.5 at the threshold, exponential tail.
inline double normalize_payback_decreasing(double months, double threshold)
{
    if (!(threshold > 0.0)) throw std::invalid_argument("payback threshold must be positive");
    if (std::isinf(months)) return 0.0;
    if (months < 0.0) throw std::invalid_argument("payback must be non-negative");
    return months <= threshold ? 1.0 - 0.5 * months / threshold : 0.5 * std::exp((threshold - months) / threshold);
}

inline double objective(double satisfaction, double normalized_payback, double self_sufficiency,
                        double self_sufficiency_weight = 0.8)
{
    return satisfaction + normalized_payback + self_sufficiency_weight * self_sufficiency;
}

inline double objective(const MetricSet& m, double self_sufficiency_weight = 0.8)
{
    return objective(m.satisfaction, m.normalized_payback, m.self_sufficiency, self_sufficiency_weight);
}

inline EnergyLedger total_ledger(std::span<const DayReport> reports)
{
    EnergyLedger l;
    for (const auto& r : reports) l.merge(r.ledger);
    return l;
}

/// All metrics and the objective for a finished run.
inline MetricSet compute_metrics(std::span<const DayReport> reports, const ScenarioConfig& c)
{
    MetricSet m;
    const EnergyLedger l = total_ledger(reports);
    m.satisfaction = satisfaction(reports);
    m.self_sufficiency = self_sufficiency(l);
    m.self_consumption = self_consumption(l);
    const auto fin = financial_summary(l, c.energy, static_cast<int>(reports.size()));
    m.investment = fin.investment;
    m.monthly_profit = fin.monthly_profit;
    m.payback_months = fin.payback_months;
    m.payback_threshold_months = c.objective.payback_threshold_months;
    m.normalized_payback = c.objective.alternate_payback
                               ? normalize_payback_decreasing(m.payback_months, m.payback_threshold_months)
                               : normalize_payback(m.payback_months, m.payback_threshold_months);
    m.objective = objective(m, c.objective.self_sufficiency_weight);
    return m;
}

inline nlohmann::json to_json(const MetricSet& m)
{
    return {{"satisfaction", m.satisfaction},
            {"self_sufficiency", m.self_sufficiency},
            {"self_consumption", m.self_consumption},
            {"payback_months", std::isinf(m.payback_months) ? nlohmann::json(nullptr) : nlohmann::json(m.payback_months)},
            {"normalized_payback", m.normalized_payback},
            {"objective", m.objective},
            {"payback_threshold_months", m.payback_threshold_months},
            {"investment", m.investment},
            {"monthly_profit", m.monthly_profit}};
}

inline MetricSet metrics_from_json(const nlohmann::json& j)
{
    MetricSet m;
    m.satisfaction = j.at("satisfaction").get<double>();
    m.self_sufficiency = j.at("self_sufficiency").get<double>();
    m.self_consumption = j.at("self_consumption").get<double>();
    m.payback_months = j.at("payback_months").is_null() ? kInfiniteMonths : j.at("payback_months").get<double>();
    m.normalized_payback = j.at("normalized_payback").get<double>();
    m.objective = j.at("objective").get<double>();
    m.payback_threshold_months = j.at("payback_threshold_months").get<double>();
    m.investment = j.at("investment").get<Vnd>();
    m.monthly_profit = j.at("monthly_profit").get<Vnd>();
    return m;
}

} // namespace evtwin

#endif // EVTWIN_METRICS_HPP
