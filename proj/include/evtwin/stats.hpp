#ifndef EVTWIN_STATS_HPP
#define EVTWIN_STATS_HPP

#include "evtwin/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

class StatsError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

enum class Alternative { two_sided, greater, less };
enum class WilcoxonMethod { automatic, exact, normal };

inline constexpr int kExactMaxN = 25;

struct WilcoxonResult
{
    double w_statistic = 0.0; ///< min(R+, R-)
    double r_plus = 0.0;
    double r_minus = 0.0;
    int n_effective = 0;
    double p_value = 1.0;
    double z = 0.0; ///< normal approximation only
    std::string method;

    bool reject(double alpha = 0.05) const { return p_value < alpha; }
};

/// Average ranks (1-based) of `values`, ties sharing the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace stats_detail {

/// Number of sign assignments whose positive-rank sum equals s, indexed by doubled sum.
/// Ranks are integers or half-integers, so doubling makes the DP exact.
inline std::vector<double> signed_rank_counts(std::span<const double> ranks)
{
    std::vector<int> doubled;
    int total = 0;
    for (double r : ranks) {
        doubled.push_back(static_cast<int>(std::lround(2.0 * r)));
        total += doubled.back();
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int d : doubled) {
        for (int s = reach; s >= 0; --s)
            if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + d)] += count[static_cast<std::size_t>(s)];
        reach += d;
    }
    return count;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace stats_detail

/// Exact p-value of the signed-rank statistic `r_plus` over all 2^n sign assignments of `ranks`.
inline double wilcoxon_exact_p(std::span<const double> ranks, double r_plus, Alternative alt)
{
    const auto count = stats_detail::signed_rank_counts(ranks);
    const double all = std::ldexp(1.0, static_cast<int>(ranks.size()));
    const long target = std::lround(2.0 * r_plus);
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s < count.size(); ++s) {
        if (static_cast<long>(s) <= target) le += count[s];
        if (static_cast<long>(s) >= target) ge += count[s];
    }
    switch (alt) {
    case Alternative::greater: return ge / all;
    case Alternative::less: return le / all;
    default: return std::min(1.0, 2.0 * std::min(le, ge) / all);
    }
}

/// Paired signed-rank test of a - b. Zero differences are dropped; tied magnitudes get
/// average ranks. Exact for up to 25 non-zero pairs, normal approximation (tie and
/// continuity corrected) above, unless the method is forced.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           Alternative alt = Alternative::two_sided,
                                           WilcoxonMethod method = WilcoxonMethod::automatic)
{
    if (a.size() != b.size()) throw StatsError("wilcoxon: samples differ in length");
    if (a.empty()) throw StatsError("wilcoxon: empty samples");
    std::vector<double> d, mag;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (const double x = a[i] - b[i]; x != 0.0) {
            d.push_back(x);
            mag.push_back(std::abs(x));
        }
    if (d.empty()) throw StatsError("wilcoxon: all differences are zero, the test is undefined");

    WilcoxonResult r;
    r.n_effective = static_cast<int>(d.size());
    const auto ranks = average_ranks(mag);
    for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? r.r_plus : r.r_minus) += ranks[i];
    r.w_statistic = std::min(r.r_plus, r.r_minus);

    const bool exact = method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && r.n_effective <= kExactMaxN);
    if (exact) {
        r.method = "exact";
        r.p_value = wilcoxon_exact_p(ranks, r.r_plus, alt);
        return r;
    }
    r.method = "normal_approx";
    const double n = r.n_effective;
    const double mean = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    {
        auto sorted = mag;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            var -= (t * t * t - t) / 48.0;
            i = j;
        }
    }
    double diff = r.r_plus - mean;
    switch (alt) {
    case Alternative::greater: diff -= 0.5; break;
    case Alternative::less: diff += 0.5; break;
    default:
        if (diff != 0.0) diff -= std::copysign(0.5, diff);
    }
    r.z = var > 0.0 ? diff / std::sqrt(var) : 0.0;
    switch (alt) {
    case Alternative::greater: r.p_value = stats_detail::normal_sf(r.z); break;
    case Alternative::less: r.p_value = stats_detail::normal_sf(-r.z); break;
    default: r.p_value = std::min(1.0, 2.0 * stats_detail::normal_sf(std::abs(r.z)));
    }
    return r;
}

inline nlohmann::json to_json(const WilcoxonResult& r)
{
    return {{"w_statistic", r.w_statistic}, {"r_plus", r.r_plus},   {"r_minus", r.r_minus},
            {"n_effective", r.n_effective}, {"p_value", r.p_value}, {"method", r.method},
            {"reject_h0", r.reject()}};
}

// ---------------------------------------------------------------------------
// Total-order Sobol indices

/// A model input: continuous on [lower, upper], or discrete when `levels` is non-empty
/// (the unit interval is split evenly among the levels).
struct SobolFactor
{
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    std::vector<double> levels;

    double map(double u) const
    {
        if (levels.empty()) return lower + (upper - lower) * u;
        const auto i = std::min(levels.size() - 1, static_cast<std::size_t>(u * static_cast<double>(levels.size())));
        return levels[i];
    }

    static SobolFactor steps(std::string name, int lower, int upper, int step)
    {
        SobolFactor f{std::move(name), static_cast<double>(lower), static_cast<double>(upper), {}};
        for (int v = lower; v <= upper; v += step) f.levels.push_back(v);
        return f;
    }
    static SobolFactor flag(std::string name) { return {std::move(name), 0.0, 1.0, {0.0, 1.0}}; }
};

struct SobolReport
{
    std::string output = "y";
    std::vector<std::string> factors;
    std::vector<double> total_order;
    std::vector<double> half_width; ///< 95 % bootstrap half-widths
    int n_base = 0;
    std::string estimator = "jansen";
    double variance = 0.0;
    int evaluations = 0;
};

namespace stats_detail {

/// Latin hypercube sample in [0,1)^k: each column has one point per stratum.
inline std::vector<std::vector<double>> latin_hypercube(int n, std::size_t k, Rng& rng)
{
    std::vector<std::vector<double>> x(static_cast<std::size_t>(n), std::vector<double>(k));
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < k; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
        for (std::size_t i = 0; i < perm.size(); ++i)
            x[i][j] = (perm[i] + rng.uniform()) / static_cast<double>(n);
    }
    return x;
}

inline double jansen(std::span<const double> fa, std::span<const double> fab, std::span<const double> fb,
                     std::span<const std::size_t> idx)
{
    double sum = 0.0, mean = 0.0;
    for (std::size_t i : idx) mean += fa[i] + fb[i];
    mean /= 2.0 * static_cast<double>(idx.size());
    double var = 0.0;
    for (std::size_t i : idx) {
        const double d = fa[i] - fab[i];
        sum += d * d;
        var += (fa[i] - mean) * (fa[i] - mean) + (fb[i] - mean) * (fb[i] - mean);
    }
    var /= 2.0 * static_cast<double>(idx.size()) - 1.0;
    return var > 0.0 ? sum / (2.0 * static_cast<double>(idx.size())) / var : 0.0;
}

} // namespace stats_detail

using MultiModel = std::function<std::vector<double>(const std::vector<double>&)>;

/// Total-order indices of every model output. Saltelli design: two stratified base
/// matrices A and B plus one hybrid per factor, N(k + 2) model runs; Jansen estimator.
inline std::vector<SobolReport> sobol_total_order(const MultiModel& model, const std::vector<SobolFactor>& factors,
                                                  const std::vector<std::string>& outputs, int n_base,
                                                  std::uint64_t seed, int bootstrap = 200)
{
    if (factors.empty()) throw StatsError("sobol: no factors");
    if (n_base < 64 || (n_base & (n_base - 1)) != 0) throw StatsError("sobol: n_base must be a power of two >= 64");
    const std::size_t k = factors.size(), n = static_cast<std::size_t>(n_base), m = outputs.size();
    Rng rng(derive_seed(seed, 0x50b01ULL));
    const auto ua = stats_detail::latin_hypercube(n_base, k, rng);
    const auto ub = stats_detail::latin_hypercube(n_base, k, rng);

    auto eval = [&](const std::vector<double>& u) {
        std::vector<double> x(k);
        for (std::size_t j = 0; j < k; ++j) x[j] = factors[j].map(u[j]);
        auto y = model(x);
        if (y.size() != m) throw StatsError("sobol: model returned the wrong number of outputs");
        return y;
    };
    // f[o][block][i]: block 0 = A, 1 = B, 2 + j = AB_j
    std::vector<std::vector<std::vector<double>>> f(m, std::vector<std::vector<double>>(k + 2, std::vector<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ya = eval(ua[i]);
        const auto yb = eval(ub[i]);
        for (std::size_t o = 0; o < m; ++o) {
            f[o][0][i] = ya[o];
            f[o][1][i] = yb[o];
        }
        for (std::size_t j = 0; j < k; ++j) {
            auto u = ua[i];
            u[j] = ub[i][j];
            const auto y = eval(u);
            for (std::size_t o = 0; o < m; ++o) f[o][2 + j][i] = y[o];
        }
    }

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<SobolReport> out;
    for (std::size_t o = 0; o < m; ++o) {
        SobolReport r;
        r.output = outputs[o];
        r.n_base = n_base;
        r.evaluations = static_cast<int>(n * (k + 2));
        for (const auto& fac : factors) r.factors.push_back(fac.name);
        const auto& fa = f[o][0];
        const auto& fb = f[o][1];
        {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += fa[i] + fb[i];
            mean /= 2.0 * static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                r.variance += (fa[i] - mean) * (fa[i] - mean) + (fb[i] - mean) * (fb[i] - mean);
            r.variance /= 2.0 * static_cast<double>(n) - 1.0;
        }
        if (!(r.variance > 0.0)) throw StatsError("sobol: output '" + outputs[o] + "' has zero variance");
        for (std::size_t j = 0; j < k; ++j) r.total_order.push_back(stats_detail::jansen(fa, f[o][2 + j], fb, all));

        Rng boot(derive_seed(seed, 0xb007ULL, o));
        std::vector<std::vector<double>> samples(k);
        std::vector<std::size_t> idx(n);
        for (int b = 0; b < bootstrap; ++b) {
            for (auto& i : idx) i = boot.index(n);
            for (std::size_t j = 0; j < k; ++j) samples[j].push_back(stats_detail::jansen(fa, f[o][2 + j], fb, idx));
        }
        for (std::size_t j = 0; j < k; ++j) {
            double mean = 0.0, sq = 0.0;
            for (double s : samples[j]) mean += s;
            mean /= std::max<std::size_t>(1, samples[j].size());
            for (double s : samples[j]) sq += (s - mean) * (s - mean);
            const double sd = samples[j].size() > 1 ? std::sqrt(sq / static_cast<double>(samples[j].size() - 1)) : 0.0;
            r.half_width.push_back(1.96 * sd);
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline SobolReport sobol_total_order(const std::function<double(const std::vector<double>&)>& model,
                                     const std::vector<SobolFactor>& factors, int n_base, std::uint64_t seed,
                                     int bootstrap = 200)
{
    MultiModel wrapped = [&](const std::vector<double>& x) { return std::vector<double>{model(x)}; };
    return sobol_total_order(wrapped, factors, {"y"}, n_base, seed, bootstrap).front();
}

/// Ishigami test function.
inline double ishigami(const std::vector<double>& x, double a = 7.0, double b = 0.1)
{
    return std::sin(x[0]) + a * std::sin(x[1]) * std::sin(x[1]) + b * std::pow(x[2], 4) * std::sin(x[0]);
}

inline nlohmann::json to_json(const SobolReport& r)
{
    return {{"output", r.output},         {"factors", r.factors},   {"total_order", r.total_order},
            {"half_width", r.half_width}, {"n_base", r.n_base},     {"estimator", r.estimator},
            {"variance", r.variance},     {"evaluations", r.evaluations}};
}

/// Factor x output matrix of total-order indices, one row per factor.
inline nlohmann::json sobol_matrix(const std::vector<SobolReport>& reports)
{
    nlohmann::json j;
    if (reports.empty()) return j;
    j["factors"] = reports.front().factors;
    nlohmann::json outs = nlohmann::json::array(), rows = nlohmann::json::array();
    for (const auto& r : reports) outs.push_back(r.output);
    for (std::size_t f = 0; f < reports.front().factors.size(); ++f) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& r : reports) row.push_back(r.total_order[f]);
        rows.push_back(row);
    }
    j["outputs"] = outs;
    j["total_order"] = rows;
    return j;
}

} // namespace evtwin

#endif // EVTWIN_STATS_HPP
