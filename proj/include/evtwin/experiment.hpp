#ifndef EVTWIN_EXPERIMENT_HPP
#define EVTWIN_EXPERIMENT_HPP

#include "evtwin/config.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/optimizer.hpp"
#include "evtwin/sim.hpp"
#include "evtwin/stats.hpp"

#include <json.hpp>

#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace evtwin {

inline constexpr int kResultsSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Policy cases

/// Policy combinations 0..5: none; ban; ban+fee; ban+fee+relocate; ban+fee+notify; all.
inline PolicySet policy_case(int id, PolicySet base = {})
{
    if (id < 0 || id > 5) throw std::invalid_argument("policy case must be 0..5");
    base.ban_gasoline = id >= 1;
    base.idle_fee = id >= 2;
    base.relocate_full = id == 3 || id == 5;
    base.notification = id >= 4;
    return base;
}

// ---------------------------------------------------------------------------
// Hashing

inline std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Canonical text of a scenario without its seed (the seed is keyed separately).
inline std::string canonical_scenario(const ScenarioConfig& c)
{
    auto j = to_json(c);
    j.erase("rng_seed");
    return j.dump();
}

inline std::string scenario_hash(const ScenarioConfig& c) { return hex64(fnv1a64(canonical_scenario(c))); }

// ---------------------------------------------------------------------------
// Simulator evaluator

/// Set one search dimension on a config. Known names: nb_solar, nb_wind, bess_kwh,
/// nb_electrical, and n11_<X> / n30_<X> for the area whose id starts with <X>.
inline void apply_dimension(ScenarioConfig& c, const std::string& name, int value)
{
    if (name == "nb_solar") c.energy.pv.nb_solar = value;
    else if (name == "nb_wind") c.energy.wind.nb_wind = value;
    else if (name == "bess_kwh") c.energy.bess.capacity_kwh = value;
    else if (name == "nb_electrical") c.nb_electrical = value;
    else if (name.size() > 4 && (name.starts_with("n11_") || name.starts_with("n30_"))) {
        const std::string prefix = name.substr(4);
        ChargingAreaConfig* area = nullptr;
        for (auto& a : c.areas)
            if (a.area_id.starts_with(prefix)) {
                area = &a;
                break;
            }
        if (!area) throw SpaceError("dimension '" + name + "' matches no charging area");
        (name[1] == '1' ? area->n_ports_11kw : area->n_ports_30kw) = value;
    } else {
        throw SpaceError("unknown dimension '" + name + "'");
    }
}

inline ScenarioConfig apply_point(ScenarioConfig c, const SearchSpace& space, const Point& p)
{
    if (p.size() != space.size()) throw SpaceError("point has the wrong dimensionality");
    for (std::size_t i = 0; i < p.size(); ++i) apply_dimension(c, space.dims[i].name, p[i]);
    return c;
}

/// Mean of metric sets; payback is infinite if any run never pays back.
inline MetricSet mean_metrics(const std::vector<MetricSet>& runs)
{
    MetricSet m;
    if (runs.empty()) return m;
    m.satisfaction = m.self_sufficiency = m.self_consumption = m.normalized_payback = m.objective = 0.0;
    m.payback_months = 0.0;
    double inv = 0.0, profit = 0.0;
    for (const auto& r : runs) {
        m.satisfaction += r.satisfaction;
        m.self_sufficiency += r.self_sufficiency;
        m.self_consumption += r.self_consumption;
        m.normalized_payback += r.normalized_payback;
        m.objective += r.objective;
        m.payback_months += r.payback_months;
        inv += static_cast<double>(r.investment);
        profit += static_cast<double>(r.monthly_profit);
    }
    const double n = static_cast<double>(runs.size());
    m.satisfaction /= n;
    m.self_sufficiency /= n;
    m.self_consumption /= n;
    m.normalized_payback /= n;
    m.objective /= n;
    m.payback_months /= n;
    m.investment = std::llround(inv / n);
    m.monthly_profit = std::llround(profit / n);
    m.payback_threshold_months = runs.front().payback_threshold_months;
    return m;
}

/// Runs the simulator at a point, once per seed, and averages the metrics.
struct SimEvaluator
{
    ScenarioConfig base;
    SearchSpace space;
    std::vector<std::uint64_t> seeds{1};

    MetricSet metrics_at(const Point& p) const
    {
        std::vector<MetricSet> runs;
        for (auto seed : seeds) {
            auto c = apply_point(base, space, p);
            c.rng_seed = seed;
            runs.push_back(compute_metrics(run(c), c));
        }
        return mean_metrics(runs);
    }

    Evaluation operator()(const Point& p) const
    {
        auto m = metrics_at(p);
        return {m.objective, m};
    }
};

// ---------------------------------------------------------------------------
// Ordered parallel job execution

/// Run fn(i) for i in [0, n) on up to `workers` threads and deliver results to
/// `sink` strictly in index order from the calling thread.
template <typename Result, typename Fn, typename Sink>
void run_ordered(std::size_t n, int workers, Fn fn, Sink sink)
{
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) sink(i, fn(i));
        return;
    }
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, Result> done;
    std::size_t next = 0;
    std::exception_ptr error;
    auto work = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= n || error) return;
                i = next++;
            }
            try {
                Result r = fn(i);
                std::lock_guard lock(mu);
                done.emplace(i, std::move(r));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::size_t emitted = 0; emitted < n;) {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return done.contains(emitted) || error; });
        if (error) break;
        Result r = std::move(done.at(emitted));
        done.erase(emitted);
        lock.unlock();
        sink(emitted, std::move(r));
        ++emitted;
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Results store

struct RecordKey
{
    std::string experiment;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string candidate; ///< rendered point, empty when not a search record
    std::string variant;   ///< distinguishes runs sharing the other fields (algorithm, budget)

    auto operator<=>(const RecordKey&) const = default;
};

/// Append-only JSONL results with resume. One file per experiment under `dir`,
/// plus `index.json` summarizing record counts.
class ResultsStore
{
public:
    explicit ResultsStore(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path file_for(const std::string& experiment) const { return dir_ / (experiment + ".jsonl"); }

    static RecordKey key_of(const nlohmann::json& rec)
    {
        RecordKey k;
        k.experiment = rec.value("experiment", "");
        k.scenario_hash = rec.value("scenario_hash", "");
        k.seed = rec.value("seed", std::uint64_t{0});
        if (rec.contains("candidate") && !rec["candidate"].is_null()) k.candidate = rec["candidate"].dump();
        k.variant = rec.value("variant", "");
        return k;
    }

    bool contains(const RecordKey& k)
    {
        load(k.experiment);
        return keys_.contains(k);
    }

    /// Stored metrics for a key, if present.
    std::optional<MetricSet> find_metrics(const RecordKey& k)
    {
        load(k.experiment);
        auto it = metrics_.find(k);
        if (it == metrics_.end()) return std::nullopt;
        return it->second;
    }

    /// Append a record unless its key is already present. Returns false on a duplicate.
    bool append(nlohmann::json rec)
    {
        rec["schema_version"] = kResultsSchemaVersion;
        const auto k = key_of(rec);
        load(k.experiment);
        if (keys_.contains(k)) return false;
        std::ofstream out(file_for(k.experiment), std::ios::app | std::ios::binary);
        out << rec.dump() << '\n';
        out.flush();
        if (!out) throw std::runtime_error("cannot write " + file_for(k.experiment).string());
        keys_.insert(k);
        remember(k, rec);
        ++counts_[k.experiment];
        return true;
    }

    /// Register the canonical text behind a hash; a different text under the same hash is an error.
    void check_hash(const std::string& hash, const std::string& canonical)
    {
        auto [it, inserted] = hash_texts_.emplace(hash, canonical);
        if (!inserted && it->second != canonical) throw std::runtime_error("scenario hash collision on " + hash);
    }

    std::vector<nlohmann::json> records(const std::string& experiment) const
    {
        std::vector<nlohmann::json> out;
        std::ifstream in(file_for(experiment), std::ios::binary);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) out.push_back(nlohmann::json::parse(line));
        return out;
    }

    void write_index()
    {
        nlohmann::json idx = nlohmann::json::object();
        idx["schema_version"] = kResultsSchemaVersion;
        nlohmann::json ex = nlohmann::json::object();
        for (const auto& [name, n] : counts_) ex[name] = {{"file", name + ".jsonl"}, {"records", n}};
        idx["experiments"] = ex;
        std::ofstream(dir_ / "index.json", std::ios::binary) << idx.dump(2) << '\n';
    }

private:
    /// Read existing records once; a trailing partial line from an interrupted write is dropped.
    void load(const std::string& experiment)
    {
        if (!loaded_.insert(experiment).second) return;
        counts_.try_emplace(experiment, 0);
        const auto path = file_for(experiment);
        if (!std::filesystem::exists(path)) return;
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        std::size_t good = 0, pos = 0;
        while (pos < text.size()) {
            const auto nl = text.find('\n', pos);
            if (nl == std::string::npos) break;
            const auto line = text.substr(pos, nl - pos);
            try {
                const auto rec = nlohmann::json::parse(line);
                keys_.insert(key_of(rec));
                remember(key_of(rec), rec);
                ++counts_[experiment];
            } catch (const nlohmann::json::exception&) {
                break;
            }
            pos = good = nl + 1;
        }
        if (good < text.size()) std::filesystem::resize_file(path, good);
    }

    void remember(const RecordKey& k, const nlohmann::json& rec)
    {
        if (rec.contains("metrics") && rec["metrics"].is_object()) metrics_[k] = metrics_from_json(rec["metrics"]);
    }

    std::filesystem::path dir_;
    std::set<RecordKey> keys_;
    std::map<RecordKey, MetricSet> metrics_;
    std::set<std::string> loaded_;
    std::map<std::string, std::size_t> counts_;
    std::map<std::string, std::string> hash_texts_;
};

// ---------------------------------------------------------------------------
// Records

inline nlohmann::json run_record(const std::string& experiment, const ScenarioConfig& c, const MetricSet& m,
                                 std::optional<std::string> day_reports_ref = std::nullopt)
{
    nlohmann::json r{{"experiment", experiment},
                     {"scenario_hash", scenario_hash(c)},
                     {"seed", c.rng_seed},
                     {"candidate", nullptr},
                     {"metrics", to_json(m)},
                     {"day_reports_ref", day_reports_ref ? nlohmann::json(*day_reports_ref) : nlohmann::json(nullptr)}};
    return r;
}

struct RunOutput
{
    std::vector<DayReport> reports;
    MetricSet metrics;
};

inline RunOutput run_scenario(const ScenarioConfig& c)
{
    RunOutput o;
    o.reports = run(c);
    o.metrics = compute_metrics(o.reports, c);
    return o;
}

/// Run one scenario and store its record and day reports. Skipped when already present.
inline bool store_run(ResultsStore& store, const std::string& experiment, const ScenarioConfig& c)
{
    const RecordKey key{experiment, scenario_hash(c), c.rng_seed, {}, {}};
    store.check_hash(key.scenario_hash, canonical_scenario(c));
    if (store.contains(key)) return false;
    const auto out = run_scenario(c);
    const std::string ref = "days/" + experiment + "-" + key.scenario_hash + "-" + std::to_string(c.rng_seed) + ".jsonl";
    std::filesystem::create_directories(store.dir() / "days");
    {
        std::ofstream days(store.dir() / ref, std::ios::binary | std::ios::trunc);
        for (const auto& r : out.reports) days << to_json(r).dump() << '\n';
    }
    store.append(run_record(experiment, c, out.metrics, ref));
    return true;
}

// ---------------------------------------------------------------------------
// Policy sweep

struct PolicySweepRecord
{
    int ev_level = 0;
    int policy_case = 0;
    std::uint64_t seed = 0;
    MetricSet metrics;
};

struct CellSummary
{
    int ev_level = 0;
    int policy_case = 0;
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int count)
{
    std::vector<std::uint64_t> s;
    for (int i = 0; i < count; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
    return s;
}

struct SweepOptions
{
    std::vector<int> ev_levels{50, 100, 150, 200};
    std::vector<int> cases{0, 1, 2, 3, 4, 5};
    std::vector<std::uint64_t> seeds{1};
    int workers = 1;
    ResultsStore* store = nullptr;
    std::string experiment = "policy_sweep";
};

/// Run configs in order with `workers` threads. Metrics already stored under the same key are
/// reused, new records are appended in config order. `tags[i]` adds fields to record i and may
/// carry its `candidate`.
inline std::vector<MetricSet> run_configs(const std::vector<ScenarioConfig>& configs,
                                          const std::vector<nlohmann::json>& tags, const std::string& experiment,
                                          int workers, ResultsStore* store)
{
    std::vector<nlohmann::json> skeletons;
    std::vector<std::optional<MetricSet>> cached(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        auto rec = run_record(experiment, configs[i], MetricSet{});
        if (i < tags.size()) rec.update(tags[i]);
        if (store) {
            store->check_hash(rec["scenario_hash"], canonical_scenario(configs[i]));
            cached[i] = store->find_metrics(ResultsStore::key_of(rec));
        }
        skeletons.push_back(std::move(rec));
    }
    std::vector<MetricSet> out(configs.size());
    run_ordered<MetricSet>(
        configs.size(), workers,
        [&](std::size_t i) { return cached[i] ? *cached[i] : run_scenario(configs[i]).metrics; },
        [&](std::size_t i, MetricSet m) {
            out[i] = m;
            if (store && !cached[i]) {
                skeletons[i]["metrics"] = to_json(m);
                store->append(skeletons[i]);
            }
        });
    return out;
}

/// One satisfaction record per (level, case, seed), in that nesting order.
inline std::vector<PolicySweepRecord> policy_sweep(const ScenarioConfig& base, const SweepOptions& o)
{
    std::vector<ScenarioConfig> configs;
    std::vector<nlohmann::json> tags;
    std::vector<PolicySweepRecord> out;
    for (int level : o.ev_levels)
        for (int cs : o.cases)
            for (auto seed : o.seeds) {
                auto c = base;
                c.nb_electrical = level;
                c.policies = policy_case(cs, base.policies);
                c.rng_seed = seed;
                configs.push_back(c);
                tags.push_back({{"ev_level", level}, {"policy_case", cs}});
                out.push_back({level, cs, seed, {}});
            }
    const auto metrics = run_configs(configs, tags, o.experiment, o.workers, o.store);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].metrics = metrics[i];
    return out;
}

inline std::vector<CellSummary> summarize_sweep(const std::vector<PolicySweepRecord>& recs)
{
    std::map<std::pair<int, int>, std::vector<double>> cells;
    for (const auto& r : recs) cells[{r.ev_level, r.policy_case}].push_back(r.metrics.satisfaction);
    std::vector<CellSummary> out;
    for (const auto& [k, v] : cells) {
        CellSummary s{k.first, k.second, static_cast<int>(v.size()), 0.0, 0.0};
        for (double x : v) s.mean += x;
        s.mean /= static_cast<double>(v.size());
        double sq = 0.0;
        for (double x : v) sq += (x - s.mean) * (x - s.mean);
        s.sd = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
        out.push_back(s);
    }
    return out;
}

/// Paired satisfaction series of one case at one level, ordered by seed.
inline std::vector<double> sweep_series(const std::vector<PolicySweepRecord>& recs, int level, int cs)
{
    std::vector<std::pair<std::uint64_t, double>> v;
    for (const auto& r : recs)
        if (r.ev_level == level && r.policy_case == cs) v.emplace_back(r.seed, r.metrics.satisfaction);
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (const auto& p : v) out.push_back(p.second);
    return out;
}

// ---------------------------------------------------------------------------
// Grid campaign

struct GridRecord
{
    Point candidate;
    std::uint64_t seed = 0;
    MetricSet metrics;
};

struct GridSummary
{
    int ev_level = 0;
    std::vector<std::string> dims;
    Point best;
    MetricSet mean_metrics; ///< seed means at the best point
    std::vector<Point> optimum_set; ///< every grid point tied at the best seed-mean objective
};

struct GridOptions
{
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t cap = kDefaultGridCap;
    int workers = 1;
    ResultsStore* store = nullptr;
    std::string experiment = "grid";
};

struct GridCampaign
{
    std::vector<GridRecord> records; ///< grid order, seeds innermost
    GridSummary summary;
};

inline GridCampaign grid_campaign(const SearchSpace& space, ScenarioConfig base, int ev_level, const GridOptions& o)
{
    space.validate();
    const auto n = space.grid_cardinality();
    if (n > o.cap)
        throw SpaceError("grid has " + std::to_string(n) + " points, above the cap of " + std::to_string(o.cap));
    base.nb_electrical = ev_level;
    const std::size_t ns = o.seeds.size();
    std::vector<ScenarioConfig> configs;
    std::vector<nlohmann::json> tags;
    GridCampaign out;
    for (std::uint64_t g = 0; g < n; ++g) {
        const Point p = space.grid_point(g);
        for (auto seed : o.seeds) {
            auto c = apply_point(base, space, p);
            c.rng_seed = seed;
            configs.push_back(std::move(c));
            tags.push_back({{"candidate", p}, {"ev_level", ev_level}});
            out.records.push_back({p, seed, {}});
        }
    }
    const auto metrics = run_configs(configs, tags, o.experiment, o.workers, o.store);
    for (std::size_t i = 0; i < out.records.size(); ++i) out.records[i].metrics = metrics[i];

    GridSummary& s = out.summary;
    s.ev_level = ev_level;
    for (const auto& d : space.dims) s.dims.push_back(d.name);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<MetricSet> means;
    for (std::uint64_t g = 0; g < n; ++g) {
        std::vector<MetricSet> runs;
        for (std::size_t k = 0; k < ns; ++k) runs.push_back(out.records[g * ns + k].metrics);
        means.push_back(mean_metrics(runs));
        best = std::max(best, means.back().objective);
    }
    for (std::uint64_t g = 0; g < n; ++g)
        if (means[g].objective == best) {
            if (s.optimum_set.empty()) {
                s.best = space.grid_point(g);
                s.mean_metrics = means[g];
            }
            s.optimum_set.push_back(space.grid_point(g));
        }
    return out;
}

/// Distance from `p` to the nearest grid optimum.
inline double ned_to_optimum(const Point& p, const GridSummary& s, const SearchSpace& space)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& q : s.optimum_set) d = std::min(d, ned(p, q, space));
    return d;
}

/// Summary table with configurations and metrics in rows and EV levels in columns.
inline std::string summary_csv(const std::vector<GridSummary>& sums)
{
    std::ostringstream os;
    os << "metric";
    for (const auto& s : sums) os << ',' << s.ev_level << " EVs";
    os << '\n';
    if (sums.empty()) return os.str();
    for (std::size_t d = 0; d < sums.front().dims.size(); ++d) {
        os << sums.front().dims[d];
        for (const auto& s : sums) os << ',' << s.best[d];
        os << '\n';
    }
    auto row = [&](const char* name, auto get) {
        os << name;
        char buf[32];
        for (const auto& s : sums) {
            std::snprintf(buf, sizeof buf, ",%.4f", get(s.mean_metrics));
            os << buf;
        }
        os << '\n';
    };
    row("satisfaction", [](const MetricSet& m) { return m.satisfaction; });
    row("self_consumption", [](const MetricSet& m) { return m.self_consumption; });
    row("self_sufficiency", [](const MetricSet& m) { return m.self_sufficiency; });
    row("normalized_payback", [](const MetricSet& m) { return m.normalized_payback; });
    row("objective", [](const MetricSet& m) { return m.objective; });
    return os.str();
}

// ---------------------------------------------------------------------------
// Optimizer campaign

struct OptimizerComparisonRow
{
    std::string algorithm;
    std::uint64_t seed = 0;
    Point best;
    double best_objective = 0.0;
    double grid_objective = 0.0;
    double ned_to_grid = 0.0;  ///< to the nearest of the tied grid optima
    double ned_to_first = 0.0; ///< to the first grid optimum in grid order
    int evaluations_used = 0;
    int budget = 0;
    std::vector<TrajectoryPoint> trajectory;
};

struct OptimizerCampaignOptions
{
    std::vector<std::string> algorithms = algorithm_names();
    std::vector<int> budgets{55};
    std::vector<std::uint64_t> optimizer_seeds{1};
    std::vector<std::uint64_t> sim_seeds{1};
    OptimizerParams params;
    ResultsStore* store = nullptr;
    std::string experiment = "optimizer";
};

/// Compare algorithms against a finished grid campaign over the same space and base.
inline std::vector<OptimizerComparisonRow> optimizer_campaign(const SearchSpace& space, ScenarioConfig base,
                                                              int ev_level, const GridSummary& grid,
                                                              const OptimizerCampaignOptions& o)
{
    if (grid.optimum_set.empty() || grid.dims.size() != space.size())
        throw std::invalid_argument("optimizer campaign needs a completed grid over the same space");
    base.nb_electrical = ev_level;
    const SimEvaluator sim{base, space, o.sim_seeds};
    std::vector<OptimizerComparisonRow> rows;
    for (const auto& alg : o.algorithms)
        for (int budget : o.budgets)
            for (auto seed : o.optimizer_seeds) {
                const auto rep = optimize(alg, space, sim, budget, seed, o.params, o.sim_seeds);
                OptimizerComparisonRow r;
                r.algorithm = alg;
                r.seed = seed;
                r.best = rep.best.values;
                r.best_objective = rep.best_objective;
                r.grid_objective = grid.mean_metrics.objective;
                r.ned_to_grid = ned_to_optimum(rep.best.values, grid, space);
                r.ned_to_first = ned(rep.best.values, grid.best, space);
                r.evaluations_used = rep.evaluations_used;
                r.budget = budget;
                r.trajectory = rep.trajectory;
                if (o.store) {
                    auto rec = to_json(rep);
                    rec["experiment"] = o.experiment;
                    rec["scenario_hash"] = scenario_hash(base);
                    rec["candidate"] = rep.best.values;
                    rec["ev_level"] = ev_level;
                    rec["ned_to_grid"] = r.ned_to_grid;
                    rec["ned_to_first_optimum"] = r.ned_to_first;
                    rec["variant"] = alg + "/" + std::to_string(budget);
                    rec["grid_objective"] = r.grid_objective;
                    rec["seed"] = seed;
                    o.store->append(rec);
                }
                rows.push_back(std::move(r));
            }
    return rows;
}

inline std::string comparison_csv(const std::vector<OptimizerComparisonRow>& rows)
{
    std::ostringstream os;
    os << "algorithm,seed,best,best_objective,grid_objective,ned_to_grid,evaluations_used,budget\n";
    char buf[160];
    for (const auto& r : rows) {
        std::string best;
        for (std::size_t i = 0; i < r.best.size(); ++i) best += (i ? " " : "") + std::to_string(r.best[i]);
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.4f,%d,%d\n", r.best_objective, r.grid_objective, r.ned_to_grid,
                      r.evaluations_used, r.budget);
        os << r.algorithm << ',' << r.seed << ',' << best << buf;
    }
    return os.str();
}

} // namespace evtwin

#endif // EVTWIN_EXPERIMENT_HPP
