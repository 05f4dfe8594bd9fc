#ifndef EVTWIN_OPTIMIZER_HPP
#define EVTWIN_OPTIMIZER_HPP

#include "evtwin/metrics.hpp"
#include "evtwin/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace evtwin {

using Point = std::vector<int>;

struct Dimension
{
    std::string name;
    int lower = 0;
    int upper = 0;
    int step = 1;
    bool continuous_allowed = false; ///< integer values between grid steps are admissible

    int grid_size() const { return (upper - lower) / step + 1; }
    bool operator==(const Dimension&) const = default;
};

class SpaceError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct SearchSpace
{
    std::vector<Dimension> dims;

    std::size_t size() const { return dims.size(); }

    void validate() const
    {
        if (dims.empty()) throw SpaceError("search space has no dimensions");
        for (const auto& d : dims)
            if (d.lower > d.upper || d.step <= 0) throw SpaceError("dimension '" + d.name + "' has invalid bounds or step");
    }

    std::uint64_t grid_cardinality() const
    {
        std::uint64_t n = 1;
        for (const auto& d : dims) n *= static_cast<std::uint64_t>(d.grid_size());
        return n;
    }

    bool contains(const Point& p) const
    {
        if (p.size() != dims.size()) return false;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p[i] < dims[i].lower || p[i] > dims[i].upper) return false;
        return true;
    }

    bool on_grid(const Point& p) const
    {
        if (!contains(p)) return false;
        for (std::size_t i = 0; i < p.size(); ++i)
            if ((p[i] - dims[i].lower) % dims[i].step != 0) return false;
        return true;
    }

    /// Grid point number `index` in lexicographic order (first dimension slowest).
    Point grid_point(std::uint64_t index) const
    {
        Point p(dims.size());
        for (std::size_t i = dims.size(); i-- > 0;) {
            const auto n = static_cast<std::uint64_t>(dims[i].grid_size());
            p[i] = dims[i].lower + static_cast<int>(index % n) * dims[i].step;
            index /= n;
        }
        return p;
    }

    Point random_grid_point(Rng& rng) const
    {
        Point p(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i)
            p[i] = dims[i].lower + static_cast<int>(rng.index(static_cast<std::size_t>(dims[i].grid_size()))) * dims[i].step;
        return p;
    }

    int clip(std::size_t i, int v) const { return std::clamp(v, dims[i].lower, dims[i].upper); }

    bool operator==(const SearchSpace&) const = default;
};

/// Ports at C-Parking and panel count.
inline SearchSpace canonical_space()
{
    return {{{"n11_C", 20, 50, 5, true}, {"n30_C", 2, 10, 2, true}, {"nb_solar", 200, 900, 100, true}}};
}

/// Canonical space plus the J-Parking port counts.
inline SearchSpace extended_space()
{
    auto s = canonical_space();
    s.dims.push_back({"n11_J", 15, 30, 3, true});
    s.dims.push_back({"n30_J", 2, 8, 2, true});
    return s;
}

inline std::string to_string(const Point& p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + std::to_string(p[i]);
    return s + ")";
}

/// Points differing from `p` by one step in exactly one dimension, clipped to bounds.
inline std::vector<Point> neighbors(const Point& p, const SearchSpace& space)
{
    std::vector<Point> out;
    for (std::size_t i = 0; i < space.size(); ++i)
        for (int dir : {-1, 1}) {
            Point q = p;
            q[i] = space.clip(i, p[i] + dir * space.dims[i].step);
            if (q != p && std::find(out.begin(), out.end(), q) == out.end()) out.push_back(std::move(q));
        }
    return out;
}

/// Step-normalized Euclidean distance.
inline double ned(const Point& a, const Point& b, const SearchSpace& space)
{
    if (a.size() != b.size() || a.size() != space.size()) throw SpaceError("ned: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i] - b[i]) / space.dims[i].step;
        s += d * d;
    }
    return std::sqrt(s);
}

struct Candidate
{
    Point values;
    std::string algorithm;
    int iteration = 0;
};

/// What a black-box evaluation returns. Simulator evaluators also fill the metrics.
struct Evaluation
{
    double objective = 0.0;
    std::optional<MetricSet> metrics;
};

using Evaluator = std::function<Evaluation(const Point&)>;

struct EvalResult
{
    Candidate candidate;
    std::optional<MetricSet> metrics;
    double objective = 0.0;
    std::vector<std::uint64_t> seeds;
    double wall_time_s = 0.0;
};

struct TrajectoryPoint
{
    int evaluation = 0; ///< 1-based count of distinct evaluations
    double best_objective = 0.0;
};

struct OptimizerRunReport
{
    std::string algorithm;
    int budget = 0;
    int evaluations_used = 0;
    Candidate best;
    double best_objective = -std::numeric_limits<double>::infinity();
    std::vector<TrajectoryPoint> trajectory;
    std::uint64_t seed = 0;
    std::vector<EvalResult> evaluations; ///< in evaluation order
};

/// Caches evaluations per point and enforces the evaluation budget.
class BudgetedEvaluator
{
public:
    BudgetedEvaluator(Evaluator fn, int budget, std::vector<std::uint64_t> seeds = {})
        : fn_(std::move(fn)), budget_(budget), seeds_(std::move(seeds))
    {
    }

    bool exhausted() const { return used_ >= budget_; }
    int used() const { return used_; }
    bool cached(const Point& p) const { return cache_.contains(p); }

    /// Objective at `p`, or nullopt if `p` is new and the budget is spent.
    std::optional<double> operator()(const Point& p, const std::string& algorithm, int iteration)
    {
        if (auto it = cache_.find(p); it != cache_.end()) return results_[it->second].objective;
        if (exhausted()) return std::nullopt;
        const auto t0 = std::chrono::steady_clock::now();
        Evaluation e = fn_(p);
        EvalResult r;
        r.candidate = {p, algorithm, iteration};
        r.metrics = std::move(e.metrics);
        r.objective = e.objective;
        r.seeds = seeds_;
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cache_.emplace(p, results_.size());
        results_.push_back(std::move(r));
        ++used_;
        if (!best_ || results_.back().objective > results_[*best_].objective) best_ = results_.size() - 1;
        trajectory_.push_back({used_, results_[*best_].objective});
        return results_.back().objective;
    }

    const std::vector<EvalResult>& results() const { return results_; }
    const std::vector<TrajectoryPoint>& trajectory() const { return trajectory_; }
    const EvalResult* best() const { return best_ ? &results_[*best_] : nullptr; }

private:
    Evaluator fn_;
    int budget_;
    std::vector<std::uint64_t> seeds_;
    std::map<Point, std::size_t> cache_;
    std::vector<EvalResult> results_;
    std::vector<TrajectoryPoint> trajectory_;
    std::optional<std::size_t> best_;
    int used_ = 0;
};

struct OptimizerParams
{
    // simulated annealing
    double initial_temperature = 0.1;
    double cooling = 0.95;
    // tabu
    int tabu_tenure = 10;
    double reactive_increase = 1.1;
    double reactive_decrease = 0.9;
    int reactive_quiet_iterations = 20; ///< iterations without a revisit before the tenure shrinks
    // genetic
    int population = 12;
    int tournament = 3;
    double mutation_prob = 0.2;
    int elitism = 1;
    // pso
    int swarm = 10;
    double inertia = 0.72;
    double cognitive = 1.49;
    double social = 1.49;
    double max_velocity_fraction = 0.2; ///< of each dimension's range
    /// Loop guard: stop after this many iterations per unit of budget even if the
    /// budget is not spent (all proposals already cached).
    int stall_factor = 50;
};

inline const std::vector<std::string>& algorithm_names()
{
    static const std::vector<std::string> names{"hill_climbing", "simulated_annealing", "tabu", "reactive_tabu",
                                                "genetic", "pso"};
    return names;
}

namespace opt_detail {

struct Context
{
    const SearchSpace& space;
    BudgetedEvaluator& eval;
    Rng& rng;
    const OptimizerParams& params;
    std::string name;
    long max_iterations;
};

inline void hill_climbing(Context& c)
{
    Point current = c.space.random_grid_point(c.rng);
    auto fc = c.eval(current, c.name, 0);
    for (long it = 1; fc && it < c.max_iterations && !c.eval.exhausted(); ++it) {
        std::optional<Point> best;
        double fbest = *fc;
        for (const auto& n : neighbors(current, c.space)) {
            const auto f = c.eval(n, c.name, static_cast<int>(it));
            if (!f) break;
            if (*f > fbest) {
                fbest = *f;
                best = n;
            }
        }
        if (best) {
            current = *best;
            fc = fbest;
            continue;
        }
        // local optimum: restart, preferring an unvisited point
        Point next = c.space.random_grid_point(c.rng);
        for (int tries = 0; tries < 100 && c.eval.cached(next); ++tries) next = c.space.random_grid_point(c.rng);
        current = next;
        fc = c.eval(current, c.name, static_cast<int>(it));
    }
}

inline void simulated_annealing(Context& c)
{
    Point current = c.space.random_grid_point(c.rng);
    auto fc = c.eval(current, c.name, 0);
    double t = c.params.initial_temperature;
    for (long it = 1; fc && it < c.max_iterations && !c.eval.exhausted(); ++it) {
        const auto ns = neighbors(current, c.space);
        if (ns.empty()) break;
        const Point& n = ns[c.rng.index(ns.size())];
        const auto fn = c.eval(n, c.name, static_cast<int>(it));
        if (!fn) break;
        const double delta = *fn - *fc;
        if (delta >= 0.0 || c.rng.uniform() < std::exp(delta / std::max(t, 1e-12))) {
            current = n;
            fc = fn;
        }
        t *= c.params.cooling;
    }
}

/// Tabu search; `reactive` adapts the tenure to detected cycling.
inline void tabu(Context& c, bool reactive)
{
    Point current = c.space.random_grid_point(c.rng);
    auto fc = c.eval(current, c.name, 0);
    if (!fc) return;
    double best_seen = *fc;
    double tenure = c.params.tabu_tenure;
    std::deque<Point> tabu_list;
    std::map<Point, long> last_visit{{current, 0}};
    long last_repeat = 0;
    for (long it = 1; it < c.max_iterations && !c.eval.exhausted(); ++it) {
        std::optional<Point> move;
        double fmove = -std::numeric_limits<double>::infinity();
        bool out_of_budget = false;
        for (const auto& n : neighbors(current, c.space)) {
            const auto f = c.eval(n, c.name, static_cast<int>(it));
            if (!f) {
                out_of_budget = true;
                break;
            }
            const bool is_tabu = std::find(tabu_list.begin(), tabu_list.end(), n) != tabu_list.end();
            if ((is_tabu && *f <= best_seen) || *f <= fmove) continue; // aspiration overrides tabu
            fmove = *f;
            move = n;
        }
        if (out_of_budget) break;
        if (!move) {
            tabu_list.clear();
            continue;
        }
        tabu_list.push_back(current);
        current = *move;
        best_seen = std::max(best_seen, fmove);
        if (reactive) {
            if (last_visit.contains(current)) {
                tenure = std::min(tenure * c.params.reactive_increase, 1000.0);
                last_repeat = it;
            } else if (it - last_repeat >= c.params.reactive_quiet_iterations) {
                tenure = std::max(1.0, tenure * c.params.reactive_decrease);
                last_repeat = it;
            }
            last_visit[current] = it;
        }
        while (static_cast<double>(tabu_list.size()) > std::round(tenure)) tabu_list.pop_front();
    }
}

inline void genetic(Context& c)
{
    const auto& p = c.params;
    struct Member
    {
        Point x;
        double f;
    };
    std::vector<Member> pop;
    for (int i = 0; i < p.population; ++i) {
        Point x = c.space.random_grid_point(c.rng);
        const auto f = c.eval(x, c.name, 0);
        if (!f) return;
        pop.push_back({std::move(x), *f});
    }
    auto by_fitness = [](const Member& a, const Member& b) { return a.f > b.f; };
    for (long gen = 1; gen < c.max_iterations && !c.eval.exhausted(); ++gen) {
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        auto select = [&]() -> const Member& {
            std::size_t best = c.rng.index(pop.size());
            for (int k = 1; k < p.tournament; ++k) {
                const std::size_t j = c.rng.index(pop.size());
                if (pop[j].f > pop[best].f) best = j;
            }
            return pop[best];
        };
        std::vector<Member> next(pop.begin(), pop.begin() + std::min<std::ptrdiff_t>(p.elitism, std::ssize(pop)));
        while (std::ssize(next) < p.population) {
            Point a = select().x;
            const Point& b = select().x;
            if (a.size() > 1) {
                const std::size_t cut = 1 + c.rng.index(a.size() - 1);
                for (std::size_t i = cut; i < a.size(); ++i) a[i] = b[i];
            }
            for (std::size_t i = 0; i < a.size(); ++i)
                if (c.rng.bernoulli(p.mutation_prob))
                    a[i] = c.space.clip(i, a[i] + (c.rng.bernoulli(0.5) ? 1 : -1) * c.space.dims[i].step);
            const auto f = c.eval(a, c.name, static_cast<int>(gen));
            if (!f) return;
            next.push_back({std::move(a), *f});
        }
        pop = std::move(next);
    }
}

inline void pso(Context& c)
{
    const auto& p = c.params;
    const std::size_t d = c.space.size();
    auto to_point = [&](const std::vector<double>& x) {
        Point q(d);
        for (std::size_t i = 0; i < d; ++i) q[i] = c.space.clip(i, static_cast<int>(std::lround(x[i])));
        return q;
    };
    struct Particle
    {
        std::vector<double> x, v, best_x;
        double best_f;
    };
    std::vector<double> vmax(d);
    for (std::size_t i = 0; i < d; ++i)
        vmax[i] = std::max(1.0, p.max_velocity_fraction * (c.space.dims[i].upper - c.space.dims[i].lower));
    std::vector<Particle> swarm;
    std::vector<double> gbest_x;
    double gbest_f = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < p.swarm; ++k) {
        Particle q;
        for (std::size_t i = 0; i < d; ++i) {
            const auto& dim = c.space.dims[i];
            q.x.push_back(c.rng.uniform(dim.lower, dim.upper));
            q.v.push_back(c.rng.uniform(-vmax[i], vmax[i]));
        }
        const auto f = c.eval(to_point(q.x), c.name, 0);
        if (!f) return;
        q.best_x = q.x;
        q.best_f = *f;
        if (*f > gbest_f) {
            gbest_f = *f;
            gbest_x = q.x;
        }
        swarm.push_back(std::move(q));
    }
    for (long it = 1; it < c.max_iterations && !c.eval.exhausted(); ++it) {
        for (auto& q : swarm) {
            for (std::size_t i = 0; i < d; ++i) {
                const double r1 = c.rng.uniform(), r2 = c.rng.uniform();
                q.v[i] = p.inertia * q.v[i] + p.cognitive * r1 * (q.best_x[i] - q.x[i]) +
                         p.social * r2 * (gbest_x[i] - q.x[i]);
                q.v[i] = std::clamp(q.v[i], -vmax[i], vmax[i]);
                const auto& dim = c.space.dims[i];
                q.x[i] = std::clamp(q.x[i] + q.v[i], static_cast<double>(dim.lower), static_cast<double>(dim.upper));
            }
            const auto f = c.eval(to_point(q.x), c.name, static_cast<int>(it));
            if (!f) return;
            if (*f > q.best_f) {
                q.best_f = *f;
                q.best_x = q.x;
            }
            if (*f > gbest_f) {
                gbest_f = *f;
                gbest_x = q.x;
            }
        }
    }
}

} // namespace opt_detail

/// Maximize the evaluator over the space within `budget` distinct evaluations.
inline OptimizerRunReport optimize(const std::string& algorithm, const SearchSpace& space, Evaluator evaluator,
                                   int budget, std::uint64_t seed, const OptimizerParams& params = {},
                                   std::vector<std::uint64_t> sim_seeds = {})
{
    space.validate();
    const auto& names = algorithm_names();
    if (std::find(names.begin(), names.end(), algorithm) == names.end())
        throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (algorithm == "genetic" && budget < params.population)
        throw std::invalid_argument("budget below population size");
    if (algorithm == "pso" && budget < params.swarm) throw std::invalid_argument("budget below swarm size");

    BudgetedEvaluator eval(std::move(evaluator), budget, std::move(sim_seeds));
    Rng rng(derive_seed(seed, 0x0971ULL));
    opt_detail::Context ctx{space, eval, rng, params, algorithm,
                            static_cast<long>(params.stall_factor) * std::max(budget, 1)};
    if (algorithm == "hill_climbing") opt_detail::hill_climbing(ctx);
    else if (algorithm == "simulated_annealing") opt_detail::simulated_annealing(ctx);
    else if (algorithm == "tabu") opt_detail::tabu(ctx, false);
    else if (algorithm == "reactive_tabu") opt_detail::tabu(ctx, true);
    else if (algorithm == "genetic") opt_detail::genetic(ctx);
    else opt_detail::pso(ctx);

    OptimizerRunReport r;
    r.algorithm = algorithm;
    r.budget = budget;
    r.seed = seed;
    r.evaluations_used = eval.used();
    r.trajectory = eval.trajectory();
    r.evaluations = eval.results();
    if (const auto* b = eval.best()) {
        r.best = b->candidate;
        r.best_objective = b->objective;
    }
    return r;
}

inline constexpr std::uint64_t kDefaultGridCap = 10'000;

/// Evaluate every grid point; results sorted by objective (descending, ties in grid order).
inline std::vector<EvalResult> full_grid(const SearchSpace& space, const Evaluator& evaluator,
                                         std::uint64_t cap = kDefaultGridCap, std::vector<std::uint64_t> sim_seeds = {})
{
    space.validate();
    const auto n = space.grid_cardinality();
    if (n > cap)
        throw SpaceError("grid has " + std::to_string(n) + " points, above the cap of " + std::to_string(cap));
    std::vector<EvalResult> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Point p = space.grid_point(i);
        Evaluation e = evaluator(p);
        EvalResult r;
        r.candidate = {std::move(p), "full_grid", static_cast<int>(i)};
        r.metrics = std::move(e.metrics);
        r.objective = e.objective;
        r.seeds = sim_seeds;
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const EvalResult& a, const EvalResult& b) { return a.objective > b.objective; });
    return out;
}

inline nlohmann::json to_json(const EvalResult& r)
{
    nlohmann::json j{{"candidate", r.candidate.values},
                     {"algorithm", r.candidate.algorithm},
                     {"iteration", r.candidate.iteration},
                     {"objective", r.objective},
                     {"seeds", r.seeds}};
    if (r.metrics) j["metrics"] = to_json(*r.metrics);
    return j;
}

inline nlohmann::json to_json(const OptimizerRunReport& r)
{
    nlohmann::json traj = nlohmann::json::array();
    for (const auto& t : r.trajectory) traj.push_back({t.evaluation, t.best_objective});
    return {{"algorithm", r.algorithm},
            {"budget", r.budget},
            {"evaluations_used", r.evaluations_used},
            {"best", r.best.values},
            {"best_objective", r.best_objective},
            {"best_found_by", r.best.algorithm},
            {"best_iteration", r.best.iteration},
            {"trajectory", traj},
            {"seed", r.seed}};
}

} // namespace evtwin

#endif // EVTWIN_OPTIMIZER_HPP
