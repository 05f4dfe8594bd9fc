#ifndef EVTWIN_CLI_HPP
#define EVTWIN_CLI_HPP

#include "evtwin/experiment.hpp"
#include "evtwin/server.hpp"
#include "evtwin/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace evtwin {

namespace cli_detail {

struct Globals
{
    std::optional<std::uint64_t> seed;
    std::string out = "results";
    std::string config;
    std::string format = "jsonl";
    int workers = 1;
};

inline ScenarioConfig base_config(const Globals& g)
{
    ScenarioConfig c = g.config.empty() ? campus_scenario() : load_scenario(g.config);
    if (g.seed) c.rng_seed = *g.seed;
    return c;
}

inline SearchSpace space_named(const std::string& name)
{
    if (name == "3d") return canonical_space();
    if (name == "5d") return extended_space();
    throw CLI::ValidationError("--space", "must be 3d or 5d");
}

inline std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

/// Flat rows of JSON objects as JSONL or CSV (columns from the first row).
inline void emit(std::ostream& os, const std::vector<nlohmann::json>& rows, const std::string& format)
{
    if (format == "jsonl") {
        for (const auto& r : rows) os << r.dump() << '\n';
        return;
    }
    if (rows.empty()) return;
    std::vector<std::string> cols;
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) cols.push_back(it.key());
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const auto& v = r.contains(cols[i]) ? r[cols[i]] : nlohmann::json(nullptr);
            os << (i ? "," : "") << csv_escape(v.is_string() ? v.get<std::string>() : v.is_null() ? "" : v.dump());
        }
        os << '\n';
    }
}

inline std::vector<double> parse_numbers(const std::string& text)
{
    std::vector<double> out;
    std::string tok;
    std::istringstream is(text);
    while (std::getline(is, tok, ',')) {
        std::size_t pos = 0;
        try {
            out.push_back(std::stod(tok, &pos));
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0) throw CLI::ValidationError("numbers", "cannot parse '" + tok + "'");
    }
    return out;
}

/// Two numeric columns from a CSV file (header lines are skipped).
inline std::pair<std::vector<double>, std::vector<double>> read_pairs(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> a, b;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string x, y;
        if (!std::getline(ls, x, ',') || !std::getline(ls, y, ',')) continue;
        try {
            const double u = std::stod(x), v = std::stod(y);
            a.push_back(u);
            b.push_back(v);
        } catch (const std::exception&) {
            // header or comment line
        }
    }
    return {a, b};
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline std::atomic<TwinServer*> g_server{nullptr};

} // namespace cli_detail

/// Entry point of the `evtwin` tool. Exit codes: 0 success, 1 usage error, 2 runtime error.
inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using namespace cli_detail;
    using nlohmann::json;

    CLI::App app{"evtwin: campus EV charging digital twin"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Simulation seed (overrides the config)");
    app.add_option("--out", g.out, "Results directory")->capture_default_str();
    app.add_option("--config", g.config, "Scenario JSON file (default: built-in campus scenario)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
    app.add_option("--workers", g.workers, "Parallel simulation workers")->check(CLI::PositiveNumber)->capture_default_str();

    // run
    auto* run_cmd = app.add_subcommand("run", "Run one scenario and store its record and day reports");

    // batch
    auto* batch_cmd = app.add_subcommand("batch", "Run several scenarios over a range of seeds");
    std::vector<std::string> batch_configs;
    int batch_seeds = 1;
    batch_cmd->add_option("configs", batch_configs, "Scenario JSON files (default: --config or built-in)");
    batch_cmd->add_option("--seeds", batch_seeds, "Replicate seeds per scenario, counting up from the scenario seed")
        ->check(CLI::PositiveNumber)->capture_default_str();

    // policy-sweep
    auto* sweep_cmd = app.add_subcommand("policy-sweep", "Satisfaction for policy cases 0-5 across EV levels");
    std::vector<int> sweep_ev{50, 100, 150, 200};
    std::vector<int> sweep_cases{0, 1, 2, 3, 4, 5};
    int sweep_seeds = 20;
    sweep_cmd->add_option("--ev", sweep_ev, "EV levels")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--cases", sweep_cases, "Policy cases")->delimiter(',')->check(CLI::Range(0, 5));
    sweep_cmd->add_option("--seeds", sweep_seeds, "Replicate seeds")->check(CLI::PositiveNumber)->capture_default_str();

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "Exhaustive search over a configuration space");
    std::string grid_space = "3d";
    std::vector<int> grid_ev{100};
    int grid_seeds = 1;
    std::uint64_t grid_cap = kDefaultGridCap;
    grid_cmd->add_option("--space", grid_space, "3d or 5d")->capture_default_str();
    grid_cmd->add_option("--ev", grid_ev, "EV levels")->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--seeds", grid_seeds, "Seeds per candidate")->check(CLI::PositiveNumber)->capture_default_str();
    grid_cmd->add_option("--cap", grid_cap, "Refuse grids larger than this")->capture_default_str();

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "Compare metaheuristics against the exhaustive grid");
    std::string opt_space = "3d";
    int opt_ev = 100;
    std::vector<std::string> opt_algs = algorithm_names();
    std::vector<int> opt_budgets{55};
    int opt_seeds = 10;
    int opt_sim_seeds = 1;
    opt_cmd->add_option("--space", opt_space, "3d or 5d")->capture_default_str();
    opt_cmd->add_option("--ev", opt_ev, "EV level")->capture_default_str();
    opt_cmd->add_option("--algorithms", opt_algs, "Algorithms")->delimiter(',')->check(CLI::IsMember(algorithm_names()));
    opt_cmd->add_option("--budget", opt_budgets, "Evaluation budgets")->delimiter(',')->capture_default_str();
    opt_cmd->add_option("--opt-seeds", opt_seeds, "Optimizer seeds")->check(CLI::PositiveNumber)->capture_default_str();
    opt_cmd->add_option("--sim-seeds", opt_sim_seeds, "Simulation seeds averaged per evaluation")
        ->check(CLI::PositiveNumber)->capture_default_str();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Statistical tests");
    stats_cmd->require_subcommand(1);
    auto* wil_cmd = stats_cmd->add_subcommand("wilcoxon", "Paired Wilcoxon signed-rank test");
    std::string wil_x, wil_y, wil_file, wil_alt = "two-sided", wil_method = "auto";
    wil_cmd->add_option("--x", wil_x, "First sample, comma separated");
    wil_cmd->add_option("--y", wil_y, "Second sample, comma separated");
    wil_cmd->add_option("--file", wil_file, "CSV with two numeric columns")->check(CLI::ExistingFile);
    wil_cmd->add_option("--alternative", wil_alt)->check(CLI::IsMember({"two-sided", "greater", "less"}))->capture_default_str();
    wil_cmd->add_option("--method", wil_method)->check(CLI::IsMember({"auto", "exact", "normal"}))->capture_default_str();
    auto* sob_cmd = stats_cmd->add_subcommand("sobol", "Total-order Sobol indices");
    std::string sob_model = "sim";
    int sob_n = 64, sob_boot = 200, sob_ev = 100;
    sob_cmd->add_option("--model", sob_model, "sim or ishigami")->check(CLI::IsMember({"sim", "ishigami"}))->capture_default_str();
    sob_cmd->add_option("--n-base", sob_n, "Base sample size (power of two, at least 64)")->capture_default_str();
    sob_cmd->add_option("--bootstrap", sob_boot, "Bootstrap resamples")->capture_default_str();
    sob_cmd->add_option("--ev", sob_ev, "EV level for the simulator model")->capture_default_str();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over HTTP");
    std::string host = "127.0.0.1", static_dir;
    int port = 8080;
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
    serve_cmd->add_option("--static", static_dir, "Directory of dashboard assets to serve at /")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All)
            << "\nScenario files are JSON objects; every field is optional. Defaults:\n"
            << dump_scenario(campus_scenario());
        return 1;
    }

    try {
        ResultsStore store(g.out);
        auto finish = [&] { store.write_index(); };

        if (*run_cmd) {
            const auto c = base_config(g);
            require_valid(c);
            store_run(store, "run", c);
            finish();
            const auto m = store.find_metrics({"run", scenario_hash(c), c.rng_seed, {}, {}});
            auto row = to_json(*m);
            row["scenario_hash"] = scenario_hash(c);
            row["seed"] = c.rng_seed;
            emit(out, {row}, g.format);
            return 0;
        }

        if (*batch_cmd) {
            std::vector<ScenarioConfig> bases;
            if (batch_configs.empty()) bases.push_back(base_config(g));
            for (const auto& path : batch_configs) {
                auto c = load_scenario(path);
                if (g.seed) c.rng_seed = *g.seed;
                bases.push_back(c);
            }
            std::vector<ScenarioConfig> configs;
            for (const auto& b : bases)
                for (auto s : seed_range(b.rng_seed, batch_seeds)) {
                    auto c = b;
                    c.rng_seed = s;
                    configs.push_back(c);
                }
            const auto metrics = run_configs(configs, {}, "batch", g.workers, &store);
            finish();
            std::vector<json> rows;
            for (std::size_t i = 0; i < configs.size(); ++i) {
                auto row = to_json(metrics[i]);
                row["scenario_hash"] = scenario_hash(configs[i]);
                row["seed"] = configs[i].rng_seed;
                rows.push_back(row);
            }
            emit(out, rows, g.format);
            return 0;
        }

        if (*sweep_cmd) {
            const auto base = base_config(g);
            SweepOptions o;
            o.ev_levels = sweep_ev;
            o.cases = sweep_cases;
            o.seeds = seed_range(base.rng_seed, sweep_seeds);
            o.workers = g.workers;
            o.store = &store;
            const auto recs = policy_sweep(base, o);
            finish();
            std::vector<json> rows;
            for (const auto& c : summarize_sweep(recs))
                rows.push_back({{"ev_level", c.ev_level}, {"policy_case", c.policy_case}, {"n", c.n},
                                {"satisfaction_mean", c.mean}, {"satisfaction_sd", c.sd}});
            std::ostringstream csv;
            emit(csv, rows, "csv");
            write_file(store.dir() / "policy_sweep_summary.csv", csv.str());
            emit(out, rows, g.format);
            return 0;
        }

        if (*grid_cmd) {
            const auto space = space_named(grid_space);
            const auto base = base_config(g);
            std::vector<GridSummary> sums;
            for (int ev : grid_ev) {
                GridOptions o;
                o.seeds = seed_range(base.rng_seed, grid_seeds);
                o.cap = grid_cap;
                o.workers = g.workers;
                o.store = &store;
                o.experiment = "grid_" + grid_space + "_ev" + std::to_string(ev);
                sums.push_back(grid_campaign(space, base, ev, o).summary);
            }
            finish();
            const auto table = summary_csv(sums);
            write_file(store.dir() / ("grid_" + grid_space + "_summary.csv"), table);
            if (g.format == "csv") {
                out << table;
            } else {
                for (const auto& s : sums) {
                    json opt = json::array();
                    for (const auto& p : s.optimum_set) opt.push_back(p);
                    out << json{{"ev_level", s.ev_level}, {"dims", s.dims}, {"best", s.best}, {"optimum_set", opt},
                                {"metrics", to_json(s.mean_metrics)}}.dump()
                        << '\n';
                }
            }
            return 0;
        }

        if (*opt_cmd) {
            const auto space = space_named(opt_space);
            const auto base = base_config(g);
            GridOptions go;
            go.seeds = seed_range(base.rng_seed, opt_sim_seeds);
            go.workers = g.workers;
            go.store = &store;
            go.experiment = "grid_" + opt_space + "_ev" + std::to_string(opt_ev);
            const auto grid = grid_campaign(space, base, opt_ev, go).summary;
            OptimizerCampaignOptions oo;
            oo.algorithms = opt_algs;
            oo.budgets = opt_budgets;
            oo.optimizer_seeds = seed_range(1, opt_seeds);
            oo.sim_seeds = go.seeds;
            oo.store = &store;
            oo.experiment = "optimizer_" + opt_space + "_ev" + std::to_string(opt_ev);
            const auto rows = optimizer_campaign(space, base, opt_ev, grid, oo);
            finish();
            const auto table = comparison_csv(rows);
            write_file(store.dir() / (oo.experiment + "_comparison.csv"), table);
            if (g.format == "csv") {
                out << table;
            } else {
                for (const auto& r : rows)
                    out << json{{"algorithm", r.algorithm}, {"seed", r.seed}, {"budget", r.budget},
                                {"best", r.best}, {"best_objective", r.best_objective},
                                {"grid_objective", r.grid_objective}, {"ned_to_grid", r.ned_to_grid},
                                {"ned_to_first_optimum", r.ned_to_first}, {"evaluations_used", r.evaluations_used}}
                               .dump()
                        << '\n';
            }
            return 0;
        }

        if (*wil_cmd) {
            std::vector<double> x, y;
            if (!wil_file.empty()) {
                std::tie(x, y) = read_pairs(wil_file);
            } else if (!wil_x.empty() && !wil_y.empty()) {
                x = parse_numbers(wil_x);
                y = parse_numbers(wil_y);
            } else {
                err << "error: stats wilcoxon needs --file or both --x and --y\n\n" << wil_cmd->help();
                return 1;
            }
            const auto alt = wil_alt == "greater" ? Alternative::greater
                             : wil_alt == "less"  ? Alternative::less
                                                  : Alternative::two_sided;
            const auto method = wil_method == "exact"    ? WilcoxonMethod::exact
                                : wil_method == "normal" ? WilcoxonMethod::normal
                                                         : WilcoxonMethod::automatic;
            emit(out, {to_json(wilcoxon_signed_rank(x, y, alt, method))}, g.format);
            return 0;
        }

        if (*sob_cmd) {
            std::vector<SobolReport> reports;
            if (sob_model == "ishigami") {
                const double pi = std::numbers::pi;
                std::vector<SobolFactor> f{{"x1", -pi, pi, {}}, {"x2", -pi, pi, {}}, {"x3", -pi, pi, {}}};
                reports.push_back(sobol_total_order([](const std::vector<double>& x) { return ishigami(x); }, f, sob_n,
                                                    g.seed.value_or(42), sob_boot));
            } else {
                auto base = base_config(g);
                base.nb_electrical = sob_ev;
                const std::string c11 = "n11_" + base.areas.front().area_id.substr(0, 1);
                const std::string c30 = "n30_" + base.areas.front().area_id.substr(0, 1);
                std::vector<SobolFactor> f{SobolFactor::steps(c11, 20, 50, 5), SobolFactor::steps(c30, 2, 10, 2),
                                           SobolFactor::steps("nb_solar", 200, 900, 100), SobolFactor::flag("notification"),
                                           SobolFactor::flag("idle_fee"), SobolFactor::flag("relocate_full")};
                MultiModel model = [&](const std::vector<double>& x) {
                    auto c = base;
                    apply_dimension(c, c11, static_cast<int>(std::lround(x[0])));
                    apply_dimension(c, c30, static_cast<int>(std::lround(x[1])));
                    apply_dimension(c, "nb_solar", static_cast<int>(std::lround(x[2])));
                    c.policies.notification = x[3] > 0.5;
                    c.policies.idle_fee = x[4] > 0.5;
                    c.policies.relocate_full = x[5] > 0.5;
                    const auto m = run_scenario(c).metrics;
                    return std::vector<double>{m.satisfaction, m.self_sufficiency, m.normalized_payback, m.objective};
                };
                reports = sobol_total_order(model, f, {"satisfaction", "self_sufficiency", "normalized_payback", "objective"},
                                            sob_n, base.rng_seed, sob_boot);
            }
            std::vector<json> rows;
            for (const auto& r : reports) rows.push_back(to_json(r));
            write_file(store.dir() / "sobol.json", json{{"reports", rows}, {"matrix", sobol_matrix(reports)}}.dump(2) + "\n");
            if (g.format == "csv") {
                std::vector<json> flat;
                for (const auto& r : reports)
                    for (std::size_t i = 0; i < r.factors.size(); ++i)
                        flat.push_back({{"output", r.output}, {"factor", r.factors[i]}, {"total_order", r.total_order[i]},
                                        {"half_width", r.half_width[i]}, {"n_base", r.n_base}});
                emit(out, flat, "csv");
            } else {
                emit(out, rows, "jsonl");
            }
            return 0;
        }

        if (*serve_cmd) {
            TwinServer server;
            if (!static_dir.empty() && !server.mount_static(static_dir))
                throw std::runtime_error("cannot serve " + static_dir);
            g_server = &server;
            auto stop = [](int) {
                if (auto* s = g_server.load()) s->stop();
            };
            std::signal(SIGINT, stop);
            std::signal(SIGTERM, stop);
            const int bound = port == 0 ? server.bind_any(host) : (server.bind(host, port) ? port : -1);
            if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
            err << "listening on http://" << host << ':' << bound << '\n';
            server.listen_after_bind();
            g_server = nullptr;
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace evtwin

#endif // EVTWIN_CLI_HPP
