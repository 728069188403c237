#include "domino/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "domino/analytic.hpp"
#include "domino/config.hpp"
#include "domino/montecarlo.hpp"
#include "domino/report.hpp"

namespace domino {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitParse = 2;

struct QuadFlags {
    int time_nodes = 24;
    int space_nodes = 16;
    double tail_quantile = 1.0 - 1e-8;
    int depth = 0;
    std::string method = "tensor";
    int qmc_points = 1 << 14;

    QuadratureSpec spec() const {
        QuadratureSpec s;
        s.time_nodes = time_nodes;
        s.space_nodes = space_nodes;
        s.tail_quantile = tail_quantile;
        s.max_cascade_depth = depth;
        s.method = method == "qmc" ? QuadratureSpec::Method::Qmc
                                   : QuadratureSpec::Method::Tensor;
        s.qmc_points = qmc_points;
        return s;
    }
    void add_to(CLI::App* cmd) {
        cmd->add_option("--time-nodes", time_nodes, "Gauss-Legendre nodes per time level");
        cmd->add_option("--space-nodes", space_nodes, "nodes per spatial coordinate");
        cmd->add_option("--tail-quantile", tail_quantile, "spatial truncation quantile");
        cmd->add_option("--depth", depth, "max cascade depth (0 = number of firms)");
        cmd->add_option("--method", method, "tensor|qmc")
            ->check(CLI::IsMember({"tensor", "qmc"}));
        cmd->add_option("--qmc-points", qmc_points, "low-discrepancy point count");
    }
    void record(RunManifest& m) const {
        m.settings.emplace_back("time_nodes", std::to_string(time_nodes));
        m.settings.emplace_back("space_nodes", std::to_string(space_nodes));
        m.settings.emplace_back("tail_quantile", format_sig12(tail_quantile));
        m.settings.emplace_back("depth", std::to_string(depth));
        m.settings.emplace_back("method", method);
        m.settings.emplace_back("qmc_points", std::to_string(qmc_points));
    }
};

struct SimFlags {
    std::int64_t paths = 100000;
    std::uint64_t seed = 1;
    std::string scheme = "exact";
    double dt = 0.0;
    bool no_bridge = false;
    int threads = 0; // 0 = take DOMINO_THREADS or 1
    double contagion_scale = 1.0;

    SimConfig config(double horizon) const {
        SimConfig cfg;
        cfg.n_paths = paths;
        cfg.horizon = horizon;
        cfg.seed = seed;
        cfg.scheme = scheme == "euler" ? Scheme::Euler : Scheme::ExactRenewal;
        cfg.dt = dt;
        cfg.bridge_correction = !no_bridge;
        int t = threads;
        if (t <= 0) {
            if (const char* env = std::getenv("DOMINO_THREADS")) t = std::atoi(env);
            if (t <= 0) t = 1;
        }
        cfg.threads = t;
        return cfg;
    }
    void add_to(CLI::App* cmd, bool with_corrupt_hook) {
        cmd->add_option("--paths", paths, "number of Monte Carlo paths");
        cmd->add_option("--seed", seed, "64-bit seed");
        cmd->add_option("--scheme", scheme, "exact|euler")
            ->check(CLI::IsMember({"exact", "euler"}));
        cmd->add_option("--dt", dt, "euler step (default horizon*2^-10)");
        cmd->add_flag("--no-bridge", no_bridge, "disable Brownian-bridge crossing correction");
        cmd->add_option("--threads", threads, "simulator workers (DOMINO_THREADS fallback)");
        if (with_corrupt_hook)
            cmd->add_option("--sim-contagion-scale", contagion_scale,
                            "test hook: scale the simulator's contagion matrix")
                ->group(""); // hidden
    }
    void record(RunManifest& m, double horizon) const {
        m.settings.emplace_back("paths", std::to_string(paths));
        m.settings.emplace_back("scheme", scheme);
        m.settings.emplace_back("dt", format_sig12(config(horizon).resolved_dt()));
        m.settings.emplace_back("bridge_correction", no_bridge ? "false" : "true");
        m.settings.emplace_back("threads", std::to_string(config(horizon).threads));
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

IndexSet parse_ids(const std::string& csv) {
    std::vector<int> ids;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) ids.push_back(std::stoi(item));
    return IndexSet(ids);
}

struct LoadedConfig {
    Portfolio portfolio;
    std::string hash;
};

LoadedConfig load_checked(const std::string& path, std::ostream& err, int* exit_code) {
    LoadedConfig out;
    std::string text;
    try {
        text = slurp(path);
        out.portfolio = parse_portfolio_json(text);
        out.hash = config_hash(text);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        *exit_code = kExitParse;
        return out;
    }
    const auto violations = validate_portfolio(out.portfolio);
    if (!violations.empty()) {
        for (const auto& v : violations)
            err << "firm=" << v.firm << " field=" << v.field << " rule=" << v.rule << "\n";
        *exit_code = kExitInvalid;
    }
    return out;
}

// Analytic rows for the comparison run: full N table, tau tails reachable at
// the configured depth, per-firm and requested set survival. One engine so
// the sums share their cached sequence integrals.
std::vector<LabeledValue> analytic_rows_for_compare(const Portfolio& p, double t,
                                                    const QuadratureSpec& spec,
                                                    const std::optional<IndexSet>& survive_set) {
    std::vector<LabeledValue> rows;
    CascadeAnalytics engine(p, spec);
    const DistributionTable nt = engine.prob_N_t(t);
    const double trunc = nt.truncation_allowance;
    for (const auto& r : nt.rows) rows.push_back({r.label, r.probability, r.tolerance + trunc});
    const int depth = spec.depth_for(p.size());
    for (int m = 1; m <= p.size() && m - 1 <= depth; ++m) {
        const QuadResult r = engine.prob_tau_m_tail(m, t);
        rows.push_back({label_tau_tail(m), r.value, r.tolerance});
    }
    for (int i = 0; i < p.size(); ++i) {
        const QuadResult r = engine.joint_survival(IndexSet::single(i), t);
        rows.push_back({label_survive(IndexSet::single(i)), r.value, r.tolerance + trunc});
    }
    if (survive_set && survive_set->size() > 1) {
        const QuadResult r = engine.joint_survival(*survive_set, t);
        rows.push_back({label_survive(*survive_set), r.value, r.tolerance + trunc});
    }
    return rows;
}

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        const Portfolio p = parse_portfolio_json(slurp(config_path));
        const auto violations = validate_portfolio(p);
        for (const auto& v : violations)
            out << "firm=" << v.firm << " field=" << v.field << " rule=" << v.rule << "\n";
        return violations.empty() ? kExitOk : kExitInvalid;
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return kExitParse;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"default-contagion analytics and simulation"};
    app.require_subcommand(1);
    std::string config_path;
    std::string manifest_path = "domino-manifest.json";

    auto* validate = app.add_subcommand("validate", "check a portfolio config");
    validate->add_option("config", config_path)->required();

    auto* analytic = app.add_subcommand("analytic", "semi-analytic distributions");
    analytic->add_option("config", config_path)->required();
    double horizon = 1.0;
    analytic->add_option("--t", horizon, "time horizon")->required();
    std::vector<std::string> query{"nt"};
    analytic->add_option("--query", query, "nt | tau <m> | survive <ids>")
        ->expected(1, 2);
    QuadFlags quad;
    quad.add_to(analytic);
    analytic->add_option("--manifest", manifest_path, "manifest output path");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates");
    simulate->add_option("config", config_path)->required();
    double sim_horizon = 1.0;
    simulate->add_option("--t", sim_horizon, "time horizon")->required();
    SimFlags sim;
    sim.add_to(simulate, false);
    std::string events_path;
    simulate->add_option("--events", events_path, "write per-event JSONL here");
    std::string survive_ids;
    simulate->add_option("--survive-set", survive_ids, "extra joint-survival id set, e.g. 0,2");
    simulate->add_option("--manifest", manifest_path, "manifest output path");

    auto* cmp = app.add_subcommand("compare", "analytic vs Monte Carlo z-scores");
    cmp->add_option("config", config_path)->required();
    double cmp_horizon = 1.0;
    cmp->add_option("--t", cmp_horizon, "time horizon")->required();
    QuadFlags cmp_quad;
    cmp_quad.add_to(cmp);
    SimFlags cmp_sim;
    cmp_sim.add_to(cmp, true);
    std::string cmp_survive_ids;
    cmp->add_option("--survive-set", cmp_survive_ids, "extra joint-survival id set");
    cmp->add_option("--manifest", manifest_path, "manifest output path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(config_path, out, err);

        int exit_code = kExitOk;
        LoadedConfig cfg = load_checked(config_path, err, &exit_code);
        if (exit_code != kExitOk) return exit_code;

        RunManifest manifest;
        manifest.tool_version = kToolVersion;
        manifest.config_hash = cfg.hash;

        if (app.got_subcommand(analytic)) {
            manifest.subcommand = "analytic";
            manifest.settings.emplace_back("t", format_sig12(horizon));
            quad.record(manifest);
            const QuadratureSpec spec = quad.spec();
            CsvTable table;
            table.header = {"label", "probability", "tolerance", "method"};
            const std::string method =
                spec.method == QuadratureSpec::Method::Qmc ? "qmc" : "tensor";
            if (query.empty() || query[0] == "nt") {
                const DistributionTable nt = prob_N_t(cfg.portfolio, horizon, spec);
                for (const auto& r : nt.rows)
                    table.rows.push_back({r.label, format_sig12(r.probability),
                                          format_sig12(r.tolerance), nt.method});
            } else if (query[0] == "tau") {
                if (query.size() != 2) throw std::invalid_argument("--query tau needs <m>");
                const int m = std::stoi(query[1]);
                const QuadResult r = prob_tau_m_tail(cfg.portfolio, m, horizon, spec);
                table.rows.push_back({label_tau_tail(m), format_sig12(r.value),
                                      format_sig12(r.tolerance), method});
            } else if (query[0] == "survive") {
                if (query.size() != 2)
                    throw std::invalid_argument("--query survive needs <ids>");
                const IndexSet ids = parse_ids(query[1]);
                const QuadResult r = joint_survival(cfg.portfolio, ids, horizon, spec);
                table.rows.push_back({label_survive(ids), format_sig12(r.value),
                                      format_sig12(r.tolerance), method});
            } else {
                throw std::invalid_argument("unknown query '" + query[0] + "'");
            }
            out << write_csv(table);
            write_manifest_file(manifest, manifest_path);
            return kExitOk;
        }

        if (app.got_subcommand(simulate)) {
            manifest.subcommand = "simulate";
            manifest.seed = sim.seed;
            manifest.has_seed = true;
            manifest.settings.emplace_back("t", format_sig12(sim_horizon));
            sim.record(manifest, sim_horizon);
            const SimConfig scfg = sim.config(sim_horizon);
            EstimateQueries queries;
            if (!survive_ids.empty()) queries.survival_sets.push_back(parse_ids(survive_ids));
            std::vector<std::string> event_lines;
            EnsembleStats stats = run_simulation(
                cfg.portfolio, scfg, queries, events_path.empty() ? nullptr : &event_lines);
            CsvTable table;
            table.header = {"label", "estimate", "se"};
            for (const auto& row : stats.rows(queries))
                table.rows.push_back(
                    {row.label, format_sig12(row.estimate), format_sig12(row.se)});
            out << write_csv(table);
            if (!events_path.empty()) {
                std::ofstream ev(events_path, std::ios::binary);
                if (!ev) throw std::runtime_error("cannot write events file " + events_path);
                for (const auto& line : event_lines) ev << line << "\n";
            }
            write_manifest_file(manifest, manifest_path);
            return kExitOk;
        }

        if (app.got_subcommand(cmp)) {
            manifest.subcommand = "compare";
            manifest.seed = cmp_sim.seed;
            manifest.has_seed = true;
            manifest.settings.emplace_back("t", format_sig12(cmp_horizon));
            cmp_quad.record(manifest);
            cmp_sim.record(manifest, cmp_horizon);
            const QuadratureSpec spec = cmp_quad.spec();
            std::optional<IndexSet> survive_set;
            if (!cmp_survive_ids.empty()) survive_set = parse_ids(cmp_survive_ids);

            const auto analytic_rows =
                analytic_rows_for_compare(cfg.portfolio, cmp_horizon, spec, survive_set);

            Portfolio sim_portfolio = cfg.portfolio;
            if (cmp_sim.contagion_scale != 1.0) {
                auto rows = sim_portfolio.contagion.raw();
                for (auto& r : rows)
                    for (auto& v : r) v *= cmp_sim.contagion_scale;
                sim_portfolio.contagion = ContagionMatrix(rows);
            }
            EstimateQueries queries;
            if (survive_set && survive_set->size() > 1)
                queries.survival_sets.push_back(*survive_set);
            const SimConfig scfg = cmp_sim.config(cmp_horizon);
            const EnsembleStats stats = run_simulation(sim_portfolio, scfg, queries, nullptr);

            const CompareReport report = compare(analytic_rows, stats.rows(queries));
            CsvTable table;
            table.header = {"label", "analytic", "tolerance", "mc", "se", "z", "pass"};
            for (const auto& e : report.entries)
                table.rows.push_back({e.label, format_sig12(e.analytic),
                                      format_sig12(e.tolerance), format_sig12(e.mc),
                                      format_sig12(e.se), format_sig12(e.z),
                                      e.pass ? "1" : "0"});
            out << write_csv(table);
            write_manifest_file(manifest, manifest_path);
            return report.all_pass ? kExitOk : kExitInvalid;
        }
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

} // namespace domino
