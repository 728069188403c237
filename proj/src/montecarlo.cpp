#include "domino/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "domino/passage.hpp"
#include "domino/report.hpp"
#include "domino/rng.hpp"

namespace domino {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

struct PathSink {
    EnsembleStats stats;
    std::vector<CascadeRecord>* records = nullptr;
    std::vector<std::string>* event_lines = nullptr;
    const EstimateQueries* queries = nullptr;
    const Portfolio* portfolio = nullptr;

    void consume(CascadeRecord&& rec) {
        tally(rec);
        if (event_lines) {
            for (std::size_t j = 0; j < rec.events.size(); ++j)
                event_lines->push_back(event_line(rec, static_cast<int>(j)));
        }
        if (records) records->push_back(std::move(rec));
    }

    void tally(const CascadeRecord& rec) {
        const int n = portfolio->size();
        int defaulted = 0;
        std::uint64_t dead = 0;
        for (const auto& ev : rec.events) {
            defaulted += ev.defaults.size();
            dead |= ev.defaults.mask();
        }
        stats.nt_counts[defaulted] += 1;
        stats.event_counts[rec.events.size()] += 1;
        for (int i = 0; i < n; ++i)
            if (!(dead & (std::uint64_t{1} << i))) stats.firm_survival[i] += 1;
        for (std::size_t q = 0; q < queries->survival_sets.size(); ++q)
            if ((queries->survival_sets[q].mask() & dead) == 0) stats.set_survival[q] += 1;
        stats.n_paths += 1;
    }

    std::string event_line(const CascadeRecord& rec, int j) const {
        const CascadeEvent& ev = rec.events[j];
        std::ostringstream os;
        os << "{\"path\":" << rec.path << ",\"j\":" << (j + 1) << ",\"time\":"
           << format_sig12(ev.time) << ",\"defaults\":[";
        const auto& ids = ev.defaults.ids();
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (k) os << ',';
            os << ids[k];
        }
        os << "],\"survivor_values\":[";
        const IndexSet survivors = ev.live_before.subtract(ev.defaults);
        const auto& sids = survivors.ids();
        for (std::size_t k = 0; k < sids.size(); ++k) {
            if (k) os << ',';
            os << format_sig12(ev.post_values[sids[k]]);
        }
        os << "]}";
        return os.str();
    }
};

EnsembleStats blank_stats(const Portfolio& p, const SimConfig& cfg,
                          const EstimateQueries& queries) {
    EnsembleStats s;
    s.horizon = cfg.horizon;
    s.n_firms = p.size();
    s.nt_counts.assign(p.size() + 1, 0);
    s.event_counts.assign(p.size() + 1, 0);
    s.firm_survival.assign(p.size(), 0);
    s.set_survival.assign(queries.survival_sets.size(), 0);
    return s;
}

// One exact-renewal path. Draw order per stage: hitting times for live firms
// ascending by id, then conditional positions for non-trigger live firms
// ascending by id.
CascadeRecord run_exact_path(const Portfolio& p, const SimConfig& cfg, std::int64_t path,
                             std::int64_t* tie_breaks) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(path));
    CascadeRecord rec;
    rec.path = path;
    const int n = p.size();
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) values[i] = p.firms[i].x0;
    IndexSet live = IndexSet::range(n);
    double elapsed = 0.0;

    while (!live.empty()) {
        double best = kNever;
        int trigger = -1;
        bool tied = false;
        std::vector<PassageParams> pps;
        pps.reserve(live.size());
        for (int i : live.ids()) {
            const PassageParams pp = reduce_to_abm(p, i, values[i]);
            const auto tau = sample_hitting_time(pp, rng);
            const double t = tau.value_or(kNever);
            if (t < best) {
                best = t;
                trigger = live.ids()[pps.size()];
                tied = false;
            } else if (t == best && t != kNever) {
                tied = true; // keep lowest id (first seen)
            }
            pps.push_back(pp);
        }
        if (tied && tie_breaks) ++*tie_breaks;
        if (trigger < 0 || elapsed + best > cfg.horizon) {
            rec.censored = true;
            return rec;
        }
        elapsed += best;

        CascadeEvent ev;
        ev.time = elapsed;
        ev.live_before = live;
        for (std::size_t k = 0; k < live.ids().size(); ++k) {
            const int i = live.ids()[k];
            if (i == trigger) {
                values[i] = p.firms[i].barrier;
            } else {
                const double y = sample_conditional_survivor(pps[k], best, rng);
                values[i] = value_from_reduced(p, i, y);
            }
        }
        ev.defaults = cascade_closure(trigger, values, p, live);
        ev.pre_values = values;

        const IndexSet survivors = live.subtract(ev.defaults);
        apply_default_jumps(values, survivors.ids(), ev.defaults.ids(), p.contagion);
        ev.post_values = values;
        rec.events.push_back(std::move(ev));
        live = survivors;
    }
    rec.censored = false;
    return rec;
}

// One Euler path in reduced coordinates. Draw order per step: one normal per
// live firm ascending by id, plus one uniform for the bridge Bernoulli when
// the crossing probability is non-negligible.
CascadeRecord run_euler_path(const Portfolio& p, const SimConfig& cfg, std::int64_t path) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(path));
    CascadeRecord rec;
    rec.path = path;
    const int n = p.size();
    const double dt_req = cfg.resolved_dt();
    const std::int64_t n_steps = std::max<std::int64_t>(1, std::llround(cfg.horizon / dt_req));
    const double dt = cfg.horizon / static_cast<double>(n_steps);
    const double sqdt = std::sqrt(dt);

    std::vector<double> z(n), drift(n), vol(n), values(n);
    IndexSet live = IndexSet::range(n);
    for (int i = 0; i < n; ++i) {
        const PassageParams pp = reduce_to_abm(p, i, p.firms[i].x0);
        z[i] = pp.d;
        drift[i] = pp.m;
        vol[i] = pp.s;
        values[i] = p.firms[i].x0;
    }

    std::vector<int> crossed;
    for (std::int64_t step = 0; step < n_steps && !live.empty(); ++step) {
        crossed.clear();
        for (int i : live.ids()) {
            const double znew = z[i] + drift[i] * dt + vol[i] * sqdt * rng.normal();
            bool hit = znew <= 0.0;
            if (!hit && cfg.bridge_correction) {
                const double expo = 2.0 * z[i] * znew / (vol[i] * vol[i] * dt);
                // crossing prob < 1e-18 beyond this; skip the draw
                if (expo < 42.0 && rng.uniform() < std::exp(-expo)) hit = true;
            }
            z[i] = znew;
            values[i] = value_from_reduced(p, i, znew);
            if (hit) crossed.push_back(i);
        }
        if (crossed.empty()) continue;

        CascadeEvent ev;
        ev.time = (static_cast<double>(step) + 0.5) * dt;
        ev.live_before = live;
        for (int i : crossed) {
            values[i] = p.firms[i].barrier;
            z[i] = 0.0;
        }
        ev.defaults = closure_from_seed(IndexSet(crossed), values, p, live);
        ev.pre_values = values;

        const IndexSet survivors = live.subtract(ev.defaults);
        apply_default_jumps(values, survivors.ids(), ev.defaults.ids(), p.contagion);
        ev.post_values = values;
        for (int i : survivors.ids()) z[i] = reduced_distance(p, i, values[i]);
        rec.events.push_back(std::move(ev));
        live = survivors;
    }
    rec.censored = !live.empty();
    return rec;
}

void run_block(const Portfolio& p, const SimConfig& cfg, std::int64_t begin, std::int64_t end,
               PathSink& sink) {
    for (std::int64_t path = begin; path < end; ++path) {
        CascadeRecord rec = cfg.scheme == Scheme::ExactRenewal
                                ? run_exact_path(p, cfg, path, &sink.stats.tie_breaks)
                                : run_euler_path(p, cfg, path);
        sink.consume(std::move(rec));
    }
}

void check_config(const Portfolio& p, const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("simulate: n_paths >= 1 required");
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("simulate: horizon > 0 required");
    if (cfg.scheme == Scheme::Euler && cfg.dt > 0.0 && cfg.dt >= cfg.horizon)
        throw std::invalid_argument("simulate: dt must be < horizon");
    if (!validate_portfolio(p).empty())
        throw std::invalid_argument("simulate: invalid portfolio");
}

} // namespace

void EnsembleStats::merge(const EnsembleStats& other) {
    n_paths += other.n_paths;
    tie_breaks += other.tie_breaks;
    for (std::size_t i = 0; i < nt_counts.size(); ++i) nt_counts[i] += other.nt_counts[i];
    for (std::size_t i = 0; i < event_counts.size(); ++i)
        event_counts[i] += other.event_counts[i];
    for (std::size_t i = 0; i < firm_survival.size(); ++i)
        firm_survival[i] += other.firm_survival[i];
    for (std::size_t i = 0; i < set_survival.size(); ++i)
        set_survival[i] += other.set_survival[i];
}

double EnsembleStats::tau_tail(int m) const {
    std::int64_t c = 0;
    for (int e = 0; e < m && e < static_cast<int>(event_counts.size()); ++e)
        c += event_counts[e];
    return static_cast<double>(c) / static_cast<double>(n_paths);
}

std::vector<EstimateRow> EnsembleStats::rows(const EstimateQueries& queries) const {
    std::vector<EstimateRow> out;
    const double n = static_cast<double>(n_paths);
    auto binom = [&](double count) {
        const double phat = count / n;
        return EstimateRow{"", phat, std::sqrt(phat * (1.0 - phat) / n)};
    };
    for (int k = 0; k <= n_firms; ++k) {
        EstimateRow row = binom(static_cast<double>(nt_counts[k]));
        row.label = label_nt(k);
        out.push_back(row);
    }
    for (int m = 1; m <= n_firms; ++m) {
        std::int64_t c = 0;
        for (int e = 0; e < m; ++e) c += event_counts[e];
        EstimateRow row = binom(static_cast<double>(c));
        row.label = label_tau_tail(m);
        out.push_back(row);
    }
    for (int i = 0; i < n_firms; ++i) {
        EstimateRow row = binom(static_cast<double>(firm_survival[i]));
        row.label = label_survive(IndexSet::single(i));
        out.push_back(row);
    }
    for (std::size_t q = 0; q < queries.survival_sets.size(); ++q) {
        EstimateRow row = binom(static_cast<double>(set_survival[q]));
        row.label = label_survive(queries.survival_sets[q]);
        out.push_back(row);
    }
    return out;
}

EnsembleStats run_simulation(const Portfolio& p, const SimConfig& cfg,
                             const EstimateQueries& queries,
                             std::vector<std::string>* event_jsonl) {
    check_config(p, cfg);
    const int workers = std::max(1, cfg.threads);
    std::vector<PathSink> sinks(workers);
    std::vector<std::vector<std::string>> lines(workers);
    for (int w = 0; w < workers; ++w) {
        sinks[w].stats = blank_stats(p, cfg, queries);
        sinks[w].queries = &queries;
        sinks[w].portfolio = &p;
        if (event_jsonl) sinks[w].event_lines = &lines[w];
    }
    if (workers == 1) {
        run_block(p, cfg, 0, cfg.n_paths, sinks[0]);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = cfg.n_paths * w / workers;
            const std::int64_t end = cfg.n_paths * (w + 1) / workers;
            pool.emplace_back(
                [&, w, begin, end]() { run_block(p, cfg, begin, end, sinks[w]); });
        }
        for (auto& th : pool) th.join();
    }
    EnsembleStats total = blank_stats(p, cfg, queries);
    for (int w = 0; w < workers; ++w) total.merge(sinks[w].stats);
    if (event_jsonl)
        for (int w = 0; w < workers; ++w)
            for (auto& line : lines[w]) event_jsonl->push_back(std::move(line));
    return total;
}

std::vector<CascadeRecord> simulate_records(const Portfolio& p, const SimConfig& cfg) {
    check_config(p, cfg);
    EstimateQueries queries;
    PathSink sink;
    sink.stats = blank_stats(p, cfg, queries);
    sink.queries = &queries;
    sink.portfolio = &p;
    std::vector<CascadeRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.n_paths));
    sink.records = &records;
    run_block(p, cfg, 0, cfg.n_paths, sink);
    return records;
}

EnsembleStats estimate(const std::vector<CascadeRecord>& records, const Portfolio& p,
                       const SimConfig& cfg, const EstimateQueries& queries) {
    PathSink sink;
    sink.stats = blank_stats(p, cfg, queries);
    sink.queries = &queries;
    sink.portfolio = &p;
    for (const auto& rec : records) sink.tally(rec);
    return sink.stats;
}

std::vector<std::string> check_record(const CascadeRecord& rec, const Portfolio& p,
                                      const SimConfig& cfg) {
    std::vector<std::string> out;
    double prev = 0.0;
    IndexSet live = IndexSet::range(p.size());
    std::uint64_t seen = 0;
    for (const auto& ev : rec.events) {
        if (!(ev.time > prev)) out.push_back("event times not strictly increasing");
        if (ev.time > cfg.horizon) out.push_back("event beyond horizon");
        prev = ev.time;
        if (!(ev.live_before == live)) out.push_back("live set mismatch");
        if (ev.defaults.empty()) out.push_back("empty default set");
        if (!ev.defaults.is_subset_of(live)) out.push_back("defaults outside live set");
        if (ev.defaults.mask() & seen) out.push_back("default sets not disjoint");
        seen |= ev.defaults.mask();
        const IndexSet survivors = live.subtract(ev.defaults);
        for (int i : survivors.ids())
            if (!(ev.post_values[i] > p.firms[i].barrier))
                out.push_back("survivor at or below barrier after jumps");
        live = survivors;
    }
    if (rec.censored && live.empty()) out.push_back("censored with no survivors");
    if (!rec.censored && !live.empty()) out.push_back("uncensored with survivors");
    return out;
}

CompareReport compare(const std::vector<LabeledValue>& analytic,
                      const std::vector<EstimateRow>& mc) {
    CompareReport report;
    for (const auto& a : analytic) {
        const EstimateRow* match = nullptr;
        for (const auto& row : mc)
            if (row.label == a.label) {
                match = &row;
                break;
            }
        if (!match) throw std::invalid_argument("compare: no MC row for label " + a.label);
        CompareEntry e;
        e.label = a.label;
        e.analytic = a.value;
        e.tolerance = a.tolerance;
        e.mc = match->estimate;
        e.se = match->se;
        const double diff = a.value - match->estimate;
        if (match->se > 0.0)
            e.z = diff / match->se;
        else
            e.z = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
        e.pass = std::abs(diff) <= 3.0 * match->se + a.tolerance;
        report.all_pass = report.all_pass && e.pass;
        report.entries.push_back(std::move(e));
    }
    return report;
}

} // namespace domino
