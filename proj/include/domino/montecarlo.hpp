#ifndef DOMINO_MONTECARLO_HPP
#define DOMINO_MONTECARLO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "domino/domain.hpp"

namespace domino {

enum class Scheme { ExactRenewal, Euler };

struct SimConfig {
    std::int64_t n_paths = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ExactRenewal;
    double dt = 0.0; // euler only; <= 0 means horizon * 2^-10
    bool bridge_correction = true;
    int threads = 1;
    double resolved_dt() const { return dt > 0.0 ? dt : horizon * 0x1p-10; }
};

// One contagion event on one path. value vectors are indexed by firm id over
// the full portfolio; entries outside the respective sets are stale.
struct CascadeEvent {
    double time = 0.0;
    IndexSet live_before;
    IndexSet defaults;
    std::vector<double> pre_values;  // live firms at the event (defaulters at barrier)
    std::vector<double> post_values; // survivors after jumps
};

struct CascadeRecord {
    std::int64_t path = 0;
    std::vector<CascadeEvent> events;
    bool censored = false; // horizon reached with live firms
    int n_star() const { return static_cast<int>(events.size()); }
};

// Empty iff the record satisfies the structural invariants (strictly
// increasing times, disjoint default sets, survivors above barriers).
std::vector<std::string> check_record(const CascadeRecord& rec, const Portfolio& p,
                                      const SimConfig& cfg);

struct EstimateQueries {
    std::vector<IndexSet> survival_sets; // extra sets beyond per-firm singletons
};

struct EstimateRow {
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
};

// Integer tallies only, so merging partial results is exact and
// order-independent; derived estimates are computed on demand.
struct EnsembleStats {
    std::int64_t n_paths = 0;
    double horizon = 0.0;
    int n_firms = 0;
    std::vector<std::int64_t> nt_counts;     // N_t = k, size n+1
    std::vector<std::int64_t> event_counts;  // exactly e contagion events, size n+1
    std::vector<std::int64_t> firm_survival; // per firm id
    std::vector<std::int64_t> set_survival;  // aligned with queries.survival_sets
    std::int64_t tie_breaks = 0;             // simultaneous-hit ties resolved by lowest id

    void merge(const EnsembleStats& other);
    double tau_tail(int m) const; // P(tau(m) > horizon): paths with < m events
    std::vector<EstimateRow> rows(const EstimateQueries& queries) const;
};

// Exact renewal-chain sampler: per stage, exact hitting-time draws, exact
// conditional-survivor positions, closure, jumps, recurse. No time grid.
// Euler scheme: exact Gaussian increments on a fixed grid in reduced
// coordinates with an optional Brownian-bridge crossing Bernoulli per step;
// event times land on step midpoints.
//
// Reproducibility: path i draws from a counter stream keyed by (seed, i), so
// results are bit-identical for any thread count. Event lines, when
// requested, come back in path order.
EnsembleStats run_simulation(const Portfolio& p, const SimConfig& cfg,
                             const EstimateQueries& queries,
                             std::vector<std::string>* event_jsonl = nullptr);

// Materialized records for small runs and tests.
std::vector<CascadeRecord> simulate_records(const Portfolio& p, const SimConfig& cfg);

// Estimator over materialized records (single config).
EnsembleStats estimate(const std::vector<CascadeRecord>& records, const Portfolio& p,
                       const SimConfig& cfg, const EstimateQueries& queries);

struct CompareEntry {
    std::string label;
    double analytic = 0.0;
    double tolerance = 0.0; // analytic quadrature tolerance
    double mc = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct CompareReport {
    std::vector<CompareEntry> entries;
    bool all_pass = true;
};

struct LabeledValue {
    std::string label;
    double value = 0.0;
    double tolerance = 0.0;
};

// z = (analytic - mc)/SE; pass iff |analytic - mc| <= 3*SE + tolerance.
// Throws if an analytic label has no MC counterpart.
CompareReport compare(const std::vector<LabeledValue>& analytic,
                      const std::vector<EstimateRow>& mc);

} // namespace domino

#endif
