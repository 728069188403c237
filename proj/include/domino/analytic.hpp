#ifndef DOMINO_ANALYTIC_HPP
#define DOMINO_ANALYTIC_HPP

#include <map>
#include <string>
#include <vector>

#include "domino/domain.hpp"

namespace domino {

// Node counts and policies for the nested cascade quadrature. The reported
// tolerance on every result comes from a node-doubling comparison (the value
// at the requested resolution against the value at half resolution).
struct QuadratureSpec {
    int time_nodes = 24;  // Gauss-Legendre nodes per time level
    int space_nodes = 16; // nodes per surviving spatial coordinate
    double tail_quantile = 1.0 - 1e-8;
    int max_cascade_depth = 0; // 0 = number of firms
    enum class Method { Tensor, Qmc } method = Method::Tensor;
    int qmc_points = 1 << 14;

    void validate() const;
    int depth_for(int n) const;
};

struct QuadResult {
    double value = 0.0;
    double tolerance = 0.0;
};

struct DistributionRow {
    std::string label;
    double probability = 0.0;
    double tolerance = 0.0;
};

struct DistributionTable {
    std::vector<DistributionRow> rows;
    std::string method; // "tensor" or "qmc"
    // Conservative extra allowance when max_cascade_depth truncates event
    // sequences the partition would otherwise include (zero when the depth
    // covers every feasible sequence).
    double truncation_allowance = 0.0;
    double sum() const;
    double total_tolerance() const;
};

enum class Terminal { SurviveAll, None };

// Product of survivor masses above the A-box bounds at time t:
// prod_{i in I\J} P(no hit by t, position above K_i + sum_{j in J} C_{j,i}).
double g_mass(const Portfolio& p, const IndexSet& I, const IndexSet& J,
              const std::vector<double>& value_by_id, double t);

// Density in t of a first contagion event that defaults all of I at once,
// evaluated by the alternating chain sum over proper-subset chains.
double h_full(const Portfolio& p, const IndexSet& I, const std::vector<double>& value_by_id,
              double t);

// Sub-cascade kernel: density in t of the event {exactly J defaults first}
// times the probability that survivor restart values land in the (post-jump)
// box A. Box coordinates must be exactly I\J with lower bounds >= barriers.
double h_sub_kernel(const Portfolio& p, const IndexSet& I, const IndexSet& J,
                    const std::vector<double>& value_by_id, double t, const Box& post_jump_box);

// P(the first m contagion events default exactly J_1, ..., J_m in order,
// all inside [0, horizon]); with Terminal::SurviveAll the remaining firms
// must additionally outlive the residual horizon (= "no (m+1)-th event").
// The empty sequence returns the no-default probability under SurviveAll.
QuadResult cascade_sequence_integral(const Portfolio& p, const std::vector<IndexSet>& sequence,
                                     double horizon, Terminal terminal,
                                     const QuadratureSpec& spec);

// Integral of h_full over (0, T]; T may be +infinity, which truncates where
// the remaining first-passage tail mass drops below 1e-10.
QuadResult integrate_h_full(const Portfolio& p, const std::vector<double>& value_by_id,
                            double T, const QuadratureSpec& spec);

// P(N_t = k) for k = 0..n by summing cascade_sequence_integral over ordered
// disjoint default sequences of total size k. Size guard: n <= 6.
DistributionTable prob_N_t(const Portfolio& p, double t, const QuadratureSpec& spec);

// P(tau(m) > t) = sum_{j < m} P(exactly j events by t). Requires
// m - 1 <= max_cascade_depth (depth guard). Exact decomposition, no
// truncation allowance needed.
QuadResult prob_tau_m_tail(const Portfolio& p, int m, double t, const QuadratureSpec& spec);

// P(every firm in K survives to t): sequences avoiding K, SurviveAll
// terminal (all survivors outlive the residual horizon).
QuadResult joint_survival(const Portfolio& p, const IndexSet& K, double t,
                          const QuadratureSpec& spec);

// Ordered families of pairwise-disjoint non-empty subsets of I\avoid with
// 1 <= length <= max_len, in a fixed deterministic order.
std::vector<std::vector<IndexSet>> enumerate_sequences(const IndexSet& I, int max_len,
                                                       const IndexSet& avoid);

// Memoizing front end: the table, tail and joint-survival sums draw on the
// same family of sequence integrals, so one engine instance shares them.
class CascadeAnalytics {
  public:
    CascadeAnalytics(Portfolio p, QuadratureSpec spec);
    QuadResult sequence(const std::vector<IndexSet>& seq, double horizon, Terminal terminal);
    DistributionTable prob_N_t(double t);
    QuadResult prob_tau_m_tail(int m, double t);
    QuadResult joint_survival(const IndexSet& K, double t);
    QuadResult truncated_mass(int depth, double t);
    const Portfolio& portfolio() const { return p_; }

  private:
    Portfolio p_;
    QuadratureSpec spec_;
    std::map<std::string, QuadResult> cache_;
};

} // namespace domino

#endif
