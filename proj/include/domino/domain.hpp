#ifndef DOMINO_DOMAIN_HPP
#define DOMINO_DOMAIN_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "domino/core_model.hpp"

namespace domino {

// Canonical sorted set of firm ids.
class IndexSet {
  public:
    IndexSet() = default;
    explicit IndexSet(std::vector<int> ids);
    static IndexSet range(int n);
    static IndexSet single(int id) { return IndexSet(std::vector<int>{id}); }

    int size() const { return static_cast<int>(ids_.size()); }
    bool empty() const { return ids_.empty(); }
    bool contains(int id) const;
    const std::vector<int>& ids() const { return ids_; }

    bool is_subset_of(const IndexSet& other) const;
    bool intersects(const IndexSet& other) const;
    IndexSet unite(const IndexSet& other) const;
    IndexSet subtract(const IndexSet& other) const;

    // Bitmask over firm ids; requires all ids < 64.
    std::uint64_t mask() const;
    static IndexSet from_mask(std::uint64_t mask);

    bool operator==(const IndexSet& other) const = default;
    auto operator<=>(const IndexSet& other) const = default;

    std::string to_string() const; // "{0,2,5}"

  private:
    std::vector<int> ids_;
};

// Pre-jump state at a contagion time: exactly one firm (trigger) sits on its
// barrier, every other member of `firms` sits strictly above its own.
// `value_by_id` is indexed by firm id over the full portfolio; only entries
// for members of `firms` are meaningful.
struct BoundaryPoint {
    IndexSet firms;
    std::vector<double> value_by_id;
    int trigger = -1;
};

// Empty list iff bp satisfies the BoundaryPoint invariants for p.
std::vector<Violation> check_boundary_point(const BoundaryPoint& bp, const Portfolio& p);

// Per-coordinate interval (lo, hi], hi may be +infinity (then open).
struct Box {
    struct Interval {
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
    };
    IndexSet coords;
    std::vector<Interval> bounds; // aligned with coords.ids()
};
Box make_box(IndexSet coords, std::vector<Box::Interval> bounds);

// Strictly decreasing chain of non-empty subsets J_1 > J_2 > ... (all proper
// subsets of the ambient index set they are enumerated under).
struct DefaultChain {
    std::vector<IndexSet> sets;
    int length() const { return static_cast<int>(sets.size()); }
};

// Least fixpoint of the domino rule seeded at {trigger}: repeatedly add any
// live firm whose value is <= its barrier plus the accumulated jumps from the
// current set. Exact-boundary ties default (half-open intervals).
IndexSet cascade_closure(int trigger, const std::vector<double>& value_by_id,
                         const Portfolio& p, const IndexSet& universe);

// Same fixpoint from an arbitrary non-empty seed; the discretized simulator
// uses this when several firms cross inside one step.
IndexSet closure_from_seed(const IndexSet& seed, const std::vector<double>& value_by_id,
                           const Portfolio& p, const IndexSet& universe);

enum class MembershipMode { Closure, Permutation };

// Membership of the boundary state in the contagion domain of J: closure mode
// runs the fixpoint, permutation mode enumerates orderings of J and checks
// the nested interval conditions verbatim (|J| <= 9 guard).
bool member_dij(const BoundaryPoint& bp, const IndexSet& J, const Portfolio& p,
                MembershipMode mode);

// The unique J whose contagion domain contains the boundary state.
IndexSet classify_boundary(const BoundaryPoint& bp, const Portfolio& p);

// Survivor box: coordinate i in I\J gets (K_i + sum_{j in J} C_{j,i}, inf).
Box a_box(const IndexSet& I, const IndexSet& J, const Portfolio& p);

// Translate every coordinate bound by +sum_{j in J} C_{j,i} (or back).
Box shift_box(const IndexSet& I, const IndexSet& J, const Box& box, const Portfolio& p);
Box inverse_shift_box(const IndexSet& I, const IndexSet& J, const Box& box, const Portfolio& p);

// Lazily enumerates every chain J_1 > ... > J_k with non-empty J_k, proper
// J_1 < I and k <= min(max_len, |I|-1), each exactly once, in a fixed
// (descending-bitmask, pre-order) order. Guard: |I| <= 12.
class ChainEnumerator {
  public:
    ChainEnumerator(const IndexSet& I, int max_len);
    std::optional<DefaultChain> next();

  private:
    struct Frame {
        std::uint64_t set;
        std::uint64_t next_sub;
    };
    std::vector<Frame> stack_;
    int max_len_ = 0;
};

} // namespace domino

#endif
