#include "domino/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace domino {

IndexSet::IndexSet(std::vector<int> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    for (std::size_t k = 0; k < ids_.size(); ++k) {
        if (ids_[k] < 0) throw std::invalid_argument("IndexSet: negative id");
        if (k > 0 && ids_[k] == ids_[k - 1]) throw std::invalid_argument("IndexSet: duplicate id");
    }
}

IndexSet IndexSet::range(int n) {
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    return IndexSet(std::move(ids));
}

bool IndexSet::contains(int id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
}

bool IndexSet::is_subset_of(const IndexSet& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

bool IndexSet::intersects(const IndexSet& other) const {
    auto a = ids_.begin();
    auto b = other.ids_.begin();
    while (a != ids_.end() && b != other.ids_.end()) {
        if (*a == *b) return true;
        (*a < *b) ? ++a : ++b;
    }
    return false;
}

IndexSet IndexSet::unite(const IndexSet& other) const {
    std::vector<int> out;
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                   std::back_inserter(out));
    IndexSet r;
    r.ids_ = std::move(out);
    return r;
}

IndexSet IndexSet::subtract(const IndexSet& other) const {
    std::vector<int> out;
    std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                        std::back_inserter(out));
    IndexSet r;
    r.ids_ = std::move(out);
    return r;
}

std::uint64_t IndexSet::mask() const {
    std::uint64_t m = 0;
    for (int id : ids_) {
        if (id >= 64) throw std::invalid_argument("IndexSet::mask: id >= 64");
        m |= (std::uint64_t{1} << id);
    }
    return m;
}

IndexSet IndexSet::from_mask(std::uint64_t mask) {
    std::vector<int> ids;
    for (int i = 0; mask != 0; ++i, mask >>= 1)
        if (mask & 1u) ids.push_back(i);
    IndexSet r;
    r.ids_ = std::move(ids);
    return r;
}

std::string IndexSet::to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < ids_.size(); ++k) {
        if (k) os << ',';
        os << ids_[k];
    }
    os << '}';
    return os.str();
}

std::vector<Violation> check_boundary_point(const BoundaryPoint& bp, const Portfolio& p) {
    std::vector<Violation> out;
    if (static_cast<int>(bp.value_by_id.size()) != p.size()) {
        out.push_back({-1, "values", "value per portfolio firm"});
        return out;
    }
    if (!bp.firms.contains(bp.trigger)) out.push_back({bp.trigger, "trigger", "trigger in firms"});
    for (int i : bp.firms.ids()) {
        const double v = bp.value_by_id[i];
        const double k = p.firms[i].barrier;
        if (i == bp.trigger) {
            if (v != k) out.push_back({i, "value", "trigger value equals barrier"});
        } else if (!(v > k)) {
            out.push_back({i, "value", "non-trigger value above barrier"});
        }
    }
    return out;
}

Box make_box(IndexSet coords, std::vector<Box::Interval> bounds) {
    if (coords.size() != static_cast<int>(bounds.size()))
        throw std::invalid_argument("make_box: coords/bounds size mismatch");
    for (const auto& iv : bounds)
        if (!(iv.lo < iv.hi)) throw std::invalid_argument("make_box: need lo < hi");
    return Box{std::move(coords), std::move(bounds)};
}

namespace {

IndexSet closure_impl(std::uint64_t seed_mask, const std::vector<double>& value_by_id,
                      const Portfolio& p, const IndexSet& universe) {
    // Round-based fixpoint; thresholds are monotone in the defaulted set, so
    // the result is independent of serialization order.
    std::uint64_t in = seed_mask;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int j : universe.ids()) {
            if (in & (std::uint64_t{1} << j)) continue;
            double thr = p.firms[j].barrier;
            for (int l : universe.ids())
                if (in & (std::uint64_t{1} << l)) thr += p.contagion.at(l, j);
            if (value_by_id[j] <= thr) {
                in |= (std::uint64_t{1} << j);
                changed = true;
            }
        }
    }
    return IndexSet::from_mask(in);
}

} // namespace

IndexSet cascade_closure(int trigger, const std::vector<double>& value_by_id,
                         const Portfolio& p, const IndexSet& universe) {
    if (!universe.contains(trigger))
        throw std::invalid_argument("cascade_closure: trigger outside universe");
    return closure_impl(std::uint64_t{1} << trigger, value_by_id, p, universe);
}

IndexSet closure_from_seed(const IndexSet& seed, const std::vector<double>& value_by_id,
                           const Portfolio& p, const IndexSet& universe) {
    if (seed.empty()) throw std::invalid_argument("closure_from_seed: empty seed");
    if (!seed.is_subset_of(universe))
        throw std::invalid_argument("closure_from_seed: seed outside universe");
    return closure_impl(seed.mask(), value_by_id, p, universe);
}

namespace {

bool in_a_box(const BoundaryPoint& bp, const IndexSet& J, const Portfolio& p) {
    const IndexSet rest = bp.firms.subtract(J);
    for (int i : rest.ids()) {
        double thr = p.firms[i].barrier;
        for (int j : J.ids()) thr += p.contagion.at(j, i);
        if (!(bp.value_by_id[i] > thr)) return false;
    }
    return true;
}

bool permutation_member(const BoundaryPoint& bp, const IndexSet& J, const Portfolio& p) {
    std::vector<int> order = J.ids();
    do {
        bool ok = true;
        for (std::size_t r = 0; r < order.size() && ok; ++r) {
            const int i = order[r];
            const double v = bp.value_by_id[i];
            const double k = p.firms[i].barrier;
            if (r == 0) {
                ok = (v == k);
            } else {
                double hi = k;
                for (std::size_t l = 0; l < r; ++l) hi += p.contagion.at(order[l], i);
                ok = (v > k) && (v <= hi);
            }
        }
        if (ok) return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

} // namespace

bool member_dij(const BoundaryPoint& bp, const IndexSet& J, const Portfolio& p,
                MembershipMode mode) {
    if (J.empty() || !J.is_subset_of(bp.firms))
        throw std::invalid_argument("member_dij: J must be a non-empty subset of the universe");
    if (mode == MembershipMode::Permutation) {
        if (J.size() > 9)
            throw std::invalid_argument("member_dij: permutation mode guard |J| <= 9");
        return permutation_member(bp, J, p) && in_a_box(bp, J, p);
    }
    if (!J.contains(bp.trigger)) return false;
    if (cascade_closure(bp.trigger, bp.value_by_id, p, bp.firms) != J) return false;
    return in_a_box(bp, J, p); // implied by the fixpoint; kept as an explicit check
}

IndexSet classify_boundary(const BoundaryPoint& bp, const Portfolio& p) {
    return cascade_closure(bp.trigger, bp.value_by_id, p, bp.firms);
}

Box a_box(const IndexSet& I, const IndexSet& J, const Portfolio& p) {
    if (J.empty()) throw std::invalid_argument("a_box: J must be non-empty");
    if (!J.is_subset_of(I) || J == I)
        throw std::invalid_argument("a_box: J must be a proper subset of I");
    IndexSet rest = I.subtract(J);
    std::vector<Box::Interval> bounds;
    bounds.reserve(rest.size());
    for (int i : rest.ids()) {
        double lo = p.firms[i].barrier;
        for (int j : J.ids()) lo += p.contagion.at(j, i);
        bounds.push_back({lo, std::numeric_limits<double>::infinity()});
    }
    return make_box(std::move(rest), std::move(bounds));
}

namespace {
Box shifted(const IndexSet& I, const IndexSet& J, const Box& box, const Portfolio& p,
            double sign) {
    if (!box.coords.is_subset_of(I.subtract(J)))
        throw std::invalid_argument("shift_box: box coordinates must lie in I\\J");
    Box out = box;
    for (int k = 0; k < out.coords.size(); ++k) {
        const int i = out.coords.ids()[k];
        double shift = 0.0;
        for (int j : J.ids()) shift += p.contagion.at(j, i);
        out.bounds[k].lo += sign * shift;
        out.bounds[k].hi += sign * shift;
    }
    return out;
}
} // namespace

Box shift_box(const IndexSet& I, const IndexSet& J, const Box& box, const Portfolio& p) {
    return shifted(I, J, box, p, +1.0);
}

Box inverse_shift_box(const IndexSet& I, const IndexSet& J, const Box& box, const Portfolio& p) {
    return shifted(I, J, box, p, -1.0);
}

ChainEnumerator::ChainEnumerator(const IndexSet& I, int max_len) {
    if (I.size() > 12) throw std::invalid_argument("enumerate_chains: guard |I| <= 12");
    max_len_ = std::min(max_len, I.size() - 1);
    const std::uint64_t m = I.mask();
    if (m != 0 && max_len_ >= 1) stack_.push_back({m, (m - 1) & m});
}

std::optional<DefaultChain> ChainEnumerator::next() {
    while (!stack_.empty()) {
        Frame& top = stack_.back();
        const int depth = static_cast<int>(stack_.size()) - 1; // current chain length
        if (top.next_sub != 0 && depth < max_len_) {
            const std::uint64_t s = top.next_sub;
            top.next_sub = (s - 1) & top.set;
            stack_.push_back({s, (s - 1) & s});
            DefaultChain chain;
            chain.sets.reserve(stack_.size() - 1);
            for (std::size_t k = 1; k < stack_.size(); ++k)
                chain.sets.push_back(IndexSet::from_mask(stack_[k].set));
            return chain;
        }
        stack_.pop_back();
    }
    return std::nullopt;
}

} // namespace domino
