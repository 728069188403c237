#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "domino/domain.hpp"
#include "testutil.hpp"

using namespace domino;
using testutil::make_abm;

namespace {

Portfolio two_firm_chain() {
    // K=(0,0), C_{0,1}=1, no feedback
    return make_abm({1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0},
                    {{0.0, 1.0}, {0.0, 0.0}});
}

BoundaryPoint bp_for(const Portfolio& p, std::vector<double> values, int trigger) {
    BoundaryPoint bp;
    bp.firms = IndexSet::range(p.size());
    bp.value_by_id = std::move(values);
    bp.trigger = trigger;
    return bp;
}

// Random boundary point: trigger exactly at its barrier, everyone else above
// theirs by an amount that straddles the contagion windows.
BoundaryPoint random_boundary(testutil::ParamGen& gen, const Portfolio& p, double c_max) {
    const int n = p.size();
    std::vector<double> values(n);
    const int trigger = gen.uniform_int(0, n - 1);
    for (int i = 0; i < n; ++i) {
        values[i] = i == trigger ? p.firms[i].barrier
                                 : p.firms[i].barrier + gen.uniform(0.0, c_max * (n - 1) * 1.2);
        if (i != trigger && values[i] <= p.firms[i].barrier)
            values[i] = p.firms[i].barrier + 1e-9;
    }
    return bp_for(p, values, trigger);
}

} // namespace

TEST_CASE("index set basics") {
    IndexSet s({3, 1, 2});
    CHECK(s.ids() == std::vector<int>{1, 2, 3});
    CHECK(s.contains(2));
    CHECK(!s.contains(0));
    CHECK_THROWS_AS(IndexSet({1, 1}), std::invalid_argument);
    CHECK(IndexSet({1}).is_subset_of(s));
    CHECK(s.subtract(IndexSet({2})) == IndexSet({1, 3}));
    CHECK(s.mask() == 0b1110u);
    CHECK(IndexSet::from_mask(0b1110u) == s);
    CHECK(s.to_string() == "{1,2,3}");
}

TEST_CASE("cascade closure hand checks") {
    const Portfolio p = two_firm_chain();
    CHECK(cascade_closure(0, {0.0, 0.5}, p, IndexSet::range(2)) == IndexSet({0, 1}));
    CHECK(cascade_closure(0, {0.0, 1.5}, p, IndexSet::range(2)) == IndexSet({0}));
    // boundary tie defaults (half-open upper bound)
    CHECK(cascade_closure(0, {0.0, 1.0}, p, IndexSet::range(2)) == IndexSet({0, 1}));

    // second-order domino: 0 -> 1 -> 2 with no direct 0 -> 2 edge
    const Portfolio q = make_abm({1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {1, 1, 1},
                                 {{0, 1, 0}, {0, 0, 1}, {0, 0, 0}});
    CHECK(cascade_closure(0, {0.0, 0.5, 0.9}, q, IndexSet::range(3)) == IndexSet({0, 1, 2}));
    CHECK(cascade_closure(0, {0.0, 0.5, 1.5}, q, IndexSet::range(3)) == IndexSet({0, 1}));
}

TEST_CASE("member_dij agrees across modes on hand examples") {
    const Portfolio p = two_firm_chain();
    const auto U = IndexSet::range(2);
    for (auto [v1, expect] : std::vector<std::pair<double, IndexSet>>{
             {0.5, IndexSet({0, 1})}, {1.5, IndexSet({0})}}) {
        const BoundaryPoint bp = bp_for(p, {0.0, v1}, 0);
        const IndexSet J = cascade_closure(0, bp.value_by_id, p, U);
        CHECK(J == expect);
        CHECK(member_dij(bp, J, p, MembershipMode::Closure));
        CHECK(member_dij(bp, J, p, MembershipMode::Permutation));
    }
    const BoundaryPoint outside = bp_for(p, {0.0, 1.5}, 0);
    CHECK(!member_dij(outside, IndexSet({0, 1}), p, MembershipMode::Closure));
    CHECK(!member_dij(outside, IndexSet({0, 1}), p, MembershipMode::Permutation));
}

TEST_CASE("permutation guard") {
    testutil::ParamGen gen(5);
    const Portfolio p = gen.random_portfolio(10, 0.5);
    BoundaryPoint bp = random_boundary(gen, p, 0.5);
    CHECK_THROWS_AS(member_dij(bp, IndexSet::range(10), p, MembershipMode::Permutation),
                    std::invalid_argument);
}

TEST_CASE("closure-permutation equivalence and unique classification (random sweep)") {
    testutil::ParamGen gen(20240809);
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = gen.uniform_int(1, 5);
        const Portfolio p = gen.random_portfolio(n, 1.0);
        const BoundaryPoint bp = random_boundary(gen, p, 1.0);
        const IndexSet classified = classify_boundary(bp, p);

        // exhaustive scan over all non-empty J containing or not the trigger
        int members = 0;
        for (std::uint64_t m = 1; m < (1ull << n); ++m) {
            const IndexSet J = IndexSet::from_mask(m);
            const bool via_closure = member_dij(bp, J, p, MembershipMode::Closure);
            const bool via_perm = member_dij(bp, J, p, MembershipMode::Permutation);
            REQUIRE(via_closure == via_perm);
            if (via_closure) {
                ++members;
                REQUIRE(J == classified);
            }
        }
        REQUIRE(members == 1); // partition: exactly one contagion domain
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("closure monotone in the contagion matrix") {
    testutil::ParamGen gen(77);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = gen.uniform_int(2, 5);
        Portfolio p = gen.random_portfolio(n, 0.8);
        const BoundaryPoint bp = random_boundary(gen, p, 0.8);
        const IndexSet base = classify_boundary(bp, p);
        Portfolio bigger = p;
        auto rows = bigger.contagion.raw();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) rows[i][j] = rows[i][j] * 1.5 + 0.05;
        bigger.contagion = ContagionMatrix(rows);
        const IndexSet grown = classify_boundary(bp, bigger);
        CHECK(base.is_subset_of(grown));
    }
}

TEST_CASE("serialization property: discovery order satisfies the interval bounds") {
    testutil::ParamGen gen(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = gen.uniform_int(2, 5);
        const Portfolio p = gen.random_portfolio(n, 1.0);
        const BoundaryPoint bp = random_boundary(gen, p, 1.0);
        const IndexSet J = classify_boundary(bp, p);
        if (J.size() < 2) continue;
        // replay the closure round by round, checking the per-step bound
        std::vector<int> order{bp.trigger};
        IndexSet in = IndexSet::single(bp.trigger);
        while (in != J) {
            bool added = false;
            const domino::IndexSet left = J.subtract(in);
            for (int j : left.ids()) {
                double thr = p.firms[j].barrier;
                for (int l : in.ids()) thr += p.contagion.at(l, j);
                if (bp.value_by_id[j] <= thr) {
                    // per-step interval bound: value in (barrier, thr]
                    CHECK(bp.value_by_id[j] > p.firms[j].barrier);
                    CHECK(bp.value_by_id[j] <= thr);
                    in = in.unite(IndexSet::single(j));
                    order.push_back(j);
                    added = true;
                    break;
                }
            }
            REQUIRE(added);
        }
    }
}

TEST_CASE("a_box bounds") {
    const Portfolio p = two_firm_chain();
    const Box box = a_box(IndexSet::range(2), IndexSet({0}), p);
    CHECK(box.coords == IndexSet({1}));
    CHECK(box.bounds[0].lo == doctest::Approx(1.0));
    CHECK(std::isinf(box.bounds[0].hi));

    const Portfolio z = make_abm({1, 1}, {0.2, 0.3}, {0, 0}, {1, 1}, {{0, 0}, {0, 0}});
    const Box zb = a_box(IndexSet::range(2), IndexSet({0}), z);
    CHECK(zb.bounds[0].lo == doctest::Approx(0.3)); // collapses to the barrier when C = 0

    const Portfolio q = make_abm({1, 1, 1}, {0, 0, 0.5}, {0, 0, 0}, {1, 1, 1},
                                 {{0, 1, 0.25}, {0, 0, 0.5}, {0, 0, 0}});
    const Box qb = a_box(IndexSet::range(3), IndexSet({0, 1}), q);
    CHECK(qb.coords == IndexSet({2}));
    CHECK(qb.bounds[0].lo == doctest::Approx(0.5 + 0.25 + 0.5));
    CHECK_THROWS_AS(a_box(IndexSet::range(2), IndexSet{}, p), std::invalid_argument);
    CHECK_THROWS_AS(a_box(IndexSet::range(2), IndexSet::range(2), p), std::invalid_argument);
}

TEST_CASE("shift_box and inverse are inverse bijections") {
    const Portfolio p = two_firm_chain();
    const Box box = make_box(IndexSet({1}), {{2.0, 3.0}});
    const Box moved = shift_box(IndexSet::range(2), IndexSet({0}), box, p);
    CHECK(moved.bounds[0].lo == doctest::Approx(3.0));
    CHECK(moved.bounds[0].hi == doctest::Approx(4.0));
    const Box back = inverse_shift_box(IndexSet::range(2), IndexSet({0}), moved, p);
    CHECK(back.bounds[0].lo == doctest::Approx(box.bounds[0].lo));
    CHECK(back.bounds[0].hi == doctest::Approx(box.bounds[0].hi));

    testutil::ParamGen gen(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Portfolio q = gen.random_portfolio(4, 1.0);
        const IndexSet J({0, 2});
        const Box b = make_box(IndexSet({1, 3}), {{gen.uniform(0, 1), gen.uniform(2, 3)},
                                                  {gen.uniform(-1, 0), gen.uniform(1, 2)}});
        const Box round =
            inverse_shift_box(IndexSet::range(4), J, shift_box(IndexSet::range(4), J, b, q), q);
        for (int k = 0; k < 2; ++k) {
            CHECK(round.bounds[k].lo == doctest::Approx(b.bounds[k].lo).epsilon(1e-12));
            CHECK(round.bounds[k].hi == doctest::Approx(b.bounds[k].hi).epsilon(1e-12));
        }
    }
}

TEST_CASE("chain enumeration counts and uniqueness") {
    SUBCASE("|I| = 1: empty") {
        ChainEnumerator ce(IndexSet({0}), 5);
        CHECK(!ce.next().has_value());
    }
    SUBCASE("|I| = 2: the two singletons") {
        ChainEnumerator ce(IndexSet({0, 1}), 5);
        std::vector<DefaultChain> chains;
        while (auto c = ce.next()) chains.push_back(*c);
        REQUIRE(chains.size() == 2);
        CHECK(chains[0].length() == 1);
        CHECK(chains[1].length() == 1);
    }
    SUBCASE("|I| = 3: 12 chains, 6 of each length") {
        ChainEnumerator ce(IndexSet({0, 1, 2}), 5);
        int len1 = 0, len2 = 0;
        std::set<std::vector<std::uint64_t>> seen;
        while (auto c = ce.next()) {
            std::vector<std::uint64_t> key;
            IndexSet prev = IndexSet::range(3);
            for (const auto& s : c->sets) {
                REQUIRE(!s.empty());
                REQUIRE(s.is_subset_of(prev));
                REQUIRE(s != prev);
                key.push_back(s.mask());
                prev = s;
            }
            REQUIRE(seen.insert(key).second); // exactly once
            (c->length() == 1 ? len1 : len2)++;
        }
        CHECK(len1 == 6);
        CHECK(len2 == 6);
    }
    SUBCASE("max_len truncates") {
        ChainEnumerator ce(IndexSet({0, 1, 2}), 1);
        int count = 0;
        while (auto c = ce.next()) {
            CHECK(c->length() == 1);
            ++count;
        }
        CHECK(count == 6);
    }
    SUBCASE("|I| = 4 chain count matches the ordered-chain formula") {
        // sum over k of (number of strict chains I > J_1 > ... > J_k, J_k nonempty)
        // counted independently by brute force below
        int brute = 0;
        const int n = 4;
        std::vector<std::uint64_t> sets;
        for (std::uint64_t m = 1; m < (1u << n) - 1; ++m) sets.push_back(m);
        // DFS count
        std::function<void(std::uint64_t)> dfs = [&](std::uint64_t parent) {
            for (std::uint64_t s : sets) {
                if ((s & parent) == s && s != parent) {
                    ++brute;
                    dfs(s);
                }
            }
        };
        dfs((1u << n) - 1);
        ChainEnumerator ce(IndexSet::range(4), 4);
        int count = 0;
        while (ce.next()) ++count;
        CHECK(count == brute);
    }
    SUBCASE("size guard") {
        CHECK_THROWS_AS(ChainEnumerator(IndexSet::range(13), 3), std::invalid_argument);
    }
}

TEST_CASE("boundary point checker") {
    const Portfolio p = two_firm_chain();
    CHECK(check_boundary_point(bp_for(p, {0.0, 0.7}, 0), p).empty());
    CHECK(!check_boundary_point(bp_for(p, {0.1, 0.7}, 0), p).empty()); // trigger off barrier
    CHECK(!check_boundary_point(bp_for(p, {0.0, -0.2}, 0), p).empty()); // other below barrier
}
