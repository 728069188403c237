#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "domino/normal.hpp"
#include "domino/passage.hpp"
#include "testutil.hpp"

using namespace domino;
using testutil::adaptive_simpson;
using testutil::integrate_to_inf;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("fp_density closed form against frozen oracle values") {
    const PassageParams pp(1.0, 0.0, 1.0);
    // (2 pi)^{-1/2} e^{-1/2}; cross-checked by finite differences below
    CHECK(fp_density(pp, 1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-14));
    CHECK(fp_density(pp, 1e-8) == 0.0); // essential singularity vanishes
    // finite-difference of the reflection-principle CDF
    const double h = 1e-6;
    const double fd = (fp_cdf(pp, 1.0 + h) - fp_cdf(pp, 1.0 - h)) / (2.0 * h);
    CHECK(fp_density(pp, 1.0) == doctest::Approx(fd).epsilon(1e-8));
    // integrates to the total hit probability
    const double total =
        integrate_to_inf([&](double t) { return t <= 0 ? 0.0 : fp_density(pp, t); }, 0.0, 1e-11);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(fp_density(pp, 0.0), std::invalid_argument);
}

TEST_CASE("hit_prob_total") {
    CHECK(hit_prob_total(PassageParams(1.0, 0.0, 1.0)) == 1.0);
    CHECK(hit_prob_total(PassageParams(1.0, -0.5, 1.0)) == 1.0);
    CHECK(hit_prob_total(PassageParams(1.0, 1.0, 1.0)) ==
          doctest::Approx(0.1353352832366127).epsilon(1e-14));
    CHECK(hit_prob_total(PassageParams(2.0, 1.0, 1.0)) ==
          doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
    // drifted density integrates to the same total
    const PassageParams pp(1.0, 1.0, 1.0);
    const double total =
        integrate_to_inf([&](double t) { return t <= 0 ? 0.0 : fp_density(pp, t); }, 0.0, 1e-11);
    CHECK(total == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("survival reference and limits") {
    const PassageParams pp(1.0, 0.0, 1.0);
    CHECK(survival(pp, 1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-14));
    CHECK(survival(pp, 1e-12) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(survival(pp, 1e8) < 1e-3);
    CHECK_THROWS_AS(survival(pp, -1.0), std::invalid_argument);
    // CDF consistency: fp_cdf + survival = 1 for all t
    for (double t : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
        for (double m : {-0.7, 0.0, 0.4}) {
            const PassageParams q(0.8, m, 1.2);
            CHECK(fp_cdf(q, t) + survival(q, t) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("survival equals integral of fp_density complement (quadrature oracle)") {
    const PassageParams pp(0.9, -0.3, 1.1);
    for (double t : {0.25, 1.0, 2.5}) {
        const double hit_mass =
            adaptive_simpson([&](double u) { return u <= 0 ? 0.0 : fp_density(pp, u); }, 1e-14,
                             t, 1e-11);
        CHECK(survival(pp, t) == doctest::Approx(1.0 - hit_mass).epsilon(1e-8));
    }
}

TEST_CASE("killed_density reference, boundary, and mass identity") {
    const PassageParams pp(1.0, 0.0, 1.0);
    CHECK(killed_density(pp, 1.0, 1.0) == doctest::Approx(0.3449513138882446).epsilon(1e-14));
    CHECK(killed_density(pp, 1e-12, 1.0) == doctest::Approx(0.0).epsilon(1e-11));
    CHECK_THROWS_AS(killed_density(pp, -0.5, 1.0), std::invalid_argument);
    const double mass =
        integrate_to_inf([&](double y) { return y <= 0 ? 0.0 : killed_density(pp, y, 1.0); },
                         0.0, 1e-12);
    CHECK(mass == doctest::Approx(survival(pp, 1.0)).epsilon(1e-10));
}

TEST_CASE("killed_interval_mass: quadrature oracle, additivity, full line") {
    const PassageParams pp(1.0, 0.0, 1.0);
    const double quad = adaptive_simpson([&](double y) { return killed_density(pp, y, 1.0); },
                                         0.5, 1.5, 1e-13);
    CHECK(killed_interval_mass(pp, 0.5, 1.5, 1.0) == doctest::Approx(quad).epsilon(1e-10));
    CHECK(killed_interval_mass(pp, 0.0, kInf, 1.0) ==
          doctest::Approx(survival(pp, 1.0)).epsilon(1e-13));
    const double drifted = killed_interval_mass(PassageParams(0.7, 0.25, 0.9), 0.4, 2.2, 0.8);
    const double drifted_quad = adaptive_simpson(
        [&](double y) { return killed_density(PassageParams(0.7, 0.25, 0.9), y, 0.8); }, 0.4,
        2.2, 1e-13);
    CHECK(drifted == doctest::Approx(drifted_quad).epsilon(1e-10));
    // additivity to 1e-12
    const double ab = killed_interval_mass(pp, 0.1, 0.9, 2.0);
    const double bc = killed_interval_mass(pp, 0.9, 3.7, 2.0);
    const double ac = killed_interval_mass(pp, 0.1, 3.7, 2.0);
    CHECK(std::abs(ab + bc - ac) < 1e-12);
    CHECK_THROWS_AS(killed_interval_mass(pp, 2.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("survival monotone nonincreasing in t; bounded") {
    for (double m : {-0.6, 0.0, 0.5}) {
        const PassageParams pp(1.3, m, 0.8);
        double prev = 1.0;
        for (double t = 0.05; t < 6.0; t += 0.05) {
            const double s = survival(pp, t);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            CHECK(s <= prev + 1e-12);
            prev = s;
        }
    }
}

TEST_CASE("chapman-kolmogorov for the killed kernel") {
    const PassageParams pp(1.0, 0.2, 0.8);
    const double t1 = 0.4, t2 = 0.6;
    for (double y : {0.3, 1.3, 2.5}) {
        const double composed = integrate_to_inf(
            [&](double z) {
                if (z <= 0.0) return 0.0;
                return killed_density(pp, z, t1) *
                       killed_density(PassageParams(z, pp.m, pp.s), y, t2);
            },
            0.0, 1e-12);
        CHECK(composed == doctest::Approx(killed_density(pp, y, t1 + t2)).epsilon(1e-8));
    }
}

TEST_CASE("hitting-time sampler matches analytics") {
    PathRng rng(99, 0);
    SUBCASE("inverse-gaussian mean, m=-1") {
        const PassageParams pp(1.0, -1.0, 1.0);
        const int n = 1000000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto t = sample_hitting_time(pp, rng);
            REQUIRE(t.has_value());
            sum += *t;
            sum2 += *t * *t;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sum2 / n - mean * mean);
        CHECK(std::abs(mean - 1.0) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("driftless: P(tau <= 1) = 2 Phi(-1)") {
        const PassageParams pp(1.0, 0.0, 1.0);
        const int n = 1000000;
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            const auto t = sample_hitting_time(pp, rng);
            if (t && *t <= 1.0) ++hits;
        }
        const double phat = static_cast<double>(hits) / n;
        const double p0 = 0.3173105078629141;
        CHECK(std::abs(phat - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / n));
    }
    SUBCASE("never-hit atom, m=2") {
        const PassageParams pp(1.0, 2.0, 1.0);
        const int n = 1000000;
        int finite = 0;
        for (int i = 0; i < n; ++i)
            if (sample_hitting_time(pp, rng)) ++finite;
        const double phat = static_cast<double>(finite) / n;
        const double p0 = std::exp(-4.0);
        CHECK(std::abs(phat - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / n));
    }
    SUBCASE("KS against analytic CDF at 1%") {
        const PassageParams pp(0.8, -0.4, 1.2);
        const int n = 100000;
        std::vector<double> samples;
        samples.reserve(n);
        for (int i = 0; i < n; ++i) {
            const auto t = sample_hitting_time(pp, rng);
            REQUIRE(t.has_value());
            samples.push_back(*t);
        }
        const double d = testutil::ks_distance(
            samples, [&](double t) { return t <= 0.0 ? 0.0 : fp_cdf(pp, t); });
        CHECK(d < testutil::ks_critical_1pct(n));
    }
    SUBCASE("identical rng state gives identical draws") {
        PathRng r1(7, 3), r2(7, 3);
        const PassageParams pp(1.0, 0.3, 1.0);
        for (int i = 0; i < 200; ++i) {
            const auto a = sample_hitting_time(pp, r1);
            const auto b = sample_hitting_time(pp, r2);
            CHECK(a == b);
        }
    }
}

TEST_CASE("conditional survivor sampler") {
    PathRng rng(123, 0);
    const PassageParams pp(1.0, 0.0, 1.0);
    SUBCASE("mean matches quadrature oracle; support positive") {
        const int n = 1000000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = sample_conditional_survivor(pp, 1.0, rng);
            REQUIRE(y > 0.0);
            sum += y;
            sum2 += y * y;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sum2 / n - mean * mean);
        // mpmath: E[Y | no hit] = 1.4647947734915441 for d=1, m=0, s=1, t=1
        CHECK(std::abs(mean - 1.4647947734915441) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("t -> 0 concentrates at the start point") {
        double var = 0.0;
        const double t = 1e-6;
        for (int i = 0; i < 2000; ++i) {
            const double y = sample_conditional_survivor(pp, t, rng);
            var += (y - 1.0) * (y - 1.0);
        }
        CHECK(var / 2000.0 < 1e-5);
    }
    SUBCASE("KS against normalized killed density") {
        const int n = 100000;
        std::vector<double> samples;
        const double surv = survival(pp, 1.0);
        for (int i = 0; i < n; ++i)
            samples.push_back(sample_conditional_survivor(pp, 1.0, rng));
        const double d = testutil::ks_distance(samples, [&](double y) {
            return y <= 0.0 ? 0.0 : killed_interval_mass(pp, 0.0, y, 1.0) / surv;
        });
        CHECK(d < testutil::ks_critical_1pct(n));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(PassageParams(0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PassageParams(-1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PassageParams(1.0, 0.0, 0.0), std::invalid_argument);
}
