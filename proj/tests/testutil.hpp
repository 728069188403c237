#ifndef DOMINO_TESTS_TESTUTIL_HPP
#define DOMINO_TESTS_TESTUTIL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "domino/core_model.hpp"
#include "domino/rng.hpp"

namespace testutil {

// Adaptive Simpson quadrature: the independent 1-D oracle used to pin down
// expected values for the closed forms under test. Deliberately simple and
// separate from the library's quadrature machinery.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 50) {
    struct Impl {
        const std::function<double(double)>& f;
        double run(double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Impl impl{f};
    return impl.run(a, b, fa, fm, fb, whole, tol, depth);
}

// Semi-infinite tail handled by doubling panels until the increment is dust.
inline double integrate_to_inf(const std::function<double(double)>& f, double a, double tol) {
    double total = 0.0;
    double lo = a, width = 1.0;
    for (int panel = 0; panel < 80; ++panel) {
        const double piece = adaptive_simpson(f, lo, lo + width, tol * 0.1);
        total += piece;
        lo += width;
        width *= 2.0;
        if (panel > 3 && std::abs(piece) < tol * 1e-3) break;
    }
    return total;
}

// Two-sided Kolmogorov-Smirnov distance against an analytic CDF.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
    }
    return d;
}

inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

inline domino::Portfolio make_abm(std::vector<double> x0, std::vector<double> barrier,
                                  std::vector<double> mu, std::vector<double> sigma,
                                  std::vector<std::vector<double>> c) {
    domino::Portfolio p;
    p.kind = domino::ModelKind::Abm;
    for (std::size_t i = 0; i < x0.size(); ++i)
        p.firms.push_back({static_cast<int>(i), x0[i], barrier[i], mu[i], sigma[i]});
    p.contagion = domino::ContagionMatrix(std::move(c));
    return p;
}

// Small deterministic parameter generator for property tests.
struct ParamGen {
    domino::PathRng rng;
    explicit ParamGen(std::uint64_t seed) : rng(seed, 0, 0xfeed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    domino::Portfolio random_portfolio(int n, double c_max) {
        std::vector<double> x0(n), k(n), mu(n), sig(n);
        std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) {
            k[i] = uniform(-1.0, 1.0);
            x0[i] = k[i] + uniform(0.4, 1.6);
            mu[i] = uniform(-0.4, 0.4);
            sig[i] = uniform(0.6, 1.4);
            for (int j = 0; j < n; ++j)
                if (i != j) c[i][j] = uniform(0.0, c_max);
        }
        return make_abm(x0, k, mu, sig, c);
    }
};

inline std::string fixture_path(const std::string& name) {
    return std::string(DOMINO_FIXTURE_DIR) + "/" + name;
}

} // namespace testutil

#endif
