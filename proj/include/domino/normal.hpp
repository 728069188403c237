#ifndef DOMINO_NORMAL_HPP
#define DOMINO_NORMAL_HPP

#include <vector>

// Standard normal distribution utilities. cdf/sf go through erfc and are
// accurate to ~1 ulp; the log variants stay finite far into the tails
// (asymptotic expansion beyond the erfc underflow point), which is what the
// barrier-tail masses need.
namespace domino::gauss {

double pdf(double x);
double log_pdf(double x);
double cdf(double x);        // P(Z <= x)
double sf(double x);         // P(Z > x)
double log_cdf(double x);
double log_sf(double x);

// Phi(b) - Phi(a) for a <= b, evaluated in the tail that avoids cancellation.
double cdf_interval(double a, double b);
// log(Phi(b) - Phi(a)), usable when both endpoints sit far in a tail.
double log_cdf_interval(double a, double b);

// Inverse CDF. quantile() refines with one Halley step (~1e-15 relative);
// quantile_fast() is the raw Acklam rational approximation (~1e-9), enough
// for Monte Carlo variates and measurably cheaper in tight loops.
double quantile(double p);
double quantile_fast(double p);

// Gauss-Legendre rule on (-1, 1). Cached per n, thread-safe.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

} // namespace domino::gauss

#endif
