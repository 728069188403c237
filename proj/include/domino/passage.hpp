#ifndef DOMINO_PASSAGE_HPP
#define DOMINO_PASSAGE_HPP

#include <optional>

#include "domino/rng.hpp"

namespace domino {

// One firm reduced to the canonical barrier-hitting problem: arithmetic
// Brownian motion started a distance d above an absorbing barrier at 0,
// drift m (negative = toward the barrier), volatility s.
struct PassageParams {
    double d;
    double m;
    double s;
    PassageParams(double d_, double m_, double s_);
};

// First-passage density of the barrier time at t > 0:
//   d / (s sqrt(2 pi t^3)) * exp(-(d + m t)^2 / (2 s^2 t)).
double fp_density(const PassageParams& pp, double t);
double fp_log_density(const PassageParams& pp, double t);

// P(tau <= t). Complements survival(); both carry the never-hit atom.
double fp_cdf(const PassageParams& pp, double t);

// Total probability of ever hitting: 1 for m <= 0, exp(-2 m d / s^2) else.
double hit_prob_total(const PassageParams& pp);

// P(tau > t), reflection principle with drift correction.
double survival(const PassageParams& pp, double t);

// Killed transition density: position y > 0 at time t with no hit so far.
double killed_density(const PassageParams& pp, double y, double t);

// Integral of killed_density over (max(a,0), b], b may be +infinity.
double killed_interval_mass(const PassageParams& pp, double a, double b, double t);

// Exact draw of the hitting time; nullopt encodes "never hits".
// Inverse-Gaussian via Michael-Schucany-Haas for m != 0 (drift-reflected
// when m > 0), Levy(d^2/s^2) for m = 0.
std::optional<double> sample_hitting_time(const PassageParams& pp, PathRng& rng);

// Draw the time-t position conditional on no hit by t: rejection from the
// free Gaussian endpoint with Brownian-bridge no-crossing thinning. Exact.
// Throws std::runtime_error("degenerate conditioning") if the retry cap
// (10^4) is exhausted, which requires survival mass near zero.
double sample_conditional_survivor(const PassageParams& pp, double t, PathRng& rng);

} // namespace domino

#endif
