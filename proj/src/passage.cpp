#include "domino/passage.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "domino/normal.hpp"

namespace domino {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log_kappa(const PassageParams& pp) {
    return -2.0 * pp.m * pp.d / (pp.s * pp.s);
}

inline void require_time(double t) {
    if (!(t > 0.0)) throw std::invalid_argument("passage: t must be > 0");
}
} // namespace

PassageParams::PassageParams(double d_, double m_, double s_) : d(d_), m(m_), s(s_) {
    if (!(d > 0.0) || !std::isfinite(d))
        throw std::invalid_argument("PassageParams: distance must be > 0");
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("PassageParams: volatility must be > 0");
    if (!std::isfinite(m)) throw std::invalid_argument("PassageParams: drift must be finite");
}

double fp_log_density(const PassageParams& pp, double t) {
    require_time(t);
    const double q = pp.d + pp.m * t;
    return std::log(pp.d) - std::log(pp.s) - 0.5 * (kLog2Pi + 3.0 * std::log(t)) -
           q * q / (2.0 * pp.s * pp.s * t);
}

double fp_density(const PassageParams& pp, double t) {
    return std::exp(fp_log_density(pp, t));
}

double hit_prob_total(const PassageParams& pp) {
    return pp.m <= 0.0 ? 1.0 : std::exp(log_kappa(pp));
}

double fp_cdf(const PassageParams& pp, double t) {
    require_time(t);
    const double rt = pp.s * std::sqrt(t);
    const double v = gauss::cdf((-pp.d - pp.m * t) / rt) +
                     std::exp(log_kappa(pp) + gauss::log_cdf((-pp.d + pp.m * t) / rt));
    return std::fmin(1.0, std::fmax(0.0, v));
}

double survival(const PassageParams& pp, double t) {
    require_time(t);
    const double rt = pp.s * std::sqrt(t);
    const double v = gauss::cdf((pp.d + pp.m * t) / rt) -
                     std::exp(log_kappa(pp) + gauss::log_cdf((-pp.d + pp.m * t) / rt));
    return std::fmin(1.0, std::fmax(0.0, v));
}

double killed_density(const PassageParams& pp, double y, double t) {
    require_time(t);
    if (!(y > 0.0)) throw std::invalid_argument("killed_density: y must be > 0");
    const double rt = pp.s * std::sqrt(t);
    const double zf = (y - pp.d - pp.m * t) / rt;
    const double zi = (y + pp.d - pp.m * t) / rt;
    const double direct = std::exp(-0.5 * zf * zf - 0.5 * kLog2Pi) / rt;
    const double image = std::exp(log_kappa(pp) - 0.5 * zi * zi - 0.5 * kLog2Pi) / rt;
    return std::fmax(0.0, direct - image);
}

double killed_interval_mass(const PassageParams& pp, double a, double b, double t) {
    require_time(t);
    if (!(a < b)) throw std::invalid_argument("killed_interval_mass: need a < b");
    a = std::fmax(a, 0.0);
    if (!(a < b)) return 0.0;
    const double rt = pp.s * std::sqrt(t);
    const double free_part =
        gauss::cdf_interval((a - pp.d - pp.m * t) / rt, (b - pp.d - pp.m * t) / rt);
    const double image_part = std::exp(
        log_kappa(pp) +
        gauss::log_cdf_interval((a + pp.d - pp.m * t) / rt, (b + pp.d - pp.m * t) / rt));
    return std::fmin(1.0, std::fmax(0.0, free_part - image_part));
}

std::optional<double> sample_hitting_time(const PassageParams& pp, PathRng& rng) {
    if (pp.m > 0.0) {
        if (rng.uniform() > hit_prob_total(pp)) return std::nullopt;
    }
    if (pp.m == 0.0) {
        double z = rng.normal();
        while (z == 0.0) z = rng.normal();
        const double r = pp.d / pp.s;
        return r * r / (z * z);
    }
    // Conditioned on hitting, the law is IG(d/|m|, (d/s)^2) for either sign.
    const double mu = pp.d / std::abs(pp.m);
    const double lam = (pp.d / pp.s) * (pp.d / pp.s);
    const double z = rng.normal();
    const double w = mu * z * z;
    double cand = mu;
    if (w > 0.0) cand = mu * (1.0 - 2.0 * w / (w + std::sqrt(w * (w + 4.0 * lam))));
    if (rng.uniform() < mu / (mu + cand)) return cand;
    return mu * mu / cand;
}

double sample_conditional_survivor(const PassageParams& pp, double t, PathRng& rng) {
    require_time(t);
    const double mean = pp.d + pp.m * t;
    const double sd = pp.s * std::sqrt(t);
    const double c = 2.0 * pp.d / (pp.s * pp.s * t);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double y = mean + sd * rng.normal();
        if (y <= 0.0) continue;
        if (rng.uniform() < -std::expm1(-c * y)) return y;
    }
    throw std::runtime_error("sample_conditional_survivor: degenerate conditioning");
}

} // namespace domino
