#include "domino/core_model.hpp"

#include <cmath>
#include <stdexcept>

namespace domino {

namespace {
bool finite(double v) { return std::isfinite(v); }
} // namespace

std::vector<Violation> validate_portfolio(const Portfolio& p) {
    std::vector<Violation> out;
    const int n = p.size();
    if (n < 1) {
        out.push_back({-1, "firms", "n >= 1"});
        return out;
    }
    for (int i = 0; i < n; ++i) {
        const FirmParams& f = p.firms[i];
        if (f.id != i) out.push_back({i, "id", "ids dense 0..n-1"});
        if (!finite(f.x0)) out.push_back({i, "x0", "finite"});
        if (!finite(f.barrier)) out.push_back({i, "barrier", "finite"});
        if (!finite(f.mu)) out.push_back({i, "mu", "finite"});
        if (!finite(f.sigma)) out.push_back({i, "sigma", "finite"});
        if (!(f.x0 > f.barrier)) out.push_back({i, "x0", "x0 > barrier"});
        if (!(f.sigma > 0.0)) out.push_back({i, "sigma", "sigma > 0"});
        if (p.kind == ModelKind::Gbm) {
            if (!(f.x0 > 0.0)) out.push_back({i, "x0", "x0 > 0 under gbm"});
            if (!(f.barrier > 0.0)) out.push_back({i, "barrier", "barrier > 0 under gbm"});
        }
    }
    const auto& rows = p.contagion.raw();
    bool shape_ok = static_cast<int>(rows.size()) == n;
    for (const auto& row : rows)
        if (static_cast<int>(row.size()) != n) shape_ok = false;
    if (!shape_ok) {
        out.push_back({-1, "contagion", "contagion is n x n"});
        return out;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double c = rows[i][j];
            if (!finite(c)) {
                out.push_back({i, "contagion", "finite"});
            } else if (i == j) {
                if (c != 0.0) out.push_back({i, "contagion", "diagonal zero"});
            } else if (c < 0.0) {
                out.push_back({i, "contagion", "entries >= 0"});
            }
        }
    }
    return out;
}

AbmCoord reduce_to_abm(const Portfolio& p, int firm, double x) {
    const FirmParams& f = p.firms.at(firm);
    if (!(x > f.barrier)) throw std::invalid_argument("reduce_to_abm: value at or below barrier");
    if (p.kind == ModelKind::Abm) return AbmCoord(x - f.barrier, f.mu, f.sigma);
    if (!(x > 0.0) || !(f.barrier > 0.0))
        throw std::invalid_argument("reduce_to_abm: gbm requires positive value and barrier");
    return AbmCoord(std::log(x / f.barrier), f.mu - 0.5 * f.sigma * f.sigma, f.sigma);
}

double reduced_distance(const Portfolio& p, int firm, double value) {
    const FirmParams& f = p.firms.at(firm);
    if (p.kind == ModelKind::Abm) return value - f.barrier;
    if (!(value > 0.0))
        throw std::invalid_argument("reduced_distance: gbm requires positive value");
    return std::log(value / f.barrier);
}

double value_from_reduced(const Portfolio& p, int firm, double z) {
    const FirmParams& f = p.firms.at(firm);
    if (p.kind == ModelKind::Abm) return f.barrier + z;
    return f.barrier * std::exp(z);
}

void apply_default_jumps(std::vector<double>& value_by_id, const std::vector<int>& survivors,
                         const std::vector<int>& defaulted, const ContagionMatrix& c) {
    for (int i : survivors)
        for (int j : defaulted)
            if (i == j) throw std::invalid_argument("apply_default_jumps: sets overlap");
    for (int i : survivors) {
        double jump = 0.0;
        for (int j : defaulted) jump += c.at(j, i);
        value_by_id.at(i) -= jump;
    }
}

} // namespace domino
