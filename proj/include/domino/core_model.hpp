#ifndef DOMINO_CORE_MODEL_HPP
#define DOMINO_CORE_MODEL_HPP

#include <string>
#include <vector>

#include "domino/passage.hpp"

namespace domino {

enum class ModelKind { Abm, Gbm };

struct FirmParams {
    int id = 0;
    double x0 = 0.0;      // initial firm value
    double barrier = 0.0; // default level
    double mu = 0.0;
    double sigma = 0.0;
};

// Jump sizes C[i][j]: row i = defaulter, column j = victim.
class ContagionMatrix {
  public:
    ContagionMatrix() = default;
    explicit ContagionMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}
    static ContagionMatrix zero(int n) {
        return ContagionMatrix(std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    }
    double at(int defaulter, int victim) const { return rows_[defaulter][victim]; }
    double& at(int defaulter, int victim) { return rows_[defaulter][victim]; }
    int rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<std::vector<double>>& raw() const { return rows_; }

  private:
    std::vector<std::vector<double>> rows_;
};

struct Portfolio {
    std::vector<FirmParams> firms;
    ContagionMatrix contagion;
    ModelKind kind = ModelKind::Abm;
    int size() const { return static_cast<int>(firms.size()); }
};

struct Violation {
    int firm = -1; // -1 = portfolio-level
    std::string field;
    std::string rule;
};

// Every violated invariant, empty list iff the portfolio is usable by all
// downstream operations at t = 0. Violations are data, not failures.
std::vector<Violation> validate_portfolio(const Portfolio& p);

// All first-passage analytics run in a reduced coordinate where the barrier
// sits at 0: identity shift for ABM, log coordinates for GBM (drift picks up
// the -sigma^2/2 term). The hitting-time law is unchanged by the transform.
using AbmCoord = PassageParams;
AbmCoord reduce_to_abm(const Portfolio& p, int firm, double x);

// Reduced coordinate of an arbitrary value level (used for box bounds; the
// value may sit at or below the firm's current position but must be >= the
// barrier for ABM and > 0 for GBM).
double reduced_distance(const Portfolio& p, int firm, double value);
double value_from_reduced(const Portfolio& p, int firm, double z);

// value_i -= sum_{j in defaulted} C[j][i] for every survivor i. Jumps are
// additive in value space under both model kinds. Survivors and defaulted
// must be disjoint; defaulted firms' entries are left untouched.
void apply_default_jumps(std::vector<double>& value_by_id, const std::vector<int>& survivors,
                         const std::vector<int>& defaulted, const ContagionMatrix& c);

} // namespace domino

#endif
