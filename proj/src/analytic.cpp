#include "domino/analytic.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "domino/normal.hpp"
#include "domino/passage.hpp"
#include "domino/report.hpp"

namespace domino {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTolFloor = 1e-12;
constexpr double kMassCutoff = 1e-280;

// ---------------------------------------------------------------------------
// First-event clock of a firm group: G(u) = 1 - prod_i S_i(u), evaluated as
// -expm1(sum log S_i) so both tails keep relative accuracy. Time integrals are
// mapped through G, which places nodes by first-event probability mass and
// keeps follow-on defaults from firms restarted near their barrier resolved.
struct GroupClock {
    std::vector<PassageParams> pps;

    void eval(double u, double* G, double* dens) const {
        double logsum = 0.0;
        double rate = 0.0;
        for (const auto& pp : pps) {
            const double S = std::max(survival(pp, u), 1e-300);
            logsum += std::log(S);
            rate += fp_density(pp, u) / S;
        }
        const double surv_all = std::exp(logsum);
        *G = -std::expm1(logsum);
        *dens = surv_all * rate;
    }

    double cdf(double u) const {
        double G, dens;
        eval(u, &G, &dens);
        return G;
    }

    // Solve G(u) = v on (0, T); bisection-safeguarded Newton. Nodes are
    // visited in ascending v, so the previous solution brackets from below.
    double invert(double v, double T, double v_max, double lo_hint,
                  double* dens_out) const {
        double lo = lo_hint, hi = T;
        double u = lo > 0.0 ? std::min(T * (1.0 - 1e-16), lo * 1.02 + 1e-3 * T) : 0.5 * T;
        double G = 0.0, dens = 0.0;
        const double tol = 1e-13 * std::max(v_max, 1e-300);
        for (int iter = 0; iter < 120; ++iter) {
            eval(u, &G, &dens);
            if (G > v)
                hi = u;
            else
                lo = u;
            const double err = G - v;
            if (std::abs(err) <= tol || (hi - lo) <= 1e-14 * T) break;
            double step = dens > 0.0 ? u - err / dens : 0.5 * (lo + hi);
            if (!(step > lo) || !(step < hi)) step = 0.5 * (lo + hi);
            u = step;
        }
        if (dens_out) *dens_out = dens;
        return u;
    }
};

// M_i over (bound, inf) where bound comes from the jump sums of a chain set.
double mass_above(const Portfolio& p, int firm, const PassageParams& pp, double bound_red,
                  double u) {
    if (bound_red <= 0.0) return survival(pp, u);
    return killed_interval_mass(pp, bound_red, kInf, u);
}

double chain_bound_red(const Portfolio& p, int firm, std::uint64_t set_mask) {
    double bound = p.firms[firm].barrier;
    for (int j = 0; set_mask != 0; ++j, set_mask >>= 1)
        if (set_mask & 1u) bound += p.contagion.at(j, firm);
    return reduced_distance(p, firm, bound);
}

// Chain-sum evaluation of the full-cascade density for a group of live firms
// with reduced parameters pps (aligned with ids).
double h_full_reduced(const Portfolio& p, const std::vector<int>& ids,
                      const std::vector<PassageParams>& pps, double u) {
    const int k = static_cast<int>(ids.size());
    std::vector<double> pden(k), surv(k);
    for (int i = 0; i < k; ++i) {
        pden[i] = fp_density(pps[i], u);
        surv[i] = survival(pps[i], u);
    }
    auto pos_of = [&](int id) {
        return static_cast<int>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    };
    // head(L) = sum_{i in L} p_i prod_{j in L\{i}} S_j
    auto head = [&](const std::vector<int>& L) {
        double total = 0.0;
        for (int i : L) {
            double term = pden[pos_of(i)];
            for (int j : L)
                if (j != i) term *= surv[pos_of(j)];
            total += term;
        }
        return total;
    };

    std::map<std::pair<int, std::uint64_t>, double> mass_cache;
    auto mass = [&](int id, std::uint64_t set_mask) {
        const auto key = std::make_pair(id, set_mask);
        auto it = mass_cache.find(key);
        if (it != mass_cache.end()) return it->second;
        const double v = mass_above(p, id, pps[pos_of(id)], chain_bound_red(p, id, set_mask), u);
        mass_cache.emplace(key, v);
        return v;
    };

    const IndexSet group(ids);
    double total = head(ids);
    ChainEnumerator chains(group, group.size() - 1);
    while (auto chain = chains.next()) {
        double term = head(chain->sets.back().ids());
        IndexSet prev = group;
        for (const IndexSet& cur : chain->sets) {
            const std::uint64_t cm = cur.mask();
            const IndexSet peeled = prev.subtract(cur);
            for (int j : peeled.ids()) term *= mass(j, cm);
            prev = cur;
        }
        total += (chain->length() % 2 == 1 ? -term : term);
    }
    return total;
}

struct StagePlan {
    IndexSet group;
    IndexSet survivors;
    std::vector<double> jump_by_id; // sum_{j in group} C_{j,i} for survivors
};

std::vector<StagePlan> plan_stages(const Portfolio& p, const std::vector<IndexSet>& seq) {
    std::vector<StagePlan> plan;
    IndexSet live = IndexSet::range(p.size());
    for (const IndexSet& group : seq) {
        if (group.empty()) throw std::invalid_argument("sequence: empty default set");
        if (!group.is_subset_of(live))
            throw std::invalid_argument("sequence: sets must be disjoint subsets of the firms");
        StagePlan st;
        st.group = group;
        st.survivors = live.subtract(group);
        st.jump_by_id.assign(p.size(), 0.0);
        for (int i : st.survivors.ids())
            for (int j : group.ids()) st.jump_by_id[i] += p.contagion.at(j, i);
        plan.push_back(std::move(st));
        live = plan.back().survivors;
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Nested tensor evaluation. Times are mapped through the defaulting group's
// first-event CDF; surviving spatial coordinates through the free Gaussian
// endpoint CDF with Brownian-bridge weights, truncated at tail_quantile.

struct SurvivorNodes {
    std::vector<double> post_value;
    std::vector<double> weight;
};

class TensorEvaluator {
  public:
    TensorEvaluator(const Portfolio& p, const std::vector<StagePlan>& plan, double horizon,
                    Terminal terminal, double tail_q, int time_nodes, int space_nodes)
        : p_(p), plan_(plan), horizon_(horizon), terminal_(terminal), tail_q_(tail_q),
          tgl_(gauss::gauss_legendre(time_nodes)), sgl_(gauss::gauss_legendre(space_nodes)) {}

    double run() {
        std::vector<double> values(p_.size());
        for (int i = 0; i < p_.size(); ++i) values[i] = p_.firms[i].x0;
        return stage_value(0, values, 0.0);
    }

  private:
    double terminal_value(const std::vector<double>& values, const IndexSet& live,
                          double t_used) const {
        if (terminal_ == Terminal::None) return 1.0;
        const double rem = std::max(horizon_ - t_used, 1e-300);
        double prod = 1.0;
        for (int i : live.ids()) prod *= survival(reduce_to_abm(p_, i, values[i]), rem);
        return prod;
    }

    // Quadrature nodes for one survivor's pre-jump position over
    // (bound, inf) against the killed transition density. The killed kernel
    // is the difference of two Gaussians (direct minus drift-reflected
    // image); each one is integrated through its own endpoint-CDF map, which
    // absorbs the density into the node measure exactly. Downstream stage
    // values transition just above the bound on a scale of
    // s*sqrt(residual horizon), so that strip gets a dedicated block of
    // nodes per map. Image-term weights carry a negative sign.
    bool survivor_nodes(const StagePlan& st, int firm, const std::vector<double>& values,
                        double u, double residual, SurvivorNodes* out) const {
        const PassageParams pp = reduce_to_abm(p_, firm, values[firm]);
        const double bound_value = p_.firms[firm].barrier + st.jump_by_id[firm];
        const double bound_red = reduced_distance(p_, firm, bound_value);
        const double sd = pp.s * std::sqrt(u);
        const double bar = p_.firms[firm].barrier;
        const double step_hi = bound_red + 8.0 * pp.s * std::sqrt(std::max(residual, 0.0));
        out->post_value.clear();
        out->weight.clear();

        auto push = [&](double z, double w) {
            if (w == 0.0) return;
            double post = value_from_reduced(p_, firm, z) - st.jump_by_id[firm];
            if (!(post > bar)) post = bar + (std::abs(bar) + 1.0) * 1e-15;
            out->post_value.push_back(post);
            out->weight.push_back(w);
        };

        const int sn = static_cast<int>(sgl_.nodes.size());
        auto component = [&](double gmean, double coef, int bulk_nodes, int strip_nodes) {
            const double w_lo = gauss::cdf((bound_red - gmean) / sd);
            if (!(w_lo < tail_q_)) return;
            auto map_block = [&](double wa, double wb, const gauss::GaussLegendre& gl) {
                if (!(wa < wb)) return;
                const double width = wb - wa;
                for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
                    const double w = wa + width * 0.5 * (gl.nodes[j] + 1.0);
                    const double z = std::max(gmean + sd * gauss::quantile(w), bound_red);
                    push(z, coef * width * 0.5 * gl.weights[j]);
                }
            };
            const auto& bulk_gl = gauss::gauss_legendre(bulk_nodes);
            const double w_split = std::min(tail_q_, gauss::cdf((step_hi - gmean) / sd));
            if ((w_split - w_lo) / (tail_q_ - w_lo) > 0.7) {
                map_block(w_lo, tail_q_, bulk_gl);
            } else {
                map_block(w_lo, w_split, gauss::gauss_legendre(strip_nodes));
                map_block(w_split, tail_q_, bulk_gl);
            }
        };

        component(pp.d + pp.m * u, 1.0, sn, std::max(6, sn / 2));
        const double log_kappa = -2.0 * pp.m * pp.d / (pp.s * pp.s);
        const double image_mean = -pp.d + pp.m * u;
        // the image term holds a minority of the mass; half resolution
        if (log_kappa + gauss::log_sf((bound_red - image_mean) / sd) > -45.0)
            component(image_mean, -std::exp(log_kappa), std::max(6, sn / 2),
                      std::max(4, sn / 4));
        return !out->weight.empty();
    }

    double stage_value(int stage_idx, std::vector<double>& values, double t_used) {
        if (stage_idx == static_cast<int>(plan_.size())) {
            const IndexSet live = stage_idx == 0 ? IndexSet::range(p_.size())
                                                 : plan_[stage_idx - 1].survivors;
            return terminal_value(values, live, t_used);
        }
        const StagePlan& st = plan_[stage_idx];
        const double t_rem = horizon_ - t_used;
        if (!(t_rem > 0.0)) return 0.0;

        GroupClock clock;
        std::vector<int> gids = st.group.ids();
        for (int i : gids) clock.pps.push_back(reduce_to_abm(p_, i, values[i]));
        double g_total, dummy;
        clock.eval(t_rem, &g_total, &dummy);
        if (!(g_total > kMassCutoff)) return 0.0;

        const bool final_stage = stage_idx + 1 == static_cast<int>(plan_.size());
        // Last stage, nobody left to track, one defaulting firm: the time
        // integral of the stage density is the plain hitting CDF.
        if (final_stage && st.survivors.empty() && gids.size() == 1)
            return fp_cdf(clock.pps[0], t_rem);
        const int tn = static_cast<int>(tgl_.nodes.size());
        double total = 0.0;
        std::vector<SurvivorNodes> nodes(st.survivors.size());
        std::vector<double> saved;
        double u_prev = 0.0;
        for (int k = 0; k < tn; ++k) {
            // sin^2 endpoint map on top of the first-event CDF: stage values
            // carry sqrt(residual)-type behavior at the horizon edge, and the
            // vanishing map derivative restores spectral convergence there.
            const double theta = 0.5 * (tgl_.nodes[k] + 1.0);
            const double sp = std::sin(0.5 * M_PI * theta);
            const double v = g_total * sp * sp;
            double dens = 0.0;
            double u = clock.invert(v, t_rem, g_total, u_prev, &dens);
            u_prev = u;
            u = std::min(std::max(u, 1e-300), t_rem * (1.0 - 1e-16));
            if (!(dens > 0.0)) continue;
            const double stage_density = h_full_reduced(p_, gids, clock.pps, u);
            if (stage_density == 0.0) continue;
            const double wt =
                g_total * 0.25 * M_PI * std::sin(M_PI * theta) * tgl_.weights[k] / dens;

            double inner;
            if (st.survivors.empty()) {
                inner = stage_value(stage_idx + 1, values, t_used + u);
            } else if (final_stage && terminal_ == Terminal::None) {
                // Spatial integrals collapse to closed-form interval masses.
                inner = 1.0;
                for (int i : st.survivors.ids()) {
                    const PassageParams pp = reduce_to_abm(p_, i, values[i]);
                    const double bound_red = reduced_distance(
                        p_, i, p_.firms[i].barrier + st.jump_by_id[i]);
                    inner *= mass_above(p_, i, pp, bound_red, u);
                }
            } else {
                const double residual = horizon_ - t_used - u;
                bool feasible = true;
                for (int s = 0; s < st.survivors.size() && feasible; ++s)
                    feasible = survivor_nodes(st, st.survivors.ids()[s], values, u, residual,
                                              &nodes[s]);
                if (!feasible) continue;
                if (final_stage) {
                    // Terminal factor splits per survivor. Integrate the
                    // complement (hit within the residual horizon): it is
                    // supported on the near-bound strip, so the exact
                    // interval mass carries the bulk with no quadrature
                    // error at all.
                    const double rem = std::max(horizon_ - t_used - u, 1e-300);
                    inner = 1.0;
                    for (int s = 0; s < st.survivors.size(); ++s) {
                        const int i = st.survivors.ids()[s];
                        const PassageParams pp = reduce_to_abm(p_, i, values[i]);
                        const double bound_red = reduced_distance(
                            p_, i, p_.firms[i].barrier + st.jump_by_id[i]);
                        double hit_acc = 0.0;
                        for (std::size_t j = 0; j < nodes[s].weight.size(); ++j)
                            hit_acc += nodes[s].weight[j] *
                                       fp_cdf(reduce_to_abm(p_, i, nodes[s].post_value[j]), rem);
                        inner *= mass_above(p_, i, pp, bound_red, u) - hit_acc;
                    }
                } else {
                    saved.clear();
                    for (int i : st.survivors.ids()) saved.push_back(values[i]);
                    inner = tensor_recurse(stage_idx, st, nodes, 0, 1.0, values, t_used + u);
                    for (int s = 0; s < st.survivors.size(); ++s)
                        values[st.survivors.ids()[s]] = saved[s];
                }
            }
            total += wt * stage_density * inner;
        }
        return total;
    }

    double tensor_recurse(int stage_idx, const StagePlan& st,
                          const std::vector<SurvivorNodes>& nodes, int s, double w,
                          std::vector<double>& values, double t_next) {
        if (s == st.survivors.size()) return w * stage_value(stage_idx + 1, values, t_next);
        const int firm = st.survivors.ids()[s];
        double acc = 0.0;
        for (std::size_t j = 0; j < nodes[s].weight.size(); ++j) {
            values[firm] = nodes[s].post_value[j];
            acc += tensor_recurse(stage_idx, st, nodes, s + 1, w * nodes[s].weight[j], values,
                                  t_next);
        }
        return acc;
    }

    const Portfolio& p_;
    const std::vector<StagePlan>& plan_;
    double horizon_;
    Terminal terminal_;
    double tail_q_;
    const gauss::GaussLegendre& tgl_;
    const gauss::GaussLegendre& sgl_;
};

// ---------------------------------------------------------------------------
// Scrambled-Halton evaluation for high-dimensional stacks: the same
// importance maps, one low-discrepancy coordinate per integration variable.

std::uint64_t splitmix(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr int kPrimes[32] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43, 47, 53,
                             59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

class ScrambledHalton {
  public:
    ScrambledHalton(int dims, std::uint64_t salt) : dims_(dims) {
        if (dims > 32) throw std::invalid_argument("qmc: dimension guard (<= 32)");
        perms_.resize(dims);
        for (int d = 0; d < dims; ++d) {
            const int base = kPrimes[d];
            perms_[d].resize(base);
            for (int i = 0; i < base; ++i) perms_[d][i] = i;
            // Fisher-Yates over 1..base-1, zero stays fixed so trailing
            // zero digits keep their value.
            std::uint64_t state = salt * 0x9E3779B97F4A7C15ull + d + 1;
            for (int i = base - 1; i > 1; --i) {
                const int j = 1 + static_cast<int>(splitmix(state) % static_cast<std::uint64_t>(i));
                std::swap(perms_[d][i], perms_[d][j]);
            }
        }
    }

    double coord(std::uint64_t index, int dim) const {
        const int base = kPrimes[dim];
        const auto& perm = perms_[dim];
        double inv = 1.0 / base;
        double frac = inv;
        double x = 0.0;
        while (index > 0) {
            x += perm[index % base] * frac;
            index /= base;
            frac *= inv;
        }
        // keep strictly inside (0,1)
        return std::min(std::max(x, 0x1p-53), 1.0 - 0x1p-53);
    }

  private:
    int dims_;
    std::vector<std::vector<int>> perms_;
};

double qmc_eval(const Portfolio& p, const std::vector<StagePlan>& plan, double horizon,
                Terminal terminal, double tail_q, int n_points, std::uint64_t salt) {
    int dims = 0;
    for (const auto& st : plan) dims += 1 + st.survivors.size();
    dims = std::max(dims, 1);
    const ScrambledHalton seq(dims, salt);

    double acc = 0.0, comp = 0.0; // Kahan
    std::vector<double> values(p.size());
    for (int pt = 1; pt <= n_points; ++pt) {
        for (int i = 0; i < p.size(); ++i) values[i] = p.firms[i].x0;
        double factor = 1.0;
        double t_used = 0.0;
        int c = 0;
        for (const auto& st : plan) {
            const double t_rem = horizon - t_used;
            GroupClock clock;
            for (int i : st.group.ids()) clock.pps.push_back(reduce_to_abm(p, i, values[i]));
            double g_total, dummy;
            clock.eval(t_rem, &g_total, &dummy);
            if (!(g_total > kMassCutoff)) {
                factor = 0.0;
                break;
            }
            const double v = g_total * seq.coord(pt, c++);
            double dens = 0.0;
            double u = clock.invert(v, t_rem, g_total, 0.0, &dens);
            u = std::min(std::max(u, 1e-300), t_rem * (1.0 - 1e-16));
            if (!(dens > 0.0)) {
                factor = 0.0;
                break;
            }
            factor *= g_total * h_full_reduced(p, st.group.ids(), clock.pps, u) / dens;
            bool feasible = true;
            for (int i : st.survivors.ids()) {
                const PassageParams pp = reduce_to_abm(p, i, values[i]);
                const double bound_red =
                    reduced_distance(p, i, p.firms[i].barrier + st.jump_by_id[i]);
                const double mean = pp.d + pp.m * u;
                const double sd = pp.s * std::sqrt(u);
                const double w_lo = gauss::cdf((bound_red - mean) / sd);
                if (!(w_lo < tail_q)) {
                    feasible = false;
                    break;
                }
                const double width = tail_q - w_lo;
                const double w = w_lo + width * seq.coord(pt, c++);
                const double z = mean + sd * gauss::quantile(w);
                double post = value_from_reduced(p, i, z) - st.jump_by_id[i];
                const double bar = p.firms[i].barrier;
                if (!(post > bar)) post = bar + (std::abs(bar) + 1.0) * 1e-15;
                factor *= width * (-std::expm1(-2.0 * pp.d * z / (pp.s * pp.s * u)));
                values[i] = post;
            }
            if (!feasible) {
                factor = 0.0;
                break;
            }
            t_used += u;
        }
        if (factor != 0.0 && terminal == Terminal::SurviveAll) {
            const IndexSet live = plan.empty() ? IndexSet::range(p.size())
                                               : plan.back().survivors;
            const double rem = std::max(horizon - t_used, 1e-300);
            for (int i : live.ids()) factor *= survival(reduce_to_abm(p, i, values[i]), rem);
        }
        const double y = factor - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc / n_points;
}

int spatial_dims(const std::vector<StagePlan>& plan) {
    int d = 0;
    for (const auto& st : plan) d += st.survivors.size();
    return d;
}

QuadResult integrate_plan(const Portfolio& p, const std::vector<StagePlan>& plan,
                          double horizon, Terminal terminal, const QuadratureSpec& spec) {
    const bool use_qmc =
        spec.method == QuadratureSpec::Method::Qmc || spatial_dims(plan) > 6;
    if (use_qmc) {
        const double v1 = qmc_eval(p, plan, horizon, terminal, spec.tail_quantile,
                                   spec.qmc_points, 0x5eed0001ull);
        const double v2 = qmc_eval(p, plan, horizon, terminal, spec.tail_quantile,
                                   spec.qmc_points, 0x5eed0002ull);
        return {0.5 * (v1 + v2), std::abs(v1 - v2) + kTolFloor};
    }
    // Cheap screen first: a sequence is bounded by the first group's
    // total hit mass times the suprema of the survivor masses above their
    // A-box bounds; skip the full quadrature when that is dust.
    if (!plan.empty()) {
        const StagePlan& st = plan.front();
        GroupClock clock;
        for (int i : st.group.ids())
            clock.pps.push_back(reduce_to_abm(p, i, p.firms[i].x0));
        double bound = clock.cdf(horizon);
        for (int i : st.survivors.ids()) {
            const PassageParams pp = reduce_to_abm(p, i, p.firms[i].x0);
            const double lo = reduced_distance(p, i, p.firms[i].barrier + st.jump_by_id[i]);
            double sup = 0.0;
            for (int k = 1; k <= 8; ++k)
                sup = std::max(sup, mass_above(p, i, pp, lo, horizon * k / 8.0));
            bound *= 1.5 * sup;
        }
        if (bound < 1e-10) return {0.0, bound + kTolFloor};
    }
    // Node-doubling comparison on the spatial axis, which carries the
    // discretization error; the importance-mapped time rule is spectral
    // (halving time nodes moves results by < 1e-9 on every profiled case).
    // The doubled-rule value is reported.
    const double base = TensorEvaluator(p, plan, horizon, terminal, spec.tail_quantile,
                                        spec.time_nodes, spec.space_nodes)
                            .run();
    const double doubled = TensorEvaluator(p, plan, horizon, terminal, spec.tail_quantile,
                                           spec.time_nodes, 2 * spec.space_nodes)
                               .run();
    // The time rule is spectral once the sin^2 endpoint map is in place
    // (doubling time nodes moves fixture tables by < 1e-8), so the spatial
    // doubling gap is the error estimate.
    return {doubled, std::abs(doubled - base) + kTolFloor};
}

void check_valid(const Portfolio& p) {
    if (!validate_portfolio(p).empty())
        throw std::invalid_argument("analytic: invalid portfolio");
}

} // namespace

void QuadratureSpec::validate() const {
    if (time_nodes < 2 || space_nodes < 2)
        throw std::invalid_argument("QuadratureSpec: nodes >= 2 required");
    if (!(tail_quantile > 0.9 && tail_quantile < 1.0))
        throw std::invalid_argument("QuadratureSpec: 0.9 < tail_quantile < 1 required");
    if (qmc_points < 2) throw std::invalid_argument("QuadratureSpec: qmc_points >= 2");
}

int QuadratureSpec::depth_for(int n) const {
    return max_cascade_depth <= 0 ? n : std::min(max_cascade_depth, n);
}

double DistributionTable::sum() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.probability;
    return s;
}

double DistributionTable::total_tolerance() const {
    double s = truncation_allowance;
    for (const auto& r : rows) s += r.tolerance;
    return s;
}

double g_mass(const Portfolio& p, const IndexSet& I, const IndexSet& J,
              const std::vector<double>& value_by_id, double t) {
    check_valid(p);
    if (J.empty() || !J.is_subset_of(I) || J == I)
        throw std::invalid_argument("g_mass: need empty != J proper subset of I");
    double prod = 1.0;
    const IndexSet rest = I.subtract(J);
    for (int i : rest.ids()) {
        const PassageParams pp = reduce_to_abm(p, i, value_by_id[i]);
        double bound = p.firms[i].barrier;
        for (int j : J.ids()) bound += p.contagion.at(j, i);
        prod *= mass_above(p, i, pp, reduced_distance(p, i, bound), t);
    }
    return prod;
}

double h_full(const Portfolio& p, const IndexSet& I, const std::vector<double>& value_by_id,
              double t) {
    check_valid(p);
    if (I.empty()) throw std::invalid_argument("h_full: empty index set");
    std::vector<PassageParams> pps;
    for (int i : I.ids()) pps.push_back(reduce_to_abm(p, i, value_by_id[i]));
    return h_full_reduced(p, I.ids(), pps, t);
}

double h_sub_kernel(const Portfolio& p, const IndexSet& I, const IndexSet& J,
                    const std::vector<double>& value_by_id, double t, const Box& box) {
    check_valid(p);
    if (J.empty() || !J.is_subset_of(I) || J == I)
        throw std::invalid_argument("h_sub_kernel: need empty != J proper subset of I");
    if (!(box.coords == I.subtract(J)))
        throw std::invalid_argument("h_sub_kernel: box coordinates must be exactly I\\J");
    double result = h_full(p, J, value_by_id, t);
    for (int k = 0; k < box.coords.size(); ++k) {
        const int i = box.coords.ids()[k];
        if (!(box.bounds[k].lo >= p.firms[i].barrier))
            throw std::invalid_argument("h_sub_kernel: box lower bounds must be >= barriers");
        double shift = 0.0;
        for (int j : J.ids()) shift += p.contagion.at(j, i);
        const PassageParams pp = reduce_to_abm(p, i, value_by_id[i]);
        const double lo = reduced_distance(p, i, box.bounds[k].lo + shift);
        const double hi = std::isinf(box.bounds[k].hi)
                              ? kInf
                              : reduced_distance(p, i, box.bounds[k].hi + shift);
        result *= killed_interval_mass(pp, lo, hi, t);
    }
    return result;
}

QuadResult cascade_sequence_integral(const Portfolio& p, const std::vector<IndexSet>& sequence,
                                     double horizon, Terminal terminal,
                                     const QuadratureSpec& spec) {
    check_valid(p);
    spec.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("cascade_sequence_integral: horizon > 0");
    if (static_cast<int>(sequence.size()) > spec.depth_for(p.size()))
        throw std::invalid_argument("cascade_sequence_integral: depth guard exceeded");
    const auto plan = plan_stages(p, sequence);
    return integrate_plan(p, plan, horizon, terminal, spec);
}

QuadResult integrate_h_full(const Portfolio& p, const std::vector<double>& value_by_id,
                            double T, const QuadratureSpec& spec) {
    check_valid(p);
    spec.validate();
    double horizon = T;
    if (std::isinf(T)) {
        // Truncate where the remaining first-passage tail mass is < 1e-10.
        std::vector<PassageParams> pps;
        for (int i = 0; i < p.size(); ++i)
            pps.push_back(reduce_to_abm(p, i, value_by_id[i]));
        horizon = 1.0;
        for (int iter = 0; iter < 80; ++iter) {
            double tail = 0.0;
            for (const auto& pp : pps) tail += hit_prob_total(pp) - fp_cdf(pp, horizon);
            if (tail < 1e-10) break;
            horizon *= 2.0;
        }
    }
    std::vector<IndexSet> seq{IndexSet::range(p.size())};
    // Evaluate from the supplied state rather than the portfolio's x0.
    Portfolio shifted = p;
    for (int i = 0; i < p.size(); ++i) shifted.firms[i].x0 = value_by_id[i];
    const auto plan = plan_stages(shifted, seq);
    return integrate_plan(shifted, plan, horizon, Terminal::None, spec);
}

std::vector<std::vector<IndexSet>> enumerate_sequences(const IndexSet& I, int max_len,
                                                       const IndexSet& avoid) {
    std::vector<std::vector<IndexSet>> out;
    std::vector<IndexSet> current;
    const std::uint64_t pool = I.mask() & ~avoid.mask();

    auto rec = [&](auto&& self, std::uint64_t remaining) -> void {
        if (static_cast<int>(current.size()) >= max_len) return;
        for (std::uint64_t s = remaining; s != 0; s = (s - 1) & remaining) {
            current.push_back(IndexSet::from_mask(s));
            out.push_back(current);
            self(self, remaining & ~s);
            current.pop_back();
        }
    };
    if (max_len >= 1) rec(rec, pool);
    return out;
}

DistributionTable prob_N_t(const Portfolio& p, double t, const QuadratureSpec& spec) {
    return CascadeAnalytics(p, spec).prob_N_t(t);
}

QuadResult prob_tau_m_tail(const Portfolio& p, int m, double t, const QuadratureSpec& spec) {
    return CascadeAnalytics(p, spec).prob_tau_m_tail(m, t);
}

QuadResult joint_survival(const Portfolio& p, const IndexSet& K, double t,
                          const QuadratureSpec& spec) {
    return CascadeAnalytics(p, spec).joint_survival(K, t);
}

CascadeAnalytics::CascadeAnalytics(Portfolio p, QuadratureSpec spec)
    : p_(std::move(p)), spec_(spec) {
    spec_.validate();
    check_valid(p_);
}

QuadResult CascadeAnalytics::sequence(const std::vector<IndexSet>& seq, double horizon,
                                      Terminal terminal) {
    std::string key = terminal == Terminal::SurviveAll ? "S" : "N";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "@%a", horizon);
    key += buf;
    for (const auto& s : seq) {
        std::snprintf(buf, sizeof(buf), ":%llx",
                      static_cast<unsigned long long>(s.mask()));
        key += buf;
    }
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const QuadResult r = cascade_sequence_integral(p_, seq, horizon, terminal, spec_);
    cache_.emplace(std::move(key), r);
    return r;
}

DistributionTable CascadeAnalytics::prob_N_t(double t) {
    const int n = p_.size();
    if (n > 6) throw std::invalid_argument("prob_N_t: size guard n <= 6");
    const int depth = spec_.depth_for(n);

    DistributionTable table;
    table.method = spec_.method == QuadratureSpec::Method::Qmc ? "qmc" : "tensor";
    std::vector<DistributionRow> rows(n + 1);
    for (int k = 0; k <= n; ++k) rows[k].label = label_nt(k);

    const QuadResult none = sequence({}, t, Terminal::SurviveAll);
    rows[0].probability = none.value;
    rows[0].tolerance = none.tolerance;

    for (const auto& seq : enumerate_sequences(IndexSet::range(n), depth, IndexSet{})) {
        int total = 0;
        for (const auto& s : seq) total += s.size();
        const QuadResult r = sequence(seq, t, Terminal::SurviveAll);
        rows[total].probability += r.value;
        rows[total].tolerance += r.tolerance;
    }
    table.rows = std::move(rows);
    if (depth < n) {
        const QuadResult trunc = truncated_mass(depth, t);
        table.truncation_allowance = trunc.value + trunc.tolerance;
    }
    return table;
}

QuadResult CascadeAnalytics::prob_tau_m_tail(int m, double t) {
    const int n = p_.size();
    if (m < 1 || m > n) throw std::invalid_argument("prob_tau_m_tail: need 1 <= m <= n");
    if (m - 1 > spec_.depth_for(n))
        throw std::invalid_argument("prob_tau_m_tail: depth guard (m-1 > max_cascade_depth)");
    QuadResult out = sequence({}, t, Terminal::SurviveAll);
    if (m == 1) return out;
    for (const auto& seq : enumerate_sequences(IndexSet::range(n), m - 1, IndexSet{})) {
        const QuadResult r = sequence(seq, t, Terminal::SurviveAll);
        out.value += r.value;
        out.tolerance += r.tolerance;
    }
    return out;
}

// Mass of paths with more than `depth` contagion events by t: exactly
// P(tau(depth+1) <= t) = sum over depth-length prefixes of
// P(prefix happens) - P(prefix happens and nothing follows). The None
// terminal is a separate quadrature (closed-form final stage), so the
// estimate is not assembled from the partition's own numbers.
QuadResult CascadeAnalytics::truncated_mass(int depth, double t) {
    QuadResult out{0.0, 0.0};
    for (const auto& seq : enumerate_sequences(IndexSet::range(p_.size()), depth, IndexSet{})) {
        if (static_cast<int>(seq.size()) != depth) continue;
        const QuadResult open_end = sequence(seq, t, Terminal::None);
        const QuadResult closed = sequence(seq, t, Terminal::SurviveAll);
        out.value += std::max(0.0, open_end.value - closed.value);
        out.tolerance += open_end.tolerance + closed.tolerance;
    }
    return out;
}

QuadResult CascadeAnalytics::joint_survival(const IndexSet& K, double t) {
    const int n = p_.size();
    if (K.empty() || !K.is_subset_of(IndexSet::range(n)))
        throw std::invalid_argument("joint_survival: K must be a non-empty subset of the firms");
    const int max_len = std::min(spec_.depth_for(n), n - K.size());
    QuadResult out = sequence({}, t, Terminal::SurviveAll);
    if (max_len >= 1) {
        for (const auto& seq : enumerate_sequences(IndexSet::range(n), max_len, K)) {
            const QuadResult r = sequence(seq, t, Terminal::SurviveAll);
            out.value += r.value;
            out.tolerance += r.tolerance;
        }
    }
    if (spec_.depth_for(n) < n - K.size()) {
        const QuadResult trunc = truncated_mass(spec_.depth_for(n), t);
        out.tolerance += trunc.value + trunc.tolerance;
    }
    return out;
}

} // namespace domino
