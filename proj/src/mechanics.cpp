#include "algmech/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "algmech/errors.hpp"

namespace algmech {
namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kHomogeneityTol = 1e-8;

Jet zero_jet(int n, int order) { return Jet::constant(0.0, n, order); }

std::vector<double> jet_point(const std::vector<Jet>& in) {
    std::vector<double> pt(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) pt[k] = in[k].v;
    return pt;
}

/// Identity r x r table as a constant phase map.
SmoothMap identity_table(int m, int r) {
    std::vector<double> table(static_cast<std::size_t>(r) * r, 0.0);
    for (int a = 0; a < r; ++a) table[static_cast<std::size_t>(a) * r + a] = 1.0;
    return SmoothMap::constant(std::move(table), m + r);
}

/// Shared evaluation context: the prolongation plus the morphism factor
/// tables composed with h and lifted to phase inputs.
struct PhaseContext {
    Prolongation P;
    bool id_gh = true;
    SmoothMap g_phase;  // g(h(x)), flattened alpha*r + a
    SmoothMap gt_phase; // gtilde(h(x)), flattened a*r + alpha
};

PhaseContext make_context(const GHMorphism& gh, const GeneralizedLieAlgebroid& A) {
    PhaseContext ctx{Prolongation::over(A), gh.is_identity(), SmoothMap{}, SmoothMap{}};
    if (ctx.id_gh) {
        ctx.g_phase = identity_table(A.m, A.r);
        ctx.gt_phase = identity_table(A.m, A.r);
    } else {
        ctx.g_phase = lift_base_map(compose(gh.g, A.h.forward), A.m, A.r);
        ctx.gt_phase = lift_base_map(compose(gh.gtilde, A.h.forward), A.m, A.r);
    }
    return ctx;
}

/// First derivatives of a scalar map w.r.t. the input slice [lo, lo+n).
SmoothMap gradient_slice(const SmoothMap& f, int lo, int n) {
    if (f.is_exprs()) {
        std::vector<ExprAst> comps;
        comps.reserve(n);
        for (int k = 0; k < n; ++k) comps.push_back(differentiate(f.components()[0], lo + k));
        return SmoothMap::from_expressions(f.nin(), std::move(comps));
    }
    const int cap = std::max(0, f.max_order() - 1);
    auto fn = [f, lo, n](const std::vector<Jet>& in) {
        const Jet hi = f.eval_point(jet_point(in), in[0].order + 1)[0];
        std::vector<Jet> out;
        out.reserve(n);
        for (int k = 0; k < n; ++k) out.push_back(jet_partial(hi, lo + k));
        return out;
    };
    return SmoothMap::from_function(f.nin(), n, fn, cap);
}

/// Second derivatives of a scalar map, first slot over [lo1, lo1+n1),
/// second over [lo2, lo2+n2), flattened k1*n2 + k2.
SmoothMap hessian_slice(const SmoothMap& f, int lo1, int n1, int lo2, int n2) {
    if (f.is_exprs()) {
        std::vector<ExprAst> comps;
        comps.reserve(static_cast<std::size_t>(n1) * n2);
        for (int k1 = 0; k1 < n1; ++k1) {
            const ExprAst first = differentiate(f.components()[0], lo1 + k1);
            for (int k2 = 0; k2 < n2; ++k2) comps.push_back(differentiate(first, lo2 + k2));
        }
        return SmoothMap::from_expressions(f.nin(), std::move(comps));
    }
    const int cap = std::max(0, f.max_order() - 2);
    auto fn = [f, lo1, n1, lo2, n2](const std::vector<Jet>& in) {
        const Jet hi = f.eval_point(jet_point(in), in[0].order + 2)[0];
        std::vector<Jet> out;
        out.reserve(static_cast<std::size_t>(n1) * n2);
        for (int k1 = 0; k1 < n1; ++k1) {
            const Jet first = jet_partial(hi, lo1 + k1);
            for (int k2 = 0; k2 < n2; ++k2) out.push_back(jet_partial(first, lo2 + k2));
        }
        return out;
    };
    return SmoothMap::from_function(f.nin(), n1 * n2, fn, cap);
}

/// Derivative tables of one Lagrangian, built once per construction.
struct LagrangianTables {
    int m = 0;
    int r = 0;
    SmoothMap dx;   // L_i
    SmoothMap dy;   // L_a
    SmoothMap dxdy; // L_ib, i*r + b
    SmoothMap dydy; // L_ab, a*r + b
};

LagrangianTables make_tables(const SmoothMap& L, int m, int r) {
    if (L.nin() != m + r || L.nout() != 1) {
        throw DimensionError("Lagrangian must be a scalar map over the phase space");
    }
    return LagrangianTables{m, r, gradient_slice(L, 0, m), gradient_slice(L, m, r),
                            hessian_slice(L, 0, m, m, r), hessian_slice(L, m, r, m, r)};
}

using ContextPtr = std::shared_ptr<const PhaseContext>;
using TablesPtr = std::shared_ptr<const LagrangianTables>;

/// Euler-Lagrange covector as jets at one point.  With an identity morphism
/// pair the base-transport groups cancel in closed form and the reduced
/// three-group assembly keeps the full jet depth; otherwise the transported
/// products are formed one order higher and differentiated explicitly.
std::vector<Jet> el_jets(const PhaseContext& ctx, const LagrangianTables& T,
                         const std::vector<double>& xy, int order) {
    const int m = T.m;
    const int r = T.r;
    if (ctx.id_gh) {
        const auto seed = seed_jets(xy, order);
        const auto rho = ctx.P.rho_h.eval(seed);
        const auto lst = ctx.P.lstruct_h.eval(seed);
        const auto Li = T.dx.eval(seed);
        const auto La = T.dy.eval(seed);
        const auto Lib = T.dxdy.eval(seed);
        std::vector<Jet> E(r, zero_jet(m + r, order));
        for (int b = 0; b < r; ++b) {
            Jet acc = zero_jet(m + r, order);
            for (int i = 0; i < m; ++i) acc = acc + rho[anchor_index(i, b, r)] * Li[i];
            for (int d = 0; d < r; ++d) {
                for (int i = 0; i < m; ++i) {
                    acc = acc - seed[m + d] * rho[anchor_index(i, d, r)] * Lib[i * r + b];
                }
                for (int c = 0; c < r; ++c) {
                    acc = acc + seed[m + d] * lst[structure_index(c, d, b, r)] * La[c];
                }
            }
            E[b] = acc;
        }
        return E;
    }

    const auto hi = seed_jets(xy, order + 1);
    const auto rho_hi = ctx.P.rho_h.eval(hi);
    const auto lst_hi = ctx.P.lstruct_h.eval(hi);
    const auto g_hi = ctx.g_phase.eval(hi);
    const auto gt_hi = ctx.gt_phase.eval(hi);
    const auto Li_hi = T.dx.eval(hi);
    const auto La_hi = T.dy.eval(hi);

    // Transported velocity (g o h)^d_e y^e and the two momentum pairings.
    std::vector<Jet> gy_hi(r, zero_jet(m + r, order + 1));
    for (int d = 0; d < r; ++d) {
        for (int e = 0; e < r; ++e) gy_hi[d] = gy_hi[d] + g_hi[d * r + e] * hi[m + e];
    }
    Jet pair_hi = zero_jet(m + r, order + 1); // (g o h)^a_e y^e L_a
    for (int a = 0; a < r; ++a) pair_hi = pair_hi + gy_hi[a] * La_hi[a];
    std::vector<Jet> mom_hi(r, zero_jet(m + r, order + 1)); // (gtilde o h)^e_b L_e
    for (int b = 0; b < r; ++b) {
        for (int e = 0; e < r; ++e) mom_hi[b] = mom_hi[b] + gt_hi[e * r + b] * La_hi[e];
    }

    std::vector<Jet> E(r, zero_jet(m + r, order));
    for (int b = 0; b < r; ++b) {
        Jet acc = zero_jet(m + r, order);
        for (int i = 0; i < m; ++i) {
            const Jet rho_ib = jet_truncate(rho_hi[anchor_index(i, b, r)], order);
            acc = acc + rho_ib * jet_truncate(Li_hi[i], order);
            acc = acc - rho_ib * jet_partial(pair_hi, i);
        }
        for (int d = 0; d < r; ++d) {
            const Jet gy_d = jet_truncate(gy_hi[d], order);
            for (int i = 0; i < m; ++i) {
                acc = acc - gy_d * jet_truncate(rho_hi[anchor_index(i, d, r)], order) *
                                jet_partial(mom_hi[b], i);
                acc = acc + gy_d * jet_truncate(rho_hi[anchor_index(i, b, r)], order) *
                                jet_partial(mom_hi[d], i);
            }
            for (int c = 0; c < r; ++c) {
                acc = acc + gy_d * jet_truncate(lst_hi[structure_index(c, d, b, r)], order) *
                                jet_truncate(mom_hi[c], order);
            }
        }
        E[b] = acc;
    }
    return E;
}

/// Fiber Hessian at a point with the pivot-ratio guard applied to values.
std::vector<std::vector<Jet>> guarded_hessian_jets(const LagrangianTables& T,
                                                   const std::vector<double>& xy, int order) {
    const int r = T.r;
    const auto seed = seed_jets(xy, order);
    const auto Hab = T.dydy.eval(seed);
    Matrix values(r, std::vector<double>(r, 0.0));
    for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) values[a][b] = Hab[a * r + b].v;
    }
    const EliminationResult elim = invert_matrix(values, 1e-9);
    const double condition = elim.min_pivot > 0.0
                                 ? elim.max_pivot / elim.min_pivot
                                 : std::numeric_limits<double>::infinity();
    if (elim.singular) {
        throw SingularHessian("fiber Hessian is numerically singular", condition);
    }
    if (condition > kConditionLimit) {
        throw SingularHessian("fiber Hessian condition estimate exceeds the abort threshold",
                              condition);
    }
    std::vector<std::vector<Jet>> jets(r, std::vector<Jet>(r, zero_jet(T.m + r, order)));
    for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) jets[a][b] = Hab[a * r + b];
    }
    return jets;
}

/// Vertical coefficient table of the canonical semispray as a jet closure.
SmoothMap canonical_avert(const ContextPtr& ctx, const TablesPtr& T) {
    const int m = T->m;
    const int r = T->r;
    int cap;
    if (ctx->id_gh) {
        cap = std::min({T->dx.max_order(), T->dy.max_order(), T->dxdy.max_order(),
                        T->dydy.max_order(), 2});
    } else {
        cap = std::min({T->dx.max_order() - 1, T->dy.max_order() - 1, T->dydy.max_order(), 1});
    }
    cap = std::max(cap, 0);
    auto fn = [ctx, T, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto E = el_jets(*ctx, *T, pt, order);
        const auto Lt = jet_invert_matrix(guarded_hessian_jets(*T, pt, order));
        const auto seed = seed_jets(pt, order);
        const auto g = ctx->g_phase.eval(seed);
        std::vector<Jet> out(r, zero_jet(m + r, order));
        for (int a = 0; a < r; ++a) {
            for (int b = 0; b < r; ++b) {
                for (int e = 0; e < r; ++e) out[a] = out[a] + E[b] * Lt[b][e] * g[a * r + e];
            }
        }
        return out;
    };
    return SmoothMap::from_function(m + r, r, fn, cap);
}

/// Algebroid coefficients of a second-order field: (g o h)(x) y.
SmoothMap horizontal_flow(const GHMorphism& gh, const GeneralizedLieAlgebroid& A) {
    const int m = A.m;
    const int r = A.r;
    if (gh.is_identity()) {
        std::vector<ExprAst> comps;
        comps.reserve(r);
        for (int a = 0; a < r; ++a) comps.push_back(expr_variable(m + a, m, r));
        return SmoothMap::from_expressions(m + r, std::move(comps));
    }
    SmoothMap g_phase = lift_base_map(compose(gh.g, A.h.forward), m, r);
    auto fn = [g_phase, m, r](const std::vector<Jet>& in) {
        const auto g = g_phase.eval(in);
        std::vector<Jet> out(r, zero_jet(static_cast<int>(in.size()), in[0].order));
        for (int a = 0; a < r; ++a) {
            for (int e = 0; e < r; ++e) out[a] = out[a] + g[a * r + e] * in[m + e];
        }
        return out;
    };
    return SmoothMap::from_function(m + r, r, fn, g_phase.max_order());
}

/// theta_L(V) as a scalar phase map usable under directional derivatives.
SmoothMap theta_map(const ContextPtr& ctx, const TablesPtr& T, const ProlongSectionPtr& V) {
    const int m = T->m;
    const int r = T->r;
    const int cap = std::max(0, std::min({V->max_order(), T->dy.max_order(), 2}));
    auto fn = [ctx, T, V, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto sj = V->eval(pt, order);
        const auto seed = seed_jets(pt, order);
        const auto La = T->dy.eval(seed);
        const auto gt = ctx->gt_phase.eval(seed);
        Jet acc = zero_jet(m + r, order);
        for (int a = 0; a < r; ++a) {
            for (int e = 0; e < r; ++e) acc = acc + gt[e * r + a] * La[e] * sj.z[a];
        }
        return std::vector<Jet>{acc};
    };
    return SmoothMap::from_function(m + r, 1, fn, cap);
}

double theta_value(const PhaseContext& ctx, const LagrangianTables& T, const ProlongSectionPtr& V,
                   const std::vector<double>& xy) {
    const int r = T.r;
    const auto sj = V->eval(xy, 0);
    const auto seed = seed_jets(xy, 0);
    const auto La = T.dy.eval(seed);
    const auto gt = ctx.gt_phase.eval(seed);
    double acc = 0.0;
    for (int a = 0; a < r; ++a) {
        for (int e = 0; e < r; ++e) acc += gt[e * r + a].v * La[e].v * sj.z[a].v;
    }
    return acc;
}

double omega_impl(const ContextPtr& ctx, const TablesPtr& T, const ProlongSectionPtr& U,
                  const ProlongSectionPtr& V, const std::vector<double>& xy) {
    const SmoothMap thU = theta_map(ctx, T, U);
    const SmoothMap thV = theta_map(ctx, T, V);
    const double t1 = prolong_anchor_apply(ctx->P, U, thV, xy).v;
    const double t2 = prolong_anchor_apply(ctx->P, V, thU, xy).v;
    const double t3 = theta_value(*ctx, *T, prolong_bracket(ctx->P, U, V), xy);
    return t1 - t2 - t3;
}

SmoothMap energy_map_impl(const ContextPtr& ctx, const TablesPtr& T, const SmoothMap& L) {
    const int m = T->m;
    const int r = T->r;
    const int cap = std::max(0, std::min({T->dy.max_order(), L.max_order(), 2}));
    auto fn = [ctx, T, L, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto seed = seed_jets(pt, order);
        const auto La = T->dy.eval(seed);
        const auto g = ctx->g_phase.eval(seed);
        Jet acc = zero_jet(m + r, order) - L.eval(seed)[0];
        for (int a = 0; a < r; ++a) {
            for (int e = 0; e < r; ++e) acc = acc + g[a * r + e] * seed[m + e] * La[a];
        }
        return std::vector<Jet>{acc};
    };
    return SmoothMap::from_function(m + r, 1, fn, cap);
}

/// Smallest diagonal pivot of unpivoted symmetric elimination; all pivots
/// positive iff the matrix is positive definite.
double unpivoted_min_pivot(Matrix a) {
    const std::size_t n = a.size();
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t col = 0; col < n; ++col) {
        const double p = a[col][col];
        smallest = std::min(smallest, p);
        if (p == 0.0) return std::min(smallest, 0.0);
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a[row][col] / p;
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
        }
    }
    return smallest;
}

} // namespace

SmoothMap scalar_derivative(const SmoothMap& map, int var) {
    if (var < 0 || var >= map.nin()) {
        throw DimensionError("derivative variable out of range");
    }
    if (map.is_exprs()) {
        std::vector<ExprAst> comps;
        comps.reserve(map.nout());
        for (const ExprAst& c : map.components()) comps.push_back(differentiate(c, var));
        return SmoothMap::from_expressions(map.nin(), std::move(comps));
    }
    if (map.is_identity()) {
        std::vector<double> rows(map.nout(), 0.0);
        rows[var] = 1.0;
        return SmoothMap::constant(std::move(rows), map.nin());
    }
    const int cap = std::max(0, map.max_order() - 1);
    auto fn = [map, var](const std::vector<Jet>& in) {
        const auto hi = map.eval_point(jet_point(in), in[0].order + 1);
        std::vector<Jet> out;
        out.reserve(hi.size());
        for (const Jet& j : hi) out.push_back(jet_partial(j, var));
        return out;
    };
    return SmoothMap::from_function(map.nin(), map.nout(), fn, cap);
}

LagrangianJets lagrangian_jets(const SmoothMap& L, int m, int r, const std::vector<double>& xy) {
    if (L.nin() != m + r || L.nout() != 1) {
        throw DimensionError("Lagrangian must be a scalar map over the phase space");
    }
    const Jet j = L.eval_point(xy, 2)[0];
    LagrangianJets out;
    out.value = j.v;
    out.base.resize(m);
    for (int i = 0; i < m; ++i) out.base[i] = j.grad(i);
    out.fiber.resize(r);
    for (int a = 0; a < r; ++a) out.fiber[a] = j.grad(m + a);
    out.mixed.resize(static_cast<std::size_t>(m) * r);
    for (int i = 0; i < m; ++i) {
        for (int b = 0; b < r; ++b) out.mixed[static_cast<std::size_t>(i) * r + b] = j.hess(i, m + b);
    }
    out.vertical.resize(static_cast<std::size_t>(r) * r);
    for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) {
            out.vertical[static_cast<std::size_t>(a) * r + b] = j.hess(m + a, m + b);
        }
    }
    return out;
}

RegularityReport check_regularity(const SmoothMap& L, int m, int r, const std::vector<double>& xy,
                                  double tol) {
    const LagrangianJets jets = lagrangian_jets(L, m, r, xy);
    Matrix hess(r, std::vector<double>(r, 0.0));
    for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) hess[a][b] = jets.vertical[static_cast<std::size_t>(a) * r + b];
    }
    const EliminationResult elim = invert_matrix(std::move(hess), tol);
    return RegularityReport{!elim.singular, std::fabs(elim.det)};
}

Matrix hessian_inverse(const SmoothMap& L, int m, int r, const std::vector<double>& xy) {
    const LagrangianJets jets = lagrangian_jets(L, m, r, xy);
    Matrix hess(r, std::vector<double>(r, 0.0));
    for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) hess[a][b] = jets.vertical[static_cast<std::size_t>(a) * r + b];
    }
    const EliminationResult elim = invert_matrix(std::move(hess), 1e-9);
    const double condition = elim.min_pivot > 0.0 ? elim.max_pivot / elim.min_pivot
                                                  : std::numeric_limits<double>::infinity();
    if (elim.singular) {
        throw SingularHessian("fiber Hessian is numerically singular", condition);
    }
    if (condition > kConditionLimit) {
        throw SingularHessian("fiber Hessian condition estimate exceeds the abort threshold",
                              condition);
    }
    return elim.inverse;
}

FinslerReport check_finsler_axioms(const SmoothMap& F, int m, int r, const SamplePlan& plan) {
    if (F.nin() != m + r || F.nout() != 1) {
        throw DimensionError("Finsler fundamental function must be a scalar phase map");
    }
    SamplePlan p = plan;
    p.exclude_zero_fiber = true;
    FinslerReport report;
    report.min_quadratic_pivot = std::numeric_limits<double>::infinity();
    for (const auto& xy : p.draw()) {
        const Jet j = F.eval_point(xy, 2)[0];
        double radial = 0.0;
        for (int a = 0; a < r; ++a) radial += xy[m + a] * j.grad(m + a);
        report.euler_residual = std::max(report.euler_residual, std::fabs(radial - j.v));
        for (const double s : {0.5, 2.0}) {
            std::vector<double> scaled = xy;
            for (int a = 0; a < r; ++a) scaled[m + a] *= s;
            const double fs = F.value(scaled)[0];
            report.scaling_residual = std::max(report.scaling_residual, std::fabs(fs - s * j.v));
        }
        const Jet fsq = j * j;
        Matrix quad(r, std::vector<double>(r, 0.0));
        for (int a = 0; a < r; ++a) {
            for (int b = 0; b < r; ++b) quad[a][b] = fsq.hess(m + a, m + b);
        }
        report.min_quadratic_pivot =
            std::min(report.min_quadratic_pivot, unpivoted_min_pivot(std::move(quad)));
    }
    report.homogeneous = report.euler_residual <= kHomogeneityTol &&
                         report.scaling_residual <= kHomogeneityTol;
    report.positive_definite = report.min_quadratic_pivot > 0.0;
    return report;
}

double energy(const SmoothMap& L, const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
              const std::vector<double>& xy) {
    const int m = A.m;
    const int r = A.r;
    const Jet j = L.eval_point(xy, 1)[0];
    double acc = -j.v;
    if (gh.is_identity()) {
        for (int a = 0; a < r; ++a) acc += xy[m + a] * j.grad(m + a);
        return acc;
    }
    const std::vector<double> x(xy.begin(), xy.begin() + m);
    const auto g = compose(gh.g, A.h.forward).value(x);
    for (int a = 0; a < r; ++a) {
        for (int e = 0; e < r; ++e) acc += g[a * r + e] * xy[m + e] * j.grad(m + a);
    }
    return acc;
}

SmoothMap energy_map(const SmoothMap& L, const GHMorphism& gh, const GeneralizedLieAlgebroid& A) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    auto T = std::make_shared<const LagrangianTables>(make_tables(L, A.m, A.r));
    return energy_map_impl(ctx, T, L);
}

double poincare_cartan_theta(const SmoothMap& L, const GHMorphism& gh,
                             const GeneralizedLieAlgebroid& A, const ProlongSectionPtr& X,
                             const std::vector<double>& xy) {
    const PhaseContext ctx = make_context(gh, A);
    const LagrangianTables T = make_tables(L, A.m, A.r);
    return theta_value(ctx, T, X, xy);
}

double poincare_cartan_omega(const SmoothMap& L, const GHMorphism& gh,
                             const GeneralizedLieAlgebroid& A, const ProlongSectionPtr& U,
                             const ProlongSectionPtr& V, const std::vector<double>& xy) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    auto T = std::make_shared<const LagrangianTables>(make_tables(L, A.m, A.r));
    return omega_impl(ctx, T, U, V, xy);
}

std::vector<double> euler_lagrange_covector(const SmoothMap& L, const GHMorphism& gh,
                                            const GeneralizedLieAlgebroid& A,
                                            const std::vector<double>& xy) {
    const PhaseContext ctx = make_context(gh, A);
    const LagrangianTables T = make_tables(L, A.m, A.r);
    const auto jets = el_jets(ctx, T, xy, 0);
    std::vector<double> out(jets.size());
    for (std::size_t b = 0; b < jets.size(); ++b) out[b] = jets[b].v;
    return out;
}

SemisprayField semispray_from_avert(SmoothMap avert, const GHMorphism& gh,
                                    const GeneralizedLieAlgebroid& A) {
    if (avert.nin() != A.m + A.r || avert.nout() != A.r) {
        throw DimensionError("vertical coefficient table has the wrong shape");
    }
    return SemisprayField{A.m, A.r, horizontal_flow(gh, A), std::move(avert)};
}

SemisprayField canonical_semispray(const SmoothMap& L, const GHMorphism& gh,
                                   const GeneralizedLieAlgebroid& A) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    auto T = std::make_shared<const LagrangianTables>(make_tables(L, A.m, A.r));
    return SemisprayField{A.m, A.r, horizontal_flow(gh, A), canonical_avert(ctx, T)};
}

double verify_cartan_equation(const SemisprayField& S, const SmoothMap& L, const GHMorphism& gh,
                              const GeneralizedLieAlgebroid& A, const SamplePlan& plan) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    auto T = std::make_shared<const LagrangianTables>(make_tables(L, A.m, A.r));
    const SmoothMap emap = energy_map_impl(ctx, T, L);
    const ProlongSectionPtr sec = S.section();
    const int m = A.m;
    const int r = A.r;
    double worst = 0.0;
    for (const auto& xy : plan.draw()) {
        for (int k = 0; k < 2 * r; ++k) {
            const ProlongSectionPtr X =
                k < r ? natural_base_h(k, m, r) : natural_base_v(k - r, m, r);
            const double pairing = omega_impl(ctx, T, sec, X, xy);
            const double drift = prolong_anchor_apply(ctx->P, X, emap, xy).v;
            worst = std::max(worst, std::fabs(pairing + drift));
        }
    }
    return worst;
}

double check_semispray_uniqueness(const SemisprayField& S, const SmoothMap& L,
                                  const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
                                  const SamplePlan& plan) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    auto T = std::make_shared<const LagrangianTables>(make_tables(L, A.m, A.r));
    const SmoothMap emap = energy_map_impl(ctx, T, L);
    const int m = A.m;
    const int r = A.r;
    const ProlongSectionPtr base =
        prolong_section(S.horizontal, SmoothMap::zero(m + r, r));
    std::vector<ProlongSectionPtr> probes;
    probes.reserve(r);
    for (int a = 0; a < r; ++a) {
        std::vector<double> unit(r, 0.0);
        unit[a] = 1.0;
        probes.push_back(prolong_section(S.horizontal, SmoothMap::constant(unit, m + r)));
    }
    double worst = 0.0;
    for (const auto& xy : plan.draw()) {
        std::vector<double> offset(r, 0.0);
        std::vector<double> rhs(r, 0.0);
        Matrix pairing(r, std::vector<double>(r, 0.0));
        for (int b = 0; b < r; ++b) {
            const ProlongSectionPtr X = natural_base_h(b, m, r);
            offset[b] = omega_impl(ctx, T, base, X, xy);
            rhs[b] = -prolong_anchor_apply(ctx->P, X, emap, xy).v - offset[b];
            for (int a = 0; a < r; ++a) {
                pairing[b][a] = omega_impl(ctx, T, probes[a], X, xy) - offset[b];
            }
        }
        std::vector<double> recovered;
        if (!solve_linear(pairing, rhs, recovered)) {
            throw SingularHessian("Cartan pairing matrix is singular at a sample point",
                                  std::numeric_limits<double>::infinity());
        }
        const auto direct = S.avert.value(xy);
        for (int a = 0; a < r; ++a) {
            worst = std::max(worst, std::fabs(recovered[a] - direct[a]));
        }
    }
    return worst;
}

double check_semispray_property(const SemisprayField& S, const GHMorphism& gh,
                                const GeneralizedLieAlgebroid& A, const SamplePlan& plan) {
    const Prolongation P = Prolongation::over(A);
    const RhoEtaConnection flat = RhoEtaConnection::zero(A.m, A.r);
    const ProlongSectionPtr tangent =
        apply_structure(StructureKind::AlmostTangent, P, flat, &gh, S.section());
    return max_section_difference(tangent, liouville_section(A.m, A.r), plan.draw());
}

RhoEtaConnection connection_from_semispray(const SemisprayField& S, const GHMorphism& gh,
                                           const GeneralizedLieAlgebroid& A) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    const SmoothMap avert = S.avert;
    const int m = A.m;
    const int r = A.r;
    const int cap =
        std::max(0, std::min(avert.max_order() - 1, ctx->id_gh ? 2 : 1));
    auto fn = [ctx, avert, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto seed = seed_jets(pt, order);
        const auto lst = ctx->P.lstruct_h.eval(seed);
        const auto av_hi = avert.eval_point(pt, order + 1);
        std::vector<Jet> out(static_cast<std::size_t>(r) * r, zero_jet(m + r, order));
        if (ctx->id_gh) {
            for (int a = 0; a < r; ++a) {
                for (int c = 0; c < r; ++c) {
                    Jet acc = jet_partial(av_hi[a], m + c) * -0.5;
                    for (int d = 0; d < r; ++d) {
                        acc = acc - seed[m + d] * lst[structure_index(a, d, c, r)] * 0.5;
                    }
                    out[gamma_index(a, c, r)] = acc;
                }
            }
            return out;
        }
        const auto hi = seed_jets(pt, order + 1);
        const auto rho = ctx->P.rho_h.eval(seed);
        const auto g_hi = ctx->g_phase.eval(hi);
        const auto gt_hi = ctx->gt_phase.eval(hi);
        auto tr = [order](const Jet& j) { return jet_truncate(j, order); };
        for (int a = 0; a < r; ++a) {
            for (int c = 0; c < r; ++c) {
                Jet acc = zero_jet(m + r, order);
                for (int b = 0; b < r; ++b) {
                    acc = acc - tr(gt_hi[b * r + c]) * jet_partial(av_hi[a], m + b) * 0.5;
                }
                for (int d = 0; d < r; ++d) {
                    for (int e = 0; e < r; ++e) {
                        for (int f = 0; f < r; ++f) {
                            acc = acc - tr(g_hi[d * r + e]) * seed[m + e] *
                                        lst[structure_index(f, d, c, r)] *
                                        tr(gt_hi[a * r + f]) * 0.5;
                        }
                    }
                }
                for (int b = 0; b < r; ++b) {
                    for (int e = 0; e < r; ++e) {
                        for (int j = 0; j < m; ++j) {
                            acc = acc + rho[anchor_index(j, c, r)] *
                                        jet_partial(g_hi[b * r + e], j) * seed[m + e] *
                                        tr(gt_hi[a * r + b]) * 0.5;
                        }
                        for (int i = 0; i < m; ++i) {
                            acc = acc - tr(g_hi[b * r + e]) * seed[m + e] *
                                        rho[anchor_index(i, b, r)] *
                                        jet_partial(gt_hi[a * r + c], i) * 0.5;
                        }
                    }
                }
                out[gamma_index(a, c, r)] = acc;
            }
        }
        return out;
    };
    return RhoEtaConnection{SmoothMap::from_function(m + r, r * r, fn, cap)};
}

RhoEtaConnection ring_connection(const RhoEtaConnection& conn, const SmoothMap& fe,
                                 const GHMorphism& gh, const GeneralizedLieAlgebroid& A) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    const SmoothMap gamma = conn.gamma;
    const int m = A.m;
    const int r = A.r;
    if (fe.nin() != m + r || fe.nout() != r) {
        throw DimensionError("external force table has the wrong shape");
    }
    const SmoothMap force = fe;
    const int cap = std::max(0, std::min(gamma.max_order(), force.max_order() - 1));
    auto fn = [ctx, gamma, force, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto seed = seed_jets(pt, order);
        const auto base = gamma.eval(seed);
        const auto gt = ctx->gt_phase.eval(seed);
        const auto f_hi = force.eval_point(pt, order + 1);
        std::vector<Jet> out(static_cast<std::size_t>(r) * r, zero_jet(m + r, order));
        for (int a = 0; a < r; ++a) {
            for (int c = 0; c < r; ++c) {
                Jet acc = base[gamma_index(a, c, r)];
                for (int d = 0; d < r; ++d) {
                    acc = acc + gt[d * r + c] * jet_partial(f_hi[a], m + d) * 0.25;
                }
                out[gamma_index(a, c, r)] = acc;
            }
        }
        return out;
    };
    return RhoEtaConnection{SmoothMap::from_function(m + r, r * r, fn, cap)};
}

SemisprayField canonical_spray(const RhoEtaConnection& conn, const GHMorphism& gh,
                               const GeneralizedLieAlgebroid& A) {
    auto ctx = std::make_shared<const PhaseContext>(make_context(gh, A));
    const SmoothMap gamma = conn.gamma;
    const int m = A.m;
    const int r = A.r;
    const int cap = std::max(0, ctx->id_gh ? gamma.max_order() : std::min(gamma.max_order(), 1));
    auto fn = [ctx, gamma, m, r](const std::vector<Jet>& in) {
        const auto pt = jet_point(in);
        const int order = in[0].order;
        const auto seed = seed_jets(pt, order);
        const auto G = gamma.eval(seed);
        const auto lst = ctx->P.lstruct_h.eval(seed);
        std::vector<Jet> out(r, zero_jet(m + r, order));
        if (ctx->id_gh) {
            for (int a = 0; a < r; ++a) {
                Jet acc = zero_jet(m + r, order);
                for (int c = 0; c < r; ++c) acc = acc + G[gamma_index(a, c, r)] * seed[m + c];
                for (int d = 0; d < r; ++d) {
                    for (int c = 0; c < r; ++c) {
                        acc = acc + seed[m + d] * seed[m + c] *
                                    lst[structure_index(a, d, c, r)] * 0.5;
                    }
                }
                out[a] = zero_jet(m + r, order) - acc;
            }
            return out;
        }
        const auto hi = seed_jets(pt, order + 1);
        const auto rho = ctx->P.rho_h.eval(seed);
        const auto g_hi = ctx->g_phase.eval(hi);
        const auto gt_hi = ctx->gt_phase.eval(hi);
        auto tr = [order](const Jet& j) { return jet_truncate(j, order); };
        std::vector<Jet> gy(r, zero_jet(m + r, order));
        for (int c = 0; c < r; ++c) {
            for (int f = 0; f < r; ++f) gy[c] = gy[c] + tr(g_hi[c * r + f]) * seed[m + f];
        }
        for (int a = 0; a < r; ++a) {
            Jet acc = zero_jet(m + r, order);
            for (int c = 0; c < r; ++c) acc = acc + G[gamma_index(a, c, r)] * gy[c];
            for (int d = 0; d < r; ++d) {
                for (int b = 0; b < r; ++b) {
                    for (int c = 0; c < r; ++c) {
                        acc = acc + gy[d] * lst[structure_index(b, d, c, r)] *
                                    tr(gt_hi[a * r + b]) * gy[c] * 0.5;
                    }
                }
            }
            for (int c = 0; c < r; ++c) {
                for (int b = 0; b < r; ++b) {
                    for (int e = 0; e < r; ++e) {
                        for (int j = 0; j < m; ++j) {
                            acc = acc - rho[anchor_index(j, c, r)] *
                                        jet_partial(g_hi[b * r + e], j) * seed[m + e] *
                                        tr(gt_hi[a * r + b]) * gy[c] * 0.5;
                        }
                        for (int i = 0; i < m; ++i) {
                            acc = acc + tr(g_hi[b * r + e]) * seed[m + e] *
                                        rho[anchor_index(i, b, r)] *
                                        jet_partial(gt_hi[a * r + c], i) * gy[c] * 0.5;
                        }
                    }
                }
            }
            out[a] = zero_jet(m + r, order) - acc;
        }
        return out;
    };
    return SemisprayField{m, r, horizontal_flow(gh, A),
                          SmoothMap::from_function(m + r, r, fn, cap)};
}

std::vector<double> spray_deviation(const SemisprayField& S, const GeneralizedLieAlgebroid& A,
                                    const std::vector<double>& xy) {
    const int m = A.m;
    const int r = A.r;
    const auto av = S.avert.eval_point(xy, 1);
    std::vector<double> out(r, 0.0);
    for (int a = 0; a < r; ++a) {
        double acc = -2.0 * av[a].v;
        for (int f = 0; f < r; ++f) acc += xy[m + f] * av[a].grad(m + f);
        out[a] = acc;
    }
    return out;
}

std::vector<double> ring_curvature(const RhoEtaConnection& conn, const SmoothMap& fe,
                                   const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
                                   const std::vector<double>& xy) {
    const PhaseContext ctx = make_context(gh, A);
    const int m = A.m;
    const int r = A.r;
    const std::vector<double> base = curvature(ctx.P, conn, xy);
    const auto seed1 = seed_jets(xy, 1);
    const auto gamma1 = conn.gamma.eval(seed1);
    const auto gt1 = ctx.gt_phase.eval(seed1);
    const auto rho = ctx.P.rho_h.eval(seed_jets(xy, 0));
    const auto lst = ctx.P.lstruct_h.eval(seed_jets(xy, 0));
    const auto f2 = fe.eval_point(xy, 2);

    // Force-gradient table W^a_c = (gtilde^d_c o h) dF^a/dy^d as order-1 jets.
    std::vector<std::vector<Jet>> W(r, std::vector<Jet>(r, zero_jet(m + r, 1)));
    for (int a = 0; a < r; ++a) {
        for (int c = 0; c < r; ++c) {
            Jet acc = zero_jet(m + r, 1);
            for (int d = 0; d < r; ++d) acc = acc + gt1[d * r + c] * jet_partial(f2[a], m + d);
            W[a][c] = acc;
        }
    }
    // Adapted horizontal derivative of a phase jet in frame direction `dir`.
    auto hder = [&](const Jet& w, int dir) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += rho[anchor_index(i, dir, r)].v * w.grad(i);
        for (int b = 0; b < r; ++b) acc -= gamma1[gamma_index(b, dir, r)].v * w.grad(m + b);
        return acc;
    };

    std::vector<double> out(static_cast<std::size_t>(r) * r * r, 0.0);
    for (int a = 0; a < r; ++a) {
        for (int c = 0; c < r; ++c) {
            for (int d = 0; d < r; ++d) {
                double acc = base[(static_cast<std::size_t>(a) * r + c) * r + d];
                acc += 0.25 * (hder(W[a][c], d) - hder(W[a][d], c));
                for (int f = 0; f < r; ++f) {
                    acc += 0.25 * (gamma1[gamma_index(a, d, r)].grad(m + f) * W[f][c].v -
                                   gamma1[gamma_index(a, c, r)].grad(m + f) * W[f][d].v);
                }
                for (int e = 0; e < r; ++e) {
                    for (int f = 0; f < r; ++f) {
                        const double hess = f2[a].hess(m + e, m + f);
                        acc -= (1.0 / 16.0) * (W[f][d].v * gt1[e * r + c].v * hess -
                                               W[f][c].v * gt1[e * r + d].v * hess);
                    }
                }
                for (int g = 0; g < r; ++g) {
                    acc += 0.25 * lst[structure_index(g, c, d, r)].v * W[a][g].v;
                }
                out[(static_cast<std::size_t>(a) * r + c) * r + d] = acc;
            }
        }
    }
    return out;
}

double check_avert_homogeneity(const SmoothMap& avert, int m, int r, const SamplePlan& plan,
                               double scale) {
    SamplePlan p = plan;
    p.exclude_zero_fiber = true;
    double worst = 0.0;
    for (const auto& xy : p.draw()) {
        const auto base = avert.value(xy);
        std::vector<double> scaled = xy;
        for (int a = 0; a < r; ++a) scaled[m + a] *= scale;
        const auto lifted = avert.value(scaled);
        for (int a = 0; a < r; ++a) {
            const double expected = scale * scale * base[a];
            const double rel = std::fabs(lifted[a] - expected) / std::max(1.0, std::fabs(expected));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace algmech
