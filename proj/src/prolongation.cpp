#include "algmech/prolongation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "algmech/errors.hpp"
#include "algmech/linalg.hpp"

namespace algmech {

namespace {

constexpr int kUnboundedOrder = 1 << 20;

SectionJets truncate_section(const SectionJets& s, int order) {
    SectionJets out;
    out.z.reserve(s.z.size());
    out.y.reserve(s.y.size());
    for (const Jet& j : s.z) out.z.push_back(jet_truncate(j, order));
    for (const Jet& j : s.y) out.y.push_back(jet_truncate(j, order));
    return out;
}

/// rho~(V)(f) with V's coefficients and the anchor table already at the
/// result order and f one order higher.
Jet apply_anchor_coeffs(int m, int r, const std::vector<Jet>& rho, const SectionJets& V,
                        const Jet& f_hi) {
    Jet acc = Jet::constant(0.0, f_hi.n, f_hi.order - 1);
    for (int alpha = 0; alpha < r; ++alpha) {
        for (int i = 0; i < m; ++i) {
            acc = acc + V.z[alpha] * rho[anchor_index(i, alpha, r)] * jet_partial(f_hi, i);
        }
    }
    for (int a = 0; a < r; ++a) {
        acc = acc + V.y[a] * jet_partial(f_hi, m + a);
    }
    return acc;
}

class MapProlongSection final : public ProlongSection {
public:
    MapProlongSection(SmoothMap zcoef, SmoothMap ycoef)
        : z_(std::move(zcoef)), y_(std::move(ycoef)) {
        if (z_.nin() != y_.nin() || z_.nout() != y_.nout()) {
            throw DimensionError("section coefficient maps disagree on shape");
        }
        maxo_ = std::min(z_.max_order(), y_.max_order());
    }

    SectionJets eval(const std::vector<double>& xy, int order) const override {
        return SectionJets{z_.eval_point(xy, order), y_.eval_point(xy, order)};
    }
    int max_order() const override { return maxo_; }

private:
    SmoothMap z_, y_;
    int maxo_ = 0;
};

class BracketProlongSection final : public ProlongSection {
public:
    BracketProlongSection(Prolongation P, ProlongSectionPtr X, ProlongSectionPtr W)
        : P_(std::move(P)), X_(std::move(X)), W_(std::move(W)) {
        maxo_ = std::min(X_->max_order(), W_->max_order()) - 1;
    }

    SectionJets eval(const std::vector<double>& xy, int order) const override {
        if (order > maxo_) {
            throw DimensionError("bracket section evaluated beyond its derivative budget");
        }
        const int m = P_.m, r = P_.r;
        const SectionJets Xhi = X_->eval(xy, order + 1);
        const SectionJets Whi = W_->eval(xy, order + 1);
        const SectionJets Xlo = truncate_section(Xhi, order);
        const SectionJets Wlo = truncate_section(Whi, order);
        const std::vector<Jet> rho = P_.rho_h.eval_point(xy, order);
        const std::vector<Jet> lst = P_.lstruct_h.eval_point(xy, order);

        SectionJets out;
        out.z.reserve(r);
        out.y.reserve(r);
        for (int c = 0; c < r; ++c) {
            Jet zc = apply_anchor_coeffs(m, r, rho, Xlo, Whi.z[c]) -
                     apply_anchor_coeffs(m, r, rho, Wlo, Xhi.z[c]);
            for (int a = 0; a < r; ++a) {
                for (int b = 0; b < r; ++b) {
                    zc = zc + lst[structure_index(c, a, b, r)] * Xlo.z[a] * Wlo.z[b];
                }
            }
            out.z.push_back(zc);
            out.y.push_back(apply_anchor_coeffs(m, r, rho, Xlo, Whi.y[c]) -
                            apply_anchor_coeffs(m, r, rho, Wlo, Xhi.y[c]));
        }
        return out;
    }
    int max_order() const override { return maxo_; }

private:
    Prolongation P_;
    ProlongSectionPtr X_, W_;
    int maxo_ = 0;
};

class ComboSection final : public ProlongSection {
public:
    explicit ComboSection(std::vector<std::pair<double, ProlongSectionPtr>> terms)
        : terms_(std::move(terms)) {
        if (terms_.empty()) throw DimensionError("empty section combination");
        maxo_ = kUnboundedOrder;
        for (const auto& t : terms_) maxo_ = std::min(maxo_, t.second->max_order());
    }

    SectionJets eval(const std::vector<double>& xy, int order) const override {
        SectionJets acc = terms_[0].second->eval(xy, order);
        for (Jet& j : acc.z) j = terms_[0].first * j;
        for (Jet& j : acc.y) j = terms_[0].first * j;
        for (std::size_t k = 1; k < terms_.size(); ++k) {
            const SectionJets s = terms_[k].second->eval(xy, order);
            if (s.z.size() != acc.z.size() || s.y.size() != acc.y.size()) {
                throw DimensionError("section combination mixes ranks");
            }
            for (std::size_t c = 0; c < acc.z.size(); ++c) {
                acc.z[c] = acc.z[c] + terms_[k].first * s.z[c];
            }
            for (std::size_t c = 0; c < acc.y.size(); ++c) {
                acc.y[c] = acc.y[c] + terms_[k].first * s.y[c];
            }
        }
        return acc;
    }
    int max_order() const override { return maxo_; }

private:
    std::vector<std::pair<double, ProlongSectionPtr>> terms_;
    int maxo_ = 0;
};

class EndoSection final : public ProlongSection {
public:
    EndoSection(Prolongation P, RhoEtaConnection conn, AdaptedBlockMap block, int block_max_order,
                ProlongSectionPtr X)
        : P_(std::move(P)), conn_(std::move(conn)), block_(std::move(block)), X_(std::move(X)) {
        maxo_ = std::min({X_->max_order(), conn_.gamma.max_order(), block_max_order});
    }

    SectionJets eval(const std::vector<double>& xy, int order) const override {
        const std::vector<Jet> gj = conn_.gamma.eval_point(xy, order);
        const SectionJets adapted = to_adapted(X_->eval(xy, order), gj, P_.r);
        const SectionJets mapped = block_(adapted, xy, order);
        return from_adapted(mapped, gj, P_.r);
    }
    int max_order() const override { return maxo_; }

private:
    Prolongation P_;
    RhoEtaConnection conn_;
    AdaptedBlockMap block_;
    ProlongSectionPtr X_;
    int maxo_ = 0;
};

std::vector<Jet> zero_jets_like(const std::vector<Jet>& like) {
    std::vector<Jet> out;
    out.reserve(like.size());
    for (const Jet& j : like) out.push_back(Jet::constant(0.0, j.n, j.order));
    return out;
}

std::string format_coef(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string phase_var_name(int idx, int m) {
    if (idx < m) return "x" + std::to_string(idx + 1);
    return "y" + std::to_string(idx - m + 1);
}

} // namespace

SmoothMap phase_projection(int m, int r) {
    std::vector<ExprAst> comps;
    comps.reserve(m);
    for (int i = 0; i < m; ++i) comps.push_back(expr_variable(i, m, r));
    return SmoothMap::from_expressions(m + r, std::move(comps));
}

SmoothMap lift_base_map(const SmoothMap& base, int m, int r) {
    if (r == 0) return base;
    return compose(base, phase_projection(m, r));
}

Prolongation Prolongation::over(const GeneralizedLieAlgebroid& A) {
    Prolongation P;
    P.m = A.m;
    P.r = A.r;
    P.rho_h = lift_base_map(A.anchor_h, A.m, A.r);
    P.lstruct_h = lift_base_map(A.structure_h, A.m, A.r);
    P.h = A.h;
    return P;
}

RhoEtaConnection RhoEtaConnection::zero(int m, int r) {
    return RhoEtaConnection{SmoothMap::zero(m + r, r * r)};
}

ProlongSectionPtr prolong_section(SmoothMap zcoef, SmoothMap ycoef) {
    return std::make_shared<MapProlongSection>(std::move(zcoef), std::move(ycoef));
}

ProlongSectionPtr prolong_constant(std::vector<double> z, std::vector<double> y, int m, int r) {
    if (static_cast<int>(z.size()) != r || static_cast<int>(y.size()) != r) {
        throw DimensionError("constant section coefficients must have rank entries");
    }
    return prolong_section(SmoothMap::constant(std::move(z), m + r),
                           SmoothMap::constant(std::move(y), m + r));
}

ProlongSectionPtr natural_base_h(int alpha, int m, int r) {
    if (alpha < 0 || alpha >= r) throw DimensionError("basis index out of range");
    std::vector<double> z(r, 0.0), y(r, 0.0);
    z[alpha] = 1.0;
    return prolong_constant(std::move(z), std::move(y), m, r);
}

ProlongSectionPtr natural_base_v(int a, int m, int r) {
    if (a < 0 || a >= r) throw DimensionError("basis index out of range");
    std::vector<double> z(r, 0.0), y(r, 0.0);
    y[a] = 1.0;
    return prolong_constant(std::move(z), std::move(y), m, r);
}

ProlongSectionPtr adapted_base_h(int alpha, const Prolongation& P, const RhoEtaConnection& conn) {
    if (alpha < 0 || alpha >= P.r) throw DimensionError("basis index out of range");
    const int m = P.m, r = P.r;
    std::vector<double> z(r, 0.0);
    z[alpha] = 1.0;
    SmoothMap gamma = conn.gamma;
    SmoothMap ycoef = SmoothMap::from_function(
        m + r, r,
        [gamma, alpha, r](const std::vector<Jet>& in) {
            const std::vector<Jet> gj = gamma.eval(in);
            std::vector<Jet> out;
            out.reserve(r);
            for (int a = 0; a < r; ++a) out.push_back(-gj[gamma_index(a, alpha, r)]);
            return out;
        },
        conn.gamma.max_order());
    return prolong_section(SmoothMap::constant(std::move(z), m + r), std::move(ycoef));
}

ProlongSectionPtr liouville_section(int m, int r) {
    std::vector<ExprAst> comps;
    comps.reserve(r);
    for (int a = 0; a < r; ++a) comps.push_back(expr_variable(m + a, m, r));
    return prolong_section(SmoothMap::zero(m + r, r),
                           SmoothMap::from_expressions(m + r, std::move(comps)));
}

ProlongSectionPtr poly_test_section(int m, int r, SplitMix64& rng) {
    const int nvars = m + r;
    auto component = [&]() {
        std::string text = format_coef(rng.uniform(-1.0, 1.0));
        for (int v = 0; v < nvars; ++v) {
            text += " + " + format_coef(rng.uniform(-1.0, 1.0)) + "*" + phase_var_name(v, m);
        }
        const int va = static_cast<int>(rng.next() % nvars);
        const int vb = static_cast<int>(rng.next() % nvars);
        text += " + " + format_coef(rng.uniform(-1.0, 1.0)) + "*" + phase_var_name(va, m) + "*" +
                phase_var_name(vb, m);
        return parse_expression(text, m, r);
    };
    std::vector<ExprAst> zc, yc;
    for (int c = 0; c < r; ++c) zc.push_back(component());
    for (int c = 0; c < r; ++c) yc.push_back(component());
    return prolong_section(SmoothMap::from_expressions(nvars, std::move(zc)),
                           SmoothMap::from_expressions(nvars, std::move(yc)));
}

Jet prolong_anchor_apply(const Prolongation& P, const ProlongSectionPtr& X, const SmoothMap& f,
                         const std::vector<double>& xy, int order) {
    if (f.nout() != 1) throw DimensionError("anchor application expects a scalar function");
    if (f.nin() != P.m + P.r) throw DimensionError("function domain must be the phase space");
    const SectionJets Xj = X->eval(xy, order);
    const Jet fj = f.eval_point(xy, order + 1)[0];
    const std::vector<Jet> rho = P.rho_h.eval_point(xy, order);
    return apply_anchor_coeffs(P.m, P.r, rho, Xj, fj);
}

ProlongSectionPtr prolong_bracket(const Prolongation& P, ProlongSectionPtr X, ProlongSectionPtr W) {
    return std::make_shared<BracketProlongSection>(P, std::move(X), std::move(W));
}

SectionJets to_adapted(const SectionJets& natural, const std::vector<Jet>& gamma, int r) {
    SectionJets out;
    out.z = natural.z;
    out.y.reserve(r);
    for (int a = 0; a < r; ++a) {
        Jet acc = natural.y[a];
        for (int alpha = 0; alpha < r; ++alpha) {
            acc = acc + gamma[gamma_index(a, alpha, r)] * natural.z[alpha];
        }
        out.y.push_back(acc);
    }
    return out;
}

SectionJets from_adapted(const SectionJets& adapted, const std::vector<Jet>& gamma, int r) {
    SectionJets out;
    out.z = adapted.z;
    out.y.reserve(r);
    for (int a = 0; a < r; ++a) {
        Jet acc = adapted.y[a];
        for (int alpha = 0; alpha < r; ++alpha) {
            acc = acc - gamma[gamma_index(a, alpha, r)] * adapted.z[alpha];
        }
        out.y.push_back(acc);
    }
    return out;
}

double adapted_dual_pairing(const RhoEtaConnection& conn, int a, const ProlongSectionPtr& X,
                            const std::vector<double>& xy) {
    const SectionJets Xj = X->eval(xy, 0);
    const int r = static_cast<int>(Xj.z.size());
    const std::vector<double> gv = conn.gamma.value(xy);
    double acc = Xj.y[a].v;
    for (int alpha = 0; alpha < r; ++alpha) {
        acc += gv[gamma_index(a, alpha, r)] * Xj.z[alpha].v;
    }
    return acc;
}

std::vector<double> curvature(const Prolongation& P, const RhoEtaConnection& conn,
                              const std::vector<double>& xy) {
    const int m = P.m, r = P.r;
    const std::vector<Jet> gj = conn.gamma.eval_point(xy, 1);
    const std::vector<double> rho = P.rho_h.value(xy);
    const std::vector<double> lst = P.lstruct_h.value(xy);

    auto gval = [&](int a, int alpha) { return gj[gamma_index(a, alpha, r)].v; };
    auto dgam = [&](int a, int alpha, int dir) { return gj[gamma_index(a, alpha, r)].grad(dir); };
    // rho~(adapted_beta) applied to Gamma^a_alpha.
    auto hder = [&](int a, int alpha, int beta) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += rho[anchor_index(i, beta, r)] * dgam(a, alpha, i);
        for (int b = 0; b < r; ++b) s -= gval(b, beta) * dgam(a, alpha, m + b);
        return s;
    };

    std::vector<double> R(static_cast<std::size_t>(r) * r * r, 0.0);
    for (int a = 0; a < r; ++a) {
        for (int alpha = 0; alpha < r; ++alpha) {
            for (int beta = 0; beta < r; ++beta) {
                double v = hder(a, alpha, beta) - hder(a, beta, alpha);
                for (int c = 0; c < r; ++c) {
                    v += lst[structure_index(c, alpha, beta, r)] * gval(a, c);
                }
                R[(static_cast<std::size_t>(a) * r + alpha) * r + beta] = v;
            }
        }
    }
    return R;
}

ProlongSectionPtr apply_adapted_block(const Prolongation& P, const RhoEtaConnection& conn,
                                      AdaptedBlockMap block, int block_max_order,
                                      ProlongSectionPtr X) {
    return std::make_shared<EndoSection>(P, conn, std::move(block), block_max_order, std::move(X));
}

SectionEndo structure_endo(StructureKind kind, const Prolongation& P,
                           const RhoEtaConnection& conn, const GHMorphism* gh) {
    AdaptedBlockMap block;
    int block_maxo = kUnboundedOrder;
    switch (kind) {
    case StructureKind::VerticalProjector:
        block = [](const SectionJets& adp, const std::vector<double>&, int) {
            return SectionJets{zero_jets_like(adp.z), adp.y};
        };
        break;
    case StructureKind::HorizontalProjector:
        block = [](const SectionJets& adp, const std::vector<double>&, int) {
            return SectionJets{adp.z, zero_jets_like(adp.y)};
        };
        break;
    case StructureKind::AlmostProduct:
        block = [](const SectionJets& adp, const std::vector<double>&, int) {
            SectionJets out{adp.z, adp.y};
            for (Jet& j : out.y) j = -j;
            return out;
        };
        break;
    case StructureKind::AlmostTangent: {
        if (gh == nullptr) {
            throw MissingMorphism("almost tangent structure requires the morphism pair");
        }
        if (gh->is_identity()) {
            block = [](const SectionJets& adp, const std::vector<double>&, int) {
                return SectionJets{zero_jets_like(adp.z), adp.z};
            };
        } else {
            const int r = P.r;
            SmoothMap gt_phase =
                lift_base_map(compose(gh->gtilde, P.h.forward), P.m, P.r);
            block_maxo = gt_phase.max_order();
            block = [gt_phase, r](const SectionJets& adp, const std::vector<double>& xy,
                                  int order) {
                const std::vector<Jet> gt = gt_phase.eval_point(xy, order);
                SectionJets out;
                out.z = zero_jets_like(adp.z);
                out.y.reserve(r);
                for (int b = 0; b < r; ++b) {
                    Jet acc = Jet::constant(0.0, adp.z[0].n, adp.z[0].order);
                    for (int alpha = 0; alpha < r; ++alpha) {
                        acc = acc + gt[static_cast<std::size_t>(b) * r + alpha] * adp.z[alpha];
                    }
                    out.y.push_back(acc);
                }
                return out;
            };
        }
        break;
    }
    }
    return [P, conn, block, block_maxo](const ProlongSectionPtr& X) {
        return apply_adapted_block(P, conn, block, block_maxo, X);
    };
}

ProlongSectionPtr apply_structure(StructureKind kind, const Prolongation& P,
                                  const RhoEtaConnection& conn, const GHMorphism* gh,
                                  const ProlongSectionPtr& X) {
    return structure_endo(kind, P, conn, gh)(X);
}

ProlongSectionPtr nijenhuis(const Prolongation& P, const SectionEndo& e, ProlongSectionPtr X,
                            ProlongSectionPtr W) {
    ProlongSectionPtr eX = e(X);
    ProlongSectionPtr eW = e(W);
    ProlongSectionPtr t1 = prolong_bracket(P, eX, eW);
    ProlongSectionPtr t2 = e(e(prolong_bracket(P, X, W)));
    ProlongSectionPtr t3 = e(prolong_bracket(P, eX, W));
    ProlongSectionPtr t4 = e(prolong_bracket(P, X, eW));
    return section_combo({{1.0, t1}, {1.0, t2}, {-1.0, t3}, {-1.0, t4}});
}

ProlongSectionPtr section_combo(std::vector<std::pair<double, ProlongSectionPtr>> terms) {
    return std::make_shared<ComboSection>(std::move(terms));
}

double max_section_difference(const ProlongSectionPtr& X, const ProlongSectionPtr& W,
                              const std::vector<std::vector<double>>& samples) {
    double worst = 0.0;
    for (const auto& s : samples) {
        const SectionJets a = X->eval(s, 0);
        const SectionJets b = W->eval(s, 0);
        if (a.z.size() != b.z.size() || a.y.size() != b.y.size()) {
            throw DimensionError("section difference mixes ranks");
        }
        for (std::size_t c = 0; c < a.z.size(); ++c) {
            worst = std::max(worst, std::abs(a.z[c].v - b.z[c].v));
        }
        for (std::size_t c = 0; c < a.y.size(); ++c) {
            worst = std::max(worst, std::abs(a.y[c].v - b.y[c].v));
        }
    }
    return worst;
}

std::vector<std::pair<std::string, double>>
structure_identity_suite(const Prolongation& P, const RhoEtaConnection& conn, const GHMorphism& gh,
                         const SamplePlan& plan) {
    const int m = P.m, r = P.r;
    const std::vector<std::vector<double>> samples = plan.draw();

    SplitMix64 rng(plan.seed ^ 0x51D5A11CEDULL);
    const ProlongSectionPtr X = poly_test_section(m, r, rng);
    const ProlongSectionPtr W = poly_test_section(m, r, rng);
    const ProlongSectionPtr zero = prolong_constant(std::vector<double>(r, 0.0),
                                                    std::vector<double>(r, 0.0), m, r);

    const SectionEndo V = structure_endo(StructureKind::VerticalProjector, P, conn, &gh);
    const SectionEndo H = structure_endo(StructureKind::HorizontalProjector, P, conn, &gh);
    const SectionEndo Pr = structure_endo(StructureKind::AlmostProduct, P, conn, &gh);
    const SectionEndo J = structure_endo(StructureKind::AlmostTangent, P, conn, &gh);

    const ProlongSectionPtr VX = V(X), HX = H(X), PX = Pr(X), JX = J(X);
    const ProlongSectionPtr HW = H(W);

    std::vector<std::pair<std::string, double>> out;
    auto check = [&](const std::string& name, const ProlongSectionPtr& lhs,
                     const ProlongSectionPtr& rhs) {
        out.emplace_back(name, max_section_difference(lhs, rhs, samples));
    };

    check("vertical_idempotent", V(VX), VX);
    check("horizontal_idempotent", H(HX), HX);
    check("almost_product_involution", Pr(PX), X);
    check("product_from_horizontal", PX, section_combo({{2.0, HX}, {-1.0, X}}));
    check("product_from_vertical", PX, section_combo({{1.0, X}, {-2.0, VX}}));
    check("product_h_minus_v", PX, section_combo({{1.0, HX}, {-1.0, VX}}));
    check("decomposition", section_combo({{1.0, HX}, {1.0, VX}}), X);
    check("tangent_after_product", J(PX), JX);
    check("product_after_tangent", Pr(JX), section_combo({{-1.0, JX}}));
    check("tangent_after_horizontal", J(HX), JX);
    check("horizontal_after_tangent", H(JX), zero);
    check("tangent_after_vertical", J(VX), zero);
    check("vertical_after_tangent", V(JX), JX);
    check("tangent_squared", J(JX), zero);
    check("nijenhuis_tangent", nijenhuis(P, J, X, W), zero);

    const ProlongSectionPtr hh_bracket = V(prolong_bracket(P, HX, HW));
    check("nijenhuis_vertical_vs_bracket", nijenhuis(P, V, X, W), hh_bracket);
    check("nijenhuis_horizontal_vs_bracket", nijenhuis(P, H, X, W), hh_bracket);

    // Connection projector: the vertical projector must reproduce the
    // connection's split applied to natural coefficients directly.
    double worst = 0.0;
    for (const auto& s : samples) {
        const SectionJets Xj = X->eval(s, 0);
        const std::vector<double> gv = conn.gamma.value(s);
        const SectionJets Vj = VX->eval(s, 0);
        for (int a = 0; a < r; ++a) {
            double direct = Xj.y[a].v;
            for (int alpha = 0; alpha < r; ++alpha) {
                direct += gv[gamma_index(a, alpha, r)] * Xj.z[alpha].v;
            }
            double hat = Vj.y[a].v;
            for (int alpha = 0; alpha < r; ++alpha) {
                hat += gv[gamma_index(a, alpha, r)] * Vj.z[alpha].v;
            }
            worst = std::max(worst, std::abs(Vj.z[a].v));
            worst = std::max(worst, std::abs(hat - direct));
        }
    }
    out.emplace_back("connection_projector", worst);
    return out;
}

// ---------------------------------------------------------------------------
// Transformation laws.

namespace {

Matrix table_to_matrix(const std::vector<double>& flat, int rows, int cols) {
    Matrix out(rows, std::vector<double>(cols, 0.0));
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) out[i][j] = flat[static_cast<std::size_t>(i) * cols + j];
    }
    return out;
}

Matrix inverted_or_throw(const Matrix& mat, const char* what) {
    EliminationResult res = invert_matrix(mat);
    if (res.singular) {
        throw SingularTransition(std::string(what) + " factor is singular at a sample point");
    }
    return res.inverse;
}

} // namespace

TransformationReport verify_transformation_laws(const GeneralizedLieAlgebroid& A,
                                                const RhoEtaConnection* conn,
                                                const SmoothMap* avert, const GHMorphism* gh,
                                                const TransitionData& trans,
                                                const SamplePlan& plan) {
    const int m = A.m, r = A.r;
    TransformationReport report;
    double worst_anchor = 0.0;
    double worst_conn = 0.0;
    double worst_spray = 0.0;

    SmoothMap g_h;
    if (avert != nullptr && gh != nullptr && !gh->is_identity()) {
        g_h = compose(gh->g, A.h.forward);
    }

    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + m);
        const std::vector<double> y(s.begin() + m, s.end());

        Matrix Dphi(m, std::vector<double>(m, 0.0));
        if (trans.phi.is_identity()) {
            for (int i = 0; i < m; ++i) Dphi[i][i] = 1.0;
        } else {
            Dphi = map_jacobian(trans.phi.forward, x);
        }
        inverted_or_throw(Dphi, "chart jacobian");

        const std::vector<Jet> Mj = trans.Mmat.eval_point(x, 1);
        std::vector<double> Mflat(Mj.size());
        for (std::size_t k = 0; k < Mj.size(); ++k) Mflat[k] = Mj[k].v;
        const Matrix Mval = table_to_matrix(Mflat, r, r);
        const Matrix Minv = inverted_or_throw(Mval, "fiber map");
        const Matrix Lval = table_to_matrix(trans.Lam.value(x), r, r);
        const Matrix Linv = inverted_or_throw(Lval, "section map");

        // Anchor law: the two admissible fiber factors must agree.
        const std::vector<double> rho = A.anchor.value(x);
        for (int ip = 0; ip < m; ++ip) {
            for (int ap = 0; ap < r; ++ap) {
                double via_l = 0.0, via_m = 0.0;
                for (int i = 0; i < m; ++i) {
                    for (int al = 0; al < r; ++al) {
                        const double base = Dphi[ip][i] * rho[anchor_index(i, al, r)];
                        via_l += base * Linv[al][ap];
                        via_m += base * Minv[al][ap];
                    }
                }
                worst_anchor = std::max(worst_anchor, std::abs(via_l - via_m));
            }
        }

        const std::vector<double> rho_h = A.anchor_h.value(x);
        // Anchor-driven derivative of the fiber map: K^{a'}_alpha =
        // (rho^i_alpha o h) dM^{a'}_b/dx^i y^b.
        Matrix K(r, std::vector<double>(r, 0.0));
        for (int ap = 0; ap < r; ++ap) {
            for (int al = 0; al < r; ++al) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i) {
                    double dMy = 0.0;
                    for (int b = 0; b < r; ++b) {
                        dMy += Mj[static_cast<std::size_t>(ap) * r + b].grad(i) * y[b];
                    }
                    acc += rho_h[anchor_index(i, al, r)] * dMy;
                }
                K[ap][al] = acc;
            }
        }

        if (conn != nullptr) {
            const std::vector<double> gv = conn->gamma.value(s);
            // Law right-hand side: Gamma' = (M Gamma - K) Lam^{-1}.
            Matrix MG(r, std::vector<double>(r, 0.0));
            for (int ap = 0; ap < r; ++ap) {
                for (int al = 0; al < r; ++al) {
                    double acc = -K[ap][al];
                    for (int a = 0; a < r; ++a) {
                        acc += Mval[ap][a] * gv[gamma_index(a, al, r)];
                    }
                    MG[ap][al] = acc;
                }
            }
            Matrix Gp(r, std::vector<double>(r, 0.0));
            for (int ap = 0; ap < r; ++ap) {
                for (int alp = 0; alp < r; ++alp) {
                    double acc = 0.0;
                    for (int al = 0; al < r; ++al) acc += MG[ap][al] * Linv[al][alp];
                    Gp[ap][alp] = acc;
                }
            }
            // Pushforward of each adapted horizontal frame field, then pair
            // with the primed adapted dual; the law must annihilate it.
            for (int al = 0; al < r; ++al) {
                for (int ap = 0; ap < r; ++ap) {
                    double Yp = K[ap][al];
                    for (int a = 0; a < r; ++a) {
                        Yp -= Mval[ap][a] * gv[gamma_index(a, al, r)];
                    }
                    double pair = Yp;
                    for (int alp = 0; alp < r; ++alp) {
                        pair += Gp[ap][alp] * Lval[alp][al];
                    }
                    worst_conn = std::max(worst_conn, std::abs(pair));
                }
            }
        }

        if (avert != nullptr) {
            const std::vector<double> av = avert->value(s);
            // Algebroid coefficients of the second-order field: Z = (g o h) y.
            std::vector<double> Z = y;
            if (gh != nullptr && !gh->is_identity()) {
                const std::vector<double> gvh = g_h.value(x);
                for (int al = 0; al < r; ++al) {
                    double acc = 0.0;
                    for (int b = 0; b < r; ++b) acc += gvh[static_cast<std::size_t>(al) * r + b] * y[b];
                    Z[al] = acc;
                }
            }
            // Base flow generated by the field at this sample.
            std::vector<double> flow(m, 0.0);
            for (int i = 0; i < m; ++i) {
                for (int al = 0; al < r; ++al) flow[i] += rho_h[anchor_index(i, al, r)] * Z[al];
            }
            // Directional derivative of the fiber map along the flow.
            Matrix dMf(r, std::vector<double>(r, 0.0));
            for (int ap = 0; ap < r; ++ap) {
                for (int b = 0; b < r; ++b) {
                    for (int i = 0; i < m; ++i) {
                        dMf[ap][b] += Mj[static_cast<std::size_t>(ap) * r + b].grad(i) * flow[i];
                    }
                }
            }
            // Forward law: vertical coefficient in the primed frame, with
            // the fiber map taken at the base point of the sample.
            std::vector<double> aprime(r, 0.0);
            for (int ap = 0; ap < r; ++ap) {
                for (int a = 0; a < r; ++a) aprime[ap] += Mval[ap][a] * av[a];
                for (int b = 0; b < r; ++b) aprime[ap] += dMf[ap][b] * y[b];
            }
            // The same law applied with the inverse transition data: the
            // inverse fiber map, its flow derivative by the chain rule, and
            // the transported fiber point.  Must return the original field.
            std::vector<double> yprime(r, 0.0);
            for (int ap = 0; ap < r; ++ap) {
                for (int b = 0; b < r; ++b) yprime[ap] += Mval[ap][b] * y[b];
            }
            std::vector<double> tmp1(r, 0.0); // Minv * yprime
            for (int a = 0; a < r; ++a) {
                for (int ap = 0; ap < r; ++ap) tmp1[a] += Minv[a][ap] * yprime[ap];
            }
            std::vector<double> tmp2(r, 0.0); // dMf * tmp1
            for (int ap = 0; ap < r; ++ap) {
                for (int b = 0; b < r; ++b) tmp2[ap] += dMf[ap][b] * tmp1[b];
            }
            std::vector<double> aback(r, 0.0);
            for (int a = 0; a < r; ++a) {
                for (int ap = 0; ap < r; ++ap) {
                    aback[a] += Minv[a][ap] * (aprime[ap] - tmp2[ap]);
                }
            }
            for (int a = 0; a < r; ++a) {
                worst_spray = std::max(worst_spray, std::abs(aback[a] - av[a]));
            }
            // The algebroid part must also transport consistently: Lam Z
            // against M y on an identified bundle pair.
            if (gh == nullptr || gh->is_identity()) {
                for (int ap = 0; ap < r; ++ap) {
                    double lz = 0.0;
                    for (int al = 0; al < r; ++al) lz += Lval[ap][al] * Z[al];
                    double my = 0.0;
                    for (int b = 0; b < r; ++b) my += Mval[ap][b] * y[b];
                    worst_spray = std::max(worst_spray, std::abs(lz - my));
                }
            }
        }
    }

    report.anchor_consistency = worst_anchor;
    if (conn != nullptr) report.connection_law = worst_conn;
    if (avert != nullptr) report.semispray_law = worst_spray;
    return report;
}

} // namespace algmech
