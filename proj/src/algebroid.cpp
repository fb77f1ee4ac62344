#include "algmech/algebroid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "algmech/errors.hpp"
#include "algmech/linalg.hpp"
#include "algmech/rng.hpp"

namespace algmech {

Diffeo Diffeo::identity(int m) {
    Diffeo d;
    d.forward = SmoothMap::identity(m);
    d.identity_tag = true;
    return d;
}

Diffeo Diffeo::explicit_map(SmoothMap fwd) {
    if (fwd.nin() != fwd.nout()) throw DimensionError("diffeo must map a space to itself");
    Diffeo d;
    d.forward = std::move(fwd);
    d.identity_tag = false;
    return d;
}

GeneralizedLieAlgebroid GeneralizedLieAlgebroid::create(int m, int r, SmoothMap anchor,
                                                        SmoothMap structure, Diffeo h,
                                                        Diffeo eta) {
    if (anchor.nin() != m || anchor.nout() != m * r)
        throw DimensionError("anchor must map R^m to an m*r table");
    if (structure.nin() != m || structure.nout() != r * r * r)
        throw DimensionError("structure functions must map R^m to an r^3 table");
    if (h.dim() != m || eta.dim() != m)
        throw DimensionError("base diffeomorphisms must act on R^m");
    GeneralizedLieAlgebroid A;
    A.m = m;
    A.r = r;
    A.anchor = std::move(anchor);
    A.structure = std::move(structure);
    A.h = std::move(h);
    A.eta = std::move(eta);
    A.anchor_h = compose(A.anchor, A.h.forward);
    A.structure_h = compose(A.structure, A.h.forward);
    return A;
}

GHMorphism GHMorphism::identity(int m, int r) {
    std::vector<double> eye(static_cast<std::size_t>(r) * r, 0.0);
    for (int i = 0; i < r; ++i) eye[static_cast<std::size_t>(i) * r + i] = 1.0;
    GHMorphism gh;
    gh.g = SmoothMap::constant(eye, m);
    gh.gtilde = gh.g;
    gh.identity_tag = true;
    return gh;
}

GHMorphism GHMorphism::from_g(int r, SmoothMap g) {
    if (g.nout() != r * r) throw DimensionError("fiber morphism table must be r*r");
    GHMorphism gh;
    gh.gtilde = SmoothMap::from_function(
        g.nin(), r * r,
        [g, r](const std::vector<Jet>& in) {
            const std::vector<Jet> flat = g.eval(in);
            std::vector<std::vector<Jet>> mat(static_cast<std::size_t>(r),
                                              std::vector<Jet>(static_cast<std::size_t>(r)));
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j)
                    mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                        flat[static_cast<std::size_t>(i) * r + j];
            const auto inv = jet_invert_matrix(std::move(mat));
            std::vector<Jet> out;
            out.reserve(static_cast<std::size_t>(r) * r);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j)
                    out.push_back(inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            return out;
        },
        2);
    gh.g = std::move(g);
    gh.identity_tag = false;
    return gh;
}

SamplePlan SamplePlan::standard(int m, int r, std::uint64_t seed) {
    SamplePlan plan;
    plan.seed = seed;
    plan.count = 64;
    plan.base_dim = m;
    plan.box.assign(static_cast<std::size_t>(m + r), {-2.0, 2.0});
    return plan;
}

std::vector<std::vector<double>> SamplePlan::draw() const {
    SplitMix64 rng(seed);
    const std::size_t dim = box.size();
    const std::size_t fiber_start = static_cast<std::size_t>(base_dim);
    std::vector<std::vector<double>> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::vector<double> u(dim);
        for (;;) {
            for (std::size_t i = 0; i < dim; ++i) u[i] = rng.uniform(box[i].first, box[i].second);
            if (!exclude_zero_fiber) break;
            double sup = 0.0;
            for (std::size_t i = fiber_start; i < dim; ++i) sup = std::max(sup, std::fabs(u[i]));
            if (sup >= 0.1) break;
        }
        samples.push_back(u);
    }
    return samples;
}

namespace {

class MapSection : public BaseSection {
public:
    explicit MapSection(SmoothMap coef) : coef_(std::move(coef)) {}
    std::vector<Jet> eval(const std::vector<double>& x, int order) const override {
        return coef_.eval_point(x, order);
    }
    int max_order() const override { return coef_.max_order(); }

private:
    SmoothMap coef_;
};

class ScaledSection : public BaseSection {
public:
    ScaledSection(SmoothMap f, BaseSectionPtr v) : f_(std::move(f)), v_(std::move(v)) {}
    std::vector<Jet> eval(const std::vector<double>& x, int order) const override {
        const Jet s = f_.eval_point(x, order)[0];
        std::vector<Jet> out = v_->eval(x, order);
        for (Jet& c : out) c = s * c;
        return out;
    }
    int max_order() const override { return std::min(f_.max_order(), v_->max_order()); }

private:
    SmoothMap f_;
    BaseSectionPtr v_;
};

class BracketSection : public BaseSection {
public:
    BracketSection(const GeneralizedLieAlgebroid& A, BaseSectionPtr u, BaseSectionPtr v)
        : m_(A.m), r_(A.r), anchor_h_(A.anchor_h), structure_h_(A.structure_h), u_(std::move(u)),
          v_(std::move(v)) {}

    std::vector<Jet> eval(const std::vector<double>& x, int order) const override {
        const std::vector<Jet> rho = anchor_h_.eval_point(x, order);
        const std::vector<Jet> lst = structure_h_.eval_point(x, order);
        const std::vector<Jet> uhi = u_->eval(x, order + 1);
        const std::vector<Jet> vhi = v_->eval(x, order + 1);
        std::vector<Jet> u(uhi.size()), v(vhi.size());
        for (std::size_t i = 0; i < uhi.size(); ++i) u[i] = jet_truncate(uhi[i], order);
        for (std::size_t i = 0; i < vhi.size(); ++i) v[i] = jet_truncate(vhi[i], order);

        std::vector<Jet> out;
        out.reserve(static_cast<std::size_t>(r_));
        for (int c = 0; c < r_; ++c) {
            Jet acc = Jet::constant(0.0, m_, order);
            for (int i = 0; i < m_; ++i) {
                const Jet dvc = jet_partial(vhi[static_cast<std::size_t>(c)], i);
                const Jet duc = jet_partial(uhi[static_cast<std::size_t>(c)], i);
                for (int a = 0; a < r_; ++a)
                    acc = acc + rho[anchor_index(i, a, r_)] *
                                    (u[static_cast<std::size_t>(a)] * dvc -
                                     v[static_cast<std::size_t>(a)] * duc);
            }
            for (int a = 0; a < r_; ++a)
                for (int b = 0; b < r_; ++b)
                    acc = acc + lst[structure_index(c, a, b, r_)] * u[static_cast<std::size_t>(a)] *
                                    v[static_cast<std::size_t>(b)];
            out.push_back(acc);
        }
        return out;
    }

    int max_order() const override { return std::min(u_->max_order(), v_->max_order()) - 1; }

private:
    int m_, r_;
    SmoothMap anchor_h_;
    SmoothMap structure_h_;
    BaseSectionPtr u_;
    BaseSectionPtr v_;
};

} // namespace

BaseSectionPtr base_section_from_map(SmoothMap coef) {
    return std::make_shared<MapSection>(std::move(coef));
}

BaseSectionPtr base_section_constant(std::vector<double> coef, int m) {
    return std::make_shared<MapSection>(SmoothMap::constant(std::move(coef), m));
}

BaseSectionPtr base_section_scaled(SmoothMap f, BaseSectionPtr v) {
    return std::make_shared<ScaledSection>(std::move(f), std::move(v));
}

BaseSectionPtr pullback_bracket(const GeneralizedLieAlgebroid& A, BaseSectionPtr u,
                                BaseSectionPtr v) {
    return std::make_shared<BracketSection>(A, std::move(u), std::move(v));
}

SmoothMap structure_abelian(int m, int r) {
    return SmoothMap::zero(m, r * r * r);
}

SmoothMap structure_so3(int m) {
    const int r = 3;
    std::vector<double> table(static_cast<std::size_t>(r) * r * r, 0.0);
    auto eps = [](int a, int b, int c) {
        if (a == b || b == c || a == c) return 0.0;
        // parity of the permutation (a, b, c) of (0, 1, 2)
        return ((b - a + 3) % 3 == 1) ? 1.0 : -1.0;
    };
    for (int c = 0; c < r; ++c)
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) table[structure_index(c, a, b, r)] = eps(a, b, c);
    return SmoothMap::constant(table, m);
}

SmoothMap anchor_diagonal(int m, int r) {
    std::vector<double> table(static_cast<std::size_t>(m) * r, 0.0);
    for (int i = 0; i < std::min(m, r); ++i) table[anchor_index(i, i, r)] = 1.0;
    return SmoothMap::constant(table, m);
}

SmoothMap anchor_zero(int m, int r) {
    return SmoothMap::zero(m, m * r);
}

double check_antisymmetry(const GeneralizedLieAlgebroid& A, const SamplePlan& plan) {
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + A.m);
        const std::vector<double> L = A.structure.value(x);
        for (int c = 0; c < A.r; ++c)
            for (int a = 0; a < A.r; ++a)
                for (int b = 0; b < A.r; ++b)
                    worst = std::max(worst, std::fabs(L[structure_index(c, a, b, A.r)] +
                                                      L[structure_index(c, b, a, A.r)]));
    }
    return worst;
}

double check_jacobi(const GeneralizedLieAlgebroid& A, const SamplePlan& plan) {
    // Constant basis sections; iterated brackets still see x-dependence of
    // the structure functions through the anchor-derivative terms.  Repeated
    // indices are included deliberately: they are where one-sided corruption
    // of the structure table shows up.
    std::vector<BaseSectionPtr> basis;
    for (int a = 0; a < A.r; ++a) {
        std::vector<double> e(static_cast<std::size_t>(A.r), 0.0);
        e[static_cast<std::size_t>(a)] = 1.0;
        basis.push_back(base_section_constant(e, A.m));
    }
    const auto samples = plan.draw();
    double worst = 0.0;
    for (int a = 0; a < A.r; ++a)
        for (int b = 0; b < A.r; ++b)
            for (int c = 0; c < A.r; ++c) {
                const auto& ea = basis[static_cast<std::size_t>(a)];
                const auto& eb = basis[static_cast<std::size_t>(b)];
                const auto& ec = basis[static_cast<std::size_t>(c)];
                const BaseSectionPtr j1 = pullback_bracket(A, ea, pullback_bracket(A, eb, ec));
                const BaseSectionPtr j2 = pullback_bracket(A, eb, pullback_bracket(A, ec, ea));
                const BaseSectionPtr j3 = pullback_bracket(A, ec, pullback_bracket(A, ea, eb));
                for (const auto& s : samples) {
                    const std::vector<double> x(s.begin(), s.begin() + A.m);
                    const auto w1 = j1->eval(x, 0);
                    const auto w2 = j2->eval(x, 0);
                    const auto w3 = j3->eval(x, 0);
                    for (int e = 0; e < A.r; ++e)
                        worst = std::max(worst, std::fabs(w1[static_cast<std::size_t>(e)].v +
                                                          w2[static_cast<std::size_t>(e)].v +
                                                          w3[static_cast<std::size_t>(e)].v));
                }
            }
    return worst;
}

double check_anchor_compatibility(const GeneralizedLieAlgebroid& A, const SamplePlan& plan) {
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + A.m);
        const std::vector<Jet> rho = A.anchor_h.eval_point(x, 1);
        const std::vector<Jet> lst = A.structure_h.eval_point(x, 0);
        for (int k = 0; k < A.m; ++k)
            for (int a = 0; a < A.r; ++a)
                for (int b = 0; b < A.r; ++b) {
                    double lhs = 0.0;
                    for (int c = 0; c < A.r; ++c)
                        lhs += lst[structure_index(c, a, b, A.r)].v * rho[anchor_index(k, c, A.r)].v;
                    double drv = 0.0;
                    for (int i = 0; i < A.m; ++i)
                        drv += rho[anchor_index(i, a, A.r)].v *
                                   rho[anchor_index(k, b, A.r)].grad(i) -
                               rho[anchor_index(i, b, A.r)].v *
                                   rho[anchor_index(k, a, A.r)].grad(i);
                    worst = std::max(worst, std::fabs(lhs - drv));
                }
    }
    return worst;
}

double check_leibniz_pullback(const GeneralizedLieAlgebroid& A, const BaseSectionPtr& u,
                              const BaseSectionPtr& v, const SmoothMap& f, const SamplePlan& plan) {
    const BaseSectionPtr fv = base_section_scaled(f, v);
    const BaseSectionPtr lhs = pullback_bracket(A, u, fv);
    const BaseSectionPtr uv = pullback_bracket(A, u, v);
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + A.m);
        const auto l = lhs->eval(x, 0);
        const auto base = uv->eval(x, 0);
        const Jet fjet = f.eval_point(x, 1)[0];
        const auto uval = u->eval(x, 0);
        const auto vval = v->eval(x, 0);
        const auto rho = A.anchor_h.eval_point(x, 0);
        double uf = 0.0; // (rho o h) u applied to f
        for (int a = 0; a < A.r; ++a)
            for (int i = 0; i < A.m; ++i)
                uf += rho[anchor_index(i, a, A.r)].v * uval[static_cast<std::size_t>(a)].v *
                      fjet.grad(i);
        for (int c = 0; c < A.r; ++c) {
            const double want = fjet.v * base[static_cast<std::size_t>(c)].v +
                                uf * vval[static_cast<std::size_t>(c)].v;
            worst = std::max(worst, std::fabs(l[static_cast<std::size_t>(c)].v - want));
        }
    }
    return worst;
}

double check_bracket_antisymmetry(const GeneralizedLieAlgebroid& A, const BaseSectionPtr& u,
                                  const BaseSectionPtr& v, const SamplePlan& plan) {
    const BaseSectionPtr uv = pullback_bracket(A, u, v);
    const BaseSectionPtr vu = pullback_bracket(A, v, u);
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + A.m);
        const auto a = uv->eval(x, 0);
        const auto b = vu->eval(x, 0);
        for (int c = 0; c < A.r; ++c)
            worst = std::max(worst, std::fabs(a[static_cast<std::size_t>(c)].v +
                                              b[static_cast<std::size_t>(c)].v));
    }
    return worst;
}

double check_gh_inverse(const GHMorphism& gh, int r, const SamplePlan& plan) {
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + gh.g.nin());
        const std::vector<double> g = gh.g.value(x);
        const std::vector<double> gt = gh.gtilde.value(x);
        for (int b = 0; b < r; ++b)
            for (int a = 0; a < r; ++a) {
                double sum = 0.0;
                for (int al = 0; al < r; ++al)
                    sum += gt[static_cast<std::size_t>(b) * r + al] *
                           g[static_cast<std::size_t>(al) * r + a];
                worst = std::max(worst, std::fabs(sum - (a == b ? 1.0 : 0.0)));
            }
    }
    return worst;
}

double min_jacobian_det(const Diffeo& d, const SamplePlan& plan) {
    if (d.is_identity()) return 1.0;
    double least = std::numeric_limits<double>::infinity();
    for (const auto& s : plan.draw()) {
        const std::vector<double> x(s.begin(), s.begin() + d.dim());
        least = std::min(least, std::fabs(matrix_determinant(map_jacobian(d.forward, x))));
    }
    return least;
}

} // namespace algmech
