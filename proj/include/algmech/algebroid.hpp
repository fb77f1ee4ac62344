#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "algmech/smooth_map.hpp"

namespace algmech {

/// Invertible chart map on the base, recognised as identity when tagged so
/// that compositions with it become exact no-ops.
struct Diffeo {
    SmoothMap forward; // R^m -> R^m
    bool identity_tag = true;

    static Diffeo identity(int m);
    static Diffeo explicit_map(SmoothMap fwd);
    bool is_identity() const { return identity_tag; }
    int dim() const { return forward.nin(); }
};

/// Anchor + structure functions + the two base diffeomorphisms, all over a
/// single global chart R^m with fiber rank r.
///
/// Flattened layouts:
///   anchor:    index i*r + alpha           (i < m rows, alpha < r columns)
///   structure: index (c*r + a)*r + b       (upper index c, lower a, b)
struct GeneralizedLieAlgebroid {
    int m = 0;
    int r = 0;
    SmoothMap anchor;      // R^m -> R^{m*r}
    SmoothMap structure;   // R^m -> R^{r*r*r}
    Diffeo h;
    Diffeo eta;
    SmoothMap anchor_h;    // anchor composed with h (cached)
    SmoothMap structure_h; // structure composed with h (cached)

    static GeneralizedLieAlgebroid create(int m, int r, SmoothMap anchor, SmoothMap structure,
                                          Diffeo h, Diffeo eta);
};

inline std::size_t anchor_index(int i, int alpha, int r) {
    return static_cast<std::size_t>(i) * r + alpha;
}
inline std::size_t structure_index(int c, int a, int b, int r) {
    return (static_cast<std::size_t>(c) * r + a) * static_cast<std::size_t>(r) + b;
}

/// Fiber-metric-like morphism data: g^alpha_a and its inverse gtilde^a_alpha,
/// both over the base chart, flattened row-major (row, column):
///   g:      index alpha*r + a
///   gtilde: index a*r + alpha
struct GHMorphism {
    SmoothMap g;      // R^m -> R^{r*r}
    SmoothMap gtilde; // R^m -> R^{r*r}
    bool identity_tag = true;

    static GHMorphism identity(int m, int r);
    /// Derives the inverse factor by jet-valued elimination of g.
    static GHMorphism from_g(int r, SmoothMap g);
    bool is_identity() const { return identity_tag; }
};

/// Deterministic sampling recipe: `count` points in the per-coordinate box
/// (base coordinates first, then fiber).  With exclude_zero_fiber, samples
/// whose fiber sup-norm falls below 0.1 are redrawn.
struct SamplePlan {
    std::uint64_t seed = 2024;
    int count = 64;
    int base_dim = 0; // leading entries of each sample are base coordinates
    std::vector<std::pair<double, double>> box; // size m + r
    bool exclude_zero_fiber = false;

    static SamplePlan standard(int m, int r, std::uint64_t seed = 2024);
    std::vector<std::vector<double>> draw() const;
};

/// Section of the pulled-back bundle: x -> r coefficients, evaluable as jets
/// of a requested order at a point.  Brackets lower the usable order by one,
/// which is why sections expose (point, order) evaluation instead of a fixed
/// jet transform.
class BaseSection {
public:
    virtual ~BaseSection() = default;
    virtual std::vector<Jet> eval(const std::vector<double>& x, int order) const = 0;
    virtual int max_order() const = 0;
};
using BaseSectionPtr = std::shared_ptr<const BaseSection>;

BaseSectionPtr base_section_from_map(SmoothMap coef);
BaseSectionPtr base_section_constant(std::vector<double> coef, int m);
/// Pointwise scaling f(x) * v(x) of a section by a scalar map.
BaseSectionPtr base_section_scaled(SmoothMap f, BaseSectionPtr v);

/// Bracket of pulled-back sections:
///   [u,v]^c = (rho^i_a o h) u^a d_i v^c - (rho^i_b o h) v^b d_i u^c
///             + (L^c_{ab} o h) u^a v^b
/// Implemented bilinearly as written; antisymmetry is a consequence, not an
/// applied symmetrization (so defects in the inputs stay visible).
BaseSectionPtr pullback_bracket(const GeneralizedLieAlgebroid& A, BaseSectionPtr u,
                                BaseSectionPtr v);

// ---------------------------------------------------------------------------
// Ready-made coefficient tables.

/// All-zero structure functions (abelian bracket on constants).
SmoothMap structure_abelian(int m, int r);
/// so(3) structure constants: L^c_{ab} = Levi-Civita(a, b, c); r must be 3.
SmoothMap structure_so3(int m);
/// Anchor table with ones on the diagonal (delta_i^alpha), zeros elsewhere.
SmoothMap anchor_diagonal(int m, int r);
SmoothMap anchor_zero(int m, int r);

// ---------------------------------------------------------------------------
// Axiom checks (max residual over the plan's samples).

double check_antisymmetry(const GeneralizedLieAlgebroid& A, const SamplePlan& plan);
double check_jacobi(const GeneralizedLieAlgebroid& A, const SamplePlan& plan);
double check_anchor_compatibility(const GeneralizedLieAlgebroid& A, const SamplePlan& plan);
double check_leibniz_pullback(const GeneralizedLieAlgebroid& A, const BaseSectionPtr& u,
                              const BaseSectionPtr& v, const SmoothMap& f, const SamplePlan& plan);
double check_bracket_antisymmetry(const GeneralizedLieAlgebroid& A, const BaseSectionPtr& u,
                                  const BaseSectionPtr& v, const SamplePlan& plan);
/// Max |gtilde·g - I| entry at sampled base points.
double check_gh_inverse(const GHMorphism& gh, int r, const SamplePlan& plan);
/// Smallest |det Jacobian| of the diffeo over sampled base points.
double min_jacobian_det(const Diffeo& d, const SamplePlan& plan);

} // namespace algmech
