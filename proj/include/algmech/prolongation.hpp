#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/rng.hpp"

namespace algmech {

/// Projection (x, y) -> x as a map R^{m+r} -> R^m (symbolic, so lifted
/// compositions stay expression-backed).
SmoothMap phase_projection(int m, int r);
/// Rewrites a base map f(x) as a phase-space map f(x, y) ignoring y.
SmoothMap lift_base_map(const SmoothMap& base, int m, int r);

/// Cached phase-space view of an algebroid: the anchor and structure tables
/// composed with h and lifted to (x, y) inputs.
struct Prolongation {
    int m = 0;
    int r = 0;
    SmoothMap rho_h;     // R^{m+r} -> R^{m*r}
    SmoothMap lstruct_h; // R^{m+r} -> R^{r*r*r}
    Diffeo h;            // kept for lifting morphism factors on demand

    static Prolongation over(const GeneralizedLieAlgebroid& A);
};

/// Connection coefficients Gamma^a_alpha(x, y), flattened a*r + alpha.
struct RhoEtaConnection {
    SmoothMap gamma; // R^{m+r} -> R^{r*r}

    static RhoEtaConnection zero(int m, int r);
};

inline std::size_t gamma_index(int a, int alpha, int r) {
    return static_cast<std::size_t>(a) * r + alpha;
}

/// Coefficients of a prolongation section at one point: the algebroid part z
/// (r entries) and the vertical part y (r entries), as jets over the m+r
/// phase coordinates.
struct SectionJets {
    std::vector<Jet> z;
    std::vector<Jet> y;
};

class ProlongSection {
public:
    virtual ~ProlongSection() = default;
    virtual SectionJets eval(const std::vector<double>& xy, int order) const = 0;
    virtual int max_order() const = 0;
};
using ProlongSectionPtr = std::shared_ptr<const ProlongSection>;

ProlongSectionPtr prolong_section(SmoothMap zcoef, SmoothMap ycoef);
ProlongSectionPtr prolong_constant(std::vector<double> z, std::vector<double> y, int m, int r);
/// Natural frame fields: horizontal-slot basis (z = e_alpha, y = 0) and
/// vertical basis (z = 0, y = e_a).
ProlongSectionPtr natural_base_h(int alpha, int m, int r);
ProlongSectionPtr natural_base_v(int a, int m, int r);
/// Connection-corrected horizontal frame: z = e_alpha, y = -Gamma^._alpha.
ProlongSectionPtr adapted_base_h(int alpha, const Prolongation& P, const RhoEtaConnection& conn);
/// Canonical vertical section y^a over the fiber coordinates.
ProlongSectionPtr liouville_section(int m, int r);
/// Random section with polynomial coefficients of degree <= 2 in (x, y).
ProlongSectionPtr poly_test_section(int m, int r, SplitMix64& rng);

/// Anchor of the prolongation applied to a scalar phase function:
///   rho~(X)(f) = Z^alpha (rho^i_alpha o h o pi) d_i f + Y^a df/dy^a.
/// Returned at the requested order (operands are evaluated one order higher
/// internally).
Jet prolong_anchor_apply(const Prolongation& P, const ProlongSectionPtr& X, const SmoothMap& f,
                         const std::vector<double>& xy, int order = 0);

/// Bracket of prolongation sections (bilinear form, not symmetrized):
///   z-part:  rho~(X)(Wz) - rho~(W)(Xz) + Xz^a Wz^b (L^c_{ab} o h o pi)
///   y-part:  rho~(X)(Wy) - rho~(W)(Xy)
ProlongSectionPtr prolong_bracket(const Prolongation& P, ProlongSectionPtr X, ProlongSectionPtr W);

/// Natural <-> adapted coefficient conversion at a point; `gamma` is the
/// connection table evaluated at the same point and order.
SectionJets to_adapted(const SectionJets& natural, const std::vector<Jet>& gamma, int r);
SectionJets from_adapted(const SectionJets& adapted, const std::vector<Jet>& gamma, int r);

/// Value of the adapted dual covector (index a) on X at a point:
/// Gamma^a_alpha Z^alpha + Y^a.
double adapted_dual_pairing(const RhoEtaConnection& conn, int a, const ProlongSectionPtr& X,
                            const std::vector<double>& xy);

/// Curvature table R^a_{alpha beta} at a point, flattened (a*r+alpha)*r+beta:
///   R^a_{ab} = rho~(adapted_b)(Gamma^a_a) - rho~(adapted_a)(Gamma^a_b)
///              + (L^c_{ab} o h o pi) Gamma^a_c.
std::vector<double> curvature(const Prolongation& P, const RhoEtaConnection& conn,
                              const std::vector<double>& xy);

// ---------------------------------------------------------------------------
// Endomorphisms of the section module.

enum class StructureKind { VerticalProjector, HorizontalProjector, AlmostProduct, AlmostTangent };

/// Pointwise rewrite of adapted coefficients; `xy`/`order` give the
/// evaluation context for coefficient-dependent blocks.
using AdaptedBlockMap =
    std::function<SectionJets(const SectionJets& adapted, const std::vector<double>& xy, int order)>;

ProlongSectionPtr apply_adapted_block(const Prolongation& P, const RhoEtaConnection& conn,
                                      AdaptedBlockMap block, int block_max_order,
                                      ProlongSectionPtr X);

using SectionEndo = std::function<ProlongSectionPtr(const ProlongSectionPtr&)>;

/// The four canonical structures as section endomorphisms.  AlmostTangent
/// requires the morphism pair and throws MissingMorphism without it.
SectionEndo structure_endo(StructureKind kind, const Prolongation& P,
                           const RhoEtaConnection& conn, const GHMorphism* gh);

ProlongSectionPtr apply_structure(StructureKind kind, const Prolongation& P,
                                  const RhoEtaConnection& conn, const GHMorphism* gh,
                                  const ProlongSectionPtr& X);

/// Nijenhuis torsion of an endomorphism:
///   N_e(X, W) = [eX, eW] + e(e([X, W])) - e([eX, W]) - e([X, eW]).
ProlongSectionPtr nijenhuis(const Prolongation& P, const SectionEndo& e, ProlongSectionPtr X,
                            ProlongSectionPtr W);

/// Pointwise linear combination of sections (at least one term).
ProlongSectionPtr section_combo(std::vector<std::pair<double, ProlongSectionPtr>> terms);

/// Max |difference| of natural coefficients of two sections over samples.
double max_section_difference(const ProlongSectionPtr& X, const ProlongSectionPtr& W,
                              const std::vector<std::vector<double>>& samples);

/// Named residuals of the projector / product / tangent structure identity
/// family, evaluated on deterministic polynomial test sections.
std::vector<std::pair<std::string, double>>
structure_identity_suite(const Prolongation& P, const RhoEtaConnection& conn, const GHMorphism& gh,
                         const SamplePlan& plan);

// ---------------------------------------------------------------------------
// Transformation laws.

/// Transition between charts: x' = phi(x), y' = M(x) y, z' = Lam(x) z.
/// M and Lam are r x r tables flattened row-major (primed row, unprimed col).
struct TransitionData {
    Diffeo phi;
    SmoothMap Mmat;
    SmoothMap Lam;
};

struct TransformationReport {
    // Anchor law: the fiber factor may enter through Lam or (on E = F)
    // through M; both routes must give the same primed anchor.
    double anchor_consistency = 0.0;
    // Connection law: primed adapted dual (from the law's right-hand side)
    // must annihilate the pushforward of the unprimed horizontal frame.
    std::optional<double> connection_law;
    // Semispray law: the vertical coefficient transported by the section
    // pushforward must match the law's right-hand side.
    std::optional<double> semispray_law;
};

TransformationReport verify_transformation_laws(const GeneralizedLieAlgebroid& A,
                                                const RhoEtaConnection* conn,
                                                const SmoothMap* avert, const GHMorphism* gh,
                                                const TransitionData& trans,
                                                const SamplePlan& plan);

} // namespace algmech
