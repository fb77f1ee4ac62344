#pragma once

#include <optional>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/linalg.hpp"
#include "algmech/prolongation.hpp"

namespace algmech {

/// Componentwise partial derivative d(map)/d(input `var`) as a new map.
/// Expression-backed maps differentiate symbolically (keeping full jet
/// depth); identity maps become constant selector rows; closures fall back
/// to jet extraction one order below the operand's ceiling.
SmoothMap scalar_derivative(const SmoothMap& map, int var);

/// What drives the dynamics of a mechanical system.
enum class PayloadKind { Connection, Lagrange, Finsler };

/// A mechanical system over one chart: the algebroid data, the invertible
/// fiber morphism pair, an external force table F^a(x, y), and one payload.
/// For a Finsler payload, `lagrangian` stores the squared fundamental
/// function and `finsler` the fundamental function itself.
struct MechanicalSystem {
    GeneralizedLieAlgebroid algebroid;
    GHMorphism gh;
    SmoothMap external_force;   // R^{m+r} -> R^r
    PayloadKind payload = PayloadKind::Lagrange;
    SmoothMap lagrangian;       // scalar, Lagrange / Finsler payloads
    SmoothMap finsler;          // scalar, Finsler payload only
    RhoEtaConnection connection; // Connection payload only
};

/// Pointwise derivative tables of a scalar Lagrangian, split by slot:
/// value, base gradient L_i, fiber gradient L_a, mixed second derivatives
/// L_ib (flattened i*r + b) and the fiber Hessian L_ab (a*r + b).
struct LagrangianJets {
    double value = 0.0;
    std::vector<double> base;
    std::vector<double> fiber;
    std::vector<double> mixed;
    std::vector<double> vertical;
};

LagrangianJets lagrangian_jets(const SmoothMap& L, int m, int r, const std::vector<double>& xy);

/// Full-rank decision for the fiber Hessian by pivoted elimination with a
/// relative pivot threshold.
struct RegularityReport {
    bool regular = false;
    double abs_det = 0.0;
};

RegularityReport check_regularity(const SmoothMap& L, int m, int r, const std::vector<double>& xy,
                                  double tol = 1e-9);

/// Inverse fiber Hessian at a point.  Throws SingularHessian when
/// elimination collapses or the pivot-ratio condition estimate exceeds 1e12.
Matrix hessian_inverse(const SmoothMap& L, int m, int r, const std::vector<double>& xy);

/// Fiber-homogeneity and convexity diagnostics of a Finsler fundamental
/// function over a sample plan (the zero fiber is always excluded).
struct FinslerReport {
    double euler_residual = 0.0;      // max |y^a dF/dy^a - F|
    double scaling_residual = 0.0;    // max |F(x, s y) - s F(x, y)|, s in {1/2, 2}
    double min_quadratic_pivot = 0.0; // min unpivoted-elimination pivot of the F^2 fiber Hessian
    bool homogeneous = false;
    bool positive_definite = false;
    bool ok() const { return homogeneous && positive_definite; }
};

FinslerReport check_finsler_axioms(const SmoothMap& F, int m, int r, const SamplePlan& plan);

/// Energy of a regular Lagrangian: fiber-velocity pairing of the momenta
/// through the morphism factor, minus the Lagrangian itself.
double energy(const SmoothMap& L, const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
              const std::vector<double>& xy);

/// The energy as a jet-capable phase map (for directional derivatives).
SmoothMap energy_map(const SmoothMap& L, const GHMorphism& gh, const GeneralizedLieAlgebroid& A);

/// One-form of Poincare-Cartan type: pairs the morphism-weighted fiber
/// momenta with the algebroid part of a section (vertical sections give 0).
double poincare_cartan_theta(const SmoothMap& L, const GHMorphism& gh,
                             const GeneralizedLieAlgebroid& A, const ProlongSectionPtr& X,
                             const std::vector<double>& xy);

/// Two-form of Poincare-Cartan type, evaluated through the anchor and the
/// section bracket; antisymmetric by construction.
double poincare_cartan_omega(const SmoothMap& L, const GHMorphism& gh,
                             const GeneralizedLieAlgebroid& A, const ProlongSectionPtr& U,
                             const ProlongSectionPtr& V, const std::vector<double>& xy);

/// Euler-Lagrange covector E_b of the Lagrangian relative to the morphism
/// pair: the anchor-weighted base gradient, corrected by base transport of
/// the morphism-weighted momenta and a structure-function term.
std::vector<double> euler_lagrange_covector(const SmoothMap& L, const GHMorphism& gh,
                                            const GeneralizedLieAlgebroid& A,
                                            const std::vector<double>& xy);

/// Second-order field on the phase space: algebroid coefficients are the
/// morphism-transported fiber velocities, vertical coefficients come from
/// the stored table.
struct SemisprayField {
    int m = 0;
    int r = 0;
    SmoothMap horizontal; // R^{m+r} -> R^r, (g o h)(x) y
    SmoothMap avert;      // R^{m+r} -> R^r, vertical coefficients

    ProlongSectionPtr section() const { return prolong_section(horizontal, avert); }
};

/// Packages an externally supplied vertical coefficient table as a
/// semispray over the morphism-transported horizontal part.
SemisprayField semispray_from_avert(SmoothMap avert, const GHMorphism& gh,
                                    const GeneralizedLieAlgebroid& A);

/// The unique second-order solution of the Cartan equation for a regular
/// Lagrangian: vertical coefficients are the Euler-Lagrange covector raised
/// through the inverse fiber Hessian and the morphism factor.  Hessian
/// failures surface as SingularHessian at evaluation points.
SemisprayField canonical_semispray(const SmoothMap& L, const GHMorphism& gh,
                                   const GeneralizedLieAlgebroid& A);

/// Max residual of the Cartan equation over plan samples and the natural
/// frame fields X: |omega_L(S, X) + rho~(X)(E_L)|.
double verify_cartan_equation(const SemisprayField& S, const SmoothMap& L, const GHMorphism& gh,
                              const GeneralizedLieAlgebroid& A, const SamplePlan& plan);

/// Reconstructs the vertical coefficients at each sample from the Cartan
/// pairing alone (linear probes against the horizontal frame) and returns
/// the max difference from the stored coefficients.  A direct uniqueness
/// check on the regular set.
double check_semispray_uniqueness(const SemisprayField& S, const SmoothMap& L,
                                  const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
                                  const SamplePlan& plan);

/// Max |tangent-structure image of S minus the fiber-coordinate section|
/// over plan samples; zero is the defining second-order property.
double check_semispray_property(const SemisprayField& S, const GHMorphism& gh,
                                const GeneralizedLieAlgebroid& A, const SamplePlan& plan);

/// Connection induced by a semispray: half the vertical gradient of the
/// vertical coefficients pulled back through the morphism pair, with
/// structure-function and morphism-transport corrections.
RhoEtaConnection connection_from_semispray(const SemisprayField& S, const GHMorphism& gh,
                                           const GeneralizedLieAlgebroid& A);

/// Force-shifted connection: adds a quarter of the morphism-weighted
/// vertical gradient of the external force to the connection table.
RhoEtaConnection ring_connection(const RhoEtaConnection& conn, const SmoothMap& fe,
                                 const GHMorphism& gh, const GeneralizedLieAlgebroid& A);

/// Canonical spray of a connection: vertical coefficients are minus the
/// connection applied to the transported velocities, with structure and
/// morphism-transport corrections; its deviation vanishes iff the
/// coefficients are fiberwise 2-homogeneous.
SemisprayField canonical_spray(const RhoEtaConnection& conn, const GHMorphism& gh,
                               const GeneralizedLieAlgebroid& A);

/// Vertical coefficients of the commutator of the fiber-coordinate section
/// with S, minus S itself: y^f dAvert^a/dy^f - 2 Avert^a.
std::vector<double> spray_deviation(const SemisprayField& S, const GeneralizedLieAlgebroid& A,
                                    const std::vector<double>& xy);

/// Curvature of the force-shifted connection assembled from the base
/// connection's curvature plus force-gradient correction groups; agrees
/// with `curvature` of `ring_connection` directly.  Flattened like
/// `curvature`: (a*r + c)*r + d.
std::vector<double> ring_curvature(const RhoEtaConnection& conn, const SmoothMap& fe,
                                   const GHMorphism& gh, const GeneralizedLieAlgebroid& A,
                                   const std::vector<double>& xy);

/// Max relative 2-homogeneity defect of a vertical coefficient table:
/// |Avert(x, s y) - s^2 Avert(x, y)| / max(1, |s^2 Avert|), s = `scale`.
double check_avert_homogeneity(const SmoothMap& avert, int m, int r, const SamplePlan& plan,
                               double scale = 2.0);

} // namespace algmech
