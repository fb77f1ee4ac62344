#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/errors.hpp"
#include "algmech/linalg.hpp"
#include "algmech/mechanics.hpp"
#include "algmech/prolongation.hpp"
#include "testutil.hpp"

using namespace algmech;

namespace {

GeneralizedLieAlgebroid tangent_like(int m) {
    return GeneralizedLieAlgebroid::create(m, m, anchor_diagonal(m, m), structure_abelian(m, m),
                                           Diffeo::identity(m), Diffeo::identity(m));
}

GeneralizedLieAlgebroid so3_body() {
    return GeneralizedLieAlgebroid::create(3, 3, anchor_zero(3, 3), structure_so3(3),
                                           Diffeo::identity(3), Diffeo::identity(3));
}

SmoothMap phase_exprs(int m, int r, const std::vector<std::string>& texts) {
    std::vector<ExprAst> comps;
    for (const auto& t : texts) comps.push_back(parse_expression(t, m, r));
    return SmoothMap::from_expressions(m + r, std::move(comps));
}

SmoothMap base_exprs(int m, const std::vector<std::string>& texts) {
    std::vector<ExprAst> comps;
    for (const auto& t : texts) comps.push_back(parse_expression(t, m, 0));
    return SmoothMap::from_expressions(m, std::move(comps));
}

SmoothMap oscillator_lagrangian() { return phase_exprs(1, 1, {"y1^2/2 - x1^2/2"}); }

SmoothMap rigid_body_lagrangian() { return phase_exprs(3, 3, {"(y1^2 + 2*y2^2 + 3*y3^2)/2"}); }

SmoothMap half_plane_lagrangian() { return phase_exprs(2, 2, {"(y1^2 + y2^2)/(2*x2^2)"}); }

SamplePlan upper_half_plan(std::uint64_t seed = 2024, int count = 24) {
    SamplePlan plan = SamplePlan::standard(2, 2, seed);
    plan.count = count;
    plan.box[1] = {0.5, 2.0}; // keep the singular base locus x2 <= 0 out of reach
    return plan;
}

/// Two-fiber system over a one-dimensional base whose transport factor g(x)
/// is unipotent with an off-diagonal entry k*x.  Exercises every g-dependent
/// term of the force-equation assembly with hand-computable values.
struct ShearedSystem {
    double k = 0.3;
    GeneralizedLieAlgebroid A = GeneralizedLieAlgebroid::create(
        1, 2, base_exprs(1, {"1", "0"}), structure_abelian(1, 2), Diffeo::identity(1),
        Diffeo::identity(1));
    GHMorphism gh =
        GHMorphism::from_g(2, base_exprs(1, {"1", "0.3*x1", "0", "1"}));
    SmoothMap L = phase_exprs(1, 2, {"(y1^2 + y2^2)/2"});
};

} // namespace

// ---------------------------------------------------------------------------
// Derivative and jet extraction helpers.

TEST_CASE("scalar derivative matches symbolic and closure paths") {
    const SmoothMap f = phase_exprs(1, 1, {"x1^2*y1"});
    const SmoothMap dfx = scalar_derivative(f, 0);
    const SmoothMap dfy = scalar_derivative(f, 1);
    CHECK(dfx.value({1.5, 0.7})[0] == doctest::Approx(2.1).epsilon(1e-14));
    CHECK(dfy.value({1.5, 0.7})[0] == doctest::Approx(2.25).epsilon(1e-14));

    // Same map expressed as an opaque callable: derivatives must agree.
    auto fn = [](const std::vector<Jet>& in) {
        return std::vector<Jet>{in[0] * in[0] * in[1]};
    };
    const SmoothMap g = SmoothMap::from_function(2, 1, fn, 3);
    const SmoothMap dgx = scalar_derivative(g, 0);
    CHECK(dgx.value({1.5, 0.7})[0] == doctest::Approx(2.1).epsilon(1e-12));
}

TEST_CASE("lagrangian jets expose value, gradients, and second derivatives") {
    const auto J = lagrangian_jets(oscillator_lagrangian(), 1, 1, {1.0, 2.0});
    CHECK(J.value == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(J.base[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(J.fiber[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(J.vertical[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::fabs(J.mixed[0]) <= 1e-14);
}

TEST_CASE("lagrangian jets on a base-dependent metric") {
    // L = (y1^2 + y2^2) / (2 x2^2) at x2 = 1: unit vertical Hessian, mixed
    // derivatives -2 y_b / x2^3 in the x2 row.
    const auto J = lagrangian_jets(half_plane_lagrangian(), 2, 2, {0.3, 1.0, 0.6, -0.2});
    CHECK(J.value == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(std::fabs(J.base[0]) <= 1e-14);
    CHECK(J.base[1] == doctest::Approx(-0.4).epsilon(1e-13));
    CHECK(J.vertical[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(J.vertical[3] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::fabs(J.vertical[1]) <= 1e-14);
    CHECK(std::fabs(J.mixed[0]) <= 1e-14);
    CHECK(std::fabs(J.mixed[1]) <= 1e-14);
    CHECK(J.mixed[2] == doctest::Approx(-1.2).epsilon(1e-13));
    CHECK(J.mixed[3] == doctest::Approx(0.4).epsilon(1e-13));
}

TEST_CASE("lagrangian jets of a constant are zero beyond the value") {
    const auto J = lagrangian_jets(SmoothMap::constant({3.0}, 2), 1, 1, {0.4, -1.1});
    CHECK(J.value == doctest::Approx(3.0));
    CHECK(std::fabs(J.base[0]) <= 1e-15);
    CHECK(std::fabs(J.fiber[0]) <= 1e-15);
    CHECK(std::fabs(J.vertical[0]) <= 1e-15);
}

TEST_CASE("lagrangian jets validate the input arity") {
    CHECK_THROWS_AS(lagrangian_jets(oscillator_lagrangian(), 2, 2, {0.0, 0.0, 0.0, 0.0}),
                    DimensionError);
}

// ---------------------------------------------------------------------------
// Regularity and the vertical Hessian.

TEST_CASE("regularity reports the vertical Hessian determinant") {
    const auto ok = check_regularity(oscillator_lagrangian(), 1, 1, {1.0, 2.0});
    CHECK(ok.regular);
    CHECK(ok.abs_det == doctest::Approx(1.0).epsilon(1e-14));

    const auto skew = check_regularity(phase_exprs(1, 2, {"y1*y2"}), 1, 2, {0.0, 0.5, 0.5});
    CHECK(skew.regular);
    CHECK(skew.abs_det == doctest::Approx(1.0).epsilon(1e-14));

    const auto flat = check_regularity(phase_exprs(1, 1, {"y1"}), 1, 1, {0.0, 1.0});
    CHECK_FALSE(flat.regular);
    CHECK(flat.abs_det == doctest::Approx(0.0));

    const auto body = check_regularity(rigid_body_lagrangian(), 3, 3, {0, 0, 0, 1, 1, 1});
    CHECK(body.regular);
    CHECK(body.abs_det == doctest::Approx(6.0).epsilon(1e-13));
}

TEST_CASE("vertical Hessian inverse on a diagonal kinetic energy") {
    const Matrix inv = hessian_inverse(rigid_body_lagrangian(), 3, 3, {0, 0, 0, 1, 1, 1});
    CHECK(inv[0][0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(inv[1][1] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(inv[2][2] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::fabs(inv[i][j]) <= 1e-14);
}

TEST_CASE("vertical Hessian inverse multiplies back to the identity") {
    const SmoothMap L = phase_exprs(1, 2, {"(x1^2 + 2)*y1^2/2 + y1*y2 + y2^2"});
    const std::vector<double> xy{0.8, 0.4, -0.9};
    const Matrix inv = hessian_inverse(L, 1, 2, xy);
    const auto J = lagrangian_jets(L, 1, 2, xy);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int k = 0; k < 2; ++k) s += J.vertical[i * 2 + k] * inv[k][j];
            CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("degenerate vertical Hessians are rejected") {
    CHECK_THROWS_AS(hessian_inverse(phase_exprs(1, 1, {"y1"}), 1, 1, {0.0, 1.0}),
                    SingularHessian);
}

TEST_CASE("ill-conditioned vertical Hessians abort with the condition estimate") {
    const SmoothMap L = phase_exprs(1, 2, {"y1^2/2 + 5000000000000*y2^2"});
    try {
        hessian_inverse(L, 1, 2, {0.0, 1.0, 1.0});
        FAIL("expected SingularHessian");
    } catch (const SingularHessian& e) {
        CHECK(e.condition >= 1e12);
    }
}

// ---------------------------------------------------------------------------
// Metric-style axiom checks for square-root Lagrangians.

TEST_CASE("finsler axioms accept a Euclidean norm") {
    const SmoothMap F = phase_exprs(1, 2, {"sqrt(y1^2 + y2^2)"});
    const auto rep = check_finsler_axioms(F, 1, 2, SamplePlan::standard(1, 2));
    CHECK(rep.homogeneous);
    CHECK(rep.positive_definite);
    CHECK(rep.euler_residual <= 1e-10);
    CHECK(rep.scaling_residual <= 1e-10);
    CHECK(rep.min_quadratic_pivot > 0.0);
    CHECK(rep.ok());
}

TEST_CASE("finsler axioms reject a quadratic (wrong homogeneity)") {
    const SmoothMap F = phase_exprs(1, 1, {"y1^2"});
    const auto rep = check_finsler_axioms(F, 1, 1, SamplePlan::standard(1, 1));
    CHECK_FALSE(rep.homogeneous);
    CHECK_FALSE(rep.ok());
}

TEST_CASE("finsler axioms reject a degenerate linear form") {
    // F = y1 + 0.5 y2 is 1-homogeneous but F^2 has a rank-one Hessian.
    const SmoothMap F = phase_exprs(1, 2, {"y1 + y2/2"});
    const auto rep = check_finsler_axioms(F, 1, 2, SamplePlan::standard(1, 2));
    CHECK(rep.homogeneous);
    CHECK_FALSE(rep.positive_definite);
    CHECK_FALSE(rep.ok());
}

// ---------------------------------------------------------------------------
// Energy.

TEST_CASE("energy of the oscillator state") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    CHECK(energy(oscillator_lagrangian(), gh, A, {1.0, 2.0}) ==
          doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("energy equals the lagrangian for quadratic kinetic terms") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const SmoothMap L = rigid_body_lagrangian();
    SamplePlan plan = SamplePlan::standard(3, 3, 11);
    plan.count = 16;
    for (const auto& xy : plan.draw()) {
        CHECK(testutil::rel_err(energy(L, gh, A, xy), L.value(xy)[0]) <= 1e-12);
    }
}

TEST_CASE("energy of a constant lagrangian is its negative") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    CHECK(energy(SmoothMap::constant({3.0}, 2), gh, A, {0.7, -0.4}) ==
          doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("energy map agrees with pointwise energy") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const SmoothMap L = half_plane_lagrangian();
    const SmoothMap E = energy_map(L, gh, A);
    for (const auto& xy : upper_half_plan(5, 8).draw()) {
        CHECK(E.value(xy)[0] == doctest::Approx(energy(L, gh, A, xy)).epsilon(1e-13));
    }
}

// ---------------------------------------------------------------------------
// Canonical one-form and its exterior pairing.

TEST_CASE("canonical one-form annihilates vertical test sections") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const SmoothMap L = rigid_body_lagrangian();
    const std::vector<double> xy{0.2, -1.0, 0.5, 1.0, 1.0, 1.0};
    for (int a = 0; a < 3; ++a) {
        CHECK(std::fabs(poincare_cartan_theta(L, gh, A, natural_base_v(a, 3, 3), xy)) <= 1e-14);
    }
}

TEST_CASE("canonical one-form returns fiber momenta on horizontal sections") {
    const auto A1 = tangent_like(1);
    const auto gh1 = GHMorphism::identity(1, 1);
    CHECK(poincare_cartan_theta(oscillator_lagrangian(), gh1, A1, natural_base_h(0, 1, 1),
                                {1.0, 2.0}) == doctest::Approx(2.0).epsilon(1e-14));

    const auto A3 = so3_body();
    const auto gh3 = GHMorphism::identity(3, 3);
    const std::vector<double> xy{0, 0, 0, 1, 1, 1};
    CHECK(poincare_cartan_theta(rigid_body_lagrangian(), gh3, A3, natural_base_h(0, 3, 3), xy) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(poincare_cartan_theta(rigid_body_lagrangian(), gh3, A3, natural_base_h(1, 3, 3), xy) ==
          doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("symplectic pairing of the natural frames") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const SmoothMap L = phase_exprs(1, 1, {"y1^2/2"});
    const auto H = natural_base_h(0, 1, 1);
    const auto V = natural_base_v(0, 1, 1);
    CHECK(poincare_cartan_omega(L, gh, A, H, V, {0.3, 0.8}) ==
          doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(poincare_cartan_omega(L, gh, A, V, H, {0.3, 0.8}) ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("symplectic pairing vanishes on vertical pairs and equal arguments") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const SmoothMap L = half_plane_lagrangian();
    const std::vector<double> xy{0.4, 1.25, 0.6, -0.2};
    CHECK(std::fabs(poincare_cartan_omega(L, gh, A, natural_base_v(0, 2, 2),
                                          natural_base_v(1, 2, 2), xy)) <= 1e-13);

    const auto U = prolong_section(phase_exprs(2, 2, {"x1 + y2", "x2*y1"}),
                                   phase_exprs(2, 2, {"y1^2", "x1 - y2"}));
    CHECK(std::fabs(poincare_cartan_omega(L, gh, A, U, U, xy)) <= 1e-12);
}

TEST_CASE("symplectic pairing is antisymmetric on polynomial sections") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const SmoothMap L = rigid_body_lagrangian();
    const auto U = prolong_section(phase_exprs(3, 3, {"x1", "y2", "1"}),
                                   phase_exprs(3, 3, {"y1", "x3*y3", "x2"}));
    const auto V = prolong_section(phase_exprs(3, 3, {"y3", "x2", "x1*y1"}),
                                   phase_exprs(3, 3, {"1", "y2^2", "x3"}));
    SamplePlan plan = SamplePlan::standard(3, 3, 77);
    plan.count = 8;
    for (const auto& xy : plan.draw()) {
        const double uv = poincare_cartan_omega(L, gh, A, U, V, xy);
        const double vu = poincare_cartan_omega(L, gh, A, V, U, xy);
        CHECK(std::fabs(uv + vu) <= 1e-9 * std::max(1.0, std::fabs(uv)));
    }
}

// ---------------------------------------------------------------------------
// Force equations.

TEST_CASE("force covector of the oscillator is the spring force") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto E1 = euler_lagrange_covector(oscillator_lagrangian(), gh, A, {1.0, 0.0});
    CHECK(E1[0] == doctest::Approx(-1.0).epsilon(1e-14));
    const auto E2 = euler_lagrange_covector(oscillator_lagrangian(), gh, A, {0.4, 7.0});
    CHECK(E2[0] == doctest::Approx(-0.4).epsilon(1e-14));
}

TEST_CASE("force covector of a free particle vanishes") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const SmoothMap L = phase_exprs(2, 2, {"(y1^2 + y2^2)/2"});
    const auto E = euler_lagrange_covector(L, gh, A, {0.3, -0.8, 1.2, 0.5});
    CHECK(std::fabs(E[0]) <= 1e-14);
    CHECK(std::fabs(E[1]) <= 1e-14);
}

TEST_CASE("force covector of the rigid body carries the gyroscopic terms") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const auto E =
        euler_lagrange_covector(rigid_body_lagrangian(), gh, A, {0.2, -1.0, 0.5, 1, 1, 1});
    CHECK(E[0] == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(E[1] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(E[2] == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("base reparametrization composes through the anchor") {
    // rho(x) = x with h(x) = x + 2: the composed coefficient is x + 2, so the
    // force covector of L = y^2/2 - x^2/2 is -(x + 2) x, independent of y.
    auto A = GeneralizedLieAlgebroid::create(1, 1, base_exprs(1, {"x1"}), structure_abelian(1, 1),
                                             Diffeo::explicit_map(base_exprs(1, {"x1 + 2"})),
                                             Diffeo::identity(1));
    const auto gh = GHMorphism::identity(1, 1);
    const auto E = euler_lagrange_covector(oscillator_lagrangian(), gh, A, {1.5, 0.8});
    CHECK(E[0] == doctest::Approx(-5.25).epsilon(1e-13));
    // The energy does not see h when the transport factor is the identity.
    CHECK(energy(oscillator_lagrangian(), gh, A, {1.5, 0.8}) ==
          doctest::Approx(1.445).epsilon(1e-13));
}

TEST_CASE("sheared transport factor: hand-computed forces and vertical field") {
    const ShearedSystem S;
    const std::vector<double> xy{0.7, 1.2, -0.5};
    const auto E = euler_lagrange_covector(S.L, S.gh, S.A, xy);
    CHECK(E[0] == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(E[1] == doctest::Approx(0.3942).epsilon(1e-12));

    const auto field = canonical_semispray(S.L, S.gh, S.A);
    const auto av = field.avert.value(xy);
    CHECK(av[0] == doctest::Approx(0.442782).epsilon(1e-12));
    CHECK(av[1] == doctest::Approx(0.3942).epsilon(1e-12));
}

TEST_CASE("sheared transport factor: horizontal pairing residuals are as derived") {
    // With a non-symmetric product gtilde^T * Hessian the printed vertical
    // coefficients no longer null the horizontal pairing exactly; the exact
    // defect is Avert^a (gtilde^a_b - gtilde^b_a) for a unit Hessian.
    const ShearedSystem S;
    const std::vector<double> xy{0.7, 1.2, -0.5};
    const auto field = canonical_semispray(S.L, S.gh, S.A);
    const auto P = Prolongation::over(S.A);
    const SmoothMap E = energy_map(S.L, S.gh, S.A);
    const auto Xs = field.section();
    std::vector<double> resid(2);
    for (int b = 0; b < 2; ++b) {
        const auto Xb = natural_base_h(b, 1, 2);
        resid[b] = poincare_cartan_omega(S.L, S.gh, S.A, Xs, Xb, xy) +
                   prolong_anchor_apply(P, Xb, E, xy).v;
    }
    CHECK(resid[0] == doctest::Approx(0.0827820).epsilon(1e-9));
    CHECK(resid[1] == doctest::Approx(-0.09298422).epsilon(1e-9));
}

TEST_CASE("identity-tagged and explicit identity transport factors agree") {
    const auto A = so3_body();
    const auto gh_tag = GHMorphism::identity(3, 3);
    const auto gh_gen = GHMorphism::from_g(
        3, SmoothMap::constant({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3));
    REQUIRE_FALSE(gh_gen.is_identity());
    const SmoothMap L = rigid_body_lagrangian();
    const auto f_tag = canonical_semispray(L, gh_tag, A);
    const auto f_gen = canonical_semispray(L, gh_gen, A);
    SamplePlan plan = SamplePlan::standard(3, 3, 42);
    plan.count = 12;
    for (const auto& xy : plan.draw()) {
        const auto e_tag = euler_lagrange_covector(L, gh_tag, A, xy);
        const auto e_gen = euler_lagrange_covector(L, gh_gen, A, xy);
        const auto a_tag = f_tag.avert.value(xy);
        const auto a_gen = f_gen.avert.value(xy);
        for (int b = 0; b < 3; ++b) {
            CHECK(testutil::rel_err(e_gen[b], e_tag[b]) <= 1e-11);
            CHECK(testutil::rel_err(a_gen[b], a_tag[b]) <= 1e-11);
        }
        CHECK(testutil::rel_err(energy(L, gh_gen, A, xy), energy(L, gh_tag, A, xy)) <= 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Canonical second-order field and the Cartan equation.

TEST_CASE("canonical field of the oscillator is the spring acceleration") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto S = canonical_semispray(oscillator_lagrangian(), gh, A);
    CHECK(S.avert.value({1.0, 0.0})[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(S.avert.value({0.3, 1.7})[0] == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(S.horizontal.value({0.3, 1.7})[0] == doctest::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("canonical field of the rigid body gives the gyroscopic accelerations") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const auto S = canonical_semispray(rigid_body_lagrangian(), gh, A);
    const auto av = S.avert.value({0.2, -1.0, 0.5, 1.0, 1.0, 1.0});
    CHECK(av[0] == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(av[1] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(av[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("canonical field on the half-plane matches the geodesic equations") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto av = S.avert.value({0.4, 1.25, 0.6, -0.2});
    CHECK(av[0] == doctest::Approx(-0.192).epsilon(1e-13));
    CHECK(av[1] == doctest::Approx(-0.256).epsilon(1e-13));
}

TEST_CASE("canonical field satisfies the Cartan equation on all natural frames") {
    const auto A1 = tangent_like(1);
    const auto gh1 = GHMorphism::identity(1, 1);
    const auto S1 = canonical_semispray(oscillator_lagrangian(), gh1, A1);
    CHECK(verify_cartan_equation(S1, oscillator_lagrangian(), gh1, A1,
                                 SamplePlan::standard(1, 1)) <= 1e-7);

    const auto A3 = so3_body();
    const auto gh3 = GHMorphism::identity(3, 3);
    const auto S3 = canonical_semispray(rigid_body_lagrangian(), gh3, A3);
    SamplePlan plan3 = SamplePlan::standard(3, 3);
    plan3.count = 32;
    CHECK(verify_cartan_equation(S3, rigid_body_lagrangian(), gh3, A3, plan3) <= 1e-7);

    const auto A2 = tangent_like(2);
    const auto gh2 = GHMorphism::identity(2, 2);
    const auto S2 = canonical_semispray(half_plane_lagrangian(), gh2, A2);
    CHECK(verify_cartan_equation(S2, half_plane_lagrangian(), gh2, A2, upper_half_plan()) <= 1e-7);
}

TEST_CASE("a perturbed vertical field breaks the Cartan equation detectably") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto S = semispray_from_avert(phase_exprs(1, 1, {"0.1 - x1"}), gh, A);
    CHECK(verify_cartan_equation(S, oscillator_lagrangian(), gh, A, SamplePlan::standard(1, 1)) >=
          0.09);
}

TEST_CASE("vertical endomorphism sends the canonical field to the dilation field") {
    const auto A1 = tangent_like(1);
    const auto gh1 = GHMorphism::identity(1, 1);
    const auto S1 = canonical_semispray(oscillator_lagrangian(), gh1, A1);
    CHECK(check_semispray_property(S1, gh1, A1, SamplePlan::standard(1, 1)) == 0.0);

    const auto A3 = so3_body();
    const auto gh3 = GHMorphism::identity(3, 3);
    const auto S3 = canonical_semispray(rigid_body_lagrangian(), gh3, A3);
    CHECK(check_semispray_property(S3, gh3, A3, SamplePlan::standard(3, 3)) == 0.0);

    const ShearedSystem Sys;
    const auto Sg = canonical_semispray(Sys.L, Sys.gh, Sys.A);
    CHECK(check_semispray_property(Sg, Sys.gh, Sys.A, SamplePlan::standard(1, 2)) <= 1e-12);
}

TEST_CASE("horizontal pairing determines the vertical coefficients uniquely") {
    const auto A1 = tangent_like(1);
    const auto gh1 = GHMorphism::identity(1, 1);
    const auto S1 = canonical_semispray(oscillator_lagrangian(), gh1, A1);
    CHECK(check_semispray_uniqueness(S1, oscillator_lagrangian(), gh1, A1,
                                     SamplePlan::standard(1, 1)) <= 1e-8);

    const auto A3 = so3_body();
    const auto gh3 = GHMorphism::identity(3, 3);
    const auto S3 = canonical_semispray(rigid_body_lagrangian(), gh3, A3);
    SamplePlan plan3 = SamplePlan::standard(3, 3);
    plan3.count = 24;
    CHECK(check_semispray_uniqueness(S3, rigid_body_lagrangian(), gh3, A3, plan3) <= 1e-8);

    const auto A2 = tangent_like(2);
    const auto gh2 = GHMorphism::identity(2, 2);
    const auto S2 = canonical_semispray(half_plane_lagrangian(), gh2, A2);
    CHECK(check_semispray_uniqueness(S2, half_plane_lagrangian(), gh2, A2, upper_half_plan()) <=
          1e-8);
}

// ---------------------------------------------------------------------------
// Connections extracted from second-order fields.

TEST_CASE("oscillator connection coefficients vanish") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto S = canonical_semispray(oscillator_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    SamplePlan plan = SamplePlan::standard(1, 1, 3);
    plan.count = 8;
    for (const auto& xy : plan.draw()) {
        CHECK(std::fabs(conn.gamma.value(xy)[0]) <= 1e-12);
    }
}

TEST_CASE("quadratic vertical field yields the symmetric coefficient table") {
    // Avert^a = -gamma^a_{bc} y^b y^c with symmetric gamma gives
    // Gamma^a_c = gamma^a_{cb} y^b.
    const auto A = GeneralizedLieAlgebroid::create(1, 2, anchor_diagonal(1, 2),
                                                   structure_abelian(1, 2), Diffeo::identity(1),
                                                   Diffeo::identity(1));
    const auto gh = GHMorphism::identity(1, 2);
    const SmoothMap avert =
        phase_exprs(1, 2, {"-(y1^2 + y1*y2 + 2*y2^2)", "-(2*y1*y2 - y2^2)"});
    const auto S = semispray_from_avert(avert, gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const auto g = conn.gamma.value({0.1, 0.3, -0.7});
    CHECK(g[0] == doctest::Approx(-0.05).epsilon(1e-13));  // Gamma^1_1
    CHECK(g[1] == doctest::Approx(-1.25).epsilon(1e-13));  // Gamma^1_2
    CHECK(g[2] == doctest::Approx(-0.7).epsilon(1e-13));   // Gamma^2_1
    CHECK(g[3] == doctest::Approx(1.0).epsilon(1e-13));    // Gamma^2_2
}

TEST_CASE("half-plane connection reproduces the hyperbolic coefficients") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const auto g = conn.gamma.value({0.4, 1.25, 0.6, -0.2});
    CHECK(g[0] == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-0.48).epsilon(1e-12));
    CHECK(g[2] == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(g[3] == doctest::Approx(0.16).epsilon(1e-12));
}

TEST_CASE("connection coefficients match an independent finite-difference path") {
    // Second route: Gamma^a_c = -1/2 d(Avert^a)/dy^c - 1/2 y^d L^a_{dc},
    // evaluated with central differences on the vertical field plus a direct
    // structure-table contraction.
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const auto S = canonical_semispray(rigid_body_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    SamplePlan plan = SamplePlan::standard(3, 3, 19);
    plan.count = 16;
    for (const auto& xy : plan.draw()) {
        const auto got = conn.gamma.value(xy);
        const auto lst = A.structure.value(std::vector<double>(xy.begin(), xy.begin() + 3));
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) {
                auto slice = [&](const std::vector<double>& yv) {
                    std::vector<double> p(xy);
                    for (int b = 0; b < 3; ++b) p[3 + b] = yv[b];
                    return S.avert.value(p)[a];
                };
                const auto grad =
                    testutil::fd_gradient(slice, std::vector<double>(xy.begin() + 3, xy.end()));
                double want = -0.5 * grad[c];
                for (int d = 0; d < 3; ++d)
                    want -= 0.5 * xy[3 + d] * lst[structure_index(a, d, c, 3)];
                CHECK(std::fabs(got[a * 3 + c] - want) <=
                      1e-9 * std::max(1.0, std::fabs(want)));
            }
        }
    }
}

TEST_CASE("force-shifted connection reduces to the base connection without force") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);

    const auto ring0 = ring_connection(conn, SmoothMap::zero(4, 2), gh, A);
    const auto ringc = ring_connection(conn, SmoothMap::constant({0.7, -0.2}, 4), gh, A);
    for (const auto& xy : upper_half_plan(9, 8).draw()) {
        const auto base = conn.gamma.value(xy);
        const auto r0 = ring0.gamma.value(xy);
        const auto rc = ringc.gamma.value(xy);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::fabs(r0[k] - base[k]) <= 1e-14);
            CHECK(std::fabs(rc[k] - base[k]) <= 1e-14);
        }
    }
}

TEST_CASE("linear force shifts the connection by a quarter of its slope") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const SmoothMap fe = phase_exprs(2, 2, {"0.4*y1", "0.4*y2"});
    const auto ring = ring_connection(conn, fe, gh, A);
    for (const auto& xy : upper_half_plan(13, 8).draw()) {
        const auto base = conn.gamma.value(xy);
        const auto got = ring.gamma.value(xy);
        for (int a = 0; a < 2; ++a) {
            for (int c = 0; c < 2; ++c) {
                const double want = base[a * 2 + c] + (a == c ? 0.1 : 0.0);
                CHECK(std::fabs(got[a * 2 + c] - want) <= 1e-13);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Sprays and deviation.

TEST_CASE("spray of a linear-in-fiber connection negates the contraction") {
    const auto A = GeneralizedLieAlgebroid::create(1, 2, anchor_diagonal(1, 2),
                                                   structure_abelian(1, 2), Diffeo::identity(1),
                                                   Diffeo::identity(1));
    const auto gh = GHMorphism::identity(1, 2);
    const RhoEtaConnection conn{
        phase_exprs(1, 2, {"y1 + y2/2", "y1/2 + 2*y2", "y2", "y1 - y2"})};
    const auto S = canonical_spray(conn, gh, A);
    const auto av = S.avert.value({0.1, 0.3, -0.7});
    CHECK(av[0] == doctest::Approx(-0.86).epsilon(1e-13));
    CHECK(av[1] == doctest::Approx(0.91).epsilon(1e-13));
    // Reconstruction closes the loop: the spray of the extracted connection
    // recovers the original quadratic vertical field.
    const auto orig =
        phase_exprs(1, 2, {"-(y1^2 + y1*y2 + 2*y2^2)", "-(2*y1*y2 - y2^2)"});
    SamplePlan plan = SamplePlan::standard(1, 2, 23);
    plan.count = 12;
    for (const auto& xy : plan.draw()) {
        const auto got = S.avert.value(xy);
        const auto want = orig.value(xy);
        CHECK(std::fabs(got[0] - want[0]) <= 1e-12 * std::max(1.0, std::fabs(want[0])));
        CHECK(std::fabs(got[1] - want[1]) <= 1e-12 * std::max(1.0, std::fabs(want[1])));
    }
}

TEST_CASE("spray of the zero connection is zero") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_spray(RhoEtaConnection::zero(2, 2), gh, A);
    CHECK(std::fabs(S.avert.value({0.3, -0.6, 1.1, 0.4})[0]) <= 1e-15);
    CHECK(std::fabs(S.avert.value({0.3, -0.6, 1.1, 0.4})[1]) <= 1e-15);
}

TEST_CASE("spray round-trip through the rigid body connection") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const auto S = canonical_semispray(rigid_body_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const auto S2 = canonical_spray(conn, gh, A);
    SamplePlan plan = SamplePlan::standard(3, 3, 31);
    plan.count = 16;
    for (const auto& xy : plan.draw()) {
        const auto a1 = S.avert.value(xy);
        const auto a2 = S2.avert.value(xy);
        for (int b = 0; b < 3; ++b)
            CHECK(std::fabs(a1[b] - a2[b]) <= 1e-9 * std::max(1.0, std::fabs(a1[b])));
        CHECK(std::fabs(spray_deviation(S2, A, xy)[0]) <= 1e-8);
    }
}

TEST_CASE("deviation of a constant vertical field at the fiber origin") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto S = semispray_from_avert(SmoothMap::constant({1.0}, 2), gh, A);
    const auto dev = spray_deviation(S, A, {0.5, 0.0});
    CHECK(dev[0] == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("deviation matches the dilation-bracket definition") {
    // Deviation is the vertical part of [C, S] - S where C is the dilation
    // field; the bracket route must agree and its base part must vanish.
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto S = semispray_from_avert(phase_exprs(1, 1, {"1 + x1*y1^2"}), gh, A);
    const auto P = Prolongation::over(A);
    const auto C = liouville_section(1, 1);
    const auto D =
        section_combo({{1.0, prolong_bracket(P, C, S.section())}, {-1.0, S.section()}});
    const std::vector<std::vector<double>> points{{0.5, 0.0}, {-0.3, 1.4}, {1.1, -0.8}};
    for (const auto& xy : points) {
        const auto val = D->eval(xy, 0);
        const auto dev = spray_deviation(S, A, xy);
        CHECK(std::fabs(val.z[0].v) <= 1e-14);
        CHECK(val.y[0].v == doctest::Approx(dev[0]).epsilon(1e-12));
    }
}

TEST_CASE("deviation of linear and quadratic vertical fields") {
    const auto A = tangent_like(1);
    const auto gh = GHMorphism::identity(1, 1);
    const auto lin = semispray_from_avert(phase_exprs(1, 1, {"3*y1"}), gh, A);
    CHECK(spray_deviation(lin, A, {0.0, 0.5})[0] == doctest::Approx(-1.5).epsilon(1e-13));
    const auto quad = semispray_from_avert(phase_exprs(1, 1, {"y1^2"}), gh, A);
    CHECK(std::fabs(spray_deviation(quad, A, {0.0, 0.5})[0]) <= 1e-14);
}

TEST_CASE("two-homogeneity certificate for quadratic vertical fields") {
    const auto A2 = tangent_like(2);
    const auto gh2 = GHMorphism::identity(2, 2);
    const auto S2 = canonical_semispray(half_plane_lagrangian(), gh2, A2);
    CHECK(check_avert_homogeneity(S2.avert, 2, 2, upper_half_plan()) <= 1e-8);

    const auto A3 = so3_body();
    const auto gh3 = GHMorphism::identity(3, 3);
    const auto S3 = canonical_semispray(rigid_body_lagrangian(), gh3, A3);
    CHECK(check_avert_homogeneity(S3.avert, 3, 3, SamplePlan::standard(3, 3)) <= 1e-8);

    const SmoothMap shifted = phase_exprs(1, 1, {"y1 + 1"});
    CHECK(check_avert_homogeneity(shifted, 1, 1, SamplePlan::standard(1, 1)) >= 0.1);
}

// ---------------------------------------------------------------------------
// Curvature of force-shifted connections.

TEST_CASE("curvature assembly reduces to the plain curvature without force") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const auto P = Prolongation::over(A);
    const SmoothMap fe0 = SmoothMap::zero(4, 2);
    for (const auto& xy : upper_half_plan(17, 8).draw()) {
        const auto got = ring_curvature(conn, fe0, gh, A, xy);
        const auto want = curvature(P, conn, xy);
        for (std::size_t k = 0; k < want.size(); ++k) {
            CHECK(std::fabs(got[k] - want[k]) <= 1e-12 * std::max(1.0, std::fabs(want[k])));
        }
    }
}

TEST_CASE("flat abelian connection with constant force stays flat") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto conn = RhoEtaConnection::zero(2, 2);
    const SmoothMap fe = SmoothMap::constant({0.7, -0.2}, 4);
    const auto R = ring_curvature(conn, fe, gh, A, {0.3, -0.6, 1.1, 0.4});
    for (double v : R) CHECK(std::fabs(v) <= 1e-15);
}

TEST_CASE("curvature assembly matches the direct curvature of the shifted connection") {
    const auto A = tangent_like(2);
    const auto gh = GHMorphism::identity(2, 2);
    const auto S = canonical_semispray(half_plane_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const SmoothMap fe = phase_exprs(2, 2, {"0.4*y1", "0.4*y2"});
    const auto ring = ring_connection(conn, fe, gh, A);
    const auto P = Prolongation::over(A);
    for (const auto& xy : upper_half_plan(21, 12).draw()) {
        const auto got = ring_curvature(conn, fe, gh, A, xy);
        const auto want = curvature(P, ring, xy);
        for (std::size_t k = 0; k < want.size(); ++k) {
            CHECK(std::fabs(got[k] - want[k]) <= 1e-7 * std::max(1.0, std::fabs(want[k])));
        }
    }
}

TEST_CASE("curvature assembly on the rigid body with a linear force") {
    const auto A = so3_body();
    const auto gh = GHMorphism::identity(3, 3);
    const auto S = canonical_semispray(rigid_body_lagrangian(), gh, A);
    const auto conn = connection_from_semispray(S, gh, A);
    const SmoothMap fe = phase_exprs(3, 3, {"0.2*y1", "0.2*y2", "0.2*y3"});
    const auto ring = ring_connection(conn, fe, gh, A);
    const auto P = Prolongation::over(A);
    SamplePlan plan = SamplePlan::standard(3, 3, 27);
    plan.count = 12;
    for (const auto& xy : plan.draw()) {
        const auto got = ring_curvature(conn, fe, gh, A, xy);
        const auto want = curvature(P, ring, xy);
        for (std::size_t k = 0; k < want.size(); ++k) {
            CHECK(std::fabs(got[k] - want[k]) <= 1e-7 * std::max(1.0, std::fabs(want[k])));
        }
    }
}
