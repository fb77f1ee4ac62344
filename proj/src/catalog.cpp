#include "algmech/catalog.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "algmech/errors.hpp"

namespace algmech {

namespace {

/// Shortest round-trip decimal form, safe to embed in expression text.
std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

SmoothMap phase_exprs(int m, int r, const std::vector<std::string>& texts) {
    std::vector<ExprAst> comps;
    comps.reserve(texts.size());
    for (const auto& t : texts) comps.push_back(parse_expression(t, m, r));
    return SmoothMap::from_expressions(m + r, std::move(comps));
}

SmoothMap base_exprs(int m, const std::vector<std::string>& texts) {
    std::vector<ExprAst> comps;
    comps.reserve(texts.size());
    for (const auto& t : texts) comps.push_back(parse_expression(t, m, 0));
    return SmoothMap::from_expressions(m, std::move(comps));
}

/// Identity r x r coefficient table over an m-dimensional base.
SmoothMap identity_table(int m, int r) {
    std::vector<double> vals(static_cast<std::size_t>(r) * r, 0.0);
    for (int a = 0; a < r; ++a) vals[a * r + a] = 1.0;
    return SmoothMap::constant(std::move(vals), m);
}

void expect_params(const std::string& id, const std::vector<double>& params, std::size_t want) {
    if (!params.empty() && params.size() != want)
        throw BadParams(id + " expects " + std::to_string(want) + " parameters");
}

/// Construction-time sanity gate: the bracket axioms and the invertibility
/// of the auxiliary maps must hold on the entry's own sample plan.
void validate_entry(const CatalogEntry& e) {
    const auto& A = e.system.algebroid;
    const double tol = 1e-8;
    if (check_antisymmetry(A, e.plan) > tol || check_jacobi(A, e.plan) > tol ||
        check_anchor_compatibility(A, e.plan) > tol)
        throw DomainError("catalog entry fails the algebroid axioms: " + e.id);
    if (check_gh_inverse(e.system.gh, A.r, e.plan) > tol)
        throw DomainError("catalog entry has a non-invertible fiber factor: " + e.id);
    if (min_jacobian_det(A.h, e.plan) <= 0.0 || min_jacobian_det(A.eta, e.plan) <= 0.0)
        throw DomainError("catalog entry has a degenerate base diffeomorphism: " + e.id);
}

GeneralizedLieAlgebroid standard_algebroid(int m, int r) {
    return GeneralizedLieAlgebroid::create(m, r, anchor_diagonal(m, r), structure_abelian(m, r),
                                           Diffeo::identity(m), Diffeo::identity(m));
}

CatalogEntry harmonic_oscillator() {
    CatalogEntry e;
    e.id = "harmonic_oscillator";
    e.system.algebroid = standard_algebroid(1, 1);
    e.system.gh = GHMorphism::identity(1, 1);
    e.system.external_force = SmoothMap::zero(2, 1);
    e.system.payload = PayloadKind::Lagrange;
    e.system.lagrangian = phase_exprs(1, 1, {"y1^2/2 - x1^2/2"});
    e.x0 = {1.0};
    e.y0 = {0.0};
    e.t_end = 2.0 * std::acos(-1.0);
    e.dt = 1e-3;
    const double x0 = e.x0[0];
    const double y0 = e.y0[0];
    e.state_oracle = [x0, y0](double t) {
        return std::vector<double>{x0 * std::cos(t) + y0 * std::sin(t),
                                   -x0 * std::sin(t) + y0 * std::cos(t)};
    };
    e.monitors.emplace_back("energy",
                            energy_map(e.system.lagrangian, e.system.gh, e.system.algebroid));
    e.plan = SamplePlan::standard(1, 1);
    return e;
}

CatalogEntry free_particle() {
    CatalogEntry e;
    e.id = "free_particle";
    e.system.algebroid = standard_algebroid(2, 2);
    e.system.gh = GHMorphism::identity(2, 2);
    e.system.external_force = SmoothMap::zero(4, 2);
    e.system.payload = PayloadKind::Lagrange;
    e.system.lagrangian = phase_exprs(2, 2, {"(y1^2 + y2^2)/2"});
    e.x0 = {0.0, 0.0};
    e.y0 = {0.7, -0.3};
    e.t_end = 1.0;
    e.dt = 1e-3;
    const auto x0 = e.x0;
    const auto y0 = e.y0;
    e.state_oracle = [x0, y0](double t) {
        return std::vector<double>{x0[0] + y0[0] * t, x0[1] + y0[1] * t, y0[0], y0[1]};
    };
    e.monitors.emplace_back("energy",
                            energy_map(e.system.lagrangian, e.system.gh, e.system.algebroid));
    e.plan = SamplePlan::standard(2, 2);
    return e;
}

CatalogEntry rigid_body_so3(const std::vector<double>& params) {
    std::vector<double> I{1.0, 2.0, 3.0};
    expect_params("rigid_body_so3", params, 3);
    if (params.size() == 3) I = params;
    for (double v : I)
        if (!(v > 0.0)) throw BadParams("rigid_body_so3 needs positive inertia moments");

    CatalogEntry e;
    e.id = "rigid_body_so3";
    e.system.algebroid = GeneralizedLieAlgebroid::create(
        3, 3, anchor_zero(3, 3), structure_so3(3), Diffeo::identity(3), Diffeo::identity(3));
    e.system.gh = GHMorphism::identity(3, 3);
    e.system.external_force = SmoothMap::zero(6, 3);
    e.system.payload = PayloadKind::Lagrange;
    e.system.lagrangian = phase_exprs(
        3, 3,
        {"(" + fmt(I[0]) + "*y1^2 + " + fmt(I[1]) + "*y2^2 + " + fmt(I[2]) + "*y3^2)/2"});
    e.x0 = {0.0, 0.0, 0.0};
    e.y0 = {1.0, 1.0, 1.0};
    e.t_end = 10.0;
    e.dt = 1e-3;
    e.monitors.emplace_back("energy",
                            energy_map(e.system.lagrangian, e.system.gh, e.system.algebroid));
    e.monitors.emplace_back(
        "casimir", phase_exprs(3, 3,
                               {"(" + fmt(I[0]) + "*y1)^2 + (" + fmt(I[1]) + "*y2)^2 + (" +
                                fmt(I[2]) + "*y3)^2"}));
    e.plan = SamplePlan::standard(3, 3);
    return e;
}

CatalogEntry poincare_half_plane() {
    CatalogEntry e;
    e.id = "poincare_half_plane";
    e.system.algebroid = standard_algebroid(2, 2);
    e.system.gh = GHMorphism::identity(2, 2);
    e.system.external_force = SmoothMap::zero(4, 2);
    e.system.payload = PayloadKind::Lagrange;
    e.system.lagrangian = phase_exprs(2, 2, {"(y1^2 + y2^2)/(2*x2^2)"});
    e.x0 = {0.0, 1.0};
    e.y0 = {1.0, 0.0};
    e.t_end = 1.0;
    e.dt = 1e-4;
    // Unit-speed geodesic through (0, 1) with horizontal velocity: the unit
    // circle x1 = tanh t, x2 = sech t.
    e.state_oracle = [](double t) {
        const double sech = 1.0 / std::cosh(t);
        const double th = std::tanh(t);
        return std::vector<double>{th, sech, sech * sech, -sech * th};
    };
    e.monitors.emplace_back("energy",
                            energy_map(e.system.lagrangian, e.system.gh, e.system.algebroid));
    e.monitors.emplace_back("radius_sq", phase_exprs(2, 2, {"x1^2 + x2^2"}));
    e.plan = SamplePlan::standard(2, 2);
    e.plan.box[1] = {0.5, 2.0}; // stay clear of the singular boundary x2 = 0
    return e;
}

CatalogEntry sphere_geodesics(const std::vector<double>& params) {
    double R = 1.0;
    expect_params("sphere_geodesics", params, 1);
    if (params.size() == 1) R = params[0];
    if (!(R > 0.0)) throw BadParams("sphere_geodesics needs a positive radius");

    CatalogEntry e;
    e.id = "sphere_geodesics";
    e.system.algebroid = standard_algebroid(2, 2);
    e.system.gh = GHMorphism::identity(2, 2);
    e.system.external_force = SmoothMap::zero(4, 2);
    e.system.payload = PayloadKind::Lagrange;
    const std::string R2 = fmt(R * R);
    e.system.lagrangian =
        phase_exprs(2, 2, {R2 + "*(y1^2 + sin(x1)^2*y2^2)/2"});
    e.x0 = {0.5 * std::acos(-1.0), 0.0}; // on the equator
    e.y0 = {0.0, 0.8};
    e.t_end = 2.0;
    e.dt = 1e-3;
    const auto x0 = e.x0;
    const double w = e.y0[1];
    e.state_oracle = [x0, w](double t) {
        return std::vector<double>{x0[0], x0[1] + w * t, 0.0, w};
    };
    e.monitors.emplace_back("energy",
                            energy_map(e.system.lagrangian, e.system.gh, e.system.algebroid));
    e.monitors.emplace_back("azimuthal_momentum",
                            phase_exprs(2, 2, {R2 + "*sin(x1)^2*y2"}));
    e.plan = SamplePlan::standard(2, 2);
    e.plan.box[0] = {0.6, 2.5}; // polar angle away from the coordinate poles
    return e;
}

CatalogEntry shifted_h_toy(const std::vector<double>& params) {
    double k = 0.5;
    expect_params("shifted_h_toy", params, 1);
    if (params.size() == 1) k = params[0];

    CatalogEntry e;
    e.id = "shifted_h_toy";
    e.system.algebroid = GeneralizedLieAlgebroid::create(
        1, 1, base_exprs(1, {"1"}), structure_abelian(1, 1),
        Diffeo::explicit_map(base_exprs(1, {"x1 + " + fmt(k)})),
        Diffeo::explicit_map(base_exprs(1, {"x1 - " + fmt(k)})));
    e.system.gh = GHMorphism::from_g(1, base_exprs(1, {"1 + 0.1*sin(x1)"}));
    e.system.external_force = SmoothMap::zero(2, 1);
    e.system.payload = PayloadKind::Connection;
    e.system.connection = RhoEtaConnection{phase_exprs(1, 1, {"0.2*y1"})};
    e.x0 = {0.2};
    e.y0 = {0.5};
    e.t_end = 1.0;
    e.dt = 1e-3;
    e.plan = SamplePlan::standard(1, 1);
    return e;
}

} // namespace

std::vector<std::string> catalog_ids() {
    return {"harmonic_oscillator", "free_particle",     "rigid_body_so3",
            "poincare_half_plane", "sphere_geodesics",  "shifted_h_toy"};
}

CatalogEntry build_builtin(const std::string& id, const std::vector<double>& params) {
    CatalogEntry e;
    if (id == "harmonic_oscillator") {
        expect_params(id, params, 0);
        e = harmonic_oscillator();
    } else if (id == "free_particle") {
        expect_params(id, params, 0);
        e = free_particle();
    } else if (id == "rigid_body_so3") {
        e = rigid_body_so3(params);
    } else if (id == "poincare_half_plane") {
        expect_params(id, params, 0);
        e = poincare_half_plane();
    } else if (id == "sphere_geodesics") {
        e = sphere_geodesics(params);
    } else if (id == "shifted_h_toy") {
        e = shifted_h_toy(params);
    } else {
        throw UnknownId("no catalog entry named '" + id + "'");
    }
    validate_entry(e);
    return e;
}

TransitionData builtin_transition(const std::string& id, const std::vector<double>& params,
                                  int m, int r) {
    if (id == "identity") {
        return TransitionData{Diffeo::identity(m), identity_table(m, r), identity_table(m, r)};
    }
    if (id == "linear_scale") {
        const double s = params.empty() ? 2.0 : params[0];
        if (s == 0.0) throw BadParams("linear_scale needs a nonzero factor");
        std::vector<std::string> comps;
        for (int i = 0; i < m; ++i) comps.push_back(fmt(s) + "*x" + std::to_string(i + 1));
        std::vector<double> table(static_cast<std::size_t>(r) * r, 0.0);
        for (int a = 0; a < r; ++a) table[a * r + a] = s;
        SmoothMap factor = SmoothMap::constant(table, m);
        return TransitionData{Diffeo::explicit_map(base_exprs(m, comps)), factor, factor};
    }
    if (id == "rotation") {
        if (m != 2 || r != 2) throw BadParams("rotation transition requires m = r = 2");
        const double th = params.empty() ? 0.5 * std::acos(-1.0) : params[0];
        const double c = std::cos(th);
        const double s = std::sin(th);
        const SmoothMap phi = base_exprs(
            2, {fmt(c) + "*x1 - " + fmt(s) + "*x2", fmt(s) + "*x1 + " + fmt(c) + "*x2"});
        const SmoothMap factor = SmoothMap::constant({c, -s, s, c}, 2);
        return TransitionData{Diffeo::explicit_map(phi), factor, factor};
    }
    throw UnknownId("no transition named '" + id + "'");
}

std::vector<std::vector<double>> rigid_body_reference(const std::vector<double>& inertia,
                                                      std::vector<double> y0, double dt,
                                                      int steps) {
    if (inertia.size() != 3 || y0.size() != 3)
        throw DimensionError("rigid body reference needs three inertia moments and three rates");
    auto f = [&inertia](const std::vector<double>& w) {
        return std::vector<double>{(inertia[1] - inertia[2]) / inertia[0] * w[1] * w[2],
                                   (inertia[2] - inertia[0]) / inertia[1] * w[2] * w[0],
                                   (inertia[0] - inertia[1]) / inertia[2] * w[0] * w[1]};
    };
    std::vector<std::vector<double>> out{y0};
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (int n = 0; n < steps; ++n) {
        const auto k1 = f(y0);
        std::vector<double> t(3);
        for (int i = 0; i < 3; ++i) t[i] = y0[i] + 0.5 * dt * k1[i];
        const auto k2 = f(t);
        for (int i = 0; i < 3; ++i) t[i] = y0[i] + 0.5 * dt * k2[i];
        const auto k3 = f(t);
        for (int i = 0; i < 3; ++i) t[i] = y0[i] + dt * k3[i];
        const auto k4 = f(t);
        for (int i = 0; i < 3; ++i)
            y0[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        out.push_back(y0);
    }
    return out;
}

} // namespace algmech
