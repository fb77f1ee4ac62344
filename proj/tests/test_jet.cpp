#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "algmech/errors.hpp"
#include "algmech/jet.hpp"
#include "testutil.hpp"

using namespace algmech;

namespace {

Jet mixed_expr(const Jet& a, const Jet& b) {
    // a^2*b + sin(a)/b
    return a * a * b + jet_sin(a) / b;
}

} // namespace

TEST_CASE("constant and variable seeding") {
    const Jet c = Jet::constant(4.5, 3, 2);
    CHECK(c.v == 4.5);
    for (int i = 0; i < 3; ++i) {
        CHECK(c.grad(i) == 0.0);
        for (int j = 0; j < 3; ++j) CHECK(c.hess(i, j) == 0.0);
    }
    const Jet x = Jet::variable(2.0, 1, 3, 2);
    CHECK(x.v == 2.0);
    CHECK(x.grad(0) == 0.0);
    CHECK(x.grad(1) == 1.0);
    CHECK(x.grad(2) == 0.0);
    CHECK(x.hess(1, 1) == 0.0);
}

TEST_CASE("second-order arithmetic against frozen closed forms") {
    const Jet a = Jet::variable(1.3, 0, 2, 2);
    const Jet b = Jet::variable(0.7, 1, 2, 2);
    const Jet f = mixed_expr(a, b);
    CHECK(f.v == doctest::Approx(2.559511693453133).epsilon(1e-14));
    CHECK(f.grad(0) == doctest::Approx(2.2021411837494105).epsilon(1e-14));
    CHECK(f.grad(1) == doctest::Approx(-0.2764452763616183).epsilon(1e-14));
    CHECK(f.hess(0, 0) == doctest::Approx(0.023488306546866955).epsilon(1e-12));
    CHECK(f.hess(0, 1) == doctest::Approx(2.054084023215128).epsilon(1e-14));
    CHECK(f.hess(1, 1) == doctest::Approx(5.618415075318911).epsilon(1e-14));
}

TEST_CASE("quotient rule reproduces tangent derivatives") {
    const Jet t = Jet::variable(0.4, 0, 1, 2);
    const Jet tan = jet_sin(t) / jet_cos(t);
    CHECK(tan.v == doctest::Approx(0.4227932187381618).epsilon(1e-15));
    CHECK(tan.grad(0) == doctest::Approx(1.1787541058109752).epsilon(1e-14));
    CHECK(tan.hess(0, 0) == doctest::Approx(0.9967384849932919).epsilon(1e-13));
}

TEST_CASE("real-exponent power jets") {
    const Jet x = Jet::variable(1.7, 0, 1, 2);
    const Jet p = jet_pow(x, 2.5);
    CHECK(p.v == doctest::Approx(3.7680989902071307).epsilon(1e-14));
    CHECK(p.grad(0) == doctest::Approx(5.541322044422251).epsilon(1e-14));
    CHECK(p.hess(0, 0) == doctest::Approx(4.889401803901986).epsilon(1e-14));
}

TEST_CASE("integral exponents accept negative bases") {
    const Jet x = Jet::variable(-2.0, 0, 1, 2);
    const Jet p = jet_pow(x, 3.0);
    CHECK(p.v == -8.0);
    CHECK(p.grad(0) == 12.0);
    CHECK(p.hess(0, 0) == -12.0);
}

TEST_CASE("jet exponent power against frozen closed forms") {
    const Jet a = Jet::variable(1.3, 0, 2, 2);
    const Jet b = Jet::variable(0.8, 1, 2, 2);
    const Jet p = jet_pow(a, b);
    CHECK(p.v == doctest::Approx(1.233544104071174).epsilon(1e-14));
    CHECK(p.grad(0) == doctest::Approx(0.7591040640437994).epsilon(1e-14));
    CHECK(p.grad(1) == doctest::Approx(0.32363789155284384).epsilon(1e-14));
    CHECK(p.hess(0, 0) == doctest::Approx(-0.11678524062212295).epsilon(1e-13));
    CHECK(p.hess(0, 1) == doctest::Approx(1.148041859471884).epsilon(1e-13));
    CHECK(p.hess(1, 1) == doctest::Approx(0.08491101737107151).epsilon(1e-13));
}

TEST_CASE("constant jet exponent falls back to the real-exponent rules") {
    // Base is negative; only legal because the exponent jet carries no seeds.
    const Jet x = Jet::variable(-2.0, 0, 1, 2);
    const Jet e = Jet::constant(3.0, 1, 2);
    const Jet p = jet_pow(x, e);
    CHECK(p.v == -8.0);
    CHECK(p.grad(0) == 12.0);
}

TEST_CASE("unary chains: exp, log, sqrt") {
    const Jet x = Jet::variable(0.9, 0, 1, 2);
    const Jet f = jet_exp(x);
    CHECK(f.grad(0) == doctest::Approx(f.v).epsilon(1e-15));
    CHECK(f.hess(0, 0) == doctest::Approx(f.v).epsilon(1e-15));
    const Jet g = jet_log(x);
    CHECK(g.grad(0) == doctest::Approx(1.0 / 0.9).epsilon(1e-15));
    CHECK(g.hess(0, 0) == doctest::Approx(-1.0 / 0.81).epsilon(1e-14));
    const Jet s = jet_sqrt(x);
    CHECK(s.v * s.v == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.grad(0) == doctest::Approx(0.5 / std::sqrt(0.9)).epsilon(1e-14));
}

TEST_CASE("domain violations throw") {
    const Jet x = Jet::variable(-1.0, 0, 1, 2);
    const Jet z = Jet::constant(0.0, 1, 2);
    CHECK_THROWS_AS((void)jet_log(x), DomainError);
    CHECK_THROWS_AS((void)jet_sqrt(x), DomainError);
    CHECK_THROWS_AS((void)(x / z), DomainError);
    CHECK_THROWS_AS((void)jet_pow(Jet::constant(-1.2, 1, 2), 0.5), DomainError);
    CHECK_THROWS_AS((void)jet_pow(z, -1.0), DomainError);
    // Non-constant exponent over a negative base has no real branch.
    CHECK_THROWS_AS((void)jet_pow(x, Jet::variable(2.0, 0, 1, 2)), DomainError);
}

TEST_CASE("mixed jet spaces are rejected") {
    const Jet a = Jet::variable(1.0, 0, 2, 2);
    const Jet b = Jet::variable(1.0, 0, 3, 2);
    CHECK_THROWS_AS((void)(a + b), DimensionError);
    const Jet c = Jet::variable(1.0, 0, 2, 1);
    CHECK_THROWS_AS((void)(a * c), DimensionError);
}

TEST_CASE("first-order mode carries no second derivatives") {
    const Jet x = Jet::variable(2.0, 0, 2, 1);
    const Jet y = Jet::variable(3.0, 1, 2, 1);
    const Jet f = x * y + jet_exp(x);
    CHECK(f.order == 1);
    CHECK(f.grad(0) == doctest::Approx(3.0 + std::exp(2.0)).epsilon(1e-15));
    CHECK(f.grad(1) == 2.0);
    CHECK(f.h.empty());
}

TEST_CASE("order-zero jets reduce to plain arithmetic") {
    const Jet a = Jet::constant(2.0, 0, 0);
    const Jet b = Jet::constant(5.0, 0, 0);
    const Jet f = (a + b) * b / a - jet_sqrt(b * b);
    CHECK(f.v == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(f.g.empty());
    CHECK(f.h.empty());
}

TEST_CASE("hessian symmetry is bitwise under random composites") {
    algmech::SplitMix64 rng(0xA11CE5u);
    for (int trial = 0; trial < 50; ++trial) {
        const auto u = testutil::random_point(rng, 3, -1.5, 1.5);
        const Jet x = Jet::variable(u[0], 0, 3, 2);
        const Jet y = Jet::variable(u[1], 1, 3, 2);
        const Jet z = Jet::variable(u[2], 2, 3, 2);
        const Jet f =
            jet_exp(x * y) * jet_cos(z) + jet_pow(x * x + y * y + Jet::constant(1.0, 3, 2), 1.5) -
            z / (x * x + Jet::constant(2.0, 3, 2));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < i; ++j) CHECK(f.hess(i, j) == f.hess(j, i));
    }
}

TEST_CASE("jet derivatives match central differences on a composite") {
    auto scalar = [](const std::vector<double>& u) {
        return std::exp(u[0] * u[1]) * std::cos(u[2]) + std::pow(u[0] * u[0] + u[1] * u[1] + 1.0, 1.5);
    };
    algmech::SplitMix64 rng(77u);
    for (int trial = 0; trial < 20; ++trial) {
        const auto u = testutil::random_point(rng, 3, -1.2, 1.2);
        const Jet x = Jet::variable(u[0], 0, 3, 2);
        const Jet y = Jet::variable(u[1], 1, 3, 2);
        const Jet z = Jet::variable(u[2], 2, 3, 2);
        const Jet f = jet_exp(x * y) * jet_cos(z) +
                      jet_pow(x * x + y * y + Jet::constant(1.0, 3, 2), 1.5);
        const auto g = testutil::fd_gradient(scalar, u);
        const auto H = testutil::fd_hessian(scalar, u);
        for (int i = 0; i < 3; ++i) {
            CHECK(testutil::rel_err(f.grad(i), g[static_cast<std::size_t>(i)]) < 1e-5);
            for (int j = 0; j < 3; ++j)
                CHECK(testutil::rel_err(f.hess(i, j),
                                        H[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) <
                      1e-4);
        }
    }
}

TEST_CASE("directional extraction lowers the order by one") {
    const Jet x = Jet::variable(1.2, 0, 2, 2);
    const Jet y = Jet::variable(0.5, 1, 2, 2);
    const Jet f = x * x * y + jet_sin(x);
    const Jet fx = jet_partial(f, 0);
    CHECK(fx.order == 1);
    CHECK(fx.v == doctest::Approx(2.0 * 1.2 * 0.5 + std::cos(1.2)).epsilon(1e-15));
    CHECK(fx.grad(0) == doctest::Approx(2.0 * 0.5 - std::sin(1.2)).epsilon(1e-15));
    CHECK(fx.grad(1) == doctest::Approx(2.0 * 1.2).epsilon(1e-15));
    const Jet fxx = jet_partial(fx, 0);
    CHECK(fxx.order == 0);
    CHECK(fxx.v == doctest::Approx(2.0 * 0.5 - std::sin(1.2)).epsilon(1e-15));
    CHECK_THROWS_AS((void)jet_partial(fxx, 0), DimensionError);
}
