#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "algmech/errors.hpp"
#include "algmech/expr.hpp"
#include "testutil.hpp"

using namespace algmech;

namespace {

double eval1(const ExprAst& ast, std::initializer_list<double> vals) {
    return eval_value(ast, std::vector<double>(vals));
}

Jet jet_at(const ExprAst& ast, std::initializer_list<double> vals, int order) {
    std::vector<double> v(vals);
    const int n = static_cast<int>(v.size());
    std::vector<Jet> in;
    for (int i = 0; i < n; ++i) in.push_back(Jet::variable(v[static_cast<std::size_t>(i)], i, n, order));
    return eval_jet(ast, in);
}

} // namespace

TEST_CASE("literals, coordinates, and precedence") {
    const ExprAst a = parse_expression("2*x1+3", 1, 0);
    CHECK(eval1(a, {5.0}) == 13.0);
    const ExprAst b = parse_expression("2*(x1+3)", 1, 0);
    CHECK(eval1(b, {5.0}) == 16.0);
    const ExprAst c = parse_expression("x1 - x2 - x3", 3, 0);
    CHECK(eval1(c, {10.0, 3.0, 2.0}) == 5.0);
    const ExprAst d = parse_expression("6/3/2", 0, 0);
    CHECK(eval_value(d, {}) == 1.0);
}

TEST_CASE("power binds tighter than unary minus and is right-associative") {
    const ExprAst a = parse_expression("-x1^2", 1, 0);
    CHECK(eval1(a, {3.0}) == -9.0);
    const ExprAst b = parse_expression("(-x1)^2", 1, 0);
    CHECK(eval1(b, {3.0}) == 9.0);
    const ExprAst c = parse_expression("2^x1^2", 1, 0);
    CHECK(eval1(c, {3.0}) == 512.0);
    const ExprAst d = parse_expression("x1^-2", 1, 0);
    CHECK(eval1(d, {2.0}) == 0.25);
}

TEST_CASE("named constants and functions") {
    const ExprAst a = parse_expression("sin(pi/2)", 0, 0);
    CHECK(eval_value(a, {}) == doctest::Approx(1.0).epsilon(1e-15));
    const ExprAst b = parse_expression("log(e)", 0, 0);
    CHECK(eval_value(b, {}) == doctest::Approx(1.0).epsilon(1e-15));
    const ExprAst c = parse_expression("pow(x1, 3) + sqrt(y1)", 1, 1);
    CHECK(eval1(c, {2.0, 9.0}) == 11.0);
}

TEST_CASE("fiber coordinates share the input vector after the base block") {
    const ExprAst a = parse_expression("x1*y2 + y1", 1, 2);
    // layout: (x1, y1, y2)
    CHECK(eval1(a, {2.0, 5.0, 7.0}) == 19.0);
}

TEST_CASE("jet evaluation matches frozen closed forms") {
    const ExprAst ast = parse_expression("x1^2*y1 + sin(x1)/y1", 1, 1);
    const Jet f = jet_at(ast, {1.3, 0.7}, 2);
    CHECK(f.v == doctest::Approx(2.559511693453133).epsilon(1e-14));
    CHECK(f.grad(0) == doctest::Approx(2.2021411837494105).epsilon(1e-14));
    CHECK(f.grad(1) == doctest::Approx(-0.2764452763616183).epsilon(1e-14));
    CHECK(f.hess(0, 0) == doctest::Approx(0.023488306546866955).epsilon(1e-12));
    CHECK(f.hess(0, 1) == doctest::Approx(2.054084023215128).epsilon(1e-14));
    CHECK(f.hess(1, 1) == doctest::Approx(5.618415075318911).epsilon(1e-14));
}

TEST_CASE("syntax errors carry byte offsets") {
    CHECK_THROWS_AS((void)parse_expression("x1 +", 1, 0), SyntaxError);
    CHECK_THROWS_AS((void)parse_expression("(x1", 1, 0), SyntaxError);
    CHECK_THROWS_AS((void)parse_expression("x1 x2", 2, 0), SyntaxError);
    CHECK_THROWS_AS((void)parse_expression("", 1, 0), SyntaxError);
    try {
        (void)parse_expression("1 + %", 1, 0);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 4);
    }
}

TEST_CASE("unknown identifiers and out-of-range coordinates") {
    CHECK_THROWS_AS((void)parse_expression("foo(x1)", 1, 0), UnknownIdentifier);
    CHECK_THROWS_AS((void)parse_expression("x", 1, 0), UnknownIdentifier);
    CHECK_THROWS_AS((void)parse_expression("x0", 1, 0), UnknownIdentifier);
    try {
        (void)parse_expression("x1 + y3", 2, 2);
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.offset == 5);
    }
}

TEST_CASE("arity violations") {
    CHECK_THROWS_AS((void)parse_expression("sin(x1, x2)", 2, 0), ArityError);
    CHECK_THROWS_AS((void)parse_expression("pow(x1)", 1, 0), ArityError);
    CHECK_THROWS_AS((void)parse_expression("sqrt()", 1, 0), ArityError);
}

TEST_CASE("evaluation domain errors surface with offsets") {
    const ExprAst a = parse_expression("log(x1)", 1, 0);
    CHECK_THROWS_AS((void)eval1(a, {-1.0}), DomainError);
    const ExprAst b = parse_expression("1/(x1-2)", 1, 0);
    CHECK_THROWS_AS((void)eval1(b, {2.0}), DomainError);
}

TEST_CASE("print-parse round trip preserves structure") {
    const char* sources[] = {
        "x1^2*y1 + sin(x1)/y1",
        "-(x1*2) + x1^-2",
        "(x1+y1)*(x1-y1)",
        "2^x1^2",
        "-x1^2",
        "(-x1)^2",
        "sqrt(x1^2 + y1^2)",
        "x1 - (y1 - 1) - y1/(x1*y1)",
        "pow(x1, y1)^2",
        "x1*-3 + y1",
        "exp(-(x1^2)/2)",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        const ExprAst parsed = parse_expression(src, 1, 1);
        const std::string printed = print_expression(parsed);
        CAPTURE(printed);
        const ExprAst reparsed = parse_expression(printed, 1, 1);
        CHECK(same_structure(parsed, reparsed));
    }
}

TEST_CASE("derivatives are exact against hand formulas") {
    const ExprAst ast = parse_expression("x1^2*y1 + sin(x1)/y1", 1, 1);
    const ExprAst dx = differentiate(ast, 0);
    const ExprAst dy = differentiate(ast, 1);
    algmech::SplitMix64 rng(404u);
    for (int trial = 0; trial < 25; ++trial) {
        const double x = rng.uniform(-2.0, 2.0);
        const double y = rng.uniform(0.3, 2.0);
        CHECK(eval1(dx, {x, y}) ==
              doctest::Approx(2.0 * x * y + std::cos(x) / y).epsilon(1e-13));
        CHECK(eval1(dy, {x, y}) ==
              doctest::Approx(x * x - std::sin(x) / (y * y)).epsilon(1e-13));
    }
}

TEST_CASE("second symbolic derivative agrees with the jet hessian") {
    const ExprAst ast = parse_expression("exp(x1*y1) + pow(x1^2 + 1, 1.5)", 1, 1);
    const ExprAst dxx = differentiate(differentiate(ast, 0), 0);
    const ExprAst dxy = differentiate(differentiate(ast, 0), 1);
    const Jet f = jet_at(ast, {0.8, -0.4}, 2);
    CHECK(eval1(dxx, {0.8, -0.4}) == doctest::Approx(f.hess(0, 0)).epsilon(1e-13));
    CHECK(eval1(dxy, {0.8, -0.4}) == doctest::Approx(f.hess(0, 1)).epsilon(1e-13));
}

TEST_CASE("third derivatives via repeated differentiation match central differences") {
    const ExprAst ast = parse_expression("sin(x1*y1)/(y1^2 + 1)", 1, 1);
    const ExprAst d3 = differentiate(differentiate(differentiate(ast, 1), 1), 1);
    auto scalar = [&](const std::vector<double>& u) {
        const ExprAst d2 = differentiate(differentiate(ast, 1), 1);
        return eval_value(d2, u);
    };
    const std::vector<double> at{1.1, 0.6};
    const auto g = testutil::fd_gradient(scalar, at);
    CHECK(testutil::rel_err(eval_value(d3, at), g[1]) < 1e-5);
}

TEST_CASE("derivative of a coordinate folds to a literal") {
    const ExprAst ast = parse_expression("x1", 1, 0);
    const ExprAst d = differentiate(ast, 0);
    CHECK(d.nodes[static_cast<std::size_t>(d.root)].op == ExprOp::Literal);
    CHECK(d.nodes[static_cast<std::size_t>(d.root)].lit == 1.0);
    const ExprAst z = differentiate(parse_expression("y1*2 + 7", 0, 1), 0);
    CHECK(z.nodes[static_cast<std::size_t>(z.root)].op == ExprOp::Literal);
    CHECK(z.nodes[static_cast<std::size_t>(z.root)].lit == 2.0);
}

TEST_CASE("substitution rewires the variable space") {
    // f(x1, y1) = sin(x1)*y1; substitute x1 -> 2*x1, y1 -> y1.
    const ExprAst f = parse_expression("sin(x1)*y1", 1, 1);
    std::vector<ExprAst> reps;
    reps.push_back(parse_expression("2*x1", 1, 1));
    reps.push_back(parse_expression("y1", 1, 1));
    const ExprAst g = substitute(f, reps);
    CHECK(eval1(g, {0.7, 3.0}) == doctest::Approx(std::sin(1.4) * 3.0).epsilon(1e-15));

    // Composition can also change the arity: g(x) = f(x, x^2).
    std::vector<ExprAst> onto_x;
    onto_x.push_back(parse_expression("x1", 1, 0));
    onto_x.push_back(parse_expression("x1^2", 1, 0));
    const ExprAst h = substitute(f, onto_x);
    CHECK(h.nx == 1);
    CHECK(h.ny == 0);
    CHECK(eval1(h, {0.7}) == doctest::Approx(std::sin(0.7) * 0.49).epsilon(1e-15));
}

TEST_CASE("constant expressions fold at parse time") {
    const ExprAst a = parse_expression("2*pi", 0, 0);
    CHECK(a.nodes[static_cast<std::size_t>(a.root)].op == ExprOp::Literal);
    CHECK(a.nodes[static_cast<std::size_t>(a.root)].lit == doctest::Approx(2.0 * M_PI));
    const ExprAst b = parse_expression("1/0", 0, 0);
    // Division by a literal zero must not fold away; it has to raise at eval.
    CHECK(b.nodes[static_cast<std::size_t>(b.root)].op == ExprOp::Div);
    CHECK_THROWS_AS((void)eval_value(b, {}), DomainError);
}
