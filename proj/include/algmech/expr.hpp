#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "algmech/jet.hpp"

namespace algmech {

// Scalar expressions over base coordinates x1..xm and fibre coordinates
// y1..yr.  Nodes live in an arena; trees are value types and cheap to copy.
enum class ExprOp {
    Literal,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
};

struct ExprNode {
    ExprOp op = ExprOp::Literal;
    double lit = 0.0;             // Literal payload
    int var = -1;                 // Var payload: 0..m-1 = x's, m..m+r-1 = y's
    int a = -1, b = -1;           // child indices
    std::size_t offset = static_cast<std::size_t>(-1);  // source byte offset
};

class ExprAst {
public:
    int nx = 0;                   // number of base coordinates
    int ny = 0;                   // number of fibre coordinates
    std::vector<ExprNode> nodes;
    int root = -1;

    int add_node(ExprNode n) {
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }
    bool valid() const { return root >= 0; }
};

// Structural equality (ignores source offsets).
bool same_structure(const ExprAst& a, const ExprAst& b);

// Parses the expression DSL.  Grammar (EBNF):
//   expr   := term (("+" | "-") term)*
//   term   := unary (("*" | "/") unary)*
//   unary  := "-" unary | power
//   power  := atom ("^" unary)?
//   atom   := number | var | const | func "(" expr ("," expr)* ")" | "(" expr ")"
//   var    := "x" digits | "y" digits      (1-based, bounded by m resp. r)
//   const  := "pi" | "e"
//   func   := "sin" | "cos" | "exp" | "log" | "sqrt" | "pow"
// "^" binds tighter than unary minus, which binds tighter than "*" and "/".
// Errors carry the byte offset of the offending token.
ExprAst parse_expression(const std::string& text, int nx, int ny);

// Renders with minimal parentheses; parse(print(ast)) reproduces the tree of
// any parsed source.
std::string print_expression(const ExprAst& ast);

// Evaluates on jets; `inputs` supplies one jet per variable (x's first).
Jet eval_jet(const ExprAst& ast, const std::vector<Jet>& inputs);

// Plain evaluation.
double eval_value(const ExprAst& ast, const std::vector<double>& inputs);

// Exact partial derivative d(ast)/d(variable `var`) as a new tree, with
// light constant folding to keep repeated differentiation manageable.
ExprAst differentiate(const ExprAst& ast, int var);

// Substitutes `replacements[v]` (over a possibly different variable space) for
// each variable v of `ast`; all replacement trees must share nx/ny.
ExprAst substitute(const ExprAst& ast, const std::vector<ExprAst>& replacements);

// Convenience builders for synthesized trees.
ExprAst expr_literal(double v, int nx, int ny);
ExprAst expr_variable(int var, int nx, int ny);

} // namespace algmech
