#include "algmech/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>

namespace algmech {

namespace {

constexpr std::size_t kNoOffset = static_cast<std::size_t>(-1);

// ---------------------------------------------------------------------------
// Tree building with light constant folding.

struct Builder {
    ExprAst ast;

    explicit Builder(int nx, int ny) {
        ast.nx = nx;
        ast.ny = ny;
    }

    const ExprNode& at(int id) const { return ast.nodes[static_cast<std::size_t>(id)]; }
    bool is_lit(int id, double v) const {
        return at(id).op == ExprOp::Literal && at(id).lit == v;
    }

    int lit(double v) {
        ExprNode n;
        n.op = ExprOp::Literal;
        n.lit = v;
        return ast.add_node(n);
    }

    int var(int v, std::size_t offset = kNoOffset) {
        ExprNode n;
        n.op = ExprOp::Var;
        n.var = v;
        n.offset = offset;
        return ast.add_node(n);
    }

    int un(ExprOp op, int a, std::size_t offset = kNoOffset) {
        if (op == ExprOp::Neg) {
            if (at(a).op == ExprOp::Literal) return lit(-at(a).lit);
            if (at(a).op == ExprOp::Neg) return at(a).a;
        }
        if (at(a).op == ExprOp::Literal) {
            const double v = at(a).lit;
            switch (op) {
            case ExprOp::Sin: return lit(std::sin(v));
            case ExprOp::Cos: return lit(std::cos(v));
            case ExprOp::Exp: return lit(std::exp(v));
            case ExprOp::Log:
                if (v > 0.0) return lit(std::log(v));
                break;
            case ExprOp::Sqrt:
                if (v >= 0.0) return lit(std::sqrt(v));
                break;
            default: break;
            }
        }
        ExprNode n;
        n.op = op;
        n.a = a;
        n.offset = offset;
        return ast.add_node(n);
    }

    int bin(ExprOp op, int a, int b, std::size_t offset = kNoOffset) {
        const bool la = at(a).op == ExprOp::Literal;
        const bool lb = at(b).op == ExprOp::Literal;
        switch (op) {
        case ExprOp::Add:
            if (la && lb) return lit(at(a).lit + at(b).lit);
            if (is_lit(a, 0.0)) return b;
            if (is_lit(b, 0.0)) return a;
            break;
        case ExprOp::Sub:
            if (la && lb) return lit(at(a).lit - at(b).lit);
            if (is_lit(b, 0.0)) return a;
            if (is_lit(a, 0.0)) return un(ExprOp::Neg, b, offset);
            break;
        case ExprOp::Mul:
            if (la && lb) return lit(at(a).lit * at(b).lit);
            if (is_lit(a, 0.0) || is_lit(b, 0.0)) return lit(0.0);
            if (is_lit(a, 1.0)) return b;
            if (is_lit(b, 1.0)) return a;
            break;
        case ExprOp::Div:
            if (la && lb && at(b).lit != 0.0) return lit(at(a).lit / at(b).lit);
            if (is_lit(a, 0.0)) return lit(0.0);
            if (is_lit(b, 1.0)) return a;
            break;
        case ExprOp::Pow:
            if (is_lit(b, 1.0)) return a;
            if (is_lit(b, 0.0)) return lit(1.0);
            if (la && lb) {
                const double base = at(a).lit, p = at(b).lit;
                if (base > 0.0 || p == std::nearbyint(p)) return lit(std::pow(base, p));
            }
            break;
        default: break;
        }
        ExprNode n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.offset = offset;
        return ast.add_node(n);
    }

    // Deep-copies `node` of `src` into this arena.
    int copy(const ExprAst& src, int node) {
        const ExprNode& n = src.nodes[static_cast<std::size_t>(node)];
        switch (n.op) {
        case ExprOp::Literal: return lit(n.lit);
        case ExprOp::Var: return var(n.var, n.offset);
        case ExprOp::Neg:
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Exp:
        case ExprOp::Log:
        case ExprOp::Sqrt: return un(n.op, copy(src, n.a), n.offset);
        default: return bin(n.op, copy(src, n.a), copy(src, n.b), n.offset);
        }
    }

    ExprAst take(int root) {
        ast.root = root;
        return std::move(ast);
    }
};

// ---------------------------------------------------------------------------
// Parsing.

struct Parser {
    const std::string& text;
    int nx, ny;
    std::size_t pos = 0;
    Builder b;

    Parser(const std::string& text, int nx, int ny) : text(text), nx(nx), ny(ny), b(nx, ny) {}

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                                     text[pos] == '\r'))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw SyntaxError(std::string("expected ") + what, pos);
    }

    int parse_expr() {
        int node = parse_term();
        for (;;) {
            const std::size_t at = pos;
            if (accept('+'))
                node = b.bin(ExprOp::Add, node, parse_term(), at);
            else if (accept('-'))
                node = b.bin(ExprOp::Sub, node, parse_term(), at);
            else
                return node;
        }
    }

    int parse_term() {
        int node = parse_unary();
        for (;;) {
            const std::size_t at = pos;
            if (accept('*'))
                node = b.bin(ExprOp::Mul, node, parse_unary(), at);
            else if (accept('/'))
                node = b.bin(ExprOp::Div, node, parse_unary(), at);
            else
                return node;
        }
    }

    int parse_unary() {
        const std::size_t at = pos;
        if (accept('-')) return b.un(ExprOp::Neg, parse_unary(), at);
        return parse_power();
    }

    int parse_power() {
        int base = parse_atom();
        const std::size_t at = pos;
        if (accept('^')) return b.bin(ExprOp::Pow, base, parse_unary(), at);
        return base;
    }

    int parse_atom() {
        skip_ws();
        if (pos >= text.size()) throw SyntaxError("unexpected end of expression", pos);
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            int node = parse_expr();
            expect(')', "')'");
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw SyntaxError("unexpected character", pos);
    }

    int parse_number() {
        const std::size_t start = pos;
        double value = 0.0;
        const char* first = text.data() + pos;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first) throw SyntaxError("malformed number", start);
        pos += static_cast<std::size_t>(ptr - first);
        ExprNode n;
        n.op = ExprOp::Literal;
        n.lit = value;
        n.offset = start;
        return b.ast.add_node(n);
    }

    int parse_ident() {
        const std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_'))
            ++pos;
        const std::string name = text.substr(start, pos - start);

        if (name == "pi") {
            ExprNode n;
            n.op = ExprOp::Literal;
            n.lit = M_PI;
            n.offset = start;
            return b.ast.add_node(n);
        }
        if (name == "e") {
            ExprNode n;
            n.op = ExprOp::Literal;
            n.lit = M_E;
            n.offset = start;
            return b.ast.add_node(n);
        }

        static const struct {
            const char* name;
            ExprOp op;
        } funcs[] = {{"sin", ExprOp::Sin}, {"cos", ExprOp::Cos},   {"exp", ExprOp::Exp},
                     {"log", ExprOp::Log}, {"sqrt", ExprOp::Sqrt}};
        for (const auto& f : funcs)
            if (name == f.name) {
                auto args = parse_args(start);
                if (args.size() != 1)
                    throw ArityError(name + std::string(" takes one argument"), start);
                ExprNode n;
                n.op = f.op;
                n.a = args[0];
                n.offset = start;
                return b.ast.add_node(n);
            }
        if (name == "pow") {
            auto args = parse_args(start);
            if (args.size() != 2) throw ArityError("pow takes two arguments", start);
            ExprNode n;
            n.op = ExprOp::Pow;
            n.a = args[0];
            n.b = args[1];
            n.offset = start;
            return b.ast.add_node(n);
        }

        // Coordinate names: x<k> or y<k>, 1-based.
        if ((name[0] == 'x' || name[0] == 'y') && name.size() > 1) {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                const int k = std::stoi(name.substr(1));
                const int bound = name[0] == 'x' ? nx : ny;
                if (k < 1 || k > bound)
                    throw UnknownIdentifier("coordinate " + name + " out of range", start);
                return b.var(name[0] == 'x' ? k - 1 : nx + k - 1, start);
            }
        }
        throw UnknownIdentifier("unknown identifier " + name, start);
    }

    std::vector<int> parse_args(std::size_t call_at) {
        std::vector<int> args;
        expect('(', "'(' after function name");
        if (peek() == ')') throw ArityError("function call needs arguments", call_at);
        args.push_back(parse_expr());
        while (accept(',')) args.push_back(parse_expr());
        expect(')', "')'");
        return args;
    }
};

// ---------------------------------------------------------------------------
// Evaluation.

Jet eval_node(const ExprAst& ast, int id, const std::vector<Jet>& in,
              std::vector<std::optional<Jet>>& memo) {
    auto& slot = memo[static_cast<std::size_t>(id)];
    if (slot) return *slot;
    const ExprNode& n = ast.nodes[static_cast<std::size_t>(id)];
    Jet out;
    try {
        switch (n.op) {
        case ExprOp::Literal: out = Jet::constant(n.lit, in[0].n, in[0].order); break;
        case ExprOp::Var: out = in[static_cast<std::size_t>(n.var)]; break;
        case ExprOp::Add: out = eval_node(ast, n.a, in, memo) + eval_node(ast, n.b, in, memo); break;
        case ExprOp::Sub: out = eval_node(ast, n.a, in, memo) - eval_node(ast, n.b, in, memo); break;
        case ExprOp::Mul: out = eval_node(ast, n.a, in, memo) * eval_node(ast, n.b, in, memo); break;
        case ExprOp::Div: out = eval_node(ast, n.a, in, memo) / eval_node(ast, n.b, in, memo); break;
        case ExprOp::Pow:
            out = jet_pow(eval_node(ast, n.a, in, memo), eval_node(ast, n.b, in, memo));
            break;
        case ExprOp::Neg: out = -eval_node(ast, n.a, in, memo); break;
        case ExprOp::Sin: out = jet_sin(eval_node(ast, n.a, in, memo)); break;
        case ExprOp::Cos: out = jet_cos(eval_node(ast, n.a, in, memo)); break;
        case ExprOp::Exp: out = jet_exp(eval_node(ast, n.a, in, memo)); break;
        case ExprOp::Log: out = jet_log(eval_node(ast, n.a, in, memo)); break;
        case ExprOp::Sqrt: out = jet_sqrt(eval_node(ast, n.a, in, memo)); break;
        }
    } catch (DomainError& e) {
        if (e.offset == kNoOffset && n.offset != kNoOffset)
            throw DomainError(e.what(), n.offset);
        throw;
    }
    slot = out;
    return out;
}

// ---------------------------------------------------------------------------
// Printing.

int prec_of(const ExprAst& ast, int id) {
    const ExprNode& n = ast.nodes[static_cast<std::size_t>(id)];
    switch (n.op) {
    case ExprOp::Add:
    case ExprOp::Sub: return 1;
    case ExprOp::Mul:
    case ExprOp::Div: return 2;
    case ExprOp::Neg: return 3;
    case ExprOp::Pow: return 4;
    case ExprOp::Literal: return n.lit < 0.0 ? 3 : 5;
    default: return 5;
    }
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

void print_node(const ExprAst& ast, int id, std::string& out);

void print_child(const ExprAst& ast, int id, std::string& out, bool parens) {
    if (parens) {
        out += '(';
        print_node(ast, id, out);
        out += ')';
    } else {
        print_node(ast, id, out);
    }
}

void print_node(const ExprAst& ast, int id, std::string& out) {
    const ExprNode& n = ast.nodes[static_cast<std::size_t>(id)];
    switch (n.op) {
    case ExprOp::Literal: out += format_double(n.lit); return;
    case ExprOp::Var:
        out += n.var < ast.nx ? 'x' : 'y';
        out += std::to_string(n.var < ast.nx ? n.var + 1 : n.var - ast.nx + 1);
        return;
    case ExprOp::Neg:
        out += '-';
        print_child(ast, n.a, out, prec_of(ast, n.a) < 3);
        return;
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Log:
    case ExprOp::Sqrt: {
        const char* name = n.op == ExprOp::Sin   ? "sin"
                           : n.op == ExprOp::Cos ? "cos"
                           : n.op == ExprOp::Exp ? "exp"
                           : n.op == ExprOp::Log ? "log"
                                                 : "sqrt";
        out += name;
        out += '(';
        print_node(ast, n.a, out);
        out += ')';
        return;
    }
    case ExprOp::Pow:
        print_child(ast, n.a, out, prec_of(ast, n.a) <= 4);
        out += '^';
        print_child(ast, n.b, out, prec_of(ast, n.b) < 3);
        return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div: {
        const int p = prec_of(ast, id);
        print_child(ast, n.a, out, prec_of(ast, n.a) < p);
        out += n.op == ExprOp::Add   ? '+'
               : n.op == ExprOp::Sub ? '-'
               : n.op == ExprOp::Mul ? '*'
                                     : '/';
        print_child(ast, n.b, out, prec_of(ast, n.b) <= p);
        return;
    }
    }
}

// ---------------------------------------------------------------------------
// Differentiation.

int diff_node(const ExprAst& src, int id, int var, Builder& b, std::vector<int>& memo) {
    int& slot = memo[static_cast<std::size_t>(id)];
    if (slot >= 0) return slot;
    const ExprNode& n = src.nodes[static_cast<std::size_t>(id)];
    int out;
    switch (n.op) {
    case ExprOp::Literal: out = b.lit(0.0); break;
    case ExprOp::Var: out = b.lit(n.var == var ? 1.0 : 0.0); break;
    case ExprOp::Add:
        out = b.bin(ExprOp::Add, diff_node(src, n.a, var, b, memo),
                    diff_node(src, n.b, var, b, memo));
        break;
    case ExprOp::Sub:
        out = b.bin(ExprOp::Sub, diff_node(src, n.a, var, b, memo),
                    diff_node(src, n.b, var, b, memo));
        break;
    case ExprOp::Mul: {
        const int da = diff_node(src, n.a, var, b, memo);
        const int db = diff_node(src, n.b, var, b, memo);
        out = b.bin(ExprOp::Add, b.bin(ExprOp::Mul, da, b.copy(src, n.b)),
                    b.bin(ExprOp::Mul, b.copy(src, n.a), db));
        break;
    }
    case ExprOp::Div: {
        const int da = diff_node(src, n.a, var, b, memo);
        const int db = diff_node(src, n.b, var, b, memo);
        const int num = b.bin(ExprOp::Sub, b.bin(ExprOp::Mul, da, b.copy(src, n.b)),
                              b.bin(ExprOp::Mul, b.copy(src, n.a), db));
        out = b.bin(ExprOp::Div, num, b.bin(ExprOp::Pow, b.copy(src, n.b), b.lit(2.0)));
        break;
    }
    case ExprOp::Pow: {
        const ExprNode& eb = src.nodes[static_cast<std::size_t>(n.b)];
        const int da = diff_node(src, n.a, var, b, memo);
        if (eb.op == ExprOp::Literal) {
            const double p = eb.lit;
            const int fp = b.bin(ExprOp::Pow, b.copy(src, n.a), b.lit(p - 1.0));
            out = b.bin(ExprOp::Mul, b.bin(ExprOp::Mul, b.lit(p), fp), da);
        } else {
            const int db = diff_node(src, n.b, var, b, memo);
            const int whole = b.bin(ExprOp::Pow, b.copy(src, n.a), b.copy(src, n.b));
            const int t1 = b.bin(ExprOp::Mul, db, b.un(ExprOp::Log, b.copy(src, n.a)));
            const int t2 = b.bin(ExprOp::Div, b.bin(ExprOp::Mul, b.copy(src, n.b), da),
                                 b.copy(src, n.a));
            out = b.bin(ExprOp::Mul, whole, b.bin(ExprOp::Add, t1, t2));
        }
        break;
    }
    case ExprOp::Neg: out = b.un(ExprOp::Neg, diff_node(src, n.a, var, b, memo)); break;
    case ExprOp::Sin:
        out = b.bin(ExprOp::Mul, b.un(ExprOp::Cos, b.copy(src, n.a)),
                    diff_node(src, n.a, var, b, memo));
        break;
    case ExprOp::Cos:
        out = b.un(ExprOp::Neg, b.bin(ExprOp::Mul, b.un(ExprOp::Sin, b.copy(src, n.a)),
                                      diff_node(src, n.a, var, b, memo)));
        break;
    case ExprOp::Exp:
        out = b.bin(ExprOp::Mul, b.un(ExprOp::Exp, b.copy(src, n.a)),
                    diff_node(src, n.a, var, b, memo));
        break;
    case ExprOp::Log:
        out = b.bin(ExprOp::Div, diff_node(src, n.a, var, b, memo), b.copy(src, n.a));
        break;
    case ExprOp::Sqrt: {
        const int denom = b.bin(ExprOp::Mul, b.lit(2.0), b.un(ExprOp::Sqrt, b.copy(src, n.a)));
        out = b.bin(ExprOp::Div, diff_node(src, n.a, var, b, memo), denom);
        break;
    }
    default: out = b.lit(0.0); break;
    }
    slot = out;
    return out;
}

int subst_node(const ExprAst& src, int id, const std::vector<ExprAst>& reps, Builder& b,
               std::vector<int>& memo) {
    int& slot = memo[static_cast<std::size_t>(id)];
    if (slot >= 0) return slot;
    const ExprNode& n = src.nodes[static_cast<std::size_t>(id)];
    int out;
    switch (n.op) {
    case ExprOp::Literal: out = b.lit(n.lit); break;
    case ExprOp::Var: out = b.copy(reps[static_cast<std::size_t>(n.var)],
                                   reps[static_cast<std::size_t>(n.var)].root); break;
    case ExprOp::Neg:
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Log:
    case ExprOp::Sqrt: out = b.un(n.op, subst_node(src, n.a, reps, b, memo), n.offset); break;
    default:
        out = b.bin(n.op, subst_node(src, n.a, reps, b, memo),
                    subst_node(src, n.b, reps, b, memo), n.offset);
        break;
    }
    slot = out;
    return out;
}

bool nodes_equal(const ExprAst& a, int ia, const ExprAst& b, int ib) {
    const ExprNode& na = a.nodes[static_cast<std::size_t>(ia)];
    const ExprNode& nb = b.nodes[static_cast<std::size_t>(ib)];
    if (na.op != nb.op) return false;
    switch (na.op) {
    case ExprOp::Literal: return na.lit == nb.lit;
    case ExprOp::Var: return na.var == nb.var;
    case ExprOp::Neg:
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Log:
    case ExprOp::Sqrt: return nodes_equal(a, na.a, b, nb.a);
    default: return nodes_equal(a, na.a, b, nb.a) && nodes_equal(a, na.b, b, nb.b);
    }
}

} // namespace

bool same_structure(const ExprAst& a, const ExprAst& b) {
    if (a.nx != b.nx || a.ny != b.ny) return false;
    if (!a.valid() || !b.valid()) return a.valid() == b.valid();
    return nodes_equal(a, a.root, b, b.root);
}

ExprAst parse_expression(const std::string& text, int nx, int ny) {
    Parser p(text, nx, ny);
    const int root = p.parse_expr();
    if (!p.at_end()) throw SyntaxError("unexpected trailing characters", p.pos);
    return p.b.take(root);
}

std::string print_expression(const ExprAst& ast) {
    std::string out;
    if (ast.valid()) print_node(ast, ast.root, out);
    return out;
}

Jet eval_jet(const ExprAst& ast, const std::vector<Jet>& inputs) {
    if (static_cast<int>(inputs.size()) != ast.nx + ast.ny)
        throw DimensionError("expression input count mismatch");
    if (inputs.empty()) {
        // Constant expression over an empty variable space: evaluate with a
        // dummy scalar context.
        std::vector<Jet> dummy{Jet::constant(0.0, 0, 0)};
        std::vector<std::optional<Jet>> memo(ast.nodes.size());
        return eval_node(ast, ast.root, dummy, memo);
    }
    std::vector<std::optional<Jet>> memo(ast.nodes.size());
    return eval_node(ast, ast.root, inputs, memo);
}

double eval_value(const ExprAst& ast, const std::vector<double>& inputs) {
    std::vector<Jet> jets;
    jets.reserve(inputs.size());
    for (double v : inputs) jets.push_back(Jet::constant(v, 0, 0));
    return eval_jet(ast, jets).v;
}

ExprAst differentiate(const ExprAst& ast, int var) {
    Builder b(ast.nx, ast.ny);
    std::vector<int> memo(ast.nodes.size(), -1);
    const int root = diff_node(ast, ast.root, var, b, memo);
    return b.take(root);
}

ExprAst substitute(const ExprAst& ast, const std::vector<ExprAst>& replacements) {
    if (static_cast<int>(replacements.size()) != ast.nx + ast.ny)
        throw DimensionError("substitute needs one replacement per variable");
    const int nx = replacements.empty() ? 0 : replacements[0].nx;
    const int ny = replacements.empty() ? 0 : replacements[0].ny;
    Builder b(nx, ny);
    std::vector<int> memo(ast.nodes.size(), -1);
    const int root = subst_node(ast, ast.root, replacements, b, memo);
    return b.take(root);
}

ExprAst expr_literal(double v, int nx, int ny) {
    Builder b(nx, ny);
    return b.take(b.lit(v));
}

ExprAst expr_variable(int var, int nx, int ny) {
    Builder b(nx, ny);
    return b.take(b.var(var));
}

} // namespace algmech
