#include "algmech/spec_io.hpp"

#include <charconv>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "algmech/catalog.hpp"
#include "algmech/errors.hpp"
#include "algmech/expr.hpp"

namespace algmech {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg, const std::string& path) {
    throw SchemaError(msg, path);
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) fail("missing required field", path.empty() ? key : path + "." + key);
    return *v;
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail("expected an integer", path);
    return v.get<int>();
}

double get_num(const json& v, const std::string& path) {
    if (!v.is_number()) fail("expected a number", path);
    return v.get<double>();
}

std::string get_str(const json& v, const std::string& path) {
    if (!v.is_string()) fail("expected a string", path);
    return v.get<std::string>();
}

std::vector<double> get_num_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail("expected an array of numbers", path);
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(get_num(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

void note_unknown(const json& obj, const std::string& path,
                  std::initializer_list<const char*> known, const LoadOptions& opt,
                  std::vector<std::string>& warnings) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool recognized = false;
        for (const char* k : known)
            if (it.key() == k) {
                recognized = true;
                break;
            }
        if (recognized) continue;
        const std::string where = path.empty() ? it.key() : path + "." + it.key();
        if (opt.strict) fail("unknown field", where);
        warnings.push_back("unknown field ignored (at " + where + ")");
    }
}

/// Parses a flat array of expression strings into one SmoothMap; `ny == 0`
/// restricts the expressions to base coordinates.
SmoothMap exprs_to_map(const json& v, std::size_t count, int nx, int ny,
                       const std::string& path) {
    if (!v.is_array() || v.size() != count)
        throw DimensionError("expected " + std::to_string(count) + " expressions (at " + path +
                             ")");
    std::vector<ExprAst> comps;
    comps.reserve(count);
    for (std::size_t k = 0; k < v.size(); ++k)
        comps.push_back(
            parse_expression(get_str(v[k], path + "[" + std::to_string(k) + "]"), nx, ny));
    return SmoothMap::from_expressions(nx + ny, std::move(comps));
}

/// Parses a rows x cols nested array of expression strings, flattened
/// row-major.
SmoothMap expr_matrix_to_map(const json& v, int rows, int cols, int nx, int ny,
                             const std::string& path) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        throw DimensionError("expected " + std::to_string(rows) + " rows (at " + path + ")");
    std::vector<ExprAst> comps;
    comps.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw DimensionError("expected " + std::to_string(cols) + " columns (at " + rp + ")");
        for (int j = 0; j < cols; ++j)
            comps.push_back(parse_expression(
                get_str(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]"), nx,
                ny));
    }
    return SmoothMap::from_expressions(nx + ny, std::move(comps));
}

SmoothMap parse_anchor(const json& v, int m, int r) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "identity") return anchor_diagonal(m, r);
        if (s == "zero") return anchor_zero(m, r);
        fail("expected \"identity\", \"zero\" or an expression matrix", "rho");
    }
    return expr_matrix_to_map(v, m, r, m, 0, "rho");
}

SmoothMap parse_structure(const json& v, int m, int r) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "abelian") return structure_abelian(m, r);
        if (s == "so3") {
            if (r != 3) throw DimensionError("so3 structure requires r = 3 (at structure)");
            return structure_so3(m);
        }
        fail("expected \"abelian\", \"so3\", a dense array or a sparse list", "structure");
    }
    if (!v.is_array()) fail("expected a string or an array", "structure");

    const auto flat = [r](int c, int a, int b) {
        return (static_cast<std::size_t>(c) * r + a) * r + b;
    };

    // Sparse form: a list of {c, a, b, expr} with 1-based indices; each
    // entry contributes antisymmetrically in (a, b).
    if (v.empty() || v[0].is_object()) {
        std::vector<std::string> cells(static_cast<std::size_t>(r) * r * r, "0");
        for (std::size_t k = 0; k < v.size(); ++k) {
            const std::string path = "structure[" + std::to_string(k) + "]";
            const json& item = v[k];
            if (!item.is_object()) fail("expected an object {c, a, b, expr}", path);
            const int c = get_int(require(item, "c", path), path + ".c");
            const int a = get_int(require(item, "a", path), path + ".a");
            const int b = get_int(require(item, "b", path), path + ".b");
            const std::string e = get_str(require(item, "expr", path), path + ".expr");
            for (const auto& [name, idx] : {std::pair<const char*, int>{"c", c}, {"a", a}, {"b", b}})
                if (idx < 1 || idx > r)
                    fail("index out of range 1.." + std::to_string(r), path + "." + name);
            cells[flat(c - 1, a - 1, b - 1)] += " + (" + e + ")";
            cells[flat(c - 1, b - 1, a - 1)] += " - (" + e + ")";
        }
        std::vector<ExprAst> comps;
        comps.reserve(cells.size());
        for (const std::string& cell : cells) comps.push_back(parse_expression(cell, m, 0));
        return SmoothMap::from_expressions(m, std::move(comps));
    }

    // Dense form: r x r x r nested arrays indexed [c][a][b].
    if (static_cast<int>(v.size()) != r)
        throw DimensionError("expected " + std::to_string(r) + " outer entries (at structure)");
    std::vector<ExprAst> comps(static_cast<std::size_t>(r) * r * r);
    for (int c = 0; c < r; ++c) {
        const json& plane = v[static_cast<std::size_t>(c)];
        const std::string pp = "structure[" + std::to_string(c) + "]";
        if (!plane.is_array() || static_cast<int>(plane.size()) != r)
            throw DimensionError("expected " + std::to_string(r) + " rows (at " + pp + ")");
        for (int a = 0; a < r; ++a) {
            const json& row = plane[static_cast<std::size_t>(a)];
            const std::string rp = pp + "[" + std::to_string(a) + "]";
            if (!row.is_array() || static_cast<int>(row.size()) != r)
                throw DimensionError("expected " + std::to_string(r) + " columns (at " + rp + ")");
            for (int b = 0; b < r; ++b)
                comps[flat(c, a, b)] = parse_expression(
                    get_str(row[static_cast<std::size_t>(b)], rp + "[" + std::to_string(b) + "]"),
                    m, 0);
        }
    }
    return SmoothMap::from_expressions(m, std::move(comps));
}

Diffeo parse_diffeo(const json& v, int m, const std::string& path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "identity") return Diffeo::identity(m);
        fail("expected \"identity\" or an expression vector", path);
    }
    return Diffeo::explicit_map(exprs_to_map(v, static_cast<std::size_t>(m), m, 0, path));
}

GHMorphism parse_morphism(const json& v, int m, int r) {
    if (v.is_string()) {
        if (v.get<std::string>() == "identity") return GHMorphism::identity(m, r);
        fail("expected \"identity\" or an expression matrix", "g");
    }
    return GHMorphism::from_g(r, expr_matrix_to_map(v, r, r, m, 0, "g"));
}

void parse_payload(const json& v, int m, int r, const LoadOptions& opt, RunSpec& out) {
    if (!v.is_object()) fail("expected an object", "payload");
    note_unknown(v, "payload", {"lagrangian", "finsler", "connection"}, opt, out.warnings);
    const json* lag = find(v, "lagrangian");
    const json* fin = find(v, "finsler");
    const json* con = find(v, "connection");
    const int given = (lag != nullptr) + (fin != nullptr) + (con != nullptr);
    if (given != 1)
        fail("exactly one of \"lagrangian\", \"finsler\", \"connection\" is required", "payload");

    out.has_payload = true;
    if (lag) {
        out.system.payload = PayloadKind::Lagrange;
        out.system.lagrangian = SmoothMap::from_expressions(
            m + r, {parse_expression(get_str(*lag, "payload.lagrangian"), m, r)});
    } else if (fin) {
        const std::string f = get_str(*fin, "payload.finsler");
        out.system.payload = PayloadKind::Finsler;
        out.system.finsler =
            SmoothMap::from_expressions(m + r, {parse_expression(f, m, r)});
        out.system.lagrangian = SmoothMap::from_expressions(
            m + r, {parse_expression("(" + f + ")^2", m, r)});
    } else {
        out.system.payload = PayloadKind::Connection;
        out.system.connection =
            RhoEtaConnection{expr_matrix_to_map(*con, r, r, m, r, "payload.connection")};
    }
}

void parse_initial(const json& v, int m, int r, const LoadOptions& opt, RunSpec& out) {
    if (!v.is_object()) fail("expected an object {x, y}", "initial");
    note_unknown(v, "initial", {"x", "y"}, opt, out.warnings);
    out.x0 = get_num_array(require(v, "x", "initial"), "initial.x");
    out.y0 = get_num_array(require(v, "y", "initial"), "initial.y");
    if (static_cast<int>(out.x0.size()) != m)
        throw DimensionError("expected " + std::to_string(m) + " base coordinates (at initial.x)");
    if (static_cast<int>(out.y0.size()) != r)
        throw DimensionError("expected " + std::to_string(r) +
                             " fiber coordinates (at initial.y)");
    out.has_initial = true;
}

void parse_integrate(const json& v, const LoadOptions& opt, RunSpec& out) {
    if (!v.is_object()) fail("expected an object {method, dt, t_end}", "integrate");
    note_unknown(v, "integrate", {"method", "dt", "t_end"}, opt, out.warnings);
    if (const json* method = find(v, "method"))
        if (get_str(*method, "integrate.method") != "rk4")
            fail("the only supported method is \"rk4\"", "integrate.method");
    out.dt = get_num(require(v, "dt", "integrate"), "integrate.dt");
    if (!(out.dt > 0.0)) fail("dt must be positive", "integrate.dt");
    out.t_end = get_num(require(v, "t_end", "integrate"), "integrate.t_end");
    if (out.t_end < 0.0) fail("t_end must be non-negative", "integrate.t_end");
    out.has_integrate = true;
}

void parse_monitors(const json& v, int m, int r, const LoadOptions& opt, RunSpec& out) {
    if (!v.is_array()) fail("expected an array of {name, expr}", "monitors");
    out.monitors.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string path = "monitors[" + std::to_string(k) + "]";
        const json& item = v[k];
        if (!item.is_object()) fail("expected an object {name, expr}", path);
        note_unknown(item, path, {"name", "expr"}, opt, out.warnings);
        const std::string name = get_str(require(item, "name", path), path + ".name");
        if (name.empty()) fail("monitor name must be non-empty", path + ".name");
        const std::string expr = get_str(require(item, "expr", path), path + ".expr");
        out.monitors.emplace_back(
            name, SmoothMap::from_expressions(m + r, {parse_expression(expr, m, r)}));
    }
}

void parse_sample_plan(const json& v, int m, int r, const LoadOptions& opt, RunSpec& out) {
    if (!v.is_object()) fail("expected an object {seed, count, box}", "sample_plan");
    note_unknown(v, "sample_plan", {"seed", "count", "box"}, opt, out.warnings);
    if (const json* seed = find(v, "seed")) {
        if (!seed->is_number_integer() || (seed->is_number_integer() && seed->get<long long>() < 0))
            fail("expected a non-negative integer", "sample_plan.seed");
        out.plan.seed = seed->get<std::uint64_t>();
    }
    if (const json* count = find(v, "count")) {
        const int c = get_int(*count, "sample_plan.count");
        if (c < 1) fail("count must be at least 1", "sample_plan.count");
        out.plan.count = c;
    }
    if (const json* box = find(v, "box")) {
        if (!box->is_array() || static_cast<int>(box->size()) != m + r)
            throw DimensionError("expected " + std::to_string(m + r) +
                                 " [lo, hi] pairs (at sample_plan.box)");
        for (int k = 0; k < m + r; ++k) {
            const std::string path = "sample_plan.box[" + std::to_string(k) + "]";
            const auto pair = get_num_array((*box)[static_cast<std::size_t>(k)], path);
            if (pair.size() != 2 || !(pair[0] < pair[1]))
                fail("expected [lo, hi] with lo < hi", path);
            out.plan.box[static_cast<std::size_t>(k)] = {pair[0], pair[1]};
        }
    }
}

/// Eager well-formedness gate: residuals above tolerance are fatal under
/// strict loading and warnings otherwise.
void run_axiom_gate(const LoadOptions& opt, RunSpec& out) {
    const double tol = 1e-8;
    const auto& A = out.system.algebroid;
    const auto gate = [&](double resid, const std::string& what, const std::string& where) {
        if (!(resid > tol)) return;
        std::ostringstream msg;
        msg << what << " residual " << resid << " exceeds " << tol;
        if (opt.strict) fail(msg.str(), where);
        out.warnings.push_back(msg.str() + " (at " + where + ")");
    };
    gate(check_antisymmetry(A, out.plan), "structure antisymmetry", "structure");
    gate(check_jacobi(A, out.plan), "jacobi identity", "structure");
    gate(check_anchor_compatibility(A, out.plan), "anchor compatibility", "rho");
    gate(check_gh_inverse(out.system.gh, A.r, out.plan), "fiber morphism inverse", "g");
}

RunSpec from_builtin(const json& root, const LoadOptions& opt) {
    RunSpec out;
    for (const char* banned : {"m", "r", "rho", "structure", "h", "eta", "g", "payload",
                               "external_force"})
        if (find(root, banned))
            fail("cannot override a builtin system's construction data", banned);

    std::vector<double> params;
    if (const json* p = find(root, "params")) params = get_num_array(*p, "params");
    const CatalogEntry entry = build_builtin(get_str(*find(root, "builtin"), "builtin"), params);

    out.system = entry.system;
    out.has_payload = true;
    out.x0 = entry.x0;
    out.y0 = entry.y0;
    out.has_initial = true;
    out.dt = entry.dt;
    out.t_end = entry.t_end;
    out.has_integrate = true;
    out.monitors = entry.monitors;
    out.plan = entry.plan;

    const int m = entry.system.algebroid.m;
    const int r = entry.system.algebroid.r;
    if (const json* v = find(root, "initial")) parse_initial(*v, m, r, opt, out);
    if (const json* v = find(root, "integrate")) parse_integrate(*v, opt, out);
    if (const json* v = find(root, "monitors")) parse_monitors(*v, m, r, opt, out);
    if (const json* v = find(root, "sample_plan")) parse_sample_plan(*v, m, r, opt, out);
    return out;
}

RunSpec from_fields(const json& root, const LoadOptions& opt) {
    RunSpec out;
    const int m = get_int(require(root, "m", ""), "m");
    const int r = get_int(require(root, "r", ""), "r");
    if (m < 1) fail("base dimension must be at least 1", "m");
    if (r < 1) fail("fiber rank must be at least 1", "r");

    const SmoothMap anchor = parse_anchor(require(root, "rho", ""), m, r);
    const SmoothMap structure = parse_structure(require(root, "structure", ""), m, r);
    Diffeo h = Diffeo::identity(m);
    if (const json* v = find(root, "h")) h = parse_diffeo(*v, m, "h");
    Diffeo eta = Diffeo::identity(m);
    if (const json* v = find(root, "eta")) eta = parse_diffeo(*v, m, "eta");
    out.system.algebroid = GeneralizedLieAlgebroid::create(m, r, anchor, structure, h, eta);

    out.system.gh = GHMorphism::identity(m, r);
    if (const json* v = find(root, "g")) out.system.gh = parse_morphism(*v, m, r);

    out.system.external_force = SmoothMap::zero(m + r, r);
    if (const json* v = find(root, "external_force")) {
        if (v->is_string()) {
            if (v->get<std::string>() != "zero")
                fail("expected \"zero\" or an expression vector", "external_force");
        } else {
            out.system.external_force =
                exprs_to_map(*v, static_cast<std::size_t>(r), m, r, "external_force");
        }
    }

    if (const json* v = find(root, "payload")) parse_payload(*v, m, r, opt, out);

    out.plan = SamplePlan::standard(m, r);
    if (const json* v = find(root, "sample_plan")) parse_sample_plan(*v, m, r, opt, out);
    if (const json* v = find(root, "initial")) parse_initial(*v, m, r, opt, out);
    if (const json* v = find(root, "integrate")) parse_integrate(*v, opt, out);
    if (const json* v = find(root, "monitors")) parse_monitors(*v, m, r, opt, out);
    return out;
}

} // namespace

RunSpec parse_spec_text(const std::string& text, const LoadOptions& opt) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what(), "$");
    }
    if (!root.is_object()) fail("expected a JSON object", "$");

    RunSpec out;
    if (find(root, "builtin")) {
        note_unknown(root, "",
                     {"builtin", "params", "initial", "integrate", "monitors", "sample_plan", "m",
                      "r", "rho", "structure", "h", "eta", "g", "payload", "external_force"},
                     opt, out.warnings);
        RunSpec built = from_builtin(root, opt);
        built.warnings.insert(built.warnings.begin(), out.warnings.begin(), out.warnings.end());
        out = std::move(built);
    } else {
        note_unknown(root, "",
                     {"m", "r", "rho", "structure", "h", "eta", "g", "payload", "external_force",
                      "initial", "integrate", "monitors", "sample_plan"},
                     opt, out.warnings);
        RunSpec built = from_fields(root, opt);
        built.warnings.insert(built.warnings.begin(), out.warnings.begin(), out.warnings.end());
        out = std::move(built);
    }

    if (opt.seed_override) out.plan.seed = *opt.seed_override;
    run_axiom_gate(opt, out);
    return out;
}

RunSpec load_spec(const std::string& path, const LoadOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read system description: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str(), opt);
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<double>* energy) {
    const auto fmt = [](double v) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        (void)ec;
        return std::string(buf, ptr);
    };

    std::string out = "t";
    for (int i = 1; i <= traj.m; ++i) out += ",x" + std::to_string(i);
    for (int a = 1; a <= traj.r; ++a) out += ",y" + std::to_string(a);
    if (energy) out += ",E_L";
    for (const auto& [name, values] : traj.monitors) out += "," + name;
    out += '\n';

    for (std::size_t k = 0; k < traj.rows(); ++k) {
        out += fmt(traj.times[k]);
        for (double v : traj.states[k]) {
            out += ',';
            out += fmt(v);
        }
        if (energy) {
            out += ',';
            out += fmt((*energy)[k]);
        }
        for (const auto& [name, values] : traj.monitors) {
            out += ',';
            out += fmt(values[k]);
        }
        out += '\n';
    }
    if (traj.aborted) out += "# aborted: " + traj.abort_reason + "\n";
    return out;
}

} // namespace algmech
