#include "algmech/smooth_map.hpp"

#include <algorithm>
#include <cmath>

#include "algmech/errors.hpp"

namespace algmech {

std::vector<Jet> seed_jets(const std::vector<double>& values, int order) {
    const int n = static_cast<int>(values.size());
    std::vector<Jet> out;
    out.reserve(values.size());
    for (int i = 0; i < n; ++i) out.push_back(Jet::variable(values[static_cast<std::size_t>(i)], i, n, order));
    return out;
}

SmoothMap SmoothMap::identity(int n) {
    SmoothMap m;
    m.kind_ = Kind::Identity;
    m.nin_ = n;
    m.nout_ = n;
    return m;
}

SmoothMap SmoothMap::constant(std::vector<double> values, int nin) {
    SmoothMap m;
    m.kind_ = Kind::Exprs;
    m.nin_ = nin;
    m.nout_ = static_cast<int>(values.size());
    for (double v : values) m.comps_.push_back(expr_literal(v, nin, 0));
    return m;
}

SmoothMap SmoothMap::zero(int nin, int nout) {
    return constant(std::vector<double>(static_cast<std::size_t>(nout), 0.0), nin);
}

SmoothMap SmoothMap::from_expressions(int nin, std::vector<ExprAst> comps) {
    SmoothMap m;
    m.kind_ = Kind::Exprs;
    m.nin_ = nin;
    m.nout_ = static_cast<int>(comps.size());
    for (const ExprAst& c : comps)
        if (c.nx + c.ny != nin)
            throw DimensionError("expression variable space does not match map input size");
    m.comps_ = std::move(comps);
    return m;
}

SmoothMap SmoothMap::from_function(int nin, int nout, Closure fn, int max_order) {
    SmoothMap m;
    m.kind_ = Kind::Closure;
    m.nin_ = nin;
    m.nout_ = nout;
    m.fn_ = std::move(fn);
    m.max_order_ = max_order;
    return m;
}

std::vector<Jet> SmoothMap::eval(const std::vector<Jet>& inputs) const {
    if (static_cast<int>(inputs.size()) != nin_)
        throw DimensionError("map applied to wrong number of inputs");
    switch (kind_) {
    case Kind::Identity: return inputs;
    case Kind::Exprs: {
        std::vector<Jet> out;
        out.reserve(comps_.size());
        for (const ExprAst& c : comps_) out.push_back(eval_jet(c, inputs));
        return out;
    }
    case Kind::Closure: {
        if (!inputs.empty() && inputs[0].order > max_order_)
            throw DimensionError("map does not support the requested jet order");
        std::vector<Jet> out = fn_(inputs);
        if (static_cast<int>(out.size()) != nout_)
            throw DimensionError("map closure produced wrong number of outputs");
        return out;
    }
    }
    return {};
}

std::vector<Jet> SmoothMap::eval_point(const std::vector<double>& values, int order) const {
    return eval(seed_jets(values, order));
}

std::vector<double> SmoothMap::value(const std::vector<double>& values) const {
    std::vector<Jet> jets = eval_point(values, 0);
    std::vector<double> out;
    out.reserve(jets.size());
    for (const Jet& j : jets) out.push_back(j.v);
    return out;
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner) {
    if (outer.nin() != inner.nout())
        throw DimensionError("composition size mismatch");
    if (outer.is_identity()) return inner;
    if (inner.is_identity()) return outer;
    if (outer.is_exprs() && inner.is_exprs()) {
        std::vector<ExprAst> comps;
        comps.reserve(static_cast<std::size_t>(outer.nout()));
        for (const ExprAst& c : outer.components())
            comps.push_back(substitute(c, inner.components()));
        return SmoothMap::from_expressions(inner.nin(), std::move(comps));
    }
    const int order = std::min(outer.max_order(), inner.max_order());
    return SmoothMap::from_function(
        inner.nin(), outer.nout(),
        [outer, inner](const std::vector<Jet>& in) { return outer.eval(inner.eval(in)); }, order);
}

std::vector<std::vector<double>> map_jacobian(const SmoothMap& map, const std::vector<double>& at) {
    const std::vector<Jet> out = map.eval_point(at, 1);
    std::vector<std::vector<double>> jac(static_cast<std::size_t>(map.nout()),
                                         std::vector<double>(static_cast<std::size_t>(map.nin()), 0.0));
    for (int i = 0; i < map.nout(); ++i)
        for (int j = 0; j < map.nin(); ++j)
            jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                out[static_cast<std::size_t>(i)].grad(j);
    return jac;
}

double fd_oracle_check(const SmoothMap& map, const std::vector<double>& at, double tol) {
    (void)tol;
    const std::vector<Jet> jets = map.eval_point(at, 1);
    double worst = 0.0;
    for (int j = 0; j < map.nin(); ++j) {
        const double h = 1e-6 * (1.0 + std::abs(at[static_cast<std::size_t>(j)]));
        std::vector<double> hi = at, lo = at;
        hi[static_cast<std::size_t>(j)] += h;
        lo[static_cast<std::size_t>(j)] -= h;
        const std::vector<double> fhi = map.value(hi);
        const std::vector<double> flo = map.value(lo);
        for (int i = 0; i < map.nout(); ++i) {
            const double fd = (fhi[static_cast<std::size_t>(i)] - flo[static_cast<std::size_t>(i)]) /
                              (2.0 * h);
            const double ad = jets[static_cast<std::size_t>(i)].grad(j);
            worst = std::max(worst, std::abs(ad - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    return worst;
}

} // namespace algmech
