#pragma once

#include <functional>
#include <string>
#include <vector>

#include "algmech/expr.hpp"
#include "algmech/jet.hpp"

namespace algmech {

/// Seeds an evaluation point: component k becomes the k-th coordinate
/// variable of an `order`-jet over a `values.size()`-dimensional space.
std::vector<Jet> seed_jets(const std::vector<double>& values, int order);

/// A smooth map R^nin -> R^nout evaluable on jets.  Three storage kinds:
/// the identity (recognised so compositions can pass inputs through
/// bit-exactly), a list of expression trees (one per output component,
/// differentiable to any order), and an opaque closure (for quantities
/// derived at runtime, valid up to `max_order`).
class SmoothMap {
public:
    using Closure = std::function<std::vector<Jet>(const std::vector<Jet>&)>;

    SmoothMap() = default;

    static SmoothMap identity(int n);
    static SmoothMap constant(std::vector<double> values, int nin);
    static SmoothMap zero(int nin, int nout);
    static SmoothMap from_expressions(int nin, std::vector<ExprAst> comps);
    static SmoothMap from_function(int nin, int nout, Closure fn, int max_order = 2);

    int nin() const { return nin_; }
    int nout() const { return nout_; }
    int max_order() const { return max_order_; }
    bool is_identity() const { return kind_ == Kind::Identity; }
    bool is_exprs() const { return kind_ == Kind::Exprs; }
    const std::vector<ExprAst>& components() const { return comps_; }

    /// Evaluates on jets; all inputs must share one jet space and order.
    std::vector<Jet> eval(const std::vector<Jet>& inputs) const;

    /// Evaluates at a plain point, seeding the inputs as coordinate
    /// variables so outputs carry derivatives w.r.t. the inputs.
    std::vector<Jet> eval_point(const std::vector<double>& values, int order) const;

    /// Value-only evaluation.
    std::vector<double> value(const std::vector<double>& values) const;

private:
    enum class Kind { Identity, Exprs, Closure };

    Kind kind_ = Kind::Identity;
    int nin_ = 0;
    int nout_ = 0;
    int max_order_ = 2;
    std::vector<ExprAst> comps_;
    Closure fn_;
};

/// Composition outer(inner(.)).  Identity factors drop out exactly; two
/// expression-backed maps compose symbolically (so derivatives of any
/// order remain exact); otherwise the result is a closure.
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);

/// Jacobian d(map)/d(input) at a point, shape nout x nin.
std::vector<std::vector<double>> map_jacobian(const SmoothMap& map,
                                              const std::vector<double>& at);

/// Anti-regression oracle for the derivative machinery: compares every
/// order-1 partial of the map at `at` against a central finite difference
/// with step 1e-6 * (1 + |coordinate|) and returns the max relative
/// residual (absolute floor 1).  The residual is returned even when it
/// exceeds `tol`; `tol` only annotates intent at call sites.
double fd_oracle_check(const SmoothMap& map, const std::vector<double>& at, double tol = 1e-5);

} // namespace algmech
