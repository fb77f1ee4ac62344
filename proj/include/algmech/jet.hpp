#pragma once

#include <vector>

#include "algmech/errors.hpp"

namespace algmech {

// Truncated Taylor data of a scalar quantity with respect to a fixed set of
// `n` seed directions: value, gradient, and (at order 2) the symmetric matrix
// of second partials.  Mixed partials are stored as a full row-major n*n
// matrix but are filled symmetrically, so hess(i,j) and hess(j,i) are always
// bit-identical.
//
// Every arithmetic operation requires its operands to agree on (n, order);
// combining jets from different seed spaces is a programming error and throws
// DimensionError.
class Jet {
public:
    double v = 0.0;
    int n = 0;
    int order = 0;              // 0 = value only, 1 = +gradient, 2 = +hessian
    std::vector<double> g;      // size n when order >= 1
    std::vector<double> h;      // size n*n when order == 2

    Jet() = default;

    static Jet constant(double value, int n, int order);
    // Seeds direction `index`: d/d(seed_index) = 1.
    static Jet variable(double value, int index, int n, int order);

    double grad(int i) const { return g[static_cast<std::size_t>(i)]; }
    double hess(int i, int j) const { return h[static_cast<std::size_t>(i) * n + j]; }
    double& hess_ref(int i, int j) { return h[static_cast<std::size_t>(i) * n + j]; }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);

Jet operator+(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator-(double c, const Jet& a);
Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator/(const Jet& a, double c);

Jet jet_sin(const Jet& a);
Jet jet_cos(const Jet& a);
Jet jet_exp(const Jet& a);
Jet jet_log(const Jet& a);
Jet jet_sqrt(const Jet& a);
// Handles integral exponents for any base (including negative); non-integral
// exponents require a positive base.
Jet jet_pow(const Jet& a, double p);
Jet jet_pow(const Jet& a, const Jet& b);

// Extracts d(a)/d(seed dir) as a jet one order lower: the value is the
// gradient entry and (when `a` carries second order) the gradient is the
// corresponding hessian row.  This is how closures expose derivatives of
// derived quantities without nesting dual numbers.
Jet jet_partial(const Jet& a, int dir);

// Copies `a` down to a lower order (same seed space), discarding the higher
// derivative blocks.  Needed when factors of one product were produced at
// different orders.
Jet jet_truncate(const Jet& a, int order);

} // namespace algmech
