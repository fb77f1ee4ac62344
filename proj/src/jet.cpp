#include "algmech/jet.hpp"

#include <cmath>
#include <cstddef>

namespace algmech {

namespace {

void require_same_space(const Jet& a, const Jet& b) {
    if (a.n != b.n || a.order != b.order)
        throw DimensionError("jet operands disagree on seed count or order");
}

Jet like(const Jet& a) {
    Jet out;
    out.n = a.n;
    out.order = a.order;
    if (out.order >= 1) out.g.assign(static_cast<std::size_t>(out.n), 0.0);
    if (out.order >= 2) out.h.assign(static_cast<std::size_t>(out.n) * out.n, 0.0);
    return out;
}

// out = phi(a) with phi-value f0 and derivatives d1, d2 at a.v.
Jet chain(const Jet& a, double f0, double d1, double d2) {
    Jet out = like(a);
    out.v = f0;
    if (a.order >= 1)
        for (int i = 0; i < a.n; ++i) out.g[i] = d1 * a.g[i];
    if (a.order >= 2) {
        for (int i = 0; i < a.n; ++i)
            for (int j = i; j < a.n; ++j) {
                const double hij = d1 * a.hess(i, j) + d2 * a.g[i] * a.g[j];
                out.hess_ref(i, j) = hij;
                out.hess_ref(j, i) = hij;
            }
    }
    return out;
}

} // namespace

Jet Jet::constant(double value, int n, int order) {
    Jet out;
    out.v = value;
    out.n = n;
    out.order = order;
    if (order >= 1) out.g.assign(static_cast<std::size_t>(n), 0.0);
    if (order >= 2) out.h.assign(static_cast<std::size_t>(n) * n, 0.0);
    return out;
}

Jet Jet::variable(double value, int index, int n, int order) {
    Jet out = constant(value, n, order);
    if (order >= 1) {
        if (index < 0 || index >= n) throw DimensionError("jet seed index out of range");
        out.g[static_cast<std::size_t>(index)] = 1.0;
    }
    return out;
}

Jet operator+(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    Jet out = like(a);
    out.v = a.v + b.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) out.g[i] = a.g[i] + b.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) out.h[i] = a.h[i] + b.h[i];
    return out;
}

Jet operator-(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    Jet out = like(a);
    out.v = a.v - b.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) out.g[i] = a.g[i] - b.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) out.h[i] = a.h[i] - b.h[i];
    return out;
}

Jet operator*(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    Jet out = like(a);
    out.v = a.v * b.v;
    if (a.order >= 1)
        for (int i = 0; i < a.n; ++i) out.g[i] = a.g[i] * b.v + a.v * b.g[i];
    if (a.order >= 2) {
        for (int i = 0; i < a.n; ++i)
            for (int j = i; j < a.n; ++j) {
                const double hij = a.hess(i, j) * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] +
                                   a.v * b.hess(i, j);
                out.hess_ref(i, j) = hij;
                out.hess_ref(j, i) = hij;
            }
    }
    return out;
}

Jet operator/(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    if (b.v == 0.0) throw DomainError("division by zero");
    Jet out = like(a);
    out.v = a.v / b.v;
    if (a.order >= 1)
        for (int i = 0; i < a.n; ++i) out.g[i] = (a.g[i] - out.v * b.g[i]) / b.v;
    if (a.order >= 2) {
        for (int i = 0; i < a.n; ++i)
            for (int j = i; j < a.n; ++j) {
                const double hij = (a.hess(i, j) - out.g[i] * b.g[j] - out.g[j] * b.g[i] -
                                    out.v * b.hess(i, j)) /
                                   b.v;
                out.hess_ref(i, j) = hij;
                out.hess_ref(j, i) = hij;
            }
    }
    return out;
}

Jet operator-(const Jet& a) {
    Jet out = like(a);
    out.v = -a.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) out.g[i] = -a.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) out.h[i] = -a.h[i];
    return out;
}

Jet operator+(const Jet& a, double c) {
    Jet out = a;
    out.v += c;
    return out;
}
Jet operator+(double c, const Jet& a) { return a + c; }
Jet operator-(const Jet& a, double c) { return a + (-c); }
Jet operator-(double c, const Jet& a) {
    Jet out = -a;
    out.v += c;
    return out;
}
Jet operator*(const Jet& a, double c) {
    Jet out = a;
    out.v *= c;
    for (auto& x : out.g) x *= c;
    for (auto& x : out.h) x *= c;
    return out;
}
Jet operator*(double c, const Jet& a) { return a * c; }
Jet operator/(const Jet& a, double c) {
    if (c == 0.0) throw DomainError("division by zero");
    Jet out = a;
    out.v /= c;
    for (auto& x : out.g) x /= c;
    for (auto& x : out.h) x /= c;
    return out;
}

Jet jet_sin(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, s, c, -s);
}

Jet jet_cos(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, c, -s, -c);
}

Jet jet_exp(const Jet& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}

Jet jet_log(const Jet& a) {
    if (a.v <= 0.0) throw DomainError("log of a non-positive value");
    return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

Jet jet_sqrt(const Jet& a) {
    if (a.v < 0.0) throw DomainError("sqrt of a negative value");
    const double s = std::sqrt(a.v);
    // At a.v == 0 the derivative blows up; we let IEEE infinities propagate so
    // downstream finiteness checks see the problem.
    const double d1 = 0.5 / s;
    return chain(a, s, d1, -0.25 / (s * a.v));
}

Jet jet_pow(const Jet& a, double p) {
    if (p == 0.0) return Jet::constant(1.0, a.n, a.order);
    if (p == 1.0) return a;
    const bool integral = p == std::nearbyint(p);
    if (a.v < 0.0 && !integral)
        throw DomainError("negative base with non-integral exponent");
    if (a.v == 0.0 && p < 0.0) throw DomainError("zero base with negative exponent");
    const double f0 = std::pow(a.v, p);
    const double d1 = p * std::pow(a.v, p - 1.0);
    const double c2 = p * (p - 1.0);
    const double d2 = c2 == 0.0 ? 0.0 : c2 * std::pow(a.v, p - 2.0);
    return chain(a, f0, d1, d2);
}

Jet jet_pow(const Jet& a, const Jet& b) {
    // A constant exponent keeps negative bases legal.
    bool b_const = true;
    for (double x : b.g)
        if (x != 0.0) b_const = false;
    for (double x : b.h)
        if (x != 0.0) b_const = false;
    if (b_const) return jet_pow(a, b.v);
    if (a.v <= 0.0) throw DomainError("non-positive base with varying exponent");
    return jet_exp(b * jet_log(a));
}

Jet jet_truncate(const Jet& a, int order) {
    if (order > a.order) throw DimensionError("jet_truncate cannot raise the order");
    if (order == a.order) return a;
    Jet out = Jet::constant(a.v, a.n, order);
    if (order >= 1)
        for (int i = 0; i < a.n; ++i) out.g[static_cast<std::size_t>(i)] = a.g[static_cast<std::size_t>(i)];
    return out;
}

Jet jet_partial(const Jet& a, int dir) {
    if (a.order < 1) throw DimensionError("jet_partial needs at least first order");
    if (dir < 0 || dir >= a.n) throw DimensionError("jet_partial direction out of range");
    Jet out = Jet::constant(a.g[static_cast<std::size_t>(dir)], a.n, a.order - 1);
    if (a.order >= 2)
        for (int i = 0; i < a.n; ++i) out.g[i] = a.hess(dir, i);
    return out;
}

} // namespace algmech
