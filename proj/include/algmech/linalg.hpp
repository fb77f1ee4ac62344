#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "algmech/errors.hpp"
#include "algmech/jet.hpp"

namespace algmech {

using Matrix = std::vector<std::vector<double>>;

struct EliminationResult {
    Matrix inverse;
    double det = 0.0;
    double min_pivot = 0.0; // smallest absolute pivot encountered
    double max_pivot = 0.0;
    bool singular = false;
};

/// Gauss-Jordan inversion with partial pivoting.  `rel_tol` declares the
/// matrix singular when a pivot falls below rel_tol times the largest pivot
/// (or is exactly zero).
inline EliminationResult invert_matrix(Matrix a, double rel_tol = 1e-12) {
    const std::size_t n = a.size();
    EliminationResult res;
    res.inverse.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) res.inverse[i][i] = 1.0;
    res.det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(res.inverse[pivot], res.inverse[col]);
            res.det = -res.det;
        }
        const double p = a[col][col];
        const double ap = std::fabs(p);
        if (col == 0) {
            res.min_pivot = res.max_pivot = ap;
        } else {
            res.min_pivot = std::min(res.min_pivot, ap);
            res.max_pivot = std::max(res.max_pivot, ap);
        }
        if (ap == 0.0 || ap < rel_tol * res.max_pivot) {
            res.singular = true;
            res.det = 0.0;
            return res;
        }
        res.det *= p;
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= p;
            res.inverse[col][j] /= p;
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col) continue;
            const double factor = a[row][col];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[row][j] -= factor * a[col][j];
                res.inverse[row][j] -= factor * res.inverse[col][j];
            }
        }
    }
    return res;
}

inline double matrix_determinant(Matrix a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            det = -det;
        }
        const double p = a[col][col];
        if (p == 0.0) return 0.0;
        det *= p;
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a[row][col] / p;
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
        }
    }
    return det;
}

/// Solves a·x = b in place by Gaussian elimination with partial pivoting.
/// Returns false (leaving x unspecified) when the pivot collapses.
inline bool solve_linear(Matrix a, std::vector<double> b, std::vector<double>& x,
                         double rel_tol = 1e-12) {
    const std::size_t n = a.size();
    double max_pivot = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(b[pivot], b[col]);
        }
        const double p = a[col][col];
        max_pivot = std::max(max_pivot, std::fabs(p));
        if (p == 0.0 || std::fabs(p) < rel_tol * max_pivot) return false;
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a[row][col] / p;
            if (factor == 0.0) continue;
            b[row] -= factor * b[col];
            for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return true;
}

/// Inverts a square matrix of jets by Gauss-Jordan elimination; pivots are
/// chosen on values.  The result carries exact derivatives of the inverse to
/// the operand order.  Throws DomainError (division by zero) on singular
/// values.
inline std::vector<std::vector<Jet>> jet_invert_matrix(std::vector<std::vector<Jet>> a) {
    const std::size_t n = a.size();
    if (n == 0) return a;
    std::vector<std::vector<Jet>> inv(n,
                                      std::vector<Jet>(n, Jet::constant(0.0, a[0][0].n, a[0][0].order)));
    const Jet one = Jet::constant(1.0, a[0][0].n, a[0][0].order);
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = one;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(a[row][col].v) > std::fabs(a[pivot][col].v)) pivot = row;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(inv[pivot], inv[col]);
        }
        const Jet p = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col) continue;
            const Jet factor = a[row][col];
            if (factor.v == 0.0 && factor.g.empty() && factor.h.empty()) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[row][j] = a[row][j] - factor * a[col][j];
                inv[row][j] = inv[row][j] - factor * inv[col][j];
            }
        }
    }
    return inv;
}

} // namespace algmech
