#pragma once

#include <utility>
#include <vector>

#include "algmech/prolongation.hpp"

namespace algmech {

/// Valence of a distinguished tensor field: counts of algebroid-contravariant
/// (p), algebroid-covariant (q), vertical-contravariant (rv) and
/// vertical-covariant (s) slots.  Every index ranges over the fiber rank r.
struct TensorSignature {
    int p = 0, q = 0, rv = 0, s = 0;

    int total() const { return p + q + rv + s; }
};

/// Tensor field over phase space, entries flattened row-major over the slot
/// list (p-group digits first, then q, rv, s).
class DTensorField {
public:
    DTensorField(TensorSignature sig, int m, int r, SmoothMap coef);

    const TensorSignature& sig() const { return sig_; }
    int base_dim() const { return m_; }
    int rank() const { return r_; }
    const SmoothMap& coef() const { return coef_; }
    std::size_t entries() const { return entries_; }

    std::vector<Jet> eval(const std::vector<double>& xy, int order) const;
    std::vector<double> values(const std::vector<double>& xy) const;

private:
    TensorSignature sig_;
    int m_ = 0, r_ = 0;
    std::size_t entries_ = 1;
    SmoothMap coef_;
};

/// Entry pairing of a tensor product: product flat index -> (left flat,
/// right flat), with each slot group concatenated left-then-right.
std::vector<std::pair<std::size_t, std::size_t>> product_split(const TensorSignature& a,
                                                               const TensorSignature& b, int r);

DTensorField tensor_product(const DTensorField& A, const DTensorField& B);

/// Connection coefficients of a distinguished linear connection, one block
/// per slot family; each maps phase space to r*r*r tables flattened
/// (out*r + in)*r + direction.
struct DistinguishedConnection {
    SmoothMap Hh; // algebroid slots, horizontal directions
    SmoothMap Hv; // vertical slots, horizontal directions
    SmoothMap Vh; // algebroid slots, vertical directions
    SmoothMap Vv; // vertical slots, vertical directions
};

/// Berwald-type connection induced by a nonlinear connection: the horizontal
/// blocks are the fiber derivatives of Gamma and the vertical blocks vanish.
DistinguishedConnection berwald_from_connection(const RhoEtaConnection& conn);

/// Horizontal covariant derivative in direction `gamma` at a point: the
/// adapted horizontal derivative of every entry plus one connection
/// correction per slot (positive for contravariant, negative for covariant).
std::vector<double> h_covariant_derivative(const Prolongation& P, const RhoEtaConnection& conn,
                                           const DistinguishedConnection& dc, const DTensorField& T,
                                           int gamma, const std::vector<double>& xy);

/// Vertical covariant derivative in fiber direction `c` at a point.
std::vector<double> v_covariant_derivative(const DistinguishedConnection& dc, const DTensorField& T,
                                           int c, const std::vector<double>& xy);

/// Max blockwise difference |Hh-Hv|, |Vh-Vv| over the plan's samples; zero
/// for a normal connection.
double check_normality(const DistinguishedConnection& dc, const SamplePlan& plan);

} // namespace algmech
