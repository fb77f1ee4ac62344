#include "algmech/dtensor.hpp"

#include <algorithm>
#include <cmath>

#include "algmech/errors.hpp"

namespace algmech {

namespace {

std::size_t pow_size(int base, int exp) {
    std::size_t out = 1;
    for (int k = 0; k < exp; ++k) out *= static_cast<std::size_t>(base);
    return out;
}

void decode_digits(std::size_t flat, int count, int r, std::vector<int>& digits) {
    digits.assign(count, 0);
    for (int k = count - 1; k >= 0; --k) {
        digits[k] = static_cast<int>(flat % r);
        flat /= r;
    }
}

std::size_t encode_digits(const std::vector<int>& digits, int r) {
    std::size_t flat = 0;
    for (int d : digits) flat = flat * r + d;
    return flat;
}

} // namespace

DTensorField::DTensorField(TensorSignature sig, int m, int r, SmoothMap coef)
    : sig_(sig), m_(m), r_(r), coef_(std::move(coef)) {
    if (sig.p < 0 || sig.q < 0 || sig.rv < 0 || sig.s < 0) {
        throw SignatureError("negative slot count in tensor signature");
    }
    entries_ = pow_size(r, sig.total());
    if (coef_.nin() != m + r) {
        throw SignatureError("tensor coefficients must be defined over phase space");
    }
    if (static_cast<std::size_t>(coef_.nout()) != entries_) {
        throw SignatureError("tensor coefficient count does not match the signature");
    }
}

std::vector<Jet> DTensorField::eval(const std::vector<double>& xy, int order) const {
    return coef_.eval_point(xy, order);
}

std::vector<double> DTensorField::values(const std::vector<double>& xy) const {
    return coef_.value(xy);
}

std::vector<std::pair<std::size_t, std::size_t>> product_split(const TensorSignature& a,
                                                               const TensorSignature& b, int r) {
    const TensorSignature prod{a.p + b.p, a.q + b.q, a.rv + b.rv, a.s + b.s};
    const int total = prod.total();
    const std::size_t count = pow_size(r, total);
    std::vector<std::pair<std::size_t, std::size_t>> map;
    map.reserve(count);
    std::vector<int> digits, da, db;
    for (std::size_t f = 0; f < count; ++f) {
        decode_digits(f, total, r, digits);
        da.clear();
        db.clear();
        int pos = 0;
        auto take = [&](int na, int nb) {
            for (int k = 0; k < na; ++k) da.push_back(digits[pos++]);
            for (int k = 0; k < nb; ++k) db.push_back(digits[pos++]);
        };
        take(a.p, b.p);
        take(a.q, b.q);
        take(a.rv, b.rv);
        take(a.s, b.s);
        map.emplace_back(encode_digits(da, r), encode_digits(db, r));
    }
    return map;
}

DTensorField tensor_product(const DTensorField& A, const DTensorField& B) {
    if (A.base_dim() != B.base_dim() || A.rank() != B.rank()) {
        throw SignatureError("tensor product factors live over different spaces");
    }
    const int m = A.base_dim(), r = A.rank();
    const TensorSignature sig{A.sig().p + B.sig().p, A.sig().q + B.sig().q,
                              A.sig().rv + B.sig().rv, A.sig().s + B.sig().s};
    const auto split = product_split(A.sig(), B.sig(), r);
    const SmoothMap ca = A.coef();
    const SmoothMap cb = B.coef();
    SmoothMap coef = SmoothMap::from_function(
        m + r, static_cast<int>(split.size()),
        [ca, cb, split](const std::vector<Jet>& in) {
            const std::vector<Jet> ja = ca.eval(in);
            const std::vector<Jet> jb = cb.eval(in);
            std::vector<Jet> out;
            out.reserve(split.size());
            for (const auto& [fa, fb] : split) out.push_back(ja[fa] * jb[fb]);
            return out;
        },
        std::min(ca.max_order(), cb.max_order()));
    return DTensorField(sig, m, r, std::move(coef));
}

DistinguishedConnection berwald_from_connection(const RhoEtaConnection& conn) {
    const int nin = conn.gamma.nin();
    int r = 0;
    while ((r + 1) * (r + 1) <= conn.gamma.nout()) ++r;
    if (r * r != conn.gamma.nout() || nin <= r) {
        throw SignatureError("connection table shape is not r x r over phase space");
    }
    const int m = nin - r;
    const SmoothMap gamma = conn.gamma;
    SmoothMap hblock = SmoothMap::from_function(
        nin, r * r * r,
        [gamma, m, r](const std::vector<Jet>& in) {
            // One order above the request so the fiber derivative lands at
            // the requested order.
            std::vector<double> pt(in.size());
            for (std::size_t idx = 0; idx < in.size(); ++idx) pt[idx] = in[idx].v;
            const std::vector<Jet> gj = gamma.eval_point(pt, in.empty() ? 1 : in[0].order + 1);
            std::vector<Jet> out(static_cast<std::size_t>(r) * r * r);
            for (int a = 0; a < r; ++a) {
                for (int b = 0; b < r; ++b) {
                    for (int g = 0; g < r; ++g) {
                        out[(static_cast<std::size_t>(a) * r + b) * r + g] =
                            jet_partial(gj[gamma_index(a, g, r)], m + b);
                    }
                }
            }
            return out;
        },
        std::max(0, conn.gamma.max_order() - 1));
    SmoothMap vblock = SmoothMap::zero(nin, r * r * r);
    return DistinguishedConnection{hblock, hblock, vblock, vblock};
}

std::vector<double> h_covariant_derivative(const Prolongation& P, const RhoEtaConnection& conn,
                                           const DistinguishedConnection& dc, const DTensorField& T,
                                           int gamma, const std::vector<double>& xy) {
    const int m = P.m, r = P.r;
    if (gamma < 0 || gamma >= r) throw SignatureError("derivative direction out of range");
    const TensorSignature sig = T.sig();
    const int total = sig.total();

    const std::vector<Jet> Tj = T.eval(xy, 1);
    const std::vector<double> rho = P.rho_h.value(xy);
    const std::vector<double> gv = conn.gamma.value(xy);
    const std::vector<double> hh = dc.Hh.value(xy);
    const std::vector<double> hv = dc.Hv.value(xy);

    auto block_entry = [&](const std::vector<double>& blk, int out, int in) {
        return blk[(static_cast<std::size_t>(out) * r + in) * r + gamma];
    };

    std::vector<double> result(T.entries(), 0.0);
    std::vector<int> digits;
    for (std::size_t f = 0; f < T.entries(); ++f) {
        decode_digits(f, total, r, digits);
        // Adapted horizontal derivative of the entry.
        double val = 0.0;
        for (int i = 0; i < m; ++i) val += rho[anchor_index(i, gamma, r)] * Tj[f].grad(i);
        for (int b = 0; b < r; ++b) val -= gv[gamma_index(b, gamma, r)] * Tj[f].grad(m + b);
        // One correction per slot.
        for (int t = 0; t < total; ++t) {
            const bool algebroid = t < sig.p + sig.q;
            const bool contravariant = (t < sig.p) || (t >= sig.p + sig.q && t < sig.p + sig.q + sig.rv);
            const std::vector<double>& blk = algebroid ? hh : hv;
            const int d = digits[t];
            for (int in = 0; in < r; ++in) {
                std::vector<int> swapped = digits;
                swapped[t] = in;
                const double tv = Tj[encode_digits(swapped, r)].v;
                if (contravariant) {
                    val += block_entry(blk, d, in) * tv;
                } else {
                    val -= block_entry(blk, in, d) * tv;
                }
            }
        }
        result[f] = val;
    }
    return result;
}

std::vector<double> v_covariant_derivative(const DistinguishedConnection& dc, const DTensorField& T,
                                           int c, const std::vector<double>& xy) {
    const int m = T.base_dim(), r = T.rank();
    if (c < 0 || c >= r) throw SignatureError("derivative direction out of range");
    const TensorSignature sig = T.sig();
    const int total = sig.total();

    const std::vector<Jet> Tj = T.eval(xy, 1);
    const std::vector<double> vh = dc.Vh.value(xy);
    const std::vector<double> vv = dc.Vv.value(xy);

    auto block_entry = [&](const std::vector<double>& blk, int out, int in) {
        return blk[(static_cast<std::size_t>(out) * r + in) * r + c];
    };

    std::vector<double> result(T.entries(), 0.0);
    std::vector<int> digits;
    for (std::size_t f = 0; f < T.entries(); ++f) {
        decode_digits(f, total, r, digits);
        double val = Tj[f].grad(m + c);
        for (int t = 0; t < total; ++t) {
            const bool algebroid = t < sig.p + sig.q;
            const bool contravariant = (t < sig.p) || (t >= sig.p + sig.q && t < sig.p + sig.q + sig.rv);
            const std::vector<double>& blk = algebroid ? vh : vv;
            const int d = digits[t];
            for (int in = 0; in < r; ++in) {
                std::vector<int> swapped = digits;
                swapped[t] = in;
                const double tv = Tj[encode_digits(swapped, r)].v;
                if (contravariant) {
                    val += block_entry(blk, d, in) * tv;
                } else {
                    val -= block_entry(blk, in, d) * tv;
                }
            }
        }
        result[f] = val;
    }
    return result;
}

double check_normality(const DistinguishedConnection& dc, const SamplePlan& plan) {
    double worst = 0.0;
    for (const auto& s : plan.draw()) {
        const std::vector<double> hh = dc.Hh.value(s);
        const std::vector<double> hv = dc.Hv.value(s);
        const std::vector<double> vh = dc.Vh.value(s);
        const std::vector<double> vv = dc.Vv.value(s);
        for (std::size_t k = 0; k < hh.size(); ++k) {
            worst = std::max(worst, std::abs(hh[k] - hv[k]));
        }
        for (std::size_t k = 0; k < vh.size(); ++k) {
            worst = std::max(worst, std::abs(vh[k] - vv[k]));
        }
    }
    return worst;
}

} // namespace algmech
