#include "algmech/dynamics.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "algmech/errors.hpp"

namespace algmech {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string non_finite_reason(double t) {
    std::ostringstream os;
    os << "non-finite state at t=" << t;
    return os.str();
}

/// Splits the interval into `full` steps of size dt plus an optional closing
/// remainder; exact multiples (to 1e-9 of a step) snap to full steps only.
struct StepPlan {
    long long full = 0;
    double remainder = 0.0; // signed, same orientation as dt
};

StepPlan plan_steps(double t0, double t1, double dt) {
    if (dt == 0.0) throw DomainError("step size must be nonzero");
    const double total = t1 - t0;
    if (total == 0.0) return {0, 0.0};
    const double ratio = total / dt;
    if (ratio < 0.0) throw DomainError("step sign does not advance toward the end time");
    auto full = static_cast<long long>(std::floor(ratio));
    double frac = ratio - static_cast<double>(full);
    if (frac <= 1e-9) {
        frac = 0.0;
    } else if (1.0 - frac <= 1e-9) {
        full += 1;
        frac = 0.0;
    }
    return {full, frac * dt};
}

/// One classical Runge-Kutta step of size h for du/dt = f(u).
template <typename Rhs>
std::vector<double> rk4_step(const Rhs& f, const std::vector<double>& u, double h) {
    const std::size_t n = u.size();
    const auto k1 = f(u);
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    const auto k2 = f(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    const auto k3 = f(tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
    const auto k4 = f(tmp);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// Time-dependent variant for transport along a moving base point.
template <typename Rhs>
std::vector<double> rk4_step_t(const Rhs& f, const std::vector<double>& u, double t, double h) {
    const std::size_t n = u.size();
    const auto k1 = f(t, u);
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    const auto k2 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    const auto k3 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
    const auto k4 = f(t + h, tmp);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

/// dx^i = rho^i_alpha(eta(h(x))) (g(h(x)) y)^alpha for a state split (x, y).
std::vector<double> base_velocity(const GeneralizedLieAlgebroid& A, const GHMorphism& gh,
                                  const std::vector<double>& x, const std::vector<double>& y) {
    const int m = A.m;
    const int r = A.r;
    const std::vector<double> hx = A.h.is_identity() ? x : A.h.forward.value(x);
    const std::vector<double> ehx = A.eta.is_identity() ? hx : A.eta.forward.value(hx);
    const auto rho = A.anchor.value(ehx);
    std::vector<double> gy(static_cast<std::size_t>(r));
    if (gh.is_identity()) {
        gy.assign(y.begin(), y.end());
    } else {
        const auto g = gh.g.value(hx);
        for (int a = 0; a < r; ++a) {
            double acc = 0.0;
            for (int e = 0; e < r; ++e) acc += g[a * r + e] * y[e];
            gy[a] = acc;
        }
    }
    std::vector<double> dx(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int a = 0; a < r; ++a) acc += rho[anchor_index(i, a, r)] * gy[a];
        dx[i] = acc;
    }
    return dx;
}

OdeField field_with_vertical(const MechanicalSystem& sys, SmoothMap avert) {
    const int m = sys.algebroid.m;
    const int r = sys.algebroid.r;
    const GeneralizedLieAlgebroid A = sys.algebroid;
    const GHMorphism gh = sys.gh;
    auto rhs = [A, gh, avert = std::move(avert), m, r](const std::vector<double>& s) {
        const std::vector<double> x(s.begin(), s.begin() + m);
        const std::vector<double> y(s.begin() + m, s.end());
        std::vector<double> out = base_velocity(A, gh, x, y);
        const auto dy = avert.value(s);
        out.insert(out.end(), dy.begin(), dy.end());
        return out;
    };
    return OdeField{m, r, std::move(rhs)};
}

} // namespace

OdeField synthesize_semispray_ode(const MechanicalSystem& sys, const SemisprayField& S) {
    if (S.m != sys.algebroid.m || S.r != sys.algebroid.r)
        throw DimensionError("second-order field does not match the system dimensions");
    return field_with_vertical(sys, S.avert);
}

OdeField synthesize_spray_ode(const MechanicalSystem& sys, const RhoEtaConnection& conn) {
    const SemisprayField S = canonical_spray(conn, sys.gh, sys.algebroid);
    return field_with_vertical(sys, S.avert);
}

Trajectory integrate_rk4(const OdeField& f, const std::vector<double>& x0,
                         const std::vector<double>& y0, double t0, double t1, double dt) {
    if (static_cast<int>(x0.size()) != f.m || static_cast<int>(y0.size()) != f.r)
        throw DimensionError("initial state does not match the field dimensions");
    Trajectory traj;
    traj.m = f.m;
    traj.r = f.r;

    std::vector<double> state(x0);
    state.insert(state.end(), y0.begin(), y0.end());
    if (!all_finite(state)) {
        traj.aborted = true;
        traj.abort_reason = non_finite_reason(t0);
        return traj;
    }
    traj.times.push_back(t0);
    traj.states.push_back(state);

    const StepPlan plan = plan_steps(t0, t1, dt);
    auto advance = [&](double h, double t_next) {
        state = rk4_step(f.rhs, state, h);
        if (!all_finite(state)) {
            traj.aborted = true;
            traj.abort_reason = non_finite_reason(t_next);
            return false;
        }
        traj.times.push_back(t_next);
        traj.states.push_back(state);
        return true;
    };
    for (long long k = 0; k < plan.full; ++k) {
        const bool closing = (k + 1 == plan.full) && plan.remainder == 0.0;
        if (!advance(dt, closing ? t1 : t0 + static_cast<double>(k + 1) * dt)) return traj;
    }
    if (plan.remainder != 0.0) {
        if (!advance(plan.remainder, t1)) return traj;
    }
    return traj;
}

Trajectory parallel_transport(const RhoEtaConnection& conn, const GHMorphism& gh,
                              const GeneralizedLieAlgebroid& A, const SmoothMap& base_curve,
                              const std::vector<double>& u0, double t0, double t1, double dt) {
    const int m = A.m;
    const int r = A.r;
    if (base_curve.nin() != 1 || base_curve.nout() != m)
        throw DimensionError("base curve must map one parameter to the base chart");
    if (static_cast<int>(u0.size()) != r)
        throw DimensionError("transported coefficients do not match the fiber rank");

    auto rhs = [&](double t, const std::vector<double>& u) {
        const std::vector<double> x = base_curve.value({t});
        std::vector<double> point(x);
        point.insert(point.end(), u.begin(), u.end());
        const auto gam = conn.gamma.value(point);
        const std::vector<double> hx = A.h.is_identity() ? x : A.h.forward.value(x);
        std::vector<double> gu(static_cast<std::size_t>(r));
        if (gh.is_identity()) {
            gu = u;
        } else {
            const auto g = gh.g.value(hx);
            for (int a = 0; a < r; ++a) {
                double acc = 0.0;
                for (int e = 0; e < r; ++e) acc += g[a * r + e] * u[e];
                gu[a] = acc;
            }
        }
        std::vector<double> du(static_cast<std::size_t>(r));
        for (int a = 0; a < r; ++a) {
            double acc = 0.0;
            for (int al = 0; al < r; ++al) acc -= gam[a * r + al] * gu[al];
            du[a] = acc;
        }
        return du;
    };

    Trajectory traj;
    traj.m = m;
    traj.r = r;
    std::vector<double> u = u0;
    auto record = [&](double t) {
        std::vector<double> row = base_curve.value({t});
        row.insert(row.end(), u.begin(), u.end());
        if (!all_finite(row)) {
            traj.aborted = true;
            traj.abort_reason = non_finite_reason(t);
            return false;
        }
        traj.times.push_back(t);
        traj.states.push_back(std::move(row));
        return true;
    };
    if (!record(t0)) return traj;
    const StepPlan plan = plan_steps(t0, t1, dt);
    for (long long k = 0; k < plan.full; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        u = rk4_step_t(rhs, u, t, dt);
        const bool closing = (k + 1 == plan.full) && plan.remainder == 0.0;
        if (!record(closing ? t1 : t0 + static_cast<double>(k + 1) * dt)) return traj;
    }
    if (plan.remainder != 0.0) {
        u = rk4_step_t(rhs, u, t0 + static_cast<double>(plan.full) * dt, plan.remainder);
        record(t1);
    }
    return traj;
}

Trajectory transport_along(const RhoEtaConnection& conn, const GHMorphism& gh,
                           const GeneralizedLieAlgebroid& A, const Trajectory& traj,
                           const std::vector<double>& u0) {
    const int m = A.m;
    const int r = A.r;
    if (traj.m != m || traj.r != r)
        throw DimensionError("trajectory does not match the system dimensions");
    if (static_cast<int>(u0.size()) != r)
        throw DimensionError("transported coefficients do not match the fiber rank");

    Trajectory out;
    out.m = m;
    out.r = r;
    if (traj.rows() == 0) return out;

    // Node values and derivatives of the base curve, from the stored states
    // and the trajectory's own base equation.
    const std::size_t n = traj.rows();
    std::vector<std::vector<double>> xs(n), ds(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = traj.states[k];
        xs[k].assign(s.begin(), s.begin() + m);
        const std::vector<double> y(s.begin() + m, s.end());
        ds[k] = base_velocity(A, gh, xs[k], y);
    }

    std::vector<double> u = u0;
    auto record = [&](std::size_t k) {
        std::vector<double> row = xs[k];
        row.insert(row.end(), u.begin(), u.end());
        out.times.push_back(traj.times[k]);
        out.states.push_back(std::move(row));
    };
    record(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double ta = traj.times[k];
        const double h = traj.times[k + 1] - ta;
        auto interp = [&](double t) {
            const double s = (t - ta) / h;
            const double s2 = s * s;
            const double s3 = s2 * s;
            const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            const double h10 = s3 - 2.0 * s2 + s;
            const double h01 = -2.0 * s3 + 3.0 * s2;
            const double h11 = s3 - s2;
            std::vector<double> x(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i)
                x[i] = h00 * xs[k][i] + h * h10 * ds[k][i] + h01 * xs[k + 1][i] +
                       h * h11 * ds[k + 1][i];
            return x;
        };
        auto rhs = [&](double t, const std::vector<double>& uv) {
            const std::vector<double> x = interp(t);
            std::vector<double> point(x);
            point.insert(point.end(), uv.begin(), uv.end());
            const auto gam = conn.gamma.value(point);
            const std::vector<double> hx = A.h.is_identity() ? x : A.h.forward.value(x);
            std::vector<double> gu(static_cast<std::size_t>(r));
            if (gh.is_identity()) {
                gu = uv;
            } else {
                const auto g = gh.g.value(hx);
                for (int a = 0; a < r; ++a) {
                    double acc = 0.0;
                    for (int e = 0; e < r; ++e) acc += g[a * r + e] * uv[e];
                    gu[a] = acc;
                }
            }
            std::vector<double> du(static_cast<std::size_t>(r));
            for (int a = 0; a < r; ++a) {
                double acc = 0.0;
                for (int al = 0; al < r; ++al) acc -= gam[a * r + al] * gu[al];
                du[a] = acc;
            }
            return du;
        };
        u = rk4_step_t(rhs, u, ta, h);
        if (!all_finite(u)) {
            out.aborted = true;
            out.abort_reason = non_finite_reason(traj.times[k + 1]);
            return out;
        }
        record(k + 1);
    }
    out.aborted = traj.aborted;
    if (traj.aborted) out.abort_reason = traj.abort_reason;
    return out;
}

LiftReport check_lift_condition(const MechanicalSystem& sys, const Trajectory& traj, double tol) {
    const GeneralizedLieAlgebroid& A = sys.algebroid;
    const int m = A.m;
    const int r = A.r;
    if (traj.m != m || traj.r != r)
        throw DimensionError("trajectory does not match the system dimensions");

    const std::size_t n = traj.rows();
    LiftReport rep;
    if (n < 3) {
        rep.pass = rep.max_residual <= tol;
        return rep;
    }

    // Projected base points z = eta(h(x)) per node.
    std::vector<std::vector<double>> zs(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> x(traj.states[k].begin(), traj.states[k].begin() + m);
        const std::vector<double> hx = A.h.is_identity() ? x : A.h.forward.value(x);
        zs[k] = A.eta.is_identity() ? hx : A.eta.forward.value(hx);
    }

    const double dt0 = traj.times[1] - traj.times[0];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double left = traj.times[k] - traj.times[k - 1];
        const double right = traj.times[k + 1] - traj.times[k];
        // Central differences need uniform neighbors; the closing partial
        // step is skipped.
        if (std::fabs(right - left) > 1e-9 * std::fabs(dt0)) continue;
        const auto& s = traj.states[k];
        const std::vector<double> x(s.begin(), s.begin() + m);
        const std::vector<double> y(s.begin() + m, s.end());
        const auto rho = A.anchor.value(zs[k]);
        const std::vector<double> hx = A.h.is_identity() ? x : A.h.forward.value(x);
        std::vector<double> gy(static_cast<std::size_t>(r));
        if (sys.gh.is_identity()) {
            gy = y;
        } else {
            const auto g = sys.gh.g.value(hx);
            for (int a = 0; a < r; ++a) {
                double acc = 0.0;
                for (int e = 0; e < r; ++e) acc += g[a * r + e] * y[e];
                gy[a] = acc;
            }
        }
        for (int i = 0; i < m; ++i) {
            double pred = 0.0;
            for (int a = 0; a < r; ++a) pred += rho[anchor_index(i, a, r)] * gy[a];
            const double diff = (zs[k + 1][i] - zs[k - 1][i]) / (left + right);
            rep.max_residual = std::max(rep.max_residual, std::fabs(pred - diff));
        }
    }
    rep.pass = rep.max_residual <= tol;
    return rep;
}

void attach_monitor(Trajectory& traj, const std::string& name, const SmoothMap& expr) {
    if (expr.nin() != traj.m + traj.r || expr.nout() != 1)
        throw DimensionError("monitor must be a scalar over the phase chart");
    std::vector<double> channel;
    channel.reserve(traj.rows());
    for (const auto& s : traj.states) channel.push_back(expr.value(s)[0]);
    for (auto& existing : traj.monitors) {
        if (existing.first == name) {
            existing.second = std::move(channel);
            return;
        }
    }
    traj.monitors.emplace_back(name, std::move(channel));
}

} // namespace algmech
