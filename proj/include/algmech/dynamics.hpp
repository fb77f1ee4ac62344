#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/mechanics.hpp"
#include "algmech/prolongation.hpp"
#include "algmech/smooth_map.hpp"

namespace algmech {

/// Autonomous first-order field on the phase chart; the state is the
/// concatenation (x, y) with m base and r fiber coordinates.
struct OdeField {
    int m = 0;
    int r = 0;
    std::function<std::vector<double>(const std::vector<double>&)> rhs;

    int dim() const { return m + r; }
};

/// Integration record on a uniform grid (a shorter final step may close the
/// interval exactly).  `states` holds one (x, y) row per time; monitor
/// channels are named columns evaluated at the stored states.  A run that
/// produces a non-finite component stops early: the clean prefix is kept and
/// `aborted`/`abort_reason` describe the failure.
struct Trajectory {
    int m = 0;
    int r = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<std::pair<std::string, std::vector<double>>> monitors;
    bool aborted = false;
    std::string abort_reason;

    std::size_t rows() const { return times.size(); }
};

/// Pairs a second-order field with its base equation:
///   dx^i/dt = rho^i_alpha(eta(h(x))) * (g(h(x)) y)^alpha,
///   dy^a/dt = vertical coefficient of S at (x, y).
OdeField synthesize_semispray_ode(const MechanicalSystem& sys, const SemisprayField& S);

/// Same base equation driven by the quadratic vertical field of a linear
/// connection (external force enters only through the connection itself).
OdeField synthesize_spray_ode(const MechanicalSystem& sys, const RhoEtaConnection& conn);

/// Classical fixed-step fourth-order Runge-Kutta.  Accepts either time
/// orientation as long as dt and (t1 - t0) share a sign; the last step is
/// shortened when the interval is not an exact multiple of dt.  Non-finite
/// states mark the trajectory aborted instead of throwing; exceptions from
/// the field itself (domain errors, singular Hessians) propagate.
Trajectory integrate_rk4(const OdeField& f, const std::vector<double>& x0,
                         const std::vector<double>& y0, double t0, double t1, double dt);

/// Transports fiber coefficients u along an explicitly parametrized base
/// curve c (a map R -> R^m):
///   du^a/dt = -Gamma^a_alpha(c(t), u) * (g(h(c(t))) u)^alpha.
/// The returned rows store (c(t), u(t)).
Trajectory parallel_transport(const RhoEtaConnection& conn, const GHMorphism& gh,
                              const GeneralizedLieAlgebroid& A, const SmoothMap& base_curve,
                              const std::vector<double>& u0, double t0, double t1, double dt);

/// Transports fiber coefficients along the base curve of an integrated
/// trajectory.  Between grid nodes the base point is rebuilt by cubic Hermite
/// interpolation whose node derivatives come from the trajectory's own base
/// equation, so the transport grid matches the trajectory grid exactly.
Trajectory transport_along(const RhoEtaConnection& conn, const GHMorphism& gh,
                           const GeneralizedLieAlgebroid& A, const Trajectory& traj,
                           const std::vector<double>& u0);

struct LiftReport {
    double max_residual = 0.0;
    bool pass = true;
};

/// Checks that the stored fiber data is the lift of the stored base curve:
/// compares rho^i_alpha(eta(h(x))) (g(h(x)) y)^alpha against the central
/// difference of eta(h(x(t))) on interior nodes with uniform neighbors.
LiftReport check_lift_condition(const MechanicalSystem& sys, const Trajectory& traj, double tol);

/// Evaluates a scalar phase-space observable at every stored state and
/// appends the values as a named channel.
void attach_monitor(Trajectory& traj, const std::string& name, const SmoothMap& expr);

} // namespace algmech
