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

/// A ready-made benchmark system: mechanical data, a default initial state
/// and horizon, an optional closed-form solution for that initial state, and
/// named scalar channels worth monitoring along trajectories.
struct CatalogEntry {
    std::string id;
    MechanicalSystem system;
    std::vector<double> x0;
    std::vector<double> y0;
    double t_end = 1.0;
    double dt = 1e-3;
    /// Full state (x, y) at time t for the default initial data; empty when
    /// the system has no closed form.
    std::function<std::vector<double>(double)> state_oracle;
    std::vector<std::pair<std::string, SmoothMap>> monitors;
    /// Sampling recipe whose box stays clear of the entry's singular loci.
    SamplePlan plan;
};

/// Identifiers accepted by build_builtin.
std::vector<std::string> catalog_ids();

/// Constructs a named benchmark system.  Parameters: rigid_body_so3 takes
/// three positive inertia moments (default 1, 2, 3), sphere_geodesics a
/// positive radius (default 1), shifted_h_toy a base shift (default 0.5);
/// the remaining entries take none.  Every entry passes the algebroid axiom
/// checks at its sample plan before being returned.
CatalogEntry build_builtin(const std::string& id, const std::vector<double>& params = {});

/// Chart transitions for transformation-law checks: "identity",
/// "linear_scale" (one nonzero factor), "rotation" (one angle, requires
/// m = r = 2).
TransitionData builtin_transition(const std::string& id, const std::vector<double>& params,
                                  int m, int r);

/// Independent fixed-step reference for the rigid body: plain-double RK4 on
/// the hand-written inertia-frame equations, sharing no code with the
/// second-order-field pipeline.  Returns steps + 1 fiber rows starting at y0.
std::vector<std::vector<double>> rigid_body_reference(const std::vector<double>& inertia,
                                                      std::vector<double> y0, double dt,
                                                      int steps);

} // namespace algmech
