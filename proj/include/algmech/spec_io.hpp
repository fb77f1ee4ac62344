#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/dynamics.hpp"
#include "algmech/mechanics.hpp"
#include "algmech/smooth_map.hpp"

namespace algmech {

/// A fully constructed run: the mechanical system plus everything needed to
/// integrate and verify it.  `has_*` flags record which optional blocks the
/// source document actually provided.
struct RunSpec {
    MechanicalSystem system;
    bool has_payload = false;
    std::vector<double> x0;
    std::vector<double> y0;
    bool has_initial = false;
    double dt = 1e-3;
    double t_end = 1.0;
    bool has_integrate = false;
    std::vector<std::pair<std::string, SmoothMap>> monitors;
    SamplePlan plan;
    /// Non-fatal notices collected while loading (unknown fields, axiom
    /// residuals above tolerance) when not in strict mode.
    std::vector<std::string> warnings;
};

struct LoadOptions {
    /// Reject unknown fields and axiom violations instead of warning.
    bool strict = false;
    /// Replaces the document's sample seed (e.g. from the environment).
    std::optional<std::uint64_t> seed_override;
};

/// Parses a JSON system description.  See README for the schema.  Throws
/// SchemaError (with a JSON path), SyntaxError (expression text, with
/// offset) or DimensionError (array shape mismatches, naming the field).
RunSpec parse_spec_text(const std::string& text, const LoadOptions& opt = {});

/// Reads and parses the file at `path`; throws std::runtime_error when the
/// file cannot be read.
RunSpec load_spec(const std::string& path, const LoadOptions& opt = {});

/// Serializes a trajectory as CSV: header "t,x1..xm,y1..yr[,E_L][,monitor
/// names]", one row per accepted step, floats in shortest round-trip form.
/// `energy` (when non-null) supplies the E_L column, one value per row.  A
/// trajectory cut short ends with a "# aborted: <reason>" comment line.
std::string trajectory_csv(const Trajectory& traj, const std::vector<double>* energy);

} // namespace algmech
