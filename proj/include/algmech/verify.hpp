#pragma once

#include <optional>
#include <string>
#include <vector>

#include "algmech/spec_io.hpp"

namespace algmech {

/// One verification check: its measured residual against the tolerance it
/// was held to.  `skipped` marks checks that do not apply to the supplied
/// system (e.g. Lagrangian checks without a Lagrangian); `note` carries the
/// reason.
struct CheckResult {
    std::string check;
    double max_residual = 0.0;
    int samples = 0;
    double tolerance = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;
};

struct VerifyOptions {
    /// Overrides the sample count of the loaded system's plan.
    std::optional<int> samples;
    /// Single tolerance applied to every check instead of per-check defaults.
    std::optional<double> tolerance;
    /// Chart transition to test the transformation laws against ("" = none).
    std::string transition;
    std::vector<double> transition_params;
};

/// Runs the full check battery on a loaded system: bracket axioms, the
/// adapted-frame identity suite, the variational equation and second-order
/// property of the canonical field, force-shifted curvature assembly,
/// velocity transport along the integrated motion, and (when a transition
/// is named) the coordinate transformation laws.  Deterministic for a fixed
/// spec and seed.
std::vector<CheckResult> run_verification(const RunSpec& spec, const VerifyOptions& opt = {});

/// True when no non-skipped check failed.
bool all_passed(const std::vector<CheckResult>& results);

/// Renders results as a JSON array with a fixed field order; byte-stable
/// for identical inputs.
std::string render_report_json(const std::vector<CheckResult>& results);

/// Renders a report document (as produced by render_report_json) as an
/// aligned text table with a summary line.  Throws FormatError when the
/// document does not have the report shape.
std::string render_report_text(const std::string& report_json);

/// Scans a report document and returns true when every non-skipped entry
/// passes.  Throws FormatError on malformed documents.
bool report_all_passed(const std::string& report_json);

} // namespace algmech
