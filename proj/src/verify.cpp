#include "algmech/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "algmech/catalog.hpp"
#include "algmech/dynamics.hpp"
#include "algmech/errors.hpp"
#include "algmech/mechanics.hpp"
#include "algmech/prolongation.hpp"

namespace algmech {

namespace {

using nlohmann::ordered_json;

CheckResult measured(std::string name, double resid, int samples, double tol) {
    CheckResult r;
    r.check = std::move(name);
    r.max_residual = resid;
    r.samples = samples;
    r.tolerance = tol;
    r.pass = resid <= tol;
    return r;
}

CheckResult skipped_check(std::string name, std::string why) {
    CheckResult r;
    r.check = std::move(name);
    r.skipped = true;
    r.note = std::move(why);
    return r;
}

} // namespace

std::vector<CheckResult> run_verification(const RunSpec& spec, const VerifyOptions& opt) {
    const MechanicalSystem& sys = spec.system;
    const GeneralizedLieAlgebroid& A = sys.algebroid;
    SamplePlan plan = spec.plan;
    if (opt.samples) plan.count = *opt.samples;
    const auto tol = [&opt](double dflt) { return opt.tolerance.value_or(dflt); };

    std::vector<CheckResult> out;
    out.push_back(measured("antisymmetry", check_antisymmetry(A, plan), plan.count, tol(1e-8)));
    out.push_back(measured("jacobi", check_jacobi(A, plan), plan.count, tol(1e-8)));
    out.push_back(measured("anchor_compatibility", check_anchor_compatibility(A, plan),
                           plan.count, tol(1e-8)));
    out.push_back(
        measured("morphism_inverse", check_gh_inverse(sys.gh, A.r, plan), plan.count, tol(1e-8)));

    const bool lagrange = spec.has_payload && (sys.payload == PayloadKind::Lagrange ||
                                               sys.payload == PayloadKind::Finsler);
    const bool conn_payload = spec.has_payload && sys.payload == PayloadKind::Connection;

    // The structural checks need a connection; source it from the payload
    // when one is available, otherwise fall back to the zero connection
    // (every adapted-frame identity is connection-parametric).
    std::optional<SemisprayField> S;
    RhoEtaConnection conn = RhoEtaConnection::zero(A.m, A.r);
    if (lagrange) {
        S = canonical_semispray(sys.lagrangian, sys.gh, A);
        conn = connection_from_semispray(*S, sys.gh, A);
    } else if (conn_payload) {
        conn = sys.connection;
        S = canonical_spray(conn, sys.gh, A);
    }

    const Prolongation P = Prolongation::over(A);
    for (const auto& [name, resid] : structure_identity_suite(P, conn, sys.gh, plan))
        out.push_back(measured(name, resid, plan.count, tol(1e-8)));

    if (lagrange)
        out.push_back(measured("cartan_equation",
                               verify_cartan_equation(*S, sys.lagrangian, sys.gh, A, plan),
                               plan.count, tol(1e-7)));
    else
        out.push_back(skipped_check("cartan_equation", "requires a Lagrangian payload"));

    if (S)
        out.push_back(measured("second_order_property",
                               check_semispray_property(*S, sys.gh, A, plan), plan.count,
                               tol(1e-12)));
    else
        out.push_back(
            skipped_check("second_order_property", "requires a Lagrangian or connection payload"));

    {
        const RhoEtaConnection ring = ring_connection(conn, sys.external_force, sys.gh, A);
        double worst = 0.0;
        for (const auto& s : plan.draw()) {
            const auto assembled = ring_curvature(conn, sys.external_force, sys.gh, A, s);
            const auto direct = curvature(P, ring, s);
            for (std::size_t k = 0; k < assembled.size(); ++k)
                worst = std::max(worst, std::abs(assembled[k] - direct[k]));
        }
        out.push_back(measured("curvature_equivalence", worst, plan.count, tol(1e-7)));
    }

    if (S && spec.has_initial) {
        const double horizon = std::min(1.0, spec.t_end);
        if (horizon > 0.0) {
            const OdeField f = synthesize_semispray_ode(sys, *S);
            const Trajectory traj = integrate_rk4(f, spec.x0, spec.y0, 0.0, horizon, spec.dt);
            if (traj.aborted) {
                out.push_back(skipped_check("transport_equivalence",
                                            "integration aborted: " + traj.abort_reason));
            } else {
                const Trajectory u = transport_along(conn, sys.gh, A, traj, spec.y0);
                double worst = 0.0;
                for (std::size_t k = 0; k < traj.rows(); ++k)
                    for (int a = 0; a < A.r; ++a)
                        worst = std::max(worst, std::abs(u.states[k][static_cast<std::size_t>(
                                                             A.m + a)] -
                                                         traj.states[k][static_cast<std::size_t>(
                                                             A.m + a)]));
                out.push_back(measured("transport_equivalence", worst,
                                       static_cast<int>(traj.rows()), tol(1e-6)));
            }
        } else {
            out.push_back(skipped_check("transport_equivalence", "zero-length horizon"));
        }
    } else {
        out.push_back(skipped_check("transport_equivalence",
                                    "requires a payload and an initial state"));
    }

    if (!opt.transition.empty()) {
        const TransitionData trans =
            builtin_transition(opt.transition, opt.transition_params, A.m, A.r);
        const GHMorphism* gh = sys.gh.is_identity() ? nullptr : &sys.gh;
        const SmoothMap* avert = S ? &S->avert : nullptr;
        const TransformationReport rep =
            verify_transformation_laws(A, &conn, avert, gh, trans, plan);
        out.push_back(
            measured("transformation_anchor", rep.anchor_consistency, plan.count, tol(1e-9)));
        if (rep.connection_law)
            out.push_back(measured("transformation_connection", *rep.connection_law, plan.count,
                                   tol(1e-9)));
        else
            out.push_back(skipped_check("transformation_connection", "no connection supplied"));
        if (rep.semispray_law)
            out.push_back(
                measured("transformation_semispray", *rep.semispray_law, plan.count, tol(1e-8)));
        else
            out.push_back(skipped_check("transformation_semispray", "no vertical field supplied"));
    }

    return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.skipped || r.pass; });
}

std::string render_report_json(const std::vector<CheckResult>& results) {
    ordered_json doc = ordered_json::array();
    for (const CheckResult& r : results) {
        ordered_json row;
        row["check"] = r.check;
        if (r.skipped) {
            row["skipped"] = true;
            row["note"] = r.note;
        } else {
            row["max_residual"] = r.max_residual;
            row["samples"] = r.samples;
            row["tolerance"] = r.tolerance;
            row["pass"] = r.pass;
        }
        doc.push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
}

namespace {

ordered_json parse_report(const std::string& report_json) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(report_json);
    } catch (const ordered_json::parse_error& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError("report must be a JSON array of checks");
    for (const auto& row : doc) {
        if (!row.is_object() || !row.contains("check") || !row["check"].is_string())
            throw FormatError("every report entry needs a \"check\" name");
        if (row.value("skipped", false)) continue;
        if (!row.contains("max_residual") || !row["max_residual"].is_number() ||
            !row.contains("tolerance") || !row["tolerance"].is_number() ||
            !row.contains("pass") || !row["pass"].is_boolean())
            throw FormatError("entry \"" + row["check"].get<std::string>() +
                              "\" is missing residual, tolerance or pass fields");
    }
    return doc;
}

} // namespace

std::string render_report_text(const std::string& report_json) {
    const ordered_json doc = parse_report(report_json);

    std::size_t name_width = 5;
    for (const auto& row : doc)
        name_width = std::max(name_width, row["check"].get<std::string>().size());

    std::ostringstream out;
    int passed = 0, failed = 0, skipped = 0;
    for (const auto& row : doc) {
        out << std::left << std::setw(static_cast<int>(name_width) + 2)
            << row["check"].get<std::string>();
        if (row.value("skipped", false)) {
            ++skipped;
            out << "skip";
            const std::string note = row.value("note", std::string());
            if (!note.empty()) out << "  (" << note << ")";
            out << "\n";
            continue;
        }
        const bool ok = row["pass"].get<bool>();
        (ok ? passed : failed) += 1;
        out << (ok ? "pass" : "FAIL") << "  residual " << std::scientific
            << std::setprecision(3) << row["max_residual"].get<double>() << "  tolerance "
            << row["tolerance"].get<double>();
        if (row.contains("samples") && row["samples"].is_number())
            out << std::defaultfloat << "  samples " << row["samples"].get<long long>();
        out << "\n";
    }
    out << std::defaultfloat << doc.size() << " checks: " << passed << " passed, " << failed
        << " failed, " << skipped << " skipped\n";
    return out.str();
}

bool report_all_passed(const std::string& report_json) {
    const ordered_json doc = parse_report(report_json);
    for (const auto& row : doc) {
        if (row.value("skipped", false)) continue;
        if (!row["pass"].get<bool>()) return false;
    }
    return true;
}

} // namespace algmech
