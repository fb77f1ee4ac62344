#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "algmech/catalog.hpp"
#include "algmech/dynamics.hpp"
#include "algmech/errors.hpp"
#include "algmech/mechanics.hpp"
#include "algmech/spec_io.hpp"
#include "algmech/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitAborted = 2;
constexpr int kExitIo = 3;
constexpr int kExitSpec = 4;

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("ALGMECH_SEED");
    if (!raw || !*raw) return std::nullopt;
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(raw, raw + std::string(raw).size(), seed);
    if (ec != std::errc() || *ptr != '\0') {
        std::cerr << "warning: ignoring unparsable ALGMECH_SEED value\n";
        return std::nullopt;
    }
    return seed;
}

void print_warnings(const algmech::RunSpec& spec) {
    for (const std::string& w : spec.warnings) std::cerr << "warning: " << w << "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing output file: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_simulate(const std::string& config, const std::string& out_path, bool strict) {
    using namespace algmech;
    const RunSpec spec = load_spec(config, LoadOptions{strict, seed_from_env()});
    print_warnings(spec);
    if (!spec.has_payload) throw SchemaError("simulate requires a payload", "payload");
    if (!spec.has_initial) throw SchemaError("simulate requires an initial state", "initial");
    if (!spec.has_integrate) throw SchemaError("simulate requires an integrate block", "integrate");

    const MechanicalSystem& sys = spec.system;
    const bool lagrangian = sys.payload != PayloadKind::Connection;

    Trajectory traj;
    try {
        const OdeField field =
            lagrangian ? synthesize_semispray_ode(
                             sys, canonical_semispray(sys.lagrangian, sys.gh, sys.algebroid))
                       : synthesize_spray_ode(sys, sys.connection);
        traj = integrate_rk4(field, spec.x0, spec.y0, 0.0, spec.t_end, spec.dt);
    } catch (const SingularHessian& e) {
        traj = Trajectory{};
        traj.m = sys.algebroid.m;
        traj.r = sys.algebroid.r;
        traj.aborted = true;
        traj.abort_reason = e.what();
    } catch (const DomainError& e) {
        traj = Trajectory{};
        traj.m = sys.algebroid.m;
        traj.r = sys.algebroid.r;
        traj.aborted = true;
        traj.abort_reason = e.what();
    }

    for (const auto& [name, expr] : spec.monitors) attach_monitor(traj, name, expr);

    std::optional<std::vector<double>> energy_column;
    if (lagrangian) {
        const SmoothMap e_map = energy_map(sys.lagrangian, sys.gh, sys.algebroid);
        energy_column.emplace();
        energy_column->reserve(traj.rows());
        for (const auto& state : traj.states) energy_column->push_back(e_map.value(state)[0]);
    }

    write_file(out_path,
               trajectory_csv(traj, energy_column ? &*energy_column : nullptr));
    if (traj.aborted) {
        std::cerr << "integration aborted: " << traj.abort_reason << "\n";
        return kExitAborted;
    }
    return kExitOk;
}

int cmd_verify(const std::string& config, const std::string& out_path, bool strict,
               const std::optional<int>& samples, const std::optional<double>& tolerance,
               const std::string& transition) {
    using namespace algmech;
    const RunSpec spec = load_spec(config, LoadOptions{strict, seed_from_env()});
    print_warnings(spec);

    VerifyOptions opt;
    opt.samples = samples;
    opt.tolerance = tolerance;
    opt.transition = transition;
    const std::vector<CheckResult> results = run_verification(spec, opt);
    write_file(out_path, render_report_json(results));
    return all_passed(results) ? kExitOk : kExitVerifyFailed;
}

int cmd_report(const std::string& in_path, const std::string& format) {
    using namespace algmech;
    if (format != "json" && format != "text")
        throw FormatError("unknown report format: " + format);
    const std::string doc = read_file(in_path);
    if (format == "json") {
        const bool ok = report_all_passed(doc); // validates the document shape
        std::cout << doc;
        return ok ? kExitOk : kExitVerifyFailed;
    }
    const std::string text = render_report_text(doc);
    std::cout << text;
    return report_all_passed(doc) ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrangian mechanics on generalized Lie algebroids: integrate systems "
                 "described in JSON and verify their structural identities"};
    app.require_subcommand(1);

    std::string sim_config, sim_out;
    bool sim_strict = false;
    CLI::App* sim = app.add_subcommand("simulate", "Integrate a system and write a CSV trajectory");
    sim->add_option("--config", sim_config, "system description (JSON)")->required();
    sim->add_option("--out", sim_out, "output CSV path")->required();
    sim->add_flag("--strict", sim_strict, "reject unknown fields and axiom violations");

    std::string ver_config, ver_out, ver_transition;
    bool ver_strict = false;
    std::optional<int> ver_samples;
    std::optional<double> ver_tol;
    CLI::App* ver =
        app.add_subcommand("verify", "Run the verification battery and write a JSON report");
    ver->add_option("--config", ver_config, "system description (JSON)")->required();
    ver->add_option("--out", ver_out, "output report path (JSON)")->required();
    ver->add_option("--samples", ver_samples, "override the sample count");
    ver->add_option("--tol", ver_tol, "override every per-check tolerance");
    ver->add_option("--transition", ver_transition,
                    "also test the transformation laws against this chart transition "
                    "(identity, linear_scale, rotation)");
    ver->add_flag("--strict", ver_strict, "reject unknown fields and axiom violations");

    std::string rep_in, rep_format = "text";
    CLI::App* rep = app.add_subcommand("report", "Render a verification report");
    rep->add_option("--in", rep_in, "report file produced by verify")->required();
    rep->add_option("--format", rep_format, "output format: json or text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSpec;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_strict);
        if (ver->parsed())
            return cmd_verify(ver_config, ver_out, ver_strict, ver_samples, ver_tol,
                              ver_transition);
        if (rep->parsed()) return cmd_report(rep_in, rep_format);
    } catch (const algmech::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const algmech::SyntaxError& e) {
        std::cerr << "error: " << e.what() << " (offset " << e.offset << ")\n";
        return kExitSpec;
    } catch (const algmech::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const algmech::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const algmech::UnknownId& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const algmech::BadParams& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const algmech::NonFiniteState& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAborted;
    } catch (const algmech::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
