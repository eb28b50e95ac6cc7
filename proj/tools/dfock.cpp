// dfock: figure presets, custom sweeps and validation suites.
//
// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical-domain error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfock/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw dfock::UsageError("cannot parse " + what + " value '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw dfock::UsageError("cannot parse " + what + " value '" + s + "'");
    }
}

dfock::cplx parse_label(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() == 1) return {parse_double(parts[0], "label"), 0.0};
    if (parts.size() == 2) return {parse_double(parts[0], "label"), parse_double(parts[1], "label")};
    throw dfock::UsageError("label must be RE or RE,IM, got '" + s + "'");
}

dfock::SweepRange parse_range(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw dfock::UsageError("range must be LO:HI:STEPS, got '" + s + "'");
    dfock::SweepRange r{parse_double(parts[0], "range"), parse_double(parts[1], "range"), parse_int(parts[2], "range")};
    r.validate();
    return r;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& p : split(s, ',')) out.push_back(parse_double(p, "list"));
    if (out.empty()) throw dfock::UsageError("empty value list");
    return out;
}

struct OutputOptions {
    std::string out;
    std::string format = "csv";
};

void emit_rows(const std::vector<dfock::SweepRow>& rows, const OutputOptions& o) {
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out, std::ios::binary);
        if (!file) throw dfock::UsageError("cannot open output file '" + o.out + "'");
    }
    std::ostream& os = o.out.empty() ? std::cout : file;
    if (o.format == "json") {
        dfock::write_json(os, rows);
    } else {
        dfock::write_csv(os, rows);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deformed Fock-space states: figure sweeps and validation suites"};
    app.set_config("--config", "", "key=value file mirroring the flags; flags on the command line win");
    app.require_subcommand(1);

    int threads = 1;
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);

    // figure
    auto* fig = app.add_subcommand("figure", "run one of the eight figure presets");
    int figure_id = 1;
    std::string fig_mode = "diagonal";
    int fig_cutoff = 0;
    int fig_steps = 0;
    OutputOptions fig_out;
    fig->add_option("id", figure_id, "figure number 1..8")->required()->check(CLI::Range(1, dfock::kFigureCount));
    fig->add_option("--mode", fig_mode, "exact or diagonal")->check(CLI::IsMember({"exact", "diagonal"}));
    fig->add_option("--cutoff", fig_cutoff, "Fock-space cutoff (default: preset)");
    fig->add_option("--steps", fig_steps, "sweep points (default: preset)");
    fig->add_option("--out", fig_out.out, "output file (default: stdout)");
    fig->add_option("--format", fig_out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // sweep
    auto* sw = app.add_subcommand("sweep", "custom single-axis sweep");
    std::string sw_kind = "cs", sw_label, sw_axis = "l1", sw_range, sw_fixed, sw_obs, sw_mode = "diagonal";
    std::string sw_moments = "raw";
    int sw_cutoff = dfock::kDefaultCutoff;
    int sw_guard = dfock::kDefaultGuardBand;
    OutputOptions sw_out;
    sw->add_option("--kind", sw_kind, "cs or ss")->check(CLI::IsMember({"cs", "ss"}));
    sw->add_option("--label", sw_label, "alpha or eta as RE[,IM]")->required();
    sw->add_option("--axis", sw_axis, "l1 or l2")->check(CLI::IsMember({"l1", "l2"}));
    sw->add_option("--range", sw_range, "LO:HI:STEPS (use --range=LO:HI:STEPS for negative LO)")->required();
    sw->add_option("--fixed", sw_fixed, "values of the other parameter, V[,V...]")->required();
    sw->add_option("--observable", sw_obs, "dx2, dp2, Q or q")->required();
    sw->add_option("--mode", sw_mode, "exact or diagonal")->check(CLI::IsMember({"exact", "diagonal"}));
    sw->add_option("--q-moments", sw_moments, "raw or normalized moments for q in diagonal mode")
        ->check(CLI::IsMember({"raw", "normalized"}));
    sw->add_option("--cutoff", sw_cutoff, "Fock-space cutoff");
    sw->add_option("--guard", sw_guard, "guard band below the cutoff");
    sw->add_option("--out", sw_out.out, "output file (default: stdout)");
    sw->add_option("--format", sw_out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // validate
    auto* val = app.add_subcommand("validate", "run an invariant suite and report pass/fail per check");
    std::string suite_name, grid;
    std::vector<std::string> alphas, etas;
    int val_cutoff = dfock::kDefaultCutoff;
    int val_ss_cutoff = dfock::kSqueezedPresetCutoff;
    std::string val_out;
    val->add_option("--suite", suite_name, "algebra, basis, states or stats")
        ->required()
        ->check(CLI::IsMember({"algebra", "basis", "states", "stats"}));
    val->add_option("--grid", grid, "lambda1 and lambda2 grids, LO:HI:N,LO:HI:N");
    val->add_option("--alpha", alphas, "coherent labels RE[,IM] (repeatable)");
    val->add_option("--eta", etas, "squeezed labels RE[,IM] (repeatable)");
    val->add_option("--cutoff", val_cutoff, "Fock-space cutoff");
    val->add_option("--ss-cutoff", val_ss_cutoff, "cutoff for squeezed states");
    val->add_option("--out", val_out, "JSON report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fig) {
            dfock::SweepSpec spec = dfock::figure_preset(figure_id, dfock::parse_mode(fig_mode));
            if (fig_cutoff > 0) spec.truncation.cutoff = fig_cutoff;
            if (fig_steps > 0) spec.range.steps = fig_steps;
            emit_rows(dfock::run_sweep(spec, threads), fig_out);
            return kExitOk;
        }
        if (*sw) {
            dfock::SweepSpec spec;
            spec.kind = sw_kind == "cs" ? dfock::StateKind::COHERENT : dfock::StateKind::SQUEEZED;
            spec.label = parse_label(sw_label);
            spec.axis = sw_axis == "l1" ? dfock::SweepAxis::LAMBDA1 : dfock::SweepAxis::LAMBDA2;
            spec.range = parse_range(sw_range);
            spec.fixed_values = parse_list(sw_fixed);
            spec.observable = dfock::parse_observable(sw_obs);
            spec.mode = dfock::parse_mode(sw_mode);
            spec.q_moments = sw_moments == "raw" ? dfock::MomentNormalization::RAW : dfock::MomentNormalization::NORMALIZED;
            spec.truncation.cutoff = sw_cutoff;
            spec.truncation.guard_band = sw_guard;
            if (spec.kind == dfock::StateKind::SQUEEZED && std::abs(spec.label) >= 1.0) {
                throw dfock::DomainError("squeezed label |eta| must be < 1");
            }
            emit_rows(dfock::run_sweep(spec, threads), sw_out);
            return kExitOk;
        }
        if (*val) {
            dfock::ValidateOptions opts;
            if (!grid.empty()) {
                const auto parts = split(grid, ',');
                if (parts.size() != 2) throw dfock::UsageError("grid must be LO:HI:N,LO:HI:N");
                opts.lambda1_grid = parse_range(parts[0]);
                opts.lambda2_grid = parse_range(parts[1]);
            }
            if (!alphas.empty()) {
                opts.alphas.clear();
                for (const auto& a : alphas) opts.alphas.push_back(parse_label(a));
            }
            if (!etas.empty()) {
                opts.etas.clear();
                for (const auto& e : etas) opts.etas.push_back(parse_label(e));
            }
            opts.truncation.cutoff = val_cutoff;
            opts.squeezed_cutoff = val_ss_cutoff;
            const dfock::ValidationReport rep = dfock::run_validate(dfock::parse_suite(suite_name), opts);
            const std::string text = dfock::to_json(rep).dump(2);
            if (val_out.empty()) {
                std::cout << text << '\n';
            } else {
                std::ofstream f(val_out, std::ios::binary);
                if (!f) throw dfock::UsageError("cannot open output file '" + val_out + "'");
                f << text << '\n';
            }
            std::cerr << "suite " << suite_name << ": " << rep.entries.size() << " checks, " << rep.failures()
                      << " failed\n";
            return rep.all_passed() ? kExitOk : kExitValidation;
        }
    } catch (const dfock::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const dfock::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
