// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Indented lines under each verdict are diagnostics.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dfock/sweep.hpp"
#include "oracles.hpp"

using namespace dfock;
namespace fs = std::filesystem;

namespace {

// Tolerances, fixed here and nowhere else.
constexpr double kAlgebraTol = 1e-10;
constexpr double kSpectralTol = 1e-10;
constexpr double kOracleTol = 1e-10;
constexpr double kLaguerreTol = 1e-10;
constexpr double kCsEigenTol = 1e-8;
constexpr double kCsFidelityTol = 1e-8;
constexpr double kCsPhaseTol = 1e-6;
constexpr double kCsQuadratureTol = 1e-8;
constexpr double kCsMandelTol = 1e-7;
constexpr double kSsResidualTol = 1e-6;
constexpr double kSsProductTol = 1e-6;
constexpr double kIdentityTol = 1e-4;
constexpr double kTemporalTol = 1e-7;
constexpr double kDoublingTol = 1e-8;

constexpr int kSpectralMaxN = 20;
constexpr int kLaguerreMaxN = 30;
constexpr int kIdentityCutoff = 128;
constexpr double kIdentityRadius = 6.0;
constexpr int kIdentityGrid = 128;
constexpr int kIdentityCheck = 8;

const std::vector<cplx> kAlphas{{0.8, 0.0}, {0.0, 0.8}, {0.5, 0.5}, {-0.3, 0.0}, {1.2, -0.4}};
const std::vector<cplx> kEtas{{0.3, 0.0}, {0.8, 0.0}};

// 5 x 5 over [-1, 1] x [-2, 2]
std::vector<DeformationParams> standard_grid() {
    std::vector<DeformationParams> g;
    for (double l1 : SweepRange{-1.0, 1.0, 5}.values()) {
        for (double l2 : SweepRange{-2.0, 2.0, 5}.values()) g.push_back({l1, l2});
    }
    return g;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (notes.size() < 12) notes.push_back("fail: " + what);
        }
    }
    void note(std::string s) { notes.push_back(std::move(s)); }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string where(const DeformationParams& p) { return to_string(p); }

// ---------------------------------------------------------------------------

Outcome algebra() {
    Outcome o;
    double worst = 0.0;
    const int cutoff = kDefaultCutoff;
    const int interior = cutoff - kDefaultGuardBand;
    const CMatrix id = CMatrix::Identity(cutoff + 1, cutoff + 1);
    for (const auto& p : standard_grid()) {
        const CMatrix a = build_operator(OperatorLabel::A, p, cutoff).entries;
        const CMatrix ad = build_operator(OperatorLabel::ADAG_DEF, p, cutoff).entries;
        const CMatrix h = build_operator(OperatorLabel::HAMILTONIAN_DEF, p, cutoff).entries;
        const double r[4] = {interior_max_abs(commutator(a, ad) - id, interior),
                             interior_max_abs(commutator(h, ad) - ad, interior),
                             interior_max_abs(commutator(h, a) + a, interior),
                             interior_max_abs(commutator(CMatrix(a * ad), CMatrix(ad * a)), interior)};
        for (double v : r) {
            worst = std::max(worst, v);
            o.require(v <= kAlgebraTol, "commutator residual " + fmt(v) + " at " + where(p));
        }
    }
    o.note("max residual " + fmt(worst));
    return o;
}

Outcome spectral() {
    Outcome o;
    double worst = 0.0;
    for (const auto& p : standard_grid()) {
        const DeformedBasis b = DeformedBasis::build(p);
        const CMatrix h = build_operator(OperatorLabel::HAMILTONIAN_DEF, p, b.cutoff()).entries;
        for (int n = 0; n <= kSpectralMaxN; ++n) {
            const CVector col = b.column(n);
            const double res = (h * col - (n + 0.5) * col).norm();
            worst = std::max(worst, res);
            o.require(res <= kSpectralTol, "n=" + std::to_string(n) + " residual " + fmt(res) + " at " + where(p));
        }
    }
    o.note("max residual " + fmt(worst));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    double worst_col = 0.0, worst_ip = 0.0;
    for (const auto& p : standard_grid()) {
        const DeformedBasis b = DeformedBasis::build(p);
        for (int n = 0; n <= kSpectralMaxN; ++n) {
            const double d = (basis_column(n, p).coeffs - basis_column_oracle(n, p).coeffs).cwiseAbs().maxCoeff();
            worst_col = std::max(worst_col, d);
            o.require(d <= kOracleTol, "column n=" + std::to_string(n) + " diff " + fmt(d) + " at " + where(p));
            for (int m = 0; m <= kSpectralMaxN; ++m) {
                const double e = std::abs(inner_product(m, n, p) - b.column(m).dot(b.column(n)).real());
                worst_ip = std::max(worst_ip, e);
                o.require(e <= kOracleTol, "inner product diff " + fmt(e) + " at " + where(p));
            }
        }
    }
    o.note("max column diff " + fmt(worst_col) + ", max inner-product diff " + fmt(worst_ip));
    return o;
}

Outcome laguerre() {
    Outcome o;
    double worst = 0.0;
    for (double lam : {0.5, 1.0, 2.0, 5.0}) {
        for (int n = 0; n <= kLaguerreMaxN; ++n) {
            const double lag = static_cast<double>(oracle::laguerre(n, -static_cast<long double>(lam) * lam));
            const double d = std::abs(xi(n, {0.0, lam}) * std::sqrt(lag) - 1.0);
            worst = std::max(worst, d);
            o.require(d <= kLaguerreTol, "n=" + std::to_string(n) + " lambda=" + fmt(lam) + " diff " + fmt(d));
        }
    }
    o.note("max deviation " + fmt(worst));
    return o;
}

Outcome coherent_suite() {
    Outcome o;
    double w_eig = 0.0, w_fid = 0.0, w_phase = 0.0, w_quad = 0.0, w_q = 0.0, w_Q = 0.0;
    int undefined_Q = 0;
    for (const auto& p : standard_grid()) {
        const DeformedBasis b = DeformedBasis::build(p);
        for (const cplx alpha : kAlphas) {
            const std::string at = " alpha=" + fmt(alpha.real()) + "," + fmt(alpha.imag()) + " " + where(p);
            const DeformedState s = build_coherent(alpha, b);
            const double eig = coherent_eigen_residual(s);
            const PhaseIdentityResult ph = phase_identity_check(alpha, b);
            const QuadratureVariances qv = quadrature_variances(s, b, EvalMode::EXACT);
            const double q = mandel_q(s, b, {EvalMode::EXACT, MomentNormalization::RAW});
            w_eig = std::max(w_eig, eig);
            w_fid = std::max(w_fid, std::abs(ph.fidelity - 1.0));
            w_phase = std::max(w_phase, ph.phase_residual);
            w_quad = std::max({w_quad, std::abs(qv.dx2 - 0.5), std::abs(qv.dp2 - 0.5)});
            w_q = std::max(w_q, std::abs(q));
            o.require(eig <= kCsEigenTol, "eigen residual " + fmt(eig) + at);
            o.require(std::abs(ph.fidelity - 1.0) <= kCsFidelityTol, "fidelity " + fmt(ph.fidelity) + at);
            o.require(ph.phase_residual <= kCsPhaseTol, "phase residual " + fmt(ph.phase_residual) + at);
            o.require(std::abs(qv.dx2 - 0.5) <= kCsQuadratureTol && std::abs(qv.dp2 - 0.5) <= kCsQuadratureTol,
                      "(dx2, dp2) = (" + fmt(qv.dx2) + ", " + fmt(qv.dp2) + ")" + at);
            o.require(std::abs(q) <= kCsMandelTol, "q = " + fmt(q) + at);
            try {
                const double Q = mandel_Q(s, b, EvalMode::EXACT).value;
                w_Q = std::max(w_Q, std::abs(Q));
                o.require(std::abs(Q) <= kCsMandelTol, "Q = " + fmt(Q) + at);
            } catch (const DomainError&) {
                ++undefined_Q;
                o.require(false, "Q undefined (zero real mean)" + at);
            }
        }
    }
    o.note("max eigen " + fmt(w_eig) + ", |fid-1| " + fmt(w_fid) + ", phase " + fmt(w_phase) + ", quadrature " +
           fmt(w_quad) + ", |q| " + fmt(w_q) + ", |Q| " + fmt(w_Q) + ", Q undefined at " +
           std::to_string(undefined_Q) + " points");
    return o;
}

Outcome squeezed_suite() {
    Outcome o;
    const TruncationSettings wide{kSqueezedPresetCutoff, kDefaultGuardBand, kDefaultTailTol};
    std::map<double, int> converged, within;
    const auto grid = standard_grid();
    for (const auto& p : grid) {
        const DeformedBasis b = DeformedBasis::build(p, wide);
        for (const cplx eta : kEtas) {
            const std::string at = " eta=" + fmt(eta.real()) + " " + where(p);
            const DeformedState s = build_squeezed(eta, b, TruncationPolicy::Report);
            if (!s.truncation.converged()) {
                o.require(false, "series not converged at cutoff " + std::to_string(wide.cutoff) + ", tail " +
                                     fmt(s.truncation.tail_mass) + at);
                continue;
            }
            ++converged[eta.real()];
            const double r = squeezed_defining_residual(s);
            o.require(r <= kSsResidualTol, "defining residual " + fmt(r) + at);
            if (r <= kSsResidualTol) ++within[eta.real()];
        }
    }
    for (const cplx eta : kEtas) {
        o.note("eta=" + fmt(eta.real()) + ": " + std::to_string(converged[eta.real()]) + "/" +
               std::to_string(grid.size()) + " converged, " + std::to_string(within[eta.real()]) + " within tolerance");
        const DeformedState s = build_squeezed(eta, DeformationParams{}, wide);
        const QuadratureVariances qv = quadrature_variances(s, EvalMode::EXACT);
        o.require(std::abs(qv.dx2 * qv.dp2 - 0.25) <= kSsProductTol, "lambda=0 dx2*dp2 = " + fmt(qv.dx2 * qv.dp2));
        o.require(std::min(qv.dx2, qv.dp2) < 0.5, "lambda=0 min quadrature " + fmt(std::min(qv.dx2, qv.dp2)));
        o.note("eta=" + fmt(eta.real()) + " at lambda=0: dx2=" + fmt(qv.dx2) + " dp2=" + fmt(qv.dp2));
    }
    return o;
}

Outcome identity_resolution() {
    Outcome o;
    const TruncationSettings settings{kIdentityCutoff, kDefaultGuardBand, kDefaultTailTol};
    for (const DeformationParams p : {DeformationParams{0.0, 0.0}, DeformationParams{0.3, 0.7}}) {
        const double r = identity_resolution_residual(p, kIdentityRadius, kIdentityGrid, settings, kIdentityCheck);
        o.require(r <= kIdentityTol, "residual " + fmt(r) + " at " + where(p));
        o.note("residual " + fmt(r) + " at " + where(p));
    }
    return o;
}

Outcome temporal_stability() {
    Outcome o;
    double worst = 0.0;
    for (const auto& p : standard_grid()) {
        const DeformedBasis b = DeformedBasis::build(p);
        const OperatorMatrix h = build_operator(OperatorLabel::HAMILTONIAN_DEF, p, b.cutoff());
        for (double t : {0.5, 1.0, 2.0 * std::numbers::pi}) {
            const CMatrix u = matrix_exponential(CMatrix(cplx(0.0, -t) * h.entries));
            for (const cplx alpha : kAlphas) {
                const DeformedState s = build_coherent(alpha, b);
                const double d = (evolve_coherent(s, b, t).fock_vector.coeffs - u * s.fock_vector.coeffs).norm();
                worst = std::max(worst, d);
                o.require(d <= kTemporalTol, "t=" + fmt(t) + " diff " + fmt(d) + " at " + where(p));
            }
        }
    }
    o.note("max deviation " + fmt(worst));
    return o;
}

Outcome truncation_robustness() {
    Outcome o;
    const TruncationSettings base{kDefaultCutoff, kDefaultGuardBand, kDefaultTailTol};
    const TruncationSettings doubled{2 * kDefaultCutoff, kDefaultGuardBand, kDefaultTailTol};
    int compared = 0, skipped = 0, skipped_diagonal = 0;
    double worst = 0.0;
    auto compare = [&](const StatisticsReport& a, const StatisticsReport& b, const std::string& at) {
        const std::pair<double, double> pairs[] = {{a.mean_n, b.mean_n}, {a.q_mandel, b.q_mandel},
                                                   {a.Q_mandel, b.Q_mandel}, {a.dx2, b.dx2}, {a.dp2, b.dp2}};
        for (auto [x, y] : pairs) {
            if (std::isnan(x) || std::isnan(y)) {
                o.require(std::isnan(x) && std::isnan(y), "defined at one cutoff only" + at);
                continue;
            }
            const double d = std::abs(x - y) / std::max(1.0, std::abs(x));
            worst = std::max(worst, d);
            o.require(d < kDoublingTol, "relative change " + fmt(d) + at);
        }
    };
    for (const auto& p : standard_grid()) {
        const DeformedBasis b64 = DeformedBasis::build(p, base);
        const DeformedBasis b128 = DeformedBasis::build(p, doubled);
        std::vector<std::pair<DeformedState, DeformedState>> states;
        for (const cplx alpha : kAlphas) {
            states.emplace_back(build_coherent(alpha, b64, TruncationPolicy::Report),
                                build_coherent(alpha, b128, TruncationPolicy::Report));
        }
        for (const cplx eta : kEtas) {
            states.emplace_back(build_squeezed(eta, b64, TruncationPolicy::Report),
                                build_squeezed(eta, b128, TruncationPolicy::Report));
        }
        for (const auto& [s64, s128] : states) {
            const std::string at = " " + std::string(to_string(s64.kind)) + " label=" + fmt(s64.label.real()) + "," +
                                   fmt(s64.label.imag()) + " " + where(p);
            if (!s64.truncation.converged()) {
                ++skipped;  // not reported at cutoff 64
                continue;
            }
            o.require(s128.truncation.converged(), "converged at 64 but not at 128" + at);
            for (auto mode : {EvalMode::EXACT, EvalMode::BASIS_DIAGONAL}) {
                const StatisticsOptions opts{mode, MomentNormalization::RAW};
                const StatisticsReport r64 = compute_statistics(s64, b64, opts);
                const StatisticsReport r128 = compute_statistics(s128, b128, opts);
                const std::string tag = at + " " + std::string(to_string(mode));
                if (!r64.converged()) {
                    ++skipped_diagonal;  // basis-index tail too heavy at 64, so not reported
                    continue;
                }
                o.require(r128.converged(), "reported at 64 but not at 128" + tag);
                compare(r64, r128, tag);
                ++compared;
            }
        }
    }
    o.note(std::to_string(compared) + " (state, mode) pairs compared; not reported at cutoff 64: " +
           std::to_string(skipped) + " states (series not converged), " + std::to_string(skipped_diagonal) +
           " diagonal evaluations (basis-index tail); max relative change " + fmt(worst));
    return o;
}

// ---------------------------------------------------------------------------
// CLI-driven checks: determinism and figure trends share the same runs.

struct CsvRow {
    double fixed = 0.0, sweep = 0.0, value = 0.0;
};

std::vector<CsvRow> parse_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 14) continue;
        auto num = [](const std::string& s) { return s == "NA" ? std::nan("") : std::stod(s); };
        rows.push_back({num(f[6]), num(f[8]), num(f[10])});
    }
    return rows;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct FigureRuns {
    std::map<int, std::string> csv;
    Outcome determinism;
};

FigureRuns run_figures(const fs::path& dir) {
    FigureRuns runs;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    for (int id = 1; id <= kFigureCount; ++id) {
        std::string first;
        for (int rep = 0; rep < 2; ++rep) {
            // first run single-threaded, second with all cores
            const fs::path out = dir / ("figure" + std::to_string(id) + "_" + std::to_string(rep) + ".csv");
            const std::string cmd = std::string("'") + DFOCK_BINARY + "' --threads " +
                                    std::to_string(rep == 0 ? 1u : hw) + " figure " + std::to_string(id) +
                                    " --out '" + out.string() + "'";
            const int status = std::system(cmd.c_str());
            const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
            runs.determinism.require(ok, "figure " + std::to_string(id) + " exited abnormally");
            const std::string text = slurp(out);
            if (rep == 0) {
                first = text;
            } else {
                runs.determinism.require(!text.empty() && text == first,
                                         "figure " + std::to_string(id) + " output differs between runs");
            }
        }
        runs.csv[id] = first;
    }
    runs.determinism.note("8 figures run twice (1 thread, then " + std::to_string(hw) + " threads)");
    return runs;
}

std::map<double, std::vector<CsvRow>> curves(const std::string& text) {
    std::map<double, std::vector<CsvRow>> by_fixed;
    for (const auto& r : parse_csv(text)) by_fixed[r.fixed].push_back(r);
    return by_fixed;
}

Outcome figure_trends(const FigureRuns& runs) {
    Outcome o;
    // Figs 1-2: each curve ends closer to 0.5 than it starts
    for (int id : {1, 2}) {
        for (const auto& [fixed, rows] : curves(runs.csv.at(id))) {
            const double lo = rows.front().value, hi = rows.back().value;
            const bool ok = std::isfinite(lo) && std::isfinite(hi) && std::abs(hi - 0.5) < std::abs(lo - 0.5);
            o.require(ok, "fig " + std::to_string(id) + " lambda2=" + fmt(fixed) + ": value(-1)=" + fmt(lo) +
                              " value(1)=" + fmt(hi));
            o.note("fig " + std::to_string(id) + " lambda2=" + fmt(fixed) + ": |v(-1)-0.5|=" + fmt(std::abs(lo - 0.5)) +
                   " |v(1)-0.5|=" + fmt(std::abs(hi - 0.5)));
        }
    }
    // Fig 4: some SS dp2 below 0.5
    {
        int finite = 0;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& r : parse_csv(runs.csv.at(4))) {
            if (!std::isfinite(r.value)) continue;
            ++finite;
            lowest = std::min(lowest, r.value);
        }
        o.require(lowest < 0.5, "fig 4 no dp2 below 0.5 (min " + fmt(lowest) + ")");
        o.note("fig 4: " + std::to_string(finite) + " converged points, min dp2 " + fmt(lowest));
    }
    // Figs 5-8: negative somewhere
    for (int id : {5, 6, 7, 8}) {
        int finite = 0;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& r : parse_csv(runs.csv.at(id))) {
            if (!std::isfinite(r.value)) continue;
            ++finite;
            lowest = std::min(lowest, r.value);
        }
        o.require(lowest < 0.0, "fig " + std::to_string(id) + " never negative (min " + fmt(lowest) + ")");
        o.note("fig " + std::to_string(id) + ": " + std::to_string(finite) + " converged points, min " + fmt(lowest));
    }
    return o;
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = fs::temp_directory_path() / ("dfock_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    int failed = 0;
    auto report = [&](const char* name, const Outcome& o) {
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << '\n';
        for (const auto& n : o.notes) std::cout << "    " << n << '\n';
        std::cout.flush();
        if (!o.pass) ++failed;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            Outcome o;
            o.require(false, std::string("exception: ") + e.what());
            return o;
        }
    };

    report("algebra suite", guarded(algebra));
    report("spectral suite", guarded(spectral));
    report("oracle equivalence", guarded(oracle_equivalence));
    report("laguerre limit", guarded(laguerre));
    report("coherent-state suite", guarded(coherent_suite));
    report("squeezed-state suite", guarded(squeezed_suite));
    report("identity resolution", guarded(identity_resolution));
    report("temporal stability", guarded(temporal_stability));
    FigureRuns runs;
    try {
        runs = run_figures(dir);
    } catch (const std::exception& e) {
        runs.determinism.require(false, std::string("exception: ") + e.what());
    }
    report("qualitative figure trends", guarded([&] { return figure_trends(runs); }));
    report("truncation robustness", guarded(truncation_robustness));
    report("determinism", runs.determinism);

    std::error_code ec;
    fs::remove_all(dir, ec);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << " (" << fmt(secs) << " s)\n";
    return failed == 0 ? 0 : 1;
}
