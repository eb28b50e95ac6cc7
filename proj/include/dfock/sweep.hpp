#pragma once

// Parameter sweeps behind the eight figure presets, the validation suites, and
// their CSV / JSON writers.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "dfock/deformed_basis.hpp"
#include "dfock/statistics.hpp"

namespace dfock {

enum class SweepAxis { LAMBDA1, LAMBDA2 };
enum class Observable { DX2, DP2, MANDEL_Q, MANDEL_LITTLE_Q };

inline std::string_view param_name(SweepAxis a) { return a == SweepAxis::LAMBDA1 ? "lambda1" : "lambda2"; }
inline SweepAxis other_axis(SweepAxis a) { return a == SweepAxis::LAMBDA1 ? SweepAxis::LAMBDA2 : SweepAxis::LAMBDA1; }

inline std::string_view to_string(Observable o) {
    switch (o) {
    case Observable::DX2: return "dx2";
    case Observable::DP2: return "dp2";
    case Observable::MANDEL_Q: return "Q";
    case Observable::MANDEL_LITTLE_Q: return "q";
    }
    throw UsageError("unknown observable");
}

inline Observable parse_observable(std::string_view s) {
    for (auto o : {Observable::DX2, Observable::DP2, Observable::MANDEL_Q, Observable::MANDEL_LITTLE_Q}) {
        if (to_string(o) == s) return o;
    }
    throw UsageError("unknown observable '" + std::string(s) + "' (expected dx2, dp2, Q or q)");
}

inline EvalMode parse_mode(std::string_view s) {
    if (s == "exact") return EvalMode::EXACT;
    if (s == "diagonal") return EvalMode::BASIS_DIAGONAL;
    throw UsageError("unknown mode '" + std::string(s) + "' (expected exact or diagonal)");
}

struct SweepRange {
    double lo = 0.0;
    double hi = 1.0;
    int steps = 2;

    void validate() const {
        if (!std::isfinite(lo) || !std::isfinite(hi)) throw UsageError("sweep range must be finite");
        if (!(lo < hi)) throw UsageError("sweep range needs lo < hi");
        if (steps < 2) throw UsageError("sweep range needs at least 2 steps");
    }

    /// Evenly spaced points, lo and hi included exactly.
    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(steps));
        const double h = (hi - lo) / (steps - 1);
        for (int i = 0; i < steps; ++i) v[static_cast<std::size_t>(i)] = lo + i * h;
        v.back() = hi;
        return v;
    }
};

struct SweepSpec {
    int figure_id = 0;  // 0 for a custom sweep
    StateKind kind = StateKind::COHERENT;
    cplx label{};
    SweepAxis axis = SweepAxis::LAMBDA1;
    SweepRange range;
    std::vector<double> fixed_values;
    Observable observable = Observable::DX2;
    EvalMode mode = EvalMode::BASIS_DIAGONAL;
    TruncationSettings truncation;
    MomentNormalization q_moments = MomentNormalization::RAW;

    void validate() const {
        range.validate();
        truncation.validate();
        if (fixed_values.empty()) throw UsageError("sweep needs at least one fixed value");
        for (double f : fixed_values) {
            if (!std::isfinite(f)) throw UsageError("fixed values must be finite");
        }
        if (!std::isfinite(label.real()) || !std::isfinite(label.imag())) throw UsageError("state label must be finite");
    }
};

struct SweepRow {
    int figure_id = 0;
    EvalMode mode = EvalMode::BASIS_DIAGONAL;
    StateKind kind = StateKind::COHERENT;
    cplx label{};
    SweepAxis axis = SweepAxis::LAMBDA1;
    double fixed_value = 0.0;
    double sweep_value = 0.0;
    Observable observable = Observable::DX2;
    double value = 0.0;  // NaN when not converged or undefined
    double imag_diagnostic = 0.0;
    double tail_mass = 0.0;
    int cutoff = 0;
};

inline constexpr int kFigureCount = 8;
inline constexpr int kDefaultSweepSteps = 201;
// Diagonal-mode weights over basis indices decay slowly for large lambda2;
// 192 brings every coherent preset point under the tail tolerance.
inline constexpr int kCoherentPresetCutoff = 192;
inline constexpr int kSqueezedPresetCutoff = 256;

/// The eight figure presets. lambda1 sweeps cover [-1, 1],
/// lambda2 sweeps [-2, 8], 201 points each.
inline SweepSpec figure_preset(int figure_id, EvalMode mode = EvalMode::BASIS_DIAGONAL) {
    const SweepRange l1_range{-1.0, 1.0, kDefaultSweepSteps};
    const SweepRange l2_range{-2.0, 8.0, kDefaultSweepSteps};
    SweepSpec s;
    s.figure_id = figure_id;
    s.mode = mode;
    auto coherent = [&](double alpha, SweepAxis axis, std::vector<double> fixed, Observable obs) {
        s.kind = StateKind::COHERENT;
        s.label = alpha;
        s.axis = axis;
        s.range = axis == SweepAxis::LAMBDA1 ? l1_range : l2_range;
        s.fixed_values = std::move(fixed);
        s.observable = obs;
        s.truncation.cutoff = kCoherentPresetCutoff;
    };
    auto squeezed = [&](double eta, SweepAxis axis, std::vector<double> fixed, Observable obs) {
        coherent(eta, axis, std::move(fixed), obs);
        s.kind = StateKind::SQUEEZED;
        s.truncation.cutoff = kSqueezedPresetCutoff;
    };
    switch (figure_id) {
    case 1: coherent(0.8, SweepAxis::LAMBDA1, {0.01, 2.0, 5.5, 8.0}, Observable::DX2); break;
    case 2: coherent(0.8, SweepAxis::LAMBDA1, {0.8, 1.4, 2.0, 5.0}, Observable::DP2); break;
    case 3: squeezed(0.8, SweepAxis::LAMBDA2, {-0.8, -0.4, 0.001, 0.6}, Observable::DX2); break;
    case 4: squeezed(0.8, SweepAxis::LAMBDA2, {-0.001, 0.5, 0.8}, Observable::DP2); break;
    case 5: coherent(2.0, SweepAxis::LAMBDA1, {-0.2, 0.0001, 0.5, 0.9}, Observable::MANDEL_Q); break;
    case 6: squeezed(0.8, SweepAxis::LAMBDA2, {-0.6, -0.3, 0.1, 0.8}, Observable::MANDEL_Q); break;
    case 7: coherent(0.8, SweepAxis::LAMBDA2, {-0.8, -0.1, 0.2, 0.8}, Observable::MANDEL_LITTLE_Q); break;
    case 8: squeezed(0.8, SweepAxis::LAMBDA1, {-0.8, -0.2, 0.01, 0.6}, Observable::MANDEL_LITTLE_Q); break;
    default: throw UsageError("figure id must be 1..8, got " + std::to_string(figure_id));
    }
    return s;
}

/// One sweep point. Build failures, non-converged series and undefined
/// parameters all yield value = NaN; the row is still emitted.
inline SweepRow evaluate_point(const SweepSpec& spec, double sweep_value, double fixed_value) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    SweepRow row;
    row.figure_id = spec.figure_id;
    row.mode = spec.mode;
    row.kind = spec.kind;
    row.label = spec.label;
    row.axis = spec.axis;
    row.fixed_value = fixed_value;
    row.sweep_value = sweep_value;
    row.observable = spec.observable;
    row.cutoff = spec.truncation.cutoff;
    row.value = nan;
    row.imag_diagnostic = nan;
    row.tail_mass = nan;

    const DeformationParams params = spec.axis == SweepAxis::LAMBDA1 ? DeformationParams{sweep_value, fixed_value}
                                                                      : DeformationParams{fixed_value, sweep_value};
    try {
        const DeformedBasis basis = DeformedBasis::build(params, spec.truncation);
        const DeformedState state = spec.kind == StateKind::COHERENT
                                        ? build_coherent(spec.label, basis, TruncationPolicy::Report)
                                        : build_squeezed(spec.label, basis, TruncationPolicy::Report);
        row.tail_mass = state.truncation.tail_mass;
        if (!state.truncation.converged()) return row;
        if (spec.mode == EvalMode::BASIS_DIAGONAL) {
            const double ptail = distribution_tail(distribution(state, basis), basis.guard_band());
            row.tail_mass = std::max(row.tail_mass, ptail);
            if (!(ptail <= spec.truncation.tail_tol)) return row;
        }
        switch (spec.observable) {
        case Observable::DX2:
        case Observable::DP2: {
            const QuadratureVariances q = quadrature_variances(state, basis, spec.mode);
            row.value = spec.observable == Observable::DX2 ? q.dx2 : q.dp2;
            row.imag_diagnostic = q.imag_diagnostic;
            break;
        }
        case Observable::MANDEL_Q: {
            const MandelResult m = mandel_Q(state, basis, spec.mode);
            row.value = m.value;
            row.imag_diagnostic = m.imag_diagnostic;
            break;
        }
        case Observable::MANDEL_LITTLE_Q:
            row.value = mandel_q(state, basis, {spec.mode, spec.q_moments});
            row.imag_diagnostic = 0.0;
            break;
        }
    } catch (const Error&) {
        row.value = nan;
    }
    return row;
}

/// Evaluates every (sweep value, fixed value) pair, sweep value ascending in
/// the outer order and fixed values in the given order inside. Points are
/// spread over `threads` workers; rows land in index order, so the output
/// does not depend on scheduling.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads = 1) {
    spec.validate();
    const std::vector<double> sweep_values = spec.range.values();
    const std::size_t nfixed = spec.fixed_values.size();
    const std::size_t total = sweep_values.size() * nfixed;
    std::vector<SweepRow> rows(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            rows[i] = evaluate_point(spec, sweep_values[i / nfixed], spec.fixed_values[i % nfixed]);
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(total)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Output

inline const char* kCsvHeader =
    "figure_id,mode,state_kind,state_label_re,state_label_im,fixed_param_name,fixed_param_value,"
    "sweep_param_name,sweep_param_value,observable,value,imag_diagnostic,tail_mass,cutoff";

/// %.17g, or NA for NaN and infinities.
inline std::string format_number(double x) {
    if (!std::isfinite(x)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string figure_name(int figure_id) { return figure_id == 0 ? "custom" : std::to_string(figure_id); }

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << figure_name(r.figure_id) << ',' << to_string(r.mode) << ',' << to_string(r.kind) << ','
           << format_number(r.label.real()) << ',' << format_number(r.label.imag()) << ','
           << param_name(other_axis(r.axis)) << ',' << format_number(r.fixed_value) << ',' << param_name(r.axis)
           << ',' << format_number(r.sweep_value) << ',' << to_string(r.observable) << ','
           << format_number(r.value) << ',' << format_number(r.imag_diagnostic) << ','
           << format_number(r.tail_mass) << ',' << r.cutoff << '\n';
    }
}

namespace detail {

inline nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

} // namespace detail

inline nlohmann::json rows_to_json(const std::vector<SweepRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"figure_id", figure_name(r.figure_id)},
                       {"mode", to_string(r.mode)},
                       {"state_kind", to_string(r.kind)},
                       {"state_label_re", detail::json_number(r.label.real())},
                       {"state_label_im", detail::json_number(r.label.imag())},
                       {"fixed_param_name", param_name(other_axis(r.axis))},
                       {"fixed_param_value", detail::json_number(r.fixed_value)},
                       {"sweep_param_name", param_name(r.axis)},
                       {"sweep_param_value", detail::json_number(r.sweep_value)},
                       {"observable", to_string(r.observable)},
                       {"value", detail::json_number(r.value)},
                       {"imag_diagnostic", detail::json_number(r.imag_diagnostic)},
                       {"tail_mass", detail::json_number(r.tail_mass)},
                       {"cutoff", r.cutoff}});
    }
    return out;
}

inline void write_json(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << nlohmann::json{{"rows", rows_to_json(rows)}}.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Validation suites

enum class Suite { ALGEBRA, BASIS, STATES, STATS };

inline std::string_view to_string(Suite s) {
    switch (s) {
    case Suite::ALGEBRA: return "algebra";
    case Suite::BASIS: return "basis";
    case Suite::STATES: return "states";
    case Suite::STATS: return "stats";
    }
    throw UsageError("unknown suite");
}

inline Suite parse_suite(std::string_view s) {
    for (auto v : {Suite::ALGEBRA, Suite::BASIS, Suite::STATES, Suite::STATS}) {
        if (to_string(v) == s) return v;
    }
    throw UsageError("unknown suite '" + std::string(s) + "' (expected algebra, basis, states or stats)");
}

struct ValidateOptions {
    SweepRange lambda1_grid{-1.0, 1.0, 5};
    SweepRange lambda2_grid{-2.0, 2.0, 5};
    std::vector<cplx> alphas{{0.8, 0.0}, {0.0, 0.8}, {0.5, 0.5}, {-0.3, 0.0}, {1.2, -0.4}};
    std::vector<cplx> etas{{0.3, 0.0}, {0.8, 0.0}};
    TruncationSettings truncation;           // basis, algebra and coherent checks
    int squeezed_cutoff = kSqueezedPresetCutoff;
    int max_checked_index = 20;
};

struct ValidationEntry {
    std::string check;
    DeformationParams params;
    std::optional<cplx> label;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string error;  // set when the check threw instead of measuring
};

struct ValidationReport {
    Suite suite = Suite::ALGEBRA;
    std::vector<ValidationEntry> entries;

    [[nodiscard]] bool all_passed() const {
        return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
    }
    [[nodiscard]] std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.passed; }));
    }
};

namespace detail {

// Records `measure()` against `tol` (value <= tol passes), or the error it threw.
template <typename F>
void record(ValidationReport& rep, std::string check, const DeformationParams& p, std::optional<cplx> label,
            double tol, F&& measure) {
    ValidationEntry e{std::move(check), p, label, std::numeric_limits<double>::quiet_NaN(), tol, false, {}};
    try {
        e.value = measure();
        e.passed = std::isfinite(e.value) && e.value <= tol;
    } catch (const DomainError& ex) {
        e.error = std::string("domain error: ") + ex.what();
    } catch (const Error& ex) {
        e.error = ex.what();
    }
    rep.entries.push_back(std::move(e));
}

inline void algebra_point(ValidationReport& rep, const DeformationParams& p, const ValidateOptions& o) {
    constexpr double tol = 1e-10;
    const int cutoff = o.truncation.cutoff;
    const int interior = o.truncation.max_basis_index();
    const CMatrix a = build_operator(OperatorLabel::A, p, cutoff).entries;
    const CMatrix ad = build_operator(OperatorLabel::ADAG_DEF, p, cutoff).entries;
    const CMatrix h = build_operator(OperatorLabel::HAMILTONIAN_DEF, p, cutoff).entries;
    const CMatrix id = CMatrix::Identity(cutoff + 1, cutoff + 1);
    record(rep, "commutator_a_adag_def", p, {}, tol, [&] { return interior_max_abs(commutator(a, ad) - id, interior); });
    record(rep, "commutator_h_adag_def", p, {}, tol, [&] { return interior_max_abs(commutator(h, ad) - ad, interior); });
    record(rep, "commutator_h_a", p, {}, tol, [&] { return interior_max_abs(commutator(h, a) + a, interior); });
    record(rep, "number_operators_commute", p, {}, tol,
           [&] { return interior_max_abs(commutator(a * ad, ad * a), interior); });
    record(rep, "vacuum_annihilated", p, {}, tol, [&] { return (a.col(0)).norm(); });
    // (ii) and the non-commutation half of (iii) are lower bounds; stored as
    // margins so that "value <= tolerance" still reads as a pass.
    record(rep, "vacuum_norm_positive", p, {}, 0.0, [&] { return -(a * ad)(0, 0).real(); });
    record(rep, "number_operators_differ", p, {}, -0.5,
           [&] { return -interior_max_abs(a * ad - ad * a, interior); });
}

inline void basis_point(ValidationReport& rep, const DeformationParams& p, const ValidateOptions& o) {
    constexpr double tol = 1e-10;
    const DeformedBasis basis = DeformedBasis::build(p, o.truncation);
    const int nmax = std::min(o.max_checked_index, basis.max_index() - 1);
    record(rep, "closed_form_vs_oracle", p, {}, tol, [&] {
        double worst = 0.0;
        for (int n = 0; n <= nmax; ++n) {
            const FockVector closed = basis_column(n, p, o.truncation.cutoff, o.truncation.guard_band);
            const FockVector oracle = basis_column_oracle(n, p, o.truncation.cutoff, o.truncation.guard_band);
            worst = std::max(worst, (closed.coeffs - oracle.coeffs).cwiseAbs().maxCoeff());
        }
        return worst;
    });
    record(rep, "xi_closed_form_vs_norm", p, {}, tol, [&] {
        double worst = 0.0;
        for (int n = 0; n <= nmax; ++n) worst = std::max(worst, std::abs(xi(n, p) / basis.xi(n) - 1.0));
        return worst;
    });
    record(rep, "inner_product_vs_dot", p, {}, tol, [&] {
        const int m_max = std::min(nmax, 12);
        double worst = 0.0;
        for (int m = 0; m <= m_max; ++m) {
            for (int n = 0; n <= m_max; ++n) {
                const double dot = basis.column(m).dot(basis.column(n)).real();
                worst = std::max(worst, std::abs(inner_product(m, n, p) - dot));
            }
        }
        return worst;
    });
    record(rep, "ladder_residual", p, {}, tol, [&] {
        double worst = 0.0;
        for (int n = 0; n <= nmax; ++n) {
            const LadderResidual r = ladder_check(n, basis);
            worst = std::max({worst, r.lowering, r.raising});
        }
        return worst;
    });
    record(rep, "energy_eigenvalues", p, {}, tol, [&] {
        const CMatrix cols = basis.matrix().leftCols(nmax + 1);
        const CMatrix h = apply_deformed_raising(apply_lowering(cols), p) + 0.5 * cols;
        double worst = 0.0;
        for (int n = 0; n <= nmax; ++n) worst = std::max(worst, (h.col(n) - (n + 0.5) * cols.col(n)).norm());
        return worst;
    });
    record(rep, "number_identity_undeformed_split", p, {}, tol, [&] {
        // (a^dag a + l1 a^2 + l2 a) col_n = n col_n
        const CMatrix cols = basis.matrix().leftCols(nmax + 1);
        const CMatrix low = apply_lowering(cols);
        const CMatrix lhs = apply_raising(low) + p.lambda1 * apply_lowering(low) + p.lambda2 * low;
        double worst = 0.0;
        for (int n = 0; n <= nmax; ++n) worst = std::max(worst, (lhs.col(n) - n * cols.col(n)).norm());
        return worst;
    });
    record(rep, "powers_identities_relative", p, {}, 1e-9, [&] {
        double worst = 0.0;
        const int top = std::min(nmax, 12);
        const int dim = basis.cutoff() + 1;
        for (int n = 0; n <= top; ++n) {
            const double scale = std::exp(basis.log_xi(n) + 0.5 * log_factorial(n));
            CVector lowered = basis.column(n);
            for (int k = 0; k < n; ++k) lowered = apply_lowering(lowered);
            CVector expected = CVector::Zero(dim);
            expected(0) = scale;
            worst = std::max(worst, (lowered - expected).norm() / std::max(1.0, scale));
            CVector raised = CVector::Zero(dim);
            raised(0) = 1.0;
            for (int k = 0; k < n; ++k) raised = apply_deformed_raising(raised, p);
            raised *= basis.xi(n) / std::exp(0.5 * log_factorial(n));
            worst = std::max(worst, (raised - basis.column(n)).norm());
        }
        return worst;
    });
    // For large |lambda2| the smallest Gram eigenvalue sits far below double
    // precision (det G = prod xi_n^2), so positivity is certified through the
    // factor G = C^T C, C the upper-triangular column block with diagonal xi_n > 0.
    record(rep, "gram_positive_definite", p, {}, tol, [&] {
        const int k = std::min(12, nmax);
        const Eigen::MatrixXd g = gram_matrix(k, p);
        const Eigen::MatrixXd c = basis.matrix().topLeftCorner(k + 1, k + 1).real();
        const Eigen::MatrixXd r = c.triangularView<Eigen::Upper>();
        const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
        if (asym > 0.0 || (c - r).cwiseAbs().maxCoeff() > 0.0 || c.diagonal().minCoeff() <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        return (g - r.transpose() * r).cwiseAbs().maxCoeff();
    });
}

inline void states_point(ValidationReport& rep, const DeformationParams& p, const ValidateOptions& o) {
    const DeformedBasis basis = DeformedBasis::build(p, o.truncation);
    for (std::size_t i = 0; i < o.alphas.size(); ++i) {
        const cplx alpha = o.alphas[i];
        record(rep, "coherent_eigen_residual", p, alpha, 1e-8,
               [&] { return coherent_eigen_residual(build_coherent(alpha, basis)); });
        record(rep, "coherent_fidelity", p, alpha, 1e-8,
               [&] { return std::abs(phase_identity_check(alpha, basis).fidelity - 1.0); });
        record(rep, "coherent_phase", p, alpha, 1e-6, [&] { return phase_identity_check(alpha, basis).phase_residual; });
        const cplx beta = o.alphas[(i + 1) % o.alphas.size()];
        record(rep, "coherent_overlap_vs_vectors", p, alpha, 1e-8, [&] {
            const cplx series = coherent_overlap(alpha, beta, p);
            const cplx vec = build_coherent(alpha, basis).fock_vector.coeffs.dot(build_coherent(beta, basis).fock_vector.coeffs);
            return std::abs(series - vec);
        });
    }
    TruncationSettings ss = o.truncation;
    ss.cutoff = o.squeezed_cutoff;
    std::optional<DeformedBasis> ss_basis;
    for (const cplx eta : o.etas) {
        auto squeezed = [&] {
            if (!ss_basis) ss_basis = DeformedBasis::build(p, ss);
            return build_squeezed(eta, *ss_basis);
        };
        record(rep, "squeezed_defining_residual", p, eta, 1e-6,
               [&] { return squeezed_defining_residual(squeezed()); });
        record(rep, "squeezed_norm_constant_series", p, eta, 1e-6, [&] {
            const DeformedState s = squeezed();
            const double series = squeezed_norm_constant_series(eta, p, s.truncation.terms_used / 2);
            return std::abs(series / s.norm_constant - 1.0);
        });
    }
}

inline void stats_point(ValidationReport& rep, const DeformationParams& p, const ValidateOptions& o) {
    const DeformedBasis basis = DeformedBasis::build(p, o.truncation);
    const bool undeformed = p.undeformed();
    for (const cplx alpha : o.alphas) {
        auto state = [&] { return build_coherent(alpha, basis); };
        record(rep, "coherent_exact_dx2", p, alpha, 1e-8,
               [&] { return std::abs(quadrature_variances(state(), basis, EvalMode::EXACT).dx2 - 0.5); });
        record(rep, "coherent_exact_dp2", p, alpha, 1e-8,
               [&] { return std::abs(quadrature_variances(state(), basis, EvalMode::EXACT).dp2 - 0.5); });
        record(rep, "coherent_exact_q", p, alpha, 1e-7,
               [&] { return std::abs(mandel_q(state(), basis, {EvalMode::EXACT})); });
        record(rep, "coherent_exact_Q", p, alpha, 1e-7,
               [&] { return std::abs(mandel_Q(state(), basis, EvalMode::EXACT).value); });
        record(rep, "heisenberg_floor", p, alpha, 1e-9, [&] {
            const QuadratureVariances v = quadrature_variances(state(), basis, EvalMode::EXACT);
            return 0.25 - v.dx2 * v.dp2;
        });
        record(rep, "diagonal_Q_equals_normalized_q", p, alpha, 1e-12, [&] {
            const DeformedState s = state();
            const double q = mandel_q(s, basis, {EvalMode::BASIS_DIAGONAL, MomentNormalization::NORMALIZED});
            return std::abs(mandel_Q(s, basis, EvalMode::BASIS_DIAGONAL).value - q) / std::max(1.0, std::abs(q));
        });
        if (undeformed) {
            record(rep, "mode_consistency_q_Q", p, alpha, 1e-8, [&] {
                const DeformedState s = state();
                const StatisticsReport e = compute_statistics(s, basis, {EvalMode::EXACT});
                const StatisticsReport d = compute_statistics(s, basis, {EvalMode::BASIS_DIAGONAL});
                return std::max({std::abs(e.mean_n - d.mean_n), std::abs(e.q_mandel - d.q_mandel),
                                 std::abs(e.Q_mandel - d.Q_mandel)});
            });
        }
    }
    TruncationSettings ss = o.truncation;
    ss.cutoff = o.squeezed_cutoff;
    std::optional<DeformedBasis> ss_basis;
    for (const cplx eta : o.etas) {
        auto squeezed = [&] {
            if (!ss_basis) ss_basis = DeformedBasis::build(p, ss);
            return std::pair{build_squeezed(eta, *ss_basis), &*ss_basis};
        };
        record(rep, "squeezed_heisenberg_floor", p, eta, 1e-9, [&] {
            const auto [s, b] = squeezed();
            const QuadratureVariances v = quadrature_variances(s, *b, EvalMode::EXACT);
            return 0.25 - v.dx2 * v.dp2;
        });
        if (undeformed) {
            record(rep, "squeezed_minimum_uncertainty", p, eta, 1e-6, [&] {
                const auto [s, b] = squeezed();
                const QuadratureVariances v = quadrature_variances(s, *b, EvalMode::EXACT);
                return std::abs(v.dx2 * v.dp2 - 0.25);
            });
        }
    }
}

} // namespace detail

inline ValidationReport run_validate(Suite suite, const ValidateOptions& opts = {}) {
    opts.lambda1_grid.validate();
    opts.lambda2_grid.validate();
    opts.truncation.validate();
    ValidationReport rep{suite, {}};
    for (double l1 : opts.lambda1_grid.values()) {
        for (double l2 : opts.lambda2_grid.values()) {
            const DeformationParams p{l1, l2};
            switch (suite) {
            case Suite::ALGEBRA: detail::algebra_point(rep, p, opts); break;
            case Suite::BASIS: detail::basis_point(rep, p, opts); break;
            case Suite::STATES: detail::states_point(rep, p, opts); break;
            case Suite::STATS: detail::stats_point(rep, p, opts); break;
            }
        }
    }
    return rep;
}

inline nlohmann::json to_json(const ValidationReport& rep) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& e : rep.entries) {
        nlohmann::json j{{"check", e.check},
                         {"lambda1", e.params.lambda1},
                         {"lambda2", e.params.lambda2},
                         {"value", detail::json_number(e.value)},
                         {"tolerance", e.tolerance},
                         {"passed", e.passed}};
        if (e.label) j["label"] = {e.label->real(), e.label->imag()};
        if (!e.error.empty()) j["error"] = e.error;
        checks.push_back(std::move(j));
    }
    return {{"suite", to_string(rep.suite)},
            {"passed", rep.all_passed()},
            {"failures", rep.failures()},
            {"checks", std::move(checks)}};
}

} // namespace dfock
