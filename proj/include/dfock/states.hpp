#pragma once

// Coherent and squeezed states expanded over the deformed basis, and the
// checks that tie them back to the standard Fock space.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dfock/deformed_basis.hpp"
#include "dfock/fock_numerics.hpp"

namespace dfock {

enum class StateKind { COHERENT, SQUEEZED };

inline std::string_view to_string(StateKind k) { return k == StateKind::COHERENT ? "COHERENT" : "SQUEEZED"; }

/// What a builder does when the series has not converged inside the cutoff.
enum class TruncationPolicy { Throw, Report };

/// A coherent (label = alpha) or squeezed (label = eta) state, held both as
/// coefficients over |n>_{l1,l2} and as a vector over the standard Fock basis.
struct DeformedState {
    StateKind kind = StateKind::COHERENT;
    cplx label{};
    DeformationParams params;
    CVector deformed_coeffs;  // index n -> coefficient of |n>_{l1,l2}
    FockVector fock_vector;
    double norm_constant = 0.0;  // C_0
    TruncationReport truncation;
};

namespace detail {

inline constexpr double kSeriesRelativeStop = 1e-14;

struct SeriesResult {
    CVector coeffs;   // scaled coefficients actually kept
    CVector vector;   // scaled sum over basis columns
    int last_index = 0;
};

// Sums coeff(n) * column(n) in ascending n until guard_band consecutive terms
// fall below kSeriesRelativeStop relative to the running norm, or the basis
// runs out. log_coeff(n) returns (ln|c_n|, arg c_n), or nullopt for c_n = 0.
// All magnitudes are shifted by `shift` before exponentiation.
template <typename LogCoeff>
SeriesResult sum_series(const DeformedBasis& basis, LogCoeff&& log_coeff, double shift) {
    const int nmax = basis.max_index();
    const int guard = basis.guard_band();
    SeriesResult out;
    out.coeffs = CVector::Zero(nmax + 1);
    out.vector = CVector::Zero(basis.cutoff() + 1);
    int small_run = 0;
    int n = 0;
    for (; n <= nmax; ++n) {
        const std::optional<std::pair<double, double>> lc = log_coeff(n);
        double magnitude = 0.0;
        if (lc) {
            magnitude = std::exp(lc->first - shift);
            const cplx c = std::polar(magnitude, lc->second);
            out.coeffs(n) = c;
            out.vector.noalias() += c * basis.column(n);
        }
        const double running = out.vector.norm();
        small_run = (magnitude <= kSeriesRelativeStop * running) ? small_run + 1 : 0;
        if (small_run >= guard && n >= guard) break;
    }
    out.last_index = std::min(n, nmax);
    out.coeffs.conservativeResize(out.last_index + 1);
    return out;
}

inline TruncationReport make_report(const DeformedBasis& basis, const CVector& coeffs) {
    TruncationReport r;
    r.cutoff = basis.cutoff();
    r.guard_band = basis.guard_band();
    r.tail_tol = basis.settings().tail_tol;
    r.terms_used = static_cast<int>(coeffs.size()) - 1;
    const auto band = std::min<Eigen::Index>(basis.guard_band(), coeffs.size());
    r.tail_mass = coeffs.tail(band).squaredNorm();
    return r;
}

inline void enforce_policy(const TruncationReport& report, TruncationPolicy policy, const std::string& what) {
    if (policy == TruncationPolicy::Throw && !report.converged()) {
        throw TruncationError(what + ": series not converged within cutoff " + std::to_string(report.cutoff) +
                                  " (tail mass " + std::to_string(report.tail_mass) + ")",
                              report);
    }
}

} // namespace detail

/// ln C_0 for the coherent state:
/// -l1 Re(alpha^2)/2 - l2 Re(alpha) - |alpha|^2/2.
inline double coherent_log_norm_constant(cplx alpha, const DeformationParams& p) {
    return -0.5 * p.lambda1 * (alpha * alpha).real() - p.lambda2 * alpha.real() - 0.5 * std::norm(alpha);
}

/// Coherent state with C_n = C_0 alpha^n / (sqrt(n!) xi_n).
inline DeformedState build_coherent(cplx alpha, const DeformedBasis& basis,
                                    TruncationPolicy policy = TruncationPolicy::Throw) {
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        throw DomainError("build_coherent: non-finite alpha");
    }
    const double log_c0 = coherent_log_norm_constant(alpha, basis.params());
    const double c0 = std::exp(log_c0);
    if (c0 == 0.0 || !std::isfinite(c0)) {
        throw RangeError("build_coherent: C_0 = exp(" + std::to_string(log_c0) + ") is not representable");
    }
    const double log_abs = alpha == cplx{} ? 0.0 : std::log(std::abs(alpha));
    const double arg = std::arg(alpha);
    auto log_coeff = [&](int n) -> std::optional<std::pair<double, double>> {
        if (alpha == cplx{} && n > 0) return std::nullopt;
        return std::pair{log_c0 + n * log_abs - 0.5 * log_factorial(n) - basis.log_xi(n), n * arg};
    };
    auto series = detail::sum_series(basis, log_coeff, 0.0);
    if (!series.vector.allFinite()) throw RangeError("build_coherent: coefficients overflow");

    DeformedState s;
    s.kind = StateKind::COHERENT;
    s.label = alpha;
    s.params = basis.params();
    s.norm_constant = c0;
    s.truncation = detail::make_report(basis, series.coeffs);
    s.deformed_coeffs = std::move(series.coeffs);
    s.fock_vector = FockVector(std::move(series.vector));
    detail::enforce_policy(s.truncation, policy, "build_coherent");
    return s;
}

inline DeformedState build_coherent(cplx alpha, const DeformationParams& params, const TruncationSettings& settings = {},
                                    TruncationPolicy policy = TruncationPolicy::Throw) {
    return build_coherent(alpha, DeformedBasis::build(params, settings), policy);
}

/// Standard coherent state e^{-|alpha|^2/2} sum alpha^n/sqrt(n!) |n>.
inline FockVector canonical_coherent_vector(cplx alpha, int cutoff) {
    FockVector v(cutoff);
    const double log_abs = alpha == cplx{} ? 0.0 : std::log(std::abs(alpha));
    for (int n = 0; n <= cutoff; ++n) {
        if (alpha == cplx{} && n > 0) break;
        v.coeffs(n) = std::polar(std::exp(-0.5 * std::norm(alpha) + n * log_abs - 0.5 * log_factorial(n)),
                                 n * std::arg(alpha));
    }
    return v;
}

/// ||a v - alpha v|| for a coherent state.
inline double coherent_eigen_residual(const DeformedState& s) {
    const CVector& v = s.fock_vector.coeffs;
    return (apply_lowering(v) - s.label * v).norm();
}

/// Phase picked up by a deformed coherent state relative to the standard one:
/// l1 Im(alpha^2)/2 + l2 Im(alpha).
inline double coherent_phase(cplx alpha, const DeformationParams& p) {
    return 0.5 * p.lambda1 * (alpha * alpha).imag() + p.lambda2 * alpha.imag();
}

struct PhaseIdentityResult {
    double fidelity = 0.0;        // |<alpha|alpha, l1, l2>|
    double phase_residual = 0.0;  // |arg<alpha|alpha,l1,l2> - coherent_phase| wrapped to [0, pi]
    cplx overlap{};
};

inline PhaseIdentityResult phase_identity_check(cplx alpha, const DeformedBasis& basis) {
    const DeformedState s = build_coherent(alpha, basis);
    const FockVector canon = canonical_coherent_vector(alpha, basis.cutoff());
    PhaseIdentityResult r;
    r.overlap = canon.coeffs.dot(s.fock_vector.coeffs);
    r.fidelity = std::abs(r.overlap);
    const double diff = std::arg(r.overlap) - coherent_phase(alpha, basis.params());
    r.phase_residual = std::abs(std::remainder(diff, 2.0 * std::numbers::pi));
    return r;
}

inline PhaseIdentityResult phase_identity_check(cplx alpha, const DeformationParams& params,
                                                const TruncationSettings& settings = {}) {
    return phase_identity_check(alpha, DeformedBasis::build(params, settings));
}

/// <alpha, l1, l2 | beta, l1, l2> from the double series over deformed-basis
/// indices (m, n) <= n_terms with prefactor
/// exp(-l1 (Re alpha^2 + Re beta^2)/2 - l2 (Re alpha + Re beta) - |alpha|^2/2 - |beta|^2/2).
///
/// The (k, j) sums factor into S(m - r) S(n - r). Throws TruncationError if
/// the terms with m or n in the top guard band carry more than 1e-12 of the
/// summed magnitudes.
inline cplx coherent_overlap(cplx alpha, cplx beta, const DeformationParams& p, int n_terms = kDefaultCutoff,
                             int guard_band = kDefaultGuardBand) {
    p.validate();
    if (n_terms < guard_band) throw UsageError("coherent_overlap: n_terms must exceed the guard band");
    const auto poly = detail::deformation_polynomial_table(n_terms, p);
    const int dim = n_terms + 1;

    // G(m, n) = sum_r S(m - r) S(n - r) / r!
    std::vector<SignedLog> g(static_cast<std::size_t>(dim * dim));
    std::vector<SignedLog> terms;
    for (int m = 0; m < dim; ++m) {
        for (int n = m; n < dim; ++n) {
            terms.clear();
            for (int r = 0; r <= m; ++r) {
                SignedLog t = poly[static_cast<std::size_t>(m - r)] * poly[static_cast<std::size_t>(n - r)];
                if (t.sign == 0) continue;
                t.log_mag -= log_factorial(r);
                terms.push_back(t);
            }
            const SignedLog v = signed_log_sum(terms);
            g[static_cast<std::size_t>(m * dim + n)] = v;
            g[static_cast<std::size_t>(n * dim + m)] = v;
        }
    }

    const double log_a = alpha == cplx{} ? 0.0 : std::log(std::abs(alpha));
    const double log_b = beta == cplx{} ? 0.0 : std::log(std::abs(beta));
    long double shift = -std::numeric_limits<long double>::infinity();
    auto log_term = [&](int m, int n) -> long double {
        const auto& gv = g[static_cast<std::size_t>(m * dim + n)];
        if (gv.sign == 0) return -std::numeric_limits<long double>::infinity();
        if ((alpha == cplx{} && m > 0) || (beta == cplx{} && n > 0)) {
            return -std::numeric_limits<long double>::infinity();
        }
        return gv.log_mag + m * log_a + n * log_b;
    };
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) shift = std::max(shift, log_term(m, n));
    }

    long double re = 0.0L, im = 0.0L, re_c = 0.0L, im_c = 0.0L;
    long double band = 0.0L, total = 0.0L;
    auto kahan = [](long double& sum, long double& comp, long double x) {
        const long double y = x - comp;
        const long double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            const long double lt = log_term(m, n);
            if (!std::isfinite(lt)) continue;
            const auto& gv = g[static_cast<std::size_t>(m * dim + n)];
            const long double mag = gv.sign * std::exp(lt - shift);
            const long double phase = -m * std::arg(alpha) + n * std::arg(beta);
            kahan(re, re_c, mag * std::cos(phase));
            kahan(im, im_c, mag * std::sin(phase));
            total += std::fabs(mag);
            if (m > n_terms - guard_band || n > n_terms - guard_band) band += std::fabs(mag);
        }
    }
    const double log_norm = coherent_log_norm_constant(alpha, p) + coherent_log_norm_constant(beta, p);
    const long double scale = std::exp(static_cast<long double>(log_norm) + shift);
    const cplx result(static_cast<double>(re * scale), static_cast<double>(im * scale));
    // the guard-band terms must be negligible against the whole series
    const double band_mass = static_cast<double>(band / total);
    if (!(band_mass <= 1e-12) || !std::isfinite(result.real()) || !std::isfinite(result.imag())) {
        TruncationReport report{n_terms, guard_band, n_terms, band_mass * band_mass, kDefaultTailTol};
        throw TruncationError("coherent_overlap: series has not converged within " + std::to_string(n_terms) +
                                  " terms",
                              report);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Time evolution

/// Applies exp(-i t H_{l1,l2}) to a coherent state by rotating its deformed
/// coefficients, C_n -> C_n exp(-i t (n + 1/2)).
///
/// The result equals exp(-i t / 2) (C_0(alpha) / C_0(alpha(t))) |alpha(t), l1, l2>
/// with alpha(t) = alpha exp(-i t): the propagator is not unitary, so the
/// returned vector has norm C_0(alpha) / C_0(alpha(t)). Its label is alpha(t)
/// and norm_constant keeps C_0 of the initial state.
inline DeformedState evolve_coherent(const DeformedState& state, const DeformedBasis& basis, double t) {
    if (state.kind != StateKind::COHERENT) throw UsageError("evolve_coherent: state is not coherent");
    if (!(state.params == basis.params()) || state.fock_vector.cutoff() != basis.cutoff()) {
        throw UsageError("evolve_coherent: basis does not match the state");
    }
    DeformedState out = state;
    out.label = state.label * std::polar(1.0, -t);
    for (Eigen::Index n = 0; n < out.deformed_coeffs.size(); ++n) {
        out.deformed_coeffs(n) *= std::polar(1.0, -t * (static_cast<double>(n) + 0.5));
    }
    out.fock_vector =
        FockVector(CVector(basis.matrix().leftCols(out.deformed_coeffs.size()) * out.deformed_coeffs));
    return out;
}

/// Norm of the evolved vector, C_0(alpha) / C_0(alpha e^{-it}).
inline double evolution_norm_factor(cplx alpha, const DeformationParams& p, double t) {
    return std::exp(coherent_log_norm_constant(alpha, p) -
                    coherent_log_norm_constant(alpha * std::polar(1.0, -t), p));
}

// ---------------------------------------------------------------------------
// Squeezed states

/// Squeezed state annihilated by a - eta a^dag_{l1,l2}:
/// C_0 sum_n eta^n sqrt((2n-1)!!/(2n)!!) / xi_{2n} |2n>_{l1,l2}.
///
/// C_0 comes from the norm of the translated vector. Requires |eta| < 1.
inline DeformedState build_squeezed(cplx eta, const DeformedBasis& basis,
                                    TruncationPolicy policy = TruncationPolicy::Throw) {
    if (!std::isfinite(eta.real()) || !std::isfinite(eta.imag())) throw DomainError("build_squeezed: non-finite eta");
    if (std::abs(eta) >= 1.0) {
        throw DomainError("build_squeezed: |eta| = " + std::to_string(std::abs(eta)) + " must be < 1");
    }
    const double log_abs = eta == cplx{} ? 0.0 : std::log(std::abs(eta));
    const double arg = std::arg(eta);
    auto log_weight = [&](int n) {
        return n * log_abs + 0.5 * (log_double_factorial(2 * n - 1) - log_double_factorial(2 * n));
    };
    auto log_coeff = [&](int idx) -> std::optional<std::pair<double, double>> {
        if (idx % 2 != 0) return std::nullopt;
        const int n = idx / 2;
        if (eta == cplx{} && n > 0) return std::nullopt;
        return std::pair{log_weight(n) - basis.log_xi(idx), n * arg};
    };
    double shift = -std::numeric_limits<double>::infinity();
    for (int idx = 0; idx <= basis.max_index(); idx += 2) {
        if (auto lc = log_coeff(idx)) shift = std::max(shift, lc->first);
    }
    auto series = detail::sum_series(basis, log_coeff, shift);
    const double scaled_norm = series.vector.norm();
    if (!(scaled_norm > 0.0) || !std::isfinite(scaled_norm)) {
        throw NormalizationError("build_squeezed: translated vector has norm " + std::to_string(scaled_norm));
    }
    const double c0 = std::exp(-shift) / scaled_norm;
    if (!(c0 > 0.0) || !std::isfinite(c0)) {
        throw NormalizationError("build_squeezed: C_0 is zero or not finite (ln C_0 = " +
                                 std::to_string(-shift - std::log(scaled_norm)) + ")");
    }

    DeformedState s;
    s.kind = StateKind::SQUEEZED;
    s.label = eta;
    s.params = basis.params();
    s.norm_constant = c0;
    s.deformed_coeffs = series.coeffs / scaled_norm;
    s.fock_vector = FockVector(CVector(series.vector / scaled_norm));
    s.truncation = detail::make_report(basis, s.deformed_coeffs);
    detail::enforce_policy(s.truncation, policy, "build_squeezed");
    return s;
}

inline DeformedState build_squeezed(cplx eta, const DeformationParams& params, const TruncationSettings& settings = {},
                                    TruncationPolicy policy = TruncationPolicy::Throw) {
    return build_squeezed(eta, DeformedBasis::build(params, settings), policy);
}

/// ||(a - eta a^dag_{l1,l2}) v|| for a squeezed state.
inline double squeezed_defining_residual(const DeformedState& s) {
    const CVector& v = s.fock_vector.coeffs;
    return (apply_lowering(v) - s.label * apply_deformed_raising(v, s.params)).norm();
}

/// C_0 of the squeezed state from the double series
/// [sum_{n,m} eta^n conj(eta)^m (2n-1)!! (2m-1)!! sum_r S(2m-r) S(2n-r)/r!]^{-1/2},
/// truncated at n, m <= n_terms.
inline double squeezed_norm_constant_series(cplx eta, const DeformationParams& p, int n_terms) {
    p.validate();
    if (std::abs(eta) >= 1.0) throw DomainError("squeezed_norm_constant_series: |eta| must be < 1");
    const int top = 2 * n_terms;
    const auto poly = detail::deformation_polynomial_table(top, p);
    const double log_abs = eta == cplx{} ? 0.0 : std::log(std::abs(eta));
    long double re = 0.0L, im = 0.0L;
    std::vector<SignedLog> terms;
    struct Entry {
        long double log_mag;
        int sign;
        long double phase;
    };
    std::vector<Entry> all;
    long double shift = -std::numeric_limits<long double>::infinity();
    for (int m = 0; m <= n_terms; ++m) {
        for (int n = 0; n <= n_terms; ++n) {
            if (eta == cplx{} && (m > 0 || n > 0)) continue;
            terms.clear();
            for (int r = 0; r <= 2 * std::min(m, n); ++r) {
                SignedLog t = poly[static_cast<std::size_t>(2 * m - r)] * poly[static_cast<std::size_t>(2 * n - r)];
                if (t.sign == 0) continue;
                t.log_mag -= log_factorial(r);
                terms.push_back(t);
            }
            const SignedLog inner = signed_log_sum(terms);
            if (inner.sign == 0) continue;
            const long double lm = inner.log_mag + (n + m) * log_abs + log_double_factorial(2 * n - 1) +
                                   log_double_factorial(2 * m - 1);
            all.push_back({lm, inner.sign, static_cast<long double>((n - m) * std::arg(eta))});
            shift = std::max(shift, lm);
        }
    }
    for (const auto& e : all) {
        const long double mag = e.sign * std::exp(e.log_mag - shift);
        re += mag * std::cos(e.phase);
        im += mag * std::sin(e.phase);
    }
    (void)im;  // the double sum is Hermitian; its imaginary part is rounding only
    if (!(re > 0.0L)) throw NormalizationError("squeezed_norm_constant_series: non-positive normalization sum");
    const double c0 = static_cast<double>(std::exp(-0.5L * (shift + std::log(re))));
    if (!(c0 > 0.0) || !std::isfinite(c0)) {
        throw NormalizationError("squeezed_norm_constant_series: C_0 is zero or not finite");
    }
    return c0;
}

// ---------------------------------------------------------------------------
// Resolution of the identity

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw UsageError("gauss_legendre: need at least one node");
    QuadratureRule rule{std::vector<double>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = mid - half * x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = mid + half * x;
        rule.weights[static_cast<std::size_t>(i)] = half * w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = half * w;
    }
    return rule;
}

/// max |(1/pi) int |alpha,l1,l2><alpha,l1,l2| d^2alpha - I| over the block
/// n <= n_check, integrated on a polar grid: grid_points Gauss-Legendre radii
/// on [0, grid_radius] times grid_points uniform angles.
inline double identity_resolution_residual(const DeformedBasis& basis, double grid_radius, int grid_points,
                                           int n_check = 8) {
    if (grid_points < 1 || !(grid_radius > 0.0)) throw UsageError("identity_resolution_residual: empty grid");
    if (n_check > basis.cutoff()) throw UsageError("identity_resolution_residual: n_check exceeds cutoff");
    const QuadratureRule radial = gauss_legendre(grid_points, 0.0, grid_radius);
    const int block = n_check + 1;
    CMatrix acc = CMatrix::Zero(block, block);
    const double dtheta = 2.0 * std::numbers::pi / grid_points;
    for (int i = 0; i < grid_points; ++i) {
        const double r = radial.nodes[static_cast<std::size_t>(i)];
        const double w = radial.weights[static_cast<std::size_t>(i)] * r * dtheta / std::numbers::pi;
        for (int j = 0; j < grid_points; ++j) {
            const cplx alpha = std::polar(r, j * dtheta);
            const DeformedState s = build_coherent(alpha, basis, TruncationPolicy::Report);
            const CVector sub = s.fock_vector.coeffs.head(block);
            acc.noalias() += w * (sub * sub.adjoint());
        }
    }
    return (acc - CMatrix::Identity(block, block)).cwiseAbs().maxCoeff();
}

inline double identity_resolution_residual(const DeformationParams& params, double grid_radius, int grid_points,
                                           const TruncationSettings& settings, int n_check = 8) {
    return identity_resolution_residual(DeformedBasis::build(params, settings), grid_radius, grid_points, n_check);
}

} // namespace dfock
