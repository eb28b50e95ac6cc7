#pragma once

// Photon-number distribution, Mandel parameters and quadrature variances.
//
// EXACT mode takes every expectation as v^dag M v / v^dag v over the
// translated Fock vector. BASIS_DIAGONAL mode treats the deformed basis as if
// it were orthonormal: <M> = sum_n P(n) col_n^dag M col_n with
// P(n) = |col_n^dag v|^2.

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "dfock/deformed_basis.hpp"
#include "dfock/fock_numerics.hpp"
#include "dfock/states.hpp"

namespace dfock {

enum class EvalMode { EXACT, BASIS_DIAGONAL };

inline std::string_view to_string(EvalMode m) { return m == EvalMode::EXACT ? "EXACT" : "BASIS_DIAGONAL"; }

/// Whether BASIS_DIAGONAL moments for q are divided by sum_n P(n).
enum class MomentNormalization { RAW, NORMALIZED };

struct StatisticsOptions {
    EvalMode mode = EvalMode::EXACT;
    MomentNormalization q_moments = MomentNormalization::RAW;
};

struct StatisticsReport {
    EvalMode mode = EvalMode::EXACT;
    double mean_n = 0.0;  // moments feeding q
    double var_n = 0.0;
    double q_mandel = 0.0;
    double Q_mandel = 0.0;
    double Q_imag_magnitude = 0.0;
    double dx2 = 0.0;
    double dp2 = 0.0;
    double quadrature_imag_magnitude = 0.0;
    Eigen::VectorXd distribution;
    double distribution_sum = 0.0;
    double distribution_tail = 0.0;  // share of sum P in the top guard band of basis indices
    TruncationReport truncation;

    // BASIS_DIAGONAL sums run over basis indices, whose weights can decay much
    // more slowly than the Fock coefficients (large lambda2), so they need
    // their own tail test.
    [[nodiscard]] bool converged() const {
        return truncation.converged() && (mode == EvalMode::EXACT || distribution_tail <= truncation.tail_tol);
    }
};

struct MandelResult {
    double value = 0.0;
    double imag_diagnostic = 0.0;
};

struct QuadratureVariances {
    double dx2 = 0.0;
    double dp2 = 0.0;
    double imag_diagnostic = 0.0;  // largest |Im| of the two formulas
};

namespace detail {

inline constexpr double kZeroMeanTol = 1e-14;

inline double mandel_from_moments(double mean, double second, const char* what) {
    if (!(std::abs(mean) > kZeroMeanTol)) {
        throw DomainError(std::string(what) + ": mean photon number is zero, parameter undefined");
    }
    return (second - mean * mean) / mean - 1.0;
}

inline void check_basis(const DeformedState& s, const DeformedBasis& basis) {
    if (!(s.params == basis.params()) || s.fock_vector.cutoff() != basis.cutoff()) {
        throw UsageError("statistics: basis does not match the state's parameters or cutoff");
    }
}

inline DeformedBasis basis_for(const DeformedState& s) {
    TruncationSettings settings;
    settings.cutoff = s.fock_vector.cutoff();
    settings.guard_band = s.truncation.guard_band;
    settings.tail_tol = s.truncation.tail_tol;
    return DeformedBasis::build(s.params, settings);
}

// Expectations of the operators that enter the quadrature formulas.
struct Expectations {
    cplx a{}, adag{}, a2{}, adag2{}, number_def{};
};

inline Expectations exact_expectations(const CVector& v, const DeformationParams& p) {
    const double norm2 = v.squaredNorm();
    if (!(norm2 > 0.0)) throw DomainError("statistics: zero state vector");
    const CVector av = apply_lowering(v);
    const CVector a2v = apply_lowering(av);
    Expectations e;
    e.a = v.dot(av) / norm2;
    e.a2 = v.dot(a2v) / norm2;
    e.adag = std::conj(e.a);
    e.adag2 = std::conj(e.a2);
    e.number_def = v.dot(apply_deformed_raising(av, p)) / norm2;
    return e;
}

inline Expectations diagonal_expectations(const Eigen::VectorXd& weights, const DeformedBasis& basis) {
    const CMatrix& cols = basis.matrix();
    const CMatrix lowered = apply_lowering(cols);
    const CMatrix lowered2 = apply_lowering(lowered);
    const Eigen::Index n = weights.size();
    const CVector diag_a = cols.leftCols(n).conjugate().cwiseProduct(lowered.leftCols(n)).colwise().sum().transpose();
    const CVector diag_a2 = cols.leftCols(n).conjugate().cwiseProduct(lowered2.leftCols(n)).colwise().sum().transpose();
    Expectations e;
    for (Eigen::Index k = 0; k < n; ++k) {
        e.a += weights(k) * diag_a(k);
        e.adag += weights(k) * std::conj(diag_a(k));
        e.a2 += weights(k) * diag_a2(k);
        e.adag2 += weights(k) * std::conj(diag_a2(k));
        e.number_def += weights(k) * static_cast<double>(k);  // N col_n = n col_n
    }
    return e;
}

inline QuadratureVariances quadratures_from(const Expectations& e, const DeformationParams& p) {
    const double l1 = p.lambda1;
    const double l2 = p.lambda2;
    const cplx x = 0.5 * (1.0 + (1.0 - 2.0 * l1) * e.a2 + e.adag2 + 2.0 * e.number_def - 2.0 * l2 * e.a - e.a * e.a -
                          e.adag * e.adag - 2.0 * e.a * e.adag);
    const cplx y = 0.5 * (1.0 - (1.0 + 2.0 * l1) * e.a2 - e.adag2 + 2.0 * e.number_def - 2.0 * l2 * e.a + e.a * e.a +
                          e.adag * e.adag - 2.0 * e.a * e.adag);
    return {x.real(), y.real(), std::max(std::abs(x.imag()), std::abs(y.imag()))};
}

} // namespace detail

/// P(n) = |col_n^dag v|^2 for every built basis column, unnormalized.
inline Eigen::VectorXd distribution(const DeformedState& s, const DeformedBasis& basis) {
    detail::check_basis(s, basis);
    const CVector overlaps = basis.matrix().adjoint() * s.fock_vector.coeffs;
    return overlaps.cwiseAbs2();
}

inline Eigen::VectorXd distribution(const DeformedState& s) { return distribution(s, detail::basis_for(s)); }

/// Share of the total weight carried by the last `guard_band` entries.
inline double distribution_tail(const Eigen::VectorXd& dist, int guard_band) {
    const double total = dist.sum();
    if (!(total > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Index k = std::min<Eigen::Index>(guard_band, dist.size());
    return dist.tail(k).sum() / total;
}

/// Mandel q = (<n^2> - <n>^2)/<n> - 1. BASIS_DIAGONAL takes the moments from
/// P(n), raw unless asked otherwise; EXACT uses n = a^dag a on the Fock vector.
inline double mandel_q(const DeformedState& s, const DeformedBasis& basis, const StatisticsOptions& opts = {}) {
    double mean = 0.0, second = 0.0;
    if (opts.mode == EvalMode::BASIS_DIAGONAL) {
        const Eigen::VectorXd p = distribution(s, basis);
        for (Eigen::Index n = 0; n < p.size(); ++n) {
            mean += static_cast<double>(n) * p(n);
            second += static_cast<double>(n * n) * p(n);
        }
        if (opts.q_moments == MomentNormalization::NORMALIZED) {
            const double total = p.sum();
            mean /= total;
            second /= total;
        }
    } else {
        detail::check_basis(s, basis);
        const CVector& v = s.fock_vector.coeffs;
        const double norm2 = v.squaredNorm();
        for (Eigen::Index n = 0; n < v.size(); ++n) {
            const double w = std::norm(v(n)) / norm2;
            mean += static_cast<double>(n) * w;
            second += static_cast<double>(n * n) * w;
        }
    }
    return detail::mandel_from_moments(mean, second, "mandel_q");
}

inline double mandel_q(const DeformedState& s, const StatisticsOptions& opts = {}) {
    return mandel_q(s, detail::basis_for(s), opts);
}

/// Mandel Q with the deformed number operator N = a^dag_{l1,l2} a.
///
/// EXACT: real parts of <N> and <N^2> feed Q, their larger imaginary magnitude
/// is the diagnostic. BASIS_DIAGONAL: N is diagonal on the basis, so the
/// moments come from P(n) divided by sum_n P(n).
inline MandelResult mandel_Q(const DeformedState& s, const DeformedBasis& basis, EvalMode mode) {
    if (mode == EvalMode::BASIS_DIAGONAL) {
        const Eigen::VectorXd p = distribution(s, basis);
        double mean = 0.0, second = 0.0;
        for (Eigen::Index n = 0; n < p.size(); ++n) {
            mean += static_cast<double>(n) * p(n);
            second += static_cast<double>(n * n) * p(n);
        }
        const double total = p.sum();
        return {detail::mandel_from_moments(mean / total, second / total, "mandel_Q"), 0.0};
    }
    detail::check_basis(s, basis);
    const CVector& v = s.fock_vector.coeffs;
    const double norm2 = v.squaredNorm();
    if (!(norm2 > 0.0)) throw DomainError("mandel_Q: zero state vector");
    const CVector nv = apply_deformed_raising(apply_lowering(v), s.params);
    const CVector n2v = apply_deformed_raising(apply_lowering(nv), s.params);
    const cplx mean = v.dot(nv) / norm2;
    const cplx second = v.dot(n2v) / norm2;
    return {detail::mandel_from_moments(mean.real(), second.real(), "mandel_Q"),
            std::max(std::abs(mean.imag()), std::abs(second.imag()))};
}

inline MandelResult mandel_Q(const DeformedState& s, EvalMode mode) {
    return mandel_Q(s, detail::basis_for(s), mode);
}

/// Delta x^2 and Delta p^2 from
///   dx2 = [1 + (1 - 2 l1)<a^2> + <a^dag^2> + 2<N> - 2 l2 <a> - <a>^2 - <a^dag>^2 - 2<a><a^dag>] / 2
///   dp2 = [1 - (1 + 2 l1)<a^2> - <a^dag^2> + 2<N> - 2 l2 <a> + <a>^2 + <a^dag>^2 - 2<a><a^dag>] / 2
/// with N = a^dag_{l1,l2} a. BASIS_DIAGONAL weights are P(n) / sum P(n).
inline QuadratureVariances quadrature_variances(const DeformedState& s, const DeformedBasis& basis, EvalMode mode) {
    detail::check_basis(s, basis);
    if (mode == EvalMode::EXACT) {
        return detail::quadratures_from(detail::exact_expectations(s.fock_vector.coeffs, s.params), s.params);
    }
    Eigen::VectorXd p = distribution(s, basis);
    p /= p.sum();
    return detail::quadratures_from(detail::diagonal_expectations(p, basis), s.params);
}

inline QuadratureVariances quadrature_variances(const DeformedState& s, EvalMode mode) {
    return quadrature_variances(s, detail::basis_for(s), mode);
}

/// Everything at once. Undefined Mandel parameters (zero mean) come back as NaN.
inline StatisticsReport compute_statistics(const DeformedState& s, const DeformedBasis& basis,
                                           const StatisticsOptions& opts = {}) {
    detail::check_basis(s, basis);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    StatisticsReport r;
    r.mode = opts.mode;
    r.truncation = s.truncation;
    r.distribution = distribution(s, basis);
    r.distribution_sum = r.distribution.sum();
    r.distribution_tail = distribution_tail(r.distribution, basis.guard_band());

    double mean = 0.0, second = 0.0;
    if (opts.mode == EvalMode::BASIS_DIAGONAL) {
        for (Eigen::Index n = 0; n < r.distribution.size(); ++n) {
            mean += static_cast<double>(n) * r.distribution(n);
            second += static_cast<double>(n * n) * r.distribution(n);
        }
        if (opts.q_moments == MomentNormalization::NORMALIZED) {
            mean /= r.distribution_sum;
            second /= r.distribution_sum;
        }
    } else {
        const CVector& v = s.fock_vector.coeffs;
        const double norm2 = v.squaredNorm();
        for (Eigen::Index n = 0; n < v.size(); ++n) {
            const double w = std::norm(v(n)) / norm2;
            mean += static_cast<double>(n) * w;
            second += static_cast<double>(n * n) * w;
        }
    }
    r.mean_n = mean;
    r.var_n = second - mean * mean;
    try {
        r.q_mandel = detail::mandel_from_moments(mean, second, "mandel_q");
    } catch (const DomainError&) {
        r.q_mandel = nan;
    }
    try {
        const MandelResult big_q = mandel_Q(s, basis, opts.mode);
        r.Q_mandel = big_q.value;
        r.Q_imag_magnitude = big_q.imag_diagnostic;
    } catch (const DomainError&) {
        r.Q_mandel = nan;
    }
    const QuadratureVariances quad = quadrature_variances(s, basis, opts.mode);
    r.dx2 = quad.dx2;
    r.dp2 = quad.dp2;
    r.quadrature_imag_magnitude = quad.imag_diagnostic;
    return r;
}

inline StatisticsReport compute_statistics(const DeformedState& s, const StatisticsOptions& opts = {}) {
    return compute_statistics(s, detail::basis_for(s), opts);
}

} // namespace dfock
