#pragma once

// Scalar kernels and truncated operator matrices on the standard Fock space
// |0>, |1>, ..., |cutoff>.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dfock/errors.hpp"
#include "dfock/params.hpp"

namespace dfock {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr int kDefaultCutoff = 64;
inline constexpr int kDefaultGuardBand = 8;
inline constexpr double kDefaultTailTol = 1e-20;

/// Truncation knobs shared by every builder.
struct TruncationSettings {
    int cutoff = kDefaultCutoff;
    int guard_band = kDefaultGuardBand;
    double tail_tol = kDefaultTailTol;

    /// Highest deformed-basis index that may be built at this cutoff.
    [[nodiscard]] int max_basis_index() const noexcept { return cutoff - guard_band; }

    void validate() const {
        if (cutoff < 2) throw UsageError("cutoff must be >= 2");
        if (guard_band < 0 || guard_band >= cutoff) throw UsageError("guard band must lie in [0, cutoff)");
        if (!(tail_tol > 0.0)) throw UsageError("tail tolerance must be positive");
    }
};

/// Diagnostics attached to every truncated series.
///
/// tail_mass is the squared weight carried by the last guard_band expansion
/// coefficients that were kept. A series whose tail mass exceeds tail_tol is
/// reported as not converged.
struct TruncationReport {
    int cutoff = 0;
    int guard_band = 0;
    int terms_used = 0;  // highest expansion index kept
    double tail_mass = 0.0;
    double tail_tol = kDefaultTailTol;

    [[nodiscard]] bool converged() const noexcept { return std::isfinite(tail_mass) && tail_mass <= tail_tol; }
};

class TruncationError : public Error {
public:
    TruncationError(const std::string& what, TruncationReport report)
        : Error(what), report_(report) {}

    [[nodiscard]] const TruncationReport& report() const noexcept { return report_; }

private:
    TruncationReport report_;
};

/// Complex coefficient vector over |0>..|cutoff>.
struct FockVector {
    CVector coeffs;

    FockVector() = default;
    explicit FockVector(int cutoff) : coeffs(CVector::Zero(cutoff + 1)) {}
    explicit FockVector(CVector c) : coeffs(std::move(c)) {}

    [[nodiscard]] int cutoff() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
    [[nodiscard]] double norm() const { return coeffs.norm(); }
    [[nodiscard]] bool is_normalized(double tol = 1e-10) const { return std::abs(norm() - 1.0) <= tol; }
    [[nodiscard]] bool all_finite() const { return coeffs.allFinite(); }

    static FockVector basis_state(int n, int cutoff) {
        FockVector v(cutoff);
        v.coeffs(n) = 1.0;
        return v;
    }
};

// ---------------------------------------------------------------------------
// Log-domain factorials

namespace detail {

inline const std::vector<double>& log_factorial_table() {
    static const std::vector<double> table = [] {
        constexpr int kSize = 4096;
        std::vector<double> t(kSize);
        // exact products up to 20! (fits in 64 bits), lgamma beyond
        std::uint64_t prod = 1;
        t[0] = 0.0;
        for (int k = 1; k < kSize; ++k) {
            if (k <= 20) {
                prod *= static_cast<std::uint64_t>(k);
                t[k] = std::log(static_cast<double>(prod));
            } else {
                t[k] = std::lgamma(static_cast<double>(k) + 1.0);
            }
        }
        return t;
    }();
    return table;
}

} // namespace detail

/// ln(n!). Exact (to rounding of one log) for n <= 20.
inline double log_factorial(int n) {
    if (n < 0) throw DomainError("log_factorial: negative argument " + std::to_string(n));
    const auto& t = detail::log_factorial_table();
    if (static_cast<std::size_t>(n) < t.size()) return t[static_cast<std::size_t>(n)];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// ln(n!!) with (-1)!! = 0!! = 1.
inline double log_double_factorial(int n) {
    if (n < -1) throw DomainError("log_double_factorial: argument below -1: " + std::to_string(n));
    if (n <= 0) return 0.0;
    if (n % 2 == 0) {
        const int k = n / 2;
        return k * std::log(2.0) + log_factorial(k);
    }
    // (2k-1)!! = (2k)! / (2^k k!)
    const int k = (n + 1) / 2;
    return log_factorial(2 * k) - k * std::log(2.0) - log_factorial(k);
}

// ---------------------------------------------------------------------------
// Signed log-domain accumulation

/// A real number stored as sign * exp(log_mag); sign == 0 means exactly zero.
struct SignedLog {
    long double log_mag = -std::numeric_limits<long double>::infinity();
    int sign = 0;

    [[nodiscard]] static SignedLog zero() noexcept { return {}; }
    [[nodiscard]] static SignedLog from(long double x) noexcept {
        if (x == 0.0L) return {};
        return {std::log(std::fabs(x)), x > 0 ? 1 : -1};
    }
    [[nodiscard]] long double value() const noexcept { return sign == 0 ? 0.0L : sign * std::exp(log_mag); }

    friend SignedLog operator*(SignedLog a, SignedLog b) noexcept {
        if (a.sign == 0 || b.sign == 0) return {};
        return {a.log_mag + b.log_mag, a.sign * b.sign};
    }
};

/// Neumaier-compensated sum of signed log-domain terms. The terms are rescaled
/// by the largest magnitude before summation so nothing overflows.
inline SignedLog signed_log_sum(std::span<const SignedLog> terms) {
    long double shift = -std::numeric_limits<long double>::infinity();
    for (const auto& t : terms) {
        if (t.sign != 0) shift = std::max(shift, t.log_mag);
    }
    if (!std::isfinite(shift)) return {};
    long double sum = 0.0L;
    long double comp = 0.0L;
    for (const auto& t : terms) {
        if (t.sign == 0) continue;
        const long double x = t.sign * std::exp(t.log_mag - shift);
        const long double s = sum + x;
        if (std::fabs(sum) >= std::fabs(x)) {
            comp += (sum - s) + x;
        } else {
            comp += (x - s) + sum;
        }
        sum = s;
    }
    const long double total = sum + comp;
    if (total == 0.0L) return {};
    return {shift + std::log(std::fabs(total)), total > 0 ? 1 : -1};
}

/// x^k for real x with 0^0 = 1, in signed log form.
inline SignedLog signed_pow(double x, int k) noexcept {
    if (k == 0) return {0.0L, 1};
    if (x == 0.0) return {};
    const int sign = (x < 0 && (k % 2 != 0)) ? -1 : 1;
    return {static_cast<long double>(k) * std::log(std::fabs(static_cast<long double>(x))), sign};
}

// ---------------------------------------------------------------------------
// Operator matrices

enum class OperatorLabel { A, ADAG, ADAG_DEF, HAMILTONIAN_DEF, NUMBER_DEF, IDENTITY, X, P };

inline constexpr std::array kAllOperatorLabels = {
    OperatorLabel::A,          OperatorLabel::ADAG,     OperatorLabel::ADAG_DEF, OperatorLabel::HAMILTONIAN_DEF,
    OperatorLabel::NUMBER_DEF, OperatorLabel::IDENTITY, OperatorLabel::X,        OperatorLabel::P};

inline std::string_view to_string(OperatorLabel label) {
    switch (label) {
    case OperatorLabel::A: return "A";
    case OperatorLabel::ADAG: return "ADAG";
    case OperatorLabel::ADAG_DEF: return "ADAG_DEF";
    case OperatorLabel::HAMILTONIAN_DEF: return "HAMILTONIAN_DEF";
    case OperatorLabel::NUMBER_DEF: return "NUMBER_DEF";
    case OperatorLabel::IDENTITY: return "IDENTITY";
    case OperatorLabel::X: return "X";
    case OperatorLabel::P: return "P";
    }
    throw UsageError("unknown operator label");
}

inline OperatorLabel parse_operator_label(std::string_view name) {
    for (auto label : kAllOperatorLabels) {
        if (to_string(label) == name) return label;
    }
    throw UsageError("unknown operator label '" + std::string(name) + "'");
}

struct OperatorMatrix {
    OperatorLabel label = OperatorLabel::IDENTITY;
    CMatrix entries;

    [[nodiscard]] int cutoff() const noexcept { return static_cast<int>(entries.rows()) - 1; }
};

namespace detail {

inline CMatrix lowering_matrix(int cutoff) {
    CMatrix a = CMatrix::Zero(cutoff + 1, cutoff + 1);
    for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

} // namespace detail

/// Dense truncated matrix of the requested operator.
///
/// ADAG_DEF = ADAG + lambda1 A + lambda2 I, NUMBER_DEF = ADAG_DEF A and
/// HAMILTONIAN_DEF = NUMBER_DEF + I/2. X and P are the quadratures
/// (a + a^dag)/sqrt2 and (a - a^dag)/(i sqrt2).
inline OperatorMatrix build_operator(OperatorLabel label, const DeformationParams& params, int cutoff) {
    if (cutoff < 2) throw UsageError("build_operator: cutoff must be >= 2");
    params.validate();
    const CMatrix a = detail::lowering_matrix(cutoff);
    const CMatrix adag = a.transpose();
    const CMatrix id = CMatrix::Identity(cutoff + 1, cutoff + 1);
    const CMatrix adag_def = adag + params.lambda1 * a + params.lambda2 * id;

    OperatorMatrix op{label, {}};
    switch (label) {
    case OperatorLabel::A: op.entries = a; break;
    case OperatorLabel::ADAG: op.entries = adag; break;
    case OperatorLabel::ADAG_DEF: op.entries = adag_def; break;
    case OperatorLabel::NUMBER_DEF: op.entries = adag_def * a; break;
    case OperatorLabel::HAMILTONIAN_DEF: op.entries = adag_def * a + 0.5 * id; break;
    case OperatorLabel::IDENTITY: op.entries = id; break;
    case OperatorLabel::X: op.entries = (a + adag) / std::sqrt(2.0); break;
    case OperatorLabel::P: op.entries = (a - adag) / (cplx(0.0, 1.0) * std::sqrt(2.0)); break;
    default: throw UsageError("build_operator: unknown operator label");
    }
    return op;
}

inline CMatrix commutator(const CMatrix& x, const CMatrix& y) { return x * y - y * x; }

/// Largest |entry| of the leading interior x interior block.
inline double interior_max_abs(const CMatrix& m, int interior) {
    const auto k = std::min<Eigen::Index>(interior, std::min(m.rows(), m.cols()));
    if (k <= 0) return 0.0;
    return m.topLeftCorner(k, k).cwiseAbs().maxCoeff();
}

// Banded applications of a and a^dag to every column of a matrix. These never
// form the dense operator; the last row is truncated exactly as the dense
// matrices truncate it.

template <typename Derived>
typename Derived::PlainObject apply_lowering(const Eigen::MatrixBase<Derived>& m) {
    const auto rows = m.rows();
    typename Derived::PlainObject out = Derived::PlainObject::Zero(rows, m.cols());
    for (Eigen::Index r = 0; r + 1 < rows; ++r) {
        out.row(r) = std::sqrt(static_cast<double>(r + 1)) * m.row(r + 1);
    }
    return out;
}

template <typename Derived>
typename Derived::PlainObject apply_raising(const Eigen::MatrixBase<Derived>& m) {
    const auto rows = m.rows();
    typename Derived::PlainObject out = Derived::PlainObject::Zero(rows, m.cols());
    for (Eigen::Index r = 1; r < rows; ++r) {
        out.row(r) = std::sqrt(static_cast<double>(r)) * m.row(r - 1);
    }
    return out;
}

/// a^dag_{lambda1,lambda2} applied column-wise.
template <typename Derived>
typename Derived::PlainObject apply_deformed_raising(const Eigen::MatrixBase<Derived>& m, const DeformationParams& p) {
    typename Derived::PlainObject out = apply_raising(m);
    if (p.lambda1 != 0.0) out += p.lambda1 * apply_lowering(m);
    if (p.lambda2 != 0.0) out += p.lambda2 * m;
    return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential

inline bool is_strictly_upper_triangular(const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = j; i < m.rows(); ++i) {
            if (m(i, j) != cplx(0.0, 0.0)) return false;
        }
    }
    return true;
}

namespace detail {

// Terminating Taylor series; exact up to rounding for nilpotent arguments.
inline CMatrix nilpotent_exponential(const CMatrix& m) {
    const auto n = m.rows();
    CMatrix result = CMatrix::Identity(n, n);
    CMatrix term = CMatrix::Identity(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        term = (term * m) / static_cast<double>(k);
        if (term.cwiseAbs().maxCoeff() == 0.0) break;
        result += term;
    }
    return result;
}

// Diagonal (13,13) Pade approximant with scaling and squaring.
inline CMatrix pade13_exponential(const CMatrix& m) {
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const auto n = m.rows();
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const CMatrix a = m / std::ldexp(1.0, squarings);

    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix a2 = a * a;
    const CMatrix a4 = a2 * a2;
    const CMatrix a6 = a4 * a2;
    const CMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const CMatrix u = a * u_inner;
    const CMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    CMatrix result = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

} // namespace detail

/// exp(M). Strictly upper-triangular arguments (every T-operator exponent) are
/// summed exactly with the terminating Taylor series; anything else goes
/// through scaling and squaring.
inline CMatrix matrix_exponential(const CMatrix& m) {
    if (m.rows() != m.cols()) throw UsageError("matrix_exponential: matrix must be square");
    if (!m.allFinite()) throw DomainError("matrix_exponential: non-finite entries");
    if (m.rows() == 0) return m;
    if (is_strictly_upper_triangular(m)) return detail::nilpotent_exponential(m);
    return detail::pade13_exponential(m);
}

inline OperatorMatrix matrix_exponential(const OperatorMatrix& m) {
    return {m.label, matrix_exponential(m.entries)};
}

// ---------------------------------------------------------------------------

/// v^dag M v.
inline cplx expectation(const CMatrix& m, const FockVector& v) {
    if (m.rows() != v.coeffs.size() || m.cols() != v.coeffs.size()) {
        throw UsageError("expectation: cutoff mismatch between operator and vector");
    }
    return v.coeffs.dot(m * v.coeffs);
}

inline cplx expectation(const OperatorMatrix& m, const FockVector& v) { return expectation(m.entries, v); }

} // namespace dfock
