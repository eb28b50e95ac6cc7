#pragma once

// The non-orthogonal basis |n>_{l1,l2}: eigenvectors of the non-Hermitian
// Hamiltonian a^dag_{l1,l2} a + 1/2, each a finite superposition of |0>..|n>.
//
// Unnormalized column n has Fock coefficients
//
//     u_n(r) = sqrt(n!/r!) * S(n - r),   S(m) = sum_k (l1/2)^k l2^(m-2k) / (k! (m-2k)!)
//
// i.e. u_n = exp(l1 a^2 / 2 + l2 a)|n>, and xi_n = 1/||u_n||. Every power of
// l1 and l2 is evaluated per term with 0^0 = 1, so l2 = 0 needs no special case.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dfock/fock_numerics.hpp"

namespace dfock {

/// S(m): coefficient of t^m in exp(l2 t + l1 t^2 / 2), summed in log domain.
inline SignedLog deformation_polynomial(int m, const DeformationParams& p) {
    if (m < 0) return {};
    std::vector<SignedLog> terms;
    terms.reserve(static_cast<std::size_t>(m / 2 + 1));
    for (int k = 0; 2 * k <= m; ++k) {
        const int j = m - 2 * k;
        SignedLog t = signed_pow(0.5 * p.lambda1, k) * signed_pow(p.lambda2, j);
        if (t.sign == 0) continue;
        t.log_mag -= log_factorial(k) + log_factorial(j);
        terms.push_back(t);
    }
    return signed_log_sum(terms);
}

namespace detail {

inline std::vector<SignedLog> deformation_polynomial_table(int max_m, const DeformationParams& p) {
    std::vector<SignedLog> table(static_cast<std::size_t>(max_m + 1));
    for (int m = 0; m <= max_m; ++m) table[static_cast<std::size_t>(m)] = deformation_polynomial(m, p);
    return table;
}

struct NormalizedColumn {
    CVector coeffs;   // unit norm, support on rows 0..n
    double log_xi;    // ln(1/||u_n||)
};

inline NormalizedColumn normalized_column(int n, int dim, const std::vector<SignedLog>& poly) {
    std::vector<SignedLog> entries(static_cast<std::size_t>(n + 1));
    long double shift = -std::numeric_limits<long double>::infinity();
    const double log_nfact = log_factorial(n);
    for (int r = 0; r <= n; ++r) {
        SignedLog e = poly[static_cast<std::size_t>(n - r)];
        if (e.sign != 0) {
            e.log_mag += 0.5L * (log_nfact - log_factorial(r));
            shift = std::max(shift, e.log_mag);
        }
        entries[static_cast<std::size_t>(r)] = e;
    }
    // the |n> entry is always exactly 1 before normalization, so shift is finite
    CVector col = CVector::Zero(dim);
    long double norm2 = 0.0L;
    std::vector<long double> scaled(static_cast<std::size_t>(n + 1), 0.0L);
    for (int r = 0; r <= n; ++r) {
        const auto& e = entries[static_cast<std::size_t>(r)];
        if (e.sign == 0) continue;
        const long double x = e.sign * std::exp(e.log_mag - shift);
        scaled[static_cast<std::size_t>(r)] = x;
        norm2 += x * x;
    }
    const long double norm = std::sqrt(norm2);
    for (int r = 0; r <= n; ++r) col(r) = static_cast<double>(scaled[static_cast<std::size_t>(r)] / norm);
    return {std::move(col), static_cast<double>(-shift - std::log(norm))};
}

} // namespace detail

/// xi_n from the closed-form triple sum over (r, k, k').
///
/// Throws RangeError when the sum leaves double range.
inline double xi(int n, const DeformationParams& p) {
    if (n < 0) throw DomainError("xi: negative index");
    p.validate();
    if (n == 0) return 1.0;
    std::vector<SignedLog> terms;
    const double log_nfact = log_factorial(n);
    for (int r = 0; r <= n; ++r) {
        const int d = n - r;
        const long double base = log_nfact - log_factorial(r);
        for (int k = 0; 2 * k <= d; ++k) {
            for (int kp = 0; 2 * kp <= d; ++kp) {
                SignedLog t = signed_pow(0.5 * p.lambda1, k + kp) * signed_pow(p.lambda2, 2 * d - 2 * (k + kp));
                if (t.sign == 0) continue;
                t.log_mag += base - log_factorial(k) - log_factorial(d - 2 * k) - log_factorial(kp) -
                             log_factorial(d - 2 * kp);
                terms.push_back(t);
            }
        }
    }
    const SignedLog sum = signed_log_sum(terms);
    const double result = static_cast<double>(std::exp(-0.5L * sum.log_mag));
    if (sum.sign <= 0 || !std::isfinite(result) || result == 0.0) {
        throw RangeError("xi: normalization sum not representable at n=" + std::to_string(n) + " " + to_string(p));
    }
    return result;
}

/// Immutable per-(params, cutoff) bundle of xi_n and the basis columns.
///
/// Column n of matrix() is |n>_{l1,l2} in the standard Fock basis; columns run
/// from 0 to max_index() = cutoff - guard_band.
class DeformedBasis {
public:
    static DeformedBasis build(const DeformationParams& params, const TruncationSettings& settings = {}) {
        params.validate();
        settings.validate();
        DeformedBasis b;
        b.params_ = params;
        b.settings_ = settings;
        const int nmax = settings.max_basis_index();
        const int dim = settings.cutoff + 1;
        const auto poly = detail::deformation_polynomial_table(nmax, params);
        b.columns_ = CMatrix::Zero(dim, nmax + 1);
        b.log_xi_.resize(static_cast<std::size_t>(nmax + 1));
        for (int n = 0; n <= nmax; ++n) {
            auto col = detail::normalized_column(n, dim, poly);
            b.columns_.col(n) = col.coeffs;
            b.log_xi_[static_cast<std::size_t>(n)] = col.log_xi;
        }
        b.log_xi_[0] = 0.0;
        return b;
    }

    [[nodiscard]] const DeformationParams& params() const noexcept { return params_; }
    [[nodiscard]] const TruncationSettings& settings() const noexcept { return settings_; }
    [[nodiscard]] int cutoff() const noexcept { return settings_.cutoff; }
    [[nodiscard]] int guard_band() const noexcept { return settings_.guard_band; }
    [[nodiscard]] int max_index() const noexcept { return static_cast<int>(columns_.cols()) - 1; }

    [[nodiscard]] const CMatrix& matrix() const noexcept { return columns_; }
    [[nodiscard]] auto column(int n) const { return columns_.col(n); }
    [[nodiscard]] FockVector column_vector(int n) const { return FockVector(CVector(columns_.col(n))); }

    [[nodiscard]] double log_xi(int n) const { return log_xi_.at(static_cast<std::size_t>(n)); }
    [[nodiscard]] double xi(int n) const { return std::exp(log_xi(n)); }
    /// xi_m / xi_n from the stored logarithms.
    [[nodiscard]] double xi_ratio(int m, int n) const { return std::exp(log_xi(m) - log_xi(n)); }

private:
    DeformedBasis() = default;

    DeformationParams params_;
    TruncationSettings settings_;
    CMatrix columns_;
    std::vector<double> log_xi_;
};

namespace detail {

inline void check_column_request(int n, int cutoff, int guard_band) {
    if (n < 0) throw DomainError("basis column index must be non-negative");
    if (n + guard_band > cutoff) {
        TruncationReport report{cutoff, guard_band, n, std::numeric_limits<double>::infinity(), kDefaultTailTol};
        throw TruncationError("basis column " + std::to_string(n) + " lies inside the guard band of cutoff " +
                                  std::to_string(cutoff),
                              report);
    }
}

} // namespace detail

/// |n>_{l1,l2} from the closed-form coefficients, normalized.
inline FockVector basis_column(int n, const DeformationParams& p, int cutoff = kDefaultCutoff,
                               int guard_band = kDefaultGuardBand) {
    p.validate();
    detail::check_column_request(n, cutoff, guard_band);
    const auto poly = detail::deformation_polynomial_table(n, p);
    return FockVector(detail::normalized_column(n, cutoff + 1, poly).coeffs);
}

/// |n>_{l1,l2} as exp(l1 a^2/2 + l2 a)|n>, normalized, using the truncated
/// matrix exponential. Independent of the closed form above.
inline FockVector basis_column_oracle(int n, const DeformationParams& p, int cutoff = kDefaultCutoff,
                                      int guard_band = kDefaultGuardBand) {
    p.validate();
    detail::check_column_request(n, cutoff, guard_band);
    const CMatrix a = build_operator(OperatorLabel::A, p, cutoff).entries;
    const CMatrix exponent = 0.5 * p.lambda1 * (a * a) + p.lambda2 * a;
    CVector col = matrix_exponential(exponent).col(n);
    col /= col.norm();
    return FockVector(std::move(col));
}

/// _{l1,l2}<m|n>_{l1,l2} from the closed-form sum over (r, k, j).
inline double inner_product(int m, int n, const DeformationParams& p) {
    if (m < 0 || n < 0) throw DomainError("inner_product: negative index");
    p.validate();
    if (m > n) std::swap(m, n);  // fixed summation order keeps the result exactly symmetric
    std::vector<SignedLog> terms;
    const int rmax = m;
    for (int r = 0; r <= rmax; ++r) {
        const int dm = m - r;
        const int dn = n - r;
        for (int k = 0; 2 * k <= dm; ++k) {
            for (int j = 0; 2 * j <= dn; ++j) {
                SignedLog t = signed_pow(0.5 * p.lambda1, k + j) * signed_pow(p.lambda2, dm + dn - 2 * (k + j));
                if (t.sign == 0) continue;
                t.log_mag += -log_factorial(r) - log_factorial(k) - log_factorial(dm - 2 * k) - log_factorial(j) -
                             log_factorial(dn - 2 * j);
                terms.push_back(t);
            }
        }
    }
    SignedLog sum = signed_log_sum(terms);
    if (sum.sign == 0) return 0.0;
    sum.log_mag += 0.5L * (log_factorial(m) + log_factorial(n));
    sum.log_mag += std::log(static_cast<long double>(xi(m, p))) + std::log(static_cast<long double>(xi(n, p)));
    const double value = static_cast<double>(sum.value());
    if (!std::isfinite(value)) {
        throw RangeError("inner_product: overflow at (m, n) = (" + std::to_string(m) + ", " + std::to_string(n) +
                         ") " + to_string(p));
    }
    return value;
}

/// G_{mn} = inner_product(m, n) for 0 <= m, n <= nmax.
inline Eigen::MatrixXd gram_matrix(int nmax, const DeformationParams& p) {
    Eigen::MatrixXd g(nmax + 1, nmax + 1);
    for (int m = 0; m <= nmax; ++m) {
        for (int n = m; n <= nmax; ++n) {
            g(m, n) = inner_product(m, n, p);
            g(n, m) = g(m, n);
        }
    }
    return g;
}

struct LadderResidual {
    double lowering = 0.0;
    double raising = 0.0;
};

/// Residuals of a|n> = (xi_n/xi_{n-1}) sqrt(n) |n-1> and
/// a^dag_{l1,l2}|n> = (xi_n/xi_{n+1}) sqrt(n+1) |n+1>.
inline LadderResidual ladder_check(int n, const DeformedBasis& basis) {
    if (n < 0 || n + 1 > basis.max_index()) throw DomainError("ladder_check: index outside the built basis");
    LadderResidual res;
    const CVector col = basis.column(n);
    if (n >= 1) {
        const CVector lowered = apply_lowering(col);
        res.lowering =
            (lowered - basis.xi_ratio(n, n - 1) * std::sqrt(static_cast<double>(n)) * CVector(basis.column(n - 1)))
                .norm();
    }
    const CVector raised = apply_deformed_raising(col, basis.params());
    res.raising =
        (raised - basis.xi_ratio(n, n + 1) * std::sqrt(static_cast<double>(n + 1)) * CVector(basis.column(n + 1)))
            .norm();
    return res;
}

inline LadderResidual ladder_check(int n, const DeformationParams& p, const TruncationSettings& settings = {}) {
    return ladder_check(n, DeformedBasis::build(p, settings));
}

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct FockConditionsReport {
    DeformationParams params;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool all_passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return !checks.empty();
    }
};

/// Fock-space conditions for the deformed algebra, plus the eigenvalue
/// relations N col_n = n col_n and H col_n = (n + 1/2) col_n for every built
/// column. Failures are reported, never thrown.
inline FockConditionsReport validate_fock_conditions(const DeformationParams& p,
                                                     const TruncationSettings& settings = {}) {
    constexpr double kAlgebraTol = 1e-10;
    constexpr double kEigenTol = 1e-9;
    FockConditionsReport report{p, {}};
    const int cutoff = settings.cutoff;
    const int interior = cutoff - settings.guard_band;
    const CMatrix a = build_operator(OperatorLabel::A, p, cutoff).entries;
    const CMatrix adag_def = build_operator(OperatorLabel::ADAG_DEF, p, cutoff).entries;

    const double vacuum = (a * FockVector::basis_state(0, cutoff).coeffs).norm();
    report.checks.push_back({"vacuum_annihilated", vacuum, kAlgebraTol, vacuum <= kAlgebraTol});

    const CMatrix a_adag = a * adag_def;
    const CMatrix adag_a = adag_def * a;
    const double vac_norm = a_adag(0, 0).real();
    report.checks.push_back({"vacuum_norm_positive", vac_norm, 0.0, vac_norm > 0.0});

    const double comm = interior_max_abs(commutator(a_adag, adag_a), interior);
    report.checks.push_back({"number_operators_commute", comm, kAlgebraTol, comm <= kAlgebraTol});

    const double differ = interior_max_abs(a_adag - adag_a, interior);
    report.checks.push_back({"number_operators_differ", differ, 0.5, differ > 0.5});

    const DeformedBasis basis = DeformedBasis::build(p, settings);
    const CMatrix lowered = apply_lowering(basis.matrix());
    const CMatrix number_cols = apply_deformed_raising(lowered, p);
    double number_res = 0.0;
    double energy_res = 0.0;
    for (int n = 0; n <= basis.max_index(); ++n) {
        const CVector target = static_cast<double>(n) * basis.column(n);
        number_res = std::max(number_res, (number_cols.col(n) - target).norm());
        const CVector h = number_cols.col(n) + 0.5 * basis.column(n);
        energy_res = std::max(energy_res, (h - (n + 0.5) * CVector(basis.column(n))).norm());
    }
    report.checks.push_back({"number_eigenvalues", number_res, kEigenTol, number_res <= kEigenTol});
    report.checks.push_back({"energy_eigenvalues", energy_res, kEigenTol, energy_res <= kEigenTol});
    return report;
}

} // namespace dfock
