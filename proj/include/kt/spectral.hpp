#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "kt/matrix.hpp"
#include "kt/svd.hpp"
#include "kt/sweep.hpp"

namespace kt {

/// Singular values of q at or above 1 - unit_tol are classified as the
/// unit cluster; exact arithmetic makes them exactly 1 and this margin only
/// absorbs round-off.
inline constexpr double kUnitSigmaTol = 1e-8;

/// Contraction data extracted from the singular values of q and of A.
/// k_bar_factor is the squared largest singular value of q below the unit
/// cluster and governs the per-sweep error contraction on N(A)^perp;
/// k_factor degenerates to 1 whenever A is rank-deficient.
struct SpectralReport {
    std::vector<double> sigma_q;  // all singular values of q, nonincreasing
    double sigma_max_q = 0.0;
    double sigma_second_q = 0.0;  // largest sigma(q) classified below 1
    double sigma_min_pos_a = 0.0; // smallest sigma(A) above the rank threshold
    double k_factor = 0.0;
    double k_bar_factor = 0.0;
    double pinv_norm_a = 0.0;     // 1 / sigma_min_pos_a
    std::size_t unit_multiplicity = 0;
};

/// Variant taking precomputed factorizations of A and of q, so drivers that
/// run several checks pay for each SVD once.
inline SpectralReport spectral_report(const SvdFactorization& fa, const SvdFactorization& fq) {
    SpectralReport rep;
    rep.sigma_q = fq.singular_values;
    rep.sigma_max_q = rep.sigma_q.empty() ? 0.0 : rep.sigma_q.front();
    for (double s : rep.sigma_q) {
        if (s >= 1.0 - kUnitSigmaTol) {
            ++rep.unit_multiplicity;
        } else {
            rep.sigma_second_q = s; // first value below the unit cluster
            break;
        }
    }
    rep.k_bar_factor = rep.sigma_second_q * rep.sigma_second_q;
    rep.k_factor = rep.unit_multiplicity > 0 ? 1.0 : rep.sigma_max_q * rep.sigma_max_q;

    const std::size_t rank = numeric_rank(fa);
    rep.sigma_min_pos_a = rank > 0 ? fa.singular_values[rank - 1] : 0.0;
    rep.pinv_norm_a = rank > 0 ? 1.0 / rep.sigma_min_pos_a : 0.0;
    return rep;
}

inline SpectralReport spectral_report(const DenseMatrix& a, const SweepOperator& op) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "spectral_report: operator does not match matrix dims");
    return spectral_report(svd(a), svd(op.q));
}

/// Discrepancy between the sweep-operator route to the pseudoinverse and the
/// SVD route, compared as maps on R(A). The fixed-point characterization
/// (I - q P_{R(A^T)})^{-1} a_s_t M determines A^+ only on attainable
/// right-hand sides; off R(A) the two maps legitimately differ.
inline double verify_pinv_identity(const SvdFactorization& fa, const SweepOperator& op) {
    const std::size_t m = op.source_rows;
    const std::size_t n = op.source_cols;
    detail::require(fa.u.rows() == m && fa.v.rows() == n,
                    "verify_pinv_identity: factorization does not match operator dims");
    const std::size_t rank = numeric_rank(fa);

    const DenseMatrix p_row = rowspace_projector_matrix(fa); // V_r V_r^T
    DenseMatrix system = matmul(op.q, p_row);                // q restricted to the row space
    for (std::size_t j = 0; j < n; ++j) {
        double* c = system.col(j);
        for (std::size_t i = 0; i < n; ++i) c[i] = (i == j ? 1.0 : 0.0) - c[i];
    }
    DenseMatrix rhs = op.a_s_t;
    for (std::size_t j = 0; j < m; ++j) {
        double* c = rhs.col(j);
        for (std::size_t i = 0; i < n; ++i) c[i] *= op.m_diag[j];
    }
    DenseMatrix solved = lu_solve(system, rhs);
    solved = matmul(p_row, solved); // confine solutions to the row space

    const DenseMatrix pinv = pseudoinverse(fa);
    DenseMatrix diff = solved - pinv;

    // restrict the comparison to R(A): diff * U_r U_r^T
    DenseMatrix u_r(m, rank);
    for (std::size_t j = 0; j < rank; ++j)
        for (std::size_t i = 0; i < m; ++i) u_r(i, j) = fa.u(i, j);
    const DenseMatrix restricted = matmul(matmul(diff, u_r), transpose(u_r));
    return max_abs(restricted);
}

inline double verify_pinv_identity(const DenseMatrix& a, const SweepOperator& op) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "verify_pinv_identity: operator does not match matrix dims");
    return verify_pinv_identity(svd(a), op);
}

/// Per-step bound evaluation. bound_values holds the evaluated right-hand
/// side for each record; max_violation <= 0 means every check passed.
struct BoundCheckResult {
    std::vector<bool> per_step_ok;
    double max_violation = 0.0;
    std::vector<double> bound_values;

    bool all_ok() const {
        for (bool ok : per_step_ok)
            if (!ok) return false;
        return true;
    }
};

/// Exact-data contraction: err(k)^2 <= k_bar * err(k-1)^2 and the geometric
/// envelope err(k)^2 <= k_bar^k * err(0)^2, with absolute-plus-relative
/// slack for floating point only.
inline BoundCheckResult check_exact_bounds(const IterationTrace& trace,
                                           const SpectralReport& report) {
    detail::require(trace.perturbation_norm == 0.0,
                    "check_exact_bounds: trace was produced with perturbed data");
    const std::size_t count = trace.records.size();
    BoundCheckResult result;
    result.per_step_ok.assign(count, true);
    result.bound_values.assign(count, 0.0);
    if (count == 0) return result;

    const double err0_sq = trace.records[0].err_norm * trace.records[0].err_norm;
    const double slack = 1e-10 * (1.0 + err0_sq);
    const double kbar = report.k_bar_factor;
    result.bound_values[0] = err0_sq;

    double envelope = err0_sq;
    for (std::size_t k = 1; k < count; ++k) {
        const double prev_sq = trace.records[k - 1].err_norm * trace.records[k - 1].err_norm;
        const double cur_sq = trace.records[k].err_norm * trace.records[k].err_norm;
        const double step_rhs = kbar * prev_sq + slack;
        envelope *= kbar;
        const double env_rhs = envelope + slack;
        result.bound_values[k] = step_rhs;
        const double violation = std::max(cur_sq - step_rhs, cur_sq - env_rhs);
        result.max_violation = std::max(result.max_violation, violation);
        if (violation > 0.0) result.per_step_ok[k] = false;
    }
    return result;
}

/// Perturbed-data bounds: the one-step recursion
///   err(k) <= sqrt(k_bar) err(k-1) + 2 ||A^+|| ||b_delta - b||
/// and the accumulated envelope with the (1 - sigma^2)^{-1} amplification
/// factor. With perturbation_norm = 0 this reduces to the norm form of the
/// exact per-step bound.
inline BoundCheckResult check_perturbed_bounds(const IterationTrace& trace,
                                               const SpectralReport& report) {
    const std::size_t count = trace.records.size();
    BoundCheckResult result;
    result.per_step_ok.assign(count, true);
    result.bound_values.assign(count, 0.0);
    if (count == 0) return result;

    const double err0 = trace.records[0].err_norm;
    const double slack = 1e-10 * (1.0 + err0);
    const double kbar = report.k_bar_factor;
    const double root_kbar = std::sqrt(kbar);
    const double pert = trace.perturbation_norm;
    const double amp = std::max(1.0 / (1.0 - kbar), 1.0);
    const double noise_term = 2.0 * report.pinv_norm_a * pert;
    result.bound_values[0] = err0;

    double env_decay = 1.0; // k_bar^{k/2}
    for (std::size_t k = 1; k < count; ++k) {
        const double prev = trace.records[k - 1].err_norm;
        const double cur = trace.records[k].err_norm;
        env_decay *= root_kbar;
        const double step_rhs = root_kbar * prev + noise_term + slack;
        const double env_rhs =
            env_decay * err0 + 4.0 * (1.0 - env_decay) * amp * report.pinv_norm_a * pert + slack;
        result.bound_values[k] = step_rhs;
        const double violation = std::max(cur - step_rhs, cur - env_rhs);
        result.max_violation = std::max(result.max_violation, violation);
        if (violation > 0.0) result.per_step_ok[k] = false;
    }
    return result;
}

struct AsmNormBound {
    double asm_norm = 0.0; // ||a_s_t * M||_2
    double bound = 0.0;    // 2 ||A^+||_2
};

/// Spectral norm of the affine sweep map a_s_t * M against twice the
/// pseudoinverse norm.
inline AsmNormBound verify_asm_norm_bound(const SvdFactorization& fa, const SweepOperator& op) {
    DenseMatrix asm_map = op.a_s_t;
    for (std::size_t j = 0; j < op.source_rows; ++j) {
        double* c = asm_map.col(j);
        for (std::size_t i = 0; i < op.source_cols; ++i) c[i] *= op.m_diag[j];
    }
    AsmNormBound out;
    out.asm_norm = spectral_norm(asm_map);
    const std::size_t rank = numeric_rank(fa);
    out.bound = rank > 0 ? 2.0 / fa.singular_values[rank - 1] : 0.0;
    return out;
}

inline AsmNormBound verify_asm_norm_bound(const DenseMatrix& a, const SweepOperator& op) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "verify_asm_norm_bound: operator does not match matrix dims");
    return verify_asm_norm_bound(svd(a), op);
}

struct AntisymmetryCheck {
    double bilinear_max = 0.0;       // max |<(q - q^T)/2 x, x>| / (1 + ||x||^2)
    double factorization_error = 0.0; // entrywise error of the split identity
};

/// Samples the quadratic form of the anti-symmetric part of q (identically
/// zero in exact arithmetic) and evaluates
///   (I - q)^T (2I - (I - q)) = (I - q^T q) + (q - q^T)
/// entrywise.
inline AntisymmetryCheck antisymmetric_identity_check(const SweepOperator& op,
                                                      std::size_t samples) {
    detail::require(samples >= 1, "antisymmetric_identity_check: need at least one sample");
    const std::size_t n = op.source_cols;
    AntisymmetryCheck out;

    std::mt19937_64 gen(0x5eed5eedULL);
    std::vector<double> x(n);
    for (std::size_t s = 0; s < samples; ++s) {
        for (double& v : x) v = 2.0 * ((gen() >> 11) * 0x1.0p-53) - 1.0;
        double quad = 0.0, nrm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double wi = 0.0;
            for (std::size_t j = 0; j < n; ++j) wi += 0.5 * (op.q(i, j) - op.q(j, i)) * x[j];
            quad += wi * x[i];
            nrm_sq += x[i] * x[i];
        }
        out.bilinear_max = std::max(out.bilinear_max, std::abs(quad) / (1.0 + nrm_sq));
    }

    DenseMatrix b(n, n); // I - q
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) b(i, j) = (i == j ? 1.0 : 0.0) - op.q(i, j);
    DenseMatrix two_minus_b(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            two_minus_b(i, j) = (i == j ? 2.0 : 0.0) - b(i, j);
    const DenseMatrix lhs = matmul(transpose(b), two_minus_b);
    const DenseMatrix qtq = matmul(transpose(op.q), op.q);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double rhs = (i == j ? 1.0 : 0.0) - qtq(i, j) + op.q(i, j) - op.q(j, i);
            worst = std::max(worst, std::abs(lhs(i, j) - rhs));
        }
    }
    out.factorization_error = worst;
    return out;
}

/// Distance between N(A) and the unit singular subspace of q, measured as
/// the spectral norm of the difference of the two orthogonal projectors
/// (equals the sine of the largest principal angle; 0 when both are empty).
inline double nullspace_equivalence_check(const SvdFactorization& fa,
                                          const SvdFactorization& fq) {
    const std::size_t n = fa.v.rows();
    detail::require(fq.v.rows() == n, "nullspace_equivalence_check: dimension mismatch");
    const std::size_t rank = numeric_rank(fa);

    // P_{N(A)} as I - V_r V_r^T (the thin V carries no basis for N(A) when
    // the matrix is wide, so the complement form is the safe one)
    DenseMatrix diff(n, n);
    for (std::size_t j = 0; j < n; ++j) diff(j, j) = 1.0;
    for (std::size_t k = 0; k < rank; ++k) {
        const double* vk = fa.v.col(k);
        for (std::size_t j = 0; j < n; ++j) {
            double* dj = diff.col(j);
            for (std::size_t i = 0; i < n; ++i) dj[i] -= vk[i] * vk[j];
        }
    }
    for (std::size_t k = 0; k < fq.singular_values.size(); ++k) {
        if (fq.singular_values[k] < 1.0 - kUnitSigmaTol) break;
        const double* vk = fq.v.col(k);
        for (std::size_t j = 0; j < n; ++j) {
            double* dj = diff.col(j);
            for (std::size_t i = 0; i < n; ++i) dj[i] -= vk[i] * vk[j];
        }
    }
    if (max_abs(diff) == 0.0) return 0.0;
    return spectral_norm(diff);
}

inline double nullspace_equivalence_check(const DenseMatrix& a, const SweepOperator& op) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "nullspace_equivalence_check: operator does not match matrix dims");
    return nullspace_equivalence_check(svd(a), svd(op.q));
}

} // namespace kt
