#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kt/matrix.hpp"

namespace kt {

/// Thin singular value decomposition A = U * diag(sigma) * V^T with
/// k = min(rows, cols) orthonormal columns in U and V. Singular values are
/// nonincreasing and nonnegative; values below the internal dead-column
/// threshold are stored as exact zeros and the matching U columns are
/// completed to an orthonormal set.
struct SvdFactorization {
    DenseMatrix u;
    std::vector<double> singular_values;
    DenseMatrix v;
    double rank_tol = 1e-10; // relative to sigma_max, used by rank queries
};

namespace detail {

// Deterministic orthonormal completion: fill column `target` of u with the
// standard basis vector that keeps the largest residual after projecting out
// all columns in `filled` (two Gram-Schmidt passes).
inline void complete_column(DenseMatrix& u, std::size_t target,
                            const std::vector<std::size_t>& filled) {
    const std::size_t m = u.rows();
    std::vector<double> best(m, 0.0), work(m, 0.0);
    double best_norm = -1.0;
    for (std::size_t k = 0; k < m; ++k) {
        std::fill(work.begin(), work.end(), 0.0);
        work[k] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c : filled) {
                const double* uc = u.col(c);
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += uc[i] * work[i];
                for (std::size_t i = 0; i < m; ++i) work[i] -= proj * uc[i];
            }
        }
        double nrm = 0.0;
        for (double v : work) nrm += v * v;
        if (nrm > best_norm) {
            best_norm = nrm;
            best = work;
        }
        if (best_norm > 0.25) break; // good enough, keep the scan short
    }
    const double nrm = std::sqrt(best_norm);
    for (std::size_t i = 0; i < m; ++i) u(i, target) = best[i] / nrm;
}

// One-sided Jacobi on a tall matrix (rows >= cols): rotates column pairs of
// w until all are mutually orthogonal, accumulating the rotations in v.
inline void jacobi_orthogonalize(DenseMatrix& w, DenseMatrix& v, std::size_t max_sweeps,
                                 double pair_tol, double dead_norm_sq) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    std::vector<double> col_norm_sq(n, 0.0);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t j = 0; j < n; ++j) {
            const double* cj = w.col(j);
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += cj[i] * cj[i];
            col_norm_sq[j] = s;
        }
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double app = col_norm_sq[p];
                const double aqq = col_norm_sq[q];
                if (app <= dead_norm_sq || aqq <= dead_norm_sq) continue;
                double* wp = w.col(p);
                double* wq = w.col(q);
                double apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) apq += wp[i] * wq[i];
                if (std::abs(apq) <= pair_tol * std::sqrt(app * aqq)) continue;

                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wpi = wp[i];
                    wp[i] = c * wpi - s * wq[i];
                    wq[i] = s * wpi + c * wq[i];
                }
                double* vp = v.col(p);
                double* vq = v.col(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double vpi = vp[i];
                    vp[i] = c * vpi - s * vq[i];
                    vq[i] = s * vpi + c * vq[i];
                }
                col_norm_sq[p] = c * c * app - 2.0 * c * s * apq + s * s * aqq;
                col_norm_sq[q] = s * s * app + 2.0 * c * s * apq + c * c * aqq;
            }
        }
        if (!rotated) return;
    }
    throw NumericalError("svd: Jacobi sweeps did not converge for " + std::to_string(m) + "x" +
                         std::to_string(n) + " matrix");
}

inline SvdFactorization svd_tall(const DenseMatrix& a, double rank_tol) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    DenseMatrix w = a;
    DenseMatrix v = DenseMatrix::identity(n);

    const double fro = frobenius_norm(a);
    const double dead = 1e-13 * fro;
    if (fro > 0.0) {
        // near-machine-precision pair threshold: clustered singular values
        // need the columns orthogonal well below any spectral gap of interest
        const double pair_tol = std::max(
            1e-14, std::sqrt(static_cast<double>(m)) * std::numeric_limits<double>::epsilon());
        jacobi_orthogonalize(w, v, 60, pair_tol, dead * dead);
    }

    std::vector<double> sigma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        const double* cj = w.col(j);
        for (std::size_t i = 0; i < m; ++i) s += cj[i] * cj[i];
        sigma[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdFactorization f;
    f.rank_tol = rank_tol;
    f.singular_values.resize(n);
    f.u = DenseMatrix(m, n);
    f.v = DenseMatrix(n, n);
    std::vector<std::size_t> live;
    std::vector<std::size_t> dead_cols;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        const double s = sigma[src];
        for (std::size_t i = 0; i < n; ++i) f.v(i, j) = v(i, src);
        if (s > dead) {
            f.singular_values[j] = s;
            const double* wc = w.col(src);
            for (std::size_t i = 0; i < m; ++i) f.u(i, j) = wc[i] / s;
            live.push_back(j);
        } else {
            f.singular_values[j] = 0.0;
            dead_cols.push_back(j);
        }
    }
    for (std::size_t j : dead_cols) {
        complete_column(f.u, j, live);
        live.push_back(j);
    }
    return f;
}

} // namespace detail

/// Computes the thin SVD by cyclic one-sided Jacobi rotations; deterministic
/// for a fixed input. Wide inputs are factored through their transpose.
inline SvdFactorization svd(const DenseMatrix& a, double rank_tol = 1e-10) {
    detail::require(a.rows() > 0 && a.cols() > 0, "svd: empty matrix");
    if (a.rows() >= a.cols()) return detail::svd_tall(a, rank_tol);
    SvdFactorization ft = detail::svd_tall(transpose(a), rank_tol);
    SvdFactorization f;
    f.rank_tol = rank_tol;
    f.singular_values = std::move(ft.singular_values);
    f.u = std::move(ft.v);
    f.v = std::move(ft.u);
    return f;
}

/// Number of singular values above rank_tol * sigma_max (0 for a zero matrix).
inline std::size_t numeric_rank(const SvdFactorization& f) {
    if (f.singular_values.empty() || f.singular_values[0] == 0.0) return 0;
    const double cut = f.rank_tol * f.singular_values[0];
    std::size_t r = 0;
    while (r < f.singular_values.size() && f.singular_values[r] > cut) ++r;
    return r;
}

inline double spectral_norm(const DenseMatrix& a) {
    const SvdFactorization f = svd(a);
    return f.singular_values.empty() ? 0.0 : f.singular_values[0];
}

/// Minimum-norm least-squares solution: inverts only singular values above
/// the rank threshold.
inline DenseVector min_norm_solution(const SvdFactorization& f, const DenseVector& b) {
    detail::require(f.u.rows() == b.size(), "min_norm_solution: b has length " +
                                                std::to_string(b.size()) + ", matrix has " +
                                                std::to_string(f.u.rows()) + " rows");
    const std::size_t r = numeric_rank(f);
    std::vector<double> x(f.v.rows(), 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        const double* uc = f.u.col(j);
        double coef = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) coef += uc[i] * b[i];
        coef /= f.singular_values[j];
        const double* vc = f.v.col(j);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += coef * vc[i];
    }
    return DenseVector(std::move(x));
}

inline DenseVector min_norm_solution(const DenseMatrix& a, const DenseVector& b) {
    return min_norm_solution(svd(a), b);
}

/// P_{R(A^T)} x = V_r V_r^T x, the orthogonal projection onto the row space.
inline DenseVector rowspace_projection(const SvdFactorization& f, const DenseVector& x) {
    detail::require(f.v.rows() == x.size(), "rowspace_projection: x has length " +
                                                std::to_string(x.size()) + ", matrix has " +
                                                std::to_string(f.v.rows()) + " columns");
    const std::size_t r = numeric_rank(f);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        const double* vc = f.v.col(j);
        double coef = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) coef += vc[i] * x[i];
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += coef * vc[i];
    }
    return DenseVector(std::move(y));
}

inline DenseVector rowspace_projection(const DenseMatrix& a, const DenseVector& x) {
    return rowspace_projection(svd(a), x);
}

/// P_{N(A)} x = x - V_r V_r^T x, the orthogonal projection onto the null space.
inline DenseVector null_projection(const SvdFactorization& f, const DenseVector& x) {
    return x - rowspace_projection(f, x);
}

inline DenseVector null_projection(const DenseMatrix& a, const DenseVector& x) {
    return null_projection(svd(a), x);
}

/// Materializes A^+ = V_r diag(1/sigma) U_r^T.
inline DenseMatrix pseudoinverse(const SvdFactorization& f) {
    const std::size_t r = numeric_rank(f);
    const std::size_t n = f.v.rows();
    const std::size_t m = f.u.rows();
    DenseMatrix p(n, m);
    for (std::size_t j = 0; j < m; ++j) {
        double* pj = p.col(j);
        for (std::size_t k = 0; k < r; ++k) {
            const double coef = f.u(j, k) / f.singular_values[k];
            const double* vk = f.v.col(k);
            for (std::size_t i = 0; i < n; ++i) pj[i] += coef * vk[i];
        }
    }
    return p;
}

/// Projector onto the row space as an explicit n x n matrix.
inline DenseMatrix rowspace_projector_matrix(const SvdFactorization& f) {
    const std::size_t r = numeric_rank(f);
    const std::size_t n = f.v.rows();
    DenseMatrix p(n, n);
    for (std::size_t k = 0; k < r; ++k) {
        const double* vk = f.v.col(k);
        for (std::size_t j = 0; j < n; ++j) {
            double* pj = p.col(j);
            const double vkj = vk[j];
            for (std::size_t i = 0; i < n; ++i) pj[i] += vk[i] * vkj;
        }
    }
    return p;
}

} // namespace kt
