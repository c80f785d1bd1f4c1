#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kt/matrix.hpp"
#include "kt/svd.hpp"

namespace kt {

/// One full Kaczmarz sweep over the rows of A as a single affine map
///   x  ->  q * x + a_s_t * diag(m_diag) * b,
/// where q is the product of the row projectors applied in row order
/// (last row outermost) and column i of a_s_t carries the contribution of
/// row i propagated through the projectors of the remaining rows.
struct SweepOperator {
    DenseMatrix q;                    // n x n
    DenseMatrix a_s_t;                // n x m, column i holds the row-i sweep direction
    std::vector<double> m_diag;       // 1 / ||a_i||^2
    std::vector<double> row_norms_sq; // ||a_i||^2
    std::size_t source_rows = 0;      // m
    std::size_t source_cols = 0;      // n
};

/// Projects x onto the hyperplane <a_i, x> = b_i.
inline DenseVector kaczmarz_step(const DenseVector& a_i, double b_i, const DenseVector& x) {
    detail::require(a_i.size() == x.size(), "kaczmarz_step: row length " +
                                                std::to_string(a_i.size()) + " vs iterate length " +
                                                std::to_string(x.size()));
    detail::require(std::isfinite(b_i), "kaczmarz_step: non-finite right-hand side");
    const double nrm_sq = norm2_sq(a_i);
    detail::require(nrm_sq > 0.0, "kaczmarz_step: zero row");
    detail::require(std::isfinite(nrm_sq), "kaczmarz_step: row norm overflows");
    const double step = (b_i - dot(a_i, x)) / nrm_sq;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + step * a_i[i];
    return DenseVector(std::move(y));
}

/// One pass over all rows in order 1..m, each applied once.
inline DenseVector kaczmarz_sweep(const DenseMatrix& a, const DenseVector& b,
                                  const DenseVector& x) {
    detail::require(a.rows() == b.size(), "kaczmarz_sweep: b length mismatch");
    detail::require(a.cols() == x.size(), "kaczmarz_sweep: x length mismatch");
    std::vector<double> y(x.values());
    std::vector<double> row(a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double nrm_sq = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            row[j] = a(i, j);
            nrm_sq += row[j] * row[j];
        }
        if (nrm_sq <= 0.0) {
            throw std::invalid_argument("kaczmarz_sweep: row " + std::to_string(i) + " is zero");
        }
        detail::require(std::isfinite(nrm_sq),
                        "kaczmarz_sweep: row " + std::to_string(i) + " norm overflows");
        double r = b[i];
        for (std::size_t j = 0; j < a.cols(); ++j) r -= row[j] * y[j];
        const double step = r / nrm_sq;
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += step * row[j];
    }
    return DenseVector(std::move(y));
}

/// Builds (q, a_s_t, m_diag) in one pass of rank-one updates, looping rows
/// from last to first so the running product ends as the forward-sweep
/// composition. Cost O(m * n^2).
inline SweepOperator build_sweep_operator(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    detail::require(m > 0 && n > 0, "build_sweep_operator: empty matrix");

    SweepOperator op;
    op.source_rows = m;
    op.source_cols = n;
    op.row_norms_sq.resize(m);
    op.m_diag.resize(m);
    op.a_s_t = DenseMatrix(n, m);
    DenseMatrix q_run = DenseMatrix::identity(n);

    std::vector<double> row(n);
    for (std::size_t ii = m; ii-- > 0;) {
        double nrm_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = a(ii, j);
            nrm_sq += row[j] * row[j];
        }
        if (nrm_sq <= 0.0) {
            throw std::invalid_argument("build_sweep_operator: row " + std::to_string(ii) +
                                        " is zero");
        }
        detail::require(std::isfinite(nrm_sq),
                        "build_sweep_operator: row " + std::to_string(ii) + " norm overflows");
        op.row_norms_sq[ii] = nrm_sq;
        op.m_diag[ii] = 1.0 / nrm_sq;

        // c = q_run * a_i, the accumulated sweep direction for row ii
        double* c = op.a_s_t.col(ii);
        for (std::size_t i = 0; i < n; ++i) c[i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double rj = row[j];
            if (rj == 0.0) continue;
            const double* qc = q_run.col(j);
            for (std::size_t i = 0; i < n; ++i) c[i] += qc[i] * rj;
        }
        // q_run <- q_run - c * a_i^T / ||a_i||^2
        for (std::size_t j = 0; j < n; ++j) {
            const double f = row[j] / nrm_sq;
            if (f == 0.0) continue;
            double* qc = q_run.col(j);
            for (std::size_t i = 0; i < n; ++i) qc[i] -= c[i] * f;
        }
    }
    op.q = std::move(q_run);
    return op;
}

/// q * x + a_s_t * (m_diag .* b): one sweep through the operator.
inline DenseVector apply_sweep(const SweepOperator& op, const DenseVector& x,
                               const DenseVector& b) {
    detail::require(x.size() == op.source_cols, "apply_sweep: x length mismatch");
    detail::require(b.size() == op.source_rows, "apply_sweep: b length mismatch");
    DenseVector y = matvec(op.q, x);
    for (std::size_t i = 0; i < op.source_rows; ++i) {
        const double coef = op.m_diag[i] * b[i];
        if (coef == 0.0) continue;
        const double* c = op.a_s_t.col(i);
        for (std::size_t j = 0; j < op.source_cols; ++j) y[j] += coef * c[j];
    }
    return y;
}

/// Max-entry deviation of q from I - a_s_t M A against the matrix the
/// operator claims to represent. O(m n^2), the cost of a rebuild.
inline double proposition_identity_error(const SweepOperator& op, const DenseMatrix& a) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "proposition_identity_error: operator built for " +
                        std::to_string(op.source_rows) + "x" + std::to_string(op.source_cols) +
                        ", got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    const std::size_t m = op.source_rows;
    const std::size_t n = op.source_cols;
    double worst = 0.0;
    std::vector<double> acc(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double f = a(i, j) * op.m_diag[i];
            if (f == 0.0) continue;
            const double* c = op.a_s_t.col(i);
            for (std::size_t r = 0; r < n; ++r) acc[r] += c[r] * f;
        }
        const double* qj = op.q.col(j);
        for (std::size_t r = 0; r < n; ++r) {
            const double expected = (r == j ? 1.0 : 0.0) - acc[r];
            worst = std::max(worst, std::abs(expected - qj[r]));
        }
    }
    return worst;
}

/// Spectral norm of the residual propagation map L = I - A * a_s_t * M.
inline double residual_map_norm(const SweepOperator& op, const DenseMatrix& a) {
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "residual_map_norm: operator built for " + std::to_string(op.source_rows) +
                        "x" + std::to_string(op.source_cols) + ", got " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    const std::size_t m = op.source_rows;
    const std::size_t n = op.source_cols;
    DenseMatrix l(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        // column j of A * (a_s_t * M) is A * (m_diag[j] * a_s_t(:,j))
        const double* c = op.a_s_t.col(j);
        double* lj = l.col(j);
        for (std::size_t k = 0; k < n; ++k) {
            const double v = c[k] * op.m_diag[j];
            if (v == 0.0) continue;
            const double* ak = a.col(k);
            for (std::size_t i = 0; i < m; ++i) lj[i] -= ak[i] * v;
        }
        lj[j] += 1.0;
    }
    return spectral_norm(l);
}

struct TraceRecord {
    std::size_t k = 0;
    DenseVector y;
    double err_norm = 0.0; // ||y_k - reference||
    double res_norm = 0.0; // ||b - A y_k||
};

/// Per-iteration history of a run, against the reference solution
/// P_{N(A)} y_0 + x^+. perturbation_norm records ||b_used - b_exact||.
struct IterationTrace {
    std::vector<TraceRecord> records;
    DenseVector reference_solution;
    double perturbation_norm = 0.0;
};

namespace detail {

inline void push_record(IterationTrace& t, std::size_t k, const DenseVector& y,
                        const DenseVector& reference, const DenseMatrix& a,
                        const DenseVector& b) {
    TraceRecord rec;
    rec.k = k;
    rec.y = y;
    rec.err_norm = norm2(y - reference);
    rec.res_norm = norm2(b - matvec(a, y));
    t.records.push_back(std::move(rec));
}

} // namespace detail

/// Runs k_max sweeps of y <- q y + a_s_t M b from y0; record k of the trace
/// holds y_k (k = 0 is the initial state, so k_max + 1 records total).
inline IterationTrace tanabe_iterate(const SweepOperator& op, const DenseVector& b,
                                     const DenseVector& y0, std::size_t k_max,
                                     const DenseVector& reference, const DenseMatrix& a,
                                     double perturbation_norm = 0.0) {
    detail::require(b.size() == op.source_rows, "tanabe_iterate: b length mismatch");
    detail::require(y0.size() == op.source_cols, "tanabe_iterate: y0 length mismatch");
    detail::require(reference.size() == op.source_cols, "tanabe_iterate: reference mismatch");
    detail::require(a.rows() == op.source_rows && a.cols() == op.source_cols,
                    "tanabe_iterate: matrix does not match operator dims");

    // Vc is fixed across sweeps; only the q*y product repeats.
    std::vector<double> vc(op.source_cols, 0.0);
    for (std::size_t i = 0; i < op.source_rows; ++i) {
        const double coef = op.m_diag[i] * b[i];
        if (coef == 0.0) continue;
        const double* c = op.a_s_t.col(i);
        for (std::size_t j = 0; j < op.source_cols; ++j) vc[j] += coef * c[j];
    }

    IterationTrace trace;
    trace.reference_solution = reference;
    trace.perturbation_norm = perturbation_norm;
    trace.records.reserve(k_max + 1);

    DenseVector y = y0;
    detail::push_record(trace, 0, y, reference, a, b);
    for (std::size_t k = 1; k <= k_max; ++k) {
        DenseVector qy = matvec(op.q, y);
        for (std::size_t j = 0; j < op.source_cols; ++j) qy[j] += vc[j];
        y = std::move(qy);
        detail::push_record(trace, k, y, reference, a, b);
    }
    return trace;
}

/// Classical row-by-row Kaczmarz, recorded once per full sweep so its trace
/// is comparable with tanabe_iterate.
inline IterationTrace kaczmarz_trace(const DenseMatrix& a, const DenseVector& b,
                                     const DenseVector& y0, std::size_t sweeps,
                                     const DenseVector& reference,
                                     double perturbation_norm = 0.0) {
    IterationTrace trace;
    trace.reference_solution = reference;
    trace.perturbation_norm = perturbation_norm;
    trace.records.reserve(sweeps + 1);
    DenseVector y = y0;
    detail::push_record(trace, 0, y, reference, a, b);
    for (std::size_t k = 1; k <= sweeps; ++k) {
        y = kaczmarz_sweep(a, b, y);
        detail::push_record(trace, k, y, reference, a, b);
    }
    return trace;
}

/// Classical Kaczmarz recorded after every single row projection (sweeps * m
/// steps); used behind a diagnostic flag.
inline IterationTrace kaczmarz_trace_per_step(const DenseMatrix& a, const DenseVector& b,
                                              const DenseVector& y0, std::size_t steps,
                                              const DenseVector& reference,
                                              double perturbation_norm = 0.0) {
    IterationTrace trace;
    trace.reference_solution = reference;
    trace.perturbation_norm = perturbation_norm;
    trace.records.reserve(steps + 1);
    DenseVector y = y0;
    detail::push_record(trace, 0, y, reference, a, b);
    for (std::size_t k = 1; k <= steps; ++k) {
        const std::size_t i = (k - 1) % a.rows();
        y = kaczmarz_step(a.row_vector(i), b[i], y);
        detail::push_record(trace, k, y, reference, a, b);
    }
    return trace;
}

} // namespace kt
