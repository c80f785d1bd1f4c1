#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kt {

/// Thrown when an iterative kernel fails to converge or a stored artifact
/// fails numerical revalidation. Contract violations (bad dimensions, zero
/// rows, non-finite input) throw std::invalid_argument instead.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const std::vector<double>& entries, const char* what) {
    for (double v : entries) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
        }
    }
}

} // namespace detail

/// Dense real vector. Constructors reject NaN/Inf so every downstream norm
/// and bound evaluation can assume finite data.
class DenseVector {
public:
    DenseVector() = default;

    explicit DenseVector(std::size_t len, double fill = 0.0) : entries_(len, fill) {
        detail::require(std::isfinite(fill), "DenseVector: non-finite fill value");
    }

    explicit DenseVector(std::vector<double> entries) : entries_(std::move(entries)) {
        detail::require_finite(entries_, "DenseVector");
    }

    DenseVector(std::initializer_list<double> entries) : entries_(entries) {
        detail::require_finite(entries_, "DenseVector");
    }

    std::size_t size() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    double& operator[](std::size_t i) { return entries_[i]; }

    const std::vector<double>& values() const { return entries_; }
    double* data() { return entries_.data(); }
    const double* data() const { return entries_.data(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::vector<double> entries_;
};

/// Dense real matrix in column-major storage, so column operations and
/// products of the form Q*x stream contiguously.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
        detail::require(std::isfinite(fill), "DenseMatrix: non-finite fill value");
    }

    /// Takes ownership of column-major entries (rows*cols values).
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
        : rows_(rows), cols_(cols), entries_(std::move(column_major)) {
        detail::require(entries_.size() == rows * cols,
                        "DenseMatrix: entry count does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
        detail::require_finite(entries_, "DenseMatrix");
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix eye(n, n);
        for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
        return eye;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return entries_[i + j * rows_]; }
    double& operator()(std::size_t i, std::size_t j) { return entries_[i + j * rows_]; }

    const std::vector<double>& values() const { return entries_; }
    double* data() { return entries_.data(); }
    const double* data() const { return entries_.data(); }

    /// Pointer to the start of column j (contiguous, rows() entries).
    double* col(std::size_t j) { return entries_.data() + j * rows_; }
    const double* col(std::size_t j) const { return entries_.data() + j * rows_; }

    DenseVector row_vector(std::size_t i) const {
        std::vector<double> r(cols_);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
        return DenseVector(std::move(r));
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

inline double dot(const DenseVector& a, const DenseVector& b) {
    detail::require(a.size() == b.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const DenseVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm2(const DenseVector& v) { return std::sqrt(norm2_sq(v)); }

inline DenseVector operator+(const DenseVector& a, const DenseVector& b) {
    detail::require(a.size() == b.size(), "vector add: length mismatch");
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return DenseVector(std::move(r));
}

inline DenseVector operator-(const DenseVector& a, const DenseVector& b) {
    detail::require(a.size() == b.size(), "vector sub: length mismatch");
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return DenseVector(std::move(r));
}

inline DenseVector operator*(double s, const DenseVector& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = s * v[i];
    return DenseVector(std::move(r));
}

/// y = A*x, streaming A column by column.
inline DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
    detail::require(a.cols() == x.size(), "matvec: A is " + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + ", x has length " +
                                              std::to_string(x.size()));
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const double* cj = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += cj[i] * xj;
    }
    return DenseVector(std::move(y));
}

/// y = A^T*x (each output entry is one contiguous column dot).
inline DenseVector matvec_transpose(const DenseMatrix& a, const DenseVector& x) {
    detail::require(a.rows() == x.size(), "matvec_transpose: dimension mismatch");
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double* cj = a.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += cj[i] * x[i];
        y[j] = s;
    }
    return DenseVector(std::move(y));
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.cols() == b.rows(), "matmul: inner dimensions " + std::to_string(a.cols()) +
                                              " and " + std::to_string(b.rows()) + " differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double* cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            const double* ak = a.col(k);
            for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    return t;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sub: shape mismatch");
    std::vector<double> r(a.values().size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a.values()[i] - b.values()[i];
    return DenseMatrix(a.rows(), a.cols(), std::move(r));
}

inline double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

/// Solves A*X = B for square A by Gaussian elimination with partial
/// pivoting; B holds one right-hand side per column.
inline DenseMatrix lu_solve(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.rows() == a.cols(), "lu_solve: matrix not square");
    detail::require(a.rows() == b.rows(), "lu_solve: right-hand side row count mismatch");
    const std::size_t n = a.rows();
    DenseMatrix lu = a;
    DenseMatrix x = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(lu(i, k)) > best) {
                best = std::abs(lu(i, k));
                piv = i;
            }
        }
        if (best == 0.0) {
            throw NumericalError("lu_solve: singular " + std::to_string(n) + "x" +
                                 std::to_string(n) + " system at pivot " + std::to_string(k));
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            if (f == 0.0) continue;
            lu(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
        }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, j);
            for (std::size_t k2 = ii + 1; k2 < n; ++k2) s -= lu(ii, k2) * x(k2, j);
            x(ii, j) = s / lu(ii, ii);
        }
    }
    return x;
}

} // namespace kt
