#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kt/matrix.hpp"
#include "kt/sweep.hpp"

namespace kt {

namespace io_detail {

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// All writers go through a temp file + rename so readers never observe a
/// partial file.
inline void atomic_write(const std::string& path, const std::string& contents,
                         bool binary = false) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline void append_u64_le(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_f64_le(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64_le(buf, bits);
}

class ByteReader {
public:
    ByteReader(const std::string& data, std::string path)
        : data_(data), path_(std::move(path)) {}

    std::uint64_t read_u64() {
        if (pos_ + 8 > data_.size()) {
            throw NumericalError("operator cache " + path_ + ": truncated file");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double read_f64() {
        const std::uint64_t bits = read_u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    void expect_magic(const char* magic, std::size_t len) {
        if (pos_ + len > data_.size() || std::memcmp(data_.data() + pos_, magic, len) != 0) {
            throw NumericalError("operator cache " + path_ + ": bad magic header");
        }
        pos_ += len;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace io_detail

/// Writes a MatrixMarket file: dense `array` format by default, `coordinate`
/// (nonzeros only) when requested.
inline void write_matrix_market(const DenseMatrix& a, const std::string& path,
                                bool coordinate = false) {
    std::string out;
    if (coordinate) {
        std::size_t nnz = 0;
        for (double v : a.values())
            if (v != 0.0) ++nnz;
        out += "%%MatrixMarket matrix coordinate real general\n";
        out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + " " +
               std::to_string(nnz) + "\n";
        for (std::size_t j = 0; j < a.cols(); ++j) {
            for (std::size_t i = 0; i < a.rows(); ++i) {
                const double v = a(i, j);
                if (v == 0.0) continue;
                out += std::to_string(i + 1) + " " + std::to_string(j + 1) + " " +
                       io_detail::format_value(v) + "\n";
            }
        }
    } else {
        out += "%%MatrixMarket matrix array real general\n";
        out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
        for (double v : a.values()) out += io_detail::format_value(v) + "\n";
    }
    io_detail::atomic_write(path, out);
}

/// Reads array or coordinate MatrixMarket files (detected from the header).
inline DenseMatrix read_matrix_market(const std::string& path) {
    std::istringstream in(io_detail::read_file(path, false));
    std::string header;
    std::getline(in, header);
    if (header.rfind("%%MatrixMarket", 0) != 0) {
        throw std::invalid_argument(path + ": missing MatrixMarket header");
    }
    const bool coordinate = header.find("coordinate") != std::string::npos;
    if (header.find("real") == std::string::npos ||
        header.find("general") == std::string::npos) {
        throw std::invalid_argument(path + ": only real general matrices are supported");
    }
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream dims(line);
    std::size_t rows = 0, cols = 0;
    dims >> rows >> cols;
    if (rows == 0 || cols == 0) throw std::invalid_argument(path + ": bad dimension line");

    DenseMatrix a(rows, cols);
    if (coordinate) {
        std::size_t nnz = 0;
        dims >> nnz;
        for (std::size_t k = 0; k < nnz; ++k) {
            std::size_t i = 0, j = 0;
            double v = 0.0;
            if (!(in >> i >> j >> v)) throw std::invalid_argument(path + ": truncated entries");
            if (i < 1 || j < 1 || i > rows || j > cols) {
                throw std::invalid_argument(path + ": entry index out of range");
            }
            a(i - 1, j - 1) = v;
        }
    } else {
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t i = 0; i < rows; ++i) {
                double v = 0.0;
                if (!(in >> v)) throw std::invalid_argument(path + ": truncated entries");
                a(i, j) = v;
            }
        }
    }
    return DenseMatrix(rows, cols, std::vector<double>(a.values())); // revalidates finiteness
}

/// One value per line with a leading count header.
inline void write_vector(const DenseVector& v, const std::string& path) {
    std::string out = std::to_string(v.size()) + "\n";
    for (double x : v) out += io_detail::format_value(x) + "\n";
    io_detail::atomic_write(path, out);
}

inline DenseVector read_vector(const std::string& path) {
    std::istringstream in(io_detail::read_file(path, false));
    std::size_t count = 0;
    if (!(in >> count)) throw std::invalid_argument(path + ": missing count header");
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> vals[i])) throw std::invalid_argument(path + ": truncated vector");
    }
    return DenseVector(std::move(vals));
}

inline constexpr char kOperatorMagic[8] = {'K', 'T', 'S', 'W', 'E', 'E', 'P', '\0'};
inline constexpr std::uint64_t kOperatorVersion = 1;

/// Versioned little-endian binary layout: magic, version, m, n, then
/// row_norms_sq, m_diag, a_s_t, q as IEEE-754 arrays. Round-trips bit-exactly.
inline void save_operator(const SweepOperator& op, const std::string& path) {
    std::string out;
    out.reserve(48 + 8 * (2 * op.source_rows + op.a_s_t.values().size() + op.q.values().size()));
    out.append(kOperatorMagic, sizeof(kOperatorMagic));
    io_detail::append_u64_le(out, kOperatorVersion);
    io_detail::append_u64_le(out, op.source_rows);
    io_detail::append_u64_le(out, op.source_cols);
    for (double v : op.row_norms_sq) io_detail::append_f64_le(out, v);
    for (double v : op.m_diag) io_detail::append_f64_le(out, v);
    for (double v : op.a_s_t.values()) io_detail::append_f64_le(out, v);
    for (double v : op.q.values()) io_detail::append_f64_le(out, v);
    io_detail::atomic_write(path, out, /*binary=*/true);
}

/// Loads a cached operator and revalidates it against the matrix it claims
/// to represent: dimensions, stored row norms, and the defining identity
/// q = I - a_s_t M A (entrywise, 1e-10 * n). A stale or tampered cache fails
/// here rather than corrupting a run.
inline SweepOperator load_operator(const std::string& path, const DenseMatrix& a) {
    const std::string data = io_detail::read_file(path, true);
    io_detail::ByteReader reader(data, path);
    reader.expect_magic(kOperatorMagic, sizeof(kOperatorMagic));
    const std::uint64_t version = reader.read_u64();
    if (version != kOperatorVersion) {
        throw NumericalError("operator cache " + path + ": unsupported version " +
                             std::to_string(version));
    }
    const std::uint64_t m = reader.read_u64();
    const std::uint64_t n = reader.read_u64();
    constexpr std::uint64_t kDimCap = 1u << 24;
    if (m == 0 || n == 0 || m > kDimCap || n > kDimCap) {
        throw NumericalError("operator cache " + path + ": implausible dimensions " +
                             std::to_string(m) + "x" + std::to_string(n));
    }
    if (m != a.rows() || n != a.cols()) {
        throw NumericalError("operator cache " + path + ": built for " + std::to_string(m) + "x" +
                             std::to_string(n) + ", matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()));
    }

    SweepOperator op;
    op.source_rows = m;
    op.source_cols = n;
    op.row_norms_sq.resize(m);
    op.m_diag.resize(m);
    for (auto& v : op.row_norms_sq) v = reader.read_f64();
    for (auto& v : op.m_diag) v = reader.read_f64();
    std::vector<double> ast(n * m), q(n * n);
    for (auto& v : ast) v = reader.read_f64();
    for (auto& v : q) v = reader.read_f64();
    if (!reader.exhausted()) {
        throw NumericalError("operator cache " + path + ": trailing bytes");
    }
    op.a_s_t = DenseMatrix(n, m, std::move(ast));
    op.q = DenseMatrix(n, n, std::move(q));

    for (std::size_t i = 0; i < m; ++i) {
        double nrm_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) nrm_sq += a(i, j) * a(i, j);
        if (std::abs(nrm_sq - op.row_norms_sq[i]) > 1e-12 * (1.0 + nrm_sq) ||
            std::abs(op.m_diag[i] * op.row_norms_sq[i] - 1.0) > 1e-12) {
            throw NumericalError("operator cache " + path + ": row norm mismatch at row " +
                                 std::to_string(i));
        }
    }
    const double worst = proposition_identity_error(op, a);
    if (worst > 1e-10 * static_cast<double>(n)) {
        throw NumericalError("operator cache " + path +
                             ": identity revalidation failed (max deviation " +
                             io_detail::format_value(worst) + "); cache is stale or tampered");
    }
    return op;
}

/// 8-bit binary PGM with linear min-max scaling; a constant image maps to
/// all-zero gray values.
inline void write_image_pgm(const DenseVector& v, std::size_t n, const std::string& path) {
    detail::require(v.size() == n * n, "write_image_pgm: vector length " +
                                           std::to_string(v.size()) + " is not " +
                                           std::to_string(n) + "^2");
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double range = hi - lo;
    std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    out.reserve(out.size() + n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        const int g = range > 0.0 ? static_cast<int>(std::lround((v[i] - lo) / range * 255.0)) : 0;
        out.push_back(static_cast<char>(std::clamp(g, 0, 255)));
    }
    io_detail::atomic_write(path, out, /*binary=*/true);
}

} // namespace kt
