#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "kt/io.hpp"
#include "kt/problems.hpp"
#include "kt/sweep.hpp"
#include "test_util.hpp"

using namespace kt;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("kt_io_" + std::to_string(counter_++))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST(MatrixMarket, ArrayRoundTrip) {
    TempDir dir;
    kt::testing::Rng rng(19);
    const DenseMatrix a = rng.matrix(5, 3);
    write_matrix_market(a, dir.file("a.mtx"));
    const DenseMatrix back = read_matrix_market(dir.file("a.mtx"));
    ASSERT_EQ(back.rows(), a.rows());
    ASSERT_EQ(back.cols(), a.cols());
    EXPECT_EQ(max_abs(back - a), 0.0); // %.17g round-trips doubles exactly
}

TEST(MatrixMarket, CoordinateRoundTripAutoDetected) {
    TempDir dir;
    DenseMatrix a(4, 6);
    a(0, 0) = 1.5;
    a(3, 5) = -2.25;
    a(2, 1) = 1e-17;
    write_matrix_market(a, dir.file("a.mtx"), /*coordinate=*/true);
    const DenseMatrix back = read_matrix_market(dir.file("a.mtx"));
    EXPECT_EQ(max_abs(back - a), 0.0);

    const std::string text = slurp(dir.file("a.mtx"));
    EXPECT_NE(text.find("coordinate"), std::string::npos);
}

TEST(MatrixMarket, RejectsGarbage) {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.mtx"));
        out << "not a matrix\n1 2 3\n";
    }
    EXPECT_THROW(read_matrix_market(dir.file("bad.mtx")), std::invalid_argument);
    EXPECT_THROW(read_matrix_market(dir.file("missing.mtx")), std::invalid_argument);
}

TEST(VectorFile, RoundTripAndTruncation) {
    TempDir dir;
    kt::testing::Rng rng(23);
    const DenseVector v = rng.vector(17);
    write_vector(v, dir.file("v.txt"));
    const DenseVector back = read_vector(dir.file("v.txt"));
    ASSERT_EQ(back.size(), v.size());
    EXPECT_EQ(kt::testing::max_abs_diff(back, v), 0.0);

    {
        std::ofstream out(dir.file("short.txt"));
        out << "5\n1.0\n2.0\n";
    }
    EXPECT_THROW(read_vector(dir.file("short.txt")), std::invalid_argument);
}

TEST(OperatorCache, RoundTripIsBitExact) {
    TempDir dir;
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    save_operator(op, dir.file("op.ktop"));
    const SweepOperator back = load_operator(dir.file("op.ktop"), mp1.a);

    EXPECT_EQ(back.source_rows, op.source_rows);
    EXPECT_EQ(back.source_cols, op.source_cols);
    EXPECT_EQ(back.row_norms_sq, op.row_norms_sq);
    EXPECT_EQ(back.m_diag, op.m_diag);
    EXPECT_EQ(back.q.values(), op.q.values());
    EXPECT_EQ(back.a_s_t.values(), op.a_s_t.values());
}

TEST(OperatorCache, TruncatedFileIsRejected) {
    TempDir dir;
    const ProblemSpec mp1 = model_problem_1();
    save_operator(build_sweep_operator(mp1.a), dir.file("op.ktop"));
    const std::string whole = slurp(dir.file("op.ktop"));
    {
        std::ofstream out(dir.file("cut.ktop"), std::ios::binary);
        out.write(whole.data(), static_cast<std::streamsize>(whole.size() / 2));
    }
    EXPECT_THROW(load_operator(dir.file("cut.ktop"), mp1.a), NumericalError);

    {
        std::ofstream out(dir.file("junk.ktop"), std::ios::binary);
        out << "BADMAGIC" << whole.substr(8);
    }
    EXPECT_THROW(load_operator(dir.file("junk.ktop"), mp1.a), NumericalError);
}

TEST(OperatorCache, CrossLoadFailsRevalidation) {
    TempDir dir;
    const ProblemSpec mp1 = model_problem_1();
    save_operator(build_sweep_operator(mp1.a), dir.file("op.ktop"));

    // same shape, different matrix: row norms / identity cannot match
    DenseMatrix other = mp1.a;
    other(0, 0) += 0.5;
    EXPECT_THROW(load_operator(dir.file("op.ktop"), other), NumericalError);

    // different shape: dimension mismatch reported
    kt::testing::Rng rng(5);
    const DenseMatrix small = rng.matrix(3, 2);
    try {
        load_operator(dir.file("op.ktop"), small);
        FAIL() << "expected dimension mismatch";
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("6x4"), std::string::npos);
        EXPECT_NE(msg.find("3x2"), std::string::npos);
    }
}

TEST(ImagePgm, ConstantImageAndPhantomBytes) {
    TempDir dir;
    write_image_pgm(DenseVector(16, 3.5), 4, dir.file("flat.pgm"));
    const std::string flat = slurp(dir.file("flat.pgm"));
    ASSERT_EQ(flat.size(), std::string("P5\n4 4\n255\n").size() + 16);
    for (std::size_t i = flat.size() - 16; i < flat.size(); ++i) {
        EXPECT_EQ(flat[i], '\0'); // degenerate range maps to gray 0
    }

    const DenseVector phantom = shepp_logan_phantom(50);
    write_image_pgm(phantom, 50, dir.file("phantom.pgm"));
    const std::string img = slurp(dir.file("phantom.pgm"));
    EXPECT_EQ(img.size(), std::string("P5\n50 50\n255\n").size() + 2500);

    // deterministic bytes
    write_image_pgm(phantom, 50, dir.file("phantom2.pgm"));
    EXPECT_EQ(slurp(dir.file("phantom2.pgm")), img);

    EXPECT_THROW(write_image_pgm(DenseVector(10, 0.0), 4, dir.file("bad.pgm")),
                 std::invalid_argument);
}
