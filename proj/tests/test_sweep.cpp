#include <gtest/gtest.h>

#include "kt/problems.hpp"
#include "kt/spectral.hpp"
#include "kt/svd.hpp"
#include "kt/sweep.hpp"
#include "test_util.hpp"

using namespace kt;

TEST(KaczmarzStep, ProjectsOntoHyperplane) {
    const DenseVector r = kaczmarz_step(DenseVector{1.0, 0.0}, 1.0, DenseVector{0.0, 0.0});
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);

    // a point already on the hyperplane is fixed
    const DenseVector a{2.0, -1.0, 0.5};
    const DenseVector x{1.0, 1.0, 2.0};
    const DenseVector y = kaczmarz_step(a, dot(a, x), x);
    EXPECT_LT(kt::testing::max_abs_diff(y, x), 1e-15);

    // first row of the rank-3 benchmark from the zero vector: (5/15) * a_1
    const ProblemSpec mp1 = model_problem_1();
    const DenseVector step =
        kaczmarz_step(mp1.a.row_vector(0), mp1.b[0], DenseVector(4, 0.0));
    EXPECT_LT(kt::testing::max_abs_diff(
                  step, DenseVector{1.0 / 3.0, 1.0, 2.0 / 3.0, -1.0 / 3.0}),
              1e-14);

    EXPECT_THROW(kaczmarz_step(DenseVector{0.0, 0.0}, 1.0, DenseVector{0.0, 0.0}),
                 std::invalid_argument);
}

TEST(KaczmarzStep, ResultSatisfiesRowEquation) {
    kt::testing::Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = rng.integer(2, 12);
        const DenseVector a = rng.vector(n);
        const DenseVector x = rng.vector(n);
        const double b = rng.uniform();
        const DenseVector y = kaczmarz_step(a, b, x);
        EXPECT_LE(std::abs(dot(a, y) - b), 1e-10 * (1.0 + std::abs(b)));
    }
}

TEST(KaczmarzSweep, SingleRowEqualsStep) {
    DenseMatrix a(1, 3, {1.0, -2.0, 0.5});
    const DenseVector b{2.0};
    const DenseVector x{0.3, 0.1, -0.7};
    EXPECT_LT(kt::testing::max_abs_diff(kaczmarz_sweep(a, b, x),
                                        kaczmarz_step(a.row_vector(0), b[0], x)),
              1e-15);
}

TEST(KaczmarzSweep, ExactSolutionIsFixedPoint) {
    kt::testing::Rng rng(17);
    DenseMatrix a = rng.matrix(5, 3);
    const DenseVector x = rng.vector(3);
    const DenseVector b = matvec(a, x);
    EXPECT_LT(kt::testing::max_abs_diff(kaczmarz_sweep(a, b, x), x), 1e-12);
}

TEST(BuildSweepOperator, SingleRowProjector) {
    DenseMatrix a(1, 2, {1.0, 0.0});
    const SweepOperator op = build_sweep_operator(a);
    EXPECT_DOUBLE_EQ(op.q(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(op.q(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(op.q(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(op.q(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(op.a_s_t(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(op.a_s_t(1, 0), 0.0);
    ASSERT_EQ(op.m_diag.size(), 1u);
    EXPECT_DOUBLE_EQ(op.m_diag[0], 1.0);
}

TEST(BuildSweepOperator, IdenticalRowsAreIdempotent) {
    DenseMatrix a(2, 2, {1.0, 1.0, 0.0, 0.0}); // both rows (1, 0)
    const SweepOperator op = build_sweep_operator(a);
    EXPECT_NEAR(op.q(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(op.q(1, 1), 1.0, 1e-15);
}

TEST(BuildSweepOperator, ZeroRowIsHardErrorWithIndex) {
    DenseMatrix a(3, 2, {1.0, 0.0, 2.0, 1.0, 0.0, 2.0}); // row 1 is zero
    try {
        build_sweep_operator(a);
        FAIL() << "expected zero-row rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(BuildSweepOperator, ModelProblem1PublishedValues) {
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const SvdFactorization fq = svd(op.q);
    EXPECT_NEAR(fq.singular_values[0], 1.0000, 5e-4);
    EXPECT_NEAR(fq.singular_values[1], 0.7773, 5e-4);
}

TEST(BuildSweepOperator, InvariantsOnRandomMatrices) {
    kt::testing::Rng rng(71);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t m = rng.integer(2, 14);
        const std::size_t n = rng.integer(2, 14);
        DenseMatrix a = (trial % 2 == 0 && m > 2) ? rng.rank_deficient_matrix(m, n)
                                                  : rng.matrix(m, n);
        const SweepOperator op = build_sweep_operator(a);
        EXPECT_LE(proposition_identity_error(op, a), 1e-10 * static_cast<double>(n));
        EXPECT_LE(spectral_norm(op.q), 1.0 + 1e-8);
        for (double rn : op.row_norms_sq) EXPECT_GT(rn, 0.0);
    }
}

// The module's central oracle: one hand-rolled sweep equals one application
// of the assembled affine map.
TEST(SweepOperator, EquivalenceWithRowByRowSweep) {
    kt::testing::Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = rng.integer(2, 20);
        const std::size_t n = rng.integer(2, 20);
        DenseMatrix a = (trial % 2 == 0 && m > 2) ? rng.rank_deficient_matrix(m, n)
                                                  : rng.matrix(m, n);
        const DenseVector x = rng.vector(n);
        const DenseVector b = rng.vector(m);
        const SweepOperator op = build_sweep_operator(a);
        const DenseVector via_rows = kaczmarz_sweep(a, b, x);
        const DenseVector via_operator = apply_sweep(op, x, b);
        EXPECT_LE(norm2(via_rows - via_operator), 1e-9 * (1.0 + norm2(x) + norm2(b)));
    }
}

TEST(SweepOperator, NullSpaceVectorsAreFixedBothWays) {
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const DenseVector null_vec{-2.0, 3.0, -2.0, 3.0};
    const double nrm = norm2(null_vec);
    EXPECT_LE(norm2(matvec(op.q, null_vec) - null_vec), 1e-10 * nrm);
    EXPECT_LE(norm2(matvec_transpose(op.q, null_vec) - null_vec), 1e-10 * nrm);
}

TEST(SweepOperator, RowSpaceVectorsContractBelowSecondSigma) {
    kt::testing::Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = rng.integer(3, 10);
        const std::size_t n = rng.integer(3, 10);
        DenseMatrix a = (trial % 2 == 0) ? rng.rank_deficient_matrix(m, n) : rng.matrix(m, n);
        const SweepOperator op = build_sweep_operator(a);
        const SvdFactorization fq = svd(op.q);
        double sigma_second = 0.0;
        for (double s : fq.singular_values) {
            if (s < 1.0 - kUnitSigmaTol) {
                sigma_second = s;
                break;
            }
        }
        const SvdFactorization fa = svd(a);
        for (int k = 0; k < 5; ++k) {
            DenseVector x = rowspace_projection(fa, rng.vector(n));
            const double nrm = norm2(x);
            if (nrm < 1e-12) continue;
            x = (1.0 / nrm) * x;
            EXPECT_LE(norm2(matvec(op.q, x)), sigma_second + 1e-8);
        }
    }
}

TEST(TanabeIterate, TrivialAndFixedPointTraces) {
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);

    const DenseVector zero4(4, 0.0);
    const DenseVector zero6(6, 0.0);
    IterationTrace t = tanabe_iterate(op, zero6, zero4, 5, zero4, mp1.a);
    ASSERT_EQ(t.records.size(), 6u);
    for (const auto& rec : t.records) {
        EXPECT_LE(norm2(rec.y), 1e-15);
        EXPECT_LE(rec.err_norm, 1e-15);
    }

    const DenseVector x_dag = min_norm_solution(mp1.a, mp1.b);
    t = tanabe_iterate(op, mp1.b, x_dag, 10, x_dag, mp1.a);
    for (const auto& rec : t.records) EXPECT_LE(rec.err_norm, 1e-10);
}

TEST(TanabeIterate, ModelProblem1ConvergesMonotonically) {
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const DenseVector x_dag = min_norm_solution(mp1.a, mp1.b);
    const IterationTrace t =
        tanabe_iterate(op, mp1.b, DenseVector(4, 0.0), 100, x_dag, mp1.a);
    ASSERT_EQ(t.records.size(), 101u);
    for (std::size_t k = 1; k < t.records.size(); ++k) {
        EXPECT_LE(t.records[k].err_norm, t.records[k - 1].err_norm + 1e-14);
    }
    EXPECT_LE(t.records.back().err_norm, 1e-9);
}

TEST(TanabeIterate, ExactErrorRecurrence) {
    // ||e_{k+1}||^2 = ||e_k||^2 - ||(I - q^T q)^{1/2} e_k||^2, with the square
    // root formed from the SVD of q.
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const DenseVector x_dag = min_norm_solution(mp1.a, mp1.b);
    const IterationTrace t =
        tanabe_iterate(op, mp1.b, DenseVector(4, 0.0), 40, x_dag, mp1.a);

    const SvdFactorization fq = svd(op.q);
    const std::size_t n = 4;
    DenseMatrix root(n, n); // (I - q^T q)^{1/2} = V diag(sqrt(1 - s^2)) V^T
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::min(fq.singular_values[k], 1.0);
        const double w = std::sqrt(1.0 - s * s);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) root(i, j) += w * fq.v(i, k) * fq.v(j, k);
    }
    for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
        const DenseVector e_k = t.records[k].y - x_dag;
        const double lhs = t.records[k + 1].err_norm * t.records[k + 1].err_norm;
        const double rhs = norm2_sq(e_k) - norm2_sq(matvec(root, e_k));
        EXPECT_NEAR(lhs, rhs, 1e-8 * (1.0 + norm2_sq(e_k)));
    }
}

TEST(TanabeIterate, IterateConfinement) {
    // every iterate stays in P_{N(A)} y_0 + N(A)^perp
    kt::testing::Rng rng(83);
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const SvdFactorization fa = svd(mp1.a);
    const DenseVector y0 = rng.vector(4);
    const DenseVector reference = null_projection(fa, y0) + min_norm_solution(fa, mp1.b);
    const IterationTrace t = tanabe_iterate(op, mp1.b, y0, 30, reference, mp1.a);
    for (const auto& rec : t.records) {
        const DenseVector drift = null_projection(fa, rec.y - y0);
        EXPECT_LE(norm2(drift), 1e-8 * (1.0 + norm2(rec.y)));
        // equivalently: e_k is confined to N(A)^perp
        const DenseVector e_k = rec.y - reference;
        EXPECT_LE(norm2(null_projection(fa, e_k)), 1e-8 * (1.0 + norm2(e_k)));
    }
}

TEST(ResidualMapNorm, KnownCasesAndMonotonicity) {
    // A = I: one sweep solves the system outright, L = 0
    const SweepOperator op_eye = build_sweep_operator(DenseMatrix::identity(2));
    EXPECT_NEAR(residual_map_norm(op_eye, DenseMatrix::identity(2)), 0.0, 1e-12);

    // single row: the only residual component is zeroed by its projection
    DenseMatrix single(1, 3, {1.0, 2.0, -1.0});
    const SweepOperator op_single = build_sweep_operator(single);
    EXPECT_NEAR(residual_map_norm(op_single, single), 0.0, 1e-12);

    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const double l_norm = residual_map_norm(op, mp1.a);
    EXPECT_TRUE(std::isfinite(l_norm));

    // rows of an orthogonal family give ||L|| <= 1 and hence monotone
    // residuals even for inconsistent data
    DenseMatrix ortho(2, 3, {1.0, 0.0, 0.0, 1.0, 0.0, 2.0}); // rows (1,0,0), (0,1,2)
    const SweepOperator op_ortho = build_sweep_operator(ortho);
    ASSERT_LE(residual_map_norm(op_ortho, ortho), 1.0 + 1e-12);
    kt::testing::Rng rng(97);
    const DenseVector b = rng.vector(2);
    const DenseVector reference = min_norm_solution(ortho, b);
    const IterationTrace t =
        tanabe_iterate(op_ortho, b, DenseVector(3, 0.0), 20, reference, ortho);
    for (std::size_t k = 1; k < t.records.size(); ++k) {
        EXPECT_LE(t.records[k].res_norm,
                  t.records[k - 1].res_norm + 1e-10 * t.records[0].res_norm);
    }
}

TEST(KaczmarzTrace, MatchesTanabePerSweep) {
    const ProblemSpec mp1 = model_problem_1();
    const SweepOperator op = build_sweep_operator(mp1.a);
    const DenseVector x_dag = min_norm_solution(mp1.a, mp1.b);
    const DenseVector y0(4, 0.0);
    const IterationTrace tk = kaczmarz_trace(mp1.a, mp1.b, y0, 25, x_dag);
    const IterationTrace tt = tanabe_iterate(op, mp1.b, y0, 25, x_dag, mp1.a);
    ASSERT_EQ(tk.records.size(), tt.records.size());
    for (std::size_t k = 0; k < tk.records.size(); ++k) {
        EXPECT_NEAR(tk.records[k].err_norm, tt.records[k].err_norm, 1e-9);
        EXPECT_LE(kt::testing::max_abs_diff(tk.records[k].y, tt.records[k].y), 1e-9);
    }
}

TEST(KaczmarzTracePerStep, RecordsEveryProjection) {
    const ProblemSpec mp1 = model_problem_1();
    const DenseVector x_dag = min_norm_solution(mp1.a, mp1.b);
    const IterationTrace t =
        kaczmarz_trace_per_step(mp1.a, mp1.b, DenseVector(4, 0.0), 12, x_dag);
    ASSERT_EQ(t.records.size(), 13u);
    // after the first step the iterate sits on the first hyperplane
    EXPECT_NEAR(dot(mp1.a.row_vector(0), t.records[1].y), mp1.b[0], 1e-12);
}
