#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kt/io.hpp"
#include "kt/matrix.hpp"
#include "kt/problems.hpp"
#include "kt/spectral.hpp"
#include "kt/svd.hpp"
#include "kt/sweep.hpp"

namespace kt {

enum class ProblemKind { mp1, mp2, mp3, file };
enum class Method { kaczmarz, tanabe };
enum class PerturbKind { none, uniform, gaussian };

/// Exit codes shared by all subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitNumerical = 2,
    kExitBoundViolation = 3,
};

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::mp1;
    std::size_t n = 0;          // 0 = problem default (mp2: 32, mp3: 50)
    std::size_t angles = 36;
    std::size_t rays = 75;
    Method method = Method::tanabe;
    std::optional<std::size_t> k_max; // unset = problem default (100 / 200 / 30)
    PerturbKind perturb = PerturbKind::none;
    double delta = 0.0;
    double eta = 0.0;
    std::uint64_t seed = 1;
    bool per_step = false;      // record every row projection instead of every sweep
    std::string matrix_path;
    std::string rhs_path;
    std::string cache_path;
    std::string out_path;       // directory for generate/solve/check, file for analyze/render
};

namespace exp_detail {

inline std::size_t default_kmax(ProblemKind p) {
    switch (p) {
        case ProblemKind::mp2: return 200;
        case ProblemKind::mp3: return 30;
        default: return 100;
    }
}

inline std::string problem_name(ProblemKind p) {
    switch (p) {
        case ProblemKind::mp1: return "mp1";
        case ProblemKind::mp2: return "mp2";
        case ProblemKind::mp3: return "mp3";
        default: return "file";
    }
}

inline std::filesystem::path out_dir(const ExperimentConfig& cfg) {
    if (cfg.out_path.empty()) throw std::invalid_argument("--out is required");
    std::filesystem::create_directories(cfg.out_path);
    return cfg.out_path;
}

} // namespace exp_detail

inline ProblemSpec load_problem(const ExperimentConfig& cfg) {
    switch (cfg.problem) {
        case ProblemKind::mp1:
            return model_problem_1();
        case ProblemKind::mp2:
            return model_problem_2(cfg.n ? cfg.n : 32);
        case ProblemKind::mp3:
            return model_problem_3(cfg.n ? cfg.n : 50, cfg.angles, cfg.rays);
        case ProblemKind::file: {
            if (cfg.matrix_path.empty() || cfg.rhs_path.empty()) {
                throw std::invalid_argument("--problem file requires --matrix and --rhs");
            }
            ProblemSpec spec;
            spec.a = read_matrix_market(cfg.matrix_path);
            spec.b = read_vector(cfg.rhs_path);
            if (spec.a.rows() != spec.b.size()) {
                throw std::invalid_argument("matrix has " + std::to_string(spec.a.rows()) +
                                            " rows but right-hand side has " +
                                            std::to_string(spec.b.size()) + " entries");
            }
            spec.label = "file";
            return spec;
        }
    }
    throw std::invalid_argument("unknown problem kind");
}

inline Perturbed apply_perturbation(const ExperimentConfig& cfg, const DenseVector& b) {
    switch (cfg.perturb) {
        case PerturbKind::none: return {b, 0.0};
        case PerturbKind::uniform: return perturb_uniform(b, cfg.delta);
        case PerturbKind::gaussian: return perturb_gaussian(b, cfg.eta, cfg.seed);
    }
    throw std::invalid_argument("unknown perturbation kind");
}

/// Builds the sweep operator, or loads it from the cache path when the file
/// already exists (saving it after a fresh build).
inline SweepOperator obtain_operator(const ExperimentConfig& cfg, const DenseMatrix& a) {
    if (!cfg.cache_path.empty() && std::filesystem::exists(cfg.cache_path)) {
        return load_operator(cfg.cache_path, a);
    }
    SweepOperator op = build_sweep_operator(a);
    if (!cfg.cache_path.empty()) save_operator(op, cfg.cache_path);
    return op;
}

/// Norm-form bound columns for the trace CSV: per-step recursion and the
/// accumulated envelope, directly comparable with err_norm.
inline void write_trace_csv(const IterationTrace& trace, const SpectralReport& report,
                            const std::string& path) {
    const double kbar = report.k_bar_factor;
    const double root_kbar = std::sqrt(kbar);
    const double pert = trace.perturbation_norm;
    const double amp = std::max(1.0 / (1.0 - kbar), 1.0);
    const double noise_term = 2.0 * report.pinv_norm_a * pert;

    std::string out = "k,err_norm,res_norm,bound_step,bound_envelope\n";
    const double err0 = trace.records.empty() ? 0.0 : trace.records[0].err_norm;
    double env_decay = 1.0;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const auto& rec = trace.records[k];
        double bound_step = err0, bound_env = err0;
        if (k > 0) {
            env_decay *= root_kbar;
            bound_step = root_kbar * trace.records[k - 1].err_norm + noise_term;
            bound_env = env_decay * err0 +
                        4.0 * (1.0 - env_decay) * amp * report.pinv_norm_a * pert;
        }
        out += std::to_string(rec.k) + "," + io_detail::format_value(rec.err_norm) + "," +
               io_detail::format_value(rec.res_norm) + "," +
               io_detail::format_value(bound_step) + "," + io_detail::format_value(bound_env) +
               "\n";
    }
    io_detail::atomic_write(path, out);
}

inline void write_bound_check_csv(const BoundCheckResult& result, const std::string& path) {
    std::string out = "k,ok,bound\n";
    for (std::size_t k = 0; k < result.per_step_ok.size(); ++k) {
        out += std::to_string(k) + "," + (result.per_step_ok[k] ? "1" : "0") + "," +
               io_detail::format_value(result.bound_values[k]) + "\n";
    }
    io_detail::atomic_write(path, out);
}

/// Writes the problem matrix, right-hand side, and true solution (when
/// defined) to the output directory. The tomography matrix is written in
/// coordinate format with its all-zero rows intact.
inline int cmd_generate(const ExperimentConfig& cfg) {
    const auto dir = exp_detail::out_dir(cfg);
    if (cfg.problem == ProblemKind::mp3) {
        const std::size_t n = cfg.n ? cfg.n : 50;
        const DenseMatrix raw = parallel_projector(n, cfg.angles, cfg.rays);
        const DenseVector phantom = shepp_logan_phantom(n);
        write_matrix_market(raw, (dir / "A.mtx").string(), /*coordinate=*/true);
        write_vector(matvec(raw, phantom), (dir / "b.txt").string());
        write_vector(phantom, (dir / "x_true.txt").string());
        return kExitOk;
    }
    const ProblemSpec spec = load_problem(cfg);
    write_matrix_market(spec.a, (dir / "A.mtx").string(), /*coordinate=*/false);
    write_vector(spec.b, (dir / "b.txt").string());
    if (spec.true_solution) write_vector(*spec.true_solution, (dir / "x_true.txt").string());
    return kExitOk;
}

struct SolveOutput {
    IterationTrace trace;
    SpectralReport report;
    ProblemSpec problem;
    DenseVector b_used;
};

/// Shared by cmd_solve and cmd_check: problem, perturbation, operator,
/// report, trace against the reference P_{N(A)} y0 + x^+ with y0 = 0.
inline SolveOutput run_experiment(const ExperimentConfig& cfg) {
    SolveOutput out;
    out.problem = load_problem(cfg);
    const Perturbed pert = apply_perturbation(cfg, out.problem.b);
    out.b_used = pert.b;

    const SweepOperator op = obtain_operator(cfg, out.problem.a);
    out.report = spectral_report(out.problem.a, op);
    const DenseVector reference = min_norm_solution(out.problem.a, out.problem.b);
    const DenseVector y0(out.problem.a.cols(), 0.0);
    const std::size_t k_max = cfg.k_max ? *cfg.k_max : exp_detail::default_kmax(cfg.problem);

    if (cfg.method == Method::tanabe) {
        out.trace = tanabe_iterate(op, pert.b, y0, k_max, reference, out.problem.a, pert.norm);
    } else if (cfg.per_step) {
        out.trace = kaczmarz_trace_per_step(out.problem.a, pert.b, y0,
                                            k_max * out.problem.a.rows(), reference, pert.norm);
    } else {
        out.trace = kaczmarz_trace(out.problem.a, pert.b, y0, k_max, reference, pert.norm);
    }
    return out;
}

inline int cmd_solve(const ExperimentConfig& cfg) {
    const auto dir = exp_detail::out_dir(cfg);
    const SolveOutput run = run_experiment(cfg);
    write_trace_csv(run.trace, run.report, (dir / "trace.csv").string());
    write_vector(run.trace.records.back().y, (dir / "solution.txt").string());
    std::printf("%s %s: %zu records, final err_norm %.6g, final res_norm %.6g\n",
                exp_detail::problem_name(cfg.problem).c_str(),
                cfg.method == Method::tanabe ? "tanabe" : "kaczmarz",
                run.trace.records.size(), run.trace.records.back().err_norm,
                run.trace.records.back().res_norm);
    return kExitOk;
}

inline int cmd_check(const ExperimentConfig& cfg) {
    const SolveOutput run = run_experiment(cfg);
    const BoundCheckResult result = cfg.perturb == PerturbKind::none
                                        ? check_exact_bounds(run.trace, run.report)
                                        : check_perturbed_bounds(run.trace, run.report);
    if (!cfg.out_path.empty()) {
        const auto dir = exp_detail::out_dir(cfg);
        write_bound_check_csv(result, (dir / "bounds.csv").string());
    }
    std::printf("%s bound check: %s (max violation %.6g over %zu records)\n",
                exp_detail::problem_name(cfg.problem).c_str(),
                result.all_ok() ? "PASS" : "FAIL", result.max_violation,
                result.per_step_ok.size());
    return result.all_ok() ? kExitOk : kExitBoundViolation;
}

/// Text report of the singular-value summary plus pass/fail lines for every
/// operator identity. Returns nonzero when any identity fails.
inline int cmd_analyze(const ExperimentConfig& cfg, std::string* rendered = nullptr) {
    const ProblemSpec spec = load_problem(cfg);
    const SweepOperator op = obtain_operator(cfg, spec.a);
    const SvdFactorization fa = svd(spec.a);
    const SvdFactorization fq = svd(op.q);
    const SpectralReport report = spectral_report(fa, fq);

    const double prop_err = proposition_identity_error(op, spec.a);
    const double prop_tol = 1e-10 * static_cast<double>(op.source_cols);
    const double pinv_err = verify_pinv_identity(fa, op);
    const AsmNormBound asm_bound = verify_asm_norm_bound(fa, op);
    const AntisymmetryCheck antisym = antisymmetric_identity_check(op, 32);
    const double null_err = nullspace_equivalence_check(fa, fq);
    const double l_norm = residual_map_norm(op, spec.a);
    const std::size_t rank = numeric_rank(fa);

    const bool prop_ok = prop_err <= prop_tol;
    const bool pinv_ok = pinv_err <= 1e-8;
    const bool asm_ok = asm_bound.asm_norm <= asm_bound.bound + 1e-10;
    const bool antisym_ok = antisym.bilinear_max <= 1e-10 && antisym.factorization_error <= 1e-9;
    const bool null_ok =
        null_err <= 1e-7 && report.unit_multiplicity == spec.a.cols() - rank;

    char buf[256];
    std::string out;
    auto line = [&out, &buf](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
        out += "\n";
    };
    line("problem: %s (%zux%zu, rank %zu)", exp_detail::problem_name(cfg.problem).c_str(),
         spec.a.rows(), spec.a.cols(), rank);
    line("sigma_max_q:          %.6f", report.sigma_max_q);
    line("sigma_second_q:       %.6f", report.sigma_second_q);
    line("sigma_min_pos_a:      %.6f", report.sigma_min_pos_a);
    line("unit_multiplicity:    %zu", report.unit_multiplicity);
    line("k_factor:             %.6f", report.k_factor);
    line("k_bar_factor:         %.6f", report.k_bar_factor);
    line("pinv_norm_a:          %.6f", report.pinv_norm_a);
    line("asm_norm:             %.6f (bound 2*pinv_norm = %.6f) %s", asm_bound.asm_norm,
         asm_bound.bound, asm_ok ? "PASS" : "FAIL");
    line("residual_map_norm:    %.6f (monotone residuals %s)", l_norm,
         l_norm <= 1.0 ? "guaranteed" : "not guaranteed");
    line("proposition_identity: %.3e (tol %.3e) %s", prop_err, prop_tol,
         prop_ok ? "PASS" : "FAIL");
    line("pinv_identity:        %.3e (tol 1e-08) %s", pinv_err, pinv_ok ? "PASS" : "FAIL");
    line("antisymmetry:         %.3e / %.3e (tol 1e-10 / 1e-09) %s", antisym.bilinear_max,
         antisym.factorization_error, antisym_ok ? "PASS" : "FAIL");
    line("nullspace_match:      %.3e (tol 1e-07, dims %zu vs %zu) %s", null_err,
         report.unit_multiplicity, spec.a.cols() - rank, null_ok ? "PASS" : "FAIL");

    if (rendered) {
        *rendered = out;
    }
    if (!cfg.out_path.empty()) {
        io_detail::atomic_write(cfg.out_path, out);
    } else {
        std::fputs(out.c_str(), stdout);
    }
    const bool all_ok = prop_ok && pinv_ok && asm_ok && antisym_ok && null_ok;
    return all_ok ? kExitOk : kExitBoundViolation;
}

/// Renders a vector file (or the head phantom when no --rhs is given) as an
/// 8-bit PGM image.
inline int cmd_render(const ExperimentConfig& cfg) {
    if (cfg.out_path.empty()) throw std::invalid_argument("--out is required");
    DenseVector image;
    std::size_t side = cfg.n;
    if (!cfg.rhs_path.empty()) {
        image = read_vector(cfg.rhs_path);
        if (side == 0) {
            side = static_cast<std::size_t>(std::lround(std::sqrt(double(image.size()))));
        }
        if (side * side != image.size()) {
            throw std::invalid_argument("render: vector length " + std::to_string(image.size()) +
                                        " is not a square image (give --n)");
        }
    } else if (cfg.problem == ProblemKind::mp3) {
        side = side ? side : 50;
        image = shepp_logan_phantom(side);
    } else {
        throw std::invalid_argument("render: give --rhs <vector file> or --problem mp3");
    }
    write_image_pgm(image, side, cfg.out_path);
    return kExitOk;
}

} // namespace kt
