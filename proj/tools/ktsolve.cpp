#include <cstdio>
#include <exception>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "kt/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Kaczmarz and Kaczmarz-Tanabe solvers with spectral contraction analysis"};
    app.require_subcommand(1);

    kt::ExperimentConfig cfg;
    const std::map<std::string, kt::ProblemKind> problems{
        {"mp1", kt::ProblemKind::mp1},
        {"mp2", kt::ProblemKind::mp2},
        {"mp3", kt::ProblemKind::mp3},
        {"file", kt::ProblemKind::file},
    };
    const std::map<std::string, kt::Method> methods{
        {"kaczmarz", kt::Method::kaczmarz},
        {"tanabe", kt::Method::tanabe},
    };
    app.add_option("--problem", cfg.problem, "mp1 | mp2 | mp3 | file")
        ->transform(CLI::CheckedTransformer(problems, CLI::ignore_case));
    app.add_option("--n", cfg.n, "grid size (mp2: interior points per side, mp3: pixels)");
    app.add_option("--angles", cfg.angles, "projection angles (mp3)");
    app.add_option("--rays", cfg.rays, "parallel rays per angle (mp3)");
    app.add_option("--method", cfg.method, "kaczmarz | tanabe")
        ->transform(CLI::CheckedTransformer(methods, CLI::ignore_case));
    app.add_option("--kmax", cfg.k_max, "number of sweeps to run");
    auto* delta = app.add_option("--delta", cfg.delta, "uniform perturbation level");
    auto* eta = app.add_option("--eta", cfg.eta, "relative Gaussian noise level");
    app.add_option("--seed", cfg.seed, "noise seed");
    app.add_flag("--per-step", cfg.per_step, "record every row projection (kaczmarz)");
    app.add_option("--matrix", cfg.matrix_path, "MatrixMarket input (--problem file)");
    app.add_option("--rhs", cfg.rhs_path, "right-hand-side / vector input");
    app.add_option("--cache", cfg.cache_path, "sweep-operator cache file");
    app.add_option("--out", cfg.out_path, "output directory or file");
    app.set_config("--config", "", "key=value configuration file (flags win on conflict)");
    delta->excludes(eta);

    auto* generate = app.add_subcommand("generate", "write a problem's matrix and vectors");
    auto* solve = app.add_subcommand("solve", "run an iteration and write its trace CSV");
    auto* analyze = app.add_subcommand("analyze", "singular-value report and identity checks");
    auto* check = app.add_subcommand("check", "run per-step convergence bound checks");
    auto* render = app.add_subcommand("render", "write a vector as an 8-bit PGM image");
    for (CLI::App* cmd : {generate, solve, analyze, check, render}) {
        cmd->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kt::kExitUsage;
    }

    if (delta->count() > 0) cfg.perturb = kt::PerturbKind::uniform;
    if (eta->count() > 0) cfg.perturb = kt::PerturbKind::gaussian;

    try {
        if (generate->parsed()) return kt::cmd_generate(cfg);
        if (solve->parsed()) return kt::cmd_solve(cfg);
        if (analyze->parsed()) return kt::cmd_analyze(cfg);
        if (check->parsed()) return kt::cmd_check(cfg);
        if (render->parsed()) return kt::cmd_render(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kt::kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kt::kExitNumerical;
    }
    return kt::kExitUsage;
}
