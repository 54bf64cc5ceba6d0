#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "homstokes/cache.hpp"
#include "homstokes/config.hpp"
#include "homstokes/errors.hpp"
#include "homstokes/norms.hpp"
#include "homstokes/study.hpp"

namespace fs = std::filesystem;
using namespace homstokes;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kThreshold = 3 };

struct Options {
    std::string config;
    std::string out;
    std::string cache;
    int jobs = 0;
    bool no_cache = false;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

StudyConfig load(const Options& o) {
    StudyConfig c = parse_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    if (!o.cache.empty()) c.cache_dir = o.cache;
    if (o.jobs > 0) c.jobs = o.jobs;
    c.validate();
    return c;
}

void print_tensor(const Tensor4& t) {
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) {
            std::cout << " ";
            for (int j = 0; j < 2; ++j)
                for (int b = 0; b < 2; ++b) std::cout << fmt(" %14.10f", t(i, j, a, b));
            std::cout << "\n";
        }
}

int report_violations(const std::vector<std::string>& v) {
    for (const auto& s : v) std::cout << "BREACH " << s << "\n";
    return v.empty() ? kOk : kThreshold;
}

int cmd_cell(const Options& o) {
    const StudyConfig c = load(o);
    const CoefficientTensor A = c.coefficient();
    bool hit = false;
    const CorrectorSet cs =
        load_or_compute_correctors(A, CellGrid::make(c.N), c.cell_tol, resolve_cache_dir(c, o.no_cache), &hit);
    const EffectiveTensor eff = compute_effective_tensor(A, cs);
    std::cout << family_name(A.family()) << " [" << A.canonical_params() << "] N=" << c.N
              << (hit ? " (cache hit)" : " (computed)") << "\n";
    std::cout << "effective tensor a_ij^ab (row i,a; column j,b)\n";
    print_tensor(eff.a);
    std::cout << "mu=" << fmt("%.6g", eff.mu) << " mu1=" << fmt("%.6g", eff.mu1) << "\n";
    double mom = 0.0, div = 0.0;
    for (int k = 0; k < 4; ++k) {
        mom = std::max(mom, cs.primal.momentum_residual[k]);
        div = std::max(div, cs.primal.divergence_residual[k]);
    }
    std::cout << "corrector residuals: momentum " << fmt("%.3e", mom) << " divergence " << fmt("%.3e", div) << "\n";
    return kOk;
}

int cmd_identities(const Options& o) {
    const StudyConfig c = load(o);
    const CoefficientTensor A = c.coefficient();
    std::vector<IdentityRun> runs;
    for (int N : {c.N / 2, c.N}) runs.push_back(run_identities(A, N, c.cell_tol));
    std::cout << "    N            b1           qpi  decomposition          skew      max_mean    divergence\n";
    for (const auto& r : runs) {
        const auto& x = r.report;
        std::cout << fmt("%5.0f", r.N) << fmt("  %.6e", x.b1) << fmt("  %.6e", x.qpi) << fmt("   %.6e", x.decomposition)
                  << fmt("  %.6e", x.skew) << fmt("  %.6e", x.max_mean) << fmt("  %.6e", x.divergence) << "\n";
    }
    return report_violations(
        check_identity_refinement(runs, c.identities_factor, c.identities_floor, c.identities_mean_tol));
}

int cmd_solve(const Options& o) {
    const StudyConfig c = load(o);
    const DomainGrid grid = DomainGrid::make(c.solve_M);
    const CoefficientTensor A = c.coefficient();
    StokesProblem prob;
    std::optional<EffectiveTensor> eff;
    if (c.solve_kind == SolveKind::Fine) {
        prob = manufactured_problem(c.recipe, grid, A, c.solve_epsilon);
    } else {
        const CorrectorSet cs =
            load_or_compute_correctors(A, CellGrid::make(c.N), c.cell_tol, resolve_cache_dir(c, o.no_cache));
        eff = compute_effective_tensor(A, cs);
        prob = manufactured_problem(c.recipe, grid, std::nullopt, 0.0, eff->a);
    }
    const double compat = check_compatibility(prob);
    std::cout << "compatibility residual " << fmt("%.6e", compat) << " (tolerance "
              << fmt("%.3e", compatibility_tolerance(prob)) << ")\n";
    const DomainField sol = eff ? solve_homogenized(*eff, prob, c.tol) : solve_dirichlet_stokes(prob, c.tol);
    for (const auto& w : sol.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "M=" << grid.M << " iterations=" << sol.iterations << " momentum residual "
              << fmt("%.3e", sol.momentum_residual) << " divergence residual " << fmt("%.3e", sol.divergence_residual)
              << "\n";
    if (prob.exact) {
        const ExactErrors e = exact_errors(sol, *prob.exact);
        std::cout << "L2 error velocity " << fmt("%.6e", e.l2_u) << " pressure " << fmt("%.6e", e.l2_p) << "\n";
    }
    const fs::path file = fs::path(c.out_dir) / (std::string(eff ? "homogenized" : "fine") + "_M" +
                                                 std::to_string(grid.M) + ".hssol");
    write_solution(file, sol, eff ? 0.0 : c.solve_epsilon);
    std::cout << "wrote " << file.string() << "\n";
    return kOk;
}

int cmd_rates(const Options& o) {
    const StudyConfig c = load(o);
    const RateReport rep = run_convergence_study(c, resolve_cache_dir(c, o.no_cache), &std::cerr);
    fs::create_directories(c.out_dir);
    const fs::path csv = fs::path(c.out_dir) / "rates.csv";
    const fs::path txt = fs::path(c.out_dir) / "rates_report.txt";
    {
        std::ofstream out(csv, std::ios::binary | std::ios::trunc);
        write_rates_csv(rep, out);
        if (!out) throw Error("cannot write " + csv.string());
    }
    std::ostringstream report;
    write_rates_report(rep, report);
    {
        std::ofstream out(txt, std::ios::binary | std::ios::trunc);
        out << report.str();
    }
    std::cout << report.str() << "\nwrote " << csv.string() << " and " << txt.string() << "\n";
    return report_violations(check_gates(rep, c.gates));
}

int cmd_smoothing(const Options& o) {
    const StudyConfig c = load(o);
    const CoefficientTensor A = c.coefficient();
    const CorrectorSet cs =
        load_or_compute_correctors(A, CellGrid::make(c.N), c.cell_tol, resolve_cache_dir(c, o.no_cache));
    const SmoothingReport r = run_smoothing_suite(cs, c.smoothing_epsilons, c.smoothing_samples);
    std::cout << "      eps   ratio(trig)  ratio(bump)  ratio(poly)\n";
    for (std::size_t k = 0; k < r.epsilons.size(); ++k)
        std::cout << fmt("%9.6f", r.epsilons[k]) << fmt("  %11.6f", r.ratios[0][k]) << fmt("  %11.6f", r.ratios[1][k])
                  << fmt("  %11.6f", r.ratios[2][k]) << "\n";
    std::cout << "max ratio " << fmt("%.6f", r.max_ratio) << " (bound " << fmt("%.6f", r.ratio_bound) << ")\n";
    std::cout << "product bound: " << r.product_checks << " checks, worst excess " << fmt("%.3e", r.worst_excess)
              << "\n";
    std::cout << "linearity defect " << fmt("%.3e", r.linearity_defect) << "\n";
    return r.pass() ? kOk : report_violations({"smoothing properties"});
}

int cmd_mms(const Options& o) {
    const StudyConfig c = load(o);
    std::vector<std::string> v;
    for (int pass = 0; pass < 2; ++pass) {
        std::optional<CoefficientTensor> A;
        if (pass == 1) {
            if (c.family == Family::Constant && c.params.empty()) break;
            A = c.coefficient();
        }
        const MmsReport r = run_mms_study(A, c.mms_epsilon, c.mms_grids, c.tol, c.recipe);
        std::cout << r.label << "\n      M    L2 velocity    L2 pressure  iterations\n";
        for (const auto& row : r.rows)
            std::cout << fmt("%7.0f", row.M) << fmt("  %.6e", row.l2_u) << fmt("   %.6e", row.l2_p)
                      << fmt("  %10.0f", row.iterations) << "\n";
        std::cout << "slope velocity " << fmt("%.4f", r.velocity.slope) << " pressure "
                  << fmt("%.4f", r.pressure.slope) << "\n\n";
        if (!(r.velocity.slope >= c.mms_min_slope && r.velocity.slope <= c.mms_max_slope))
            v.push_back(r.label + ": velocity slope " + fmt("%.4f", r.velocity.slope));
    }
    return report_violations(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic homogenization laboratory for Stokes systems"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "Study file (TOML)")->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--cache", o.cache, "Corrector cache directory");
    app.add_option("--jobs", o.jobs, "Parallel epsilon workers")->check(CLI::PositiveNumber);
    app.add_flag("--no-cache", o.no_cache, "Ignore and do not write the corrector cache");

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Sub subs[] = {
        {"cell", "Compute (or load) correctors and print the effective tensor", cmd_cell},
        {"identities", "Dual-corrector identity residuals at N/2 and N", cmd_identities},
        {"solve", "One fine or homogenized solve; dumps the fields", cmd_solve},
        {"rates", "Convergence study in epsilon; writes CSV and report", cmd_rates},
        {"smoothing", "Steklov smoothing property suite", cmd_smoothing},
        {"mms", "Manufactured-solution convergence in h", cmd_mms},
    };
    int (*chosen)(const Options&) = nullptr;
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->callback([&chosen, fn = s.run] { chosen = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kValidation;
    }
    if (o.config.empty()) {
        std::cerr << "--config is required\n\n" << app.help();
        return kValidation;
    }

    try {
        return chosen(o);
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << " (residual " << fmt("%.6e", e.residual()) << ")\n";
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << " (residual " << fmt("%.3e", e.residual()) << " after "
                  << e.iterations() << " iterations)\n";
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolver;
    }
}
