#include "homstokes/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "homstokes/cache.hpp"
#include "homstokes/errors.hpp"
#include "homstokes/twoscale.hpp"

namespace homstokes {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

DomainField add_velocity(DomainField a, const DomainField& b) {
    for (std::size_t i = 0; i < a.u1.size(); ++i) {
        a.u1[i] += b.u1[i];
        a.u2[i] += b.u2[i];
    }
    return a;
}

std::optional<RateFit> try_fit(const std::vector<std::pair<double, double>>& pts) {
    try {
        return fit_rate(pts);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

template <class E>
[[noreturn]] void rethrow_with_epsilon(const E& e, double eps) {
    const std::string msg = "epsilon = " + fmt("%g", eps) + ": " + e.what();
    if constexpr (std::is_same_v<E, SolverError>) {
        throw SolverError(msg, e.residual(), e.iterations());
    } else if constexpr (std::is_same_v<E, PreconditionError>) {
        throw PreconditionError(msg, e.residual());
    } else {
        throw E(msg);
    }
}

RateRow run_row(const StudyConfig& cfg, const CoefficientTensor& A, const CorrectorSet& cs,
                const EffectiveTensor& eff, double eps) {
    const auto t0 = Clock::now();
    RateRow row;
    row.epsilon = eps;
    row.M = cfg.domain_resolution(eps);
    const DomainGrid grid = DomainGrid::make(row.M);
    const double tol = cfg.tol;

    // homogenized data: the recipe's exact pair solves the constant-coefficient problem
    const StokesProblem data = manufactured_problem(cfg.recipe, grid, std::nullopt, 0.0, eff.a);
    const DomainField u0 = solve_homogenized(eff, data, tol);

    StokesProblem fine = data;
    fine.A = A;
    fine.epsilon = eps;
    fine.exact.reset();
    const DirichletStokesSolver solver(grid, element_coefficient(fine), problem_symmetric(fine));
    const DomainField ue = solver.solve(fine, tol);
    row.warnings = ue.warnings;
    row.iterations_fine = ue.iterations;

    const std::optional<ExactSolution> exact =
        cfg.extension == ExtensionMode::Analytic ? data.exact : std::optional<ExactSolution>{};
    const SmoothedGradients sg = smoothed_gradients(u0, eps, cfg.extension, exact);
    const DomainField v = build_velocity_expansion(u0, cs, sg);
    const DomainField pe = build_pressure_expansion(u0, cs, sg);
    const BoundaryCorrector w = solve_boundary_corrector(A, cs, sg, grid, tol, &solver);
    row.iterations_w = w.field.iterations;
    row.compatibility_shift = w.compatibility_shift;

    const DomainField ev = difference(ue, v);
    row.l2_u = velocity_norms(difference(ue, u0)).l2;
    row.h1_twoscale = velocity_norms(ev).h1;
    row.l2_pressure = pressure_l2(difference(ue, pe));
    row.l2_pressure_plain = pressure_l2(difference(ue, u0));
    const NormReport wn = velocity_norms(w.field);
    row.l2_w = wn.l2;
    row.h1_w = wn.h1;
    row.z_h1 = velocity_norms(add_velocity(ev, w.field)).h1;

    if (eps >= 4.0 * grid.h()) {
        const CutoffPair cut = build_cutoffs(eps, grid);
        row.h1_truncated = velocity_norms(difference(ue, build_truncated_expansion(u0, cs, sg, cut))).h1;
    } else {
        row.warnings.push_back("cutoffs unresolved; truncated expansion skipped");
    }

    const ExtendedField ext = extend(u0, eps + 2.0 * grid.h(), cfg.extension, exact);
    const ExtensionBound eb = extension_bound(ext, u0);
    row.u0_h2 = eb.domain_h2;
    row.extension_ratio = eb.ratio();

    const DomainField* fields[3] = {&ue, &u0, &w.field};
    for (int f = 0; f < 3; ++f)
        for (int r = 0; r < 2; ++r) {
            row.bl[f * 2 + r] = boundary_layer_constant(*fields[f], (r + 1) * eps);
            row.bl_const = std::max(row.bl_const, row.bl[f * 2 + r]);
        }
    row.seconds = seconds_since(t0);
    return row;
}

}  // namespace

double RateRow::column(int k) const {
    switch (k) {
        case 0: return l2_u;
        case 1: return h1_twoscale;
        case 2: return l2_pressure;
        case 3: return l2_w;
        case 4: return h1_w;
        default: return bl_const;
    }
}

fs::path resolve_cache_dir(const StudyConfig& cfg, bool no_cache) {
    if (no_cache) return {};
    if (!cfg.cache_dir.empty()) return cfg.cache_dir;
    if (const char* env = std::getenv("HS_CACHE_DIR"); env && *env) return env;
    return {};
}

RateReport run_convergence_study(const StudyConfig& cfg, const fs::path& cache_dir, std::ostream* log) {
    cfg.validate();
    RateReport rep;
    rep.config = cfg;
    const CoefficientTensor A = cfg.coefficient();
    const auto t0 = Clock::now();
    const CorrectorSet cs = load_or_compute_correctors(A, CellGrid::make(cfg.N), cfg.cell_tol, cache_dir, &rep.cache_hit);
    rep.effective = compute_effective_tensor(A, cs);
    if (log) {
        *log << "correctors N=" << cfg.N << (rep.cache_hit ? " (cache)" : " (computed)") << " "
             << fmt("%.2f s", seconds_since(t0)) << "\n";
    }

    const std::size_t n = cfg.epsilons.size();
    rep.rows.resize(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            const double eps = cfg.epsilons[k];
            try {
                try {
                    rep.rows[k] = run_row(cfg, A, cs, rep.effective, eps);
                } catch (const SolverError& e) {
                    rethrow_with_epsilon(e, eps);
                } catch (const PreconditionError& e) {
                    rethrow_with_epsilon(e, eps);
                } catch (const ValidationError& e) {
                    rethrow_with_epsilon(e, eps);
                }
            } catch (...) {
                errors[k] = std::current_exception();
                continue;
            }
            if (log) {
                std::lock_guard lock(log_mutex);
                *log << "eps=" << fmt("%g", eps) << " M=" << rep.rows[k].M << fmt(" %.2f s", rep.rows[k].seconds)
                     << "\n";
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(n)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    rep.first_fitted_row = (n > 2 && !rep.rows.front().warnings.empty()) ? 1 : 0;
    for (int c = 0; c < 5; ++c) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t k = rep.first_fitted_row; k < n; ++k) pts.emplace_back(rep.rows[k].epsilon, rep.rows[k].column(c));
        rep.fits[c] = try_fit(pts);
    }
    std::vector<std::pair<double, double>> zp;
    for (std::size_t k = rep.first_fitted_row; k < n; ++k) zp.emplace_back(rep.rows[k].epsilon, rep.rows[k].z_h1);
    rep.z_fit = try_fit(zp);
    return rep;
}

void write_rates_csv(const RateReport& rep, std::ostream& out) {
    out << "epsilon,l2_u,h1_twoscale,l2_pressure,l2_w,h1_w,bl_const\n";
    for (const RateRow& r : rep.rows) {
        out << fmt("%.17g", r.epsilon);
        for (int c = 0; c < 6; ++c) out << "," << fmt("%.17g", r.column(c));
        out << "\n";
    }
    for (int c = 0; c < 5; ++c) {
        out << "# slope_" << kErrorColumns[c] << " = " << (rep.fits[c] ? fmt("%.17g", rep.fits[c]->slope) : "nan")
            << "\n";
    }
}

void write_rates_report(const RateReport& rep, std::ostream& out) {
    const StudyConfig& c = rep.config;
    out << "coefficient   " << family_name(c.family) << " [" << c.coefficient().canonical_params() << "]\n";
    out << "cell grid     N=" << c.N << " tol=" << fmt("%g", c.cell_tol) << (rep.cache_hit ? " (cached)" : "") << "\n";
    out << "domain        M=ceil(" << fmt("%g", c.grid_factor) << "/eps) tol=" << fmt("%g", c.tol)
        << " recipe=" << recipe_name(c.recipe) << " extension=" << extension_name(c.extension) << "\n\n";
    out << "effective tensor a_ij^ab (row i,a; column j,b)\n";
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) {
            out << "  ";
            for (int j = 0; j < 2; ++j)
                for (int b = 0; b < 2; ++b) out << fmt(" %14.10f", rep.effective.a(i, j, a, b));
            out << "\n";
        }
    out << "  mu=" << fmt("%.6g", rep.effective.mu) << " mu1=" << fmt("%.6g", rep.effective.mu1) << "\n\n";

    out << "     eps     M        l2_u   h1_twoscale   l2_pressure        l2_w        h1_w    bl_const\n";
    for (const RateRow& r : rep.rows) {
        out << fmt("%8.5f", r.epsilon) << fmt("%6.0f", r.M);
        for (int k = 0; k < 6; ++k) out << fmt("  %.4e", r.column(k));
        out << "\n";
    }
    out << "\nfits (log error vs log eps";
    out << (rep.first_fitted_row ? ", coarsest row dropped)\n" : ")\n");
    for (int k = 0; k < 5; ++k) {
        out << "  " << kErrorColumns[k];
        if (rep.fits[k]) {
            out << "  slope " << fmt("%.4f", rep.fits[k]->slope) << "  R2 " << fmt("%.4f", rep.fits[k]->r2) << "\n";
        } else {
            out << "  no fit (nonpositive values)\n";
        }
    }
    if (rep.z_fit) out << "  z_h1  slope " << fmt("%.4f", rep.z_fit->slope) << "  R2 " << fmt("%.4f", rep.z_fit->r2) << "\n";

    out << "\ndiagnostics\n";
    out << "     eps        z_h1  h1_truncated  p_eps-p0_l2       u0_H2  ext_ratio   compat_shift  it_fine  it_w\n";
    for (const RateRow& r : rep.rows) {
        out << fmt("%8.5f", r.epsilon) << fmt("  %.4e", r.z_h1) << fmt("    %.4e", r.h1_truncated)
            << fmt("   %.4e", r.l2_pressure_plain) << fmt("  %.4e", r.u0_h2) << fmt("  %9.4f", r.extension_ratio)
            << fmt("   %.3e", r.compatibility_shift) << fmt("  %7.0f", r.iterations_fine)
            << fmt("  %4.0f", r.iterations_w) << "\n";
        for (const auto& w : r.warnings) out << "          warning: " << w << "\n";
    }
    out << "\nboundary-layer constants (u_eps, u0, w at r = eps, 2 eps)\n";
    for (const RateRow& r : rep.rows) {
        out << fmt("%8.5f", r.epsilon);
        for (double b : r.bl) out << fmt("  %.4f", b);
        out << "\n";
    }
}

std::vector<std::string> check_gates(const RateReport& rep, const RateGates& g) {
    std::vector<std::string> v;
    auto slope = [&](int k) { return rep.fits[k] ? rep.fits[k]->slope : NAN; };
    auto need_min = [&](const std::optional<double>& bound, int k) {
        if (bound && !(slope(k) >= *bound))
            v.push_back(std::string("slope_") + kErrorColumns[k] + " = " + fmt("%.4f", slope(k)) + " < " +
                        fmt("%g", *bound));
    };
    need_min(g.min_slope_l2_u, 0);
    need_min(g.min_slope_h1_twoscale, 1);
    need_min(g.min_slope_l2_pressure, 2);
    need_min(g.min_slope_l2_w, 3);
    need_min(g.min_slope_h1_w, 4);
    if (g.max_slope_l2_u && !(slope(0) <= *g.max_slope_l2_u))
        v.push_back("slope_l2_u = " + fmt("%.4f", slope(0)) + " > " + fmt("%g", *g.max_slope_l2_u));
    if (g.min_r2_l2_u) {
        const double r2 = rep.fits[0] ? rep.fits[0]->r2 : NAN;
        if (!(r2 >= *g.min_r2_l2_u)) v.push_back("R2 of l2_u = " + fmt("%.4f", r2) + " < " + fmt("%g", *g.min_r2_l2_u));
    }
    for (const RateRow& r : rep.rows) {
        if (g.max_bl_const && !(r.bl_const <= *g.max_bl_const))
            v.push_back("bl_const at eps " + fmt("%g", r.epsilon) + " = " + fmt("%.4f", r.bl_const));
        if (g.max_error)
            for (int k = 0; k < 5; ++k)
                if (!(r.column(k) <= *g.max_error))
                    v.push_back(std::string(kErrorColumns[k]) + " at eps " + fmt("%g", r.epsilon) + " = " +
                                fmt("%.3e", r.column(k)));
    }
    if (g.monotone)
        for (int k = 0; k < 3; ++k)
            for (std::size_t i = 1; i < rep.rows.size(); ++i)
                if (rep.rows[i].column(k) > rep.rows[i - 1].column(k))
                    v.push_back(std::string(kErrorColumns[k]) + " increases at eps " + fmt("%g", rep.rows[i].epsilon));
    return v;
}

MmsReport run_mms_study(const std::optional<CoefficientTensor>& A, double eps, std::span<const int> grids,
                        double tol, Recipe recipe) {
    if (grids.size() < 2) throw ValidationError("manufactured study needs at least two grids");
    MmsReport rep;
    rep.label = A ? std::string(family_name(A->family())) + " eps=" + fmt("%g", eps) : "identity";
    std::vector<std::pair<double, double>> pu, pp;
    for (int M : grids) {
        const DomainGrid grid = DomainGrid::make(M);
        const StokesProblem prob = manufactured_problem(recipe, grid, A, A ? eps : 0.0);
        if (!prob.exact) throw ValidationError("recipe has no exact solution");
        const DomainField sol = solve_dirichlet_stokes(prob, tol);
        const ExactErrors e = exact_errors(sol, *prob.exact);
        rep.rows.push_back({M, e.l2_u, e.l2_p, sol.iterations});
        pu.emplace_back(grid.h(), e.l2_u);
        pp.emplace_back(grid.h(), e.l2_p);
    }
    rep.velocity = fit_rate(pu);
    rep.pressure = fit_rate(pp);
    return rep;
}

namespace {

struct TestField {
    double (*u)(double, double);
    void (*grad)(double, double, double&, double&);
};


const TestField kSmoothFields[3] = {
    {[](double x, double y) { return std::sin(kTwoPi * x) * std::sin(kTwoPi * y); },
     [](double x, double y, double& gx, double& gy) {
         gx = kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y);
         gy = kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y);
     }},
    {[](double x, double y) { return std::exp(-8.0 * ((x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6))); },
     [](double x, double y, double& gx, double& gy) {
         const double e = std::exp(-8.0 * ((x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6)));
         gx = -16.0 * (x - 0.4) * e;
         gy = -16.0 * (y - 0.6) * e;
     }},
    {[](double x, double y) { return x * x * y + std::cos(3.0 * y); },
     [](double x, double y, double& gx, double& gy) {
         gx = 2.0 * x * y;
         gy = x * x - 3.0 * std::sin(3.0 * y);
     }},
};

double trapz_box(const ExtendedField& f, int comp) {
    double s = 0.0;
    const int nx = f.box.nx, ny = f.box.ny;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double w = ((i == 0 || i == nx - 1) ? 0.5 : 1.0) * ((j == 0 || j == ny - 1) ? 0.5 : 1.0);
            s += w * f.at(comp, i, j);
        }
    return s * f.box.h * f.box.h;
}

double trapz_domain(const DomainGrid& g, const std::vector<double>& sq) {
    const int n = g.nside();
    double s = 0.0;
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i)
            s += ((i == 0 || i == g.M) ? 0.5 : 1.0) * ((j == 0 || j == g.M) ? 0.5 : 1.0) * sq[j * n + i];
    return s * g.h() * g.h();
}

double rms(const PeriodicField& f, int comp) {
    const double* d = f.comp(comp);
    double s = 0.0;
    const std::size_t n = static_cast<std::size_t>(f.n) * f.n;
    for (std::size_t i = 0; i < n; ++i) s += d[i] * d[i];
    return std::sqrt(s / static_cast<double>(n));
}

}  // namespace

bool SmoothingReport::pass(double slack) const {
    return max_ratio <= ratio_bound && worst_excess <= slack && linearity_defect <= 1e-12;
}

SmoothingReport run_smoothing_suite(const CorrectorSet& cs, std::span<const double> epsilons, int samples,
                                    unsigned long long seed) {
    SmoothingReport rep;
    rep.ratio_bound = std::sqrt(2.0);
    rep.worst_excess = -INFINITY;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> freq(-3, 3);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);

    std::vector<const PeriodicField*> fs;
    std::vector<int> fc;
    for (int k = 0; k < 4; ++k) {
        for (int c = 0; c < 2; ++c) {
            fs.push_back(&cs.primal.chi[k]);
            fc.push_back(c);
        }
        fs.push_back(&cs.primal.pi[k]);
        fc.push_back(0);
    }

    for (double eps : epsilons) {
        rep.epsilons.push_back(eps);
        int M = 64;
        while (M < 16.0 / eps - 1e-9) M *= 2;
        const DomainGrid grid = DomainGrid::make(M);
        const double h = grid.h();
        const int pad = static_cast<int>(std::ceil((eps + 2.0 * h) / h - 1e-9));
        const GridBox box{-pad * h, -pad * h, h, M + 1 + 2 * pad, M + 1 + 2 * pad};

        auto fill = [&](auto&& fn) {
            ExtendedField f(box, 1, ExtensionMode::Analytic);
            for (int j = 0; j < box.ny; ++j)
                for (int i = 0; i < box.nx; ++i) {
                    const Vec2 x = box.node(i, j);
                    f.at(0, i, j) = fn(x.x, x.y);
                }
            return f;
        };

        for (int t = 0; t < 3; ++t) {
            const TestField& tf = kSmoothFields[t];
            const ExtendedField u = fill(tf.u);
            const ExtendedField g2 = fill([&](double x, double y) {
                double gx, gy;
                tf.grad(x, y, gx, gy);
                return gx * gx + gy * gy;
            });
            const std::vector<double> su = restrict_to_domain(steklov_smooth(u, eps), 0, grid);
            const std::vector<double> uo = restrict_to_domain(u, 0, grid);
            std::vector<double> sq(su.size());
            for (std::size_t i = 0; i < su.size(); ++i) sq[i] = (su[i] - uo[i]) * (su[i] - uo[i]);
            const double ratio = std::sqrt(trapz_domain(grid, sq)) / (eps * std::sqrt(trapz_box(g2, 0)));
            rep.ratios[t].push_back(ratio);
            rep.max_ratio = std::max(rep.max_ratio, ratio);
        }

        std::vector<std::vector<double>> fvals(fs.size());
        for (std::size_t k = 0; k < fs.size(); ++k) fvals[k] = sample_periodic(*fs[k], fc[k], grid, eps);

        ExtendedField prev;
        for (int s = 0; s < samples; ++s) {
            struct Mode {
                double a, kx, ky, phi;
            };
            std::vector<Mode> modes(6);
            for (auto& m : modes) m = {normal(rng), double(freq(rng)), double(freq(rng)), phase(rng)};
            const ExtendedField u = fill([&](double x, double y) {
                double v = 0.0;
                for (const auto& m : modes) v += m.a * std::cos(kTwoPi * (m.kx * x + m.ky * y) + m.phi);
                return v;
            });
            ExtendedField u2 = u;
            for (double& d : u2.data) d *= d;
            const double unorm = std::sqrt(trapz_box(u2, 0));
            const ExtendedField su_box = steklov_smooth(u, eps);
            const std::vector<double> su = restrict_to_domain(su_box, 0, grid);
            std::vector<double> sq(su.size());
            for (std::size_t k = 0; k < fs.size(); ++k) {
                for (std::size_t i = 0; i < su.size(); ++i) sq[i] = fvals[k][i] * fvals[k][i] * su[i] * su[i];
                const double lhs = std::sqrt(trapz_domain(grid, sq));
                rep.worst_excess = std::max(rep.worst_excess, lhs - rms(*fs[k], fc[k]) * unorm);
                ++rep.product_checks;
            }
            if (s > 0) {
                // S(2u - 3 prev) against 2 S u - 3 S prev
                ExtendedField comb = u;
                for (std::size_t i = 0; i < comb.data.size(); ++i) comb.data[i] = 2.0 * u.data[i] - 3.0 * prev.data[i];
                const ExtendedField sc = steklov_smooth(comb, eps);
                const ExtendedField sp = steklov_smooth(prev, eps);
                double scale = 0.0;
                for (double d : comb.data) scale = std::max(scale, std::abs(d));
                for (std::size_t i = 0; i < sc.data.size(); ++i) {
                    const double d = std::abs(sc.data[i] - (2.0 * su_box.data[i] - 3.0 * sp.data[i]));
                    rep.linearity_defect = std::max(rep.linearity_defect, d / scale);
                }
            }
            prev = u;
        }
    }
    return rep;
}

IdentityRun run_identities(const CoefficientTensor& A, int N, double tol) {
    const auto t0 = Clock::now();
    IdentityRun run;
    run.N = N;
    const CellGrid grid = CellGrid::make(N);
    const CorrectorSet cs = compute_correctors(A, grid, tol, false);
    run.effective = compute_effective_tensor(A, cs);
    const BTensor b = compute_b_tensor(A, cs, run.effective);
    run.b_raw_mean = b.raw_mean;
    const DualCorrectorSet dual = compute_dual_correctors(b, grid, tol);
    run.report = verify_corrector_identities(cs, dual, b, run.effective);
    run.seconds = seconds_since(t0);
    return run;
}

std::array<std::pair<const char*, double>, 3> refinement_residuals(const IdentityReport& r) {
    return {{{"b1", r.b1}, {"qpi", r.qpi}, {"decomposition", r.decomposition}}};
}

std::vector<std::string> check_identity_refinement(std::span<const IdentityRun> runs, double factor, double floor,
                                                   double mean_tol) {
    std::vector<std::string> v;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const IdentityReport& r = runs[k].report;
        if (r.skew != 0.0) v.push_back("N=" + std::to_string(r.N) + ": skew residual " + fmt("%.3e", r.skew));
        if (!(r.max_mean <= mean_tol)) v.push_back("N=" + std::to_string(r.N) + ": mean " + fmt("%.3e", r.max_mean));
        if (k == 0) continue;
        const auto prev = refinement_residuals(runs[k - 1].report);
        const auto cur = refinement_residuals(r);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const double c = cur[i].second, p = prev[i].second;
            if (c <= floor) continue;
            if (!(p / c >= factor))
                v.push_back(std::string(cur[i].first) + " drops by " + fmt("%.3f", p / c) + " from N=" +
                            std::to_string(runs[k - 1].N) + " to N=" + std::to_string(r.N));
        }
    }
    return v;
}

}  // namespace homstokes
