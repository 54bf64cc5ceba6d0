#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "homstokes/errors.hpp"
#include "homstokes/study.hpp"
#include "homstokes/twoscale.hpp"
#include "oracles.hpp"

using namespace homstokes;
using oracle::kPi;

namespace {

const CoefficientTensor& laminate() {
    static const CoefficientTensor A = build_coefficient(Family::Laminate, std::vector<double>{2, 1});
    return A;
}

const CorrectorSet& laminate_correctors(int N) {
    static std::map<int, CorrectorSet> cache;
    auto it = cache.find(N);
    if (it == cache.end()) it = cache.emplace(N, compute_correctors(laminate(), CellGrid::make(N), 1e-10, false)).first;
    return it->second;
}

template <class F>
DomainField velocity_field(const DomainGrid& g, F f) {
    DomainField out(g);
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const auto [a, b] = f(g.node(i, j).x, g.node(i, j).y);
            out.u1[j * g.nside() + i] = a;
            out.u2[j * g.nside() + i] = b;
        }
    return out;
}

template <class F>
ExtendedField box_field(double lo, double hi, double h, F f) {
    const int n = static_cast<int>(std::lround((hi - lo) / h)) + 1;
    ExtendedField e(GridBox{lo, lo, h, n, n}, 1, ExtensionMode::Analytic);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) e.at(0, i, j) = f(e.box.node(i, j).x, e.box.node(i, j).y);
    return e;
}

// (0, x1): grad u0 has the single entry d_1 u^2 = 1
ExactSolution shear_solution() {
    return ExactSolution{[](Vec2 x) {
        ExactSolution::Point p;
        p.u = {0.0, x.x};
        p.du[1] = {1.0, 0.0};
        return p;
    }};
}

}  // namespace

TEST(Extend, ConstantStaysConstant) {
    const auto g = DomainGrid::make(16);
    const auto u0 = velocity_field(g, [](double, double) { return std::pair{2.5, -1.0}; });
    for (auto mode : {ExtensionMode::Reflection}) {
        const auto e = extend(u0, 0.3, mode);
        for (int j = 0; j < e.box.ny; ++j)
            for (int i = 0; i < e.box.nx; ++i) {
                EXPECT_EQ(e.at(0, i, j), 2.5);
                EXPECT_EQ(e.at(1, i, j), -1.0);
            }
    }
}

TEST(Extend, AnalyticUsesFormula) {
    const auto g = DomainGrid::make(16);
    const auto exact = recipe_solution(Recipe::Vortex);
    DomainField u0(g);
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const auto v = exact->eval(g.node(i, j));
            u0.u1[j * 17 + i] = v.u[0];
            u0.u2[j * 17 + i] = v.u[1];
        }
    const auto e = extend(u0, 0.25, ExtensionMode::Analytic, exact);
    EXPECT_EQ(e.mode, ExtensionMode::Analytic);
    for (int j = 0; j < e.box.ny; ++j)
        for (int i = 0; i < e.box.nx; ++i) {
            const auto v = exact->eval(e.box.node(i, j));
            EXPECT_NEAR(e.at(0, i, j), v.u[0], 1e-15);
            EXPECT_NEAR(e.at(1, i, j), v.u[1], 1e-15);
        }
    EXPECT_THROW((void)extend(u0, 0.25, ExtensionMode::Analytic), PreconditionError);
}

TEST(Extend, EvenReflection) {
    const auto g = DomainGrid::make(16);
    const auto u0 = velocity_field(g, [](double x, double) { return std::pair{x, 0.0}; });
    const auto e = extend(u0, 0.5, ExtensionMode::Reflection);
    const int i = static_cast<int>(std::lround((-0.25 - e.box.x0) / e.box.h));
    const int j = static_cast<int>(std::lround((0.5 - e.box.y0) / e.box.h));
    EXPECT_NEAR(e.box.node(i, j).x, -0.25, 1e-15);
    EXPECT_NEAR(e.at(0, i, j), 0.25, 1e-15);
    // restriction identity
    const auto back = restrict_to_domain(e, 0, g);
    EXPECT_EQ(back, u0.u1);
}

TEST(Steklov, ConstantAndLinear) {
    const double eps = 0.25;
    const auto c = steklov_smooth(box_field(-1, 2, 1.0 / 32, [](double, double) { return 3.0; }), eps);
    for (double v : c.data) EXPECT_NEAR(v, 3.0, 1e-14);
    const auto l = steklov_smooth(box_field(-1, 2, 1.0 / 32, [](double x, double) { return x; }), eps);
    for (int j = 0; j < l.box.ny; ++j)
        for (int i = 0; i < l.box.nx; ++i) EXPECT_NEAR(l.at(0, i, j), l.box.node(i, j).x - eps / 2, 1e-14);
}

TEST(Steklov, SineClosedForm) {
    const double h = 1.0 / 64;
    const auto u = box_field(-1.5, 1.5, h, [](double x, double) { return std::sin(2 * kPi * x); });
    const auto s1 = steklov_smooth(u, 1.0);
    for (double v : s1.data) EXPECT_NEAR(v, 0.0, 1e-12);
    for (double eps : {0.25, 0.1, 0.3}) {
        const auto s = steklov_smooth(u, eps);
        double err = 0.0;
        for (int j = 0; j < s.box.ny; j += 7)
            for (int i = 0; i < s.box.nx; ++i)
                err = std::max(err, std::abs(s.at(0, i, j) - oracle::steklov_sine(s.box.node(i, j).x, eps)));
        // linear interpolation between nodes: O(h^2) quadrature error
        EXPECT_LE(err, 2e-3) << eps;
    }
}

TEST(Steklov, InsufficientPadFails) {
    const auto u = box_field(0, 0.25, 1.0 / 32, [](double, double) { return 1.0; });
    EXPECT_THROW((void)steklov_smooth(u, 0.5), PreconditionError);
}

TEST(Steklov, Linearity) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    auto u = box_field(-0.5, 1.5, 1.0 / 32, [](double, double) { return 0.0; });
    auto v = u;
    for (double& x : u.data) x = n(rng);
    for (double& x : v.data) x = n(rng);
    auto w = u;
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] = 1.5 * u.data[i] - 0.25 * v.data[i];
    const auto su = steklov_smooth(u, 0.2), sv = steklov_smooth(v, 0.2), sw = steklov_smooth(w, 0.2);
    for (std::size_t i = 0; i < sw.data.size(); ++i)
        EXPECT_NEAR(sw.data[i], 1.5 * su.data[i] - 0.25 * sv.data[i], 1e-13);
}

TEST(SamplePeriodic, ConstantAndNodes) {
    PeriodicField f(32, 1);
    for (double& v : f.data) v = 0.75;
    EXPECT_EQ(sample_periodic(f, 0, Vec2{13.37, -4.2}), 0.75);

    const auto& chi = laminate_correctors(32).primal.chi[jb(0, 1)];
    const auto g = DomainGrid::make(128);
    const auto s = sample_periodic(chi, 1, g, 0.25);  // x / eps = i / 32 lands on cell nodes
    for (int j = 0; j <= g.M; j += 5)
        for (int i = 0; i <= g.M; ++i) EXPECT_EQ(s[j * g.nside() + i], chi.at(1, i, j));
}

TEST(SamplePeriodic, LaminateInterpolationRefines) {
    const oracle::LaminateChi exact(2, 1);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<Vec2> pts(400);
    for (auto& p : pts) p = {u(rng), u(rng)};
    double prev = 0.0;
    for (int N : {32, 64, 128}) {
        const auto& chi = laminate_correctors(N).primal.chi[jb(0, 1)];
        double err = 0.0;
        for (const auto& p : pts) err = std::max(err, std::abs(sample_periodic(chi, 1, p) - exact(p.x)));
        if (prev > 0.0) {
            EXPECT_GE(prev / err, 3.5) << N;
        }
        prev = err;
    }
}

TEST(Expansion, ConstantCoefficientIsIdentity) {
    const auto A = build_coefficient(Family::Constant, std::vector<double>{});
    const auto cs = compute_correctors(A, CellGrid::make(16), 1e-10, false);
    const auto g = DomainGrid::make(32);
    const auto prob = manufactured_problem(Recipe::Vortex, g, std::nullopt, 0.0);
    const auto u0 = solve_dirichlet_stokes(prob, 1e-10);
    const auto sg = smoothed_gradients(u0, 0.25, ExtensionMode::Analytic, prob.exact);
    const auto v = build_velocity_expansion(u0, cs, sg);
    EXPECT_EQ(v.u1, u0.u1);
    EXPECT_EQ(v.u2, u0.u2);
    const auto pe = build_pressure_expansion(u0, cs, sg);
    for (std::size_t i = 0; i < pe.p.size(); ++i) EXPECT_NEAR(pe.p[i], u0.p[i], 1e-14);
    const auto w = solve_boundary_corrector(A, cs, sg, g, 1e-10);
    EXPECT_LE(velocity_norms(w.field).h1, 1e-12);
    double pm = 0.0;
    for (double x : w.field.p) pm = std::max(pm, std::abs(x));
    EXPECT_LE(pm, 1e-12);
}

TEST(Expansion, LaminateShearClosedForm) {
    const double eps = 0.125;
    const auto g = DomainGrid::make(64);
    const auto exact = shear_solution();
    const auto u0 = velocity_field(g, [](double x, double) { return std::pair{0.0, x}; });
    const auto sg = smoothed_gradients(u0, eps, ExtensionMode::Analytic, exact);
    const auto& cs = laminate_correctors(128);
    const auto v = build_velocity_expansion(u0, cs, sg);
    const oracle::LaminateChi chi(2, 1);
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const double x = g.node(i, j).x;
            EXPECT_NEAR(v.u1[j * g.nside() + i], 0.0, 1e-12);
            EXPECT_NEAR(v.u2[j * g.nside() + i], x + eps * chi(x / eps), eps * 1e-3);
        }
    // pi_1^2 = 0 for the laminate, so the pressure expansion adds nothing
    const auto pe = build_pressure_expansion(u0, cs, sg);
    for (std::size_t i = 0; i < pe.p.size(); ++i) EXPECT_NEAR(pe.p[i], u0.p[i], 1e-8);
}

TEST(Expansion, PressureTermIsMeanFree) {
    const double eps = 0.125;
    const auto g = DomainGrid::make(64);
    const auto& cs = laminate_correctors(64);
    const auto prob = manufactured_problem(Recipe::Vortex, g, std::nullopt, 0.0);
    const auto u0 = solve_dirichlet_stokes(prob, 1e-10);
    const auto sg = smoothed_gradients(u0, eps, ExtensionMode::Analytic, prob.exact);
    const auto pe = build_pressure_expansion(u0, cs, sg);
    const int P = g.pside();
    double s = 0.0, w = 0.0, scale = 0.0;
    for (int j = 0; j < P; ++j)
        for (int i = 0; i < P; ++i) {
            const double t = (i == 0 || i == P - 1 ? 0.5 : 1.0) * (j == 0 || j == P - 1 ? 0.5 : 1.0);
            const double d = pe.p[j * P + i] - u0.p[j * P + i];
            s += t * d;
            w += t;
            scale = std::max(scale, std::abs(d));
        }
    EXPECT_GT(scale, 1e-3);
    EXPECT_LE(std::abs(s / w), 1e-12 * scale);
}

TEST(Cutoffs, ProfileAndBounds) {
    const double eps = 0.125;
    const auto g = DomainGrid::make(64);
    const auto c = build_cutoffs(eps, g, 2.5);
    const int n = g.nside();
    for (int k : g.boundary_nodes()) EXPECT_EQ(c.theta[k], 1.0);
    const int d2 = static_cast<int>(std::lround(2 * eps / g.h()));
    EXPECT_EQ(c.theta[d2 * n + 32], 0.0);
    EXPECT_EQ(c.theta_tilde[d2 * n + 32], 0.0);
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const double d = std::min({g.node(i, j).x, g.node(i, j).y, 1 - g.node(i, j).x, 1 - g.node(i, j).y});
            const double t = c.theta[j * n + i], tt = c.theta_tilde[j * n + i];
            EXPECT_GE(t, 0.0);
            EXPECT_LE(t, 1.0);
            if (d >= eps - 1e-12) {
                EXPECT_EQ(t, 0.0);
            }
            if (d <= eps + 1e-12) {
                EXPECT_EQ(tt, 1.0);
            }
            if (d >= 2 * eps - 1e-12) {
                EXPECT_EQ(tt, 0.0);
            }
        }
    // the smoothstep slope peaks at 3/2, below kappa = 2.5
    EXPECT_LE(c.max_grad, 2.5);
    EXPECT_LE(c.max_grad_tilde, 2.5);
    EXPECT_GT(c.max_grad, 1.0);
    EXPECT_THROW((void)build_cutoffs(3.0 / 64, g), PreconditionError);
}

TEST(SmoothingProps, SuitePassesOnSmallSweep) {
    const std::vector<double> eps{0.25, 0.125};
    const auto r = run_smoothing_suite(laminate_correctors(32), eps, 3);
    EXPECT_TRUE(r.pass()) << r.max_ratio << " " << r.worst_excess;
    EXPECT_EQ(r.product_checks, 2 * 3 * 12);
    EXPECT_LE(r.linearity_defect, 1e-13);
}

TEST(ExtensionBound, ReportsFiniteConstant) {
    const auto g = DomainGrid::make(32);
    const auto prob = manufactured_problem(Recipe::Vortex, g, std::nullopt, 0.0);
    const auto u0 = solve_dirichlet_stokes(prob, 1e-10);
    for (auto mode : {ExtensionMode::Analytic, ExtensionMode::Reflection}) {
        const auto e = extend(u0, 0.3, mode, prob.exact);
        const auto b = extension_bound(e, u0);
        EXPECT_TRUE(std::isfinite(b.ratio()));
        EXPECT_GE(b.ratio(), 1.0);
    }
}
