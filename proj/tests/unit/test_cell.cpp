#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <map>
#include <random>
#include <vector>

#include "homstokes/cell.hpp"
#include "homstokes/errors.hpp"
#include "homstokes/study.hpp"
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
    if (it == cache.end()) it = cache.emplace(N, compute_correctors(laminate(), CellGrid::make(N), 1e-10)).first;
    return it->second;
}

PeriodicField forcing(int N, double (*f1)(double, double), double (*f2)(double, double)) {
    PeriodicField F(N, 2);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            F.comp(0)[j * N + i] = f1(double(i) / N, double(j) / N);
            F.comp(1)[j * N + i] = f2(double(i) / N, double(j) / N);
        }
    return F;
}

double zero(double, double) { return 0.0; }

// max |field - exact| over the velocity (stride 1) or pressure (stride 2) nodes
template <class F>
double max_error(const PeriodicField& f, int comp, int N, F exact) {
    const int n = f.n;
    const double step = double(N / n) / N;
    double e = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) e = std::max(e, std::abs(f.comp(comp)[j * n + i] - exact(i * step, j * step)));
    return e;
}

}  // namespace

TEST(CellGrid, Validation) {
    EXPECT_THROW((void)CellGrid::make(6), ValidationError);
    EXPECT_THROW((void)CellGrid::make(33), ValidationError);
    EXPECT_DOUBLE_EQ(CellGrid::make(64).h() * 64, 1.0);
}

TEST(SolveCellStokes, ZeroForcingGivesZero) {
    const auto [u, p] = solve_cell_stokes(nullptr, PeriodicField(16, 2), CellGrid::make(16), 1e-9);
    EXPECT_EQ(u.max_abs(), 0.0);
    EXPECT_EQ(p.max_abs(), 0.0);
}

TEST(SolveCellStokes, NonzeroMeanRejected) {
    PeriodicField F(16, 2);
    for (double& v : F.data) v = 1.0;
    EXPECT_THROW((void)solve_cell_stokes(nullptr, F, CellGrid::make(16), 1e-9), PreconditionError);
}

// -Lap u + grad p = (sin 2 pi y1, 0): the forcing is a gradient, u = 0, p = -cos(2 pi y1) / (2 pi).
// The coarse pressure space holds the gradient only up to O(h^4) in u.
TEST(SolveCellStokes, FourierModeAbsorbedByPressure) {
    double prev = 0.0, prev_u = 0.0;
    for (int N : {16, 32, 64}) {
        const auto F = forcing(N, [](double y1, double) { return std::sin(2 * kPi * y1); }, zero);
        const auto [u, p] = solve_cell_stokes(nullptr, F, CellGrid::make(N), 1e-11);
        const double eu = u.max_abs();
        EXPECT_LE(eu, 5.0 / std::pow(N, 4));
        const double e = max_error(p, 0, N, [](double y1, double) { return -std::cos(2 * kPi * y1) / (2 * kPi); });
        EXPECT_LE(e, 2.0 / (N * N));
        if (prev > 0.0) {
            EXPECT_GE(prev / e, 3.5);
            EXPECT_GE(prev_u / eu, 12.0);
        }
        prev = e;
        prev_u = eu;
    }
}

// -Lap u + grad p = (sin 2 pi y2, 0): shear mode, u1 = sin(2 pi y2) / (4 pi^2), p = 0
TEST(SolveCellStokes, FourierShearMode) {
    double prev = 0.0;
    for (int N : {16, 32, 64}) {
        const auto F = forcing(N, [](double, double y2) { return std::sin(2 * kPi * y2); }, zero);
        const auto [u, p] = solve_cell_stokes(nullptr, F, CellGrid::make(N), 1e-11);
        const double e = max_error(u, 0, N, [](double, double y2) { return std::sin(2 * kPi * y2) / (4 * kPi * kPi); });
        EXPECT_LE(max_error(u, 1, N, [](double, double) { return 0.0; }), 1e-10);
        EXPECT_LE(p.max_abs(), 1e-8);
        if (prev > 0.0) {
            EXPECT_GE(prev / e, 3.5);
        }
        prev = e;
    }
}

TEST(SolveCellStokes, OutputsMeanZero) {
    const int N = 32;
    const auto F = forcing(
        N, [](double y1, double y2) { return std::sin(2 * kPi * y1) * std::cos(4 * kPi * y2); },
        [](double y1, double y2) { return std::cos(2 * kPi * (y1 + y2)); });
    const auto [u, p] = solve_cell_stokes(&laminate(), F, CellGrid::make(N), 1e-10);
    for (int c = 0; c < 2; ++c) EXPECT_LE(std::abs(u.mean(c)), 1e-12 * u.max_abs());
    EXPECT_LE(std::abs(p.mean(0)), 1e-12 * p.max_abs());
}

TEST(Correctors, ConstantCoefficientVanish) {
    const auto A = build_coefficient(Family::Constant, std::vector<double>{1.7});
    const auto cs = compute_correctors(A, CellGrid::make(16), 1e-10);
    for (int k = 0; k < 4; ++k) {
        EXPECT_LE(cs.primal.chi[k].max_abs(), 1e-12);
        EXPECT_LE(cs.primal.pi[k].max_abs(), 1e-12);
    }
    const auto eff = compute_effective_tensor(A, cs);
    EXPECT_LE(max_abs_difference(eff.a, A.evaluate({0, 0})), 1e-12);
}

TEST(Correctors, LaminateClosedForms) {
    const oracle::LaminateChi chi(2, 1);
    double prev_chi = 0.0, prev_pi = 0.0, prev_zero = 0.0;
    for (int N : {32, 64}) {
        const auto& cs = laminate_correctors(N);
        const auto& c = cs.primal;
        // chi_1^1 = 0 exactly; discretely O(h^4) through the coarse pressure space
        const double z = c.chi[jb(0, 0)].max_abs();
        EXPECT_LE(z, 20.0 / std::pow(N, 4));
        if (prev_zero > 0.0) {
            EXPECT_GE(prev_zero / z, 12.0);
        }
        prev_zero = z;
        for (int b = 0; b < 2; ++b) {
            EXPECT_LE(c.chi[jb(1, b)].max_abs(), 1e-9);
            EXPECT_LE(c.pi[jb(1, b)].max_abs(), 1e-8);
        }
        EXPECT_LE(c.pi[jb(0, 1)].max_abs(), 1e-8);
        EXPECT_LE(max_error(c.chi[jb(0, 1)], 0, N, [](double, double) { return 0.0; }), 1e-9);
        const double echi = max_error(c.chi[jb(0, 1)], 1, N, [&](double y1, double) { return chi(y1); });
        const double epi =
            max_error(c.pi[jb(0, 0)], 0, N, [](double y1, double) { return std::sin(2 * kPi * y1); });
        EXPECT_LE(echi, 5e-3);
        EXPECT_LE(epi, 5e-2);
        if (prev_chi > 0.0) {
            EXPECT_GE(prev_chi / echi, 3.0);
            EXPECT_GE(prev_pi / epi, 3.0);
        }
        prev_chi = echi;
        prev_pi = epi;
    }
}

TEST(Correctors, ResidualsWithinTolerance) {
    const auto& cs = laminate_correctors(32);
    for (int k = 0; k < 4; ++k) {
        EXPECT_LE(cs.primal.momentum_residual[k], 1e-10);
        EXPECT_LE(cs.primal.divergence_residual[k], 1e-10);
        for (int c = 0; c < 2; ++c) EXPECT_LE(std::abs(cs.primal.chi[k].mean(c)), 1e-12 * (1 + cs.primal.chi[k].max_abs()));
        EXPECT_LE(std::abs(cs.primal.pi[k].mean(0)), 1e-12 * (1 + cs.primal.pi[k].max_abs()));
    }
}

TEST(EffectiveTensor, LaminateMatchesMeans) {
    const double H = oracle::harmonic_mean(2, 1), Am = oracle::arithmetic_mean(2, 1);
    EXPECT_NEAR(H, std::sqrt(3.0), 1e-12);
    const auto eff = compute_effective_tensor(laminate(), laminate_correctors(64));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double expect = (i == j && a == b) ? Am : 0.0;
                    if (i == 0 && j == 0 && a == 1 && b == 1) expect = H;
                    EXPECT_NEAR(eff.a(i, j, a, b), expect, 1e-6) << i << j << a << b;
                }
}

TEST(EffectiveTensor, AdjointIdentityNonsymmetric) {
    const auto A = build_coefficient(Family::Nonsymmetric, std::vector<double>{2, 0.8});
    const auto cs = compute_correctors(A, CellGrid::make(32), 1e-10, true);
    ASSERT_TRUE(cs.adjoint.has_value());
    const Tensor4 lhs = compute_effective_tensor(A, cs).a.adjoint();
    const Tensor4 rhs = compute_adjoint_effective_tensor(A, cs).a;
    EXPECT_LE(max_abs_difference(lhs, rhs), 1e-6 * max_abs(lhs));
    EXPECT_GT(max_abs_difference(lhs, lhs.adjoint()), 1e-6);  // the test is not vacuous
}

TEST(EffectiveTensor, EllipticityInherited) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Family f : {Family::Trig2d, Family::Nonsymmetric}) {
        const auto A = build_coefficient(f, std::vector<double>{2, 0.9});
        const auto eff = compute_effective_tensor(A, compute_correctors(A, CellGrid::make(32), 1e-10, false));
        for (int s = 0; s < 200; ++s) {
            Mat2 xi{};
            double norm2 = 0.0;
            for (double& v : xi) {
                v = n(rng);
                norm2 += v * v;
            }
            const double q = eff.a.quadratic_form(xi);
            EXPECT_GE(q, A.declared_mu() * norm2 * (1 - 1e-12));
            EXPECT_LE(q, norm2 / A.declared_mu() * (1 + 1e-12));
        }
        EXPECT_GE(eff.mu, A.declared_mu());
    }
}

TEST(BTensor, ConstantVanishes) {
    const auto A = build_coefficient(Family::Constant, std::vector<double>{});
    const auto cs = compute_correctors(A, CellGrid::make(16), 1e-10, false);
    const auto b = compute_b_tensor(A, cs, compute_effective_tensor(A, cs));
    for (const auto& f : b.b) EXPECT_LE(f.max_abs(), 1e-12);
}

TEST(BTensor, LaminateClosedForm) {
    const int N = 64;
    const auto& cs = laminate_correctors(N);
    const auto b = compute_b_tensor(laminate(), cs, compute_effective_tensor(laminate(), cs));
    const double e11 = max_error(b.b[ijb(0, 0, 0)], 0, N, [](double y1, double) { return std::sin(2 * kPi * y1); });
    EXPECT_LE(e11, 5e-3);
    EXPECT_LE(max_error(b.b[ijb(0, 0, 1)], 1, N, [](double, double) { return 0.0; }), 1e-6);
    for (const auto& f : b.b)
        for (int c = 0; c < 2; ++c) EXPECT_LE(std::abs(f.mean(c)), 1e-12 * (1 + f.max_abs()));
}

TEST(DualCorrectors, ZeroBGivesZero) {
    BTensor b;
    for (auto& f : b.b) f = PeriodicField(16, 2);
    const auto d = compute_dual_correctors(b, CellGrid::make(16), 1e-10);
    for (const auto& f : d.f) EXPECT_EQ(f.max_abs(), 0.0);
    for (const auto& q : d.q) EXPECT_EQ(q.max_abs(), 0.0);
    for (const auto& p : d.phi) EXPECT_EQ(p.max_abs(), 0.0);
}

TEST(DualCorrectors, SkewExactAndLaminateRefinement) {
    std::vector<IdentityRun> runs;
    for (int N : {32, 64, 128}) runs.push_back(run_identities(laminate(), N, 1e-10));
    for (const auto& r : runs) {
        EXPECT_EQ(r.report.skew, 0.0);
        EXPECT_LE(r.report.max_mean, 1e-10);
        EXPECT_TRUE(std::isfinite(r.report.b1) && std::isfinite(r.report.qpi) && std::isfinite(r.report.decomposition));
    }
    for (std::size_t k = 1; k < runs.size(); ++k) {
        EXPECT_GE(runs[k - 1].report.qpi / runs[k].report.qpi, 1.7);
        EXPECT_GE(runs[k - 1].report.decomposition / runs[k].report.decomposition, 1.7);
        // the laminate divergence identity holds to round-off on every grid
        EXPECT_LE(runs[k].report.b1, 1e-9);
    }
    EXPECT_TRUE(check_identity_refinement(runs, 1.7, 1e-9, 1e-10).empty());
}

TEST(DualCorrectors, ConstantIdentitiesVanish) {
    const auto A = build_coefficient(Family::Constant, std::vector<double>{2.0});
    const auto r = run_identities(A, 16, 1e-10).report;
    EXPECT_LE(r.b1, 1e-10);
    EXPECT_LE(r.qpi, 1e-10);
    EXPECT_LE(r.decomposition, 1e-10);
    EXPECT_EQ(r.skew, 0.0);
    EXPECT_LE(r.max_mean, 1e-10);
}

TEST(DualCorrectors, Trig2dResidualsDecrease) {
    const auto A = build_coefficient(Family::Trig2d, std::vector<double>{2, 1});
    std::vector<IdentityRun> runs;
    for (int N : {32, 64}) runs.push_back(run_identities(A, N, 1e-10));
    EXPECT_GE(runs[0].report.b1 / runs[1].report.b1, 1.7);
    EXPECT_GE(runs[0].report.qpi / runs[1].report.qpi, 1.7);
    EXPECT_GE(runs[0].report.decomposition / runs[1].report.decomposition, 1.7);
}
