#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "homstokes/coefficient.hpp"
#include "homstokes/errors.hpp"
#include "oracles.hpp"

using namespace homstokes;

namespace {

CoefficientTensor make(Family f, std::vector<double> p) { return build_coefficient(f, p); }

double kron(int a, int b) { return a == b ? 1.0 : 0.0; }

void expect_scaled_identity(const Tensor4& t, double s, double tol = 1e-14) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) EXPECT_NEAR(t(i, j, a, b), s * kron(i, j) * kron(a, b), tol);
}

}  // namespace

TEST(BuildCoefficient, ConstantIdentityEverywhere) {
    const auto A = make(Family::Constant, {});
    for (double y1 : {0.0, 0.3, 0.77})
        for (double y2 : {0.0, 0.5, 0.91}) expect_scaled_identity(A.evaluate({y1, y2}), 1.0, 0.0);
    EXPECT_EQ(A.declared_mu(), 1.0);
}

TEST(BuildCoefficient, LaminateAtQuarterPoint) {
    const auto A = make(Family::Laminate, {2, 1});
    expect_scaled_identity(A.evaluate({0.25, 0.7}), 3.0);
}

TEST(BuildCoefficient, LaminateDegenerateRejected) {
    EXPECT_THROW((void)make(Family::Laminate, {1, 1}), ValidationError);
    EXPECT_THROW((void)make(Family::Trig2d, {1, -1.5}), ValidationError);
    EXPECT_THROW((void)make(Family::Laminate, {2}), ValidationError);
    EXPECT_THROW((void)make(Family::Constant, {-1.0}), ValidationError);
}

TEST(BuildCoefficient, Trig2dFactor) {
    const auto A = make(Family::Trig2d, {2, 0.5});
    const double y1 = 0.1, y2 = 0.35;
    const double s = 2 + 0.5 * std::sin(2 * oracle::kPi * y1) * std::sin(2 * oracle::kPi * y2);
    expect_scaled_identity(A.evaluate({y1, y2}), s);
}

TEST(BuildCoefficient, NonsymmetricHasSkewPart) {
    const auto A = make(Family::Nonsymmetric, {2, 0.5});
    EXPECT_FALSE(A.symmetric());
    const Tensor4 t = A.evaluate({0.1, 0.2});
    const double skew = 0.1 * 2 * std::cos(2 * oracle::kPi * 0.3);
    EXPECT_NEAR(t(0, 1, 0, 0), skew, 1e-14);
    EXPECT_NEAR(t(1, 0, 0, 0), -skew, 1e-14);
    EXPECT_NEAR(t(0, 1, 0, 1), 0.0, 1e-14);
}

TEST(BuildCoefficient, DerivativeMatchesDifferences) {
    for (Family f : {Family::Laminate, Family::Trig2d, Family::Nonsymmetric}) {
        const auto A = make(f, {2, 0.7});
        const Vec2 y{0.31, 0.62};
        const auto d = A.derivative(y);
        const double h = 1e-6;
        for (int k = 0; k < 2; ++k) {
            Vec2 yp = y, ym = y;
            (k ? yp.y : yp.x) += h;
            (k ? ym.y : ym.x) -= h;
            const Tensor4 tp = A.evaluate(yp), tm = A.evaluate(ym);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            EXPECT_NEAR(d[k](i, j, a, b), (tp(i, j, a, b) - tm(i, j, a, b)) / (2 * h), 1e-7);
        }
    }
}

TEST(VerifyEllipticity, IdentityPasses) {
    const auto r = verify_ellipticity(make(Family::Constant, {}), 4);
    EXPECT_NEAR(r.lower, 1.0, 1e-14);
    EXPECT_NEAR(r.upper, 1.0, 1e-14);
    EXPECT_TRUE(r.pass);
}

TEST(VerifyEllipticity, LaminateBoundsFromDenseSampling) {
    const auto range = oracle::laminate_range(2, 1);
    const auto A = make(Family::Laminate, {2, 1});
    const auto r = verify_ellipticity(A, 64);
    EXPECT_NEAR(r.lower, range.lo, 1e-12);
    EXPECT_NEAR(r.upper, range.hi, 1e-12);
    EXPECT_NEAR(A.declared_mu(), 1.0 / range.hi, 1e-12);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(verify_ellipticity(A.with_declared_mu(0.5), 64).pass);
}

TEST(VerifyEllipticity, ReportOrdering) {
    for (Family f : {Family::Laminate, Family::Trig2d, Family::Nonsymmetric}) {
        const auto r = verify_ellipticity(make(f, {2, 0.9}), 16);
        EXPECT_LE(r.lower, r.upper);
        EXPECT_TRUE(r.pass);
    }
}

TEST(Adjoint, Examples) {
    expect_scaled_identity(adjoint_coefficient(make(Family::Constant, {})).evaluate({0.2, 0.4}), 1.0, 0.0);
    const auto L = make(Family::Laminate, {2, 1});
    const auto La = adjoint_coefficient(L);
    EXPECT_EQ(max_abs_difference(L.evaluate({0.3, 0.1}), La.evaluate({0.3, 0.1})), 0.0);
}

// properties

TEST(CoefficientProperties, AdjointInvolutionAndDefinition) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (Family f : {Family::Laminate, Family::Trig2d, Family::Nonsymmetric}) {
        const auto A = make(f, {2, 0.8});
        const auto As = adjoint_coefficient(A);
        const auto Ass = adjoint_coefficient(As);
        EXPECT_EQ(As.declared_mu(), A.declared_mu());
        for (int s = 0; s < 50; ++s) {
            const Vec2 y{u(rng), u(rng)};
            const Tensor4 a = A.evaluate(y), as = As.evaluate(y);
            EXPECT_EQ(max_abs_difference(a, Ass.evaluate(y)), 0.0);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int al = 0; al < 2; ++al)
                        for (int be = 0; be < 2; ++be) EXPECT_EQ(as(i, j, al, be), a(j, i, be, al));
        }
    }
}

TEST(CoefficientProperties, Periodicity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Family f : {Family::Laminate, Family::Trig2d, Family::Nonsymmetric}) {
        const auto A = make(f, {2, 0.8});
        for (int s = 0; s < 50; ++s) {
            const Vec2 y{u(rng), u(rng)};
            for (Vec2 z : {Vec2{1, 0}, Vec2{0, 1}, Vec2{-2, 3}}) {
                EXPECT_LE(max_abs_difference(A.evaluate(y), A.evaluate({y.x + z.x, y.y + z.y})), 1e-13);
            }
        }
    }
}

TEST(CoefficientProperties, EllipticityOfAdjointCoincides) {
    for (Family f : {Family::Laminate, Family::Trig2d, Family::Nonsymmetric}) {
        const auto A = make(f, {2, 0.8});
        const auto r = verify_ellipticity(A, 16), rs = verify_ellipticity(adjoint_coefficient(A), 16);
        EXPECT_NEAR(r.lower, rs.lower, 1e-13);
        EXPECT_NEAR(r.upper, rs.upper, 1e-13);
        EXPECT_EQ(r.pass, rs.pass);
    }
}

TEST(CoefficientProperties, CanonicalParams) {
    EXPECT_EQ(make(Family::Laminate, {2, 1}).canonical_params(), "2,1");
    EXPECT_EQ(make(Family::Constant, {}).canonical_params(), "-");
    EXPECT_EQ(parse_family("trig2d"), Family::Trig2d);
    EXPECT_THROW((void)parse_family("checkerboard"), ValidationError);
}
