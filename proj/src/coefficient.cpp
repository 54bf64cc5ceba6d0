#include "homstokes/coefficient.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>

#include "homstokes/errors.hpp"

namespace homstokes {

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Constant: return "constant";
        case Family::Laminate: return "laminate";
        case Family::Trig2d: return "trig2d";
        case Family::Nonsymmetric: return "nonsymmetric";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "constant") return Family::Constant;
    if (name == "laminate") return Family::Laminate;
    if (name == "trig2d") return Family::Trig2d;
    if (name == "nonsymmetric") return Family::Nonsymmetric;
    throw ValidationError("unknown coefficient family '" + std::string(name) + "'");
}

QuadraticBounds quadratic_bounds(const Tensor4& t) {
    Eigen::Matrix4d m;
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 2; ++j)
                for (int b = 0; b < 2; ++b)
                    m(i * 2 + a, j * 2 + b) = 0.5 * (t(i, j, a, b) + t(j, i, b, a));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(3)};
}

namespace {

constexpr double kSkewFraction = 0.1;

void require_arity(Family f, std::span<const double> p, std::size_t n) {
    if (p.size() != n) {
        throw ValidationError(std::string(family_name(f)) + " expects " + std::to_string(n) +
                              " parameters, got " + std::to_string(p.size()));
    }
}

}  // namespace

CoefficientTensor build_coefficient(Family family, std::span<const double> params) {
    CoefficientTensor c;
    c.family_ = family;
    c.params_.assign(params.begin(), params.end());
    for (double v : params) {
        if (!std::isfinite(v)) throw ValidationError("coefficient parameters must be finite");
    }

    if (family == Family::Constant) {
        if (params.empty()) {
            c.constant_ = Tensor4::identity();
        } else if (params.size() == 1) {
            c.constant_ = Tensor4::scaled_identity(params[0]);
        } else if (params.size() == 16) {
            std::copy(params.begin(), params.end(), c.constant_.data().begin());
        } else {
            throw ValidationError("constant expects 0, 1 or 16 parameters");
        }
        const auto qb = quadratic_bounds(c.constant_);
        if (qb.lower <= 0.0) {
            throw ValidationError("constant coefficient is not elliptic (min eigen bound " +
                                  std::to_string(qb.lower) + ")");
        }
        c.mu_ = std::min(qb.lower, 1.0 / qb.upper);
        return c;
    }

    require_arity(family, params, 2);
    const double offset = params[0];
    const double amp = std::abs(params[1]);
    if (offset - amp <= 0.0) {
        throw ValidationError(std::string(family_name(family)) +
                              ": amplitude must be below the offset (min factor " +
                              std::to_string(offset - amp) + ")");
    }
    c.mu_ = std::min(offset - amp, 1.0 / (offset + amp));
    return c;
}

CoefficientTensor adjoint_coefficient(const CoefficientTensor& a) {
    CoefficientTensor c = a;
    c.adjoint_ = !a.adjoint_;
    return c;
}

bool CoefficientTensor::symmetric() const {
    if (family_ == Family::Nonsymmetric) return false;
    if (family_ == Family::Constant) return max_abs_difference(constant_, constant_.adjoint()) == 0.0;
    return true;
}

double CoefficientTensor::scalar_factor(Vec2 y) const {
    switch (family_) {
        case Family::Laminate: return params_[0] + params_[1] * std::sin(kTwoPi * y.x);
        case Family::Trig2d:
        case Family::Nonsymmetric:
            return params_[0] + params_[1] * std::sin(kTwoPi * y.x) * std::sin(kTwoPi * y.y);
        case Family::Constant: break;
    }
    return 0.0;
}

double CoefficientTensor::skew_factor(Vec2 y) const {
    if (family_ != Family::Nonsymmetric) return 0.0;
    const double e = kSkewFraction * params_[0] * std::cos(kTwoPi * (y.x + y.y));
    return adjoint_ ? -e : e;
}

Tensor4 CoefficientTensor::evaluate(Vec2 y) const {
    if (family_ == Family::Constant) return adjoint_ ? constant_.adjoint() : constant_;
    Tensor4 t = Tensor4::scaled_identity(scalar_factor(y));
    const double e = skew_factor(y);
    if (e != 0.0) {
        for (int a = 0; a < 2; ++a) {
            t(0, 1, a, a) += e;
            t(1, 0, a, a) -= e;
        }
    }
    return t;
}

std::array<Tensor4, 2> CoefficientTensor::derivative(Vec2 y) const {
    std::array<Tensor4, 2> d{};
    if (family_ == Family::Constant) return d;
    const double c = params_[0];
    const double b = params_[1];
    const double s1 = std::sin(kTwoPi * y.x), c1 = std::cos(kTwoPi * y.x);
    const double s2 = std::sin(kTwoPi * y.y), c2 = std::cos(kTwoPi * y.y);
    std::array<double, 2> ds{};
    if (family_ == Family::Laminate) {
        ds = {b * kTwoPi * c1, 0.0};
    } else {
        ds = {b * kTwoPi * c1 * s2, b * kTwoPi * s1 * c2};
    }
    for (int k = 0; k < 2; ++k) d[k] = Tensor4::scaled_identity(ds[k]);
    if (family_ == Family::Nonsymmetric) {
        double de = -kSkewFraction * c * kTwoPi * std::sin(kTwoPi * (y.x + y.y));
        if (adjoint_) de = -de;
        for (int k = 0; k < 2; ++k) {
            for (int a = 0; a < 2; ++a) {
                d[k](0, 1, a, a) += de;
                d[k](1, 0, a, a) -= de;
            }
        }
    }
    return d;
}

CoefficientTensor CoefficientTensor::with_declared_mu(double mu) const {
    if (!(mu > 0.0 && mu <= 1.0)) throw ValidationError("declared mu must lie in (0, 1]");
    CoefficientTensor c = *this;
    c.mu_ = mu;
    return c;
}

std::string CoefficientTensor::canonical_params() const {
    std::string s;
    char buf[64];
    for (std::size_t k = 0; k < params_.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", params_[k]);
        if (k) s += ',';
        s += buf;
    }
    return s.empty() ? std::string("-") : s;
}

EllipticityReport verify_ellipticity(const CoefficientTensor& a, int sample_resolution) {
    if (sample_resolution < 2) throw ValidationError("sample_resolution must be >= 2");

    std::vector<Mat2> xis;
    for (int k = 0; k < 4; ++k) {
        Mat2 e{};
        e[k] = 1.0;
        xis.push_back(e);
    }
    for (int k = 0; k < 4; ++k) {
        for (int l = k + 1; l < 4; ++l) {
            Mat2 p{}, m{};
            p[k] = 1.0, p[l] = 1.0;
            m[k] = 1.0, m[l] = -1.0;
            xis.push_back(p);
            xis.push_back(m);
        }
    }
    std::mt19937_64 rng(20240917);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int k = 0; k < 32; ++k) {
        Mat2 r{};
        for (auto& x : r) x = nd(rng);
        xis.push_back(r);
    }

    EllipticityReport rep;
    rep.declared_mu = a.declared_mu();
    rep.lower = std::numeric_limits<double>::infinity();
    rep.upper = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < sample_resolution; ++j) {
        for (int i = 0; i < sample_resolution; ++i) {
            const Vec2 y{static_cast<double>(i) / sample_resolution,
                         static_cast<double>(j) / sample_resolution};
            const Tensor4 t = a.evaluate(y);
            for (const auto& xi : xis) {
                double n2 = 0.0;
                for (double x : xi) n2 += x * x;
                const double q = t.quadratic_form(xi) / n2;
                if (q < rep.lower) {
                    rep.lower = q;
                    rep.worst_point = y;
                }
                rep.upper = std::max(rep.upper, q);
            }
        }
    }
    // relative slack for round-off in the Rayleigh quotients; the laminate
    // bounds are attained exactly at sampled points
    const double mu = rep.declared_mu, slack = 1e-12;
    rep.pass = !(rep.lower < mu * (1 - slack)) && !(rep.upper > (1 + slack) / mu);
    return rep;
}

}  // namespace homstokes
