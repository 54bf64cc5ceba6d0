#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homstokes/types.hpp"

namespace homstokes {

enum class Family { Constant, Laminate, Trig2d, Nonsymmetric };

[[nodiscard]] std::string_view family_name(Family f);
/// Throws ValidationError for unknown names.
[[nodiscard]] Family parse_family(std::string_view name);

/// 1-periodic coefficient y -> a_{ij}^{alpha beta}(y) for the built-in families.
///
///   constant(M)          a = M (params: none = identity, one value s = s*identity, or 16 entries)
///   laminate(c, b)       a = (c + b sin 2 pi y1) delta_ij delta^{alpha beta}
///   trig2d(c, b)         a = (c + b sin 2 pi y1 sin 2 pi y2) delta_ij delta^{alpha beta}
///   nonsymmetric(c, b)   trig2d plus 0.1 c cos(2 pi (y1 + y2)) E_ij delta^{alpha beta}, E = [[0,1],[-1,0]]
///
/// The skew part of the nonsymmetric family drops out of the quadratic form, so
/// ellipticity bounds are those of the scalar factor.
class CoefficientTensor {
public:
    [[nodiscard]] int dimension() const { return 2; }
    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] const std::vector<double>& params() const { return params_; }
    [[nodiscard]] double declared_mu() const { return mu_; }
    [[nodiscard]] bool is_adjoint() const { return adjoint_; }

    /// True when a_{ij}^{alpha beta} = a_{ji}^{beta alpha} for all y.
    [[nodiscard]] bool symmetric() const;
    [[nodiscard]] bool is_constant() const { return family_ == Family::Constant; }

    [[nodiscard]] Tensor4 evaluate(Vec2 y) const;
    /// d/dy_k a_{ij}^{alpha beta}(y) for k = 0, 1.
    [[nodiscard]] std::array<Tensor4, 2> derivative(Vec2 y) const;

    [[nodiscard]] CoefficientTensor with_declared_mu(double mu) const;

    /// Parameters printed with 17 significant digits, comma separated.
    [[nodiscard]] std::string canonical_params() const;

private:
    friend CoefficientTensor build_coefficient(Family, std::span<const double>);
    friend CoefficientTensor adjoint_coefficient(const CoefficientTensor&);

    [[nodiscard]] double scalar_factor(Vec2 y) const;
    [[nodiscard]] double skew_factor(Vec2 y) const;

    Family family_ = Family::Constant;
    std::vector<double> params_;
    Tensor4 constant_;
    double mu_ = 1.0;
    bool adjoint_ = false;
};

/// Throws ValidationError when the parameters break ellipticity (min eigen bound <= 0)
/// or have the wrong arity.
[[nodiscard]] CoefficientTensor build_coefficient(Family family, std::span<const double> params);

/// (a*)_{ij}^{alpha beta}(y) = a_{ji}^{beta alpha}(y), same declared mu.
[[nodiscard]] CoefficientTensor adjoint_coefficient(const CoefficientTensor& a);

struct EllipticityReport {
    double lower = 0.0;  ///< sampled min of the Rayleigh quotient
    double upper = 0.0;  ///< sampled max
    Vec2 worst_point;    ///< y where the minimum was attained
    double declared_mu = 0.0;
    bool pass = false;   ///< lower >= mu and upper <= 1/mu
};

/// Samples the quadratic form on a sample_resolution^2 grid of y and on a fixed set
/// of xi (elementary matrices, pairwise sums/differences, seeded random draws).
[[nodiscard]] EllipticityReport verify_ellipticity(const CoefficientTensor& a, int sample_resolution);

/// Extremal Rayleigh quotients over all xi for a fixed tensor, from the symmetric
/// part of the 4x4 matrix on index pairs (i, alpha).
struct QuadraticBounds {
    double lower;
    double upper;
};
[[nodiscard]] QuadraticBounds quadratic_bounds(const Tensor4& t);

}  // namespace homstokes
