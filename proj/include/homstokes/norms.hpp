#pragma once

#include <span>
#include <utility>
#include <vector>

#include "homstokes/domain.hpp"

namespace homstokes {

enum class NormKind { L2, H1Semi, H1 };

struct NormReport {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double h1 = 0.0;
    int M = 0;
};

/// Norms of a set of nodal components on the velocity grid. L2 by the trapezoid
/// rule, the seminorm from the exact gradient of the bilinear interpolant.
[[nodiscard]] double discrete_norm(const DomainGrid& grid, std::span<const std::vector<double>* const> comps,
                                   NormKind kind);
[[nodiscard]] NormReport velocity_norms(const DomainField& f);
/// L2 norm of the pressure on the 2h grid (trapezoid).
[[nodiscard]] double pressure_l2(const DomainField& f);

/// Trapezoid L2 errors of a discrete solution against exact fields (velocity
/// on the fine grid, pressure on the 2h grid).
struct ExactErrors {
    double l2_u = 0.0;
    double l2_p = 0.0;
};
[[nodiscard]] ExactErrors exact_errors(const DomainField& f, const ExactSolution& exact);

/// Velocity difference a - b (pressure a.p - b.p).
[[nodiscard]] DomainField difference(const DomainField& a, const DomainField& b);

/// int over {x in Omega : dist(x, dOmega) < r} of |u_h|^2 for the bilinear
/// interpolant, integrated exactly.
[[nodiscard]] double boundary_layer_integral(const DomainField& f, double r);
/// boundary_layer_integral / (r ||u||_H1 ||u||_L2), 0 for the zero field.
[[nodiscard]] double boundary_layer_constant(const DomainField& f, double r);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int count = 0;
};

/// Least squares of log(error) on log(epsilon). Throws ValidationError for fewer
/// than two points, nonpositive values or a degenerate epsilon set.
[[nodiscard]] RateFit fit_rate(std::span<const std::pair<double, double>> points);

}  // namespace homstokes
