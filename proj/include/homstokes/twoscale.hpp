#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "homstokes/cell.hpp"
#include "homstokes/domain.hpp"

namespace homstokes {

enum class ExtensionMode { Analytic, Reflection };
[[nodiscard]] std::string_view extension_name(ExtensionMode m);
[[nodiscard]] ExtensionMode parse_extension(std::string_view name);

/// Uniform node box: node (i, j) at (x0 + i h, y0 + j h).
struct GridBox {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    int nx = 0, ny = 0;
    [[nodiscard]] Vec2 node(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
};

struct ExtendedField {
    GridBox box;
    int ncomp = 0;
    std::vector<double> data;  ///< comp-major, then row-major (x fastest)
    ExtensionMode mode = ExtensionMode::Analytic;

    ExtendedField() = default;
    ExtendedField(const GridBox& b, int nc, ExtensionMode m)
        : box(b), ncomp(nc), data(static_cast<std::size_t>(b.nx) * b.ny * nc, 0.0), mode(m) {}
    [[nodiscard]] double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * box.ny + j) * box.nx + i];
    }
    [[nodiscard]] double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * box.ny + j) * box.nx + i];
    }
};

/// Velocity of u0 on the padded box [-pad, 1 + pad]^2 (pad rounded up to whole
/// grid steps). Analytic mode takes the exact formula outside Omega; reflection
/// mode uses even reflection x -> -x, x -> 2 - x in each coordinate. Inside Omega
/// the source values are copied. Throws PreconditionError for pad <= 0, for
/// reflection pads beyond 1, or analytic mode without a formula.
[[nodiscard]] ExtendedField extend(const DomainField& u0, double pad, ExtensionMode mode,
                                   const std::optional<ExactSolution>& exact = std::nullopt);

/// (S_eps u)(x) = average of u over the cube x - eps [0,1]^2, by separable composite
/// midpoint quadrature with two samples per grid step and linear interpolation.
/// The result lives on the nodes of field.box whose cube fits in the box.
/// Throws PreconditionError when no such node exists.
[[nodiscard]] ExtendedField steklov_smooth(const ExtendedField& field, double eps);

/// Centered-difference gradient, comps jb(j, beta) = d_j u^beta, on the box
/// shrunk by one node per side.
[[nodiscard]] ExtendedField gradient(const ExtendedField& field);
/// Centered second differences, comp ((beta*2 + j)*2 + alpha) = d_alpha d_j u^beta,
/// on the box shrunk by one node per side.
[[nodiscard]] ExtendedField hessian(const ExtendedField& field);

/// Component c at the velocity nodes of grid. The box must share the grid step
/// and cover Omega, otherwise PreconditionError.
[[nodiscard]] std::vector<double> restrict_to_domain(const ExtendedField& f, int comp, const DomainGrid& grid);

/// f(y) for y anywhere in R^2: wrap into Y and interpolate bilinearly.
[[nodiscard]] double sample_periodic(const PeriodicField& f, int comp, Vec2 y);
/// f(x / eps) at velocity nodes (or pressure nodes) of grid.
[[nodiscard]] std::vector<double> sample_periodic(const PeriodicField& f, int comp, const DomainGrid& grid, double eps,
                                                  bool pressure_nodes = false);

/// S_eps(grad u0~) and S_eps(grad^2 u0~) restricted to the velocity nodes of Omega.
struct SmoothedGradients {
    double epsilon = 0.0;
    ExtensionMode mode = ExtensionMode::Analytic;
    std::array<std::vector<double>, 4> grad;  ///< jb(j, beta)
    std::array<std::vector<double>, 8> hess;  ///< (beta*2 + j)*2 + alpha
};
[[nodiscard]] SmoothedGradients smoothed_gradients(const DomainField& u0, double eps, ExtensionMode mode,
                                                   const std::optional<ExactSolution>& exact = std::nullopt);

/// v = u0 + eps chi^eps S_eps(grad u0~); pressure untouched.
[[nodiscard]] DomainField build_velocity_expansion(const DomainField& u0, const CorrectorSet& correctors,
                                                   const SmoothedGradients& sg);
/// p0 + pi^eps S_eps(grad u0~) minus the Omega-mean of the second term; velocity untouched.
[[nodiscard]] DomainField build_pressure_expansion(const DomainField& p0, const CorrectorSet& correctors,
                                                   const SmoothedGradients& sg);

struct CutoffPair {
    double epsilon = 0.0;
    double kappa = 0.0, kappa_tilde = 0.0;              ///< admissible gradient constants
    double max_grad = 0.0, max_grad_tilde = 0.0;        ///< measured max |grad| times eps
    std::vector<double> theta, theta_tilde;             ///< velocity nodes
};
/// Smoothstep ramps of the distance d to the boundary:
/// theta = 1 - s(d / eps), theta~ = 1 - s((d - eps) / eps), s(t) = 3t^2 - 2t^3 on [0,1].
/// Throws PreconditionError when eps < 4h.
[[nodiscard]] CutoffPair build_cutoffs(double eps, const DomainGrid& grid, double kappa = 2.5);

/// u0 + eps (1 - theta~) chi^eps S_eps(grad u0~), the expansion switched off near the boundary.
[[nodiscard]] DomainField build_truncated_expansion(const DomainField& u0, const CorrectorSet& correctors,
                                                    const SmoothedGradients& sg, const CutoffPair& cutoffs);

struct BoundaryCorrector {
    DomainField field;                  ///< (w, tau)
    std::vector<double> f1, f2, g;      ///< boundary and divergence data used
    double compatibility_shift = 0.0;   ///< constant added to g to close the discrete flux balance
};

/// L_eps w + grad tau = 0, div w = eps chi^eps : grad S_eps(grad u0~), w = eps chi^eps S_eps(grad u0~) on dOmega.
/// When `solver` is given it must be factored for A(x/eps) on the same grid.
[[nodiscard]] BoundaryCorrector solve_boundary_corrector(const CoefficientTensor& A, const CorrectorSet& correctors,
                                                         const SmoothedGradients& sg, const DomainGrid& grid,
                                                         double tol, const DirichletStokesSolver* solver = nullptr);

/// Discrete H^2 norms of the extension over its box and of u0 over Omega
/// (second differences, trapezoid weights).
struct ExtensionBound {
    double extended_h2 = 0.0;
    double domain_h2 = 0.0;
    [[nodiscard]] double ratio() const { return domain_h2 > 0.0 ? extended_h2 / domain_h2 : 0.0; }
};
[[nodiscard]] ExtensionBound extension_bound(const ExtendedField& ext, const DomainField& u0);

}  // namespace homstokes
