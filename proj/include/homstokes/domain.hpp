#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homstokes/cell.hpp"
#include "homstokes/coefficient.hpp"
#include "homstokes/fem.hpp"

namespace homstokes {

class SaddleSolver;

/// Omega = [0,1]^2 with M elements per axis. Velocity nodes (M+1)^2, pressure
/// nodes on the 2h grid, (M/2+1)^2. Node (i, j) sits at (i h, j h), flat j*n + i.
struct DomainGrid {
    int M = 0;
    [[nodiscard]] double h() const { return 1.0 / M; }
    [[nodiscard]] int nside() const { return M + 1; }
    [[nodiscard]] int pside() const { return M / 2 + 1; }
    [[nodiscard]] int num_nodes() const { return nside() * nside(); }
    [[nodiscard]] int num_pnodes() const { return pside() * pside(); }
    [[nodiscard]] bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == M || j == M; }
    [[nodiscard]] Vec2 node(int i, int j) const { return {i * h(), j * h()}; }
    [[nodiscard]] Vec2 pnode(int i, int j) const { return {2 * i * h(), 2 * j * h()}; }
    /// Flat indices of the boundary nodes, counter-clockwise from the origin.
    [[nodiscard]] std::vector<int> boundary_nodes() const;
    /// Throws ValidationError unless M >= 16 and M is even.
    [[nodiscard]] static DomainGrid make(int M);
};

struct DomainField {
    DomainGrid grid;
    std::vector<double> u1, u2;  ///< velocity nodes
    std::vector<double> p;       ///< pressure nodes
    double pressure_mean = 0.0;  ///< mean removed by the normalization
    int iterations = 0;
    double momentum_residual = 0.0;
    double divergence_residual = 0.0;
    std::vector<std::string> warnings;

    DomainField() = default;
    explicit DomainField(const DomainGrid& g)
        : grid(g), u1(g.num_nodes(), 0.0), u2(g.num_nodes(), 0.0), p(g.num_pnodes(), 0.0) {}
    [[nodiscard]] const std::vector<double>& u(int c) const { return c == 0 ? u1 : u2; }
    [[nodiscard]] std::vector<double>& u(int c) { return c == 0 ? u1 : u2; }
};

/// Value, gradient and Hessian of a smooth vector field plus a scalar.
struct ExactSolution {
    struct Point {
        std::array<double, 2> u{};
        std::array<std::array<double, 2>, 2> du{};                 ///< du[beta][j] = d_j u^beta
        std::array<std::array<std::array<double, 2>, 2>, 2> d2u{};  ///< d2u[beta][i][j]
        double p = 0.0;
        std::array<double, 2> dp{};
    };
    std::function<Point(Vec2)> eval;
};

struct StokesProblem {
    DomainGrid grid;
    /// Oscillating coefficient A(x / epsilon) when set, otherwise `constant`.
    std::optional<CoefficientTensor> A;
    double epsilon = 0.0;
    Tensor4 constant = Tensor4::identity();
    std::vector<double> F1, F2;  ///< body force at velocity nodes
    std::vector<double> g;       ///< divergence data at velocity nodes
    std::vector<double> f1, f2;  ///< Dirichlet data; only boundary entries are read
    std::optional<ExactSolution> exact;
    std::string recipe;

    /// Zero data on grid with the identity coefficient.
    [[nodiscard]] static StokesProblem zeros(const DomainGrid& grid);
};

/// int_Omega g - int_dOmega f.n by the trapezoid rules on the velocity grid.
[[nodiscard]] double check_compatibility(const StokesProblem& problem);
/// 1e-10 * (||g|| + ||f|| + 1e-30), the admissible compatibility residual.
[[nodiscard]] double compatibility_tolerance(const StokesProblem& problem);

/// Factored Dirichlet Stokes operator for a fixed coefficient; reusable for
/// several data sets on one grid.
class DirichletStokesSolver {
public:
    DirichletStokesSolver(const DomainGrid& grid, const fem::ElementCoefficient& coeff, bool symmetric);
    ~DirichletStokesSolver();
    DirichletStokesSolver(DirichletStokesSolver&&) noexcept;

    /// Throws PreconditionError on incompatible data, SolverError on stagnation.
    [[nodiscard]] DomainField solve(const StokesProblem& data, double tol) const;
    [[nodiscard]] const DomainGrid& grid() const { return grid_; }

private:
    DomainGrid grid_;
    fem::QuadMesh mesh_;
    fem::DofSplit split_;
    fem::SpMat K_, B_, mass_, coupling_;
    std::unique_ptr<SaddleSolver> solver_;
};

/// Element coefficient of a problem: A at x_centroid / epsilon, or the constant.
[[nodiscard]] fem::ElementCoefficient element_coefficient(const StokesProblem& problem);
[[nodiscard]] bool problem_symmetric(const StokesProblem& problem);

[[nodiscard]] DomainField solve_dirichlet_stokes(const StokesProblem& problem, double tol);
[[nodiscard]] DomainField solve_homogenized(const EffectiveTensor& effective, const StokesProblem& data, double tol);

enum class Recipe { Zero, Vortex, Rotation, Incompatible };
[[nodiscard]] Recipe parse_recipe(std::string_view name);
[[nodiscard]] std::string_view recipe_name(Recipe r);

/// Exact fields of a recipe (none for Incompatible).
[[nodiscard]] std::optional<ExactSolution> recipe_solution(Recipe r);

/// Problem whose exact solution is the recipe's (u, p) for the operator
/// -div(A(x/epsilon) grad) (epsilon > 0) or -div(constant grad) (A empty).
[[nodiscard]] StokesProblem manufactured_problem(Recipe recipe, const DomainGrid& grid,
                                                 const std::optional<CoefficientTensor>& A, double epsilon,
                                                 const Tensor4& constant = Tensor4::identity());

}  // namespace homstokes
