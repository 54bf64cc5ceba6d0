#include "homstokes/domain.hpp"

#include <cmath>
#include <cstdio>

#include "homstokes/errors.hpp"
#include "homstokes/saddle.hpp"

namespace homstokes {

using fem::SpMat;
using fem::Vec;

DomainGrid DomainGrid::make(int M) {
    if (M < 16 || M % 2 != 0) throw ValidationError("domain grid M must be even and >= 16, got " + std::to_string(M));
    return DomainGrid{M};
}

std::vector<int> DomainGrid::boundary_nodes() const {
    std::vector<int> out;
    const int n = nside();
    for (int i = 0; i < M; ++i) out.push_back(i);
    for (int j = 0; j < M; ++j) out.push_back(j * n + M);
    for (int i = M; i > 0; --i) out.push_back(M * n + i);
    for (int j = M; j > 0; --j) out.push_back(j * n);
    return out;
}

StokesProblem StokesProblem::zeros(const DomainGrid& grid) {
    StokesProblem p;
    p.grid = grid;
    const auto n = static_cast<std::size_t>(grid.num_nodes());
    p.F1.assign(n, 0.0);
    p.F2.assign(n, 0.0);
    p.g.assign(n, 0.0);
    p.f1.assign(n, 0.0);
    p.f2.assign(n, 0.0);
    p.recipe = "zero";
    return p;
}

namespace {

double trapz_weight(int i, int M) { return (i == 0 || i == M) ? 0.5 : 1.0; }

void check_sizes(const StokesProblem& p) {
    const auto n = static_cast<std::size_t>(p.grid.num_nodes());
    if (p.F1.size() != n || p.F2.size() != n || p.g.size() != n || p.f1.size() != n || p.f2.size() != n) {
        throw ValidationError("problem data does not match the domain grid");
    }
}

// signed flux integrand weights: int_dOmega f.n = sum over nodes of wx f1 + wy f2
void flux_weights(const DomainGrid& g, int i, int j, double& wx, double& wy) {
    const int M = g.M;
    const double h = g.h();
    wx = 0.0;
    wy = 0.0;
    if (i == 0) wx -= h * trapz_weight(j, M);
    if (i == M) wx += h * trapz_weight(j, M);
    if (j == 0) wy -= h * trapz_weight(i, M);
    if (j == M) wy += h * trapz_weight(i, M);
}

}  // namespace

double check_compatibility(const StokesProblem& p) {
    check_sizes(p);
    const DomainGrid& g = p.grid;
    const int n = g.nside();
    double ig = 0.0, flux = 0.0;
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const int k = j * n + i;
            ig += trapz_weight(i, g.M) * trapz_weight(j, g.M) * p.g[k];
            if (g.on_boundary(i, j)) {
                double wx, wy;
                flux_weights(g, i, j, wx, wy);
                flux += wx * p.f1[k] + wy * p.f2[k];
            }
        }
    return ig * g.h() * g.h() - flux;
}

double compatibility_tolerance(const StokesProblem& p) {
    check_sizes(p);
    const DomainGrid& g = p.grid;
    const int n = g.nside();
    double gg = 0.0, ff = 0.0;
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const int k = j * n + i;
            gg += trapz_weight(i, g.M) * trapz_weight(j, g.M) * p.g[k] * p.g[k];
        }
    for (int k : g.boundary_nodes()) ff += p.f1[k] * p.f1[k] + p.f2[k] * p.f2[k];
    return 1e-10 * (std::sqrt(gg) * g.h() + std::sqrt(ff * g.h()) + 1e-30);
}

DirichletStokesSolver::DirichletStokesSolver(const DomainGrid& grid, const fem::ElementCoefficient& coeff,
                                             bool symmetric)
    : grid_(grid), mesh_{grid.M, grid.h(), false} {
    const int nv = mesh_.num_vnodes();
    std::vector<char> fixed(2 * nv, 0);
    for (int k : grid.boundary_nodes()) {
        fixed[k] = 1;
        fixed[nv + k] = 1;
    }
    split_ = fem::split_dofs(2 * nv, fixed);
    K_ = fem::assemble_stiffness(mesh_, coeff);
    B_ = fem::assemble_divergence(mesh_);
    mass_ = fem::assemble_velocity_mass(mesh_);
    coupling_ = fem::assemble_coupling_mass(mesh_);
    SpMat Kr = split_.select_free * K_ * split_.select_free.transpose();
    SpMat Br = B_ * split_.select_free.transpose();
    solver_ = std::make_unique<SaddleSolver>(std::move(Kr), std::move(Br), fem::assemble_pressure_mass(mesh_),
                                             symmetric);
}

DirichletStokesSolver::~DirichletStokesSolver() = default;
DirichletStokesSolver::DirichletStokesSolver(DirichletStokesSolver&&) noexcept = default;

DomainField DirichletStokesSolver::solve(const StokesProblem& data, double tol) const {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    check_sizes(data);
    if (data.grid.M != grid_.M) throw ValidationError("problem grid does not match the factored operator");

    const double compat = check_compatibility(data);
    const double ctol = compatibility_tolerance(data);
    if (std::abs(compat) > ctol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "incompatible data: int g - int f.n = %.6e (admissible %.3e)", compat, ctol);
        throw PreconditionError(buf, compat);
    }

    const int nv = mesh_.num_vnodes();
    Vec ub = Vec::Zero(2 * nv);
    for (int k : grid_.boundary_nodes()) {
        ub[k] = data.f1[k];
        ub[nv + k] = data.f2[k];
    }
    Vec load(2 * nv);
    load.head(nv) = mass_ * Eigen::Map<const Vec>(data.F1.data(), nv);
    load.tail(nv) = mass_ * Eigen::Map<const Vec>(data.F2.data(), nv);
    const Vec Fr = split_.select_free * (load - K_ * ub);
    const Vec G = -(coupling_ * Eigen::Map<const Vec>(data.g.data(), nv)) - B_ * ub;

    SaddleResult r = solver_->solve(Fr, G, tol);

    DomainField out(grid_);
    const Vec u = split_.select_free.transpose() * r.u + ub;
    std::copy(u.data(), u.data() + nv, out.u1.begin());
    std::copy(u.data() + nv, u.data() + 2 * nv, out.u2.begin());
    std::copy(r.p.data(), r.p.data() + r.p.size(), out.p.begin());
    out.pressure_mean = r.pressure_shift;
    out.iterations = r.iterations;
    out.momentum_residual = r.momentum_residual;
    out.divergence_residual = r.divergence_residual;
    if (data.A && data.epsilon > 0.0 && grid_.h() > data.epsilon / 8.0 * (1.0 + 1e-12)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "under-resolved: h = %.4g > epsilon/8 = %.4g", grid_.h(), data.epsilon / 8.0);
        out.warnings.emplace_back(buf);
    }
    return out;
}

fem::ElementCoefficient element_coefficient(const StokesProblem& p) {
    const double h = p.grid.h();
    if (p.A && p.epsilon > 0.0 && !p.A->is_constant()) {
        const CoefficientTensor A = *p.A;
        const double eps = p.epsilon;
        return [A, eps, h](int ex, int ey) { return A.evaluate({(ex + 0.5) * h / eps, (ey + 0.5) * h / eps}); };
    }
    const Tensor4 t = p.A ? p.A->evaluate({0.0, 0.0}) : p.constant;
    return [t](int, int) { return t; };
}

bool problem_symmetric(const StokesProblem& p) {
    if (p.A) return p.A->symmetric();
    return max_abs_difference(p.constant, p.constant.adjoint()) <= 1e-12 * max_abs(p.constant);
}

DomainField solve_dirichlet_stokes(const StokesProblem& problem, double tol) {
    if (problem.A && !(problem.epsilon > 0.0 && problem.epsilon <= 1.0)) {
        throw ValidationError("epsilon must lie in (0, 1]");
    }
    DirichletStokesSolver solver(problem.grid, element_coefficient(problem), problem_symmetric(problem));
    return solver.solve(problem, tol);
}

DomainField solve_homogenized(const EffectiveTensor& effective, const StokesProblem& data, double tol) {
    StokesProblem p = data;
    p.A.reset();
    p.epsilon = 0.0;
    p.constant = effective.a;
    return solve_dirichlet_stokes(p, tol);
}

Recipe parse_recipe(std::string_view name) {
    if (name == "zero") return Recipe::Zero;
    if (name == "vortex") return Recipe::Vortex;
    if (name == "rotation") return Recipe::Rotation;
    if (name == "incompatible") return Recipe::Incompatible;
    throw ValidationError("unknown recipe '" + std::string(name) + "'");
}

std::string_view recipe_name(Recipe r) {
    switch (r) {
        case Recipe::Zero: return "zero";
        case Recipe::Vortex: return "vortex";
        case Recipe::Rotation: return "rotation";
        case Recipe::Incompatible: return "incompatible";
    }
    return "unknown";
}

std::optional<ExactSolution> recipe_solution(Recipe r) {
    using P = ExactSolution::Point;
    switch (r) {
        case Recipe::Zero:
            return ExactSolution{[](Vec2) { return P{}; }};
        case Recipe::Rotation:
            return ExactSolution{[](Vec2 x) {
                P v;
                v.u = {-(x.y - 0.5), x.x - 0.5};
                v.du[0] = {0.0, -1.0};
                v.du[1] = {1.0, 0.0};
                return v;
            }};
        case Recipe::Vortex:
            // psi = sin^2(pi x1) sin^2(pi x2), u = (d2 psi, -d1 psi), p = sin(2 pi x1) cos(2 pi x2)
            return ExactSolution{[](Vec2 x) {
                const double pi = std::numbers::pi;
                const double s1 = std::sin(pi * x.x), s2 = std::sin(pi * x.y);
                const double S1 = std::sin(2 * pi * x.x), C1 = std::cos(2 * pi * x.x);
                const double S2 = std::sin(2 * pi * x.y), C2 = std::cos(2 * pi * x.y);
                const double p3 = pi * pi * pi;
                P v;
                v.u = {pi * s1 * s1 * S2, -pi * S1 * s2 * s2};
                v.du[0] = {pi * pi * S1 * S2, 2 * pi * pi * s1 * s1 * C2};
                v.du[1] = {-2 * pi * pi * C1 * s2 * s2, -pi * pi * S1 * S2};
                v.d2u[0][0] = {2 * p3 * C1 * S2, 2 * p3 * S1 * C2};
                v.d2u[0][1] = {2 * p3 * S1 * C2, -4 * p3 * s1 * s1 * S2};
                v.d2u[1][0] = {4 * p3 * S1 * s2 * s2, -2 * p3 * C1 * S2};
                v.d2u[1][1] = {-2 * p3 * C1 * S2, -2 * p3 * S1 * C2};
                v.p = S1 * C2;
                v.dp = {2 * pi * C1 * C2, -2 * pi * S1 * S2};
                return v;
            }};
        case Recipe::Incompatible:
            return std::nullopt;
    }
    return std::nullopt;
}

StokesProblem manufactured_problem(Recipe recipe, const DomainGrid& grid, const std::optional<CoefficientTensor>& A,
                                   double epsilon, const Tensor4& constant) {
    StokesProblem p = StokesProblem::zeros(grid);
    p.recipe = std::string(recipe_name(recipe));
    p.A = A;
    p.epsilon = A ? epsilon : 0.0;
    p.constant = constant;
    if (A && !(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");

    if (recipe == Recipe::Incompatible) {
        std::fill(p.g.begin(), p.g.end(), 1.0);
        return p;
    }
    p.exact = recipe_solution(recipe);
    const int n = grid.nside();
    for (int j = 0; j <= grid.M; ++j)
        for (int i = 0; i <= grid.M; ++i) {
            const Vec2 x = grid.node(i, j);
            const auto v = p.exact->eval(x);
            Tensor4 a = constant;
            std::array<Tensor4, 2> da{};
            if (A) {
                const Vec2 y{x.x / epsilon, x.y / epsilon};
                a = A->evaluate(y);
                da = A->derivative(y);
            }
            const double inv = A ? 1.0 / epsilon : 0.0;
            // F^alpha = -(1/eps) d_{y_i} a_ij^ab d_j u^b - a_ij^ab d_i d_j u^b + d_alpha p
            std::array<double, 2> F{v.dp[0], v.dp[1]};
            for (int al = 0; al < 2; ++al)
                for (int be = 0; be < 2; ++be)
                    for (int i2 = 0; i2 < 2; ++i2)
                        for (int j2 = 0; j2 < 2; ++j2) {
                            F[al] -= inv * da[i2](i2, j2, al, be) * v.du[be][j2];
                            F[al] -= a(i2, j2, al, be) * v.d2u[be][i2][j2];
                        }
            const int k = j * n + i;
            p.F1[k] = F[0];
            p.F2[k] = F[1];
            if (grid.on_boundary(i, j)) {
                p.f1[k] = v.u[0];
                p.f2[k] = v.u[1];
            }
        }
    return p;
}

}  // namespace homstokes
