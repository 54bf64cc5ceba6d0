#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "homstokes/coefficient.hpp"
#include "homstokes/fem.hpp"
#include "homstokes/types.hpp"

namespace homstokes {

/// Uniform periodic grid on Y = [0,1)^2 with N points per axis.
struct CellGrid {
    int N = 0;
    [[nodiscard]] double h() const { return 1.0 / N; }
    /// Throws ValidationError unless N >= 8 and N is even.
    [[nodiscard]] static CellGrid make(int N);
};

/// Nodal values on an n x n periodic grid (spacing 1/n), one or more components,
/// row-major with y1 fastest. Velocities live on the cell grid, pressures on the
/// half-resolution pressure grid.
struct PeriodicField {
    int n = 0;
    int ncomp = 0;
    std::vector<double> data;

    PeriodicField() = default;
    PeriodicField(int n_, int ncomp_) : n(n_), ncomp(ncomp_), data(static_cast<std::size_t>(n_) * n_ * ncomp_, 0.0) {}

    [[nodiscard]] int size() const { return n * n; }
    [[nodiscard]] double* comp(int c) { return data.data() + static_cast<std::size_t>(c) * n * n; }
    [[nodiscard]] const double* comp(int c) const { return data.data() + static_cast<std::size_t>(c) * n * n; }
    [[nodiscard]] double at(int c, int i, int j) const {
        i = ((i % n) + n) % n;
        j = ((j % n) + n) % n;
        return comp(c)[j * n + i];
    }
    [[nodiscard]] double mean(int c) const;
    [[nodiscard]] double max_abs() const;
    /// sqrt(mean of squares) summed over components.
    [[nodiscard]] double l2() const;
    void remove_mean();
};

/// Index helpers: (j, beta) -> j*2+beta, (i, j, beta) -> (i*2+j)*2+beta.
[[nodiscard]] constexpr int jb(int j, int beta) { return j * 2 + beta; }
[[nodiscard]] constexpr int ijb(int i, int j, int beta) { return (i * 2 + j) * 2 + beta; }
[[nodiscard]] constexpr int kijb(int k, int i, int j, int beta) { return ((k * 2 + i) * 2 + j) * 2 + beta; }

struct CorrectorFields {
    std::array<PeriodicField, 4> chi;  ///< chi_j^beta, two components gamma, on the cell grid
    std::array<PeriodicField, 4> pi;   ///< pi_j^beta on the pressure grid
    std::array<double, 4> momentum_residual{};
    std::array<double, 4> divergence_residual{};
    std::array<int, 4> iterations{};
};

struct CorrectorSet {
    CellGrid grid;
    double tol = 0.0;
    CorrectorFields primal;
    std::optional<CorrectorFields> adjoint;  ///< correctors of A*
};

struct EffectiveTensor {
    Tensor4 a;
    double mu = 0.0;   ///< lower quadratic bound
    double mu1 = 0.0;  ///< upper quadratic bound
};

/// b_{ij}^{alpha beta} stored per (i, j, beta), components alpha, on the cell grid.
struct BTensor {
    std::array<PeriodicField, 8> b;
    /// Largest |mean| before the explicit projection; it equals the defect of the
    /// Galerkin identity a_per(chi + P, chi) = 0 and so tracks the solver tolerance.
    double raw_mean = 0.0;
};

struct DualCorrectorSet {
    std::array<PeriodicField, 8> f;     ///< f_{ij}^beta, components alpha, cell grid
    std::array<PeriodicField, 8> q;     ///< q_{ij}^beta, pressure grid
    std::array<PeriodicField, 16> phi;  ///< Phi_{kij}^{alpha beta} at kijb(k,i,j,beta), components alpha
    double max_momentum_residual = 0.0;
    double max_divergence_residual = 0.0;
};

struct IdentityReport {
    int N = 0;
    double b1 = 0.0;             ///< d_i b_ij - d_alpha pi_j
    double qpi = 0.0;            ///< pi_j - d_i q_ij
    double decomposition = 0.0;  ///< b_ij - d_k Phi_kij - d_alpha q_ij
    double skew = 0.0;           ///< max |Phi_kij + Phi_ikj|
    double max_mean = 0.0;       ///< largest |mean| over chi, pi, b, f, q, Phi
    double divergence = 0.0;     ///< largest relative weak divergence residual of chi and f
};

/// Periodic Stokes solve -div(A grad u) + grad p = F, div u = 0 with nodal forcing
/// F (two components on the cell grid). A == nullptr means the Laplacian.
/// Throws PreconditionError when F has nonzero mean, SolverError on stagnation.
[[nodiscard]] std::pair<PeriodicField, PeriodicField> solve_cell_stokes(const CoefficientTensor* A,
                                                                       const PeriodicField& forcing,
                                                                       const CellGrid& grid, double tol);

[[nodiscard]] CorrectorSet compute_correctors(const CoefficientTensor& A, const CellGrid& grid, double tol,
                                              bool with_adjoint = true);

/// a_per(chi_j^beta + P_j^beta, chi_i^alpha + P_i^alpha) with the same element
/// quadrature as the cell solve.
[[nodiscard]] EffectiveTensor compute_effective_tensor(const CoefficientTensor& A, const CellGrid& grid,
                                                       const CorrectorFields& correctors);
[[nodiscard]] EffectiveTensor compute_effective_tensor(const CoefficientTensor& A, const CorrectorSet& correctors);
/// Effective tensor from the adjoint correctors (requires correctors.adjoint).
[[nodiscard]] EffectiveTensor compute_adjoint_effective_tensor(const CoefficientTensor& A,
                                                               const CorrectorSet& correctors);

[[nodiscard]] BTensor compute_b_tensor(const CoefficientTensor& A, const CorrectorSet& correctors,
                                       const EffectiveTensor& effective);

[[nodiscard]] DualCorrectorSet compute_dual_correctors(const BTensor& b, const CellGrid& grid, double tol);

[[nodiscard]] IdentityReport verify_corrector_identities(const CorrectorSet& correctors, const DualCorrectorSet& dual,
                                                         const BTensor& b, const EffectiveTensor& effective);

}  // namespace homstokes
