#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>

#include "homstokes/fem.hpp"

namespace homstokes {

struct SaddleResult {
    fem::Vec u;
    fem::Vec p;  ///< normalized to zero mass-weighted mean
    double pressure_shift = 0.0;  ///< mean removed by the normalization
    int iterations = 0;
    double schur_residual = 0.0;       ///< ||B u - G|| / ||initial Schur residual||
    double momentum_residual = 0.0;    ///< ||K u + B^T p - F|| / (||F|| + ||G||)
    double divergence_residual = 0.0;  ///< ||B u - G|| / (||F|| + ||G||)
};

/// Solves [K B^T; B 0][u; p] = [F; G] by a Krylov method on the pressure Schur
/// complement B K^{-1} B^T, preconditioned by the pressure mass matrix. K is
/// factored once; the constant pressure mode is projected out every iteration.
/// PCG when K is symmetric, restarted GMRES otherwise.
class SaddleSolver {
public:
    SaddleSolver(fem::SpMat K, fem::SpMat B, const fem::SpMat& pressure_mass, bool symmetric);
    ~SaddleSolver();
    SaddleSolver(SaddleSolver&&) noexcept;
    SaddleSolver& operator=(SaddleSolver&&) noexcept;

    /// Throws SolverError when tol is not reached within max_iterations.
    [[nodiscard]] SaddleResult solve(const fem::Vec& F, const fem::Vec& G, double tol,
                                     int max_iterations = 2000) const;

    [[nodiscard]] const fem::SpMat& K() const { return K_; }
    [[nodiscard]] const fem::SpMat& B() const { return B_; }
    [[nodiscard]] const fem::Vec& pressure_weights() const { return weights_; }

private:
    [[nodiscard]] fem::Vec solve_velocity(const fem::Vec& rhs) const;
    [[nodiscard]] fem::Vec precondition(const fem::Vec& r) const;

    fem::SpMat K_;
    fem::SpMat B_;
    fem::SpMat Bt_;
    fem::Vec weights_;
    bool symmetric_;
    std::unique_ptr<Eigen::SimplicialLDLT<fem::SpMat>> ldlt_;
    std::unique_ptr<Eigen::SparseLU<fem::SpMat, Eigen::COLAMDOrdering<int>>> lu_;
    std::unique_ptr<Eigen::SimplicialLLT<fem::SpMat>> mass_;
};

}  // namespace homstokes
