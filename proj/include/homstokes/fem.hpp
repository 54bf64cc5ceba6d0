#pragma once

// Q1-iso-Q2 / Q1 pair on a uniform quad mesh: bilinear velocity on the fine
// mesh of spacing h, bilinear pressure on the 2h macro mesh.

#include <Eigen/Sparse>

#include <array>
#include <functional>

#include "homstokes/types.hpp"

namespace homstokes::fem {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// n x n elements of spacing h. Periodic meshes identify node n with node 0.
struct QuadMesh {
    int n = 0;
    double h = 0.0;
    bool periodic = false;

    [[nodiscard]] int vside() const { return periodic ? n : n + 1; }
    [[nodiscard]] int pside() const { return periodic ? n / 2 : n / 2 + 1; }
    [[nodiscard]] int num_vnodes() const { return vside() * vside(); }
    [[nodiscard]] int num_pnodes() const { return pside() * pside(); }
    [[nodiscard]] int vnode(int i, int j) const {
        if (periodic) {
            i %= n;
            j %= n;
        }
        return j * vside() + i;
    }
    [[nodiscard]] int pnode(int i, int j) const {
        if (periodic) {
            i %= n / 2;
            j %= n / 2;
        }
        return j * pside() + i;
    }
};

// Local numbering: 0 (0,0), 1 (1,0), 2 (0,1), 3 (1,1); x runs fastest.
struct Tables {
    std::array<double, 2> gauss{};               // 1D Gauss abscissae on [0,1]
    double grad[2][2][4][4]{};                   // int d_i phi_a d_j phi_b (h-free)
    double mass[4][4]{};                         // int phi_a phi_b on the unit square
    double div[4][4][4][2]{};                    // [sub][c][b][beta] int psi_c d_beta phi_b
    double coupling[4][4][4]{};                  // [sub][c][b] int psi_c phi_b
    double dphi_int[4][2]{};                     // int d_k phi_a
    double phi_q[4][4]{};                        // [q][a] phi_a at Gauss point q
    double dphi_q[4][4][2]{};                    // [q][a][k]
};
[[nodiscard]] const Tables& tables();

using ElementCoefficient = std::function<Tensor4(int ex, int ey)>;
/// Element-constant stress sigma_i^alpha stored as xi[i * 2 + alpha].
using ElementStress = std::function<Mat2(int ex, int ey)>;

/// Full velocity stiffness, dof = comp * nv + node. Rows test (a, alpha),
/// columns trial (b, beta).
[[nodiscard]] SpMat assemble_stiffness(const QuadMesh& m, const ElementCoefficient& a);
/// B_{c,(b,beta)} = -int psi_c d_beta phi_b, size np x 2nv.
[[nodiscard]] SpMat assemble_divergence(const QuadMesh& m);
[[nodiscard]] SpMat assemble_velocity_mass(const QuadMesh& m);
[[nodiscard]] SpMat assemble_pressure_mass(const QuadMesh& m);
/// int psi_c phi_b, size np x nv.
[[nodiscard]] SpMat assemble_coupling_mass(const QuadMesh& m);

/// Load -sum_i int sigma_i^alpha d_i phi_a, size 2nv.
[[nodiscard]] Vec stress_load(const QuadMesh& m, const ElementStress& sigma);

/// Gradient of a nodal Q1 field at the four Gauss points of element (ex, ey):
/// out[q][k] = d_k u.
void element_gradient(const QuadMesh& m, const double* u, int ex, int ey, double out[4][2]);

/// Restriction of full-space matrices to a subset of velocity dofs.
struct DofSplit {
    std::vector<int> free_of;   // full dof -> reduced index or -1
    std::vector<int> free;      // reduced index -> full dof
    std::vector<int> fixed;     // full dofs held at prescribed values
    SpMat select_free;          // |free| x full
    SpMat select_fixed;         // |fixed| x full
};
[[nodiscard]] DofSplit split_dofs(int full_size, const std::vector<char>& is_fixed);

}  // namespace homstokes::fem
