#include "homstokes/cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "homstokes/errors.hpp"
#include "homstokes/saddle.hpp"

namespace homstokes {

using fem::QuadMesh;
using fem::SpMat;
using fem::Vec;

CellGrid CellGrid::make(int N) {
    if (N < 8 || N % 2 != 0) throw ValidationError("cell grid N must be even and >= 8, got " + std::to_string(N));
    return CellGrid{N};
}

double PeriodicField::mean(int c) const {
    const double* v = comp(c);
    double s = 0.0;
    for (int k = 0; k < size(); ++k) s += v[k];
    return s / size();
}

double PeriodicField::max_abs() const {
    double m = 0.0;
    for (double x : data) m = std::max(m, std::abs(x));
    return m;
}

double PeriodicField::l2() const {
    double s = 0.0;
    for (double x : data) s += x * x;
    return n > 0 ? std::sqrt(s / size()) : 0.0;
}

void PeriodicField::remove_mean() {
    for (int c = 0; c < ncomp; ++c) {
        const double m = mean(c);
        double* v = comp(c);
        for (int k = 0; k < size(); ++k) v[k] -= m;
    }
}

namespace {

Vec2 centroid(const CellGrid& g, int ex, int ey) { return {(ex + 0.5) * g.h(), (ey + 0.5) * g.h()}; }

fem::ElementCoefficient cell_coefficient(const CoefficientTensor* A, const CellGrid& g) {
    if (A == nullptr) return [](int, int) { return Tensor4::identity(); };
    if (A->is_constant()) {
        const Tensor4 t = A->evaluate({0.0, 0.0});
        return [t](int, int) { return t; };
    }
    return [A, g](int ex, int ey) { return A->evaluate(centroid(g, ex, ey)); };
}

/// Periodic saddle operator with the constant velocity mode removed by pinning
/// node 0 of each component; solutions are returned mean-free.
class CellOperator {
public:
    CellOperator(const CellGrid& g, const fem::ElementCoefficient& coeff, bool symmetric)
        : mesh_{g.N, g.h(), true} {
        const int nv = mesh_.num_vnodes();
        std::vector<char> fixed(2 * nv, 0);
        fixed[0] = 1;
        fixed[nv] = 1;
        split_ = fem::split_dofs(2 * nv, fixed);
        const SpMat K = fem::assemble_stiffness(mesh_, coeff);
        const SpMat B = fem::assemble_divergence(mesh_);
        SpMat Kr = split_.select_free * K * split_.select_free.transpose();
        SpMat Br = B * split_.select_free.transpose();
        solver_.emplace(std::move(Kr), std::move(Br), fem::assemble_pressure_mass(mesh_), symmetric);
        mass_ = fem::assemble_velocity_mass(mesh_);
    }

    [[nodiscard]] const QuadMesh& mesh() const { return mesh_; }
    [[nodiscard]] const SpMat& velocity_mass() const { return mass_; }

    SaddleResult solve(const Vec& load, double tol) const {
        const int nv = mesh_.num_vnodes();
        const Vec Fr = split_.select_free * load;
        const Vec G = Vec::Zero(mesh_.num_pnodes());
        SaddleResult r = solver_->solve(Fr, G, tol);
        Vec u = split_.select_free.transpose() * r.u;
        for (int c = 0; c < 2; ++c) u.segment(c * nv, nv).array() -= u.segment(c * nv, nv).mean();
        r.u = std::move(u);
        return r;
    }

private:
    QuadMesh mesh_;
    fem::DofSplit split_;
    std::optional<SaddleSolver> solver_;
    SpMat mass_;
};

PeriodicField velocity_field(const Vec& u, int n) {
    PeriodicField f(n, 2);
    std::copy(u.data(), u.data() + u.size(), f.data.begin());
    return f;
}

PeriodicField scalar_field(const Vec& p, int n) {
    PeriodicField f(n, 1);
    std::copy(p.data(), p.data() + p.size(), f.data.begin());
    return f;
}

CorrectorFields solve_correctors(const CoefficientTensor& A, const CellGrid& g, double tol) {
    const auto coeff = cell_coefficient(&A, g);
    CellOperator op(g, coeff, A.symmetric());
    CorrectorFields out;
    for (int j = 0; j < 2; ++j) {
        for (int beta = 0; beta < 2; ++beta) {
            const Vec load = fem::stress_load(op.mesh(), [&](int ex, int ey) {
                const Tensor4 a = coeff(ex, ey);
                Mat2 s{};
                for (int i = 0; i < 2; ++i)
                    for (int al = 0; al < 2; ++al) s[i * 2 + al] = a(i, j, al, beta);
                return s;
            });
            SaddleResult r;
            try {
                r = op.solve(load, tol);
            } catch (const SolverError& e) {
                throw SolverError("corrector (j=" + std::to_string(j + 1) + ", beta=" + std::to_string(beta + 1) +
                                      "): " + e.what(),
                                  e.residual(), e.iterations());
            }
            const int k = jb(j, beta);
            out.chi[k] = velocity_field(r.u, g.N);
            out.pi[k] = scalar_field(r.p, g.N / 2);
            out.pi[k].remove_mean();
            out.momentum_residual[k] = r.momentum_residual;
            out.divergence_residual[k] = r.divergence_residual;
            out.iterations[k] = r.iterations;
        }
    }
    return out;
}

/// Gradients d_l (chi_j^beta + P_j^beta)^delta at Gauss point q of an element,
/// out[jb][delta][l].
void corrector_strain(const QuadMesh& m, const CorrectorFields& c, int ex, int ey, int q, double out[4][2][2]) {
    for (int j = 0; j < 2; ++j)
        for (int beta = 0; beta < 2; ++beta) {
            const PeriodicField& chi = c.chi[jb(j, beta)];
            for (int d = 0; d < 2; ++d) {
                double g[4][2];
                fem::element_gradient(m, chi.comp(d), ex, ey, g);
                for (int l = 0; l < 2; ++l)
                    out[jb(j, beta)][d][l] = g[q][l] + ((l == j && d == beta) ? 1.0 : 0.0);
            }
        }
}

double centered(const PeriodicField& f, int c, int i, int j, int axis) {
    const double s = 0.5 * f.n;
    return axis == 0 ? s * (f.at(c, i + 1, j) - f.at(c, i - 1, j)) : s * (f.at(c, i, j + 1) - f.at(c, i, j - 1));
}

}  // namespace

std::pair<PeriodicField, PeriodicField> solve_cell_stokes(const CoefficientTensor* A, const PeriodicField& forcing,
                                                          const CellGrid& grid, double tol) {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (forcing.n != grid.N || forcing.ncomp != 2) throw ValidationError("forcing does not match the cell grid");
    const double fmax = forcing.max_abs();
    for (int c = 0; c < 2; ++c) {
        const double m = forcing.mean(c);
        if (std::abs(m) > 1e-12 * fmax + 1e-300 && std::abs(m) > 1e-14) {
            throw PreconditionError("periodic forcing has nonzero mean (" + std::to_string(m) + ")", std::abs(m));
        }
    }
    const bool sym = A == nullptr || A->symmetric();
    CellOperator op(grid, cell_coefficient(A, grid), sym);
    const int nv = op.mesh().num_vnodes();
    Vec load(2 * nv);
    for (int c = 0; c < 2; ++c) {
        Eigen::Map<const Vec> fc(forcing.comp(c), nv);
        load.segment(c * nv, nv) = op.velocity_mass() * fc;
    }
    SaddleResult r = op.solve(load, tol);
    PeriodicField p = scalar_field(r.p, grid.N / 2);
    p.remove_mean();
    return {velocity_field(r.u, grid.N), std::move(p)};
}

CorrectorSet compute_correctors(const CoefficientTensor& A, const CellGrid& grid, double tol, bool with_adjoint) {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    CorrectorSet set;
    set.grid = grid;
    set.tol = tol;
    set.primal = solve_correctors(A, grid, tol);
    if (with_adjoint) {
        if (A.symmetric()) {
            set.adjoint = set.primal;
        } else {
            set.adjoint = solve_correctors(adjoint_coefficient(A), grid, tol);
        }
    }
    return set;
}

EffectiveTensor compute_effective_tensor(const CoefficientTensor& A, const CellGrid& grid,
                                         const CorrectorFields& c) {
    const QuadMesh m{grid.N, grid.h(), true};
    const auto coeff = cell_coefficient(&A, grid);
    const double w = 0.25 * grid.h() * grid.h();
    Tensor4 ah;
    double strain[4][2][2];
    for (int ey = 0; ey < m.n; ++ey)
        for (int ex = 0; ex < m.n; ++ex) {
            const Tensor4 a = coeff(ex, ey);
            for (int q = 0; q < 4; ++q) {
                corrector_strain(m, c, ex, ey, q, strain);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int al = 0; al < 2; ++al)
                            for (int be = 0; be < 2; ++be) {
                                double s = 0.0;
                                for (int k = 0; k < 2; ++k)
                                    for (int l = 0; l < 2; ++l)
                                        for (int ga = 0; ga < 2; ++ga)
                                            for (int de = 0; de < 2; ++de)
                                                s += a(k, l, ga, de) * strain[jb(j, be)][de][l] *
                                                     strain[jb(i, al)][ga][k];
                                ah(i, j, al, be) += w * s;
                            }
            }
        }
    EffectiveTensor e;
    e.a = ah;
    const auto qb = quadratic_bounds(ah);
    e.mu = qb.lower;
    e.mu1 = qb.upper;
    return e;
}

EffectiveTensor compute_effective_tensor(const CoefficientTensor& A, const CorrectorSet& c) {
    return compute_effective_tensor(A, c.grid, c.primal);
}

EffectiveTensor compute_adjoint_effective_tensor(const CoefficientTensor& A, const CorrectorSet& c) {
    if (!c.adjoint) throw ValidationError("corrector set carries no adjoint correctors");
    return compute_effective_tensor(adjoint_coefficient(A), c.grid, *c.adjoint);
}

BTensor compute_b_tensor(const CoefficientTensor& A, const CorrectorSet& c, const EffectiveTensor& eff) {
    const CellGrid& grid = c.grid;
    const QuadMesh m{grid.N, grid.h(), true};
    const auto coeff = cell_coefficient(&A, grid);
    BTensor out;
    for (auto& f : out.b) f = PeriodicField(grid.N, 2);
    double strain[4][2][2];
    for (int ey = 0; ey < m.n; ++ey)
        for (int ex = 0; ex < m.n; ++ex) {
            const Tensor4 a = coeff(ex, ey);
            for (int q = 0; q < 4; ++q) {
                corrector_strain(m, c.primal, ex, ey, q, strain);
                // Gauss point q sits next to local corner q
                const int node = m.vnode(ex + (q & 1), ey + (q >> 1));
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int al = 0; al < 2; ++al)
                            for (int be = 0; be < 2; ++be) {
                                double s = -eff.a(i, j, al, be);
                                for (int k = 0; k < 2; ++k)
                                    for (int ga = 0; ga < 2; ++ga) s += a(i, k, al, ga) * strain[jb(j, be)][ga][k];
                                out.b[ijb(i, j, be)].comp(al)[node] += 0.25 * s;
                            }
            }
        }
    for (auto& f : out.b) {
        for (int al = 0; al < 2; ++al) out.raw_mean = std::max(out.raw_mean, std::abs(f.mean(al)));
        f.remove_mean();
    }
    return out;
}

DualCorrectorSet compute_dual_correctors(const BTensor& b, const CellGrid& grid, double tol) {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    CellOperator op(grid, cell_coefficient(nullptr, grid), true);
    const int nv = op.mesh().num_vnodes();
    DualCorrectorSet d;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int be = 0; be < 2; ++be) {
                const int idx = ijb(i, j, be);
                const PeriodicField& bf = b.b[idx];
                if (bf.n != grid.N) throw ValidationError("b tensor does not match the cell grid");
                for (int al = 0; al < 2; ++al) {
                    const double m = bf.mean(al);
                    if (std::abs(m) > 1e-8 * bf.max_abs() + 1e-14) {
                        throw PreconditionError("b tensor entry has nonzero mean", std::abs(m));
                    }
                }
                Vec load(2 * nv);
                for (int al = 0; al < 2; ++al) {
                    Eigen::Map<const Vec> bc(bf.comp(al), nv);
                    load.segment(al * nv, nv) = -(op.velocity_mass() * bc);
                }
                SaddleResult r;
                try {
                    r = op.solve(load, tol);
                } catch (const Error& e) {
                    throw SolverError("dual corrector (i=" + std::to_string(i + 1) + ", j=" + std::to_string(j + 1) +
                                          ", beta=" + std::to_string(be + 1) + "): " + e.what(),
                                      0.0, 0);
                }
                d.f[idx] = velocity_field(r.u, grid.N);
                d.q[idx] = scalar_field(-r.p, grid.N / 2);
                d.q[idx].remove_mean();
                d.max_momentum_residual = std::max(d.max_momentum_residual, r.momentum_residual);
                d.max_divergence_residual = std::max(d.max_divergence_residual, r.divergence_residual);
            }
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int be = 0; be < 2; ++be) {
                    PeriodicField phi(grid.N, 2);
                    const PeriodicField& fij = d.f[ijb(i, j, be)];
                    const PeriodicField& fkj = d.f[ijb(k, j, be)];
                    for (int al = 0; al < 2; ++al)
                        for (int y = 0; y < grid.N; ++y)
                            for (int x = 0; x < grid.N; ++x)
                                phi.comp(al)[y * grid.N + x] = centered(fij, al, x, y, k) - centered(fkj, al, x, y, i);
                    d.phi[kijb(k, i, j, be)] = std::move(phi);
                }
    return d;
}

IdentityReport verify_corrector_identities(const CorrectorSet& c, const DualCorrectorSet& d, const BTensor& b,
                                           const EffectiveTensor&) {
    IdentityReport rep;
    const int N = c.grid.N;
    const int P = N / 2;
    rep.N = N;
    const CorrectorFields& cf = c.primal;

    auto coarse_l2 = [P](auto&& fn) {
        double s = 0.0;
        for (int J = 0; J < P; ++J)
            for (int I = 0; I < P; ++I) {
                const double v = fn(I, J);
                s += v * v;
            }
        return s / (static_cast<double>(P) * P);
    };

    double b1 = 0.0, qpi = 0.0, dec = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int be = 0; be < 2; ++be) {
            const PeriodicField& pi = cf.pi[jb(j, be)];
            for (int al = 0; al < 2; ++al) {
                b1 += coarse_l2([&](int I, int J) {
                    double s = 0.0;
                    for (int i = 0; i < 2; ++i) s += centered(b.b[ijb(i, j, be)], al, 2 * I, 2 * J, i);
                    return s - centered(pi, 0, I, J, al);
                });
            }
            qpi += coarse_l2([&](int I, int J) {
                double s = pi.at(0, I, J);
                for (int i = 0; i < 2; ++i) s -= centered(d.q[ijb(i, j, be)], 0, I, J, i);
                return s;
            });
            for (int i = 0; i < 2; ++i)
                for (int al = 0; al < 2; ++al) {
                    dec += coarse_l2([&](int I, int J) {
                        double s = b.b[ijb(i, j, be)].at(al, 2 * I, 2 * J);
                        for (int k = 0; k < 2; ++k) s -= centered(d.phi[kijb(k, i, j, be)], al, 2 * I, 2 * J, k);
                        return s - centered(d.q[ijb(i, j, be)], 0, I, J, al);
                    });
                }
        }
    rep.b1 = std::sqrt(b1);
    rep.qpi = std::sqrt(qpi);
    rep.decomposition = std::sqrt(dec);

    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int be = 0; be < 2; ++be) {
                    const auto& a = d.phi[kijb(k, i, j, be)].data;
                    const auto& o = d.phi[kijb(i, k, j, be)].data;
                    for (std::size_t n = 0; n < a.size(); ++n) rep.skew = std::max(rep.skew, std::abs(a[n] + o[n]));
                }

    auto track_mean = [&rep](const PeriodicField& f) {
        for (int comp = 0; comp < f.ncomp; ++comp) rep.max_mean = std::max(rep.max_mean, std::abs(f.mean(comp)));
    };
    for (const auto& f : cf.chi) track_mean(f);
    for (const auto& f : cf.pi) track_mean(f);
    for (const auto& f : b.b) track_mean(f);
    for (const auto& f : d.f) track_mean(f);
    for (const auto& f : d.q) track_mean(f);
    for (const auto& f : d.phi) track_mean(f);

    for (double r : cf.divergence_residual) rep.divergence = std::max(rep.divergence, r);
    rep.divergence = std::max(rep.divergence, d.max_divergence_residual);
    return rep;
}

}  // namespace homstokes
