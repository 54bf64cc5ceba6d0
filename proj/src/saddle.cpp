#include "homstokes/saddle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "homstokes/errors.hpp"

namespace homstokes {

using fem::SpMat;
using fem::Vec;

namespace {

void remove_mean(Vec& v) {
    if (v.size() > 0) v.array() -= v.mean();
}

}  // namespace

SaddleSolver::SaddleSolver(SpMat K, SpMat B, const SpMat& pressure_mass, bool symmetric)
    : K_(std::move(K)), B_(std::move(B)), symmetric_(symmetric) {
    K_.makeCompressed();
    Bt_ = B_.transpose();
    weights_ = pressure_mass * Vec::Ones(pressure_mass.cols());
    if (symmetric_) {
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(K_);
        if (ldlt_->info() != Eigen::Success) throw SolverError("velocity block factorization failed", 0.0, 0);
    } else {
        lu_ = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
        lu_->analyzePattern(K_);
        lu_->factorize(K_);
        if (lu_->info() != Eigen::Success) throw SolverError("velocity block factorization failed", 0.0, 0);
    }
    mass_ = std::make_unique<Eigen::SimplicialLLT<SpMat>>(pressure_mass);
    if (mass_->info() != Eigen::Success) throw SolverError("pressure mass factorization failed", 0.0, 0);
}

SaddleSolver::~SaddleSolver() = default;
SaddleSolver::SaddleSolver(SaddleSolver&&) noexcept = default;
SaddleSolver& SaddleSolver::operator=(SaddleSolver&&) noexcept = default;

Vec SaddleSolver::solve_velocity(const Vec& rhs) const {
    return symmetric_ ? Vec(ldlt_->solve(rhs)) : Vec(lu_->solve(rhs));
}

Vec SaddleSolver::precondition(const Vec& r) const {
    Vec z = mass_->solve(r);
    remove_mean(z);
    return z;
}

SaddleResult SaddleSolver::solve(const Vec& F, const Vec& G, double tol, int max_iterations) const {
    const int np = static_cast<int>(B_.rows());
    SaddleResult res;
    res.p = Vec::Zero(np);
    res.u = solve_velocity(F);

    Vec r = B_ * res.u - G;
    remove_mean(r);
    const double r0 = r.norm();
    const double scale = F.norm() + G.norm();
    // round-off floor for problems whose Schur residual starts near zero
    const double floor_abs = 1e-13 * (G.norm() + B_.cwiseAbs().sum() / std::max(1, np) * res.u.norm()) +
                             std::numeric_limits<double>::min();
    auto target = [&] { return std::max(tol * r0, floor_abs); };

    int it = 0;
    if (r0 > target()) {
        if (symmetric_) {
            Vec z = precondition(r);
            Vec d = z;
            double rz = r.dot(z);
            for (it = 1; it <= max_iterations; ++it) {
                const Vec w = solve_velocity(Bt_ * d);
                Vec sd = B_ * w;
                remove_mean(sd);
                const double dsd = d.dot(sd);
                if (!(dsd > 0.0)) break;
                const double alpha = rz / dsd;
                res.p += alpha * d;
                res.u -= alpha * w;
                r -= alpha * sd;
                if (r.norm() <= target()) break;
                z = precondition(r);
                const double rz_new = r.dot(z);
                d = z + (rz_new / rz) * d;
                rz = rz_new;
            }
        } else {
            // right-preconditioned GMRES(m) on S p = B K^{-1} F - G, S = B K^{-1} B^T
            const int m = 50;
            Vec rhs = B_ * solve_velocity(F) - G;
            remove_mean(rhs);
            auto apply_s = [&](const Vec& x) {
                Vec y = B_ * solve_velocity(Bt_ * x);
                remove_mean(y);
                return y;
            };
            Vec resid = rhs;
            while (it < max_iterations) {
                const double beta = resid.norm();
                if (beta <= target()) break;
                std::vector<Vec> v{resid / beta};
                std::vector<Vec> zs;
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
                std::vector<double> cs(m), sn(m);
                Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
                g[0] = beta;
                int k = 0;
                for (; k < m && it < max_iterations; ++k, ++it) {
                    zs.push_back(precondition(v[k]));
                    Vec w = apply_s(zs[k]);
                    for (int i = 0; i <= k; ++i) {
                        h(i, k) = w.dot(v[i]);
                        w -= h(i, k) * v[i];
                    }
                    h(k + 1, k) = w.norm();
                    for (int i = 0; i < k; ++i) {
                        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
                        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
                        h(i, k) = t;
                    }
                    const double den = std::hypot(h(k, k), h(k + 1, k));
                    cs[k] = h(k, k) / den;
                    sn[k] = h(k + 1, k) / den;
                    h(k, k) = den;
                    h(k + 1, k) = 0.0;
                    g[k + 1] = -sn[k] * g[k];
                    g[k] = cs[k] * g[k];
                    const bool done = std::abs(g[k + 1]) <= target();
                    if (!done && h.col(k).norm() > 0.0 && w.norm() > 0.0) v.push_back(w / w.norm());
                    if (done || w.norm() == 0.0) {
                        ++k;
                        ++it;
                        break;
                    }
                }
                Eigen::VectorXd y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
                for (int i = 0; i < k; ++i) res.p += y[i] * zs[i];
                resid = rhs - apply_s(res.p);
            }
            res.u = solve_velocity(F - Bt_ * res.p);
            r = B_ * res.u - G;
            remove_mean(r);
        }
    }
    res.iterations = it;
    const double rn = r.norm();
    res.schur_residual = r0 > 0.0 ? rn / r0 : 0.0;
    if (rn > target() * (1.0 + 1e-6)) {
        throw SolverError("Schur complement iteration did not converge (relative residual " +
                              std::to_string(res.schur_residual) + ")",
                          res.schur_residual, it);
    }

    const double pm = weights_.dot(res.p) / weights_.sum();
    res.p.array() -= pm;
    res.pressure_shift = pm;
    const double denom = scale > 0.0 ? scale : 1.0;
    res.momentum_residual = (K_ * res.u + Bt_ * res.p - F).norm() / denom;
    Vec div = B_ * res.u - G;
    res.divergence_residual = div.norm() / denom;
    return res;
}

}  // namespace homstokes
