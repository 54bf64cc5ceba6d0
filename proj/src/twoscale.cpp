#include "homstokes/twoscale.hpp"

#include <algorithm>
#include <cmath>

#include "homstokes/errors.hpp"

namespace homstokes {

std::string_view extension_name(ExtensionMode m) {
    return m == ExtensionMode::Analytic ? "analytic" : "reflection";
}

ExtensionMode parse_extension(std::string_view name) {
    if (name == "analytic") return ExtensionMode::Analytic;
    if (name == "reflection") return ExtensionMode::Reflection;
    throw ValidationError("unknown extension mode '" + std::string(name) + "'");
}

namespace {

int steps_covering(double len, double h) { return static_cast<int>(std::ceil(len / h - 1e-9)); }

}  // namespace

ExtendedField extend(const DomainField& u0, double pad, ExtensionMode mode, const std::optional<ExactSolution>& exact) {
    const DomainGrid& g = u0.grid;
    const int M = g.M;
    const double h = g.h();
    if (!(pad > 0.0)) throw PreconditionError("extension pad must be positive", pad);
    const int pn = steps_covering(pad, h);
    if (mode == ExtensionMode::Reflection && pn > M) throw PreconditionError("reflection pad exceeds the domain", pad);
    if (mode == ExtensionMode::Analytic && !exact) throw PreconditionError("analytic extension needs an exact solution");

    GridBox box{-pn * h, -pn * h, h, M + 1 + 2 * pn, M + 1 + 2 * pn};
    ExtendedField out(box, 2, mode);
    const int n = g.nside();
    for (int j = 0; j < box.ny; ++j) {
        for (int i = 0; i < box.nx; ++i) {
            int gi = i - pn, gj = j - pn;
            const bool inside = gi >= 0 && gi <= M && gj >= 0 && gj <= M;
            if (!inside && mode == ExtensionMode::Analytic) {
                const auto v = exact->eval(box.node(i, j));
                out.at(0, i, j) = v.u[0];
                out.at(1, i, j) = v.u[1];
                continue;
            }
            if (gi < 0) gi = -gi;
            if (gi > M) gi = 2 * M - gi;
            if (gj < 0) gj = -gj;
            if (gj > M) gj = 2 * M - gj;
            out.at(0, i, j) = u0.u1[gj * n + gi];
            out.at(1, i, j) = u0.u2[gj * n + gi];
        }
    }
    return out;
}

ExtendedField gradient(const ExtendedField& f) {
    const GridBox& b = f.box;
    if (b.nx < 3 || b.ny < 3) throw PreconditionError("box too small for differences");
    GridBox o{b.x0 + b.h, b.y0 + b.h, b.h, b.nx - 2, b.ny - 2};
    ExtendedField out(o, 2 * f.ncomp, f.mode);
    const double s = 0.5 / b.h;
    for (int be = 0; be < f.ncomp; ++be)
        for (int j = 0; j < o.ny; ++j)
            for (int i = 0; i < o.nx; ++i) {
                out.at(jb(0, be), i, j) = s * (f.at(be, i + 2, j + 1) - f.at(be, i, j + 1));
                out.at(jb(1, be), i, j) = s * (f.at(be, i + 1, j + 2) - f.at(be, i + 1, j));
            }
    return out;
}

ExtendedField hessian(const ExtendedField& f) {
    const GridBox& b = f.box;
    if (b.nx < 3 || b.ny < 3) throw PreconditionError("box too small for differences");
    GridBox o{b.x0 + b.h, b.y0 + b.h, b.h, b.nx - 2, b.ny - 2};
    ExtendedField out(o, 4 * f.ncomp, f.mode);
    const double s = 1.0 / (b.h * b.h);
    for (int be = 0; be < f.ncomp; ++be)
        for (int j = 0; j < o.ny; ++j)
            for (int i = 0; i < o.nx; ++i) {
                const int I = i + 1, J = j + 1;
                const double c = f.at(be, I, J);
                const double dxx = s * (f.at(be, I + 1, J) - 2 * c + f.at(be, I - 1, J));
                const double dyy = s * (f.at(be, I, J + 1) - 2 * c + f.at(be, I, J - 1));
                const double dxy = 0.25 * s *
                                   (f.at(be, I + 1, J + 1) - f.at(be, I + 1, J - 1) - f.at(be, I - 1, J + 1) +
                                    f.at(be, I - 1, J - 1));
                out.at((be * 2 + 0) * 2 + 0, i, j) = dxx;
                out.at((be * 2 + 0) * 2 + 1, i, j) = dxy;
                out.at((be * 2 + 1) * 2 + 0, i, j) = dxy;
                out.at((be * 2 + 1) * 2 + 1, i, j) = dyy;
            }
    return out;
}

ExtendedField steklov_smooth(const ExtendedField& f, double eps) {
    if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
    const GridBox& b = f.box;
    const double h = b.h;
    const int shift = steps_covering(eps, h);
    if (shift >= b.nx || shift >= b.ny) throw PreconditionError("insufficient pad for Steklov smoothing", eps);

    // averaging stencil relative to the output node, shared by every node
    const int m = std::max(1, steps_covering(2.0 * eps, h));
    std::vector<std::pair<int, double>> stencil;
    for (int k = 0; k < m; ++k) {
        const double t = (-eps + (k + 0.5) * eps / m) / h;  // offset in grid steps, in [-shift, 0]
        int i0 = static_cast<int>(std::floor(t));
        double fr = t - i0;
        if (i0 >= 0) {
            i0 = -1;
            fr = 1.0;
        }
        stencil.emplace_back(i0, (1.0 - fr) / m);
        stencil.emplace_back(i0 + 1, fr / m);
    }

    GridBox mid{b.x0 + shift * h, b.y0, h, b.nx - shift, b.ny};
    ExtendedField tmp(mid, f.ncomp, f.mode);
    for (int c = 0; c < f.ncomp; ++c)
        for (int j = 0; j < mid.ny; ++j)
            for (int i = 0; i < mid.nx; ++i) {
                double s = 0.0;
                for (const auto& [o, w] : stencil) s += w * f.at(c, i + shift + o, j);
                tmp.at(c, i, j) = s;
            }
    GridBox ob{mid.x0, b.y0 + shift * h, h, mid.nx, b.ny - shift};
    ExtendedField out(ob, f.ncomp, f.mode);
    for (int c = 0; c < f.ncomp; ++c)
        for (int j = 0; j < ob.ny; ++j)
            for (int i = 0; i < ob.nx; ++i) {
                double s = 0.0;
                for (const auto& [o, w] : stencil) s += w * tmp.at(c, i, j + shift + o);
                out.at(c, i, j) = s;
            }
    return out;
}

double sample_periodic(const PeriodicField& f, int comp, Vec2 y) {
    const int n = f.n;
    const double u = y.x * n, v = y.y * n;
    const double fu = std::floor(u), fv = std::floor(v);
    const double a = u - fu, b = v - fv;
    const auto wrap = [n](double k) {
        long long r = static_cast<long long>(k) % n;
        return static_cast<int>(r < 0 ? r + n : r);
    };
    const int i0 = wrap(fu), j0 = wrap(fv);
    const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
    const double* d = f.comp(comp);
    const double v00 = d[j0 * n + i0], v10 = d[j0 * n + i1];
    const double v01 = d[j1 * n + i0], v11 = d[j1 * n + i1];
    if (a == 0.0 && b == 0.0) return v00;
    return (1 - a) * (1 - b) * v00 + a * (1 - b) * v10 + (1 - a) * b * v01 + a * b * v11;
}

std::vector<double> sample_periodic(const PeriodicField& f, int comp, const DomainGrid& grid, double eps,
                                    bool pressure_nodes) {
    const int side = pressure_nodes ? grid.pside() : grid.nside();
    const double step = (pressure_nodes ? 2.0 : 1.0) * grid.h();
    std::vector<double> out(static_cast<std::size_t>(side) * side);
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) out[j * side + i] = sample_periodic(f, comp, {i * step / eps, j * step / eps});
    return out;
}

std::vector<double> restrict_to_domain(const ExtendedField& f, int comp, const DomainGrid& g) {
    const double h = g.h();
    if (std::abs(f.box.h - h) > 1e-12 * h) throw PreconditionError("field and grid steps differ");
    const int oi = static_cast<int>(std::lround(-f.box.x0 / h));
    const int oj = static_cast<int>(std::lround(-f.box.y0 / h));
    if (oi < 0 || oj < 0 || oi + g.M >= f.box.nx || oj + g.M >= f.box.ny) {
        throw PreconditionError("smoothed field does not cover the domain");
    }
    const int n = g.nside();
    std::vector<double> dst(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) dst[j * n + i] = f.at(comp, i + oi, j + oj);
    return dst;
}

SmoothedGradients smoothed_gradients(const DomainField& u0, double eps, ExtensionMode mode,
                                     const std::optional<ExactSolution>& exact) {
    const DomainGrid& g = u0.grid;
    const double h = g.h();
    const ExtendedField ext = extend(u0, eps + 2.0 * h, mode, exact);
    const ExtendedField sgrad = steklov_smooth(gradient(ext), eps);
    const ExtendedField shess = steklov_smooth(hessian(ext), eps);

    SmoothedGradients out;
    out.epsilon = eps;
    out.mode = mode;
    for (int c = 0; c < 4; ++c) out.grad[c] = restrict_to_domain(sgrad, c, g);
    for (int c = 0; c < 8; ++c) out.hess[c] = restrict_to_domain(shess, c, g);
    return out;
}

namespace {

void check_expansion_inputs(const DomainField& f, const CorrectorSet& c, const SmoothedGradients& sg) {
    if (!(sg.epsilon > 0.0)) throw ValidationError("smoothed gradients carry no epsilon");
    if (sg.grad[0].size() != f.u1.size()) throw ValidationError("smoothed gradients do not match the field grid");
    if (c.primal.chi[0].n == 0) throw ValidationError("empty corrector set");
}

/// eps * sum_{j,beta} chi_j^{alpha beta}(x/eps) S(d_j u^beta) at velocity nodes.
std::array<std::vector<double>, 2> corrector_term(const DomainGrid& g, const CorrectorSet& c,
                                                  const SmoothedGradients& sg) {
    std::array<std::vector<double>, 2> t;
    const std::size_t nn = static_cast<std::size_t>(g.num_nodes());
    for (auto& v : t) v.assign(nn, 0.0);
    for (int j = 0; j < 2; ++j)
        for (int be = 0; be < 2; ++be)
            for (int al = 0; al < 2; ++al) {
                const auto chi = sample_periodic(c.primal.chi[jb(j, be)], al, g, sg.epsilon);
                const auto& s = sg.grad[jb(j, be)];
                for (std::size_t k = 0; k < nn; ++k) t[al][k] += sg.epsilon * chi[k] * s[k];
            }
    return t;
}

}  // namespace

DomainField build_velocity_expansion(const DomainField& u0, const CorrectorSet& c, const SmoothedGradients& sg) {
    check_expansion_inputs(u0, c, sg);
    DomainField v = u0;
    v.warnings.clear();
    const auto t = corrector_term(u0.grid, c, sg);
    for (std::size_t k = 0; k < v.u1.size(); ++k) {
        v.u1[k] += t[0][k];
        v.u2[k] += t[1][k];
    }
    return v;
}

DomainField build_pressure_expansion(const DomainField& p0, const CorrectorSet& c, const SmoothedGradients& sg) {
    check_expansion_inputs(p0, c, sg);
    const DomainGrid& g = p0.grid;
    const int P = g.pside(), n = g.nside();
    std::vector<double> term(static_cast<std::size_t>(P) * P, 0.0);
    for (int j = 0; j < 2; ++j)
        for (int be = 0; be < 2; ++be) {
            const auto pi = sample_periodic(c.primal.pi[jb(j, be)], 0, g, sg.epsilon, true);
            const auto& s = sg.grad[jb(j, be)];
            for (int J = 0; J < P; ++J)
                for (int I = 0; I < P; ++I) term[J * P + I] += pi[J * P + I] * s[(2 * J) * n + 2 * I];
        }
    double mean = 0.0, wsum = 0.0;
    for (int J = 0; J < P; ++J)
        for (int I = 0; I < P; ++I) {
            const double w = (I == 0 || I == P - 1 ? 0.5 : 1.0) * (J == 0 || J == P - 1 ? 0.5 : 1.0);
            mean += w * term[J * P + I];
            wsum += w;
        }
    mean /= wsum;
    DomainField out = p0;
    out.warnings.clear();
    for (std::size_t k = 0; k < term.size(); ++k) out.p[k] += term[k] - mean;
    return out;
}

CutoffPair build_cutoffs(double eps, const DomainGrid& grid, double kappa) {
    const double h = grid.h();
    if (eps < 4.0 * h * (1.0 - 1e-12)) {
        throw PreconditionError("cutoff not resolvable: epsilon < 4h", eps);
    }
    auto smooth = [](double t) {
        t = std::clamp(t, 0.0, 1.0);
        return t * t * (3.0 - 2.0 * t);
    };
    CutoffPair c;
    c.epsilon = eps;
    c.kappa = kappa;
    c.kappa_tilde = kappa;
    const int n = grid.nside();
    c.theta.resize(static_cast<std::size_t>(n) * n);
    c.theta_tilde.resize(c.theta.size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 x = grid.node(i, j);
            const double d = std::min({x.x, 1.0 - x.x, x.y, 1.0 - x.y});
            c.theta[j * n + i] = 1.0 - smooth(d / eps);
            c.theta_tilde[j * n + i] = 1.0 - smooth((d - eps) / eps);
        }
    auto max_grad = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int ip = std::min(i + 1, n - 1), im = std::max(i - 1, 0);
                const int jp = std::min(j + 1, n - 1), jm = std::max(j - 1, 0);
                const double gx = (v[j * n + ip] - v[j * n + im]) / ((ip - im) * h);
                const double gy = (v[jp * n + i] - v[jm * n + i]) / ((jp - jm) * h);
                m = std::max(m, std::hypot(gx, gy));
            }
        return m * eps;
    };
    c.max_grad = max_grad(c.theta);
    c.max_grad_tilde = max_grad(c.theta_tilde);
    return c;
}

DomainField build_truncated_expansion(const DomainField& u0, const CorrectorSet& c, const SmoothedGradients& sg,
                                      const CutoffPair& cut) {
    check_expansion_inputs(u0, c, sg);
    if (cut.theta_tilde.size() != u0.u1.size()) throw ValidationError("cutoff does not match the field grid");
    DomainField v = u0;
    v.warnings.clear();
    const auto t = corrector_term(u0.grid, c, sg);
    for (std::size_t k = 0; k < v.u1.size(); ++k) {
        const double s = 1.0 - cut.theta_tilde[k];
        v.u1[k] += s * t[0][k];
        v.u2[k] += s * t[1][k];
    }
    return v;
}

BoundaryCorrector solve_boundary_corrector(const CoefficientTensor& A, const CorrectorSet& c,
                                           const SmoothedGradients& sg, const DomainGrid& grid, double tol,
                                           const DirichletStokesSolver* solver) {
    if (sg.grad[0].size() != static_cast<std::size_t>(grid.num_nodes())) {
        throw ValidationError("smoothed gradients do not match the grid");
    }
    const double eps = sg.epsilon;
    StokesProblem prob = StokesProblem::zeros(grid);
    prob.A = A;
    prob.epsilon = eps;
    prob.recipe = "boundary-corrector";

    const auto t = corrector_term(grid, c, sg);
    for (int k : grid.boundary_nodes()) {
        prob.f1[k] = t[0][k];
        prob.f2[k] = t[1][k];
    }
    // div w = eps chi_j^{alpha beta}(x/eps) S(d_alpha d_j u^beta), using div chi = 0
    const std::size_t nn = prob.g.size();
    for (int j = 0; j < 2; ++j)
        for (int be = 0; be < 2; ++be)
            for (int al = 0; al < 2; ++al) {
                const auto chi = sample_periodic(c.primal.chi[jb(j, be)], al, grid, eps);
                const auto& s = sg.hess[(be * 2 + j) * 2 + al];
                for (std::size_t k = 0; k < nn; ++k) prob.g[k] += eps * chi[k] * s[k];
            }
    BoundaryCorrector out;
    out.compatibility_shift = -check_compatibility(prob);
    for (double& v : prob.g) v += out.compatibility_shift;

    if (solver) {
        out.field = solver->solve(prob, tol);
    } else {
        out.field = solve_dirichlet_stokes(prob, tol);
    }
    out.f1 = std::move(prob.f1);
    out.f2 = std::move(prob.f2);
    out.g = std::move(prob.g);
    return out;
}

ExtensionBound extension_bound(const ExtendedField& ext, const DomainField& u0) {
    auto h2 = [](auto&& value, int nx, int ny, int ncomp, double h) {
        double s = 0.0;
        const double ih2 = 1.0 / (h * h);
        for (int c = 0; c < ncomp; ++c)
            for (int j = 1; j + 1 < ny; ++j)
                for (int i = 1; i + 1 < nx; ++i) {
                    const double u = value(c, i, j);
                    const double gx = 0.5 * (value(c, i + 1, j) - value(c, i - 1, j)) / h;
                    const double gy = 0.5 * (value(c, i, j + 1) - value(c, i, j - 1)) / h;
                    const double xx = (value(c, i + 1, j) - 2 * u + value(c, i - 1, j)) * ih2;
                    const double yy = (value(c, i, j + 1) - 2 * u + value(c, i, j - 1)) * ih2;
                    const double xy = 0.25 * ih2 *
                                      (value(c, i + 1, j + 1) - value(c, i + 1, j - 1) - value(c, i - 1, j + 1) +
                                       value(c, i - 1, j - 1));
                    s += h * h * (u * u + gx * gx + gy * gy + xx * xx + yy * yy + 2 * xy * xy);
                }
        return std::sqrt(s);
    };
    ExtensionBound b;
    b.extended_h2 = h2([&](int c, int i, int j) { return ext.at(c, i, j); }, ext.box.nx, ext.box.ny, ext.ncomp,
                       ext.box.h);
    const int n = u0.grid.nside();
    b.domain_h2 = h2([&](int c, int i, int j) { return u0.u(c)[j * n + i]; }, n, n, 2, u0.grid.h());
    return b;
}

}  // namespace homstokes
