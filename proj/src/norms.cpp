#include "homstokes/norms.hpp"

#include <algorithm>
#include <cmath>

#include "homstokes/errors.hpp"
#include "homstokes/fem.hpp"

namespace homstokes {

namespace {

double trapz_weight(int i, int last) { return (i == 0 || i == last) ? 0.5 : 1.0; }

double l2_squared(const DomainGrid& g, const std::vector<double>& u) {
    const int n = g.nside();
    double s = 0.0;
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) s += trapz_weight(i, g.M) * trapz_weight(j, g.M) * u[j * n + i] * u[j * n + i];
    return s * g.h() * g.h();
}

double semi_squared(const DomainGrid& g, const std::vector<double>& u) {
    const fem::QuadMesh m{g.M, g.h(), false};
    double s = 0.0;
    double gr[4][2];
    for (int ey = 0; ey < g.M; ++ey)
        for (int ex = 0; ex < g.M; ++ex) {
            fem::element_gradient(m, u.data(), ex, ey, gr);
            for (int q = 0; q < 4; ++q) s += gr[q][0] * gr[q][0] + gr[q][1] * gr[q][1];
        }
    return s * 0.25 * g.h() * g.h();
}

/// int over [a,b] x [c,d] (inside element (ex,ey)) of u_h^2, exact by 2-point Gauss.
double element_square_integral(const DomainGrid& g, const std::vector<double>& u, int ex, int ey, double a, double b,
                               double c, double d) {
    if (b <= a || d <= c) return 0.0;
    const int n = g.nside();
    const double h = g.h();
    const double u00 = u[ey * n + ex], u10 = u[ey * n + ex + 1];
    const double u01 = u[(ey + 1) * n + ex], u11 = u[(ey + 1) * n + ex + 1];
    const double r = 0.5 / std::sqrt(3.0);
    double s = 0.0;
    for (double tx : {0.5 - r, 0.5 + r})
        for (double ty : {0.5 - r, 0.5 + r}) {
            const double x = (a + tx * (b - a)) / h - ex;
            const double y = (c + ty * (d - c)) / h - ey;
            const double v = (1 - x) * (1 - y) * u00 + x * (1 - y) * u10 + (1 - x) * y * u01 + x * y * u11;
            s += v * v;
        }
    return 0.25 * s * (b - a) * (d - c);
}

}  // namespace

ExactErrors exact_errors(const DomainField& f, const ExactSolution& exact) {
    const DomainGrid& g = f.grid;
    const int n = g.nside();
    double eu = 0.0;
    for (int j = 0; j <= g.M; ++j)
        for (int i = 0; i <= g.M; ++i) {
            const auto v = exact.eval(g.node(i, j));
            const double d1 = f.u1[j * n + i] - v.u[0], d2 = f.u2[j * n + i] - v.u[1];
            eu += trapz_weight(i, g.M) * trapz_weight(j, g.M) * (d1 * d1 + d2 * d2);
        }
    const int P = g.pside();
    double ep = 0.0;
    for (int j = 0; j < P; ++j)
        for (int i = 0; i < P; ++i) {
            const double d = f.p[j * P + i] - exact.eval(g.pnode(i, j)).p;
            ep += trapz_weight(i, P - 1) * trapz_weight(j, P - 1) * d * d;
        }
    const double h = g.h();
    return {std::sqrt(eu) * h, std::sqrt(ep) * 2.0 * h};
}

double discrete_norm(const DomainGrid& grid, std::span<const std::vector<double>* const> comps, NormKind kind) {
    double l2 = 0.0, semi = 0.0;
    for (const auto* c : comps) {
        if (c->size() != static_cast<std::size_t>(grid.num_nodes())) throw ValidationError("field does not match grid");
        if (kind != NormKind::H1Semi) l2 += l2_squared(grid, *c);
        if (kind != NormKind::L2) semi += semi_squared(grid, *c);
    }
    return std::sqrt(l2 + semi);
}

NormReport velocity_norms(const DomainField& f) {
    NormReport r;
    r.M = f.grid.M;
    const double l2 = l2_squared(f.grid, f.u1) + l2_squared(f.grid, f.u2);
    const double semi = semi_squared(f.grid, f.u1) + semi_squared(f.grid, f.u2);
    r.l2 = std::sqrt(l2);
    r.h1_semi = std::sqrt(semi);
    r.h1 = std::sqrt(l2 + semi);
    return r;
}

double pressure_l2(const DomainField& f) {
    const int P = f.grid.pside();
    double s = 0.0;
    for (int j = 0; j < P; ++j)
        for (int i = 0; i < P; ++i) s += trapz_weight(i, P - 1) * trapz_weight(j, P - 1) * f.p[j * P + i] * f.p[j * P + i];
    const double H = 2.0 * f.grid.h();
    return std::sqrt(s * H * H);
}

DomainField difference(const DomainField& a, const DomainField& b) {
    if (a.grid.M != b.grid.M) throw ValidationError("fields live on different grids");
    DomainField d(a.grid);
    for (std::size_t k = 0; k < d.u1.size(); ++k) {
        d.u1[k] = a.u1[k] - b.u1[k];
        d.u2[k] = a.u2[k] - b.u2[k];
    }
    for (std::size_t k = 0; k < d.p.size(); ++k) d.p[k] = a.p[k] - b.p[k];
    return d;
}

double boundary_layer_integral(const DomainField& f, double r) {
    const DomainGrid& g = f.grid;
    if (r < g.h() * (1.0 - 1e-12)) throw PreconditionError("boundary layer width below the grid spacing", r);
    const double h = g.h();
    double total = 0.0, inner = 0.0;
    for (const auto* u : {&f.u1, &f.u2}) {
        for (int ey = 0; ey < g.M; ++ey)
            for (int ex = 0; ex < g.M; ++ex) {
                const double x0 = ex * h, x1 = x0 + h, y0 = ey * h, y1 = y0 + h;
                total += element_square_integral(g, *u, ex, ey, x0, x1, y0, y1);
                if (r >= 0.5) continue;
                inner += element_square_integral(g, *u, ex, ey, std::max(x0, r), std::min(x1, 1.0 - r),
                                                 std::max(y0, r), std::min(y1, 1.0 - r));
            }
    }
    return total - inner;
}

double boundary_layer_constant(const DomainField& f, double r) {
    const NormReport n = velocity_norms(f);
    if (n.l2 == 0.0 || n.h1 == 0.0) return 0.0;
    return boundary_layer_integral(f, r) / (r * n.h1 * n.l2);
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw ValidationError("rate fit needs at least two points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [e, err] : points) {
        if (!(e > 0.0) || !(err > 0.0) || !std::isfinite(err)) {
            throw ValidationError("rate fit needs positive finite epsilon and error values");
        }
        sx += std::log(e);
        sy += std::log(err);
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [e, err] : points) {
        const double dx = std::log(e) - mx, dy = std::log(err) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ValidationError("rate fit needs distinct epsilon values");
    RateFit f;
    f.count = static_cast<int>(points.size());
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ssres = std::max(0.0, syy - f.slope * sxy);
    f.r2 = syy > 0.0 ? std::clamp(1.0 - ssres / syy, 0.0, 1.0) : 1.0;
    return f;
}

}  // namespace homstokes
