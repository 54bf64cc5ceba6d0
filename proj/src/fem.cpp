#include "homstokes/fem.hpp"

#include <cmath>
#include <vector>

namespace homstokes::fem {

namespace {

double shape(int a, double x, double y) {
    const double lx = (a & 1) ? x : 1.0 - x;
    const double ly = (a & 2) ? y : 1.0 - y;
    return lx * ly;
}

void shape_grad(int a, double x, double y, double g[2]) {
    const double lx = (a & 1) ? x : 1.0 - x;
    const double ly = (a & 2) ? y : 1.0 - y;
    const double dx = (a & 1) ? 1.0 : -1.0;
    const double dy = (a & 2) ? 1.0 : -1.0;
    g[0] = dx * ly;
    g[1] = lx * dy;
}

Tables build_tables() {
    Tables t;
    const double r = 0.5 / std::sqrt(3.0);
    t.gauss = {0.5 - r, 0.5 + r};
    const double w = 0.25;

    for (int q = 0; q < 4; ++q) {
        const double x = t.gauss[q & 1], y = t.gauss[(q >> 1) & 1];
        for (int a = 0; a < 4; ++a) {
            t.phi_q[q][a] = shape(a, x, y);
            shape_grad(a, x, y, t.dphi_q[q][a]);
        }
    }

    for (int q = 0; q < 4; ++q) {
        for (int a = 0; a < 4; ++a) {
            for (int k = 0; k < 2; ++k) t.dphi_int[a][k] += w * t.dphi_q[q][a][k];
            for (int b = 0; b < 4; ++b) {
                t.mass[a][b] += w * t.phi_q[q][a] * t.phi_q[q][b];
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        t.grad[i][j][a][b] += w * t.dphi_q[q][a][i] * t.dphi_q[q][b][j];
            }
        }
    }

    for (int sub = 0; sub < 4; ++sub) {
        const int sx = sub & 1, sy = sub >> 1;
        for (int q = 0; q < 4; ++q) {
            const double x = t.gauss[q & 1], y = t.gauss[(q >> 1) & 1];
            const double s = 0.5 * (sx + x), u = 0.5 * (sy + y);
            for (int c = 0; c < 4; ++c) {
                const double psi = shape(c, s, u);
                for (int b = 0; b < 4; ++b) {
                    t.coupling[sub][c][b] += w * psi * t.phi_q[q][b];
                    for (int k = 0; k < 2; ++k) t.div[sub][c][b][k] += w * psi * t.dphi_q[q][b][k];
                }
            }
        }
    }
    return t;
}

std::array<int, 4> element_vnodes(const QuadMesh& m, int ex, int ey) {
    return {m.vnode(ex, ey), m.vnode(ex + 1, ey), m.vnode(ex, ey + 1), m.vnode(ex + 1, ey + 1)};
}

std::array<int, 4> macro_pnodes(const QuadMesh& m, int ex, int ey) {
    const int px = ex / 2, py = ey / 2;
    return {m.pnode(px, py), m.pnode(px + 1, py), m.pnode(px, py + 1), m.pnode(px + 1, py + 1)};
}

}  // namespace

const Tables& tables() {
    static const Tables t = build_tables();
    return t;
}

SpMat assemble_stiffness(const QuadMesh& m, const ElementCoefficient& coeff) {
    const Tables& t = tables();
    const int nv = m.num_vnodes();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m.n) * m.n * 64);
    for (int ey = 0; ey < m.n; ++ey) {
        for (int ex = 0; ex < m.n; ++ex) {
            const Tensor4 a = coeff(ex, ey);
            const auto nodes = element_vnodes(m, ex, ey);
            for (int al = 0; al < 2; ++al) {
                for (int be = 0; be < 2; ++be) {
                    double blk[2][2];
                    bool any = false;
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j) {
                            blk[i][j] = a(i, j, al, be);
                            any = any || blk[i][j] != 0.0;
                        }
                    if (!any) continue;
                    for (int p = 0; p < 4; ++p) {
                        for (int q = 0; q < 4; ++q) {
                            double v = 0.0;
                            for (int i = 0; i < 2; ++i)
                                for (int j = 0; j < 2; ++j) v += blk[i][j] * t.grad[i][j][p][q];
                            trip.emplace_back(al * nv + nodes[p], be * nv + nodes[q], v);
                        }
                    }
                }
            }
        }
    }
    SpMat k(2 * nv, 2 * nv);
    k.setFromTriplets(trip.begin(), trip.end());
    k.prune(0.0);
    return k;
}

SpMat assemble_divergence(const QuadMesh& m) {
    const Tables& t = tables();
    const int nv = m.num_vnodes();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m.n) * m.n * 32);
    for (int ey = 0; ey < m.n; ++ey) {
        for (int ex = 0; ex < m.n; ++ex) {
            const int sub = (ex & 1) + 2 * (ey & 1);
            const auto vn = element_vnodes(m, ex, ey);
            const auto pn = macro_pnodes(m, ex, ey);
            for (int c = 0; c < 4; ++c)
                for (int b = 0; b < 4; ++b)
                    for (int be = 0; be < 2; ++be)
                        trip.emplace_back(pn[c], be * nv + vn[b], -m.h * t.div[sub][c][b][be]);
        }
    }
    SpMat b(m.num_pnodes(), 2 * nv);
    b.setFromTriplets(trip.begin(), trip.end());
    return b;
}

SpMat assemble_velocity_mass(const QuadMesh& m) {
    const Tables& t = tables();
    std::vector<Eigen::Triplet<double>> trip;
    const double s = m.h * m.h;
    for (int ey = 0; ey < m.n; ++ey)
        for (int ex = 0; ex < m.n; ++ex) {
            const auto vn = element_vnodes(m, ex, ey);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) trip.emplace_back(vn[a], vn[b], s * t.mass[a][b]);
        }
    SpMat mm(m.num_vnodes(), m.num_vnodes());
    mm.setFromTriplets(trip.begin(), trip.end());
    return mm;
}

SpMat assemble_pressure_mass(const QuadMesh& m) {
    const Tables& t = tables();
    std::vector<Eigen::Triplet<double>> trip;
    const double s = 4.0 * m.h * m.h;
    for (int ey = 0; ey < m.n; ey += 2)
        for (int ex = 0; ex < m.n; ex += 2) {
            const auto pn = macro_pnodes(m, ex, ey);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) trip.emplace_back(pn[a], pn[b], s * t.mass[a][b]);
        }
    SpMat mm(m.num_pnodes(), m.num_pnodes());
    mm.setFromTriplets(trip.begin(), trip.end());
    return mm;
}

SpMat assemble_coupling_mass(const QuadMesh& m) {
    const Tables& t = tables();
    std::vector<Eigen::Triplet<double>> trip;
    const double s = m.h * m.h;
    for (int ey = 0; ey < m.n; ++ey)
        for (int ex = 0; ex < m.n; ++ex) {
            const int sub = (ex & 1) + 2 * (ey & 1);
            const auto vn = element_vnodes(m, ex, ey);
            const auto pn = macro_pnodes(m, ex, ey);
            for (int c = 0; c < 4; ++c)
                for (int b = 0; b < 4; ++b) trip.emplace_back(pn[c], vn[b], s * t.coupling[sub][c][b]);
        }
    SpMat mm(m.num_pnodes(), m.num_vnodes());
    mm.setFromTriplets(trip.begin(), trip.end());
    return mm;
}

Vec stress_load(const QuadMesh& m, const ElementStress& sigma) {
    const Tables& t = tables();
    const int nv = m.num_vnodes();
    Vec f = Vec::Zero(2 * nv);
    for (int ey = 0; ey < m.n; ++ey)
        for (int ex = 0; ex < m.n; ++ex) {
            const Mat2 s = sigma(ex, ey);
            const auto vn = element_vnodes(m, ex, ey);
            for (int a = 0; a < 4; ++a)
                for (int al = 0; al < 2; ++al) {
                    double v = 0.0;
                    for (int i = 0; i < 2; ++i) v += s[i * 2 + al] * t.dphi_int[a][i];
                    f[al * nv + vn[a]] -= m.h * v;
                }
        }
    return f;
}

void element_gradient(const QuadMesh& m, const double* u, int ex, int ey, double out[4][2]) {
    const Tables& t = tables();
    const auto vn = element_vnodes(m, ex, ey);
    for (int q = 0; q < 4; ++q) {
        double g0 = 0.0, g1 = 0.0;
        for (int a = 0; a < 4; ++a) {
            g0 += u[vn[a]] * t.dphi_q[q][a][0];
            g1 += u[vn[a]] * t.dphi_q[q][a][1];
        }
        out[q][0] = g0 / m.h;
        out[q][1] = g1 / m.h;
    }
}

DofSplit split_dofs(int full_size, const std::vector<char>& is_fixed) {
    DofSplit s;
    s.free_of.assign(full_size, -1);
    for (int k = 0; k < full_size; ++k) {
        if (is_fixed[k]) {
            s.fixed.push_back(k);
        } else {
            s.free_of[k] = static_cast<int>(s.free.size());
            s.free.push_back(k);
        }
    }
    auto selector = [full_size](const std::vector<int>& idx) {
        SpMat p(static_cast<int>(idx.size()), full_size);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) trip.emplace_back(static_cast<int>(r), idx[r], 1.0);
        p.setFromTriplets(trip.begin(), trip.end());
        return p;
    };
    s.select_free = selector(s.free);
    s.select_fixed = selector(s.fixed);
    return s;
}

}  // namespace homstokes::fem
