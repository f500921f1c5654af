#include "vk/conformal.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vk {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

// Interior sine transform matrix: S(k,i) = sin(pi*(k+1)*(i+1)/(n-1)), size (n-2)x(n-2).
MatrixXd sine_interior(int n) {
    int m = n - 2;
    MatrixXd S(m, m);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            S(k, i) = std::sin(pi * (k + 1) * (i + 1) / (n - 1));
    return S;
}

// Evaluation bases on a node window [off, off+n_eval) of a padded axis with
// n_pad nodes: sin / cos (pi*(k+1)*i/(n_pad-1)) for k = 0..n_pad-3.
MatrixXd eval_basis(int n_pad, int n_eval, int off, bool cosine) {
    int m = n_pad - 2;
    MatrixXd B(n_eval, m);
    for (int i = 0; i < n_eval; ++i)
        for (int k = 0; k < m; ++k) {
            double t = pi * (k + 1) * (i + off) / (n_pad - 1);
            B(i, k) = cosine ? std::cos(t) : std::sin(t);
        }
    return B;
}

MatrixXd plane_as_matrix(const Field& f, int c) {
    return Eigen::Map<const MatrixXd>(f.comp(c), f.grid.nx, f.grid.ny);
}

void matrix_to_plane(const MatrixXd& M, Field& f, int c) {
    Eigen::Map<MatrixXd>(f.comp(c), f.grid.nx, f.grid.ny) = M;
}

int reflect_index(int i, int n) {
    while (i < 0 || i > n - 1) {
        if (i < 0) i = -i;
        if (i > n - 1) i = 2 * (n - 1) - i;
    }
    return i;
}

} // namespace

Field solve_dirichlet(const Field& rhs) {
    if (rhs.comps() != 1) throw std::invalid_argument("solve_dirichlet: scalar rhs expected");
    const Grid2& g = rhs.grid;
    int nx = g.nx, ny = g.ny, mx = nx - 2, my = ny - 2;
    double h2 = g.h * g.h;
    MatrixXd V = plane_as_matrix(rhs, 0).block(1, 1, mx, my);
    MatrixXd Sx = sine_interior(nx), Sy = sine_interior(ny);
    MatrixXd C = Sx * V * Sy * (4.0 / ((nx - 1.0) * (ny - 1.0)));
    for (int k = 0; k < mx; ++k) {
        double mux = (2 * std::cos(pi * (k + 1) / (nx - 1)) - 2) / h2;
        for (int m = 0; m < my; ++m) {
            double muy = (2 * std::cos(pi * (m + 1) / (ny - 1)) - 2) / h2;
            C(k, m) /= (mux + muy);
        }
    }
    Field psi(g, 1, 1);
    MatrixXd out = MatrixXd::Zero(nx, ny);
    out.block(1, 1, mx, my) = Sx * C * Sy;
    matrix_to_plane(out, psi, 0);
    return psi;
}

DecompResult decompose(const Field& D) {
    if (D.comps() != 4) throw std::invalid_argument("decompose: symmetric 2x2 field expected");
    const Grid2& g = D.grid;
    const int pad = 8;
    int nx = g.nx, ny = g.ny;
    int nxp = nx + 2 * pad, nyp = ny + 2 * pad;
    int mx = nxp - 2, my = nyp - 2;
    double Lx = (nxp - 1) * g.h, Ly = (nyp - 1) * g.h;

    // Reflection-padded right hand sides D11-D22 and 2*D12.
    MatrixXd r1(nxp, nyp), r2(nxp, nyp);
    const double *d11 = D.comp(0), *d12 = D.comp(1), *d22 = D.comp(3);
    for (int jp = 0; jp < nyp; ++jp) {
        int j = reflect_index(jp - pad, ny);
        for (int ip = 0; ip < nxp; ++ip) {
            int i = reflect_index(ip - pad, nx);
            long idx = static_cast<long>(j) * nx + i;
            r1(ip, jp) = d11[idx] - d22[idx];
            r2(ip, jp) = 2 * d12[idx];
        }
    }

    MatrixXd Sx = sine_interior(nxp), Sy = sine_interior(nyp);
    double norm = 4.0 / ((nxp - 1.0) * (nyp - 1.0));
    MatrixXd P1 = Sx * r1.block(1, 1, mx, my) * Sy * norm;
    MatrixXd P2 = Sx * r2.block(1, 1, mx, my) * Sy * norm;

    VectorXd kx(mx), ky(my);
    for (int k = 0; k < mx; ++k) kx(k) = pi * (k + 1) / Lx;
    for (int m = 0; m < my; ++m) ky(m) = pi * (m + 1) / Ly;
    // Laplace(sin sin) = -(kx^2+ky^2) sin sin.
    for (int k = 0; k < mx; ++k)
        for (int m = 0; m < my; ++m) {
            double lam = -(kx(k) * kx(k) + ky(m) * ky(m));
            P1(k, m) /= lam;
            P2(k, m) /= lam;
        }

    MatrixXd BxS = eval_basis(nxp, nx, pad, false), BxC = eval_basis(nxp, nx, pad, true);
    MatrixXd ByS = eval_basis(nyp, ny, pad, false), ByC = eval_basis(nyp, ny, pad, true);

    auto eval = [&](const MatrixXd& P, auto fx, auto fy, const MatrixXd& Bx, const MatrixXd& By) {
        MatrixXd T = P;
        for (int k = 0; k < mx; ++k)
            for (int m = 0; m < my; ++m) T(k, m) *= fx(kx(k)) * fy(ky(m));
        return MatrixXd(Bx * T * By.transpose());
    };
    auto one = [](double) { return 1.0; };
    auto lin = [](double k) { return k; };
    auto neg2 = [](double k) { return -k * k; };

    MatrixXd dx1 = eval(P1, lin, one, BxC, ByS);
    MatrixXd dy1 = eval(P1, one, lin, BxS, ByC);
    MatrixXd dxx1 = eval(P1, neg2, one, BxS, ByS);
    MatrixXd dyy1 = eval(P1, one, neg2, BxS, ByS);
    MatrixXd dx2 = eval(P2, lin, one, BxC, ByS);
    MatrixXd dy2 = eval(P2, one, lin, BxS, ByC);
    MatrixXd dxx2 = eval(P2, neg2, one, BxS, ByS);
    MatrixXd dyy2 = eval(P2, one, neg2, BxS, ByS);
    MatrixXd dxy2 = eval(P2, lin, lin, BxC, ByC);

    DecompResult res;
    res.psi_bar = Field(g, 2, 1);
    matrix_to_plane(-dx1 - dy2, res.psi_bar, 0);
    matrix_to_plane(dy1 - dx2, res.psi_bar, 1);

    res.a_bar = Field(g, 1, 1);
    MatrixXd abar = plane_as_matrix(D, 0) - dxx1 - dxy2;
    matrix_to_plane(abar, res.a_bar, 0);

    res.sym_grad_spec = Field(g, 2, 2);
    MatrixXd s11 = -dxx1 - dxy2;
    MatrixXd s22 = dyy1 - dxy2;
    MatrixXd s12 = -0.5 * (dxx2 + dyy2);
    matrix_to_plane(s11, res.sym_grad_spec, 0);
    matrix_to_plane(s12, res.sym_grad_spec, 1);
    matrix_to_plane(s12, res.sym_grad_spec, 2);
    matrix_to_plane(s22, res.sym_grad_spec, 3);

    MatrixXd r11m = plane_as_matrix(D, 0) + s11 - abar;
    MatrixXd r22m = plane_as_matrix(D, 3) + s22 - abar;
    MatrixXd r12m = plane_as_matrix(D, 1) + s12;
    res.residual_norm = std::max({r11m.cwiseAbs().maxCoeff(),
                                  r22m.cwiseAbs().maxCoeff(),
                                  r12m.cwiseAbs().maxCoeff()});
    return res;
}

double estimate_r0(double gamma, int probe_resolution) {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("estimate_r0: gamma outside (0,1)");
    Grid2 g = Grid2::make(0, 1, 0, 1, probe_resolution, probe_resolution, 0);

    // Fixed probe family: smooth bump times e1 x e1, its negation, the
    // trace-free diagonal, and both signs of the off-diagonal pattern.
    Field bump(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double dx = (g.x(ix) - 0.5) / 0.4, dy = (g.y(iy) - 0.5) / 0.4;
            double rho2 = dx * dx + dy * dy;
            bump.at(0, ix, iy) = rho2 < 1 ? std::exp(-1.0 / (1.0 - rho2)) : 0.0;
        }

    struct Pattern { double p11, p12, p22; };
    const Pattern pats[] = {{1, 0, 0}, {-1, 0, 0}, {1, 0, -1}, {0, 1, 0}, {0, -1, 0}};
    double r_cap = 1.0, r_lo = 0.0, r_hi = r_cap;

    std::vector<double> min_abar;
    for (const auto& p : pats) {
        Field P(g, 2, 2);
        for (long i = 0; i < g.nodes(); ++i) {
            double b = bump.comp(0)[i];
            P.comp(0)[i] = p.p11 * b;
            P.comp(1)[i] = p.p12 * b;
            P.comp(2)[i] = p.p12 * b;
            P.comp(3)[i] = p.p22 * b;
        }
        NormReport nr = norms(P, {gamma});
        double scale = nr.c0 + nr.holder_at(gamma);
        P *= 1.0 / scale; // now ||P||_{0,gamma} = 1
        DecompResult d = decompose(P);
        double mn = d.a_bar.data[0];
        for (double v : d.a_bar.data) mn = std::min(mn, v);
        min_abar.push_back(mn); // a_bar(Id2 + r P) = 1 + r * min by linearity
    }

    auto feasible = [&](double r) {
        for (double mn : min_abar)
            if (1.0 + r * mn <= 0.5) return false;
        return true;
    };
    if (feasible(r_cap)) return r_cap;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (r_lo + r_hi);
        (feasible(mid) ? r_lo : r_hi) = mid;
    }
    return r_lo;
}

} // namespace vk
