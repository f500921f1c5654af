#include "vk/conformal.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace vk;

TEST_CASE("dirichlet solver oracles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 129, 129, 0.0);
    Field zero(g, 1, 1);
    CHECK(sup_norm(solve_dirichlet(zero)) <= 1e-14);

    const double pi = 3.14159265358979323846;
    Field rhs(g, 1, 1), ref(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double sx = std::sin(pi * g.x(ix)), sy = std::sin(pi * g.y(iy));
            rhs.at(0, ix, iy) = -2 * pi * pi * sx * sy;
            ref.at(0, ix, iy) = sx * sy;
        }
    Field psi = solve_dirichlet(rhs);
    // continuum eigenfunction vs discrete eigenvalue: error ~ (pi h)^2 / 12
    CHECK(sup_norm(psi - ref) <= 1e-3);
    // the discrete 5-point residual itself is at roundoff
    double res = 0;
    for (int iy = 1; iy < g.ny - 1; ++iy)
        for (int ix = 1; ix < g.nx - 1; ++ix) {
            double lap = (psi.at(0, ix + 1, iy) + psi.at(0, ix - 1, iy) +
                          psi.at(0, ix, iy + 1) + psi.at(0, ix, iy - 1) -
                          4 * psi.at(0, ix, iy)) / (g.h * g.h);
            res = std::max(res, std::abs(lap - rhs.at(0, ix, iy)));
        }
    CHECK(res <= 1e-10 * sup_norm(rhs));

    Field one = Field::constant(g, 1, 1, 1.0);
    Field po = solve_dirichlet(one);
    CHECK(po.at(0, 64, 64) == doctest::Approx(-0.07367).epsilon(0.0015));
}

TEST_CASE("decompose identity oracles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 96, 96, 0.1);
    Field I(g, 2, 2);
    for (long i = 0; i < g.nodes(); ++i) {
        I.comp(0)[i] = 1;
        I.comp(3)[i] = 1;
    }
    DecompResult r = decompose(I);
    CHECK(sup_norm(r.psi_bar) <= 1e-10);
    CHECK(sup_norm(r.a_bar - Field::constant(g, 1, 1, 1.0)) <= 1e-10);
    CHECK(r.residual_norm <= 1e-10);

    Field cI = 0.37 * I;
    DecompResult rc = decompose(cI);
    CHECK(sup_norm(rc.psi_bar) <= 1e-10);
    CHECK(sup_norm(rc.a_bar - Field::constant(g, 1, 1, 0.37)) <= 1e-10);

    Field D(g, 2, 2);
    for (long i = 0; i < g.nodes(); ++i) {
        D.comp(0)[i] = 0.8;
        D.comp(3)[i] = 0.3;
    }
    CHECK(decompose(D).residual_norm <= 1e-8);
}

TEST_CASE("decompose identity holds for randomized smooth fields") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 96, 96, 0.05);
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        Field D = vkt::random_sym2(g, rng, 5.0, 1.0);
        DecompResult r = decompose(D);
        CHECK(r.residual_norm <= 1e-6 * (1 + sup_norm(D)));
    }
}

TEST_CASE("decompose is linear") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 80, 80, 0.05);
    std::mt19937_64 rng(9);
    Field D1 = vkt::random_sym2(g, rng, 4.0), D2 = vkt::random_sym2(g, rng, 4.0);
    DecompResult r1 = decompose(D1), r2 = decompose(D2);
    DecompResult rs = decompose(2.0 * D1 + (-1.0) * D2);
    CHECK(sup_norm(rs.psi_bar - (2.0 * r1.psi_bar + (-1.0) * r2.psi_bar)) <=
          1e-8 * (1 + sup_norm(D1) + sup_norm(D2)));
    CHECK(sup_norm(rs.a_bar - (2.0 * r1.a_bar + (-1.0) * r2.a_bar)) <=
          1e-8 * (1 + sup_norm(D1) + sup_norm(D2)));
}

TEST_CASE("corrector gradient stays bounded as oscillation doubles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 160, 160, 0.0);
    auto ratio_at = [&](double freq) {
        Field D(g, 2, 2);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                double b = 0.3 * std::sin(freq * g.x(ix)) * std::sin(freq * g.y(iy));
                D.at(0, ix, iy) = b;
                D.at(3, ix, iy) = -b;
            }
        DecompResult r = decompose(D);
        return norms(r.psi_bar).c1 / norms(D).c0;
    };
    double r1 = ratio_at(5), r2 = ratio_at(10), r3 = ratio_at(20);
    CHECK(r2 <= 3 * r1 + 1e-9);
    CHECK(r3 <= 3 * r2 + 1e-9);
}

TEST_CASE("conformal smallness radius estimate") {
    double r0 = estimate_r0(0.1, 48);
    CHECK(r0 > 0);
    CHECK(r0 <= 1.0);
}
