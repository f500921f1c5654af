#include "vk/mollify.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace vk;

TEST_CASE("kernel mass and evenness") {
    Mollifier m = Mollifier::make(0.1, 0.01);
    double mass = 0;
    for (int dy = -m.radius_cells; dy <= m.radius_cells; ++dy)
        for (int dx = -m.radius_cells; dx <= m.radius_cells; ++dx) {
            double w = m.weight(dx, dy);
            CHECK(w >= 0);
            CHECK(w == m.weight(-dx, -dy));
            mass += w;
        }
    CHECK(std::abs(mass - 1.0) <= 1e-12);
    CHECK(m.radius_cells * 0.01 <= 0.1 + 1e-12);
}

TEST_CASE("mollify oracles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 128, 128, 0.25);
    Field c = Field::constant(g, 1, 1, 2.5);
    Field mc = mollify(c, 0.1);
    CHECK(sup_norm(mc - Field::constant(mc.grid, 1, 1, 2.5)) <= 1e-12);

    Field lin(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) lin.at(0, ix, iy) = g.x(ix);
    Field ml = mollify(lin, 0.1);
    Field ref(ml.grid, 1, 1);
    for (int iy = 0; iy < ml.grid.ny; ++iy)
        for (int ix = 0; ix < ml.grid.nx; ++ix) ref.at(0, ix, iy) = ml.grid.x(ix);
    CHECK(sup_norm(ml - ref) <= 1e-12);

    // ||f - f*phi_l|| ~ l^2 for smooth f
    Field s(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) s.at(0, ix, iy) = std::sin(g.x(ix));
    std::vector<double> ls{0.05, 0.1, 0.2}, errs;
    for (double l : ls) {
        Field m = mollify(s, l);
        errs.push_back(sup_norm(m - s.restrict_to(m.grid)));
    }
    double slope = std::log(errs[2] / errs[0]) / std::log(ls[2] / ls[0]);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("commutator oracles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 128, 128, 0.25);
    Field one = Field::constant(g, 1, 1, 1.0);
    std::mt19937_64 rng(3);
    Field gfun = vkt::random_smooth(g, 1, 1, rng, 4.0);
    CHECK(sup_norm(commutator(one, gfun, 0.1)) <= 1e-10 * (1 + sup_norm(gfun)));

    Field lin(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) lin.at(0, ix, iy) = g.x(ix);
    double l = 0.1;
    Field com = commutator(lin, lin, l);
    double mn = 1e300, mx = -1e300;
    for (double x : com.data) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    CHECK(mx - mn <= 1e-12);            // spatially constant
    CHECK(mn >= 0.0 - 1e-14);           // the kernel's second moment
    CHECK(mx <= l * l + 1e-12);

    Field f(g, 1, 1), h(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            f.at(0, ix, iy) = std::sin(g.x(ix));
            h.at(0, ix, iy) = std::cos(g.x(ix));
        }
    std::vector<double> ls{0.05, 0.1, 0.2}, errs;
    for (double ll : ls) errs.push_back(sup_norm(commutator(f, h, ll)));
    double slope = std::log(errs[2] / errs[0]) / std::log(ls[2] / ls[0]);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("mollification estimates stay uniform as l halves") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 192, 192, 0.25);
    std::mt19937_64 rng(11);
    Field f = vkt::random_smooth(g, 1, 1, rng, 5.0);
    NormReport nf = norms(f);
    double prev_c1 = -1, prev_c2 = -1;
    for (double l : {0.2, 0.1, 0.05}) {
        Field m = mollify(f, l);
        double c1 = sup_norm(fd_gradient(m)) * l / nf.c0;          // (C/l)||f||_0 shape
        double c2 = sup_norm(m - f.restrict_to(m.grid)) / (l * l); // l^2 shape
        if (prev_c1 > 0) {
            CHECK(c1 <= 4 * prev_c1 + 1);
            CHECK(c2 <= 4 * prev_c2 + 1);
        }
        prev_c1 = c1;
        prev_c2 = c2;
    }
}

TEST_CASE("mollify is linear") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 96, 96, 0.2);
    std::mt19937_64 rng(21);
    Field f = vkt::random_smooth(g, 1, 1, rng);
    Field h = vkt::random_smooth(g, 1, 1, rng);
    Field lhs = mollify(2.0 * f + (-3.0) * h, 0.1);
    Field rhs = 2.0 * mollify(f, 0.1) + (-3.0) * mollify(h, 0.1);
    CHECK(sup_norm(lhs - rhs) <= 1e-11 * (1 + sup_norm(f) + sup_norm(h)));
}
