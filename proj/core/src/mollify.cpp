#include "vk/mollify.hpp"

#include <cmath>
#include <stdexcept>

namespace vk {

Mollifier Mollifier::make(double l, double h) {
    if (!(l > 0) || !(l <= 1)) throw std::invalid_argument("mollifier: l must lie in (0,1]");
    if (l < 2 * h - 1e-12) throw std::invalid_argument("mollifier: kernel unresolvable, l < 2h");
    Mollifier m;
    m.l = l;
    m.radius_cells = static_cast<int>(std::floor(l / h + 1e-9));
    int r = m.radius_cells;
    m.axis.assign(static_cast<size_t>(2 * r + 1), 0.0);
    double sum = 0;
    for (int d = -r; d <= r; ++d) {
        double rho2 = static_cast<double>(d) * d * h * h / (l * l);
        if (rho2 < 1.0 - 1e-14) {
            double w = std::exp(-1.0 / (1.0 - rho2));
            m.axis[static_cast<size_t>(d + r)] = w;
            sum += w;
        }
    }
    for (double& w : m.axis) w /= sum;
    return m;
}

Field mollify(const Field& f, double l) {
    Mollifier m = Mollifier::make(l, f.grid.h);
    int r = m.radius_cells;
    if (f.grid.margin_cells < r)
        throw std::invalid_argument("mollify: margin smaller than kernel radius");
    Grid2 sub = f.grid.shrink_cells(r);
    Field out(sub, f.m, f.n);
    const double* w = m.axis.data() + r;
    // Separable passes: horizontal into a (sub.nx x f.grid.ny) scratch, then
    // vertical into the shrunk grid.
    std::vector<double> scratch(static_cast<size_t>(sub.nx) * f.grid.ny);
    for (int c = 0; c < f.comps(); ++c) {
        const double* src = f.comp(c);
#pragma omp parallel for schedule(static)
        for (int iy = 0; iy < f.grid.ny; ++iy)
            for (int ix = 0; ix < sub.nx; ++ix) {
                const double* row = src + static_cast<long>(iy) * f.grid.nx + ix + r;
                double acc = 0;
                for (int d = -r; d <= r; ++d) acc += w[d] * row[d];
                scratch[static_cast<size_t>(iy) * sub.nx + ix] = acc;
            }
        double* dst = out.comp(c);
#pragma omp parallel for schedule(static)
        for (int iy = 0; iy < sub.ny; ++iy)
            for (int ix = 0; ix < sub.nx; ++ix) {
                double acc = 0;
                for (int d = -r; d <= r; ++d)
                    acc += w[d] * scratch[static_cast<size_t>(iy + r + d) * sub.nx + ix];
                dst[static_cast<long>(iy) * sub.nx + ix] = acc;
            }
    }
    return out;
}

Field commutator(const Field& f, const Field& g, double l) {
    if (!f.grid.same_layout(g.grid) || f.m != g.m || f.n != g.n)
        throw std::invalid_argument("commutator: mismatched fields");
    Field prod = f;
    for (size_t i = 0; i < prod.data.size(); ++i) prod.data[i] *= g.data[i];
    Field out = mollify(prod, l);
    Field mf = mollify(f, l), mg = mollify(g, l);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= mf.data[i] * mg.data[i];
    return out;
}

} // namespace vk
