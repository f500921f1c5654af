#include "vk/step.hpp"

#include <cmath>
#include <stdexcept>

namespace vk {

void StepSpec::validate(const Grid2& g) const {
    if (!a.grid.same_layout(g) || a.comps() != 1)
        throw std::invalid_argument("step: amplitude must be a scalar field on the shared grid");
    double ne = std::hypot(eta[0], eta[1]);
    if (std::abs(ne - 1.0) > 1e-12) throw std::invalid_argument("step: eta must be a unit vector");
    double nE = 0;
    for (double e : E) nE += e * e;
    if (std::abs(std::sqrt(nE) - 1.0) > 1e-12) throw std::invalid_argument("step: E must be a unit vector");
    if (!(lambda > 0) || lambda * g.h > 0.25 + 1e-12)
        throw std::invalid_argument("step: frequency violates the Nyquist guard lambda*h <= 0.25");
    for (double x : a.data)
        if (x < -1e-12) throw std::invalid_argument("step: amplitude must be nonnegative");
}

std::pair<Field, Field> apply_step(const Field& v, const Field& w, const StepSpec& s) {
    const Grid2& g = v.grid;
    if (!w.grid.same_layout(g) || w.comps() != 2)
        throw std::invalid_argument("step: w must be an R^2 field on the shared grid");
    if (static_cast<int>(s.E.size()) != v.comps())
        throw std::invalid_argument("step: codimension axis size differs from target dimension");
    s.validate(g);

    // grad <v, E>
    Field vE(g, 1, 1);
    for (int c = 0; c < v.comps(); ++c)
        if (s.E[c] != 0)
            for (long i = 0; i < g.nodes(); ++i) vE.comp(0)[i] += s.E[c] * v.comp(c)[i];
    Field gvE = fd_gradient(vE);
    Field ga = fd_gradient(s.a);

    Field vt = v, wt = w;
    double la = s.lambda;
    const double* a = s.a.comp(0);
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            long i = static_cast<long>(iy) * g.nx + ix;
            double t = la * (g.x(ix) * s.eta[0] + g.y(iy) * s.eta[1]);
            double G = profile_gamma(t), Gb = profile_gamma_bar(t), Gbd = profile_gamma_bar_dot(t);
            for (int c = 0; c < vt.comps(); ++c)
                if (s.E[c] != 0) vt.comp(c)[i] += (a[i] / la) * G * s.E[c];
            for (int c = 0; c < 2; ++c)
                wt.comp(c)[i] += -(a[i] / la) * G * gvE.comp(c)[i]
                                 - (a[i] / (la * la)) * Gb * ga.comp(c)[i]
                                 + (a[i] * a[i] / la) * Gbd * s.eta[c];
        }
    return {std::move(vt), std::move(wt)};
}

Field step_residual(const Field& v, const Field& w,
                    const Field& vt, const Field& wt, const StepSpec& s) {
    if (!vt.grid.same_layout(v.grid) || !wt.grid.same_layout(w.grid))
        throw std::invalid_argument("step_residual: mismatched fields");
    Field r = vk_metric(vt, wt);
    r -= vk_metric(v, w);
    const double* a = s.a.comp(0);
    const double ee[4] = {s.eta[0] * s.eta[0], s.eta[0] * s.eta[1],
                          s.eta[1] * s.eta[0], s.eta[1] * s.eta[1]};
    long N = v.grid.nodes();
    for (int c = 0; c < 4; ++c) {
        double* p = r.comp(c);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < N; ++i) p[i] -= a[i] * a[i] * ee[c];
    }
    return r;
}

} // namespace vk
