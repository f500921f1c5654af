#ifndef VK_TEST_HELPERS_HPP
#define VK_TEST_HELPERS_HPP

#include "vk/fields.hpp"
#include "vk/step.hpp"

#include <cmath>
#include <random>

namespace vkt {

/// Random band-limited trigonometric field: three plane waves per component.
inline vk::Field random_smooth(const vk::Grid2& g, int m, int n, std::mt19937_64& rng,
                               double freq_max = 6.0, double amp = 1.0) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    vk::Field f(g, m, n);
    for (int c = 0; c < m * n; ++c) {
        double k1[3], k2[3], ph[3], cc[3];
        for (int t = 0; t < 3; ++t) {
            k1[t] = freq_max * U(rng);
            k2[t] = freq_max * U(rng);
            ph[t] = 3.0 * U(rng);
            cc[t] = amp * U(rng);
        }
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                double x = g.x(ix), y = g.y(iy), s = 0;
                for (int t = 0; t < 3; ++t) s += cc[t] * std::sin(k1[t] * x + k2[t] * y + ph[t]);
                f.at(c, ix, iy) = s;
            }
    }
    return f;
}

/// Random smooth nonnegative amplitude: |random_smooth| shape via offset.
inline vk::Field random_amplitude(const vk::Grid2& g, std::mt19937_64& rng,
                                  double freq_max = 4.0, double amp = 0.5) {
    vk::Field a = random_smooth(g, 1, 1, rng, freq_max, amp / 4.0);
    double mn = 0;
    for (double x : a.data) mn = std::min(mn, x);
    for (double& x : a.data) x += amp / 2.0 - mn;
    return a;
}

/// Random symmetric 2x2 field with symmetric off-diagonal entries.
inline vk::Field random_sym2(const vk::Grid2& g, std::mt19937_64& rng,
                             double freq_max = 6.0, double amp = 1.0) {
    vk::Field D = random_smooth(g, 2, 2, rng, freq_max, amp);
    long N = g.nodes();
    for (long i = 0; i < N; ++i) {
        double s = 0.5 * (D.comp(1)[i] + D.comp(2)[i]);
        D.comp(1)[i] = s;
        D.comp(2)[i] = s;
    }
    return D;
}

/// Analytic error side of the corrugation-step identity, with the smooth
/// inputs' derivatives taken by the shared FD stencils:
///   -(a/l) G hess<v,E> + (1/l^2)(G^2/2 - Gbar) grad a x grad a
///   - (a/l^2) Gbar hess a.
inline vk::Field step_error_terms(const vk::Field& v, const vk::StepSpec& s) {
    const vk::Grid2& g = v.grid;
    vk::Field vE(g, 1, 1);
    for (int c = 0; c < v.comps(); ++c)
        if (s.E[c] != 0)
            for (long i = 0; i < g.nodes(); ++i) vE.comp(0)[i] += s.E[c] * v.comp(c)[i];
    vk::Field Hv = vk::fd_hessian(vE);
    vk::Field Ha = vk::fd_hessian(s.a);
    vk::Field Ga = vk::fd_gradient(s.a);
    vk::Field out(g, 2, 2);
    double la = s.lambda;
    const double* a = s.a.comp(0);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            long i = static_cast<long>(iy) * g.nx + ix;
            double t = la * (g.x(ix) * s.eta[0] + g.y(iy) * s.eta[1]);
            double G = vk::profile_gamma(t), Gb = vk::profile_gamma_bar(t);
            double ga[2] = {Ga.comp(0)[i], Ga.comp(1)[i]};
            for (int r = 0; r < 2; ++r)
                for (int cc = 0; cc < 2; ++cc)
                    out.comp(r * 2 + cc)[i] =
                        -(a[i] / la) * G * Hv.comp(r * 2 + cc)[i] +
                        (0.5 * G * G - Gb) / (la * la) * ga[r] * ga[cc] -
                        (a[i] / (la * la)) * Gb * Ha.comp(r * 2 + cc)[i];
        }
    return out;
}

inline std::array<double, 2> random_unit2(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 6.283185307179586);
    double t = U(rng);
    return {std::cos(t), std::sin(t)};
}

inline std::vector<double> random_unitk(int k, std::mt19937_64& rng) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> e(k);
    double n = 0;
    while (n < 1e-6) {
        n = 0;
        for (double& x : e) {
            x = N01(rng);
            n += x * x;
        }
        n = std::sqrt(n);
    }
    for (double& x : e) x /= n;
    return e;
}

} // namespace vkt

#endif
