#ifndef VK_STEP_HPP
#define VK_STEP_HPP

#include "vk/fields.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace vk {

/// Oscillation profiles shared by the step construction and its tests.
inline double profile_gamma(double t) { return 2.0 * std::sin(t); }
inline double profile_gamma_bar(double t) { return -0.5 * std::cos(2.0 * t); }
inline double profile_gamma_bar_dot(double t) { return -0.5 * std::sin(2.0 * t); }

/// Largest frequency the fixed-order stencils resolve without aliasing.
inline double nyquist_cap(double h) { return 0.25 / h; }

/** One oscillatory perturbation: amplitude field a >= 0, planar direction
 * eta, codimension axis E in R^k, frequency lambda with lambda*h <= 0.25. */
struct StepSpec {
    Field a; ///< scalar amplitude
    std::array<double, 2> eta{1, 0};
    std::vector<double> E{1};
    double lambda = 1;

    void validate(const Grid2& g) const;
};

/** Corrugation step:
 *   v~ = v + (1/lambda) a G(lambda t) E,
 *   w~ = w - (1/lambda) a G(lambda t) grad<v,E>
 *          - (1/lambda^2) a Gbar(lambda t) grad a
 *          + (1/lambda) a^2 Gbardot(lambda t) eta,
 * with t = <x, eta>, G = profile_gamma etc. Returns (v~, w~). */
std::pair<Field, Field> apply_step(const Field& v, const Field& w, const StepSpec& s);

/** Measured left-hand side of the step identity:
 * (metric of (v~,w~)) - (metric of (v,w)) - a^2 eta x eta, by finite
 * differences; to be compared against the analytic error terms. */
Field step_residual(const Field& v, const Field& w,
                    const Field& vt, const Field& wt, const StepSpec& s);

} // namespace vk

#endif
