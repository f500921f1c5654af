#ifndef VK_PRIMITIVE_HPP
#define VK_PRIMITIVE_HPP

#include "vk/fields.hpp"

#include <tuple>

namespace vk {

/** Coefficients of the rank-one expansion
 *   D = c1sq e1xe1 + c2sq e2xe2 + c3sq eta3 x eta3,
 * eta3 = (e1 + sign*e2)/sqrt(2); valid for D with nonnegative coefficients. */
struct PrimitiveDecomp {
    Field c1sq, c2sq, c3sq;
    int axis_sign = 1; ///< +1 for (e1+e2)/sqrt2, -1 for (e1-e2)/sqrt2
};

/** Exact pointwise coefficients c1sq = D11-|D12|, c2sq = D22-|D12|,
 * c3sq = 2|D12|; requires node-wise nonnegative c1sq, c2sq and a uniform
 * sign of D12 (reflected axis when D12 < 0). */
PrimitiveDecomp primitive_coeffs(const Field& D);

struct FirstStepReport {
    bool success = false;
    double target = 0;       ///< requested deficit sup-norm
    double initial = 0;      ///< deficit sup-norm at entry
    double achieved = 0;     ///< measured deficit sup-norm of the output
    double lambda_base = 0;  ///< base frequency of the accepted pass
    int retries = 0;
    double v_change = 0, w_change = 0; ///< sup norms of the applied update
};

/** One corrective pass of rank-one corrugation steps (one per primitive
 * direction) with amplitudes from a (1-rho)-shrunk deficit, rho = 0.1,
 * retrying with doubled base frequency until the measured remaining deficit
 * sup-norm is <= eps or the Nyquist cap is reached (best pass returned).
 * Mixed-sign D12 is split by smooth nonnegative parts mollified at scale 4h
 * (shrinking the grid margin by 4 cells). Requires deficit > 0 node-wise
 * (smallest eigenvalue). zeta is the intra-pass frequency escalation between
 * steps that share a codimension axis; lambda0 overrides the starting base
 * frequency of the retry sweep (0 picks a small fraction of the alias cap). */
std::tuple<Field, Field, FirstStepReport>
first_step(const Field& v, const Field& w, const Field& A, double eps, double zeta = 6.0,
           double lambda0 = 0.0);

} // namespace vk

#endif
