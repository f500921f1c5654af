#ifndef VK_MOLLIFY_HPP
#define VK_MOLLIFY_HPP

#include "vk/fields.hpp"

namespace vk {

/** Tensor-product nonnegative smoothing kernel at scale l: the 2D weight is
 * axis(dx)*axis(dy) with a 1D bump profile, sampled on a (2r+1)^2 cell
 * stencil and normalized to unit discrete mass. The product form keeps the
 * convolution separable (two 1D passes). */
struct Mollifier {
    double l = 0;
    int radius_cells = 0;
    std::vector<double> axis; ///< 1D weights, size 2r+1, sum == 1

    double weight(int dx, int dy) const {
        return axis[static_cast<size_t>(dx + radius_cells)] *
               axis[static_cast<size_t>(dy + radius_cells)];
    }

    /// 1D bump profile exp(-1/(1-(x/l)^2)) on the grid; requires l >= 2h.
    static Mollifier make(double l, double h);
};

/** Convolution f * phi_l. The result lives on the input grid shrunk by the
 * kernel radius; requires margin >= l. */
Field mollify(const Field& f, double l);

/** (f g)*phi_l - (f*phi_l)(g*phi_l), componentwise product. */
Field commutator(const Field& f, const Field& g, double l);

} // namespace vk

#endif
