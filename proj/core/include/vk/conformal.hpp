#ifndef VK_CONFORMAL_HPP
#define VK_CONFORMAL_HPP

#include "vk/fields.hpp"

namespace vk {

/** Result of rewriting a symmetric field D as a_bar*Id2 - sym_grad(psi_bar):
 * D + sym_grad(psi_bar) = a_bar * Id2 node-wise. */
struct DecompResult {
    Field psi_bar;       ///< R^2 corrector field
    Field a_bar;         ///< scalar conformal factor
    Field sym_grad_spec; ///< sym gradient of psi_bar, spectral convention (2x2)
    double residual_norm = 0; ///< sup |D + sym_grad_spec - a_bar*Id2|
};

/** Zero-boundary Poisson solve for the discrete 5-point Laplacian on the
 * field's full rectangle, by sine-spectral diagonalization. The discrete
 * residual is at the level of roundoff (<= 1e-10 * ||rhs||_0). */
Field solve_dirichlet(const Field& rhs);

/** Conformal rewrite of a symmetric 2x2 field via two Poisson solves for
 * psi1 (rhs D11-D22) and psi2 (rhs 2*D12):
 *   psi_bar = (-d1 psi1 - d2 psi2, d2 psi1 - d1 psi2),
 *   a_bar   = D11 + d1 psi_bar^1.
 * Derivatives of psi1, psi2 are evaluated spectrally (band-limited), and the
 * solve happens on an internally reflection-padded rectangle so that the
 * identity holds to machine precision at every node of the input grid. */
DecompResult decompose(const Field& D);

/** Empirical lower estimate, by bisection over a fixed probe family P with
 * ||P||_{0,gamma} = 1, of the largest r such that min a_bar(Id2 + r P) > 1/2.
 * Conservative by construction; capped at 1. */
double estimate_r0(double gamma, int probe_resolution = 96);

} // namespace vk

#endif
