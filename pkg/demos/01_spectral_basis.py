"""Fields on (0, 1) in the Dirichlet sine basis.

Walks through the basic vocabulary: projecting plateau-shaped coefficient
functions onto the truncated eigenbasis, operator powers and scale norms,
and multiplication operators with their coercivity data.
"""

import numpy as np

from wavecascade import (
    CoefficientFunction,
    CouplingOperator,
    ModalCoefficients,
    PlateauBump,
    SpectralSpace,
    apply_fractional_power,
    assemble_multiplication_matrix,
    project,
    sobolev_norm,
)

space = SpectralSpace(16)
print(f"space: N = {space.n_modes}, quadrature panels = {space.quadrature_panels}")
print(f"first eigenvalues: {np.round(space.eigenvalues[:4], 3)}  (pi^2 = {np.pi**2:.3f})")

# a smooth plateau bump supported around (0.2, 0.3)
bump = CoefficientFunction((PlateauBump(0.2, 0.3, margin=0.05, height=1.0),), core_region=(0.2, 0.3))
coeffs = project(bump, space)
print("\nprojection of the plateau bump (first six coefficients):")
print(np.round(coeffs.coeffs[:6], 6))
print(f"L2 norm {sobolev_norm(coeffs, 0):.6f}, H1 norm {sobolev_norm(coeffs, 1):.6f}")

# operator powers are diagonal: a round trip is exact
u = ModalCoefficients(np.random.default_rng(1).standard_normal(16), space)
round_trip = apply_fractional_power(apply_fractional_power(u, 1.0), -1.0)
print(f"\nA then A^-1 round trip error: {np.max(np.abs(round_trip.coeffs - u.coeffs)):.2e}")

# multiplication operators are symmetric positive semidefinite for f >= 0
mat = assemble_multiplication_matrix(bump, space)
eigs = np.linalg.eigvalsh(mat)
print(f"multiplication matrix spectrum: [{eigs[0]:.2e}, {eigs[-1]:.4f}]")

coupling = CouplingOperator(bump, space)
print(f"coupling data: alpha = {coupling.alpha}, beta = {coupling.beta}, core = {coupling.core_region}")
w = np.random.default_rng(2).standard_normal(16)
print(f"partial coercivity slack on a random vector: {coupling.coercivity_slack(w):.2e}")
