"""Numerical laboratory for 2-coupled cascade wave systems on (0, 1).

The package represents scalar fields in the Dirichlet sine eigenbasis and
provides, on top of an exactly reversible cascade solver: observability
Gramians and their spectra, the closed-form constant chain of the two-level
energy argument with an inequality-by-inequality audit, exact control
synthesis by duality (conjugate gradients on adjoint data), and the
construction and verification of insensitizing controls for the scalar wave
equation.
"""

from .errors import ConvergenceError, RefusalError, ValidationError
from .spectral import (
    CoefficientFunction,
    IndicatorFunction,
    ModalCoefficients,
    PlateauBump,
    SpectralSpace,
    apply_fractional_power,
    assemble_multiplication_matrix,
    project,
    sobolev_norm,
)
from .dynamics import (
    CascadeState,
    CascadeTrajectory,
    ComponentState,
    CouplingOperator,
    Observer,
    TimeGrid,
    apply_generator,
    energy,
    evolve_cascade,
    evolve_cascade_backward,
    evolve_forced_scalar,
    free_evolve,
    inverse_shift_energy_report,
    invert_generator,
    iterate_inverse,
    observe,
)
from .observability import (
    AuditRow,
    GramianReport,
    ObservabilityConstants,
    admissibility_constant,
    apply_gramian,
    empirical_horizon,
    empirical_ratios,
    estimate_uniform_constants,
    gcc_min_time,
    gramian_form,
    gramian_matrix,
    gramian_report,
    inequality_chain_audit,
    min_eigenvalue,
    ray_hit_time,
    theoretical_constants,
)
from .hum import (
    HUMProblem,
    HUMSolution,
    TimeSampledControl,
    apply_hum_gramian,
    assemble_rhs,
    controlled_forward,
    dense_hum_matrix,
    solve_hum,
    verify_transposition,
)
from .insensitize import (
    InsensitizeCertificate,
    InsensitizeProblem,
    insensitize,
    phi_functional,
    sensitivity_derivatives,
    trajectory_phi,
    verify_converse,
)

__version__ = "0.1.0"
