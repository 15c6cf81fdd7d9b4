"""Observability laboratory for the cascade pair.

Provides the time-integrated observation quadratic form (the Gramian), its
dense matrix oracle, extreme eigenvalues in energy-scaled metrics, empirical
observability constants, the closed-form theoretical constant chain, the 1D
billiard control time, and an inequality-by-inequality audit of the
two-level energy argument that links the weak energy of the unobserved
component to the observation of the driven one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError, RefusalError, ValidationError
from .spectral import CoefficientFunction, ModalCoefficients, SpectralSpace
from .dynamics import (
    CascadeState,
    CascadeTrajectory,
    ComponentState,
    CouplingOperator,
    Observer,
    TimeGrid,
    cascade_step_matrix,
    evolve_cascade,
    evolve_forced_scalar,
)

__all__ = [
    "ObservabilityConstants",
    "GramianReport",
    "AuditRow",
    "observation_block_rows",
    "observation_history",
    "gramian_form",
    "gramian_matrix",
    "apply_gramian",
    "norm_weights",
    "min_eigenvalue",
    "theoretical_constants",
    "estimate_uniform_constants",
    "gcc_min_time",
    "ray_hit_time",
    "empirical_horizon",
    "empirical_ratios",
    "inequality_chain_audit",
    "admissibility_constant",
    "gramian_report",
    "random_cascade_states",
]

DENSE_LIMIT = 64  # largest N for dense Gramian assembly


# ---------------------------------------------------------------------------
# observation as a block operator on the stacked state


def observation_block_rows(observer: Observer, space: SpectralSpace) -> np.ndarray:
    """Observation map as rows acting on the full 4N state vector.

    Interior observation reads the driven component's velocity through the
    weight's multiplication matrix; boundary observation reads the weighted
    normal derivative of the driven component's position.
    """
    n = space.n_modes
    rows = observer.observation_rows(space)
    rows = np.atleast_2d(rows)
    out = np.zeros((rows.shape[0], 4 * n))
    if observer.kind == "interior":
        out[:, 3 * n : 4 * n] = rows
    else:
        out[:, n : 2 * n] = rows
    return out


def observation_history(trajectory: CascadeTrajectory, observer: Observer) -> np.ndarray:
    """Observation samples at every node, shape (n_steps + 1, q)."""
    rows = observation_block_rows(observer, trajectory.space)
    return trajectory.states @ rows.T


def gramian_form(
    initial: CascadeState,
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
) -> float:
    """Time-integrated squared observation along the evolved trajectory.

    Simpson quadrature on the step nodes; quadratic in the initial data.
    """
    traj = evolve_cascade(initial, coupling, grid)
    obs = observation_history(traj, observer)
    return float(grid.node_weights @ (obs**2).sum(axis=1))


def _dense_generator(space: SpectralSpace, coupling: CouplingOperator | None) -> np.ndarray:
    n = space.n_modes
    lam = np.diag(space.eigenvalues)
    z = np.zeros((n, n))
    eye = np.eye(n)
    cmat = z if coupling is None else coupling.matrix
    return np.block([[z, z, eye, z], [z, z, z, eye], [-lam, z, z, z], [-cmat, -lam, z, z]])


def gramian_matrix(
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
    propagator: str = "exponential",
) -> np.ndarray:
    """Dense 4N x 4N observability Gramian.

    ``propagator='exponential'`` steps with the matrix exponential of the
    dense generator (the independent oracle); ``'solver'`` steps with the
    production one-step propagator.  Both use the same Simpson node weights,
    so they differ only by the stepper's trajectory error.
    """
    if space.n_modes > DENSE_LIMIT:
        raise ValidationError(f"dense Gramian limited to N <= {DENSE_LIMIT}, got N = {space.n_modes}")
    grid.validate_for(space)
    if propagator == "exponential":
        step = expm(grid.dt * _dense_generator(space, coupling))
    elif propagator == "solver":
        step = cascade_step_matrix(space, None if coupling is None else coupling.matrix, grid.dt)
    else:
        raise ValidationError("propagator must be 'exponential' or 'solver'")
    rows = observation_block_rows(observer, space)
    weights = grid.node_weights
    obs = rows.copy()
    gram = weights[0] * (obs.T @ obs)
    for k in range(1, grid.n_steps + 1):
        obs = obs @ step
        gram += weights[k] * (obs.T @ obs)
    return 0.5 * (gram + gram.T)


def apply_gramian(
    state_vector: np.ndarray,
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
) -> np.ndarray:
    """Matrix-free Gramian application: evolve, observe, accumulate the adjoint."""
    traj = evolve_cascade(CascadeState.from_vector(state_vector, space), coupling, grid)
    rows = observation_block_rows(observer, space)
    weights = grid.node_weights
    contributions = (traj.states @ rows.T) * weights[:, None]  # sigma_m g_m
    step_t = cascade_step_matrix(space, None if coupling is None else coupling.matrix, grid.dt).T
    acc = rows.T @ contributions[grid.n_steps]
    for m in range(grid.n_steps - 1, -1, -1):
        acc = step_t @ acc + rows.T @ contributions[m]
    return acc


def norm_weights(space: SpectralSpace, norm_level: str = "observation") -> np.ndarray:
    """Diagonal weights of the state metric used for eigenvalue scaling.

    ``observation``: weak energy of the first component plus natural energy
    of the second (the metric of the two-level observability statement).
    ``energy``: natural energy of both components.
    """
    lam = space.eigenvalues
    one = np.ones_like(lam)
    if norm_level == "observation":
        blocks = (one, lam, 1.0 / lam, one)
    elif norm_level == "energy":
        blocks = (lam, lam, one, one)
    else:
        raise ValidationError("norm_level must be 'observation' or 'energy'")
    return 0.5 * np.concatenate(blocks)


def _min_singular(matrix: np.ndarray):
    """Singular values (descending, padded with zeros when the factor is
    rank-deficient by shape) and right singular vectors as rows."""
    rows, cols = matrix.shape
    if rows < cols:
        _, svals, vt = np.linalg.svd(matrix, full_matrices=True)
        svals = np.concatenate([svals, np.zeros(cols - rows)])
        return svals, vt
    _, svals, vt = np.linalg.svd(matrix, full_matrices=False)
    return svals, vt


@dataclass
class EigenReport:
    """Extreme eigenvalues of the metric-scaled Gramian."""

    min_eig: float
    max_eig: float
    eigenvector: np.ndarray
    block_min: dict

    @property
    def contrast(self) -> float:
        return self.min_eig / self.max_eig if self.max_eig > 0 else 0.0


FACTOR_LIMIT = 8_000_000  # largest observation-factor size for the SVD route


def _observation_factor(
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
) -> np.ndarray:
    """Square-root factor of the Gramian: weighted observation history rows.

    Stacks sqrt(sigma_m) * Obs * E^m over all nodes, stepping with the matrix
    exponential oracle; the Gramian is the Gram product of this factor.
    """
    rows = observation_block_rows(observer, space)
    step = expm(grid.dt * _dense_generator(space, coupling))
    w = grid.node_weights
    blocks = []
    obs = rows.copy()
    for k in range(grid.n_steps + 1):
        blocks.append(np.sqrt(w[k]) * obs)
        if k < grid.n_steps:
            obs = obs @ step
    return np.vstack(blocks)


def min_eigenvalue(
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
    norm_level: str = "observation",
    method: str = "dense",
    lanczos_maxiter: int = 5000,
) -> EigenReport:
    """Smallest eigenvalue of the metric-scaled Gramian, with diagnostics.

    A stable positive eigenvalue under refinement certifies observability;
    collapse under refinement (or an exactly null block) certifies failure.
    The dense route works on the square-root observation factor by SVD when
    it fits (never squaring, so near-null directions are resolved far below
    the eigenvalue roundoff floor of the assembled Gramian) and falls back
    to an eigen-decomposition of the assembled matrix otherwise; 'lanczos'
    applies the Gramian matrix-free through the production solver.
    """
    d = norm_weights(space, norm_level)
    d_isqrt = 1.0 / np.sqrt(d)
    n = space.n_modes
    if method == "dense":
        if space.n_modes > DENSE_LIMIT:
            raise ValidationError(f"dense route limited to N <= {DENSE_LIMIT}")
        rows = observation_block_rows(observer, space)
        factor_size = (grid.n_steps + 1) * rows.shape[0] * 4 * n
        first_idx = np.concatenate([np.arange(n), np.arange(2 * n, 3 * n)])
        second_idx = np.concatenate([np.arange(n, 2 * n), np.arange(3 * n, 4 * n)])
        if factor_size <= FACTOR_LIMIT:
            factor = _observation_factor(coupling, observer, grid, space) * d_isqrt[None, :]
            svals, vecs = _min_singular(factor)
            block_min = {
                "u1": _min_singular(factor[:, first_idx])[0][-1] ** 2,
                "u2": _min_singular(factor[:, second_idx])[0][-1] ** 2,
            }
            return EigenReport(
                min_eig=float(svals[-1] ** 2),
                max_eig=float(svals[0] ** 2),
                eigenvector=d_isqrt * vecs[-1],
                block_min=block_min,
            )
        gram = gramian_matrix(coupling, observer, grid, space, propagator="exponential")
        scaled = gram * np.outer(d_isqrt, d_isqrt)
        eigvals, eigvecs = np.linalg.eigh(scaled)
        block_min = {
            "u1": float(np.linalg.eigvalsh(scaled[np.ix_(first_idx, first_idx)])[0]),
            "u2": float(np.linalg.eigvalsh(scaled[np.ix_(second_idx, second_idx)])[0]),
        }
        return EigenReport(
            min_eig=float(eigvals[0]),
            max_eig=float(eigvals[-1]),
            eigenvector=d_isqrt * eigvecs[:, 0],
            block_min=block_min,
        )
    if method != "lanczos":
        raise ValidationError("method must be 'dense' or 'lanczos'")

    def matvec(x):
        return d_isqrt * apply_gramian(d_isqrt * x, coupling, observer, grid, space)

    op = LinearOperator((4 * n, 4 * n), matvec=matvec, dtype=float)
    try:
        small, svec = eigsh(op, k=1, which="SA", maxiter=lanczos_maxiter)
        large, _ = eigsh(op, k=1, which="LA", maxiter=lanczos_maxiter)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"Lanczos did not converge within {lanczos_maxiter} iterations", trace=exc
        ) from exc
    return EigenReport(
        min_eig=float(small[0]),
        max_eig=float(large[0]),
        eigenvector=d_isqrt * svec[:, 0],
        block_min={},
    )


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class ObservabilityConstants:
    """Constant chain of the two-level energy argument.

    alpha/beta are the coupling coercivity and sup-norm; gamma0/delta0 and
    eta0/alpha0 the uniform source-observability constants of the localized
    projection and of the observation operator; c1..c4 the chain constants
    obtained by walking the proof with Young parameter eta = T alpha /
    (4 gamma0); the derived quantities (a, b, nu, m_factor, t1..t3) follow by
    closed forms.
    """

    alpha: float
    beta: float
    gamma0: float
    eta0: float
    alpha0: float
    delta0: float
    t0: float
    c1: float = 4.0
    c2: float = 16.0
    c3: float = 32.0
    c4: float = 128.0
    a: float = field(init=False)
    b: float = field(init=False)
    nu: float = field(init=False)
    m_factor: float = field(init=False)
    t1: float = field(init=False)
    t2: float = field(init=False)
    t3: float = field(init=False)
    k_trend: float | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma0", "eta0", "alpha0", "t0", "c1", "c2", "c3", "c4"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        a = self.c3 * self.beta * self.gamma0 / (2.0 * self.alpha)
        b = self.c4 * self.beta**2 * self.gamma0**2 / (2.0 * self.alpha**2)
        root = np.sqrt(a * a + a + b)
        nu = a + root
        m_factor = root / ((2.0 * a + 1.0) * (a + root) + a + 2.0 * b)
        t1 = np.sqrt(2.0 * self.c4 * self.alpha0 * self.beta * self.gamma0) / self.alpha
        t2 = np.sqrt(2.0 * self.c3 * self.alpha0 * self.beta * self.gamma0) / np.sqrt(self.alpha * m_factor)
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))
        object.__setattr__(self, "nu", float(nu))
        object.__setattr__(self, "m_factor", float(m_factor))
        object.__setattr__(self, "t1", float(t1))
        object.__setattr__(self, "t2", float(t2))
        object.__setattr__(self, "t3", float(max(self.t0, t1, t2)))
        if not 0.0 < self.m_factor < 1.0:
            raise ValidationError("mean-energy factor must lie in (0, 1)")

    def d1(self, horizon: float) -> float:
        """Recovery constant of the weak initial energy of the free component."""
        self._require_beyond_t2(horizon)
        bracket = self.c3 / self.m_factor + self.c4 * self.beta * self.gamma0 / self.alpha
        return (
            2.0
            * self.eta0
            * self.gamma0**2
            * bracket
            / (self.alpha**2 * (horizon**2 - self.t2**2) * horizon)
        )

    def d2(self, horizon: float) -> float:
        """Recovery constant of the natural initial energy of the driven component."""
        self._require_beyond_t2(horizon)
        return 2.0 * horizon * self.eta0 / (self.m_factor * (horizon**2 - self.t2**2))

    def k2(self, horizon: float) -> float:
        """Bound on the integrated driven energy per unit observation."""
        self._require_beyond_t2(horizon)
        return 2.0 * self.eta0 * horizon**2 / (horizon**2 - self.t2**2)

    def r2(self, horizon: float) -> float:
        """Bound on the integrated coupling form per unit observation."""
        self._require_beyond_t2(horizon)
        bracket = self.c3 / self.m_factor + self.c4 * self.beta * self.gamma0 / self.alpha
        return 2.0 * self.eta0 * self.gamma0 * bracket / (self.alpha * (horizon**2 - self.t2**2))

    def _require_beyond_t2(self, horizon: float) -> None:
        if horizon <= self.t2:
            raise ValidationError(f"horizon {horizon} does not exceed the threshold t2 = {self.t2:.4g}")

    def with_trend(self, k_trend: float) -> "ObservabilityConstants":
        return replace(self, k_trend=k_trend)


def theoretical_constants(
    alpha: float,
    beta: float,
    gamma0: float,
    eta0: float,
    alpha0: float,
    t0: float,
    c1: float = 4.0,
    c2: float = 16.0,
    c3: float = 32.0,
    c4: float = 128.0,
    delta0: float = 1.0,
) -> ObservabilityConstants:
    """Evaluate the closed-form constant chain from its primitive inputs."""
    return ObservabilityConstants(
        alpha=alpha,
        beta=beta,
        gamma0=gamma0,
        eta0=eta0,
        alpha0=alpha0,
        delta0=delta0,
        t0=t0,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
    )


# ---------------------------------------------------------------------------
# geometric control time (1D billiard)


def ray_hit_time(x0: float, direction: int, region) -> float:
    """First time a speed-1 billiard ray on (0, 1) meets the region.

    Interior regions are open intervals (a, b); boundary regions are sets of
    endpoint names.  Rays reflect at both walls; a few segments always
    suffice in one dimension.
    """
    if not 0.0 < x0 < 1.0:
        raise ValidationError("ray must start inside the open interval")
    if direction not in (-1, 1):
        raise ValidationError("direction must be +1 or -1")
    boundary = _as_boundary_set(region)
    t, x, d = 0.0, float(x0), float(direction)
    for _ in range(4):
        if boundary is not None:
            wall = 1.0 if d > 0 else 0.0
            segment = abs(wall - x)
            if ("right" in boundary and d > 0) or ("left" in boundary and d < 0):
                return t + segment
            t += segment
            x, d = wall, -d
            continue
        a, b = region
        if a < x < b:
            return t
        if d > 0:
            if x <= a:
                return t + (a - x)
            t += 1.0 - x
            x, d = 1.0, -1.0
        else:
            if x >= b:
                return t + (x - b)
            t += x
            x, d = 0.0, 1.0
    raise RuntimeError("ray failed to meet a nonempty region within four segments")


def _as_boundary_set(region):
    if isinstance(region, (set, frozenset, list, tuple)) and region and all(
        isinstance(s, str) for s in region
    ):
        names = frozenset(region)
        if not names <= {"left", "right"}:
            raise ValidationError(f"unknown boundary names in {region!r}")
        return names
    return None


def gcc_min_time(region) -> float:
    """Horizon beyond which every speed-1 billiard ray meets the region.

    Interior interval (a, b): 2 max(a, 1 - b).  Single endpoint: 2.  Both
    endpoints: 1.  Empty regions are rejected.
    """
    if region is None:
        raise ValidationError("empty region has no control time")
    boundary = _as_boundary_set(region)
    if boundary is not None:
        return 1.0 if boundary == {"left", "right"} else 2.0
    a, b = region
    if not (0.0 <= a < b <= 1.0):
        raise ValidationError(f"region ({a}, {b}) is not a nonempty subinterval of (0, 1)")
    return 2.0 * max(a, 1.0 - b)


def empirical_horizon(coupling: CouplingOperator, observer: Observer) -> float:
    """Largest of the two geometric control times (coupling and observation)."""
    return max(gcc_min_time(coupling.core_region), gcc_min_time(observer.region))


# ---------------------------------------------------------------------------
# empirical constants


def random_cascade_states(space: SpectralSpace, count: int, seed: int) -> list[CascadeState]:
    rng = np.random.default_rng(seed)
    return [CascadeState.from_vector(rng.standard_normal(4 * space.n_modes), space) for _ in range(count)]


def _trajectory_functionals(
    traj: CascadeTrajectory,
    coupling: CouplingOperator | None,
    observer: Observer,
) -> dict:
    """All per-trajectory integrals used by ratios and the audit."""
    grid = traj.grid
    space = traj.space
    obs = observation_history(traj, observer)
    obs_int = float(grid.node_weights @ (obs**2).sum(axis=1))
    e1_u2 = traj.energy_series(2, 1)
    e1_u1 = traj.energy_series(1, 1)
    e0_u1 = traj.energy_series(1, 0)
    u1_fine = traj.first_component_fine_positions()
    fine_w = grid.fine_weights
    if coupling is None:
        coupling_int = 0.0
        coupling_sq_int = 0.0
    else:
        cu1 = u1_fine @ coupling.matrix.T
        coupling_int = float(fine_w @ np.einsum("ki,ki->k", cu1, u1_fine))
        coupling_sq_int = float(fine_w @ np.einsum("ki,ki->k", cu1, cu1))
    return {
        "obs_int": obs_int,
        "e1_u2_0": float(e1_u2[0]),
        "e1_u2_T": float(e1_u2[-1]),
        "e1_u2_int": float(grid.node_weights @ e1_u2),
        "e0_u1_0": float(e0_u1[0]),
        "e1_u1_0": float(e1_u1[0]),
        "coupling_int": coupling_int,
        "coupling_sq_int": coupling_sq_int,
        "u1_fine": u1_fine,
    }


def empirical_ratios(
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
    ensemble: int = 24,
    seed: int = 0,
) -> dict:
    """Discrete worst-case observability and admissibility ratios.

    Every numerator is a quadratic form of the initial data, so the sharp
    constants on the truncated space are extreme generalized eigenvalues
    against the Gramian: d1_emp bounds the weak initial energy of the free
    component, d2_emp the natural initial energy of the driven one, k2_emp
    its integrated energy and r2_emp the integrated coupling form, each per
    unit of integrated squared observation.  The admissibility entry is the
    ensemble maximum of the direct inequality's ratio (the worst-case value
    is the top eigenvalue of the metric-scaled Gramian and is reported by
    min_eigenvalue instead).
    """
    from scipy.linalg import eigh as generalized_eigh

    gram = gramian_matrix(coupling, observer, grid, space, propagator="solver")
    n = space.n_modes
    lam = space.eigenvalues

    # regularity guard: ratios are meaningless for a singular Gramian
    metric = norm_weights(space, "observation")
    scaled = gram / np.sqrt(np.outer(metric, metric))
    spectrum = np.linalg.eigvalsh(scaled)
    if spectrum[0] <= 1e-12 * spectrum[-1]:
        raise RefusalError(
            "Gramian is not coercive at this horizon; worst-case ratios are unbounded",
            {"min_eig": float(spectrum[0]), "max_eig": float(spectrum[-1])},
        )

    def sup_ratio(form):
        vals = generalized_eigh(form, gram, eigvals_only=True)
        return float(vals[-1])

    weak_first = np.zeros(4 * n)
    weak_first[:n] = 0.5
    weak_first[2 * n : 3 * n] = 0.5 / lam
    natural_second = np.zeros(4 * n)
    natural_second[n : 2 * n] = 0.5 * lam
    natural_second[3 * n :] = 0.5

    # integrated driven energy as a quadratic form of the initial data
    step = cascade_step_matrix(space, None if coupling is None else coupling.matrix, grid.dt)
    kform = np.zeros((4 * n, 4 * n))
    prop = np.eye(4 * n)
    for k, w in enumerate(grid.node_weights):
        kform += w * (prop.T @ (natural_second[:, None] * prop))
        if k < grid.n_steps:
            prop = step @ prop
    kform = 0.5 * (kform + kform.T)

    out = {
        "d1_emp": sup_ratio(np.diag(weak_first)),
        "d2_emp": sup_ratio(np.diag(natural_second)),
        "k2_emp": sup_ratio(kform),
    }

    if coupling is None:
        out["r2_emp"] = 0.0
    else:
        # integrated coupling form: the free component is known in closed
        # form, so the time moments reduce to weighted trig Gram matrices
        t = grid.fine_times
        fw = grid.fine_weights
        om = space.frequencies
        cos_t = np.cos(np.outer(t, om))
        sin_t = np.sin(np.outer(t, om)) / om
        w_cc = cos_t.T @ (fw[:, None] * cos_t)
        w_cs = cos_t.T @ (fw[:, None] * sin_t)
        w_ss = sin_t.T @ (fw[:, None] * sin_t)
        rform = np.zeros((4 * n, 4 * n))
        rform[np.ix_(np.arange(n), np.arange(n))] = coupling.matrix * w_cc
        rform[np.ix_(np.arange(n), np.arange(2 * n, 3 * n))] = coupling.matrix * w_cs
        rform[np.ix_(np.arange(2 * n, 3 * n), np.arange(n))] = (coupling.matrix * w_cs).T
        rform[np.ix_(np.arange(2 * n, 3 * n), np.arange(2 * n, 3 * n))] = coupling.matrix * w_ss
        rform = 0.5 * (rform + rform.T)
        out["r2_emp"] = sup_ratio(rform)

    best = 0.0
    for state in random_cascade_states(space, ensemble, seed):
        value = float(state.as_vector() @ gram @ state.as_vector())
        denom = float(state.as_vector() @ (metric * state.as_vector()))
        best = max(best, value / denom)
    out["admissibility"] = best
    return out


def admissibility_constant(
    coupling: CouplingOperator | None,
    observer: Observer,
    grid: TimeGrid,
    space: SpectralSpace,
    ensemble: int = 24,
    seed: int = 0,
) -> float:
    """Empirical constant of the direct (hidden regularity) inequality."""
    best = 0.0
    for state in random_cascade_states(space, ensemble, seed):
        value = gramian_form(state, coupling, observer, grid)
        denom = (
            0.5 * float(state.u1.coeffs @ state.u1.coeffs)
            + 0.5 * float(state.v1.coeffs**2 @ (1.0 / space.eigenvalues))
            + 0.5 * float(state.u2.coeffs**2 @ space.eigenvalues)
            + 0.5 * float(state.v2.coeffs @ state.v2.coeffs)
        )
        if denom > 0:
            best = max(best, value / denom)
    return best


def estimate_uniform_constants(
    target,
    grid: TimeGrid,
    space: SpectralSpace,
    ensemble: int = 32,
    seed: int = 0,
) -> tuple[float, float]:
    """Sampled lower-bound estimates of the uniform observability pair.

    ``target`` is an Observer (estimates the observation pair) or a
    CouplingOperator (estimates the localized-projection pair through the
    sharp indicator of its core region).  The first returned number bounds
    the integrated natural energy per unit observation on free solutions,
    the second absorbs the source term on forced solutions.  Both are
    heuristics: maxima over finite ensembles, to be inflated by the caller
    before use in proofs-by-audit.
    """
    if isinstance(target, CouplingOperator):
        region = target.core_region
        quad = target.projection_matrix

        def observation_sq(positions, velocities):
            return np.einsum("ki,ij,kj->k", velocities, quad, velocities)

    elif isinstance(target, Observer):
        region = target.region
        if not region:
            raise RefusalError("empty observation region", {"region": region})
        rows = target.observation_rows(space)

        def observation_sq(positions, velocities):
            component = velocities if target.kind == "interior" else positions
            return ((component @ rows.T) ** 2).sum(axis=1)

    else:
        raise ValidationError("target must be an Observer or a CouplingOperator")

    t_min = gcc_min_time(region)
    if grid.horizon <= t_min:
        raise RefusalError(
            "horizon below the geometric control time of the target region",
            {"horizon": grid.horizon, "gcc_min_time": t_min},
        )

    rng = np.random.default_rng(seed)
    om = space.frequencies
    times = grid.times
    cos_t = np.cos(np.outer(times, om))
    sin_t = np.sin(np.outer(times, om))
    w = grid.node_weights

    first_ratio = 0.0
    for _ in range(ensemble):
        p0 = rng.standard_normal(space.n_modes)
        v0 = rng.standard_normal(space.n_modes)
        positions = cos_t * p0 + sin_t / om * v0
        velocities = -om * sin_t * p0 + cos_t * v0
        e1 = 0.5 * float(p0**2 @ space.eigenvalues + v0 @ v0)
        denom = float(w @ observation_sq(positions, velocities))
        if denom <= 0.0:
            raise RefusalError("degenerate ensemble: free solution invisible", {"ratio": np.inf})
        first_ratio = max(first_ratio, grid.horizon * e1 / denom)

    second_ratio = 0.0
    n = space.n_modes
    for _ in range(ensemble):
        p0 = rng.standard_normal(n)
        v0 = rng.standard_normal(n)
        g = rng.standard_normal(n)
        g /= np.linalg.norm(g)
        freq = rng.uniform(0.5, 3.0)

        def forcing(t, g=g, freq=freq):
            return np.cos(freq * t) * g

        states = evolve_forced_scalar(
            ComponentState(ModalCoefficients(p0, space), ModalCoefficients(v0, space)),
            forcing,
            grid,
        )
        positions, velocities = states[:, :n], states[:, n:]
        e1_series = 0.5 * ((positions**2 * space.eigenvalues).sum(axis=1) + (velocities**2).sum(axis=1))
        e1_int = float(w @ e1_series)
        obs_int = float(w @ observation_sq(positions, velocities))
        f_int = float(w @ (np.cos(freq * times) ** 2))  # |g| = 1
        deficit = e1_int - first_ratio * obs_int
        if deficit > 0 and f_int > 0:
            second_ratio = max(second_ratio, deficit / f_int)
    return first_ratio, max(second_ratio, 1e-12)


# ---------------------------------------------------------------------------
# audit of the inequality chain


@dataclass(frozen=True)
class AuditRow:
    name: str
    lhs: float
    rhs: float
    margin: float
    must_hold: bool
    satisfied: bool
    kind: str = "inequality"  # or "identity"


def _row(name, lhs, rhs, must_hold, scale, rtol=1e-9):
    margin = rhs - lhs
    return AuditRow(name, lhs, rhs, margin, must_hold, lhs <= rhs + rtol * scale)


def _identity_row(name, lhs, rhs, scale, rtol=1e-6):
    residual = abs(lhs - rhs)
    return AuditRow(name, lhs, rhs, -residual, True, residual <= rtol * max(scale, 1e-300), kind="identity")


def inequality_chain_audit(
    initial: CascadeState,
    coupling: CouplingOperator,
    observer: Observer,
    constants: ObservabilityConstants,
    grid: TimeGrid,
    admissibility_bound: float | None = None,
) -> list[AuditRow]:
    """Evaluate both sides of every inequality in the two-level chain.

    Identities (the coupling duality identity and the driven energy balance)
    must hold at quadrature accuracy for any horizon; inequalities carry
    must_hold flags derived from the horizon thresholds in ``constants``.
    Rows beyond their threshold are reported with margins only.
    """
    space = initial.space
    traj = evolve_cascade(initial, coupling, grid)
    f = _trajectory_functionals(traj, coupling, observer)
    T = grid.horizon
    al, be, g0, e0c, a0 = constants.alpha, constants.beta, constants.gamma0, constants.eta0, constants.alpha0
    c1, c2, c3, c4 = constants.c1, constants.c2, constants.c3, constants.c4
    m = constants.m_factor

    n = space.n_modes
    first_pair = lambda s: float(s[2 * n : 3 * n] @ s[n : 2 * n] - s[3 * n : 4 * n] @ s[0:n])
    boundary_term = first_pair(traj.states[-1]) - first_pair(traj.states[0])

    pi_quad = coupling.projection_matrix
    proj_int = float(grid.fine_weights @ np.einsum("ki,ij,kj->k", f["u1_fine"], pi_quad, f["u1_fine"]))

    e1_u2_sum = f["e1_u2_T"] + f["e1_u2_0"]
    scale = max(f["obs_int"], f["e1_u2_int"], f["e0_u1_0"], f["coupling_int"], 1e-300)

    e1_series = traj.energy_series(2, 1)
    balance_lhs = float(e1_series[-1] - e1_series[0])
    cu1_nodes = traj.block("u1") @ coupling.matrix.T
    balance_int = float(grid.node_weights @ np.einsum("ki,ki->k", cu1_nodes, traj.block("v2")))

    beyond_t0 = T > constants.t0
    beyond_t3 = T > constants.t3
    eta = T * al / (4.0 * g0)

    rows = [
        _identity_row(
            "coupling_duality_identity", f["coupling_int"], boundary_term, scale
        ),
        _identity_row(
            "driven_energy_balance", balance_lhs, -balance_int, max(f["e1_u2_0"], f["e1_u2_T"], 1e-300)
        ),
        _row(
            "coupling_young_bound",
            f["coupling_int"],
            2.0 * eta * f["e0_u1_0"] + e1_u2_sum / eta,
            True,
            scale,
        ),
        _row(
            "source_quadratic_bound",
            f["coupling_sq_int"],
            be * f["coupling_int"],
            True,
            scale,
        ),
        _row(
            "projected_free_observability",
            T * f["e0_u1_0"],
            g0 * proj_int,
            beyond_t0,
            scale * T,
        ),
        _row(
            "source_observability_driven",
            f["e1_u2_int"] - a0 * f["coupling_sq_int"],
            e0c * f["obs_int"],
            beyond_t0,
            scale,
        ),
        _row(
            "coupling_vs_driven_endpoints",
            f["coupling_int"],
            8.0 * g0 / (al * T) * e1_u2_sum,
            beyond_t0,
            scale,
        ),
        _row(
            "endpoint_energy_bound",
            e1_u2_sum,
            c1 * f["e1_u2_0"] + c2 * be * g0 / (al * T) * f["e1_u2_int"],
            beyond_t0,
            scale,
        ),
        _row(
            "coupling_refined_bound",
            f["coupling_int"],
            c3 * g0 / (al * T) * f["e1_u2_0"] + c4 * be * g0**2 / (al**2 * T**2) * f["e1_u2_int"],
            beyond_t0,
            scale,
        ),
        _row(
            "mean_energy_lower_bound",
            m * T * f["e1_u2_0"],
            f["e1_u2_int"],
            beyond_t0,
            scale,
        ),
        _row(
            "weak_energy_vs_coupling",
            f["e0_u1_0"],
            g0 / (al * T) * f["coupling_int"],
            beyond_t0,
            scale,
        ),
    ]
    if beyond_t3 or T > constants.t2:
        rows.extend(
            [
                _row(
                    "driven_energy_observability",
                    m / (2.0 * T) * (T**2 - constants.t2**2) * f["e1_u2_0"],
                    e0c * f["obs_int"],
                    beyond_t3,
                    scale,
                ),
                _row(
                    "integrated_energy_vs_observation",
                    f["e1_u2_int"],
                    constants.k2(T) * f["obs_int"],
                    beyond_t3,
                    scale,
                ),
                _row(
                    "weak_state_recovery",
                    f["e0_u1_0"],
                    constants.d1(T) * f["obs_int"],
                    beyond_t3,
                    scale,
                ),
                _row(
                    "driven_state_recovery",
                    f["e1_u2_0"],
                    constants.d2(T) * f["obs_int"],
                    beyond_t3,
                    scale,
                ),
            ]
        )
    if admissibility_bound is not None:
        rows.append(
            _row(
                "admissibility",
                f["obs_int"],
                admissibility_bound * (f["e0_u1_0"] + f["e1_u2_0"]),
                True,
                scale,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# consolidated report


@dataclass
class GramianReport:
    """Eigenvalue and ratio summary of one observation geometry."""

    horizon: float
    min_eig: float
    max_eig: float
    block_min: dict
    d1_emp: float
    d2_emp: float
    k2_emp: float
    r2_emp: float
    admissibility: float
    refinement: dict  # N -> min_eig


def gramian_report(
    coupling_function: CoefficientFunction | None,
    observer: Observer,
    horizon: float,
    levels: tuple[int, ...] = (16, 32),
    ensemble: int = 24,
    seed: int = 0,
    step_phase: float = 0.4,
    norm_level: str = "observation",
) -> GramianReport:
    """Assemble the report across modal refinement levels.

    The ratios are computed at the first level; the refinement table holds
    the metric-scaled minimal eigenvalue at every level.
    """
    refinement = {}
    first = None
    for n_modes in levels:
        space = SpectralSpace(n_modes)
        coupling = None if coupling_function is None else CouplingOperator(coupling_function, space)
        grid = TimeGrid.for_space(space, horizon, step_phase)
        report = min_eigenvalue(coupling, observer, grid, space, norm_level=norm_level)
        refinement[n_modes] = report.min_eig
        if first is None:
            first = (space, coupling, grid, report)
    space, coupling, grid, eig0 = first
    ratios = empirical_ratios(coupling, observer, grid, space, ensemble=ensemble, seed=seed)
    return GramianReport(
        horizon=horizon,
        min_eig=eig0.min_eig,
        max_eig=eig0.max_eig,
        block_min=eig0.block_min,
        d1_emp=ratios["d1_emp"],
        d2_emp=ratios["d2_emp"],
        k2_emp=ratios["k2_emp"],
        r2_emp=ratios["r2_emp"],
        admissibility=ratios["admissibility"],
        refinement=refinement,
    )
