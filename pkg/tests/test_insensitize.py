"""Tests for the insensitizing-control construction."""

import numpy as np
import pytest

from wavecascade.errors import RefusalError
from wavecascade.spectral import (
    CoefficientFunction,
    ModalCoefficients,
    PlateauBump,
    SpectralSpace,
    assemble_multiplication_matrix,
)
from wavecascade.dynamics import TimeGrid
from wavecascade.hum import TimeSampledControl
from wavecascade.insensitize import (
    InsensitizeProblem,
    fine_second_positions,
    insensitize,
    phi_functional,
    sensitivity_derivatives,
    trajectory_phi,
    verify_converse,
)
from wavecascade.insensitize import _fd_derivatives

RNG = np.random.default_rng(20240815)

OBSERVATION_FN = CoefficientFunction((PlateauBump(0.2, 0.3, 0.05, 1.0),), core_region=(0.2, 0.3))
CONTROL_FN = CoefficientFunction((PlateauBump(0.6, 0.7, 0.05, 1.0),), core_region=(0.6, 0.7))


def make_problem(n_modes=16, horizon=4.0, kind="interior", weight=OBSERVATION_FN, data=None, **kw):
    space = SpectralSpace(n_modes)
    if data is None:
        y0 = ModalCoefficients(RNG.standard_normal(n_modes) / np.sqrt(space.eigenvalues), space)
        y1 = ModalCoefficients(RNG.standard_normal(n_modes), space)
    else:
        y0, y1 = data
    extra = dict(control_weight=CONTROL_FN) if kind == "interior" else dict(b_left=1.0)
    extra.update(kw)
    return InsensitizeProblem(
        known_position=y0,
        known_velocity=y1,
        observation_weight=weight,
        horizon=horizon,
        control_kind=kind,
        **extra,
    )


class TestPhi:
    def test_zero_trajectory(self):
        space = SpectralSpace(4)
        weight = assemble_multiplication_matrix(OBSERVATION_FN, space)
        grid = TimeGrid(2.0, 64, allow_coarse=True)
        positions = np.zeros((2 * grid.n_steps + 1, 4))
        assert phi_functional(positions, weight, grid.fine_weights) == 0.0

    def test_zero_weight(self):
        space = SpectralSpace(4)
        grid = TimeGrid(2.0, 64, allow_coarse=True)
        positions = RNG.standard_normal((2 * grid.n_steps + 1, 4))
        assert phi_functional(positions, np.zeros((4, 4)), grid.fine_weights) == 0.0

    def test_separable_closed_form(self):
        # unit weight, y(t, x) = sin(pi t) phi_1(x) over two time units
        space = SpectralSpace(4)
        grid = TimeGrid(2.0, 256, allow_coarse=True)
        unit = CoefficientFunction((PlateauBump(0.0, 1.0, 0.0, 1.0),))
        weight = assemble_multiplication_matrix(unit, space)
        positions = np.zeros((2 * grid.n_steps + 1, 4))
        positions[:, 0] = np.sin(np.pi * grid.fine_times)
        assert phi_functional(positions, weight, grid.fine_weights) == pytest.approx(0.5, rel=1e-10)


class TestSensitivityDerivatives:
    def test_zero_weight_gives_zero(self):
        prob = make_problem(8, weight=CoefficientFunction(()))
        d0, d1 = sensitivity_derivatives(prob, None, np.ones(8), np.ones(8))
        assert d0 == 0.0 and d1 == 0.0

    def test_zero_perturbations_give_zero(self):
        prob = make_problem(8)
        d0, d1 = sensitivity_derivatives(prob, None, np.zeros(8), np.zeros(8))
        assert d0 == 0.0 and d1 == 0.0

    def test_matches_finite_difference_oracle(self):
        prob = make_problem(12)
        hum = prob.hum_problem()
        control = TimeSampledControl(
            0.1 * RNG.standard_normal((prob.grid.n_steps + 1, 12)), "interior", prob.grid
        )
        space = prob.space
        z0 = RNG.standard_normal(12)
        z0 /= np.sqrt(np.sum(space.eigenvalues * z0**2))
        z1 = RNG.standard_normal(12)
        z1 /= np.linalg.norm(z1)
        a0, a1 = sensitivity_derivatives(prob, control, z0, z1, _hum=hum)
        f0, f1 = _fd_derivatives(prob, hum, control, z0, z1)
        assert f0 == pytest.approx(a0, rel=1e-5)
        assert f1 == pytest.approx(a1, rel=1e-5)

    def test_derivative_is_linear_in_perturbation(self):
        prob = make_problem(8)
        control = TimeSampledControl(
            0.1 * RNG.standard_normal((prob.grid.n_steps + 1, 8)), "interior", prob.grid
        )
        za = RNG.standard_normal(8)
        zb = RNG.standard_normal(8)
        zeros = np.zeros(8)
        da, _ = sensitivity_derivatives(prob, control, za, zeros)
        db, _ = sensitivity_derivatives(prob, control, zb, zeros)
        dmix, _ = sensitivity_derivatives(prob, control, 0.5 * za - 2.0 * zb, zeros)
        expected = 0.5 * da - 2.0 * db
        assert abs(dmix - expected) <= 1e-8 * max(abs(expected), 1e-300)


class TestInsensitize:
    def test_zero_data_gives_zero_control(self):
        space = SpectralSpace(8)
        prob = make_problem(8, data=(space.zero(), space.zero()), perturbation_count=3)
        control, cert = insensitize(prob)
        assert control.squared_time_norm() == 0.0
        assert cert.phi_baseline == 0.0
        assert cert.max_derivative_relative == 0.0

    def test_interior_certificate(self):
        g = RNG.standard_normal(16)
        g /= np.linalg.norm(g)
        prob = make_problem(16, source=lambda t: np.sin(np.pi * t) * g, seed=5)
        control, cert = insensitize(prob)
        assert cert.max_terminal_relative <= 1e-6
        assert cert.max_derivative_relative <= 1e-6
        assert cert.fd_agreement <= 1e-5
        assert cert.robustness_exponent >= 1.9

    def test_boundary_certificate(self):
        prob = make_problem(16, kind="boundary", seed=6)
        control, cert = insensitize(prob)
        assert cert.max_terminal_relative <= 1e-6
        assert cert.max_derivative_relative <= 1e-6
        assert cert.fd_agreement <= 1e-5
        assert cert.robustness_exponent >= 1.9

    def test_degenerate_weight_reduces_to_plain_null_control(self):
        space = SpectralSpace(8)
        y0 = ModalCoefficients(RNG.standard_normal(8) / np.sqrt(space.eigenvalues), space)
        y1 = ModalCoefficients(RNG.standard_normal(8), space)
        prob = make_problem(8, weight=CoefficientFunction(()), data=(y0, y1), perturbation_count=3)
        control, cert = insensitize(prob)
        assert cert.phi_baseline == 0.0
        assert cert.max_terminal_relative <= 1e-6  # still a null control
        assert all(r.dphi_tau0_analytic == 0.0 for r in cert.records)

    def test_refuses_geometric_failure(self):
        with pytest.raises(RefusalError) as err:
            insensitize(make_problem(8, horizon=1.0))
        assert err.value.diagnostic["minimal_horizon"] == pytest.approx(1.4)

    def test_refuses_boundary_control_below_its_time(self):
        with pytest.raises(RefusalError) as err:
            insensitize(make_problem(8, kind="boundary", horizon=1.5))
        assert err.value.diagnostic["region"] == ("left",)


class TestConverse:
    def test_built_control_passes(self):
        prob = make_problem(12, seed=7)
        control, _ = insensitize(prob)
        report = verify_converse(prob, control)
        assert report.derivatives_vanish
        assert report.terminal_nulls
        assert report.directions_agree

    def test_zero_control_fails_with_quantified_residual(self):
        prob = make_problem(12, seed=8)
        report = verify_converse(prob, None)
        assert not report.derivatives_vanish
        assert not report.terminal_nulls
        assert report.directions_agree
        assert report.terminal_relative > 1e-3

    def test_vanishing_weight_passes_vacuously(self):
        prob = make_problem(8, weight=CoefficientFunction(()), perturbation_count=3)
        report = verify_converse(prob, None)
        assert report.derivatives_vanish
        assert report.terminal_nulls

    def test_equivalence_over_constructed_instances(self):
        agree = []
        for seed in range(3):
            prob = make_problem(8, seed=seed, perturbation_count=3)
            control, _ = insensitize(prob)
            agree.append(verify_converse(prob, control).directions_agree)
            agree.append(verify_converse(prob, None).directions_agree)
        assert all(agree)


class TestTrajectoryPhi:
    def test_robustness_of_fine_interpolation(self):
        # node positions enter both the node and half-node samples; check
        # agreement against a direct fine re-simulation at doubled steps
        prob = make_problem(8, n_steps=512)
        hum = prob.hum_problem()
        from wavecascade.hum import controlled_forward

        states = controlled_forward(hum, None)
        phi_coarse = trajectory_phi(prob, states)
        prob_fine = make_problem(
            8, n_steps=1024, data=(prob.known_position, prob.known_velocity)
        )
        states_fine = controlled_forward(prob_fine.hum_problem(), None)
        phi_fine = trajectory_phi(prob_fine, states_fine)
        assert phi_coarse == pytest.approx(phi_fine, rel=1e-6)
