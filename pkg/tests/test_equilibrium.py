"""
Tests for the equilibrium (superradiant) phase.

Covers:
  - Hopfield coefficients and normal-state polariton branches
  - Critical temperatures, large-|Δ| and exact
  - Gap equation: ordered and normal states, density constraint
  - Agreement with the closed-form order parameter far from resonance
  - Square-root onset at the critical temperature
"""

import math

import numpy as np
import pytest

from dspolariton.ds_core import HBAR_OVER_KB, build_dressed_frame
from dspolariton.equilibrium import (
    UPPER_BRANCH,
    critical_temperature,
    excitation_density,
    exact_critical_temperature,
    hopfield_coefficients,
    lambda_infinity,
    normal_branches,
    normal_state_mu,
    order_parameter_closed_form,
    polariton_density,
    solve_gap,
)
from dspolariton.exceptions import DomainError, ParameterError
from dspolariton.scans import with_delta_eff

RHO = 0.27
TEMPERATURE = 530.0


@pytest.fixture
def fig3_frame(fig3_params):
    # Cavity on the blue sideband at Δ = −Ω_R.
    frame = build_dressed_frame(fig3_params)
    return build_dressed_frame(with_delta_eff(fig3_params, -frame.omega_rabi))


def far_detuned_frame(params):
    frame = build_dressed_frame(params)
    return build_dressed_frame(with_delta_eff(params, -30.0 * frame.kappa_12))


# ---------------------------------------------------------------------------
# Polariton branches
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("delta_eff", [-5.0, -0.01, 0.0, 0.3, 12.0])
def test_hopfield_coefficients_normalized(delta_eff):
    x, c = hopfield_coefficients(delta_eff, 3.9)
    assert x ** 2 + c ** 2 == pytest.approx(1.0, abs=1e-14)


def test_hopfield_coefficients_at_resonance():
    x, c = hopfield_coefficients(0.0, 3.9)
    assert x == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    assert c == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)


def test_hopfield_coefficients_need_coupling():
    with pytest.raises(DomainError):
        hopfield_coefficients(1.0, 0.0)


def test_normal_branches(fig3_frame):
    branches = normal_branches(RHO, fig3_frame)
    delta_eff = fig3_frame.delta_eff
    splitting = math.sqrt(delta_eff ** 2 - 8.0 * fig3_frame.kappa_12 ** 2 * (RHO - 0.5))
    centre = fig3_frame.params.delta_cav + fig3_frame.omega_rabi
    assert branches.mu_upper == pytest.approx(0.5 * (centre + splitting), rel=1e-12)
    assert branches.mu_lower == pytest.approx(0.5 * (centre - splitting), rel=1e-12)
    assert branches.mu_upper - branches.mu_lower == pytest.approx(splitting, rel=1e-12)


def test_normal_branches_complex_splitting(fig6_params):
    # Δ = 0 and ρ > 1/2 leave a negative radicand.
    frame = build_dressed_frame(fig6_params)
    with pytest.raises(DomainError):
        normal_branches(0.9, frame)


# ---------------------------------------------------------------------------
# Critical temperature
# ---------------------------------------------------------------------------


def test_critical_temperature_on_sideband(fig3_frame):
    assert critical_temperature(RHO, fig3_frame.delta_eff) == pytest.approx(533.0, abs=1.0)


def test_critical_temperature_is_linear_in_detuning():
    assert critical_temperature(RHO, -20.0) == pytest.approx(2.0 * critical_temperature(RHO, -10.0), rel=1e-14)


def test_critical_temperature_vanishes_at_resonance():
    assert critical_temperature(RHO, 0.0) == 0.0


def test_critical_temperature_domain():
    with pytest.raises(DomainError):
        critical_temperature(0.5, -10.0)
    with pytest.raises(DomainError):
        critical_temperature(RHO, 10.0)
    with pytest.raises(DomainError):
        critical_temperature(0.5, 0.0)
    with pytest.raises(ParameterError):
        critical_temperature(1.2, -10.0)


def test_exact_critical_temperature_above_large_detuning_form(fig3_frame):
    t_c = critical_temperature(RHO, fig3_frame.delta_eff)
    t_star = exact_critical_temperature(RHO, fig3_frame)
    assert t_star == pytest.approx(533.7, abs=0.5)
    assert t_star > t_c


def test_exact_critical_temperature_converges_far_from_resonance(fig3_params):
    frame = far_detuned_frame(fig3_params)
    t_c = critical_temperature(RHO, frame.delta_eff)
    assert exact_critical_temperature(RHO, frame) == pytest.approx(t_c, rel=2e-3)


def test_exact_critical_temperature_needs_low_density(fig3_frame):
    with pytest.raises(DomainError):
        exact_critical_temperature(0.6, fig3_frame)


# ---------------------------------------------------------------------------
# Gap equation
# ---------------------------------------------------------------------------


def test_gap_solution_below_critical_temperature(fig3_frame):
    solution = solve_gap(RHO, fig3_frame, TEMPERATURE)
    assert solution.converged
    assert 0.02 < solution.lambda_ < 0.05
    assert solution.root_count >= 1
    assert solution.residual < 1e-8


def test_gap_solution_satisfies_both_equations(fig3_frame):
    solution = solve_gap(RHO, fig3_frame, TEMPERATURE)
    lam = solution.lambda_
    kappa = fig3_frame.kappa_12
    theta = math.sqrt(solution.omega_r_tilde ** 2 + 4.0 * kappa ** 2 * lam ** 2)
    ratio = math.tanh(HBAR_OVER_KB * theta / (2.0 * TEMPERATURE))
    assert solution.theta_big == pytest.approx(theta, rel=1e-10)
    assert solution.omega_c_tilde == pytest.approx(kappa ** 2 / theta * ratio, rel=1e-6)
    s_z = -solution.omega_r_tilde / theta * ratio
    assert polariton_density(lam, s_z) == pytest.approx(RHO, abs=1e-8)


def test_gap_solution_above_critical_temperature(fig3_frame):
    temperature = exact_critical_temperature(RHO, fig3_frame) + 5.0
    solution = solve_gap(RHO, fig3_frame, temperature)
    assert solution.converged
    assert solution.lambda_ == 0.0
    assert solution.mu == pytest.approx(normal_state_mu(RHO, fig3_frame, temperature), rel=1e-12)


def test_gap_solution_far_from_resonance_is_normal(fig3_params):
    frame = build_dressed_frame(with_delta_eff(fig3_params, -8.0 * 2.0 * math.pi))
    assert solve_gap(RHO, frame, TEMPERATURE).lambda_ == 0.0


def test_upper_branch_has_no_ordered_state(fig3_frame):
    solution = solve_gap(RHO, fig3_frame, TEMPERATURE, branch=UPPER_BRANCH)
    assert solution.lambda_ == 0.0


def test_gap_rejects_invalid_density(fig3_frame):
    with pytest.raises(ParameterError):
        solve_gap(0.0, fig3_frame, TEMPERATURE)
    with pytest.raises(ParameterError):
        solve_gap(1.0, fig3_frame, TEMPERATURE)


def test_order_parameter_grows_as_temperature_drops(fig3_frame):
    values = [solve_gap(RHO, fig3_frame, t).lambda_ for t in (530.0, 500.0, 400.0, 200.0)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] <= lambda_infinity(RHO, fig3_frame) + 1e-9


def test_lambda_infinity_close_to_sqrt_density(fig3_params):
    frame = far_detuned_frame(fig3_params)
    value = lambda_infinity(RHO, frame)
    assert value < math.sqrt(RHO)
    assert value == pytest.approx(math.sqrt(RHO), rel=1e-2)


# ---------------------------------------------------------------------------
# Closed form and critical behaviour
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("rho", [0.1, 0.27, 0.45])
@pytest.mark.parametrize("fraction", [0.5, 0.75, 0.95])
def test_closed_form_agrees_with_gap_solution(fig3_params, rho, fraction):
    frame = far_detuned_frame(fig3_params)
    temperature = fraction * critical_temperature(rho, frame.delta_eff)
    solved = solve_gap(rho, frame, temperature).lambda_
    closed = order_parameter_closed_form(rho, frame.delta_eff, temperature, lambda_infinity(rho, frame))
    assert solved > 0.0
    assert closed == pytest.approx(solved, rel=0.05)


def test_closed_form_vanishes_above_critical_temperature():
    t_c = critical_temperature(RHO, -60.0)
    assert order_parameter_closed_form(RHO, -60.0, 1.01 * t_c, 0.5) == 0.0
    assert order_parameter_closed_form(RHO, -60.0, 0.99 * t_c, 0.5) > 0.0


def test_closed_form_low_temperature_limit():
    assert order_parameter_closed_form(RHO, -60.0, 1.0, 0.5) == pytest.approx(0.5, rel=1e-12)


def test_square_root_onset(fig3_frame):
    t_star = exact_critical_temperature(RHO, fig3_frame)
    distances = np.logspace(-4.0, -2.5, 8) * t_star
    lambdas = np.array([solve_gap(RHO, fig3_frame, t_star - d).lambda_ for d in distances])
    assert np.all(lambdas > 0.0)
    slope = np.polyfit(np.log(distances), np.log(lambdas), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def test_densities():
    assert polariton_density(0.0, -1.0) == 0.0
    assert polariton_density(0.3, 0.0) == pytest.approx(0.59, abs=1e-15)
    assert excitation_density(0.0, -1.0) == -0.5
