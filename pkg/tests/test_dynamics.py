"""
Tests for the time-dependent equations of motion.

Covers:
  - Right-hand sides: fixed points, canonical population term, invariant subspace
  - Integrator: rotating frame, cavity-free oracle, Bloch-ball bound, output layout
  - Lasing onset on the blue-sideband preset and its tolerance stability
  - Closure of long runs onto the steady-state analysis (slow)
  - Pump-parameter bifurcation (slow)
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import preset_params
from dspolariton.ds_core import GHZ, MHZ, THZ, build_dressed_frame
from dspolariton.dynamics import (
    TRAJECTORY_HEADER,
    BlochState,
    analytic_sz_relaxation,
    detect_lasing_onset,
    integrate,
    integration_time_hint,
    rho_rate,
    rhs_12,
    rhs_21,
    steady_tail,
    trajectory_to_csv,
)
from dspolariton.exceptions import ParameterError
from dspolariton.steady_state import steady_report, threshold
from dspolariton.transitions import ONE_TWO, TWO_ONE

FIG6_ONSET_PS = 20.39e3


@pytest.fixture(scope="module")
def fig6_trajectory():
    frame = build_dressed_frame(preset_params("fig6"))
    initial = BlochState(lambda_=0.05 + 0.0j, s=0.0j, s_z=-1.0)
    return integrate(ONE_TWO, initial, frame, t_end=200e3)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("rhs", [rhs_12, rhs_21])
def test_cavity_free_fixed_point(fig6_frame, rhs):
    state = BlochState(lambda_=0.0j, s=0.0j, s_z=fig6_frame.s_z_st)
    assert rhs(state, fig6_frame) == (0.0, 0.0, 0.0)


def test_population_term_matches_rate_form(fig6_frame):
    state = BlochState(lambda_=0.05 + 0.01j, s=0.02 - 0.03j, s_z=-0.4)
    _, _, d_s_z = rhs_12(state, fig6_frame)
    w, gamma_plus, gamma_minus = fig6_frame.w, fig6_frame.gamma_plus, fig6_frame.gamma_minus
    kappa = fig6_frame.kappa_12
    exchange = 2j * kappa * (state.s * state.lambda_.conjugate() - state.s.conjugate() * state.lambda_)
    expected = -2.0 * w * (state.s_z - fig6_frame.s_z_eq) - gamma_plus * state.s_z + gamma_minus + exchange.real
    assert d_s_z == pytest.approx(expected, rel=1e-12, abs=1e-18)


def test_blue_sideband_derivatives(fig6_frame):
    state = BlochState(lambda_=0.05 + 0.0j, s=0.0j, s_z=-1.0)
    d_lambda, d_s, _ = rhs_12(state, fig6_frame)
    params = fig6_frame.params
    assert d_lambda == pytest.approx(-(1j * params.delta_cav + params.gamma_cav) * 0.05, rel=1e-14)
    assert d_s == pytest.approx(-1j * fig6_frame.kappa_12 * 0.05, rel=1e-14)


def test_red_sideband_derivatives(fig9_frame):
    state = BlochState(lambda_=0.05 + 0.0j, s=0.0j, s_z=-1.0)
    _, d_s, _ = rhs_21(state, fig9_frame)
    assert d_s == pytest.approx(1j * fig9_frame.kappa_21 * 0.05, rel=1e-14)


def test_rotating_frame_shifts_frequencies(fig6_frame):
    state = BlochState(lambda_=0.05 + 0.0j, s=0.01j, s_z=-1.0)
    omega = fig6_frame.params.delta_cav
    lab = rhs_12(state, fig6_frame)
    rotating = rhs_12(state, fig6_frame, frame_frequency=omega)
    assert rotating[0] - lab[0] == pytest.approx(1j * omega * state.lambda_, rel=1e-12)
    assert rotating[1] - lab[1] == pytest.approx(1j * omega * state.s, rel=1e-12)
    assert rotating[2] == lab[2]


def test_rho_rate(fig6_frame):
    assert rho_rate(BlochState(0.0j, 0.0j, fig6_frame.s_z_st), fig6_frame) == 0.0
    state = BlochState(0.1 + 0.0j, 0.0j, fig6_frame.s_z_st)
    assert rho_rate(state, fig6_frame) == pytest.approx(-2.0 * fig6_frame.params.gamma_cav * 0.01, rel=1e-12)


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------


def test_field_free_subspace_is_invariant(fig6_frame):
    traj = integrate(ONE_TWO, BlochState(0.0j, 0.0j, -1.0), fig6_frame, t_end=50e3)
    assert np.all(traj.lambda_ == 0.0)
    assert np.all(traj.s == 0.0)
    assert traj.s_z[-1] > -1.0


def test_cavity_free_relaxation_matches_closed_form(fig6_params):
    frame = build_dressed_frame(fig6_params.replace(kappa=0.0))
    traj = integrate(
        ONE_TWO, BlochState(0.05 + 0.0j, 0.0j, -1.0), frame, t_end=100e3, rel_tol=1e-9, abs_tol=1e-12,
    )
    expected = analytic_sz_relaxation(traj.t, -1.0, frame)
    assert traj.s_z == pytest.approx(expected, rel=1e-6, abs=1e-8)


def test_analytic_relaxation_scalar(fig6_frame):
    assert analytic_sz_relaxation(0.0, -1.0, fig6_frame) == pytest.approx(-1.0, abs=1e-15)
    assert analytic_sz_relaxation(1e9, -1.0, fig6_frame) == pytest.approx(fig6_frame.s_z_st, rel=1e-12)


def test_rotating_and_laboratory_frames_agree(fig6_frame):
    initial = BlochState(0.05 + 0.0j, 0.0j, -1.0)
    rotating = integrate(ONE_TWO, initial, fig6_frame, t_end=50.0, rel_tol=1e-10, abs_tol=1e-12, n_output=11)
    lab = integrate(
        ONE_TWO, initial, fig6_frame, t_end=50.0, rel_tol=1e-10, abs_tol=1e-12, n_output=11, rotating_frame=False,
    )
    assert rotating.frame_frequency == fig6_frame.params.delta_cav
    assert lab.frame_frequency == 0.0
    assert abs(rotating.final_state.lambda_ - lab.final_state.lambda_) < 1e-6
    assert abs(rotating.final_state.s - lab.final_state.s) < 1e-6
    assert rotating.final_state.s_z == pytest.approx(lab.final_state.s_z, abs=1e-8)


def test_trajectory_layout(fig6_trajectory):
    assert fig6_trajectory.t[0] == 0.0
    assert fig6_trajectory.t[-1] == pytest.approx(200e3, rel=1e-12)
    assert np.all(np.diff(fig6_trajectory.t) > 0.0)
    first = fig6_trajectory.state_at(0)
    assert first.lambda_ == 0.05 + 0.0j
    assert first.s_z == -1.0
    assert len(fig6_trajectory) >= 2000
    assert len(fig6_trajectory.samples) == len(fig6_trajectory)
    assert fig6_trajectory.samples[-1] == fig6_trajectory.final_state
    assert fig6_trajectory.stats.n_steps > 0
    assert fig6_trajectory.stats.final_error_estimate < 10.0


def test_trajectory_helpers_are_exported():
    import dspolariton

    assert dspolariton.steady_tail is steady_tail
    assert dspolariton.integration_time_hint is integration_time_hint


def test_bloch_ball_is_preserved(fig6_trajectory):
    radius = 4.0 * np.abs(fig6_trajectory.s) ** 2 + fig6_trajectory.s_z ** 2
    assert np.all(radius <= 1.0 + 1e-6)
    assert np.all(np.abs(fig6_trajectory.s_z) <= 1.0 + 1e-9)


def test_integrate_rejects_bad_arguments(fig6_frame):
    initial = BlochState(0.05 + 0.0j, 0.0j, -1.0)
    with pytest.raises(ParameterError):
        integrate(ONE_TWO, initial, fig6_frame, t_end=0.0)
    with pytest.raises(ParameterError):
        integrate(ONE_TWO, initial, fig6_frame, t_end=10.0, rel_tol=0.0)
    with pytest.raises(ParameterError):
        integrate(ONE_TWO, initial, fig6_frame, t_end=10.0, n_output=1)
    with pytest.raises(ValueError):
        integrate("equilibrium", initial, fig6_frame, t_end=10.0)


def test_trajectory_to_csv(fig6_frame, tmp_path):
    traj = integrate(ONE_TWO, BlochState(0.05 + 0.0j, 0.0j, -1.0), fig6_frame, t_end=1e3, n_output=5)
    path = trajectory_to_csv(traj, str(tmp_path / "out" / "trajectory.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert len(lines) == len(traj) + 1
    first = [float(cell) for cell in lines[1].split(",")]
    assert first == [0.0, 0.05, 0.0, 0.05, 0.0, 0.0, 0.0, -1.0]


# ---------------------------------------------------------------------------
# Lasing onset
# ---------------------------------------------------------------------------


def test_lasing_onset_of_blue_sideband_preset(fig6_trajectory):
    s_z_thr, _ = threshold(ONE_TWO, fig6_trajectory.frame)
    onset = detect_lasing_onset(fig6_trajectory, s_z_thr)
    assert 15e3 <= onset <= 25e3
    assert onset == pytest.approx(FIG6_ONSET_PS, rel=0.01)


def test_lasing_onset_follows_cavity_free_relaxation(fig6_frame):
    s_z_thr, _ = threshold(ONE_TWO, fig6_frame)
    rate = fig6_frame.relaxation_rate
    predicted = -math.log((fig6_frame.s_z_st - s_z_thr) / (fig6_frame.s_z_st + 1.0)) / rate
    assert predicted == pytest.approx(FIG6_ONSET_PS, rel=2e-3)


def test_lasing_onset_stable_under_tolerance_halving(fig6_frame):
    initial = BlochState(0.05 + 0.0j, 0.0j, -1.0)
    s_z_thr, _ = threshold(ONE_TWO, fig6_frame)
    onsets = [
        detect_lasing_onset(integrate(ONE_TWO, initial, fig6_frame, t_end=30e3, rel_tol=tol), s_z_thr)
        for tol in (1e-8, 5e-9)
    ]
    assert onsets[1] == pytest.approx(onsets[0], rel=1e-3)


def test_no_onset_below_threshold(fig6_params):
    frame = build_dressed_frame(fig6_params.replace(kappa=0.0))
    traj = integrate(ONE_TWO, BlochState(0.05 + 0.0j, 0.0j, -1.0), frame, t_end=100e3)
    assert detect_lasing_onset(traj, frame.s_z_st + 0.1) is None


def test_onset_at_start_when_already_inverted(fig6_frame):
    traj = integrate(ONE_TWO, BlochState(0.05 + 0.0j, 0.0j, 0.3), fig6_frame, t_end=1e3)
    assert detect_lasing_onset(traj, 0.0223) == 0.0


def test_onset_direction_validation(fig6_trajectory):
    with pytest.raises(ParameterError):
        detect_lasing_onset(fig6_trajectory, 0.0, direction=0)


# ---------------------------------------------------------------------------
# Steady state of long runs
# ---------------------------------------------------------------------------


def test_blue_sideband_run_reaches_steady_state(fig6_trajectory):
    report = steady_report(ONE_TWO, fig6_trajectory.frame)
    lambda_sq, s_z = steady_tail(fig6_trajectory)
    assert lambda_sq == pytest.approx(report.lambda_sq, rel=0.01)
    assert s_z == pytest.approx(report.s_z_thr, rel=0.01)


def test_steady_tail_validation(fig6_trajectory):
    with pytest.raises(ParameterError):
        steady_tail(fig6_trajectory, fraction=0.0)


@pytest.mark.slow
def test_red_sideband_run_reaches_steady_state(fig9_frame):
    traj = integrate(TWO_ONE, BlochState(0.05 + 0.0j, 0.0j, -1.0), fig9_frame, t_end=5e3)
    report = steady_report(TWO_ONE, fig9_frame)
    lambda_sq, s_z = steady_tail(traj)
    assert lambda_sq == pytest.approx(report.lambda_sq, rel=0.01)
    assert abs(s_z - report.s_z_thr) < 1e-3


@pytest.mark.slow
def test_steady_state_closure_on_random_frames(fig6_params, rng):
    checked = 0
    while checked < 20:
        params = fig6_params.replace(
            delta=rng.uniform(8.0, 14.0) * THZ,
            gamma_coll=rng.uniform(0.2, 0.6) * GHZ,
            gamma_cav=rng.uniform(50.0, 150.0) * MHZ,
            temperature=rng.uniform(450.0, 600.0),
        )
        frame = build_dressed_frame(params)
        frame = build_dressed_frame(params.replace(delta_cav=frame.omega_rabi))
        report = steady_report(ONE_TWO, frame)
        if report.s_z_st < 3.0 * report.s_z_thr:
            continue
        initial = BlochState(0.05 + 0.0j, 0.0j, frame.s_z_st)
        t_end = 2.0 * integration_time_hint(frame, ONE_TWO, initial.s_z)
        traj = integrate(ONE_TWO, initial, frame, t_end=t_end, rel_tol=1e-8, abs_tol=1e-10)
        lambda_sq, s_z = steady_tail(traj)
        assert lambda_sq == pytest.approx(report.lambda_sq, rel=0.01)
        assert s_z == pytest.approx(report.s_z_thr, rel=0.01)
        checked += 1


def _pump_balance(gamma_coll, params):
    frame = build_dressed_frame(params.replace(gamma_coll=gamma_coll))
    return frame.s_z_st - threshold(ONE_TWO, frame)[0]


@pytest.mark.slow
def test_bifurcation_at_critical_collision_rate(fig6_params):
    critical = brentq(_pump_balance, 1e-4, 0.1, args=(fig6_params,))
    assert critical == pytest.approx(7.7e-3, rel=0.03)

    above = build_dressed_frame(fig6_params.replace(gamma_coll=0.9 * critical))
    initial = BlochState(0.05 + 0.0j, 0.0j, above.s_z_st)
    predicted = math.sqrt(steady_report(ONE_TWO, above).lambda_sq)
    traj = integrate(ONE_TWO, initial, above, t_end=800e3)
    assert abs(traj.final_state.lambda_) > 0.5 * predicted

    below = build_dressed_frame(fig6_params.replace(gamma_coll=1.1 * critical))
    initial = BlochState(0.05 + 0.0j, 0.0j, below.s_z_st)
    traj = integrate(ONE_TWO, initial, below, t_end=800e3)
    assert abs(traj.final_state.lambda_) < 1e-3
