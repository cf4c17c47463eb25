"""
Tests for the dressed-state frame.

Covers:
  - Frame quantities of the lasing preset (Ω_R, κ₁₂, rates, imbalances)
  - Mirror symmetry δ → −δ and the coupling sum rule
  - Far-detuned couplings and the thermalization time
  - Validity conditions and their margin
  - Parameter validation
"""

import math

import pytest

from conftest import random_params
from dspolariton.ds_core import (
    GHZ,
    THZ,
    SystemParams,
    build_dressed_frame,
    check_conditions,
    equilibrium_imbalance,
    perturbative_couplings,
    stationary_imbalance,
    thermalization_time,
)
from dspolariton.exceptions import DomainError, ParameterError
from dspolariton.transitions import ONE_TWO, TWO_ONE


# ---------------------------------------------------------------------------
# Frame quantities
# ---------------------------------------------------------------------------


def test_rabi_frequency_and_couplings(fig6_frame):
    assert fig6_frame.omega_rabi / THZ == pytest.approx(math.sqrt(1.0 + 11.0 ** 2), rel=1e-12)
    assert fig6_frame.omega_rabi == pytest.approx(69.400, abs=1e-3)
    assert fig6_frame.kappa_12 == pytest.approx(0.0079992, rel=1e-4)
    assert fig6_frame.kappa_21 == pytest.approx(0.62 * THZ - fig6_frame.kappa_12, rel=1e-12)


def test_mixing_amplitudes_normalized(fig6_frame):
    assert fig6_frame.sin_theta ** 2 + fig6_frame.cos_theta ** 2 == pytest.approx(1.0, abs=1e-15)
    # δ > 0: state 2 follows the bare excited level.
    assert fig6_frame.sin_theta > fig6_frame.cos_theta


def test_rates_of_lasing_preset(fig6_frame):
    assert fig6_frame.relaxation_rate == pytest.approx(5.539e-5, rel=1e-3)
    assert fig6_frame.dephasing == pytest.approx(2.2712e-3, rel=1e-4)
    assert fig6_frame.gamma_minus > 0.0
    assert fig6_frame.gamma_plus >= abs(fig6_frame.gamma_minus)


def test_imbalances_of_lasing_preset(fig6_frame):
    assert fig6_frame.s_z_eq == pytest.approx(-0.4622, abs=1e-4)
    assert fig6_frame.s_z_st == pytest.approx(0.5105, abs=5e-4)


def test_resonant_cavity_has_zero_detuning(fig6_frame):
    assert fig6_frame.delta_eff == pytest.approx(0.0, abs=1e-12)
    assert fig6_frame.coupling(ONE_TWO) == fig6_frame.kappa_12
    assert fig6_frame.coupling(TWO_ONE) == fig6_frame.kappa_21


def test_coupling_rejects_unknown_transition(fig6_frame):
    with pytest.raises(ValueError):
        fig6_frame.coupling("three_four")


def test_stationary_imbalance_without_relaxation_keeps_equilibrium():
    assert stationary_imbalance(0.0, 0.0, 0.0, -0.3) == -0.3


def test_stationary_imbalance_collision_dominated_tends_to_equilibrium(fig6_params):
    frame = build_dressed_frame(fig6_params.replace(gamma_coll=1e3 * GHZ))
    assert frame.s_z_st == pytest.approx(frame.s_z_eq, abs=1e-3)


def test_stationary_imbalance_spontaneous_dominated_is_inverted(fig6_params):
    frame = build_dressed_frame(fig6_params.replace(gamma_coll=0.0))
    expected = frame.gamma_minus / frame.gamma_plus
    assert frame.s_z_st == pytest.approx(expected, rel=1e-12)
    assert frame.s_z_st == pytest.approx(1.0, abs=1e-2)


def test_equilibrium_imbalance_is_boltzmann():
    assert equilibrium_imbalance(69.4, 530.0) == pytest.approx(-math.tanh(7.6382 * 69.4 / 1060.0), rel=1e-14)
    with pytest.raises(ParameterError):
        equilibrium_imbalance(69.4, 0.0)


# ---------------------------------------------------------------------------
# Symmetry
# ---------------------------------------------------------------------------


def test_mirror_symmetry_swaps_couplings(rng):
    for _ in range(1000):
        params = random_params(rng)
        frame = build_dressed_frame(params)
        mirror = build_dressed_frame(params.replace(delta=-params.delta))
        assert frame.kappa_12 == mirror.kappa_21
        assert frame.kappa_21 == mirror.kappa_12
        assert frame.sin_theta == mirror.cos_theta
        assert frame.kappa_12 + frame.kappa_21 == pytest.approx(params.kappa, rel=1e-12)


def test_mirror_symmetry_flips_radiative_imbalance(fig6_params):
    frame = build_dressed_frame(fig6_params)
    mirror = build_dressed_frame(fig6_params.replace(delta=-fig6_params.delta))
    assert mirror.gamma_minus == pytest.approx(-frame.gamma_minus, rel=1e-12)
    assert mirror.gamma_plus == pytest.approx(frame.gamma_plus, rel=1e-12)


def test_small_mixing_amplitude_keeps_precision():
    params = SystemParams(
        omega=1e-3 * THZ, delta=40.0 * THZ, kappa=0.62 * THZ, gamma_coll=0.36 * GHZ,
        gamma_spont=0.037e-3, gamma_cav=6.3e-4, delta_cav=0.0, temperature=530.0,
    )
    frame = build_dressed_frame(params)
    expected = params.omega ** 2 / (4.0 * params.delta ** 2)
    assert frame.cos_theta ** 2 == pytest.approx(expected, rel=1e-6)
    assert frame.cos_theta > 0.0


# ---------------------------------------------------------------------------
# Approximations
# ---------------------------------------------------------------------------


def test_perturbative_couplings_far_detuned(fig6_params):
    kappa_12, kappa_21 = perturbative_couplings(fig6_params)
    frame = build_dressed_frame(fig6_params)
    assert kappa_12 == pytest.approx(frame.kappa_12, rel=1e-2)
    assert kappa_21 == pytest.approx(frame.kappa_21, rel=1e-4)


def test_perturbative_couplings_follow_detuning_sign(fig3_params):
    kappa_12, kappa_21 = perturbative_couplings(fig3_params)
    assert kappa_12 > kappa_21


def test_perturbative_couplings_need_detuning(fig6_params):
    with pytest.raises(DomainError):
        perturbative_couplings(fig6_params.replace(delta=0.0))


def test_thermalization_time(fig6_params):
    assert thermalization_time(fig6_params) * 1e-3 == pytest.approx(336.1, abs=0.1)


def test_thermalization_time_without_collisions(fig6_params):
    with pytest.raises(DomainError):
        thermalization_time(fig6_params.replace(gamma_coll=0.0))


# ---------------------------------------------------------------------------
# Validity conditions
# ---------------------------------------------------------------------------


def test_conditions_of_lasing_preset(fig6_frame, fig6_params):
    flags = check_conditions(fig6_frame, fig6_params)
    # Γ/γ exceeds Ω²/δ²: spontaneous emission inverts the dressed states.
    assert not flags.thermalized
    # κ₁₂ ≈ 0.008 is not ten times γ ≈ 0.0023.
    assert not flags.strong_coupling_12
    assert flags.strong_coupling_21


def test_collision_dominated_preset_is_thermalized(fig9_frame, fig9_params):
    assert check_conditions(fig9_frame, fig9_params).thermalized


def test_condition_margin_one_draws_boundary_at_equality(fig6_frame, fig6_params):
    loose = check_conditions(fig6_frame, fig6_params, margin=1.0)
    assert loose.strong_coupling_12
    assert loose.thresholdless_12


def test_condition_margin_range(fig6_frame, fig6_params):
    with pytest.raises(ParameterError):
        check_conditions(fig6_frame, fig6_params, margin=0.0)
    with pytest.raises(ParameterError):
        check_conditions(fig6_frame, fig6_params, margin=1.5)


def test_no_collisions_is_never_thermalized(fig6_params):
    params = fig6_params.replace(gamma_coll=0.0)
    assert not check_conditions(build_dressed_frame(params), params).thermalized


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "change",
    [
        {"temperature": 0.0},
        {"temperature": -10.0},
        {"omega": 0.0},
        {"gamma_cav": -1e-3},
        {"kappa": float("nan")},
        {"delta": float("inf")},
    ],
)
def test_invalid_parameters_are_rejected(fig6_params, change):
    with pytest.raises(ParameterError):
        build_dressed_frame(fig6_params.replace(**change))
