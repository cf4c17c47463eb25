# steady_state.py
import cmath
import json
import logging
import math

from dataclasses import dataclass
from typing import Any, Dict, Tuple

from dspolariton.ds_core import DressedFrame
from dspolariton.exceptions import DomainError, ParameterError
from dspolariton.transitions import ONE_TWO, check_transition

logger = logging.getLogger(__name__)

__all__ = [
    "ThresholdReport",
    "SelfConsistentImbalance",
    "transition_detuning",
    "complex_branches",
    "threshold",
    "minimal_threshold",
    "self_consistent_imbalance",
    "steady_report",
    "thresholdless_order_parameter",
    "report_to_dict",
    "report_to_json",
]

FIXED_POINT_DAMPING = 0.5
FIXED_POINT_MAX_ITER = 500
FIXED_POINT_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdReport:
    transition: str
    s_z_thr: float
    s_z_st: float
    mu: float
    lambda_sq: float
    lasing: bool
    mu_branches: Tuple[complex, complex]


@dataclass(frozen=True)
class SelfConsistentImbalance:
    s_z_bar: float
    omega_r_eff_tilde: complex
    gamma_eff: float
    converged: bool
    iterations: int = 0


def transition_detuning(transition: str, frame: DressedFrame) -> float:
    """
    Cavity detuning from the sideband a transition emits on.

    Δ for 1→2 (blue Mollow component), Δ + 2Ω_R for 2→1 (red component).
    """
    check_transition(transition)
    if transition == ONE_TWO:
        return frame.delta_eff
    return frame.delta_eff + 2.0 * frame.omega_rabi_shifted


def complex_branches(
    transition: str,
    frame: DressedFrame,
    s_z_bar: float,
) -> Tuple[complex, complex]:
    """
    Complex polariton frequencies μ₁, μ₂ of the lasing problem.

    Parameters:
    ----------
    transition : str
        ONE_TWO or TWO_ONE.
    frame : DressedFrame
        Dressed frame.
    s_z_bar : float
        Stationary population imbalance entering the coupling term.

    Returns:
    -------
    Tuple[complex, complex]
        (μ₁, μ₂) in rad/ps, ordered so that μ₂ is the least damped branch
        (larger imaginary part). The square root is the principal branch.
    """
    check_transition(transition)
    photon = complex(frame.params.delta_cav, -frame.params.gamma_cav)
    kappa = frame.coupling(transition)
    if transition == ONE_TWO:
        matter = complex(frame.omega_rabi_shifted, -frame.dephasing)
        difference = photon - matter
        root = cmath.sqrt(difference * difference - 4.0 * kappa ** 2 * s_z_bar)
        centre = photon + matter
    else:
        matter = complex(frame.omega_rabi_shifted, frame.dephasing)
        total = photon + matter
        root = cmath.sqrt(total * total + 4.0 * kappa ** 2 * s_z_bar)
        centre = photon - matter

    first = 0.5 * (centre + root)
    second = 0.5 * (centre - root)
    if first.imag > second.imag:
        first, second = second, first
    return first, second


def threshold(transition: str, frame: DressedFrame) -> Tuple[float, float]:
    """
    Threshold imbalance S_z^(thr) and lasing frequency μ of a transition.

    For 1→2: S_z^(thr) = Γ_c(Γ₁+γ₁)/κ₁₂²·(1 + Δ²/(Γ_c+Γ₁+γ₁)²) and
    μ = δ_c − ΔΓ_c/(Γ₁+γ₁+Γ_c). For 2→1 the detuning Δ is replaced by
    Δ + 2Ω_R, κ₁₂ by κ₂₁ and the threshold changes sign.

    Raises:
    -------
    DomainError
        If the effective coupling of the transition vanishes.
    """
    kappa = frame.coupling(transition)
    if kappa <= 0.0:
        raise DomainError(f"Threshold undefined for {transition}: effective coupling is zero")

    detuning = transition_detuning(transition, frame)
    gamma_cav = frame.params.gamma_cav
    dephasing = frame.dephasing
    total_loss = gamma_cav + dephasing
    s_z_thr = gamma_cav * dephasing / kappa ** 2
    if total_loss > 0.0:
        s_z_thr *= 1.0 + (detuning / total_loss) ** 2
        mu = frame.params.delta_cav - detuning * gamma_cav / total_loss
    else:
        mu = frame.params.delta_cav
    if transition != ONE_TWO:
        s_z_thr = -s_z_thr
    return s_z_thr, mu


def minimal_threshold(transition: str, frame: DressedFrame) -> float:
    """Threshold at the most favourable tuning, ±Γ_c(Γ₁+γ₁)/κ²."""
    kappa = frame.coupling(transition)
    if kappa <= 0.0:
        raise DomainError(f"Threshold undefined for {transition}: effective coupling is zero")
    value = frame.params.gamma_cav * frame.dephasing / kappa ** 2
    return value if transition == ONE_TWO else -value


def _omega_r_eff_tilde(
    transition: str,
    detuning: float,
    gamma_eff: float,
    kappa: float,
    s_z_bar: float,
) -> complex:
    shifted = complex(detuning, gamma_eff)
    coupling = 4.0 * kappa ** 2 * s_z_bar
    radicand = shifted * shifted - coupling if transition == ONE_TWO else shifted * shifted + coupling
    return 0.5 * (-shifted + cmath.sqrt(radicand))


def self_consistent_imbalance(
    transition: str,
    frame: DressedFrame,
    lambda_abs: float,
    tol: float = FIXED_POINT_TOL,
    damping: float = FIXED_POINT_DAMPING,
    max_iter: int = FIXED_POINT_MAX_ITER,
) -> SelfConsistentImbalance:
    """
    Saturated stationary imbalance in the presence of a cavity field |λ|.

    Solves s̄ = S_z^(st)|Ω̃|² / (|Ω̃|² + 4(Γ₁+γ₁)κ²|λ|²/(2w+Γ₊)) with
    Ω̃ = ½{−Δ − iΓ_eff + sqrt((Δ + iΓ_eff)² − 4κ²s̄)} and Γ_eff = Γ₁+γ₁ − Γ_c
    by damped fixed-point iteration started at S_z^(st). For 2→1 the
    detuning is Δ + 2Ω_R and the coupling term under the root changes sign.

    Returns:
    -------
    SelfConsistentImbalance
        `converged = False` if the update was still larger than `tol`
        after `max_iter` iterations.
    """
    if lambda_abs < 0.0:
        raise ParameterError(f"lambda_abs must be non-negative, got {lambda_abs}")
    kappa = frame.coupling(transition)
    detuning = transition_detuning(transition, frame)
    gamma_eff = frame.dephasing - frame.params.gamma_cav
    s_z_st = frame.s_z_st

    if lambda_abs == 0.0:
        return SelfConsistentImbalance(
            s_z_bar=s_z_st,
            omega_r_eff_tilde=_omega_r_eff_tilde(transition, detuning, gamma_eff, kappa, s_z_st),
            gamma_eff=gamma_eff,
            converged=True,
        )

    rate = frame.relaxation_rate
    if rate > 0.0:
        saturation = 4.0 * frame.dephasing * kappa ** 2 * lambda_abs ** 2 / rate
    else:
        saturation = math.inf

    def update(s_z_bar: float) -> float:
        modulus_sq = abs(_omega_r_eff_tilde(transition, detuning, gamma_eff, kappa, s_z_bar)) ** 2
        if math.isinf(saturation):
            return 0.0
        denominator = modulus_sq + saturation
        return s_z_st * modulus_sq / denominator if denominator > 0.0 else 0.0

    s_z_bar = s_z_st
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        proposal = (1.0 - damping) * s_z_bar + damping * update(s_z_bar)
        step = abs(proposal - s_z_bar)
        s_z_bar = proposal
        if step <= tol:
            converged = True
            break

    if not converged:
        logger.warning(
            "Self-consistent imbalance not converged for |lambda|=%.4g after %d iterations",
            lambda_abs, iterations,
        )
    return SelfConsistentImbalance(
        s_z_bar=s_z_bar,
        omega_r_eff_tilde=_omega_r_eff_tilde(transition, detuning, gamma_eff, kappa, s_z_bar),
        gamma_eff=gamma_eff,
        converged=converged,
        iterations=iterations,
    )


def steady_report(transition: str, frame: DressedFrame) -> ThresholdReport:
    """
    Steady-state lasing analysis of one transition.

    |λ|² = (2w+Γ₊)(S_z^(st) − S_z^(thr))/4Γ_c for 1→2 and
    (2w+Γ₊)(S_z^(thr) − S_z^(st))/4Γ_c for 2→1, clipped at zero; the
    transition lases exactly when the clipped value is positive.

    Raises:
    -------
    DomainError
        If the effective coupling or the cavity decay rate vanishes.
    """
    s_z_thr, mu = threshold(transition, frame)
    gamma_cav = frame.params.gamma_cav
    if gamma_cav <= 0.0:
        raise DomainError("Steady-state intensity needs gamma_cav > 0")

    if transition == ONE_TWO:
        excess = frame.s_z_st - s_z_thr
    else:
        excess = s_z_thr - frame.s_z_st
    lambda_sq = max(0.0, frame.relaxation_rate * excess / (4.0 * gamma_cav))

    return ThresholdReport(
        transition=transition,
        s_z_thr=s_z_thr,
        s_z_st=frame.s_z_st,
        mu=mu,
        lambda_sq=lambda_sq,
        lasing=lambda_sq > 0.0,
        mu_branches=complex_branches(transition, frame, s_z_thr),
    )


def thresholdless_order_parameter(frame: DressedFrame) -> float:
    """Vanishing-threshold estimate |λ| ≈ sqrt(Γ|S_z^(st)|/4Γ_c)."""
    if frame.params.gamma_cav <= 0.0:
        raise DomainError("Order parameter estimate needs gamma_cav > 0")
    return math.sqrt(frame.params.gamma_spont * abs(frame.s_z_st) / (4.0 * frame.params.gamma_cav))


def report_to_dict(report: ThresholdReport) -> Dict[str, Any]:
    """Plain mapping with the report's field names; complex values become [re, im]."""
    return {
        "transition": report.transition,
        "s_z_thr": report.s_z_thr,
        "s_z_st": report.s_z_st,
        "mu": report.mu,
        "lambda_sq": report.lambda_sq,
        "lasing": report.lasing,
        "mu_branches": [[value.real, value.imag] for value in report.mu_branches],
    }


def report_to_json(report: ThresholdReport) -> str:
    return json.dumps(report_to_dict(report), indent=2)
