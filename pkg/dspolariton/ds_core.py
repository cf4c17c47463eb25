# ds_core.py
import logging
import math

from dataclasses import dataclass
from typing import Tuple

from dspolariton.exceptions import DomainError, ParameterError
from dspolariton.transitions import ONE_TWO, check_transition

logger = logging.getLogger(__name__)

__all__ = [
    "HBAR_OVER_KB",
    "TWO_PI",
    "THZ",
    "GHZ",
    "MHZ",
    "RAD_PER_NS",
    "SystemParams",
    "DressedFrame",
    "ConditionFlags",
    "build_dressed_frame",
    "equilibrium_imbalance",
    "stationary_imbalance",
    "perturbative_couplings",
    "thermalization_time",
    "check_conditions",
]

# Internal units: angular frequency in rad/ps, time in ps, temperature in K.
HBAR_OVER_KB = 7.6382  # K * ps
TWO_PI = 2.0 * math.pi

# Multiply a value given in the named unit to obtain rad/ps.
THZ = TWO_PI
GHZ = TWO_PI * 1e-3
MHZ = TWO_PI * 1e-6
RAD_PER_NS = 1e-3

DEFAULT_MARGIN = 0.1


@dataclass(frozen=True)
class SystemParams:
    """
    Raw physical inputs of the driven atomic gas in the cavity.

    All rates and frequencies are angular frequencies in rad/ps; temperature
    is in kelvin. `delta` and `delta_cav` are signed.
    """

    omega: float
    delta: float
    kappa: float
    gamma_coll: float
    gamma_spont: float
    gamma_cav: float
    delta_cav: float
    temperature: float
    eta_coll: float = 0.0

    def replace(self, **changes) -> "SystemParams":
        """Returns a copy with the given fields changed."""
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True)
class DressedFrame:
    """
    Dressed-state quantities derived from a SystemParams.

    `omega_rabi` is the bare generalized Rabi frequency; the collisional
    shift `eta_1` is folded in through `omega_rabi_shifted`, which is what
    the cavity detuning `delta_eff` and the equations of motion use.
    """

    params: SystemParams
    sin_theta: float
    cos_theta: float
    omega_rabi: float
    kappa_12: float
    kappa_21: float
    w: float
    gamma_plus: float
    gamma_minus: float
    gamma_1: float
    eta_1: float
    cap_gamma_1: float
    s_z_eq: float
    s_z_st: float
    delta_eff: float

    @property
    def omega_rabi_shifted(self) -> float:
        return self.omega_rabi + self.eta_1

    @property
    def dephasing(self) -> float:
        """Total polarization decay rate Γ₁ + γ₁."""
        return self.cap_gamma_1 + self.gamma_1

    @property
    def relaxation_rate(self) -> float:
        """Cavity-free relaxation rate 2w + Γ₊ of the population imbalance."""
        return 2.0 * self.w + self.gamma_plus

    def coupling(self, transition: str) -> float:
        check_transition(transition)
        return self.kappa_12 if transition == ONE_TWO else self.kappa_21


@dataclass(frozen=True)
class ConditionFlags:
    thermalized: bool
    strong_coupling_12: bool
    strong_coupling_21: bool
    thresholdless_12: bool
    thresholdless_21: bool


def _validate_params(params: SystemParams) -> None:
    for name in params.__dataclass_fields__:
        value = getattr(params, name)
        if not math.isfinite(value):
            raise ParameterError(f"Parameter '{name}' must be finite, got {value}")
    if params.temperature <= 0.0:
        raise ParameterError(f"Temperature must be positive, got {params.temperature} K")
    if params.omega <= 0.0:
        raise ParameterError(f"Rabi frequency must be positive, got {params.omega}")
    for name in ("kappa", "gamma_coll", "gamma_spont", "gamma_cav"):
        if getattr(params, name) < 0.0:
            raise ParameterError(f"Parameter '{name}' must be non-negative")


def _mixing(omega: float, delta: float) -> Tuple[float, float, float]:
    """
    Returns (sin²θ, cos²θ, Ω_R).

    The small amplitude is written as Ω²/(2Ω_R(Ω_R + |δ|)) so that it keeps
    full relative precision far from resonance, and so that δ → −δ swaps the
    two values bit for bit.
    """
    omega_rabi = math.hypot(delta, omega)
    large = (omega_rabi + abs(delta)) / (2.0 * omega_rabi)
    small = omega * omega / (2.0 * omega_rabi * (omega_rabi + abs(delta)))
    if delta >= 0.0:
        return large, small, omega_rabi
    return small, large, omega_rabi


def equilibrium_imbalance(omega_rabi: float, temperature: float) -> float:
    """Boltzmann imbalance S_z^(eq) = −tanh(ħΩ_R / 2k_BT)."""
    if temperature <= 0.0:
        raise ParameterError(f"Temperature must be positive, got {temperature} K")
    return -math.tanh(HBAR_OVER_KB * omega_rabi / (2.0 * temperature))


def stationary_imbalance(w: float, gamma_plus: float, gamma_minus: float, s_z_eq: float) -> float:
    """
    Cavity-free stationary imbalance S_z^(st) = (2w S_z^(eq) + Γ₋)/(2w + Γ₊).

    With no relaxation channel at all (w = Γ₊ = 0) the imbalance keeps its
    equilibrium value.
    """
    denominator = 2.0 * w + gamma_plus
    if denominator == 0.0:
        return s_z_eq
    return (2.0 * w * s_z_eq + gamma_minus) / denominator


def build_dressed_frame(params: SystemParams) -> DressedFrame:
    """
    Builds the dressed-state frame and all rate coefficients.

    Parameters:
    ----------
    params : SystemParams
        Physical inputs in rad/ps and K.

    Returns:
    -------
    DressedFrame
        Mixing amplitudes, effective couplings κ₁₂ = κcos²θ and κ₂₁ = κsin²θ,
        collisional and radiative coefficients, the equilibrium and
        stationary imbalances and the cavity detuning Δ = δ_c − Ω_R.

    Raises:
    -------
    ParameterError
        If a parameter is not finite, the temperature or Ω is not positive,
        or a rate is negative.
    """
    _validate_params(params)

    sin_sq, cos_sq, omega_rabi = _mixing(params.omega, params.delta)
    sin_sq_2theta = (params.omega / omega_rabi) ** 2
    cos_2theta = cos_sq - sin_sq
    quartic_sum = 1.0 - 0.5 * sin_sq_2theta  # sin⁴θ + cos⁴θ
    quartic_diff = sin_sq - cos_sq  # sin⁴θ − cos⁴θ

    w = 0.5 * params.gamma_coll * sin_sq_2theta
    gamma_plus = params.gamma_spont * quartic_sum
    gamma_minus = params.gamma_spont * quartic_diff
    gamma_1 = params.gamma_coll * quartic_sum
    eta_1 = params.eta_coll * cos_2theta
    cap_gamma_1 = 0.25 * params.gamma_spont * (2.0 + sin_sq_2theta)

    s_z_eq = equilibrium_imbalance(omega_rabi, params.temperature)
    s_z_st = stationary_imbalance(w, gamma_plus, gamma_minus, s_z_eq)

    frame = DressedFrame(
        params=params,
        sin_theta=math.sqrt(sin_sq),
        cos_theta=math.sqrt(cos_sq),
        omega_rabi=omega_rabi,
        kappa_12=params.kappa * cos_sq,
        kappa_21=params.kappa * sin_sq,
        w=w,
        gamma_plus=gamma_plus,
        gamma_minus=gamma_minus,
        gamma_1=gamma_1,
        eta_1=eta_1,
        cap_gamma_1=cap_gamma_1,
        s_z_eq=s_z_eq,
        s_z_st=s_z_st,
        delta_eff=params.delta_cav - (omega_rabi + eta_1),
    )
    logger.debug(
        "frame: Omega_R=%.6g rad/ps kappa_12=%.6g kappa_21=%.6g S_z_st=%.6g",
        omega_rabi, frame.kappa_12, frame.kappa_21, s_z_st,
    )
    return frame


def perturbative_couplings(params: SystemParams) -> Tuple[float, float]:
    """
    Far-detuned approximations of (κ₁₂, κ₂₁), valid for |δ| ≫ Ω.

    The coupling of the transition that follows the bare atomic line tends
    to κ(1 − Ω²/4δ²), the other one vanishes as κΩ²/4δ².
    """
    if params.delta == 0.0:
        raise DomainError("Perturbative couplings need a nonzero detuning")
    ratio = params.omega ** 2 / (4.0 * params.delta ** 2)
    strong = params.kappa * (1.0 - ratio)
    weak = params.kappa * ratio
    if params.delta < 0.0:
        return strong, weak
    return weak, strong


def thermalization_time(params: SystemParams) -> float:
    """
    Estimated dressed-state thermalization time T_therm = 2πδ²/(γΩ²) in ps.

    Raises:
    -------
    DomainError
        If γ or Ω vanish, where the estimate is infinite.
    """
    if params.gamma_coll <= 0.0 or params.omega <= 0.0:
        raise DomainError("Thermalization time needs gamma_coll > 0 and omega > 0")
    return TWO_PI * params.delta ** 2 / (params.gamma_coll * params.omega ** 2)


def check_conditions(
    frame: DressedFrame,
    params: SystemParams,
    margin: float = DEFAULT_MARGIN,
) -> ConditionFlags:
    """
    Evaluates the validity conditions of the model.

    A strong inequality a ≫ b is read as b ≤ margin·a, so margin = 1 draws
    the boundaries at equality.

    Parameters:
    ----------
    frame : DressedFrame
        Frame built from `params`.
    params : SystemParams
        Physical inputs.
    margin : float
        Numeric reading of "≫", in (0, 1].

    Returns:
    -------
    ConditionFlags
        thermalized: Γ/γ ≤ margin·Ω²/δ² and Ω²/δ² ≤ margin.
        strong_coupling_12/21: max{γ, Γ, Γ_c} ≤ margin·κ₁₂ (κ₂₁).
        thresholdless_12/21: sqrt(γΓ_c) ≤ margin·κ₁₂ (κ₂₁).
    """
    if not 0.0 < margin <= 1.0:
        raise ParameterError(f"margin must be in (0, 1], got {margin}")

    omega_sq = params.omega ** 2
    delta_sq = params.delta ** 2
    # Multiplied out; holds at γ = 0 and δ = 0.
    thermalized = (
        params.gamma_coll > 0.0
        and params.gamma_spont * delta_sq <= margin * omega_sq * params.gamma_coll
        and omega_sq <= margin * delta_sq
    )
    loss = max(params.gamma_coll, params.gamma_spont, params.gamma_cav)
    threshold_scale = math.sqrt(params.gamma_coll * params.gamma_cav)

    return ConditionFlags(
        thermalized=bool(thermalized),
        strong_coupling_12=loss <= margin * frame.kappa_12,
        strong_coupling_21=loss <= margin * frame.kappa_21,
        thresholdless_12=threshold_scale <= margin * frame.kappa_12,
        thresholdless_21=threshold_scale <= margin * frame.kappa_21,
    )
