# equilibrium.py
import logging
import math

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import bisect

from dspolariton.ds_core import HBAR_OVER_KB, DressedFrame
from dspolariton.exceptions import DomainError, ParameterError

logger = logging.getLogger(__name__)

__all__ = [
    "EquilibriumSolution",
    "PolaritonBranches",
    "hopfield_coefficients",
    "normal_branches",
    "critical_temperature",
    "exact_critical_temperature",
    "normal_state_mu",
    "solve_gap",
    "lambda_infinity",
    "order_parameter_closed_form",
    "polariton_density",
    "excitation_density",
]

LOWER_BRANCH = "lower"
UPPER_BRANCH = "upper"

DEFAULT_GAP_TOL = 1e-10
MAX_BISECTION_STEPS = 200
ROOT_EPSILON = 1e-8
# Points used to look for sign changes of the gap residual before bisecting.
SCAN_POINTS = 65


@dataclass(frozen=True)
class EquilibriumSolution:
    lambda_: float
    mu: float
    omega_r_tilde: float
    omega_c_tilde: float
    theta_big: float
    rho: float
    converged: bool
    iterations: int
    residual: float
    root_count: int = 0


@dataclass(frozen=True)
class PolaritonBranches:
    mu_upper: float
    mu_lower: float
    hopfield_x: float
    hopfield_c: float


def _check_density(rho: float) -> None:
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"Polariton density must lie in (0, 1), got {rho}")


def hopfield_coefficients(delta_eff: float, kappa_12: float) -> Tuple[float, float]:
    """
    Hopfield amplitudes (X, C) of the photon and matter parts of the polaritons.

    Parameters:
    ----------
    delta_eff : float
        Cavity detuning Δ from the blue sideband [rad/ps].
    kappa_12 : float
        Effective coupling [rad/ps], must be positive.

    Returns:
    -------
    Tuple[float, float]
        X = sqrt((1 + Δ/sqrt(4κ² + Δ²))/2) and C = sqrt(1 − X²).
    """
    if kappa_12 <= 0.0:
        raise DomainError(f"Hopfield coefficients need kappa_12 > 0, got {kappa_12}")
    ratio = delta_eff / math.sqrt(4.0 * kappa_12 ** 2 + delta_eff ** 2)
    # Both written from the ratio so that X² + C² = 1 to rounding.
    return math.sqrt(0.5 * (1.0 + ratio)), math.sqrt(0.5 * (1.0 - ratio))


def normal_branches(rho: float, frame: DressedFrame) -> PolaritonBranches:
    """
    Upper and lower polariton frequencies μ₁,₂ = (δ_c + Ω_R ± Ω_R,eff)/2 at λ = 0.

    Raises:
    -------
    DomainError
        If Δ² − 8κ₁₂²(ρ − 1/2) is negative.
    """
    delta_eff = frame.delta_eff
    radicand = delta_eff ** 2 - 8.0 * frame.kappa_12 ** 2 * (rho - 0.5)
    if radicand < 0.0:
        raise DomainError(f"Complex Omega_R,eff for rho = {rho}: radicand {radicand:.6g}")
    omega_r_eff = math.sqrt(radicand)
    centre = frame.params.delta_cav + frame.omega_rabi_shifted
    hopfield_x, hopfield_c = hopfield_coefficients(delta_eff, frame.kappa_12)
    return PolaritonBranches(
        mu_upper=0.5 * (centre + omega_r_eff),
        mu_lower=0.5 * (centre - omega_r_eff),
        hopfield_x=hopfield_x,
        hopfield_c=hopfield_c,
    )


def critical_temperature(rho: float, delta_eff: float) -> float:
    """
    Critical temperature T_C = ħΔ / (2k_B atanh(2ρ − 1)) in kelvin.

    This is the |Δ| ≫ κ₁₂ form; see `exact_critical_temperature` for the
    temperature at which the gap equation loses its positive root.

    At Δ = 0 the transition temperature goes to zero and 0.0 is returned.

    Raises:
    -------
    DomainError
        For ρ = 1/2, or when Δ and 2ρ − 1 have opposite signs (no transition).
    """
    _check_density(rho)
    if rho == 0.5:
        raise DomainError("Critical temperature is undefined at rho = 1/2")
    if delta_eff == 0.0:
        return 0.0
    t_c = HBAR_OVER_KB * delta_eff / (2.0 * math.atanh(2.0 * rho - 1.0))
    if t_c <= 0.0:
        raise DomainError(
            f"No transition for delta_eff = {delta_eff:.6g} rad/ps at rho = {rho}"
        )
    return t_c


def _omega_r_tilde_normal(rho: float, frame: DressedFrame) -> float:
    # Lower-branch Ω̃_R at λ = 0, written without cancellation for Δ > 0.
    delta_eff = frame.delta_eff
    root = math.sqrt(delta_eff ** 2 + 8.0 * frame.kappa_12 ** 2 * (0.5 - rho))
    if delta_eff <= 0.0:
        return 0.5 * (root - delta_eff)
    return 4.0 * frame.kappa_12 ** 2 * (0.5 - rho) / (root + delta_eff)


def exact_critical_temperature(rho: float, frame: DressedFrame) -> float:
    """
    Temperature at which the positive root of the gap equation disappears.

    At λ → 0 the gap and density equations give Ω̃_cΘ = κ₁₂²(1 − 2ρ), so
    the root vanishes at T* = ħΩ̃_R(0) / (2k_B atanh(1 − 2ρ)). For |Δ| ≫ κ₁₂
    this reduces to `critical_temperature`.
    """
    _check_density(rho)
    if rho >= 0.5:
        raise DomainError(f"The lower branch has no transition for rho = {rho} >= 1/2")
    if frame.kappa_12 <= 0.0:
        raise DomainError("No transition without atom-cavity coupling")
    return (
        HBAR_OVER_KB * _omega_r_tilde_normal(rho, frame)
        / (2.0 * math.atanh(1.0 - 2.0 * rho))
    )


def normal_state_mu(rho: float, frame: DressedFrame, temperature: float) -> float:
    """Chemical potential of the λ = 0 state from the density equation."""
    _check_density(rho)
    omega_r_tilde = 2.0 * temperature / HBAR_OVER_KB * math.atanh(1.0 - 2.0 * rho)
    return frame.omega_rabi_shifted - omega_r_tilde


def _branch_frequencies(
    lam: float,
    rho: float,
    frame: DressedFrame,
    branch: str,
) -> Tuple[float, float, float]:
    """Returns (Ω̃_R, Ω̃_c, Θ) with μ eliminated through the branch choice."""
    delta_eff = frame.delta_eff
    kappa_sq = frame.kappa_12 ** 2
    excess = rho - lam ** 2 - 0.5
    radicand = delta_eff ** 2 - 8.0 * kappa_sq * excess
    if radicand < 0.0:
        raise DomainError(
            f"Complex Omega_R,eff at lambda = {lam:.6g}, rho = {rho}: radicand {radicand:.6g}"
        )
    root = math.sqrt(radicand)

    if branch == UPPER_BRANCH:
        omega_c_tilde = 0.5 * (delta_eff - root)
        omega_r_tilde = 0.5 * (-delta_eff - root)
    else:
        # Ω̃_R·Ω̃_c = −2κ²(ρ − λ² − 1/2); the larger factor is formed directly.
        product = -2.0 * kappa_sq * excess
        if delta_eff < 0.0:
            omega_r_tilde = 0.5 * (root - delta_eff)
            omega_c_tilde = product / omega_r_tilde
        else:
            omega_c_tilde = 0.5 * (root + delta_eff)
            omega_r_tilde = product / omega_c_tilde if omega_c_tilde != 0.0 else 0.0

    theta_big = math.sqrt(omega_r_tilde ** 2 + 4.0 * kappa_sq * lam ** 2)
    return omega_r_tilde, omega_c_tilde, theta_big


def _thermal_ratio(theta_big: float, temperature: float, zero_temperature: bool) -> float:
    """tanh(ħΘ/2k_BT)/Θ, with tanh replaced by 1 in the zero-temperature limit."""
    if zero_temperature:
        return 1.0 / theta_big if theta_big > 0.0 else math.inf
    scale = HBAR_OVER_KB / (2.0 * temperature)
    if theta_big == 0.0:
        return scale
    return math.tanh(scale * theta_big) / theta_big


def _residuals(
    lam: float,
    rho: float,
    frame: DressedFrame,
    temperature: float,
    zero_temperature: bool,
    branch: str,
) -> Tuple[float, float]:
    """Returns (gap residual divided by λ, density residual)."""
    omega_r_tilde, omega_c_tilde, theta_big = _branch_frequencies(lam, rho, frame, branch)
    ratio = _thermal_ratio(theta_big, temperature, zero_temperature)
    gap = omega_c_tilde - frame.kappa_12 ** 2 * ratio
    density = rho - (0.5 + lam ** 2 - 0.5 * omega_r_tilde * ratio)
    return gap, density


def solve_gap(
    rho: float,
    frame: DressedFrame,
    temperature: float,
    tol: float = DEFAULT_GAP_TOL,
    max_iter: int = MAX_BISECTION_STEPS,
    branch: str = LOWER_BRANCH,
    zero_temperature: bool = False,
) -> EquilibriumSolution:
    """
    Solves the gap and density equations for the order parameter λ ≥ 0.

    The chemical potential is eliminated through the branch frequencies
    Ω̃_R = (−Δ + Ω_R,eff)/2, Ω̃_c = (Δ + Ω_R,eff)/2 (lower branch), which
    makes the density equation hold whenever the reduced gap residual
    Ω̃_c − κ₁₂² tanh(ħΘ/2k_BT)/Θ vanishes. The residual is scanned on
    [ε, sqrt(ρ)] for sign changes and the bracket is refined by bisection;
    without a sign change the normal state λ = 0 is returned, with μ fixed by
    the density equation.

    Parameters:
    ----------
    rho : float
        Polariton density in (0, 1).
    frame : DressedFrame
        Dressed frame; only Δ, κ₁₂, δ_c and Ω_R enter.
    temperature : float
        Temperature [K]; ignored when `zero_temperature` is set.
    tol : float, optional
        Tolerance on the combined gap and density residuals.
    max_iter : int, optional
        Maximum number of bisection steps.
    branch : str, optional
        "lower" (default) or "upper" polariton branch.
    zero_temperature : bool, optional
        Replace tanh by 1, giving the saturated order parameter λ_∞.

    Returns:
    -------
    EquilibriumSolution
        With `converged = False` and the best residual if bisection stopped
        early. `root_count` reports how many sign changes were found.

    Raises:
    -------
    DomainError
        If Ω_R,eff becomes complex on the search interval.
    """
    _check_density(rho)
    if tol <= 0.0:
        raise ParameterError(f"Tolerance must be positive, got {tol}")
    if branch not in (LOWER_BRANCH, UPPER_BRANCH):
        raise ParameterError(f"Unknown polariton branch '{branch}'")
    if not zero_temperature and temperature <= 0.0:
        raise ParameterError(f"Temperature must be positive, got {temperature} K")

    def gap(lam: float) -> float:
        return _residuals(lam, rho, frame, temperature, zero_temperature, branch)[0]

    grid = np.linspace(ROOT_EPSILON, math.sqrt(rho), SCAN_POINTS)
    values = np.array([gap(lam) for lam in grid])
    signs = np.sign(values)
    brackets = np.flatnonzero(signs[:-1] * signs[1:] <= 0.0)

    if brackets.size == 0:
        return _normal_state(rho, frame, temperature, zero_temperature, branch)

    if brackets.size > 1:
        logger.warning(
            "Gap equation has %d sign changes for rho=%.4g, T=%.4g K; "
            "returning the largest root",
            brackets.size, rho, temperature,
        )
    index = int(brackets[-1])
    lam, iterations, converged = _bisect_root(gap, grid[index], grid[index + 1], max_iter)

    omega_r_tilde, omega_c_tilde, theta_big = _branch_frequencies(lam, rho, frame, branch)
    gap_residual, density_residual = _residuals(
        lam, rho, frame, temperature, zero_temperature, branch
    )
    residual = max(abs(gap_residual * lam), abs(density_residual))
    converged = converged and residual <= tol
    if not converged:
        logger.warning(
            "Gap equation did not converge: rho=%.4g T=%.4g K residual=%.3g after %d steps",
            rho, temperature, residual, iterations,
        )

    return EquilibriumSolution(
        lambda_=lam,
        mu=frame.params.delta_cav - omega_c_tilde,
        omega_r_tilde=omega_r_tilde,
        omega_c_tilde=omega_c_tilde,
        theta_big=theta_big,
        rho=rho,
        converged=converged,
        iterations=iterations,
        residual=residual,
        root_count=int(brackets.size),
    )


def _bisect_root(
    func: Callable[[float], float],
    low: float,
    high: float,
    max_iter: int,
) -> Tuple[float, int, bool]:
    if func(low) == 0.0:
        return float(low), 0, True
    if func(high) == 0.0:
        return float(high), 0, True
    root, result = bisect(
        func, low, high, xtol=1e-15, maxiter=max_iter, full_output=True, disp=False
    )
    return float(root), int(result.iterations), bool(result.converged)


def _normal_state(
    rho: float,
    frame: DressedFrame,
    temperature: float,
    zero_temperature: bool,
    branch: str,
) -> EquilibriumSolution:
    if zero_temperature:
        omega_r_tilde, omega_c_tilde, theta_big = _branch_frequencies(0.0, rho, frame, branch)
        mu = frame.params.delta_cav - omega_c_tilde
    else:
        mu = normal_state_mu(rho, frame, temperature)
        omega_r_tilde = frame.omega_rabi_shifted - mu
        omega_c_tilde = frame.params.delta_cav - mu
        theta_big = abs(omega_r_tilde)
    return EquilibriumSolution(
        lambda_=0.0,
        mu=mu,
        omega_r_tilde=omega_r_tilde,
        omega_c_tilde=omega_c_tilde,
        theta_big=theta_big,
        rho=rho,
        converged=True,
        iterations=0,
        residual=0.0,
        root_count=0,
    )


def lambda_infinity(rho: float, frame: DressedFrame, tol: float = DEFAULT_GAP_TOL) -> float:
    """Saturated ("zero temperature") order parameter; close to sqrt(ρ) for |Δ| ≫ κ₁₂."""
    return solve_gap(rho, frame, temperature=1.0, tol=tol, zero_temperature=True).lambda_


def order_parameter_closed_form(
    rho: float,
    delta_eff: float,
    temperature: float,
    lambda_inf: float,
) -> float:
    """
    Closed-form order parameter for |Δ| ≫ κ₁₂.

    λ = λ_∞ {1 − 1/[ρ(1 + (ρ⁻¹ − 1)^{ζ/ζ_c})]}^{1/2}, with ζ = ħΔ/k_BT and
    ζ_c = −ln(ρ⁻¹ − 1). Returns 0 in the normal state.
    """
    _check_density(rho)
    if rho == 0.5:
        raise DomainError("Closed-form order parameter is undefined at rho = 1/2")
    if temperature <= 0.0:
        raise ParameterError(f"Temperature must be positive, got {temperature} K")
    log_base = math.log(1.0 / rho - 1.0)
    zeta = HBAR_OVER_KB * delta_eff / temperature
    zeta_c = -log_base
    exponent = zeta / zeta_c * log_base
    power = math.inf if exponent > 700.0 else math.exp(exponent)
    braced = 1.0 - 1.0 / (rho * (1.0 + power))
    if braced <= 0.0:
        return 0.0
    return lambda_inf * math.sqrt(braced)


def polariton_density(lambda_abs: float, s_z: float) -> float:
    """Polariton density ρ = λ² + (S_z + 1)/2."""
    return lambda_abs ** 2 + 0.5 * (s_z + 1.0)


def excitation_density(lambda_abs: float, s_z: float) -> float:
    """Excitation density ρ_ex = ρ − 1/2."""
    return polariton_density(lambda_abs, s_z) - 0.5
