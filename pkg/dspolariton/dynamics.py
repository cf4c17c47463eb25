# dynamics.py
import logging
import math

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from scipy.integrate import RK45, OdeSolution

from dspolariton.ds_core import DressedFrame
from dspolariton.exceptions import IntegrationError, ParameterError
from dspolariton.steady_state import threshold
from dspolariton.transitions import ONE_TWO, check_transition
from dspolariton.utils import write_csv

logger = logging.getLogger(__name__)

__all__ = [
    "BlochState",
    "IntegrationStats",
    "Trajectory",
    "DEFAULT_INITIAL_STATE",
    "rhs_12",
    "rhs_21",
    "integrate",
    "analytic_sz_relaxation",
    "detect_lasing_onset",
    "rho_rate",
    "steady_tail",
    "integration_time_hint",
    "trajectory_to_csv",
]

DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-10
DEFAULT_OUTPUT_POINTS = 2000

# RK45 evaluates the right-hand side six times per attempted step.
_EVALS_PER_ATTEMPT = 6

TRAJECTORY_HEADER = ("t_ps", "re_lambda", "im_lambda", "abs_lambda", "re_S", "im_S", "abs_S", "s_z")

Derivative = Tuple[complex, complex, float]


@dataclass(frozen=True)
class BlochState:
    """Cavity amplitude λ, collective polarization S and imbalance S_z at time t (ps)."""

    lambda_: complex
    s: complex
    s_z: float
    t: float = 0.0


DEFAULT_INITIAL_STATE = BlochState(lambda_=0.05 + 0.0j, s=0.0j, s_z=-1.0, t=0.0)


@dataclass(frozen=True)
class IntegrationStats:
    n_steps: int
    n_rejected: int
    nfev: int
    final_error_estimate: float


@dataclass
class Trajectory:
    """
    Sampled solution of one transition's equations of motion.

    Samples are stored column-wise; `samples` rebuilds BlochState objects.
    Amplitudes are always in the laboratory frame, whatever frame the
    integration used.
    """

    t: np.ndarray
    lambda_: np.ndarray
    s: np.ndarray
    s_z: np.ndarray
    transition: str
    frame: DressedFrame
    stats: IntegrationStats
    frame_frequency: float = 0.0

    def __len__(self) -> int:
        return len(self.t)

    def state_at(self, index: int) -> BlochState:
        return BlochState(
            lambda_=complex(self.lambda_[index]),
            s=complex(self.s[index]),
            s_z=float(self.s_z[index]),
            t=float(self.t[index]),
        )

    @property
    def samples(self) -> List[BlochState]:
        return [self.state_at(i) for i in range(len(self))]

    @property
    def final_state(self) -> BlochState:
        return self.state_at(len(self) - 1)


def _derivatives_12(
    lam: complex,
    s: complex,
    s_z: float,
    frame: DressedFrame,
    frame_frequency: float,
) -> Derivative:
    params = frame.params
    kappa = frame.kappa_12
    photon = complex(params.gamma_cav, params.delta_cav - frame_frequency)
    matter = complex(frame.dephasing, frame.omega_rabi_shifted - frame_frequency)
    d_lambda = -photon * lam - 1j * kappa * s
    d_s = -matter * s + 1j * kappa * lam * s_z
    exchange = 4.0 * kappa * (s.conjugate() * lam).imag
    d_s_z = -frame.relaxation_rate * (s_z - frame.s_z_st) + exchange
    return d_lambda, d_s, d_s_z


def _derivatives_21(
    lam: complex,
    s: complex,
    s_z: float,
    frame: DressedFrame,
    frame_frequency: float,
) -> Derivative:
    params = frame.params
    kappa = frame.kappa_21
    photon = complex(params.gamma_cav, params.delta_cav - frame_frequency)
    matter = complex(frame.dephasing, frame.omega_rabi_shifted + frame_frequency)
    d_lambda = -photon * lam + 1j * kappa * s.conjugate()
    d_s = -matter * s - 1j * kappa * lam.conjugate() * s_z
    exchange = 4.0 * kappa * (s * lam).imag
    d_s_z = -frame.relaxation_rate * (s_z - frame.s_z_st) + exchange
    return d_lambda, d_s, d_s_z


def rhs_12(state: BlochState, frame: DressedFrame, frame_frequency: float = 0.0) -> Derivative:
    """
    Time derivatives (λ̇, Ṡ, Ṡ_z) for the 1→2 transition.

    λ̇ = −(iδ_c + Γ_c)λ − iκ₁₂S
    Ṡ = −(i(Ω_R + η₁) + Γ₁ + γ₁)S + iκ₁₂λS_z
    Ṡ_z = −(2w + Γ₊)(S_z − S_z^(st)) + 2iκ₁₂(Sλ* − S*λ)

    With a nonzero `frame_frequency` ω the amplitudes are λe^{iωt} and
    Se^{iωt}, which shifts δ_c and Ω_R down by ω.
    """
    return _derivatives_12(state.lambda_, state.s, state.s_z, frame, frame_frequency)


def rhs_21(state: BlochState, frame: DressedFrame, frame_frequency: float = 0.0) -> Derivative:
    """
    Time derivatives (λ̇, Ṡ, Ṡ_z) for the 2→1 transition.

    λ̇ = −(iδ_c + Γ_c)λ + iκ₂₁S*
    Ṡ = −(i(Ω_R + η₁) + Γ₁ + γ₁)S − iκ₂₁λ*S_z
    Ṡ_z = −(2w + Γ₊)(S_z − S_z^(st)) + 2iκ₂₁(S*λ* − Sλ)

    With a nonzero `frame_frequency` ω the amplitudes are λe^{iωt} and
    Se^{−iωt}, so δ_c is shifted down and Ω_R up by ω.
    """
    return _derivatives_21(state.lambda_, state.s, state.s_z, frame, frame_frequency)


def _vector_field(transition: str, frame: DressedFrame, frame_frequency: float):
    derivatives = _derivatives_12 if transition == ONE_TWO else _derivatives_21

    def fun(t: float, y: np.ndarray) -> np.ndarray:
        d_lambda, d_s, d_s_z = derivatives(
            complex(y[0], y[1]), complex(y[2], y[3]), y[4], frame, frame_frequency
        )
        return np.array([d_lambda.real, d_lambda.imag, d_s.real, d_s.imag, d_s_z])

    return fun


def _polarization_sign(transition: str) -> int:
    # S co-rotates with λ for 1→2 and counter-rotates for 2→1.
    return 1 if transition == ONE_TWO else -1


def _to_rotating(state: BlochState, transition: str, frequency: float) -> np.ndarray:
    phase = frequency * state.t
    lam = state.lambda_ * np.exp(1j * phase)
    s = state.s * np.exp(1j * _polarization_sign(transition) * phase)
    return np.array([lam.real, lam.imag, s.real, s.imag, state.s_z], dtype=float)


def _error_norm(solver: RK45, y_old: np.ndarray, rel_tol: float, abs_tol: float) -> float:
    """RMS of the embedded error estimate of the last accepted step, in tolerance units."""
    if solver.h_previous is None:
        return 0.0
    error = solver.h_previous * (solver.K.T @ solver.E)
    scale = abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(solver.y))
    return float(np.sqrt(np.mean((error / scale) ** 2)))


def integrate(
    transition: str,
    initial: BlochState,
    frame: DressedFrame,
    t_end: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    n_output: int = DEFAULT_OUTPUT_POINTS,
    rotating_frame: bool = True,
    frame_frequency: Optional[float] = None,
) -> Trajectory:
    """
    Integrates the equations of motion of one transition.

    Parameters:
    ----------
    transition : str
        ONE_TWO or TWO_ONE.
    initial : BlochState
        State at `initial.t`, laboratory frame.
    frame : DressedFrame
        Dressed frame of the run.
    t_end : float
        Final time in ps, larger than `initial.t`.
    rel_tol, abs_tol : float
        Local error tolerances of the 5(4) Runge-Kutta pair.
    n_output : int
        Number of points of the uniform output grid added to the solver steps.
    rotating_frame : bool
        Integrate in a frame rotating at `frame_frequency` (default δ_c).
    frame_frequency : float, optional
        Rotation frequency in rad/ps; ignored when `rotating_frame` is False.

    Returns:
    -------
    Trajectory
        Samples at every accepted step plus the output grid, strictly
        increasing in time, starting with `initial`.

    Raises:
    -------
    ParameterError
        If t_end ≤ initial.t, a tolerance is not positive or n_output < 2.
    IntegrationError
        On step-size underflow or a non-finite state, with the failing time.
    """
    check_transition(transition)
    if not t_end > initial.t:
        raise ParameterError(f"t_end ({t_end} ps) must be larger than the initial time ({initial.t} ps)")
    if rel_tol <= 0.0 or abs_tol <= 0.0:
        raise ParameterError("Integration tolerances must be positive")
    if n_output < 2:
        raise ParameterError(f"n_output must be at least 2, got {n_output}")

    if not rotating_frame:
        frequency = 0.0
    elif frame_frequency is None:
        frequency = frame.params.delta_cav
    else:
        frequency = frame_frequency

    y0 = _to_rotating(initial, transition, frequency)
    solver = RK45(
        _vector_field(transition, frame, frequency),
        initial.t,
        y0,
        t_end,
        rtol=rel_tol,
        atol=abs_tol,
    )

    step_times = [initial.t]
    step_values = [y0]
    interpolants = []
    n_rejected = 0
    error_estimate = 0.0
    while solver.status == "running":
        y_old = solver.y.copy()
        nfev_before = solver.nfev
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"{transition} integration failed: {message}", time=solver.t)
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError(f"{transition} integration produced a non-finite state", time=solver.t)
        attempts = (solver.nfev - nfev_before) // _EVALS_PER_ATTEMPT
        n_rejected += max(0, attempts - 1)
        error_estimate = _error_norm(solver, y_old, rel_tol, abs_tol)
        interpolants.append(solver.dense_output())
        step_times.append(solver.t)
        step_values.append(solver.y.copy())

    steps = np.asarray(step_times)
    times = np.union1d(steps, np.linspace(initial.t, t_end, n_output))
    values = OdeSolution(steps, interpolants)(times)
    values[:, np.searchsorted(times, steps)] = np.column_stack(step_values)

    phase = frequency * times
    lam = (values[0] + 1j * values[1]) * np.exp(-1j * phase)
    s = (values[2] + 1j * values[3]) * np.exp(-1j * _polarization_sign(transition) * phase)
    lam[0] = initial.lambda_
    s[0] = initial.s

    stats = IntegrationStats(
        n_steps=len(steps) - 1,
        n_rejected=n_rejected,
        nfev=solver.nfev,
        final_error_estimate=error_estimate,
    )
    logger.info(
        "integrated %s to %.6g ps: %d steps, %d rejected, %d evaluations",
        transition, t_end, stats.n_steps, stats.n_rejected, stats.nfev,
    )
    return Trajectory(
        t=times,
        lambda_=lam,
        s=s,
        s_z=values[4],
        transition=transition,
        frame=frame,
        stats=stats,
        frame_frequency=frequency,
    )


def analytic_sz_relaxation(
    t: Union[float, np.ndarray],
    s_z0: float,
    frame: DressedFrame,
) -> Union[float, np.ndarray]:
    """Cavity-free relaxation S_z(t) = S_z^(st) + (s_z0 − S_z^(st))e^{−(2w+Γ₊)t}."""
    decay = np.exp(-frame.relaxation_rate * np.asarray(t, dtype=float))
    value = frame.s_z_st + (s_z0 - frame.s_z_st) * decay
    return float(value) if np.ndim(value) == 0 else value


def detect_lasing_onset(
    traj: Trajectory,
    threshold: float,
    direction: int = 1,
) -> Optional[float]:
    """
    First time S_z reaches `threshold`, by linear interpolation between samples.

    `direction = 1` looks for S_z rising to the threshold (1→2 inversion),
    `direction = -1` for S_z falling to it. A trajectory that starts on the
    lasing side returns its initial time; None if the threshold is never reached.
    """
    if len(traj) == 0:
        raise ParameterError("Cannot detect lasing onset on an empty trajectory")
    if direction not in (1, -1):
        raise ParameterError(f"direction must be 1 or -1, got {direction}")

    excess = direction * (traj.s_z - threshold)
    reached = np.flatnonzero(excess >= 0.0)
    if reached.size == 0:
        return None
    index = int(reached[0])
    if index == 0:
        return float(traj.t[0])

    t0, t1 = traj.t[index - 1], traj.t[index]
    e0, e1 = excess[index - 1], excess[index]
    return float(t0 + (t1 - t0) * (-e0) / (e1 - e0))


def rho_rate(state: BlochState, frame: DressedFrame) -> float:
    """Rate of change of the excitation density, −½(2w+Γ₊)(S_z − S_z^(st)) − 2Γ_c|λ|²."""
    return (
        -0.5 * frame.relaxation_rate * (state.s_z - frame.s_z_st)
        - 2.0 * frame.params.gamma_cav * abs(state.lambda_) ** 2
    )


def steady_tail(traj: Trajectory, fraction: float = 0.05) -> Tuple[float, float]:
    """
    Mean |λ|² and S_z over the last `fraction` of the run.

    Averaging removes the residual relaxation oscillations around the fixed point.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    start = traj.t[-1] - fraction * (traj.t[-1] - traj.t[0])
    mask = traj.t >= start
    return float(np.mean(np.abs(traj.lambda_[mask]) ** 2)), float(np.mean(traj.s_z[mask]))


def trajectory_to_csv(traj: Trajectory, path: str) -> str:
    """Writes t_ps, re_lambda, im_lambda, abs_lambda, re_S, im_S, abs_S, s_z."""
    return write_csv(
        path,
        TRAJECTORY_HEADER,
        [
            traj.t,
            traj.lambda_.real,
            traj.lambda_.imag,
            np.abs(traj.lambda_),
            traj.s.real,
            traj.s.imag,
            np.abs(traj.s),
            traj.s_z,
        ],
    )


def integration_time_hint(frame: DressedFrame, transition: str, s_z0: float) -> float:
    """
    A run length (ps) long enough to reach the steady state from S_z(0) = s_z0.

    The cavity-free time to reach threshold plus 60/((2w+Γ₊)·max(p, 1)),
    p being the relative excess of S_z^(st) over S_z^(thr).
    """
    rate = frame.relaxation_rate
    if rate <= 0.0:
        raise ParameterError("No relaxation channel: cannot estimate an integration time")
    s_z_thr, _ = threshold(transition, frame)
    onset = 0.0
    numerator = frame.s_z_st - s_z_thr
    denominator = frame.s_z_st - s_z0
    if denominator != 0.0 and 0.0 < numerator / denominator < 1.0:
        onset = -math.log(numerator / denominator) / rate
    pump = abs(frame.s_z_st - s_z_thr) / max(abs(s_z_thr), 1e-12)
    return onset + 60.0 / (rate * max(pump, 1.0))
