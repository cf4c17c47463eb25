# scans.py
import logging
import math
import os

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dspolariton.ds_core import (
    DEFAULT_MARGIN,
    DressedFrame,
    SystemParams,
    build_dressed_frame,
    check_conditions,
)
from dspolariton.equilibrium import (
    DEFAULT_GAP_TOL,
    critical_temperature,
    exact_critical_temperature,
    solve_gap,
)
from dspolariton.exceptions import DomainError, ParameterError
from dspolariton.steady_state import steady_report
from dspolariton.transitions import (
    CLASSIFICATION_CODES,
    EQUILIBRIUM,
    LASING_12,
    LASING_21,
    NORMAL,
    ONE_TWO,
    SUPERRADIANT_EQUILIBRIUM,
    SWEEP_TARGETS,
    TWO_ONE,
)
from dspolariton.utils import write_csv, write_text

logger = logging.getLogger(__name__)

__all__ = [
    "SweepSpec",
    "SweepTable",
    "PhaseCell",
    "PhaseDiagram",
    "caption_delta_eff",
    "sweep_stationary_imbalance",
    "sweep_stationary_family",
    "sweep_order_parameter",
    "sweep_equilibrium",
    "phase_diagram",
    "classification_matrix",
]

LINEAR = "linear"
LOG = "log"
SPACINGS = [LINEAR, LOG]

# Sweep axes and the CSV column name (with unit) of each.
AXIS_COLUMNS = {
    "delta": "delta_rad_per_ps",
    "delta_eff": "delta_eff_rad_per_ps",
    "delta_over_omega": "delta_over_omega",
    "gamma_coll": "gamma_coll_rad_per_ps",
    "temperature": "temperature_k",
    "kappa_over_gamma": "kappa_over_gamma",
}

STATIONARY_AXES = ["delta", "delta_over_omega", "gamma_coll"]
ORDER_PARAMETER_AXES = ["delta", "delta_over_omega", "gamma_coll", "temperature", "kappa_over_gamma"]
EQUILIBRIUM_AXES = ["delta_eff"]


@dataclass(frozen=True)
class SweepSpec:
    """
    One-dimensional parameter range over a base parameter set.

    Values are in internal units: rad/ps for frequencies, K for temperature,
    plain ratios for `delta_over_omega` and `kappa_over_gamma` (the latter
    varies γ at fixed κ).

    `delta_eff`, when set, holds the cavity detuning Δ fixed at every point
    by moving δ_c; `caption_detuning` instead applies Δ = 0 for 1→2 and
    Δ = −2Ω_R for 2→1.
    """

    axis: str
    minimum: float
    maximum: float
    count: int
    base: SystemParams
    target: str = ONE_TWO
    spacing: str = LINEAR
    rho: Optional[float] = None
    delta_eff: Optional[float] = None
    caption_detuning: bool = False

    def __post_init__(self):
        if self.axis not in AXIS_COLUMNS:
            raise ParameterError(f"Unknown sweep axis '{self.axis}', expected one of {list(AXIS_COLUMNS)}")
        if self.target not in SWEEP_TARGETS:
            raise ParameterError(f"Unknown sweep target '{self.target}', expected one of {SWEEP_TARGETS}")
        if self.spacing not in SPACINGS:
            raise ParameterError(f"Unknown spacing '{self.spacing}', expected one of {SPACINGS}")
        if not self.minimum < self.maximum:
            raise ParameterError(f"Sweep range must satisfy min < max, got [{self.minimum}, {self.maximum}]")
        if self.count < 2:
            raise ParameterError(f"Sweep needs at least 2 points, got {self.count}")
        if self.spacing == LOG and self.minimum <= 0.0:
            raise ParameterError("Logarithmic spacing needs a positive minimum")

    def values(self) -> np.ndarray:
        if self.spacing == LOG:
            return np.geomspace(self.minimum, self.maximum, self.count)
        return np.linspace(self.minimum, self.maximum, self.count)


@dataclass
class SweepTable:
    header: Tuple[str, ...]
    columns: List[np.ndarray]

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.header.index(name)]

    def to_csv(self, path: str) -> str:
        return write_csv(path, self.header, self.columns)


@dataclass(frozen=True)
class PhaseCell:
    delta_over_omega: float
    kappa_over_gamma: float
    classification: str
    thermalized: bool
    strong_12: bool
    strong_21: bool
    lambda_12: float
    lambda_21: float

    @property
    def code(self) -> str:
        return CLASSIFICATION_CODES[self.classification]


@dataclass
class PhaseDiagram:
    """Cells in row-major order: rows follow the κ/γ axis, columns the δ/Ω axis."""

    x_values: np.ndarray
    y_values: np.ndarray
    cells: List[PhaseCell] = field(default_factory=list)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.y_values), len(self.x_values)

    def counts(self) -> Dict[str, int]:
        totals = {tag: 0 for tag in CLASSIFICATION_CODES}
        for cell in self.cells:
            totals[cell.classification] += 1
        return totals

    def to_csv(self, path: str) -> str:
        return write_csv(
            path,
            ("delta_over_omega", "kappa_over_gamma", "classification", "thermalized",
             "strong_12", "strong_21", "lambda_12", "lambda_21"),
            [
                [cell.delta_over_omega for cell in self.cells],
                [cell.kappa_over_gamma for cell in self.cells],
                [cell.code for cell in self.cells],
                [cell.thermalized for cell in self.cells],
                [cell.strong_12 for cell in self.cells],
                [cell.strong_21 for cell in self.cells],
                [cell.lambda_12 for cell in self.cells],
                [cell.lambda_21 for cell in self.cells],
            ],
        )

    def matrix_to_file(self, path: str) -> str:
        return write_text(path, classification_matrix(self.cells, self.shape))


def caption_delta_eff(transition: str, frame: DressedFrame) -> float:
    """Δ at which each transition is resonant with its sideband: 0 for 1→2, −2Ω_R for 2→1."""
    if transition == TWO_ONE:
        return -2.0 * frame.omega_rabi_shifted
    return 0.0


def with_delta_eff(params: SystemParams, delta_eff: float) -> SystemParams:
    """Moves δ_c so that the cavity detuning equals `delta_eff`."""
    frame = build_dressed_frame(params)
    return params.replace(delta_cav=delta_eff + frame.omega_rabi_shifted)


def _point_params(spec: SweepSpec, value: float) -> SystemParams:
    base = spec.base
    if spec.axis == "delta":
        params = base.replace(delta=value)
    elif spec.axis == "delta_over_omega":
        params = base.replace(delta=value * base.omega)
    elif spec.axis == "gamma_coll":
        params = base.replace(gamma_coll=value)
    elif spec.axis == "temperature":
        params = base.replace(temperature=value)
    elif spec.axis == "kappa_over_gamma":
        params = base.replace(gamma_coll=base.kappa / value)
    else:
        return with_delta_eff(base, value)

    if spec.delta_eff is not None:
        return with_delta_eff(params, spec.delta_eff)
    if spec.caption_detuning and spec.target != EQUILIBRIUM:
        return with_delta_eff(params, caption_delta_eff(spec.target, build_dressed_frame(params)))
    return params


def _require_axis(spec: SweepSpec, allowed: Sequence[str], name: str) -> None:
    if spec.axis not in allowed:
        raise ParameterError(f"{name} sweeps accept axes {list(allowed)}, got '{spec.axis}'")


def sweep_stationary_imbalance(spec: SweepSpec) -> SweepTable:
    """
    Cavity-free stationary imbalance along the sweep axis.

    Columns: axis value, S_z^(st), and the full-equilibrium value
    −tanh(ħΩ_R/2k_BT) as the companion curve.
    """
    _require_axis(spec, STATIONARY_AXES, "Stationary-imbalance")
    values = spec.values()
    s_z_st = np.empty_like(values)
    s_z_eq = np.empty_like(values)
    for i, value in enumerate(values):
        frame = build_dressed_frame(_point_params(spec, value))
        s_z_st[i] = frame.s_z_st
        s_z_eq[i] = frame.s_z_eq
    logger.info("stationary imbalance sweep over %s: %d points", spec.axis, len(values))
    return SweepTable(header=(AXIS_COLUMNS[spec.axis], "s_z_st", "s_z_eq"), columns=[values, s_z_st, s_z_eq])


def sweep_stationary_family(spec: SweepSpec, gamma_values: Sequence[float]) -> SweepTable:
    """
    One stationary-imbalance curve per collision rate γ [rad/ps].

    Columns: axis value, S_z^(eq) (the same for every γ), then one
    `s_z_st_gamma_<γ>` column per rate in the order given. Growing γ pulls
    the curves onto S_z^(eq).

    Raises:
    -------
    ParameterError
        If the axis is itself `gamma_coll`, no rate is given or two rates
        share a column name.
    """
    _require_axis(spec, STATIONARY_AXES, "Stationary-imbalance")
    if spec.axis == "gamma_coll":
        raise ParameterError("A collision-rate family needs an axis other than 'gamma_coll'")
    if len(gamma_values) == 0:
        raise ParameterError("A collision-rate family needs at least one rate")
    names = [f"s_z_st_gamma_{gamma:.6g}" for gamma in gamma_values]
    if len(set(names)) != len(names):
        raise ParameterError(f"Collision rates must be distinct, got {list(gamma_values)}")

    curves = [
        sweep_stationary_imbalance(replace(spec, base=spec.base.replace(gamma_coll=float(gamma))))
        for gamma in gamma_values
    ]
    return SweepTable(
        header=(AXIS_COLUMNS[spec.axis], "s_z_eq", *names),
        columns=[curves[0].columns[0], curves[0].column("s_z_eq"), *(curve.column("s_z_st") for curve in curves)],
    )


def sweep_order_parameter(spec: SweepSpec) -> SweepTable:
    """
    Steady-state lasing analysis of `spec.target` along the sweep axis.

    Non-lasing points carry |λ| = 0.
    """
    _require_axis(spec, ORDER_PARAMETER_AXES, "Order-parameter")
    if spec.target == EQUILIBRIUM:
        raise ParameterError("Order-parameter sweeps need a transition target, not 'equilibrium'")

    values = spec.values()
    columns = {name: np.empty_like(values) for name in ("abs_lambda", "s_z_st", "s_z_thr", "mu_rad_per_ps")}
    lasing = np.zeros(len(values), dtype=bool)
    for i, value in enumerate(values):
        report = steady_report(spec.target, build_dressed_frame(_point_params(spec, value)))
        columns["abs_lambda"][i] = math.sqrt(report.lambda_sq)
        columns["s_z_st"][i] = report.s_z_st
        columns["s_z_thr"][i] = report.s_z_thr
        columns["mu_rad_per_ps"][i] = report.mu
        lasing[i] = report.lasing
    logger.info(
        "%s order-parameter sweep over %s: %d points, %d lasing",
        spec.target, spec.axis, len(values), int(lasing.sum()),
    )
    return SweepTable(
        header=(AXIS_COLUMNS[spec.axis], *columns, "lasing"),
        columns=[values, *columns.values(), lasing],
    )


def _temperature_or_nan(compute: Callable[[], float]) -> float:
    try:
        return compute()
    except DomainError:
        return math.nan


def sweep_equilibrium(spec: SweepSpec, tol: float = DEFAULT_GAP_TOL) -> SweepTable:
    """
    Equilibrium order parameter and critical temperatures against Δ.

    Columns: Δ, λ from the gap equation, μ, T_C from the large-|Δ| formula,
    the exact T* at which the gap root disappears, and a convergence flag.
    Points without a transition (Δ and 1 − 2ρ of the wrong sign, ρ ≥ 1/2)
    carry NaN critical temperatures.
    """
    _require_axis(spec, EQUILIBRIUM_AXES, "Equilibrium")
    if spec.rho is None:
        raise ParameterError("Equilibrium sweeps need the polariton density rho")

    values = spec.values()
    lambdas = np.empty_like(values)
    mus = np.empty_like(values)
    t_c = np.empty_like(values)
    t_star = np.empty_like(values)
    converged = np.zeros(len(values), dtype=bool)
    for i, value in enumerate(values):
        frame = build_dressed_frame(_point_params(spec, value))
        solution = solve_gap(spec.rho, frame, frame.params.temperature, tol=tol)
        lambdas[i] = solution.lambda_
        mus[i] = solution.mu
        t_c[i] = _temperature_or_nan(lambda: critical_temperature(spec.rho, frame.delta_eff))
        t_star[i] = _temperature_or_nan(lambda: exact_critical_temperature(spec.rho, frame))
        converged[i] = solution.converged
    logger.info(
        "equilibrium sweep: %d points, %d superradiant, %d unconverged",
        len(values), int(np.count_nonzero(lambdas > 0.0)), int(np.count_nonzero(~converged)),
    )
    return SweepTable(
        header=(AXIS_COLUMNS[spec.axis], "lambda", "mu_rad_per_ps", "t_c_k", "t_star_k", "converged"),
        columns=[values, lambdas, mus, t_c, t_star, converged],
    )


def classify(
    delta: float,
    flags_thermalized: bool,
    strong_12: bool,
    lambda_12: float,
    lambda_21: float,
) -> str:
    """Phase tag of one cell; the equilibrium phase wins over lasing where both apply."""
    if delta < 0.0 and flags_thermalized and strong_12:
        return SUPERRADIANT_EQUILIBRIUM
    if lambda_12 > 0.0:
        return LASING_12
    if lambda_21 > 0.0:
        return LASING_21
    return NORMAL


def _phase_cell(base: SystemParams, x: float, y: float, margin: float) -> PhaseCell:
    params = base.replace(delta=x * base.omega, gamma_coll=base.kappa / y)
    frame = build_dressed_frame(params)
    flags = check_conditions(frame, params, margin)

    reports = {}
    for transition in (ONE_TWO, TWO_ONE):
        tuned = params.replace(
            delta_cav=caption_delta_eff(transition, frame) + frame.omega_rabi_shifted
        )
        reports[transition] = steady_report(transition, build_dressed_frame(tuned))

    lambda_12 = math.sqrt(reports[ONE_TWO].lambda_sq)
    lambda_21 = math.sqrt(reports[TWO_ONE].lambda_sq)
    return PhaseCell(
        delta_over_omega=float(x),
        kappa_over_gamma=float(y),
        classification=classify(params.delta, flags.thermalized, flags.strong_coupling_12, lambda_12, lambda_21),
        thermalized=flags.thermalized,
        strong_12=flags.strong_coupling_12,
        strong_21=flags.strong_coupling_21,
        lambda_12=lambda_12,
        lambda_21=lambda_21,
    )


def _phase_row(task: Tuple[SystemParams, np.ndarray, float, float]) -> List[PhaseCell]:
    base, x_values, y, margin = task
    return [_phase_cell(base, x, y, margin) for x in x_values]


def phase_diagram(
    x_spec: SweepSpec,
    y_spec: SweepSpec,
    margin: float = DEFAULT_MARGIN,
    workers: Optional[int] = None,
) -> PhaseDiagram:
    """
    Classifies every (δ/Ω, κ/γ) cell of a grid.

    Parameters:
    ----------
    x_spec : SweepSpec
        Axis "delta_over_omega"; δ = x·Ω at the base Ω.
    y_spec : SweepSpec
        Axis "kappa_over_gamma"; γ = κ/y at the base κ. Its base parameters
        are ignored in favour of `x_spec.base`.
    margin : float
        Reading of "≫" passed to `check_conditions`.
    workers : int, optional
        Size of the process pool evaluating rows; 1 evaluates in-process.
        Defaults to the number of CPUs.

    Returns:
    -------
    PhaseDiagram
        Cells ordered by (row, column) whatever the number of workers.
        Each transition is evaluated at its resonant cavity detuning
        (Δ = 0 for 1→2, Δ = −2Ω_R for 2→1).
    """
    if x_spec.axis != "delta_over_omega":
        raise ParameterError(f"Phase-diagram x axis must be 'delta_over_omega', got '{x_spec.axis}'")
    if y_spec.axis != "kappa_over_gamma":
        raise ParameterError(f"Phase-diagram y axis must be 'kappa_over_gamma', got '{y_spec.axis}'")

    base = x_spec.base
    x_values = x_spec.values()
    y_values = y_spec.values()
    tasks = [(base, x_values, float(y), margin) for y in y_values]
    workers = workers or os.cpu_count() or 1

    logger.info(
        "phase diagram: %d x %d cells on %d worker(s)", len(y_values), len(x_values), workers,
    )
    if workers == 1:
        rows = [_phase_row(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_phase_row, tasks))

    diagram = PhaseDiagram(x_values=x_values, y_values=y_values, cells=[cell for row in rows for cell in row])
    overlaps = sum(
        1 for cell in diagram.cells
        if cell.classification == SUPERRADIANT_EQUILIBRIUM and (cell.lambda_12 > 0.0 or cell.lambda_21 > 0.0)
    )
    if overlaps:
        logger.warning("%d superradiant cells also satisfy a lasing condition", overlaps)
    return diagram


def classification_matrix(cells: Sequence[PhaseCell], shape: Tuple[int, int]) -> str:
    """One line per row, one character (S, 1, 2, N) per cell."""
    n_rows, n_cols = shape
    if len(cells) != n_rows * n_cols:
        raise ParameterError(f"{len(cells)} cells do not fill a {n_rows} x {n_cols} grid")
    lines = [
        "".join(cell.code for cell in cells[row * n_cols:(row + 1) * n_cols])
        for row in range(n_rows)
    ]
    return "\n".join(lines) + "\n"
