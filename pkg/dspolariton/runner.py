# runner.py

import json
import logging
import math
import os

from typing import Any, Dict, Optional

import numpy as np

from dspolariton.config import (
    DEFAULT_ABS_TOL,
    DEFAULT_OUTPUT_POINTS,
    DEFAULT_REL_TOL,
    DEFAULT_T_END_NS,
    RunConfig,
    build_initial_state,
    build_params,
    build_phase_specs,
    build_sweep_spec,
    get_pool_env_vars,
)
from dspolariton.ds_core import (
    DEFAULT_MARGIN,
    THZ,
    DressedFrame,
    build_dressed_frame,
    check_conditions,
    thermalization_time,
)
from dspolariton.dynamics import detect_lasing_onset, integrate, steady_tail, trajectory_to_csv
from dspolariton.exceptions import ConfigError, ConvergenceError, DomainError
from dspolariton.scans import (
    SweepTable,
    phase_diagram,
    sweep_equilibrium,
    sweep_order_parameter,
    sweep_stationary_family,
    sweep_stationary_imbalance,
)
from dspolariton.steady_state import report_to_dict, steady_report, threshold
from dspolariton.transitions import CLASSIFICATION_CODES, ONE_TWO
from dspolariton.utils import write_json

logger = logging.getLogger(__name__)

__all__ = ["run", "frame_to_dict"]


def _output_path(config: RunConfig, out_dir: str, name: str) -> str:
    prefix = config.get("output.prefix")
    if prefix is None:
        prefix = f"{config.preset}_" if config.preset else ""
    return os.path.join(out_dir, f"{prefix}{name}")


def frame_to_dict(frame: DressedFrame, margin: float = DEFAULT_MARGIN) -> Dict[str, Any]:
    """JSON-ready view of a frame, its validity flags and the thermalization time."""
    params = frame.params
    flags = check_conditions(frame, params, margin)
    try:
        t_therm: Optional[float] = thermalization_time(params)
    except DomainError:
        t_therm = None
    return {
        "params": {name: getattr(params, name) for name in params.__dataclass_fields__},
        "sin_theta": frame.sin_theta,
        "cos_theta": frame.cos_theta,
        "omega_rabi": frame.omega_rabi,
        "kappa_12": frame.kappa_12,
        "kappa_21": frame.kappa_21,
        "w": frame.w,
        "gamma_plus": frame.gamma_plus,
        "gamma_minus": frame.gamma_minus,
        "gamma_1": frame.gamma_1,
        "eta_1": frame.eta_1,
        "cap_gamma_1": frame.cap_gamma_1,
        "s_z_eq": frame.s_z_eq,
        "s_z_st": frame.s_z_st,
        "delta_eff": frame.delta_eff,
        "thermalization_time_ps": t_therm,
        "conditions": {
            "margin": margin,
            "thermalized": flags.thermalized,
            "strong_coupling_12": flags.strong_coupling_12,
            "strong_coupling_21": flags.strong_coupling_21,
            "thresholdless_12": flags.thresholdless_12,
            "thresholdless_21": flags.thresholdless_21,
        },
    }


def _run_frame(config: RunConfig, out_dir: str, margin: float) -> Dict[str, Any]:
    frame = build_dressed_frame(build_params(config))
    payload = frame_to_dict(frame, margin)
    path = write_json(_output_path(config, out_dir, "frame.json"), payload)
    print(json.dumps(payload, indent=2))
    summary = (
        f"Omega_R/2pi = {frame.omega_rabi / THZ:.6g} THz, kappa_12 = {frame.kappa_12:.6g} rad/ps, "
        f"kappa_21 = {frame.kappa_21:.6g} rad/ps, S_z_st = {frame.s_z_st:.4g}"
    )
    return {"files": [path], "summary": summary}


def _equilibrium_boundary(table: SweepTable) -> Optional[float]:
    """Δ where λ switches between zero and nonzero, midway between samples."""
    delta = table.columns[0]
    ordered = table.column("lambda") > 0.0
    changes = np.flatnonzero(ordered[1:] != ordered[:-1])
    if changes.size == 0:
        return None
    i = int(changes[0])
    return 0.5 * (delta[i] + delta[i + 1])


def _run_equilibrium_scan(config: RunConfig, out_dir: str, tol: Optional[float]) -> Dict[str, Any]:
    spec = build_sweep_spec(config, build_params(config), kind="equilibrium")
    table = sweep_equilibrium(spec) if tol is None else sweep_equilibrium(spec, tol=tol)
    path = table.to_csv(_output_path(config, out_dir, "equilibrium.csv"))

    unconverged = int(np.count_nonzero(~table.column("converged")))
    if unconverged:
        raise ConvergenceError(f"Gap equation did not converge at {unconverged} of {len(spec.values())} points")

    boundary = _equilibrium_boundary(table)
    boundary_text = "none" if boundary is None else f"{boundary / THZ:.4g} THz"
    summary = (
        f"points = {len(spec.values())}, lambda_max = {table.column('lambda').max():.4g}, "
        f"boundary Delta/2pi = {boundary_text}"
    )
    return {"files": [path], "summary": summary}


def _run_dynamics(config: RunConfig, out_dir: str, tol: Optional[float]) -> Dict[str, Any]:
    # 1. Frame and initial state
    frame = build_dressed_frame(build_params(config))
    transition = config.get("dynamics.transition", ONE_TWO)
    initial = build_initial_state(config)

    # 2. Integration
    rel_tol = tol if tol is not None else config.get("dynamics.rel_tol", DEFAULT_REL_TOL)
    traj = integrate(
        transition,
        initial,
        frame,
        t_end=config.get("dynamics.t_end_ns", DEFAULT_T_END_NS) * 1e3,
        rel_tol=rel_tol,
        abs_tol=config.get("dynamics.abs_tol", DEFAULT_ABS_TOL),
        n_output=config.get("dynamics.n_output", DEFAULT_OUTPUT_POINTS),
        rotating_frame=config.get("dynamics.rotating_frame", True),
    )

    # 3. Onset and steady values
    s_z_thr, _ = threshold(transition, frame)
    direction = 1 if transition == ONE_TWO else -1
    onset = detect_lasing_onset(traj, s_z_thr, direction=direction)
    lambda_sq, s_z = steady_tail(traj)

    path = trajectory_to_csv(traj, _output_path(config, out_dir, "trajectory.csv"))
    onset_text = "none" if onset is None else f"{onset * 1e-3:.3g} ns"
    summary = f"tau_L = {onset_text}, |lambda|_ss = {math.sqrt(lambda_sq):.3g}, S_z_ss = {s_z:.4g}"
    return {"files": [path], "summary": summary}


def _run_steady_state(config: RunConfig, out_dir: str) -> Dict[str, Any]:
    frame = build_dressed_frame(build_params(config))
    report = steady_report(config.get("steady.transition", ONE_TWO), frame)
    payload = report_to_dict(report)
    path = write_json(_output_path(config, out_dir, "steady.json"), payload)
    summary = (
        f"S_z_thr = {report.s_z_thr:.4g}, S_z_st = {report.s_z_st:.4g}, "
        f"|lambda| = {math.sqrt(report.lambda_sq):.3g}, lasing = {'yes' if report.lasing else 'no'}"
    )
    return {"files": [path], "summary": summary}


def _run_sweep(config: RunConfig, out_dir: str, tol: Optional[float]) -> Dict[str, Any]:
    kind = config.require("sweep.kind")
    if kind == "equilibrium":
        return _run_equilibrium_scan(config, out_dir, tol)

    spec = build_sweep_spec(config, build_params(config))
    family = config.frequencies("sweep.family")
    if kind == "stationary" and family:
        table = sweep_stationary_family(spec, family)
        deviation = [float(np.max(np.abs(column - table.column("s_z_eq")))) for column in table.columns[2:]]
        summary = (
            f"points = {len(spec.values())}, curves = {len(family)}, "
            f"max |S_z_st - S_z_eq| = {deviation[0]:.3g} ... {deviation[-1]:.3g}"
        )
    elif kind == "stationary":
        table = sweep_stationary_imbalance(spec)
        summary = f"points = {len(spec.values())}, S_z_st in [{table.column('s_z_st').min():.4g}, {table.column('s_z_st').max():.4g}]"
    else:
        table = sweep_order_parameter(spec)
        lasing = int(np.count_nonzero(table.column("lasing")))
        summary = f"points = {len(spec.values())}, lasing = {lasing}, |lambda|_max = {table.column('abs_lambda').max():.3g}"
    path = table.to_csv(_output_path(config, out_dir, f"sweep_{kind}.csv"))
    return {"files": [path], "summary": summary}


def _run_phase_diagram(
    config: RunConfig,
    out_dir: str,
    margin: float,
    workers: Optional[int],
) -> Dict[str, Any]:
    x_spec, y_spec = build_phase_specs(config, build_params(config))
    diagram = phase_diagram(x_spec, y_spec, margin=margin, workers=workers)
    files = [
        diagram.to_csv(_output_path(config, out_dir, "phase.csv")),
        diagram.matrix_to_file(_output_path(config, out_dir, "phase.txt")),
    ]
    counts = diagram.counts()
    summary = ", ".join(f"{CLASSIFICATION_CODES[tag]} = {counts[tag]}" for tag in CLASSIFICATION_CODES)
    return {"files": files, "summary": summary}


def run(config: RunConfig, out_dir: Optional[str] = None, workers: Optional[int] = None) -> Dict[str, Any]:
    """
    Executes the command selected by a run configuration.

    Parameters:
    ----------
    config : RunConfig
        Validated configuration; `run.command` selects the command.
    out_dir : str, optional
        Output directory. Defaults to `output.dir`, then DSPOLARITON_OUT_DIR.
    workers : int, optional
        Process pool size for phase diagrams. Defaults to DSPOLARITON_WORKERS.

    Returns:
    -------
    dict
        "command", "files" (paths written) and "summary" (one line).

    Raises:
    -------
    ConfigError
        If no command is configured or a required key is missing.
    ConvergenceError, IntegrationError
        If a solver fails.
    """
    # 1. Resolving command and environment
    command = config.command
    if command is None:
        raise ConfigError("no command given")
    env = get_pool_env_vars()
    out_dir = out_dir or config.get("output.dir") or env["out_dir"]
    workers = workers or env["workers"]
    margin = config.get("run.margin", DEFAULT_MARGIN)
    tol = config.get("run.tol")
    logger.info("running '%s'%s", command, f" with preset '{config.preset}'" if config.preset else "")

    # 2. Dispatch
    if command == "frame":
        result = _run_frame(config, out_dir, margin)
    elif command == "equilibrium-scan":
        result = _run_equilibrium_scan(config, out_dir, tol)
    elif command == "dynamics":
        result = _run_dynamics(config, out_dir, tol)
    elif command == "steady-state":
        result = _run_steady_state(config, out_dir)
    elif command == "sweep":
        result = _run_sweep(config, out_dir, tol)
    else:
        result = _run_phase_diagram(config, out_dir, margin, workers)

    # 3. Summary
    result["command"] = command
    print(result["summary"])
    return result
