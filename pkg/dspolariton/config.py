# config.py
import logging
import math
import os
import yaml

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from dotenv import load_dotenv

from dspolariton.ds_core import GHZ, MHZ, RAD_PER_NS, THZ, SystemParams, build_dressed_frame
from dspolariton.dynamics import DEFAULT_INITIAL_STATE, BlochState
from dspolariton.exceptions import ConfigError, ParameterError
from dspolariton.scans import AXIS_COLUMNS, LOG, SPACINGS, SweepSpec
from dspolariton.transitions import EQUILIBRIUM, ONE_TWO, SWEEP_TARGETS, TRANSITIONS
from dspolariton.utils import load_preset_text

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_NAME = "dspolariton.cfg"

COMMANDS = ["frame", "equilibrium-scan", "dynamics", "steady-state", "sweep", "phase-diagram"]
SWEEP_KINDS = ["stationary", "order_parameter", "equilibrium"]

# Multiply a value in the suffix unit to obtain rad/ps.
FREQUENCY_UNITS = {
    "thz": THZ,
    "ghz": GHZ,
    "mhz": MHZ,
    "rad_per_ns": RAD_PER_NS,
}

FREQUENCY_KEYS = [
    "params.omega",
    "params.delta",
    "params.kappa",
    "params.gamma_coll",
    "params.eta_coll",
    "params.gamma_spont",
    "params.gamma_cav",
    "params.delta_cav",
    "params.delta_eff",
    "sweep.min",
    "sweep.max",
    "sweep.family",
]

# Frequency keys that take a list of values.
FREQUENCY_LIST_KEYS = ["sweep.family"]

# Keys whose value is not a frequency, with the kind of value they take:
# a type name, or the list of accepted strings.
PLAIN_KEYS: Dict[str, Union[str, List[str]]] = {
    "preset": "str",
    "params.temperature_k": "float",
    "params.rho": "float",
    "initial.re_lambda": "float",
    "initial.im_lambda": "float",
    "initial.re_s": "float",
    "initial.im_s": "float",
    "initial.s_z": "float",
    "dynamics.transition": TRANSITIONS,
    "dynamics.t_end_ns": "float",
    "dynamics.rel_tol": "float",
    "dynamics.abs_tol": "float",
    "dynamics.n_output": "int",
    "dynamics.rotating_frame": "bool",
    "steady.transition": TRANSITIONS,
    "sweep.kind": SWEEP_KINDS,
    "sweep.axis": list(AXIS_COLUMNS),
    "sweep.min": "float",
    "sweep.max": "float",
    "sweep.min_k": "float",
    "sweep.max_k": "float",
    "sweep.count": "int",
    "sweep.spacing": SPACINGS,
    "sweep.transition": SWEEP_TARGETS,
    "sweep.caption_detuning": "bool",
    "phase.x_min": "float",
    "phase.x_max": "float",
    "phase.x_count": "int",
    "phase.y_min": "float",
    "phase.y_max": "float",
    "phase.y_count": "int",
    "phase.y_spacing": SPACINGS,
    "run.command": COMMANDS,
    "run.margin": "float",
    "run.tol": "float",
    "output.dir": "str",
    "output.prefix": "str",
}

# Keys that fill the same slot; a source may give only one of them.
SLOT_ALIASES = {
    "sweep.min_k": "sweep.min",
    "sweep.max_k": "sweep.max",
    "params.delta_eff": "params.delta_cav",
}

FREQUENCY_AXES = ["delta", "delta_eff", "gamma_coll"]
TEMPERATURE_AXES = ["temperature"]

DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-10
DEFAULT_OUTPUT_POINTS = 2000
DEFAULT_T_END_NS = 200.0


def load_dotenv_if_exists() -> None:
    """
    Loads environment variables from a .env file if it exists.

    If no `.env` file is found in the current working directory the function
    silently continues.
    """
    load_dotenv()


def get_pool_env_vars() -> Dict[str, Any]:
    """
    Retrieves the environment variables that tune a run.

    Returns:
    -------
    dict
        - "workers" : int or None
            Process pool size for grid evaluation (DSPOLARITON_WORKERS);
            None lets the pool use every CPU.
        - "out_dir" : str
            Default output directory (DSPOLARITON_OUT_DIR, default ".").

    Raises:
    -------
    ConfigError
        If DSPOLARITON_WORKERS is not a positive integer.
    """
    raw_workers: Optional[str] = os.getenv("DSPOLARITON_WORKERS")
    out_dir: str = os.getenv("DSPOLARITON_OUT_DIR", ".")

    workers: Optional[int] = None
    if raw_workers:
        try:
            workers = int(raw_workers)
        except ValueError:
            raise ConfigError(f"DSPOLARITON_WORKERS must be an integer, got '{raw_workers}'")
        if workers < 1:
            raise ConfigError(f"DSPOLARITON_WORKERS must be positive, got {workers}")

    return {
        "workers": workers,
        "out_dir": out_dir,
    }


def _split_frequency_key(key: str) -> Optional[Tuple[str, str]]:
    for unit in FREQUENCY_UNITS:
        suffix = "_" + unit
        if key.endswith(suffix) and key[: -len(suffix)] in FREQUENCY_KEYS:
            return key[: -len(suffix)], unit
    return None


def _slot(key: str) -> str:
    split = _split_frequency_key(key)
    base = split[0] if split else key
    return SLOT_ALIASES.get(base, base)


def _unit_mismatch(key: str) -> Optional[str]:
    for base in sorted(FREQUENCY_KEYS, key=len, reverse=True):
        if key == base or key.startswith(base + "_"):
            units = ", ".join("_" + unit for unit in FREQUENCY_UNITS)
            return f"unit-suffix mismatch: '{key}' must be '{base}' followed by one of {units}"
    if key.startswith("params.temperature"):
        return f"unit-suffix mismatch: '{key}' must be 'params.temperature_k'"
    return None


def _key_kind(key: str, line: Optional[int]) -> Union[str, List[str]]:
    if key in PLAIN_KEYS:
        return PLAIN_KEYS[key]
    split = _split_frequency_key(key)
    if split:
        return "float_list" if split[0] in FREQUENCY_LIST_KEYS else "float"
    mismatch = _unit_mismatch(key)
    if mismatch:
        raise ConfigError(mismatch, line)
    raise ConfigError(f"unknown key '{key}'", line)


def _coerce(key: str, value: Any, line: Optional[int] = None) -> Any:
    """Validates one entry against its kind and returns the typed value."""
    kind = _key_kind(key, line)

    if isinstance(kind, list):
        if not isinstance(value, str) or value not in kind:
            raise ConfigError(f"'{key}' must be one of {kind}, got '{value}'", line)
        return value

    if kind == "str":
        if isinstance(value, (dict, list)) or value is None:
            raise ConfigError(f"'{key}' expects a string, got '{value}'", line)
        return str(value)

    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"'{key}' expects true or false, got '{value}'", line)
        return value

    if kind == "float_list":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"'{key}' expects a non-empty list of numbers, got '{value}'", line)
        return [_to_float(key, item, line) for item in value]

    if isinstance(value, bool):
        raise ConfigError(f"'{key}' expects a number, got '{value}'", line)

    if kind == "int":
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"'{key}' expects an integer, got '{value}'", line)
            return int(value)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{key}' expects an integer, got '{value}'", line)

    return _to_float(key, value, line)


def _to_float(key: str, value: Any, line: Optional[int]) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"'{key}' expects a number, got '{value}'", line)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' expects a number, got '{value}'", line)
    if not math.isfinite(number):
        raise ConfigError(f"'{key}' must be finite, got '{value}'", line)
    return number


@dataclass
class RunConfig:
    """
    Validated run configuration.

    `entries` maps dotted keys (with their unit suffix) to typed values;
    `preset` names the preset the entries were layered on, if any.
    """

    entries: Dict[str, Any] = field(default_factory=dict)
    preset: Optional[str] = None

    def set(self, key: str, value: Any, line: Optional[int] = None) -> None:
        """Sets a key, replacing whatever entry held the same slot."""
        value = _coerce(key, value, line)
        if key == "preset":
            self.preset = value
            return
        slot = _slot(key)
        for existing in [k for k in self.entries if _slot(k) == slot]:
            del self.entries[existing]
        self.entries[key] = value

    def overlay(self, other: "RunConfig") -> None:
        if other.preset is not None:
            self.preset = other.preset
        for key, value in other.entries.items():
            self.set(key, value)

    def get(self, key: str, default: Any = None) -> Any:
        return self.entries.get(key, default)

    def require(self, key: str) -> Any:
        if key not in self.entries:
            raise ConfigError(f"missing required key '{key}'")
        return self.entries[key]

    def frequency(self, base: str, default: Optional[float] = None) -> Optional[float]:
        """Value of a frequency key in rad/ps, whatever unit it was given in."""
        for key, value in self.entries.items():
            split = _split_frequency_key(key)
            if split and split[0] == base:
                return value * FREQUENCY_UNITS[split[1]]
        return default

    def frequencies(self, base: str) -> Optional[List[float]]:
        """Value of a list-valued frequency key in rad/ps."""
        for key, value in self.entries.items():
            split = _split_frequency_key(key)
            if split and split[0] == base:
                return [item * FREQUENCY_UNITS[split[1]] for item in value]
        return None

    def require_frequency(self, base: str) -> float:
        value = self.frequency(base)
        if value is None:
            raise ConfigError(f"missing required key '{base}_<unit>'")
        return value

    @property
    def command(self) -> Optional[str]:
        return self.entries.get("run.command")


def _decode_value(text: str) -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _check_slots(pairs: Iterable[Tuple[str, Any, Optional[int]]]) -> None:
    seen: Dict[str, Tuple[str, Optional[int]]] = {}
    for key, _, line in pairs:
        slot = _slot(key) if key != "preset" else key
        if slot in seen:
            other, other_line = seen[slot]
            where = f" (line {other_line})" if other_line is not None else ""
            raise ConfigError(f"'{key}' conflicts with '{other}'{where}", line)
        seen[slot] = (key, line)


def _build_config(pairs: List[Tuple[str, Any, Optional[int]]]) -> RunConfig:
    for key, value, line in pairs:
        _coerce(key, value, line)
    _check_slots(pairs)

    config = RunConfig()
    for key, value, line in pairs:
        if key == "preset":
            config.overlay(load_preset(_coerce(key, value, line)))
    for key, value, line in pairs:
        if key != "preset":
            config.set(key, value, line)
    return config


def parse_config(text: str) -> RunConfig:
    """
    Parses line-oriented `key = value` configuration text.

    Parameters:
    ----------
    text : str
        One entry per line; `#` starts a comment; values are decoded as YAML
        scalars. A `preset = NAME` entry loads that preset underneath the
        other entries.

    Returns:
    -------
    RunConfig
        The validated configuration.

    Raises:
    -------
    ConfigError
        For a malformed line, an unknown key, a unit-suffix mismatch, a
        value of the wrong type or two entries for the same quantity; the
        message and the `line` attribute give the 1-based line number.
    """
    pairs: List[Tuple[str, Any, Optional[int]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", number)
        key, value_text = (part.strip() for part in line.split("=", 1))
        if not key or not value_text:
            raise ConfigError(f"expected 'key = value', got '{line}'", number)
        pairs.append((key, _decode_value(value_text), number))
    return _build_config(pairs)


def _flatten(tree: Dict[str, Any], prefix: str = "") -> List[Tuple[str, Any, Optional[int]]]:
    pairs: List[Tuple[str, Any, Optional[int]]] = []
    for name, value in tree.items():
        key = f"{prefix}{name}"
        if isinstance(value, dict):
            pairs.extend(_flatten(value, key + "."))
        else:
            pairs.append((key, value, None))
    return pairs


def _parse_yaml(text: str) -> RunConfig:
    tree = yaml.safe_load(text) or {}
    if not isinstance(tree, dict):
        raise ConfigError("YAML configuration must be a mapping")
    return _build_config(_flatten(tree))


def load_preset(name: str) -> RunConfig:
    """
    Loads one of the presets shipped with the package.

    Raises:
    -------
    ConfigError
        If no preset with that name exists.
    """
    try:
        text = load_preset_text(name)
    except FileNotFoundError as e:
        raise ConfigError(str(e))
    config = _parse_yaml(text)
    config.preset = name
    return config


def read_run_config(config_path: Optional[str] = None) -> RunConfig:
    """
    Reads a run configuration from a file.

    Parameters:
    ----------
    config_path : str, optional
        The path to the configuration file. Defaults to `dspolariton.cfg` in
        the current working directory. `.yml`/`.yaml` files are read as
        nested YAML mappings, anything else as `key = value` text.

    Returns:
    -------
    RunConfig
        The validated configuration.

    Raises:
    -------
    FileNotFoundError
        If the configuration file does not exist.
    """
    if not config_path:
        config_path = os.path.join(os.getcwd(), DEFAULT_CONFIG_NAME)

    if not os.path.exists(config_path):
        raise FileNotFoundError(f"Configuration file does not exist: {config_path}")

    with open(config_path, "r", encoding="utf-8") as f:
        text = f.read()

    if config_path.endswith((".yml", ".yaml")):
        return _parse_yaml(text)
    return parse_config(text)


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> None:
    """Applies `KEY=VALUE` strings from the command line on top of `config`."""
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"override must look like KEY=VALUE, got '{override}'")
        key, value_text = (part.strip() for part in override.split("=", 1))
        if key == "preset":
            raise ConfigError("use --preset to select a preset")
        config.set(key, _decode_value(value_text))


def load_run_config(
    preset: Optional[str] = None,
    config_path: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> RunConfig:
    """Layers preset, config file and overrides, later sources winning."""
    config = RunConfig()
    if preset:
        config.overlay(load_preset(preset))
    if config_path:
        config.overlay(read_run_config(config_path))
    apply_overrides(config, overrides)
    return config


def _format_value(value: Any) -> str:
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(item) for item in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """`key = value` text that `parse_config` reads back into an equal config."""
    lines = []
    if config.preset is not None:
        lines.append(f"preset = {config.preset}")
    lines.extend(f"{key} = {_format_value(config.entries[key])}" for key in sorted(config.entries))
    return "\n".join(lines) + "\n"


def build_params(config: RunConfig) -> SystemParams:
    """
    SystemParams from the `params.*` entries.

    δ_c comes from `params.delta_cav_*`, or from `params.delta_eff_*` as
    Δ + Ω_R + η₁.
    """
    values = {
        "omega": config.require_frequency("params.omega"),
        "delta": config.require_frequency("params.delta"),
        "kappa": config.require_frequency("params.kappa"),
        "gamma_coll": config.require_frequency("params.gamma_coll"),
        "gamma_spont": config.require_frequency("params.gamma_spont"),
        "gamma_cav": config.require_frequency("params.gamma_cav"),
        "eta_coll": config.frequency("params.eta_coll", 0.0),
        "temperature": config.require("params.temperature_k"),
    }
    delta_cav = config.frequency("params.delta_cav")
    delta_eff = config.frequency("params.delta_eff")
    if delta_cav is None and delta_eff is None:
        raise ConfigError("missing required key 'params.delta_cav_<unit>' or 'params.delta_eff_<unit>'")

    try:
        params = SystemParams(delta_cav=0.0 if delta_cav is None else delta_cav, **values)
        if delta_cav is None:
            frame = build_dressed_frame(params)
            params = params.replace(delta_cav=delta_eff + frame.omega_rabi_shifted)
    except ParameterError as e:
        raise ConfigError(str(e))
    return params


def build_initial_state(config: RunConfig) -> BlochState:
    default = DEFAULT_INITIAL_STATE
    return BlochState(
        lambda_=complex(
            config.get("initial.re_lambda", default.lambda_.real),
            config.get("initial.im_lambda", default.lambda_.imag),
        ),
        s=complex(config.get("initial.re_s", default.s.real), config.get("initial.im_s", default.s.imag)),
        s_z=config.get("initial.s_z", default.s_z),
    )


def _sweep_bound(config: RunConfig, bound: str, axis: str) -> float:
    base = f"sweep.{bound}"
    if axis in FREQUENCY_AXES:
        if config.frequency(base) is None:
            raise ConfigError(f"unit-suffix mismatch: axis '{axis}' needs '{base}_<frequency unit>'")
        return config.frequency(base)
    key = base + "_k" if axis in TEMPERATURE_AXES else base
    if key not in config.entries:
        raise ConfigError(f"unit-suffix mismatch: axis '{axis}' needs '{key}'")
    return config.entries[key]


def build_sweep_spec(config: RunConfig, params: SystemParams, kind: Optional[str] = None) -> SweepSpec:
    kind = kind or config.require("sweep.kind")
    axis = config.require("sweep.axis")
    if kind == "equilibrium":
        target = EQUILIBRIUM
    else:
        target = config.get("sweep.transition", ONE_TWO)

    try:
        return SweepSpec(
            axis=axis,
            minimum=_sweep_bound(config, "min", axis),
            maximum=_sweep_bound(config, "max", axis),
            count=config.require("sweep.count"),
            base=params,
            target=target,
            spacing=config.get("sweep.spacing", "linear"),
            rho=config.get("params.rho"),
            caption_detuning=config.get("sweep.caption_detuning", False),
        )
    except ParameterError as e:
        raise ConfigError(str(e))


def build_phase_specs(config: RunConfig, params: SystemParams) -> Tuple[SweepSpec, SweepSpec]:
    """Sweep specs for the δ/Ω columns and κ/γ rows of a phase diagram."""
    try:
        x_spec = SweepSpec(
            axis="delta_over_omega",
            minimum=config.require("phase.x_min"),
            maximum=config.require("phase.x_max"),
            count=config.require("phase.x_count"),
            base=params,
        )
        y_spec = SweepSpec(
            axis="kappa_over_gamma",
            minimum=config.require("phase.y_min"),
            maximum=config.require("phase.y_max"),
            count=config.require("phase.y_count"),
            base=params,
            spacing=config.get("phase.y_spacing", LOG),
        )
    except ParameterError as e:
        raise ConfigError(str(e))
    return x_spec, y_spec
