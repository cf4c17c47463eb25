# exceptions.py
from typing import Optional


class DSPolaritonError(Exception):
    """Base class for every error raised by the dspolariton package."""


class ParameterError(DSPolaritonError, ValueError):
    """A physical input is outside the range where the model is defined."""


class DomainError(ParameterError):
    """A formula is evaluated where it has no real or finite value."""


class ConvergenceError(DSPolaritonError):
    """An iterative solver stopped before reaching its tolerance."""


class IntegrationError(DSPolaritonError):
    """
    The ODE integrator could not advance the state.

    Parameters:
    ----------
    message : str
        Integrator diagnostic.
    time : float, optional
        Time [ps] at which integration stopped.
    """

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message if time is None else f"{message} (t = {time:.6g} ps)")
        self.time = time


class ConfigError(DSPolaritonError, ValueError):
    """
    A run configuration could not be parsed or validated.

    Parameters:
    ----------
    message : str
        What is wrong with the entry.
    line : int, optional
        1-based line number in the config text, None when the entry came from
        a YAML file, a preset or a --set override.
    """

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
