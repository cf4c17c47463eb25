# utils.py
import json
import logging
import os

from typing import Any, Dict, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.16e"
PRESET_SUFFIX = ".yml"


def load_preset_text(preset_name: str) -> str:
    """
    Loads a preset file from the "presets" directory and returns its content as a string.

    Parameters:
    ----------
    preset_name : str
        The preset name without extension (e.g. "fig6").

    Returns:
    -------
    str
        The content of the preset file.

    Raises:
    -------
    FileNotFoundError
        If no preset with that name ships with the package.
    """
    current_dir = os.path.dirname(__file__)
    preset_path = os.path.join(current_dir, "presets", preset_name + PRESET_SUFFIX)
    if not os.path.exists(preset_path):
        raise FileNotFoundError(f"Unknown preset '{preset_name}': {preset_path} does not exist")
    with open(preset_path, "r", encoding="utf-8") as f:
        content = f.read()

    return content


def list_presets() -> List[str]:
    """Names of the presets shipped in the package, sorted."""
    presets_dir = os.path.join(os.path.dirname(__file__), "presets")
    return sorted(
        name[: -len(PRESET_SUFFIX)]
        for name in os.listdir(presets_dir)
        if name.endswith(PRESET_SUFFIX)
    )


def ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _format_cell(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return CSV_FLOAT_FORMAT % float(value)


def write_csv(path: str, header: Sequence[str], columns: Sequence[Any]) -> str:
    """
    Writes equally long columns to a CSV file with a header row.

    Numbers are written with 17 significant digits in scientific notation,
    dot decimal separator and LF line endings, so identical inputs give
    identical bytes.

    Parameters:
    ----------
    path : str
        Destination file; missing parent directories are created.
    header : Sequence[str]
        Column names, one per column.
    columns : Sequence[array-like]
        Numeric, boolean (written as 0/1) or string columns.

    Returns:
    -------
    str
        The path written.

    Raises:
    -------
    ValueError
        If the header and the columns do not match in number or length.
    """
    if len(header) != len(columns):
        raise ValueError(f"{len(header)} column names for {len(columns)} columns")
    lengths = {len(column) for column in columns}
    if len(lengths) > 1:
        raise ValueError(f"Columns have different lengths: {sorted(lengths)}")

    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(value) for value in row) for row in zip(*columns))
    write_text(path, "\n".join(lines) + "\n")
    return path


def write_text(path: str, content: str) -> str:
    ensure_parent_dir(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(content)
    logger.info("wrote %s", path)
    return path


def write_json(path: str, payload: Dict[str, Any]) -> str:
    return write_text(path, json.dumps(payload, indent=2) + "\n")
