"""ResultRecord construction and YAML persistence."""

import hashlib
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np
import yaml

from jofet_amp import __version__
from jofet_amp.core.errors import JofetError, ParseError, SchemaError
from jofet_amp.core.models import Provenance, Quantity, ResultRecord

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays into YAML-safe Python values."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def quantity(value: Any, unit: str, uncertainty: Any = None) -> Quantity:
    """Build a Quantity from numpy or Python numbers."""
    return Quantity(value=_plain(value), unit=unit, uncertainty=_plain(uncertainty))


def file_digest(data: Union[bytes, Path]) -> str:
    """SHA-256 of a file's contents."""
    if isinstance(data, Path):
        data = data.read_bytes()
    return hashlib.sha256(data).hexdigest()


def build_record(
    command: str,
    inputs: Optional[Dict[str, Any]] = None,
    outputs: Optional[Dict[str, Quantity]] = None,
    series: Optional[Dict[str, Iterable[float]]] = None,
    series_units: Optional[Dict[str, str]] = None,
    seed: Optional[int] = None,
) -> ResultRecord:
    """
    Assemble a ResultRecord for one command.

    Args:
        command: Command name
        inputs: Parameters and file digests to echo
        outputs: Named quantities
        series: Array outputs, flattened to lists
        series_units: Unit of each series
        seed: Random seed used, if any

    Returns:
        ResultRecord stamped with the tool version
    """
    flat = {
        name: [float(v) for v in np.asarray(values, dtype=float).reshape(-1)]
        for name, values in (series or {}).items()
    }
    return ResultRecord(
        command=command,
        inputs=_plain(inputs or {}),
        outputs=outputs or {},
        series=flat,
        series_units=series_units or {},
        provenance=Provenance(tool_version=__version__, seed=seed),
    )


def error_record(command: str, error: JofetError, inputs: Optional[Dict[str, Any]] = None) -> ResultRecord:
    """Record describing a failed command."""
    record = build_record(command, inputs=inputs)
    record.error = error.to_dict()
    return record


def _finite(value: Any) -> Any:
    # YAML has .inf/.nan but JSON digests do not; keep them as strings
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, list):
        return [_finite(v) for v in value]
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    return value


def dump_record(record: ResultRecord) -> str:
    """Serialize a record as YAML."""
    return yaml.safe_dump(_finite(record.model_dump(mode="python")), sort_keys=True, allow_unicode=True)


def save_record(record: ResultRecord, path: Path) -> None:
    """Write a record to disk."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_record(record), encoding="utf-8")
    logger.info(f"Wrote {record.command} record to {path}")


def load_record(path: Path) -> ResultRecord:
    """
    Read a record written by `save_record`.

    Raises:
        ParseError: If the file is not YAML
        SchemaError: If it does not describe a ResultRecord
    """
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(f"invalid record file: {e}", line=mark.line + 1 if mark else None)
    if not isinstance(data, dict):
        raise SchemaError(f"{path} does not hold a result record")
    try:
        return ResultRecord.model_validate(data)
    except ValueError as e:
        raise SchemaError(f"{path} does not hold a result record: {e}")
