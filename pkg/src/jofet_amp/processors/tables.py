"""CSV ingestion for traces and sweep tables.

Column headers carry their unit as a suffix (`_Hz`, `_dBm`, `_K`, `_V`).
Lines starting with `#` are comments; `# key=value` comments carry metadata
such as `rbw_Hz` for spectra.
"""

import csv
import io
import logging
from typing import Any, Dict, List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from jofet_amp.core.errors import DomainError, ParseError, SchemaError
from jofet_amp.core.models import ComplexReflectionTrace, SpectrumTrace

logger = logging.getLogger(__name__)

SCHEMAS: Dict[str, List[str]] = {
    "reflection": ["f_Hz", "re", "im"],
    "gate_sweep": ["Vg_V", "fr_Hz", "kappa_i_Hz", "kappa_ex_Hz"],
    "power_sweep": ["Pin_dBm", "fr_Hz"],
    "hemt_sweep": ["Tset_K", "psd_K"],
    "spectrum": ["f_Hz", "psd_dBm"],
}
UNIT_SUFFIXES = ("_Hz", "_dBm", "_K", "_V")
UNITLESS_COLUMNS = {"re", "im"}
COLUMN_ALIASES = {"T_set_K": "Tset_K"}


class DataTable(BaseModel):
    """Typed columns of a sweep table."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    schema_name: str = Field(description="Schema the table was read with")
    columns: Dict[str, np.ndarray] = Field(description="Column name (with unit suffix) -> values")
    metadata: Dict[str, str] = Field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


def _text(data: Union[bytes, str]) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"file is not UTF-8 text: {e.reason}")
    return data


def _check_header(header: List[str], schema: str) -> List[str]:
    names = [COLUMN_ALIASES.get(name.strip(), name.strip()) for name in header]
    for name in names:
        if name not in UNITLESS_COLUMNS and not name.endswith(UNIT_SUFFIXES):
            raise SchemaError(
                f"column '{name}' has no supported unit suffix ({', '.join(UNIT_SUFFIXES)})", name=name
            )
    for required in SCHEMAS[schema]:
        if required not in names:
            raise SchemaError(f"{schema} table is missing mandatory column '{required}'", name=required)
    return names


def read_table(data: Union[bytes, str], schema: str) -> DataTable:
    """
    Read a CSV file against a named schema.

    Raises:
        SchemaError: If the schema is unknown or a mandatory column is missing
        ParseError: If a cell is not a number
    """
    if schema not in SCHEMAS:
        raise SchemaError(f"unknown schema '{schema}'; expected one of {', '.join(SCHEMAS)}", name=schema)
    metadata: Dict[str, str] = {}
    body = []
    for number, line in enumerate(_text(data).splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition("=")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        body.append((number, line))
    if not body:
        raise ParseError("file holds no header row")

    rows = csv.reader(io.StringIO("\n".join(line for _, line in body)))
    header = _check_header(next(rows), schema)
    values: List[List[float]] = []
    for (number, _), row in zip(body[1:], rows):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", line=number)
        parsed = []
        for name, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(f"invalid number '{cell.strip()}'", line=number, column=name)
        values.append(parsed)

    table = np.array(values, dtype=float).reshape(-1, len(header))
    logger.debug(f"Read {table.shape[0]} rows with schema {schema}")
    return DataTable(
        schema_name=schema,
        columns={name: table[:, k] for k, name in enumerate(header)},
        metadata=metadata,
    )


def _optional_float(metadata: Dict[str, str], key: str):
    if key not in metadata:
        return None
    try:
        return float(metadata[key])
    except ValueError:
        raise ParseError(f"metadata '{key}' is not a number")


def parse_trace_csv(data: Union[bytes, str], schema: str) -> Any:
    """
    Read a CSV file into the type its schema describes.

    Args:
        data: File contents
        schema: One of the names in SCHEMAS

    Returns:
        ComplexReflectionTrace, SpectrumTrace or DataTable

    Raises:
        SchemaError: If a mandatory column is missing or a unit suffix is unsupported
        ParseError: If a cell cannot be read
        DomainError: If the data violate the trace invariants
    """
    table = read_table(data, schema)
    try:
        if schema == "reflection":
            return ComplexReflectionTrace(
                frequencies=table["f_Hz"], s11=table["re"] + 1j * table["im"]
            )
        if schema == "spectrum":
            f = table["f_Hz"]
            rbw = _optional_float(table.metadata, "rbw_Hz")
            if rbw is None:
                if f.size < 2:
                    raise SchemaError("spectrum needs an rbw_Hz comment or at least 2 bins", name="rbw_Hz")
                rbw = float(np.median(np.diff(f)))
            return SpectrumTrace(
                frequencies=f,
                psd_dbm=table["psd_dBm"],
                rbw=rbw,
                pump_on=table.metadata.get("pump_on", "false").lower() == "true",
                pump_frequency=_optional_float(table.metadata, "pump_frequency_Hz"),
                pilot_frequency=_optional_float(table.metadata, "pilot_frequency_Hz"),
                pilot_power_dbm=_optional_float(table.metadata, "pilot_power_dBm"),
            )
    except ValidationError as e:
        raise DomainError(f"invalid {schema} data: {e.errors()[0]['msg']}")
    return table


def _format(value: float) -> str:
    return repr(float(value))


def write_trace_csv(obj: Union[ComplexReflectionTrace, SpectrumTrace, DataTable]) -> str:
    """Write a trace or table in the format `parse_trace_csv` reads back."""
    lines: List[str] = []
    if isinstance(obj, ComplexReflectionTrace):
        lines.append("f_Hz,re,im")
        lines += [
            f"{_format(f)},{_format(s.real)},{_format(s.imag)}" for f, s in zip(obj.frequencies, obj.s11)
        ]
    elif isinstance(obj, SpectrumTrace):
        lines.append(f"# rbw_Hz={_format(obj.rbw)}")
        lines.append(f"# pump_on={'true' if obj.pump_on else 'false'}")
        for key, value in (
            ("pump_frequency_Hz", obj.pump_frequency),
            ("pilot_frequency_Hz", obj.pilot_frequency),
            ("pilot_power_dBm", obj.pilot_power_dbm),
        ):
            if value is not None:
                lines.append(f"# {key}={_format(value)}")
        lines.append("f_Hz,psd_dBm")
        lines += [f"{_format(f)},{_format(p)}" for f, p in zip(obj.frequencies, obj.psd_dbm)]
    elif isinstance(obj, DataTable):
        lines += [f"# {key}={value}" for key, value in obj.metadata.items()]
        names = list(obj.columns)
        lines.append(",".join(names))
        lines += [",".join(_format(obj.columns[name][k]) for name in names) for k in range(len(obj))]
    else:
        raise DomainError(f"cannot write {type(obj).__name__} as CSV")
    return "\n".join(lines) + "\n"


def table_from_columns(schema: str, **columns: Any) -> DataTable:
    """Build a DataTable, checking the schema's mandatory columns."""
    names = _check_header(list(columns), schema)
    arrays = {name: np.asarray(columns[key], dtype=float).reshape(-1) for name, key in zip(names, columns)}
    lengths = {a.size for a in arrays.values()}
    if len(lengths) > 1:
        raise DomainError("columns must have equal length")
    return DataTable(schema_name=schema, columns=arrays)
