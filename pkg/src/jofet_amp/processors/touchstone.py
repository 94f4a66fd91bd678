"""Touchstone v1 one-port reader and writer."""

import logging
from typing import Union

import numpy as np
from pydantic import ValidationError

from jofet_amp.core.errors import DomainError, ParseError
from jofet_amp.core.models import ComplexReflectionTrace

logger = logging.getLogger(__name__)

FREQUENCY_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
DATA_FORMATS = {"RI", "MA", "DB"}


def _text(data: Union[bytes, str]) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"file is not UTF-8 text: {e.reason}")
    return data


def _parse_option_line(line: str, number: int):
    tokens = line[1:].split()
    unit, fmt, reference = "GHZ", "MA", 50.0
    i = 0
    while i < len(tokens):
        token = tokens[i].upper()
        if token in FREQUENCY_UNITS:
            unit = token
        elif token in DATA_FORMATS:
            fmt = token
        elif token == "S":
            pass
        elif token in ("Y", "Z", "H", "G"):
            raise ParseError(f"only S parameters are supported, got '{tokens[i]}'", line=number)
        elif token == "R":
            if i + 1 >= len(tokens):
                raise ParseError("reference impedance missing after R", line=number)
            try:
                reference = float(tokens[i + 1])
            except ValueError:
                raise ParseError(f"invalid reference impedance '{tokens[i + 1]}'", line=number)
            i += 1
        else:
            raise ParseError(f"unknown option token '{tokens[i]}'", line=number)
        i += 1
    return FREQUENCY_UNITS[unit], fmt, reference


def _to_complex(first: np.ndarray, second: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return first + 1j * second
    magnitude = first if fmt == "MA" else 10.0 ** (first / 20.0)
    return magnitude * np.exp(1j * np.deg2rad(second))


def parse_touchstone_s1p(data: Union[bytes, str]) -> ComplexReflectionTrace:
    """
    Parse a one-port Touchstone file.

    Args:
        data: File contents

    Returns:
        ComplexReflectionTrace with frequencies in Hz

    Raises:
        ParseError: On an unknown option token or a malformed data row
        DomainError: If the frequencies are not strictly increasing
    """
    scale, fmt, reference = FREQUENCY_UNITS["GHZ"], "MA", 50.0
    seen_options = False
    rows = []
    for number, raw in enumerate(_text(data).splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if seen_options:
                logger.warning(f"Ignoring repeated option line {number}")
                continue
            scale, fmt, reference = _parse_option_line(line, number)
            seen_options = True
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"one-port rows hold 3 numbers, found {len(fields)}", line=number)
        try:
            rows.append([float(x) for x in fields])
        except ValueError as e:
            raise ParseError(f"invalid number: {e}", line=number)

    if not rows:
        raise ParseError("file holds no data rows")
    table = np.array(rows)
    if reference != 50.0:
        logger.info(f"Reference impedance {reference} Ohm is recorded but not renormalized")
    try:
        return ComplexReflectionTrace(
            frequencies=table[:, 0] * scale,
            s11=_to_complex(table[:, 1], table[:, 2], fmt),
        )
    except ValidationError as e:
        raise DomainError(f"invalid trace: {e.errors()[0]['msg']}")


def write_touchstone_s1p(trace: ComplexReflectionTrace) -> str:
    """Write a trace as `# Hz S RI R 50` with round-trip precision."""
    lines = ["! one-port reflection", "# Hz S RI R 50"]
    for f, s in zip(trace.frequencies, trace.s11):
        lines.append(f"{float(f)!r} {float(s.real)!r} {float(s.imag)!r}")
    return "\n".join(lines) + "\n"
