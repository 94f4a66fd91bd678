"""SVG rendering of ResultRecord series."""

import io
import logging
from typing import List

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from jofet_amp.core.errors import PlotSpecError
from jofet_amp.core.models import AxisSpec, PlotSpec, ResultRecord

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "jofet-amp"


def _axis_label(axis: AxisSpec) -> str:
    return f"{axis.label} [{axis.unit}]"


def _series(record: ResultRecord, name: str, unit: str) -> np.ndarray:
    if name not in record.series:
        raise PlotSpecError(f"series '{name}' is not in the {record.command} record")
    declared = record.series_units.get(name)
    if declared is None:
        raise PlotSpecError(f"series '{name}' has no unit")
    if declared != unit:
        raise PlotSpecError(f"series '{name}' is in {declared}, axis expects {unit}")
    return np.asarray(record.series[name], dtype=float)


def _resolve(spec: PlotSpec, record: ResultRecord) -> List[np.ndarray]:
    """Look up every referenced series, checking units and shapes."""
    x = _series(record, spec.x_series, spec.x.unit)
    if spec.kind == "map":
        if spec.y_series is None or spec.color_unit is None:
            raise PlotSpecError("map plots need y_series and color_unit")
        if len(spec.series) != 1:
            raise PlotSpecError("map plots take exactly one series")
        y = _series(record, spec.y_series, spec.y.unit)
        z = _series(record, spec.series[0], spec.color_unit)
        if z.size != x.size * y.size:
            raise PlotSpecError(f"series '{spec.series[0]}' does not fill a {y.size}x{x.size} grid")
        return [x, y, z.reshape(y.size, x.size)]

    if spec.kind == "envelope" and len(spec.series) not in (2, 3):
        raise PlotSpecError("envelope plots take lower, upper and an optional central series")
    if not spec.series:
        raise PlotSpecError("plot references no series")
    columns = [x]
    for name in spec.series:
        values = _series(record, name, spec.y.unit)
        if values.size != x.size:
            raise PlotSpecError(f"series '{name}' has {values.size} points, abscissa has {x.size}")
        columns.append(values)
    return columns


def emit_plot(spec: PlotSpec, record: ResultRecord) -> bytes:
    """
    Render a plot of record series as an SVG document.

    Args:
        spec: Plot description
        record: Record holding the referenced series

    Returns:
        SVG bytes; identical inputs give identical bytes

    Raises:
        PlotSpecError: If a reference does not resolve or a unit does not match
    """
    data = _resolve(spec, record)

    figure = Figure(figsize=(6.4, 4.8))
    FigureCanvasAgg(figure)
    ax = figure.add_subplot(1, 1, 1)

    if spec.kind == "trace":
        x = data[0]
        for name, values in zip(spec.series, data[1:]):
            ax.plot(x, values, label=name)
        if len(spec.series) > 1:
            ax.legend()
    elif spec.kind == "envelope":
        x, lower, upper = data[:3]
        ax.fill_between(x, lower, upper, alpha=0.4, label=f"{spec.series[0]} .. {spec.series[1]}")
        if len(data) == 4:
            ax.plot(x, data[3], color="black", label=spec.series[2])
        ax.legend()
    else:
        x, y, z = data
        mesh = ax.pcolormesh(x, y, np.ma.masked_invalid(z), shading="nearest")
        colorbar = figure.colorbar(mesh, ax=ax)
        colorbar.set_label(f"{spec.series[0]} [{spec.color_unit}]")

    ax.set_xlabel(_axis_label(spec.x))
    ax.set_ylabel(_axis_label(spec.y))
    if spec.x.log:
        ax.set_xscale("log")
    if spec.y.log:
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)

    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    logger.debug(f"Rendered {spec.kind} plot of {record.command}")
    return buffer.getvalue()
