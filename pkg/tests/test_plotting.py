import numpy as np
import pytest

from jofet_amp.core.errors import PlotSpecError
from jofet_amp.core.models import AxisSpec, PlotSpec
from jofet_amp.utils.plotting import emit_plot
from jofet_amp.utils.records import build_record

X = np.linspace(4e9, 6e9, 5)


def _record():
    return build_record(
        "band",
        series={
            "f_r": X,
            "lower": X * 1e-3,
            "upper": X * 2e-3,
            "central": X * 1.5e-3,
            "power": [1e-15, 2e-15],
            "gain_db": [1.0, 2.0, np.nan, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        },
        series_units={
            "f_r": "Hz",
            "lower": "s^-1",
            "upper": "s^-1",
            "central": "s^-1",
            "power": "W",
            "gain_db": "dB",
        },
    )


def _spec(kind="trace", series=("lower",), **extra):
    return PlotSpec(
        kind=kind,
        x=AxisSpec(label="resonance", unit="Hz"),
        y=extra.pop("y", AxisSpec(label="rate", unit="s^-1", log=True)),
        series=list(series),
        x_series="f_r",
        **extra,
    )


def test_trace_plot_is_byte_deterministic():
    first = emit_plot(_spec(series=("lower", "upper")), _record())
    second = emit_plot(_spec(series=("lower", "upper")), _record())
    assert first == second
    assert b"<svg" in first


def test_envelope_plot():
    svg = emit_plot(_spec("envelope", ("lower", "upper", "central"), title="kappa_i band"), _record())
    assert b"<svg" in svg


def test_map_plot_masks_missing_points():
    spec = _spec(
        "map",
        ("gain_db",),
        y=AxisSpec(label="pump power", unit="W"),
        y_series="power",
        color_unit="dB",
    )
    assert emit_plot(spec, _record()).startswith(b"<?xml")


def test_missing_series():
    with pytest.raises(PlotSpecError):
        emit_plot(_spec(series=("kappa_ex",)), _record())


def test_unit_mismatch():
    spec = _spec(series=("lower",), y=AxisSpec(label="rate", unit="Hz"))
    with pytest.raises(PlotSpecError):
        emit_plot(spec, _record())


def test_map_needs_grid_description():
    with pytest.raises(PlotSpecError):
        emit_plot(_spec("map", ("gain_db",), y=AxisSpec(label="pump power", unit="W")), _record())
    spec = _spec("map", ("gain_db",), y=AxisSpec(label="power", unit="Hz"), y_series="f_r", color_unit="dB")
    with pytest.raises(PlotSpecError):
        emit_plot(spec, _record())


def test_series_length_must_match_abscissa():
    spec = _spec(series=("power",), y=AxisSpec(label="power", unit="W"))
    with pytest.raises(PlotSpecError):
        emit_plot(spec, _record())


def test_envelope_needs_bounds():
    with pytest.raises(PlotSpecError):
        emit_plot(_spec("envelope", ("lower",)), _record())
