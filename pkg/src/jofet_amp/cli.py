"""Command-line interface for amplifier modeling, fitting and calibration."""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np
import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from jofet_amp.analyzers.chain import (
    callen_welton_temperature,
    delta_snr,
    estimate_attenuation,
    fit_hemt_calibration,
    refer_to_input,
    snr,
)
from jofet_amp.analyzers.circuit import (
    DEFAULT_F_GEO,
    RateBandPredictor,
    band_evaluate,
    fit_coupling,
    fit_dissipation,
    fit_dissipation_band,
    junction_state,
    kappa_ex_model,
    kappa_i_model,
    state_from_inductance,
)
from jofet_amp.analyzers.kerr import (
    KerrBandPredictor,
    josephson_inductance_from_critical_current,
    kerr_conventions,
    kerr_from_sweep,
    kerr_predict,
)
from jofet_amp.analyzers.paramp import expected_noise_from_gain_db, uncertainty_band, uncertainty_band_monte_carlo
from jofet_amp.analyzers.resonance import fit_one_port, reflection_model
from jofet_amp.core.config import ToolConfig, load_config
from jofet_amp.core.errors import DomainError, JofetError, PlotSpecError, SchemaError
from jofet_amp.core.models import (
    AxisSpec,
    CircuitModel,
    ComplexReflectionTrace,
    KerrCavity,
    NoiseChain,
    PlotSpec,
    PowerSweepPoint,
    PumpDrive,
    ResonatorFit,
    ResultRecord,
    SpectrumTrace,
)
from jofet_amp.core.pipeline import CalibrationPipeline
from jofet_amp.processors.tables import parse_trace_csv, table_from_columns, write_trace_csv
from jofet_amp.processors.touchstone import parse_touchstone_s1p, write_touchstone_s1p
from jofet_amp.simulation.cavity import critical_power, gain_map, synth_reflection
from jofet_amp.simulation.gate import GateMap, synth_gate_sweep
from jofet_amp.simulation.spectrum import synth_spectrum
from jofet_amp.utils.physics import TWO_PI, db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm
from jofet_amp.utils.plotting import emit_plot
from jofet_amp.utils.records import (
    build_record,
    error_record,
    file_digest,
    load_record,
    quantity,
    save_record,
)

logger = logging.getLogger(__name__)

app = typer.Typer(help="Gate-tunable Josephson parametric amplifier toolkit.", no_args_is_help=True)
simulate_app = typer.Typer(help="Synthesize traces and tables from the device models.", no_args_is_help=True)
app.add_typer(simulate_app, name="simulate")

console = Console()
err_console = Console(stderr=True)


def _trace_axes(x_label: str, x_unit: str, y_label: str, y_unit: str) -> Tuple[AxisSpec, AxisSpec]:
    return AxisSpec(label=x_label, unit=x_unit), AxisSpec(label=y_label, unit=y_unit)


def _plot(kind: str, x: Tuple[str, str, str], y: Tuple[str, str], series: List[str], **extra: Any) -> PlotSpec:
    x_series, x_label, x_unit = x
    y_label, y_unit = y
    x_axis, y_axis = _trace_axes(x_label, x_unit, y_label, y_unit)
    return PlotSpec(kind=kind, x=x_axis, y=y_axis, series=series, x_series=x_series, **extra)


DEFAULT_PLOTS: Dict[str, PlotSpec] = {
    "fit-resonance": _plot("trace", ("f_Hz", "Frequency", "Hz"), ("|S11|", "dB"), ["data_dB", "fit_dB"]),
    "fit-circuit": _plot(
        "trace",
        ("fr_Hz", "Resonance", "Hz"),
        ("Rate", "s^-1"),
        ["kappa_i", "kappa_i_model", "kappa_ex", "kappa_ex_model"],
    ),
    "kerr-extract": _plot("trace", ("Pin_dBm", "Input power", "dBm"), ("Resonance", "Hz"), ["fr_Hz"]),
    "kerr-predict": _plot("envelope", ("fr_Hz", "Resonance", "Hz"), ("K", "s^-1"), ["K_lower", "K_upper"]),
    "gain-map": _plot(
        "map",
        ("pump_frequency_Hz", "Pump frequency", "Hz"),
        ("Pump power", "dBm"),
        ["gain_dB"],
        y_series="pump_power_dBm",
        color_unit="dB",
    ),
    "calibrate-hemt": _plot("trace", ("Tset_K", "Plate temperature", "K"), ("Noise", "K"), ["psd_K", "fit_K"]),
    "delta-snr": _plot("trace", ("f_Hz", "Frequency", "Hz"), ("PSD", "dBm"), ["on_dBm", "off_dBm"]),
    "simulate reflection": _plot("trace", ("f_Hz", "Frequency", "Hz"), ("|S11|", "dB"), ["s11_dB"]),
    "simulate spectrum": _plot("trace", ("f_Hz", "Frequency", "Hz"), ("PSD", "dBm"), ["on_dBm", "off_dBm"]),
    "simulate gate-sweep": _plot("trace", ("Vg_V", "Gate voltage", "V"), ("Resonance", "Hz"), ["fr_Hz"]),
}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def display_record(record: ResultRecord) -> None:
    """Print the scalar outputs of a record as a table."""
    table = Table(title=record.command, show_header=True)
    table.add_column("Output")
    table.add_column("Value", justify="right")
    table.add_column("Unit")
    table.add_column("1 sigma", justify="right")
    for name, value in record.outputs.items():
        if isinstance(value.value, (list, str)):
            continue
        sigma = "" if value.uncertainty is None or isinstance(value.uncertainty, list) else f"{value.uncertainty:.3g}"
        table.add_row(name, f"{value.value:.6g}", value.unit, sigma)
    console.print(table)


def _config(ctx: typer.Context) -> ToolConfig:
    return ctx.obj["config"]


def _execute(
    ctx: typer.Context,
    command: str,
    out: Optional[Path],
    plot: Optional[Path],
    body: Callable[[], ResultRecord],
) -> None:
    """Run a command body, persisting its record and plot, and map errors to exit codes."""
    try:
        try:
            record = body()
        except ValidationError as e:
            raise DomainError(f"invalid value: {e.errors()[0]['msg']}") from e
        if plot is not None:
            spec = DEFAULT_PLOTS.get(command)
            if spec is None:
                logger.warning(f"{command} has no default plot; use the plot command with a spec")
            else:
                plot.write_bytes(emit_plot(spec, record))
    except JofetError as e:
        err_console.print(f"[red]{e.category} error:[/red] {e.message}")
        logger.error(f"{command} failed: {e.message}")
        record = error_record(command, e)
        ctx.obj["record"] = record
        if out is not None:
            save_record(record, out)
        raise typer.Exit(code=e.exit_code)

    ctx.obj["record"] = record
    if out is not None:
        save_record(record, out)
    display_record(record)


def _read_reflection(path: Path) -> ComplexReflectionTrace:
    data = path.read_bytes()
    if path.suffix.lower() == ".s1p":
        return parse_touchstone_s1p(data)
    return parse_trace_csv(data, "reflection")


def _read_spectrum(path: Path) -> SpectrumTrace:
    return parse_trace_csv(path.read_bytes(), "spectrum")


def _require(value: Optional[float], flag: str) -> float:
    if value is None:
        raise SchemaError(f"missing option '{flag}' (not set in the configuration either)", name=flag, usage=True)
    return value


def _out_option() -> Any:
    return typer.Option(None, "--out", "-o", help="Write the result record (YAML) here", dir_okay=False)


def _plot_option() -> Any:
    return typer.Option(None, "--plot", help="Write the default plot (SVG) here", dir_okay=False)


def _in_option(help_text: str) -> Any:
    return typer.Option(..., "--in", "-i", help=help_text, exists=True, dir_okay=False)


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", "-c", help="YAML configuration file", exists=True, dir_okay=False
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Model, fit and calibrate gate-tunable Josephson parametric amplifiers."""
    _setup_logging(verbose)
    if ctx.obj is None:
        ctx.obj = {}
    try:
        ctx.obj["config"] = load_config(config)
    except JofetError as e:
        err_console.print(f"[red]{e.category} error:[/red] {e.message}")
        ctx.obj["record"] = error_record("config", e)
        raise typer.Exit(code=e.exit_code)


@app.command("fit-resonance")
def fit_resonance_command(
    ctx: typer.Context,
    input_path: Path = _in_option("Reflection trace (.s1p or CSV)"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Fit a one-port reflection trace for f_r, kappa_i and kappa_ex."""

    def body() -> ResultRecord:
        trace = _read_reflection(input_path)
        fit = fit_one_port(trace)
        f = trace.frequencies
        model = fit.background_amplitude * np.abs(
            reflection_model(TWO_PI * (f - fit.f_r), fit.kappa_i, fit.kappa_ex)
        )
        sigma = fit.uncertainties
        return build_record(
            "fit-resonance",
            inputs={"file": input_path.name, "sha256": file_digest(input_path)},
            outputs={
                "f_r": quantity(fit.f_r, "Hz", sigma.get("f_r")),
                "kappa_i": quantity(fit.kappa_i, "s^-1", sigma.get("kappa_i")),
                "kappa_ex": quantity(fit.kappa_ex, "s^-1", sigma.get("kappa_ex")),
                "kappa_tot": quantity(fit.kappa_tot, "s^-1"),
                "efficiency": quantity(fit.efficiency, "1"),
                "cable_delay": quantity(fit.cable_delay, "s", sigma.get("cable_delay")),
                "residual_norm": quantity(fit.residual_norm, "1"),
            },
            series={
                "f_Hz": f,
                "data_dB": linear_to_db(np.maximum(np.abs(trace.s11), 1e-12) ** 2),
                "fit_dB": linear_to_db(np.maximum(model, 1e-12) ** 2),
            },
            series_units={"f_Hz": "Hz", "data_dB": "dB", "fit_dB": "dB"},
        )

    _execute(ctx, "fit-resonance", out, plot, body)


@app.command("fit-circuit")
def fit_circuit_command(
    ctx: typer.Context,
    input_path: Path = _in_option("Gate-sweep table (Vg_V, fr_Hz, kappa_i_Hz, kappa_ex_Hz)"),
    f0: float = typer.Option(..., "--f0", help="Bare resonance in Hz"),
    f_geo: float = typer.Option(DEFAULT_F_GEO, "--f-geo", help="Geometric resonance in Hz"),
    f0_min: Optional[float] = typer.Option(None, "--f0-min", help="Lower end of the f0 band in Hz"),
    f0_max: Optional[float] = typer.Option(None, "--f0-max", help="Upper end of the f0 band in Hz"),
    grid: int = typer.Option(10, "--grid", help="Bare frequencies sampled across the band"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Fit alpha*l, R_J and C_k to rates measured across a gate sweep."""

    def body() -> ResultRecord:
        table = parse_trace_csv(input_path.read_bytes(), "gate_sweep")
        order = np.argsort(table["fr_Hz"])
        f_r = table["fr_Hz"][order]
        kappa_i = TWO_PI * table["kappa_i_Hz"][order]
        kappa_ex = TWO_PI * table["kappa_ex_Hz"][order]

        if (f0_min is None) != (f0_max is None):
            raise SchemaError("--f0-min and --f0-max go together", name="--f0-max", usage=True)
        banded = f0_min is not None
        if banded:
            dissipation = fit_dissipation_band(list(zip(f_r, kappa_i)), (f0_min, f0_max), grid, f_geo)
        else:
            dissipation = fit_dissipation(list(zip(f_r, kappa_i)), f0, f_geo)
        coupling = fit_coupling(list(zip(f_r, kappa_ex)), f0, f_geo)

        model = CircuitModel.from_design(
            f0=f0, f_geo=f_geo, alpha_l=dissipation.alpha_l, r_j=dissipation.r_j, c_k=coupling.c_k
        )
        states = [junction_state(float(f), model) for f in f_r]
        series = {
            "fr_Hz": f_r,
            "Vg_V": table["Vg_V"][order],
            "kappa_i": kappa_i,
            "kappa_ex": kappa_ex,
            "kappa_i_model": [kappa_i_model(s, model) for s in states],
            "kappa_ex_model": [kappa_ex_model(s, model) for s in states],
        }
        units = {name: "s^-1" for name in series}
        units.update({"fr_Hz": "Hz", "Vg_V": "V"})
        outputs = {
            "alpha_l": quantity(dissipation.alpha_l, "1", dissipation.alpha_l_sigma),
            "r_j": quantity(dissipation.r_j, "Ohm", dissipation.r_j_sigma),
            "c_k": quantity(coupling.c_k, "F", coupling.c_k_sigma),
            "z0": quantity(model.z0, "Ohm"),
        }
        if banded:
            outputs["alpha_l_systematic"] = quantity(dissipation.alpha_l_systematic, "1")
            outputs["r_j_systematic"] = quantity(dissipation.r_j_systematic, "Ohm")
            envelope = band_evaluate(
                RateBandPredictor(f_r, kappa_i, "kappa_i", f_geo=f_geo), (f0_min, f0_max), grid
            )
            series["kappa_i_lower"] = envelope.lower
            series["kappa_i_upper"] = envelope.upper
            units["kappa_i_lower"] = units["kappa_i_upper"] = envelope.unit
        return build_record(
            "fit-circuit",
            inputs={"file": input_path.name, "sha256": file_digest(input_path), "f0": f0, "f_geo": f_geo},
            outputs=outputs,
            series=series,
            series_units=units,
        )

    _execute(ctx, "fit-circuit", out, plot, body)


@app.command("kerr-extract")
def kerr_extract_command(
    ctx: typer.Context,
    input_path: Path = _in_option("Power-sweep table (Pin_dBm, fr_Hz)"),
    resonance: Optional[Path] = typer.Option(
        None, "--resonance", help="Small-signal reflection trace fixing kappa_i and kappa_ex", exists=True
    ),
    kappa_i_hz: Optional[float] = typer.Option(None, "--kappa-i-hz", help="kappa_i/2pi in Hz"),
    kappa_ex_hz: Optional[float] = typer.Option(None, "--kappa-ex-hz", help="kappa_ex/2pi in Hz"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Extract the Kerr coefficient from the resonance shift versus input power."""

    def body() -> ResultRecord:
        table = parse_trace_csv(input_path.read_bytes(), "power_sweep")
        if resonance is not None:
            cavity = fit_one_port(_read_reflection(resonance))
        else:
            cavity = ResonatorFit(
                f_r=float(table["fr_Hz"][np.argmin(table["Pin_dBm"])]),
                kappa_i=TWO_PI * _require(kappa_i_hz, "--kappa-i-hz"),
                kappa_ex=TWO_PI * _require(kappa_ex_hz, "--kappa-ex-hz"),
            )
        points = [
            PowerSweepPoint(input_power=float(dbm_to_watts(p)), signal_frequency=f, resonant_frequency=f)
            for p, f in zip(table["Pin_dBm"], table["fr_Hz"])
        ]
        estimate = kerr_from_sweep(points, cavity)
        conventions = kerr_conventions(estimate.K)
        return build_record(
            "kerr-extract",
            inputs={"file": input_path.name, "sha256": file_digest(input_path)},
            outputs={
                "K": quantity(estimate.K, "s^-1", estimate.uncertainty),
                "K_ordinary": quantity(conventions["ordinary_Hz"], "Hz", estimate.uncertainty / TWO_PI),
                "shift_per_photon": quantity(estimate.shift_per_photon, "s^-1", estimate.uncertainty / 2.0),
                "shift_per_power": quantity(estimate.K_per_power, "Hz/W", estimate.K_per_power_uncertainty),
                "shift_per_power_mhz_per_fw": quantity(estimate.mhz_per_fw, "MHz/fW"),
                "points_used": quantity(estimate.points_used, "1"),
            },
            series={"Pin_dBm": table["Pin_dBm"], "fr_Hz": table["fr_Hz"]},
            series_units={"Pin_dBm": "dBm", "fr_Hz": "Hz"},
        )

    _execute(ctx, "kerr-extract", out, plot, body)


@app.command("kerr-predict")
def kerr_predict_command(
    ctx: typer.Context,
    f0: float = typer.Option(..., "--f0", help="Bare resonance in Hz"),
    f_geo: float = typer.Option(DEFAULT_F_GEO, "--f-geo", help="Geometric resonance in Hz"),
    i_c: Optional[float] = typer.Option(None, "--i-c", help="Junction critical current in A"),
    f_r: Optional[float] = typer.Option(None, "--f-r", help="Measured resonance in Hz"),
    f0_min: Optional[float] = typer.Option(None, "--f0-min", help="Lower end of the f0 band in Hz"),
    f0_max: Optional[float] = typer.Option(None, "--f0-max", help="Upper end of the f0 band in Hz"),
    grid: int = typer.Option(10, "--grid", help="Bare frequencies sampled across the band"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Predict the Kerr coefficient from a critical current or a measured resonance."""

    def body() -> ResultRecord:
        if (i_c is None) == (f_r is None):
            raise SchemaError("give exactly one of --i-c and --f-r", name="--i-c", usage=True)
        model = CircuitModel.from_design(f0=f0, f_geo=f_geo)
        if i_c is not None:
            state = state_from_inductance(josephson_inductance_from_critical_current(i_c), model)
        else:
            state = junction_state(f_r, model)
        K = kerr_predict(state)
        conventions = kerr_conventions(K)
        outputs = {
            "K": quantity(K, "s^-1"),
            "K_ordinary": quantity(conventions["ordinary_Hz"], "Hz"),
            "l_j": quantity(state.l_j, "H"),
            "kl": quantity(state.kl, "rad"),
            "f_r": quantity(state.f_r, "Hz"),
            "delta_u_bar": quantity(state.delta_u_bar, "1"),
        }
        series: Dict[str, Any] = {}
        units: Dict[str, str] = {}
        if f0_min is not None and f0_max is not None:
            envelope = band_evaluate(KerrBandPredictor([state.f_r], f_geo=f_geo), (f0_min, f0_max), grid)
            outputs["K_band_lower"] = quantity(envelope.lower[0], envelope.unit)
            outputs["K_band_upper"] = quantity(envelope.upper[0], envelope.unit)
            series = {"fr_Hz": envelope.abscissa, "K_lower": envelope.lower, "K_upper": envelope.upper}
            units = {"fr_Hz": "Hz", "K_lower": envelope.unit, "K_upper": envelope.unit}
        return build_record(
            "kerr-predict",
            inputs={"f0": f0, "f_geo": f_geo, "i_c": i_c, "f_r": f_r},
            outputs=outputs,
            series=series,
            series_units=units,
        )

    _execute(ctx, "kerr-predict", out, plot, body)


def _cavity(f_r: float, kappa_i_hz: float, kappa_ex_hz: float, kerr: float) -> KerrCavity:
    try:
        return KerrCavity(f_r=f_r, kappa_i=TWO_PI * kappa_i_hz, kappa_ex=TWO_PI * kappa_ex_hz, K=kerr)
    except ValidationError as e:
        raise DomainError(f"invalid cavity: {e.errors()[0]['msg']}")


@app.command("gain-map")
def gain_map_command(
    ctx: typer.Context,
    f_r: float = typer.Option(..., "--f-r", help="Small-signal resonance in Hz"),
    kappa_i_hz: float = typer.Option(..., "--kappa-i-hz", help="kappa_i/2pi in Hz"),
    kappa_ex_hz: float = typer.Option(..., "--kappa-ex-hz", help="kappa_ex/2pi in Hz"),
    kerr: float = typer.Option(..., "--kerr", help="Kerr shift per photon in s^-1 (negative)"),
    delta_hz: float = typer.Option(0.0, "--delta-hz", help="Signal-pump offset in Hz"),
    power_min: float = typer.Option(0.5, "--power-min", help="Lowest pump power over the critical power"),
    power_max: float = typer.Option(0.99, "--power-max", help="Highest pump power over the critical power"),
    n_power: int = typer.Option(50, "--n-power", help="Pump powers in the grid"),
    detuning_min: float = typer.Option(0.0, "--detuning-min", help="Lowest pump detuning in units of kappa"),
    detuning_max: float = typer.Option(2.0, "--detuning-max", help="Highest pump detuning in units of kappa"),
    n_detuning: int = typer.Option(50, "--n-detuning", help="Pump detunings in the grid"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Signal gain over pump power and pump frequency."""

    def body() -> ResultRecord:
        cavity = _cavity(f_r, kappa_i_hz, kappa_ex_hz, kerr)
        critical = critical_power(cavity)
        powers = critical.power * np.linspace(power_min, power_max, n_power)
        detunings = cavity.kappa * np.linspace(detuning_min, detuning_max, n_detuning)
        pumps = np.sort(cavity.f_r - detunings / TWO_PI)
        grid = gain_map(cavity, powers, pumps, TWO_PI * delta_hz)
        if np.all(np.isnan(grid.gain_db)):
            raise DomainError("every grid point is unstable")
        best = np.unravel_index(np.nanargmax(grid.gain_db), grid.gain_db.shape)
        return build_record(
            "gain-map",
            inputs={
                "f_r": f_r,
                "kappa_i_hz": kappa_i_hz,
                "kappa_ex_hz": kappa_ex_hz,
                "kerr": kerr,
                "delta_hz": delta_hz,
            },
            outputs={
                "critical_power_dbm": quantity(watts_to_dbm(critical.power), "dBm"),
                "critical_pump_frequency": quantity(critical.f_pump, "Hz"),
                "max_gain_db": quantity(grid.max_gain_db, "dB"),
                "max_gain_pump_power_dbm": quantity(watts_to_dbm(powers[best[0]]), "dBm"),
                "max_gain_pump_frequency": quantity(pumps[best[1]], "Hz"),
            },
            series={
                "pump_power_dBm": watts_to_dbm(powers),
                "pump_frequency_Hz": pumps,
                "gain_dB": grid.gain_db,
            },
            series_units={"pump_power_dBm": "dBm", "pump_frequency_Hz": "Hz", "gain_dB": "dB"},
        )

    _execute(ctx, "gain-map", out, plot, body)


@app.command("calibrate-hemt")
def calibrate_hemt_command(
    ctx: typer.Context,
    input_path: Path = _in_option("Plate-temperature sweep (Tset_K, psd_K)"),
    frequency: Optional[float] = typer.Option(None, "--frequency", help="Measurement frequency in Hz"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Fit the chain noise at the mixing-chamber plate from a temperature sweep."""

    def body() -> ResultRecord:
        f = _require(_config(ctx).merged(frequency_hz=frequency).chain.frequency_hz, "--frequency")
        table = parse_trace_csv(input_path.read_bytes(), "hemt_sweep")
        t_set, psd = table["Tset_K"], table["psd_K"]
        calibration = fit_hemt_calibration(t_set, psd, f)
        fitted = calibration.gain_scale * (callen_welton_temperature(t_set, f) + calibration.t_hemt_mc)
        return build_record(
            "calibrate-hemt",
            inputs={"file": input_path.name, "sha256": file_digest(input_path), "frequency": f},
            outputs={
                "t_hemt_mc": quantity(calibration.t_hemt_mc, "K", calibration.t_hemt_mc_sigma),
                "gain_scale": quantity(calibration.gain_scale, "1", calibration.gain_scale_sigma),
            },
            series={"Tset_K": t_set, "psd_K": psd, "fit_K": fitted},
            series_units={"Tset_K": "K", "psd_K": "K", "fit_K": "K"},
        )

    _execute(ctx, "calibrate-hemt", out, plot, body)


@app.command("estimate-attenuation")
def estimate_attenuation_command(
    ctx: typer.Context,
    signal_dbm: float = typer.Option(..., "--signal-dbm", help="Source output power in dBm"),
    margin_db: float = typer.Option(..., "--margin-db", help="Signal height above the floor in dB"),
    t_noise: Optional[float] = typer.Option(None, "--t-noise", help="Chain noise temperature in K"),
    rbw: Optional[float] = typer.Option(None, "--rbw", help="Resolution bandwidth in Hz"),
    cavity_loss_db: float = typer.Option(0.0, "--cavity-loss-db", help="Off-state cavity loss in dB"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Drive-line attenuation from a tone observed above the chain floor."""

    def body() -> ResultRecord:
        chain = _config(ctx).merged(t_hemt_mc_k=t_noise, rbw_hz=rbw).chain
        estimate = estimate_attenuation(
            signal_dbm,
            margin_db,
            _require(chain.t_hemt_mc_k, "--t-noise"),
            _require(chain.rbw_hz, "--rbw"),
            cavity_loss_db,
        )
        return build_record(
            "estimate-attenuation",
            inputs={"signal_dbm": signal_dbm, "margin_db": margin_db, "cavity_loss_db": cavity_loss_db},
            outputs={
                "floor_dbm": quantity(estimate.floor_dbm, "dBm"),
                "input_signal_dbm": quantity(estimate.input_signal_dbm, "dBm"),
                "attenuation_db": quantity(estimate.attenuation_db, "dB"),
            },
        )

    _execute(ctx, "estimate-attenuation", out, plot, body)


@app.command("refer-noise")
def refer_noise_command(
    ctx: typer.Context,
    eta_s: Optional[float] = typer.Option(None, "--eta-s", help="System transmission"),
    eta_c_off: Optional[float] = typer.Option(None, "--eta-c-off", help="Off-state cavity transmission"),
    t_hemt: Optional[float] = typer.Option(None, "--t-hemt", help="Chain noise at the plate in K"),
    spectrum_on: Optional[Path] = typer.Option(None, "--on", help="Pump-on spectrum CSV", exists=True),
    spectrum_off: Optional[Path] = typer.Option(None, "--off", help="Pump-off spectrum CSV", exists=True),
    pilot_f: Optional[float] = typer.Option(None, "--pilot-f", help="Pilot frequency in Hz"),
    psd_k: Optional[float] = typer.Option(None, "--psd-k", help="Noise measured at the plate in K"),
    gain_db: Optional[float] = typer.Option(None, "--gain-db", help="Amplifier gain for --psd-k"),
    frequency: Optional[float] = typer.Option(None, "--frequency", help="Frequency for --psd-k in Hz"),
    kappa_ratio: Optional[float] = typer.Option(None, "--kappa-ratio", help="kappa_i/kappa_ex for the model"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Refer measured noise to the device input."""

    def body() -> ResultRecord:
        config = _config(ctx).merged(eta_s=eta_s, eta_c_off=eta_c_off, t_hemt_mc_k=t_hemt, frequency_hz=frequency)
        chain = config.chain
        eta = _require(chain.eta_s, "--eta-s")
        t_add = _require(chain.t_hemt_mc_k, "--t-hemt")
        inputs: Dict[str, Any] = {"eta_s": eta, "t_hemt_mc_k": t_add}

        if spectrum_on is not None or spectrum_off is not None:
            if spectrum_on is None or spectrum_off is None:
                raise SchemaError("spectral referral needs both --on and --off", name="--off", usage=True)
            on, off = _read_spectrum(spectrum_on), _read_spectrum(spectrum_off)
            f_pilot = _require(pilot_f if pilot_f is not None else on.pilot_frequency, "--pilot-f")
            _require(chain.eta_c_off, "--eta-c-off")
            report = CalibrationPipeline(chain).run(on, off, f_pilot, kappa_ratio)
            inputs.update({"on": file_digest(spectrum_on), "off": file_digest(spectrum_off), "pilot_f": f_pilot})
            outputs = {
                "gain_db": quantity(report.gain_db, "dB"),
                "eta_off": quantity(report.eta_off, "1"),
                "eta_on": quantity(report.eta_on, "1"),
                "floor_on_dbm": quantity(report.floor_on_dbm, "dBm"),
                "floor_off_dbm": quantity(report.floor_off_dbm, "dBm"),
                "input_noise_off": quantity(report.referred_off.input_noise, "K"),
                "input_noise_on": quantity(report.referred_on.input_noise, "K"),
                "total_noise_on": quantity(report.referred_on.total, "K"),
            }
            if report.delta_snr_db is not None:
                outputs["delta_snr_db"] = quantity(report.delta_snr_db, "dB")
            if report.expected_noise_k is not None:
                outputs["expected_noise_k"] = quantity(report.expected_noise_k, "K")
            return build_record("refer-noise", inputs=inputs, outputs=outputs)

        measured = _require(psd_k, "--psd-k")
        f = _require(chain.frequency_hz, "--frequency")
        gain = 1.0 if gain_db is None else float(db_to_linear(gain_db))
        referred = refer_to_input(measured, eta * gain, t_add, f)
        inputs.update({"psd_k": measured, "gain_db": gain_db, "frequency": f})
        outputs = {
            "total": quantity(referred.total, "K"),
            "input_noise": quantity(referred.input_noise, "K"),
            "vacuum_term": quantity(referred.vacuum_term, "K"),
            "hemt_term": quantity(referred.hemt_term, "K"),
            "eta": quantity(referred.eta, "1"),
        }
        if kappa_ratio is not None and gain_db is not None:
            expected = expected_noise_from_gain_db(gain_db, kappa_ratio, eta, t_add, f)
            outputs["expected_noise_k"] = quantity(float(expected), "K")
        return build_record("refer-noise", inputs=inputs, outputs=outputs)

    _execute(ctx, "refer-noise", out, plot, body)


@app.command("noise-band")
def noise_band_command(
    ctx: typer.Context,
    gain_db: float = typer.Option(..., "--gain-db", help="Amplifier gain in dB"),
    gain_db_sigma: float = typer.Option(0.0, "--gain-db-sigma", help="One-sigma of the gain in dB"),
    kappa_ratio: float = typer.Option(..., "--kappa-ratio", help="kappa_i/kappa_ex"),
    kappa_ratio_sigma: float = typer.Option(0.0, "--kappa-ratio-sigma", help="One-sigma of kappa_i/kappa_ex"),
    eta_s: Optional[float] = typer.Option(None, "--eta-s", help="System transmission"),
    eta_s_sigma: float = typer.Option(0.0, "--eta-s-sigma", help="One-sigma of the system transmission"),
    t_hemt: Optional[float] = typer.Option(None, "--t-hemt", help="Chain noise at the plate in K"),
    t_hemt_sigma: float = typer.Option(0.0, "--t-hemt-sigma", help="One-sigma of the chain noise in K"),
    frequency: Optional[float] = typer.Option(None, "--frequency", help="Operating frequency in Hz"),
    drift_db: Optional[float] = typer.Option(None, "--drift-db", help="Calibration drift bound on eta_s in dB"),
    samples: int = typer.Option(0, "--samples", help="Monte-Carlo samples for a cross-check; 0 skips it"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed for the Monte-Carlo check"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Expected total input noise with its propagated uncertainty band."""

    def body() -> ResultRecord:
        config = _config(ctx).merged(
            eta_s=eta_s,
            t_hemt_mc_k=t_hemt,
            frequency_hz=frequency,
            calibration_drift_db=drift_db,
            **{"simulation.seed": seed},
        )
        chain = config.chain
        inputs = {
            "gain_db": (gain_db, gain_db_sigma),
            "kappa_ratio": (kappa_ratio, kappa_ratio_sigma),
            "eta_s": (_require(chain.eta_s, "--eta-s"), eta_s_sigma),
            "t_hemt": (_require(chain.t_hemt_mc_k, "--t-hemt"), t_hemt_sigma),
            "frequency": (_require(chain.frequency_hz, "--frequency"), 0.0),
        }
        band = uncertainty_band(inputs, chain.calibration_drift_db)
        outputs = {
            "expected_noise_k": quantity(band.central, "K", band.sigma),
            "band_low_k": quantity(band.low, "K"),
            "band_high_k": quantity(band.high, "K"),
        }
        for name, term in band.contributions.items():
            outputs[f"sigma_{name}"] = quantity(term, "K")
        if samples > 0:
            sampled = uncertainty_band_monte_carlo(
                inputs, chain.calibration_drift_db, samples=samples, seed=config.simulation.seed
            )
            outputs["sampled_sigma_k"] = quantity(sampled.sigma, "K")
        return build_record(
            "noise-band",
            inputs={name: list(value) for name, value in inputs.items()}
            | {"drift_db": chain.calibration_drift_db, "samples": samples},
            outputs=outputs,
            seed=config.simulation.seed if samples > 0 else None,
        )

    _execute(ctx, "noise-band", out, plot, body)


@app.command("delta-snr")
def delta_snr_command(
    ctx: typer.Context,
    spectrum_on: Path = typer.Option(..., "--on", help="Pump-on spectrum CSV", exists=True),
    spectrum_off: Path = typer.Option(..., "--off", help="Pump-off spectrum CSV", exists=True),
    pilot_f: Optional[float] = typer.Option(None, "--pilot-f", help="Pilot frequency in Hz"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """SNR improvement of the pilot tone from pump off to pump on."""

    def body() -> ResultRecord:
        on, off = _read_spectrum(spectrum_on), _read_spectrum(spectrum_off)
        f = _require(pilot_f if pilot_f is not None else on.pilot_frequency, "--pilot-f")
        series: Dict[str, Any] = {"f_Hz": on.frequencies, "on_dBm": on.psd_dbm}
        units = {"f_Hz": "Hz", "on_dBm": "dBm"}
        if np.array_equal(on.frequencies, off.frequencies):
            series["off_dBm"] = off.psd_dbm
            units["off_dBm"] = "dBm"
        return build_record(
            "delta-snr",
            inputs={"on": file_digest(spectrum_on), "off": file_digest(spectrum_off), "pilot_f": f},
            outputs={
                "delta_snr_db": quantity(delta_snr(on, off, f), "dB"),
                "snr_on_db": quantity(snr(on, f), "dB"),
                "snr_off_db": quantity(snr(off, f), "dB"),
            },
            series=series,
            series_units=units,
        )

    _execute(ctx, "delta-snr", out, plot, body)


@simulate_app.command("reflection")
def simulate_reflection_command(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", help="Trace output (.s1p or .csv)", dir_okay=False),
    f_r: float = typer.Option(..., "--f-r", help="Small-signal resonance in Hz"),
    kappa_i_hz: float = typer.Option(..., "--kappa-i-hz", help="kappa_i/2pi in Hz"),
    kappa_ex_hz: float = typer.Option(..., "--kappa-ex-hz", help="kappa_ex/2pi in Hz"),
    kerr: float = typer.Option(0.0, "--kerr", help="Kerr shift per photon in s^-1"),
    probe_dbm: float = typer.Option(-150.0, "--probe-dbm", help="Probe power at the device input in dBm"),
    span: float = typer.Option(10.0, "--span", help="Sweep span in linewidths"),
    points: int = typer.Option(401, "--points", help="Frequency points"),
    noise: float = typer.Option(0.0, "--noise", help="Per-component Gaussian noise on S11"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Reflection trace of a (Kerr) cavity probed at fixed power."""

    def body() -> ResultRecord:
        resolved = _config(ctx).merged(**{"simulation.seed": seed}).simulation.seed
        cavity = _cavity(f_r, kappa_i_hz, kappa_ex_hz, kerr)
        half = 0.5 * span * cavity.kappa / TWO_PI
        f = np.linspace(f_r - half, f_r + half, points)
        trace = synth_reflection(cavity, float(dbm_to_watts(probe_dbm)), f, noise, resolved)
        text = write_touchstone_s1p(trace) if data.suffix.lower() == ".s1p" else write_trace_csv(trace)
        data.write_text(text, encoding="utf-8")
        return build_record(
            "simulate reflection",
            inputs={
                "f_r": f_r,
                "kappa_i_hz": kappa_i_hz,
                "kappa_ex_hz": kappa_ex_hz,
                "kerr": kerr,
                "probe_dbm": probe_dbm,
                "span": span,
                "points": points,
                "noise": noise,
                "data_sha256": file_digest(data),
            },
            series={"f_Hz": f, "s11_dB": linear_to_db(np.maximum(np.abs(trace.s11), 1e-12) ** 2)},
            series_units={"f_Hz": "Hz", "s11_dB": "dB"},
            seed=resolved,
        )

    _execute(ctx, "simulate reflection", out, plot, body)


@simulate_app.command("spectrum")
def simulate_spectrum_command(
    ctx: typer.Context,
    data_on: Path = typer.Option(..., "--data-on", help="Pump-on spectrum CSV output", dir_okay=False),
    data_off: Path = typer.Option(..., "--data-off", help="Pump-off spectrum CSV output", dir_okay=False),
    f_r: float = typer.Option(..., "--f-r", help="Small-signal resonance in Hz"),
    kappa_i_hz: float = typer.Option(..., "--kappa-i-hz", help="kappa_i/2pi in Hz"),
    kappa_ex_hz: float = typer.Option(..., "--kappa-ex-hz", help="kappa_ex/2pi in Hz"),
    kerr: float = typer.Option(..., "--kerr", help="Kerr shift per photon in s^-1 (negative)"),
    pump_detuning: float = typer.Option(0.86, "--pump-detuning", help="Pump detuning below f_r in units of kappa"),
    pump_ratio: float = typer.Option(0.99, "--pump-ratio", help="Pump power over the critical power"),
    pilot_offset_hz: float = typer.Option(1.0e5, "--pilot-offset-hz", help="Pilot offset from the pump in Hz"),
    pilot_dbm: float = typer.Option(-140.0, "--pilot-dbm", help="Pilot power at the device input in dBm"),
    pilot_source_dbm: Optional[float] = typer.Option(
        None, "--pilot-source-dbm", help="Pilot power at the source in dBm; uses the drive-line attenuation"
    ),
    attenuation_db: Optional[float] = typer.Option(None, "--attenuation-db", help="Drive-line attenuation in dB"),
    eta_s: Optional[float] = typer.Option(None, "--eta-s", help="System transmission"),
    eta_c_off: Optional[float] = typer.Option(None, "--eta-c-off", help="Off-state cavity transmission"),
    t_hemt: Optional[float] = typer.Option(None, "--t-hemt", help="Chain noise at the plate in K"),
    rbw: Optional[float] = typer.Option(None, "--rbw", help="Resolution bandwidth in Hz"),
    n_average: Optional[int] = typer.Option(None, "--n-average", help="Averages per bin; 0 gives noiseless bins"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Pump-on and pump-off spectra around the pump, with a pilot tone."""

    def body() -> ResultRecord:
        config = _config(ctx).merged(
            eta_s=eta_s,
            eta_c_off=eta_c_off,
            t_hemt_mc_k=t_hemt,
            rbw_hz=rbw,
            attenuation_db=attenuation_db,
            **{"simulation.seed": seed, "simulation.n_average": n_average},
        )
        chain, sim = config.chain, config.simulation
        cavity = _cavity(f_r, kappa_i_hz, kappa_ex_hz, kerr)
        f_pump = f_r - pump_detuning * cavity.kappa / TWO_PI
        try:
            reference = critical_power(cavity, f_pump).power
        except DomainError:
            reference = critical_power(cavity).power
        drive = PumpDrive(f_pump=f_pump, p_pump=pump_ratio * reference)
        pilot_at_device = pilot_dbm
        if pilot_source_dbm is not None:
            pilot_at_device = pilot_source_dbm + _require(chain.attenuation_db, "--attenuation-db")
        noise_chain = NoiseChain(
            eta_s=_require(chain.eta_s, "--eta-s"),
            eta_c_off=_require(chain.eta_c_off, "--eta-c-off"),
            t_hemt_mc=_require(chain.t_hemt_mc_k, "--t-hemt"),
            frequency=f_r,
        )
        on, off = synth_spectrum(
            cavity,
            drive,
            noise_chain,
            f_pump + pilot_offset_hz,
            float(dbm_to_watts(pilot_at_device)),
            _require(chain.rbw_hz, "--rbw"),
            points=sim.points,
            n_average=sim.n_average or None,
            seed=sim.seed,
        )
        data_on.write_text(write_trace_csv(on), encoding="utf-8")
        data_off.write_text(write_trace_csv(off), encoding="utf-8")
        return build_record(
            "simulate spectrum",
            inputs={
                "f_r": f_r,
                "kappa_i_hz": kappa_i_hz,
                "kappa_ex_hz": kappa_ex_hz,
                "kerr": kerr,
                "pump_detuning": pump_detuning,
                "pump_ratio": pump_ratio,
                "pilot_offset_hz": pilot_offset_hz,
                "pilot_dbm": pilot_dbm,
                "pilot_source_dbm": pilot_source_dbm,
                "attenuation_db": chain.attenuation_db,
                "on_sha256": file_digest(data_on),
                "off_sha256": file_digest(data_off),
            },
            outputs={
                "pump_frequency": quantity(f_pump, "Hz"),
                "pump_power_dbm": quantity(watts_to_dbm(drive.p_pump), "dBm"),
                "pilot_frequency": quantity(f_pump + pilot_offset_hz, "Hz"),
                "pilot_power_dbm": quantity(pilot_at_device, "dBm"),
            },
            series={"f_Hz": on.frequencies, "on_dBm": on.psd_dbm, "off_dBm": off.psd_dbm},
            series_units={"f_Hz": "Hz", "on_dBm": "dBm", "off_dBm": "dBm"},
            seed=sim.seed,
        )

    _execute(ctx, "simulate spectrum", out, plot, body)


@simulate_app.command("gate-sweep")
def simulate_gate_sweep_command(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", help="Gate-sweep CSV output", dir_okay=False),
    f0: float = typer.Option(6.2e9, "--f0", help="Bare resonance in Hz"),
    f_geo: float = typer.Option(DEFAULT_F_GEO, "--f-geo", help="Geometric resonance in Hz"),
    alpha_l: float = typer.Option(1.0e-4, "--alpha-l", help="Attenuation x length product"),
    r_j: float = typer.Option(5.0e3, "--r-j", help="Junction shunt resistance in Ohm"),
    c_k: float = typer.Option(2.0e-15, "--c-k", help="Coupling capacitance in F"),
    v_min: float = typer.Option(-3.0, "--v-min", help="First gate voltage in V"),
    v_max: float = typer.Option(0.0, "--v-max", help="Last gate voltage in V"),
    points: int = typer.Option(31, "--points", help="Gate voltages"),
    noise: float = typer.Option(0.0, "--noise", help="Relative Gaussian noise on the rates"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    out: Optional[Path] = _out_option(),
    plot: Optional[Path] = _plot_option(),
):
    """Resonance and rates across a gate sweep of the default pinch-off curve."""

    def body() -> ResultRecord:
        resolved = _config(ctx).merged(**{"simulation.seed": seed}).simulation.seed
        try:
            model = CircuitModel.from_design(f0=f0, f_geo=f_geo, alpha_l=alpha_l, r_j=r_j, c_k=c_k)
        except ValidationError as e:
            raise DomainError(f"invalid circuit: {e.errors()[0]['msg']}")
        sweep = synth_gate_sweep(GateMap.saturating(), model, np.linspace(v_min, v_max, points), noise, resolved)
        table = table_from_columns(
            "gate_sweep",
            Vg_V=sweep.voltages,
            fr_Hz=sweep.f_r,
            kappa_i_Hz=sweep.kappa_i / TWO_PI,
            kappa_ex_Hz=sweep.kappa_ex / TWO_PI,
        )
        data.write_text(write_trace_csv(table), encoding="utf-8")
        return build_record(
            "simulate gate-sweep",
            inputs={
                "f0": f0,
                "f_geo": f_geo,
                "alpha_l": alpha_l,
                "r_j": r_j,
                "c_k": c_k,
                "noise": noise,
                "data_sha256": file_digest(data),
            },
            series={"Vg_V": sweep.voltages, "fr_Hz": sweep.f_r, "l_j_H": sweep.l_j},
            series_units={"Vg_V": "V", "fr_Hz": "Hz", "l_j_H": "H"},
            seed=resolved,
        )

    _execute(ctx, "simulate gate-sweep", out, plot, body)


@app.command("plot")
def plot_command(
    ctx: typer.Context,
    record_path: Path = typer.Option(..., "--record", help="Result record (YAML)", exists=True, dir_okay=False),
    out: Path = typer.Option(..., "--out", "-o", help="SVG output", dir_okay=False),
    spec_path: Optional[Path] = typer.Option(
        None, "--spec", help="Plot spec (YAML); defaults to the command's standard plot", exists=True
    ),
):
    """Render a plot of a saved result record."""
    try:
        record = load_record(record_path)
        if spec_path is not None:
            try:
                spec = PlotSpec.model_validate(yaml.safe_load(spec_path.read_text(encoding="utf-8")))
            except (ValidationError, yaml.YAMLError) as e:
                raise PlotSpecError(f"invalid plot spec: {e}")
        elif record.command in DEFAULT_PLOTS:
            spec = DEFAULT_PLOTS[record.command]
        else:
            raise PlotSpecError(f"no default plot for {record.command}; pass --spec")
        out.write_bytes(emit_plot(spec, record))
    except JofetError as e:
        err_console.print(f"[red]{e.category} error:[/red] {e.message}")
        ctx.obj["record"] = error_record("plot", e)
        raise typer.Exit(code=e.exit_code)
    ctx.obj["record"] = record
    console.print(f"Wrote {out}")


def run_command(argv: List[str]) -> Tuple[int, Optional[ResultRecord]]:
    """
    Run one command in-process.

    Args:
        argv: Arguments after the program name

    Returns:
        (exit code, ResultRecord or None when the command never ran)
    """
    holder: Dict[str, Any] = {}
    try:
        result = app(args=argv, prog_name="jofet-amp", standalone_mode=False, obj=holder)
        code = result if isinstance(result, int) else 0
    except click.exceptions.Exit as e:
        code = e.exit_code
    except click.ClickException as e:
        e.show()
        code = e.exit_code
    except click.exceptions.Abort:
        code = 1
    return code, holder.get("record")


if __name__ == "__main__":
    app()
