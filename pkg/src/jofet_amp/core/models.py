"""Core data models for amplifier modeling, fitting and calibration."""

import hashlib
import json
import math
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from jofet_amp.utils.physics import K_B, TWO_PI


def _as_float_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=float).reshape(-1)


def _check_increasing(frequencies: np.ndarray) -> np.ndarray:
    if frequencies.size > 1 and not np.all(np.diff(frequencies) > 0):
        raise ValueError("frequencies must be strictly increasing")
    return frequencies


class ComplexReflectionTrace(BaseModel):
    """Frequency-ordered complex reflection samples from a one-port measurement."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frequencies: np.ndarray = Field(description="Probe frequencies in Hz, strictly increasing")
    s11: np.ndarray = Field(description="Complex reflection coefficient, one per frequency")
    probe_power_dbm: Optional[float] = Field(
        default=None,
        description="Probe power at device input in dBm"
    )
    gate_voltage: Optional[float] = Field(
        default=None,
        description="Gate voltage in V"
    )

    @field_validator("frequencies", mode="before")
    @classmethod
    def _validate_frequencies(cls, value: Any) -> np.ndarray:
        return _check_increasing(_as_float_array(value))

    @field_validator("s11", mode="before")
    @classmethod
    def _validate_s11(cls, value: Any) -> np.ndarray:
        data = np.array(value, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(data)):
            raise ValueError("s11 must be finite")
        return data

    @model_validator(mode="after")
    def _validate_lengths(self) -> "ComplexReflectionTrace":
        if self.frequencies.size != self.s11.size:
            raise ValueError(
                f"length mismatch: {self.frequencies.size} frequencies, {self.s11.size} s11 values"
            )
        if self.frequencies.size == 0:
            raise ValueError("a reflection trace needs at least one point")
        return self

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.s11)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.s11)


class ResonatorFit(BaseModel):
    """Result of a one-port reflection fit.

    Rates are angular (s^-1). The `*_hz` properties report kappa/2pi.
    """

    f_r: float = Field(description="Resonant frequency in Hz")
    kappa_i: float = Field(description="Internal dissipation rate, s^-1", ge=0.0)
    kappa_ex: float = Field(description="External coupling rate, s^-1", ge=0.0)
    background_amplitude: float = Field(default=1.0, description="Magnitude of the complex background scale")
    background_phase: float = Field(default=0.0, description="Background phase offset in rad")
    cable_delay: float = Field(default=0.0, description="Cable delay in s")
    uncertainties: Dict[str, float] = Field(
        default_factory=dict,
        description="One-sigma uncertainty per fitted parameter"
    )
    residual_norm: float = Field(default=0.0, description="RMS complex residual of the fit", ge=0.0)

    @property
    def kappa_tot(self) -> float:
        return self.kappa_i + self.kappa_ex

    @property
    def efficiency(self) -> float:
        """Coupling efficiency kappa_ex / kappa_tot."""
        if self.kappa_tot == 0:
            return 0.0
        return self.kappa_ex / self.kappa_tot

    @property
    def kappa_i_hz(self) -> float:
        return self.kappa_i / TWO_PI

    @property
    def kappa_ex_hz(self) -> float:
        return self.kappa_ex / TWO_PI


class SpectrumTrace(BaseModel):
    """Power spectrum from a signal analyzer."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frequencies: np.ndarray = Field(description="Bin frequencies in Hz, strictly increasing")
    psd_dbm: np.ndarray = Field(description="Power per resolution bandwidth in dBm")
    rbw: float = Field(description="Resolution bandwidth in Hz", gt=0.0)
    pump_on: bool = Field(default=False, description="Whether the amplifier pump was on")
    pump_frequency: Optional[float] = Field(default=None, description="Pump frequency in Hz")
    pilot_frequency: Optional[float] = Field(default=None, description="Pilot tone frequency in Hz")
    pilot_power_dbm: Optional[float] = Field(default=None, description="Pilot power at device input in dBm")

    @field_validator("frequencies", mode="before")
    @classmethod
    def _validate_frequencies(cls, value: Any) -> np.ndarray:
        return _check_increasing(_as_float_array(value))

    @field_validator("psd_dbm", mode="before")
    @classmethod
    def _validate_psd(cls, value: Any) -> np.ndarray:
        return _as_float_array(value)

    @model_validator(mode="after")
    def _validate_lengths(self) -> "SpectrumTrace":
        if self.frequencies.size != self.psd_dbm.size:
            raise ValueError("frequencies and psd_dbm must have equal length")
        return self

    @property
    def psd_mw(self) -> np.ndarray:
        return 10.0 ** (self.psd_dbm / 10.0)

    def bin_index(self, frequency: float) -> int:
        """Index of the bin nearest to `frequency`."""
        return int(np.argmin(np.abs(self.frequencies - frequency)))


class CircuitModel(BaseModel):
    """Bare resonator and junction-embedding parameters.

    Each half of the resonator is a quarter-wave section at f0, which fixes
    the per-section line constants.
    """

    f_geo: float = Field(description="Designed geometric resonance in Hz", gt=0.0)
    f0: float = Field(description="Bare resonance with L_J = 0 in Hz", gt=0.0)
    z0: float = Field(description="Characteristic impedance in Ohm", gt=0.0)
    alpha_l: float = Field(default=0.0, description="Attenuation x length product", ge=0.0)
    r_j: float = Field(default=math.inf, description="Junction shunt resistance in Ohm", gt=0.0)
    c_k: float = Field(default=0.0, description="Coupling capacitance in F", ge=0.0)

    @model_validator(mode="after")
    def _validate_band(self) -> "CircuitModel":
        if self.f0 > self.f_geo:
            raise ValueError(f"f0 ({self.f0:g} Hz) exceeds f_geo ({self.f_geo:g} Hz)")
        return self

    @classmethod
    def from_design(cls, f0: float, f_geo: float, **params: float) -> "CircuitModel":
        """Build a model with Z0 scaled from 50 Ohm by f_geo/f0."""
        return cls(f_geo=f_geo, f0=f0, z0=50.0 * f_geo / f0, **params)

    @property
    def c_l_l(self) -> float:
        """Per-section capacitance C_l*l in F."""
        return 1.0 / (4.0 * self.f0 * self.z0)

    @property
    def l_l_l(self) -> float:
        """Per-section inductance L_l*l in H."""
        return self.z0 / (4.0 * self.f0)


class JunctionState(BaseModel):
    """Mode solution and effective lumped elements at one operating point."""

    kl: float = Field(description="Mode argument per half-section in rad", gt=0.0, le=math.pi / 2)
    l_j: float = Field(description="Josephson inductance in H", ge=0.0)
    delta_u_bar: float = Field(description="Normalized flux drop across the junction", ge=0.0, lt=2.0)
    c_eff: float = Field(description="Effective capacitance in F", gt=0.0)
    l_eff: float = Field(description="Effective inductance in H", gt=0.0)
    r_eff: float = Field(description="Effective resistance in Ohm", gt=0.0)
    f_r: float = Field(description="Resonant frequency in Hz", gt=0.0)


class PowerSweepPoint(BaseModel):
    """One point of a resonance-versus-power sweep."""

    input_power: float = Field(description="Power at device input in W", ge=0.0)
    signal_frequency: float = Field(description="Probe frequency in Hz", gt=0.0)
    resonant_frequency: float = Field(description="Extracted resonant frequency in Hz", gt=0.0)


class KerrEstimate(BaseModel):
    """Kerr coefficient extracted from a power sweep.

    `K` follows the Hamiltonian convention, twice the fitted frequency shift
    per photon held in `shift_per_photon`.
    """

    K: float = Field(description="Kerr coefficient, angular, s^-1")
    K_per_power: float = Field(description="Resonance shift per input power in Hz/W")
    uncertainty: float = Field(description="One-sigma uncertainty of K in s^-1", ge=0.0)
    shift_per_photon: float = Field(description="Fitted angular shift per photon, s^-1")
    K_per_power_uncertainty: float = Field(default=0.0, ge=0.0)
    points_used: int = Field(description="Points inside the low-power window", ge=0)

    @property
    def mhz_per_fw(self) -> float:
        """Shift per input power in the MHz/fW display unit."""
        return self.K_per_power * 1e-15 / 1e6


class GainPair(BaseModel):
    """Signal and idler gains of a phase-insensitive amplifier at one detuning."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    g_s: complex = Field(description="Complex signal gain")
    g_i: complex = Field(description="Complex idler gain")
    detuning: float = Field(default=0.0, description="Signal-pump detuning, s^-1")

    @field_validator("g_s", "g_i", mode="before")
    @classmethod
    def _as_complex(cls, value: Any) -> complex:
        return complex(value)

    @property
    def power_gain(self) -> float:
        return abs(self.g_s) ** 2

    def sum_rule_residual(self, kappa_ratio: float) -> float:
        """Relative violation of the bosonic sum rule."""
        lhs = (1.0 + kappa_ratio) * abs(self.g_i) ** 2
        rhs = abs(self.g_s) ** 2 - 1.0 + kappa_ratio * abs(self.g_s + 1.0) ** 2
        scale = max(abs(lhs), abs(rhs), abs(self.g_s) ** 2, 1.0)
        return abs(lhs - rhs) / scale


class NoiseSpectralDensity(BaseModel):
    """Noise power per unit bandwidth with its equivalent temperature."""

    value: float = Field(description="Spectral density in W/Hz", ge=0.0)
    equivalent_temperature: float = Field(description="value / k_B in K", ge=0.0)
    frequency: float = Field(default=0.0, description="Frequency in Hz", ge=0.0)

    @model_validator(mode="after")
    def _validate_temperature(self) -> "NoiseSpectralDensity":
        expected = self.value / K_B
        if not math.isclose(self.equivalent_temperature, expected, rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("equivalent_temperature must equal value / k_B")
        return self

    @classmethod
    def from_value(cls, value: float, frequency: float = 0.0) -> "NoiseSpectralDensity":
        return cls(value=value, equivalent_temperature=value / K_B, frequency=frequency)

    @classmethod
    def from_temperature(cls, temperature: float, frequency: float = 0.0) -> "NoiseSpectralDensity":
        return cls(value=temperature * K_B, equivalent_temperature=temperature, frequency=frequency)


class NoiseChain(BaseModel):
    """Transmission and noise parameters of the readout chain."""

    eta_s: float = Field(description="System transmission between device input and reference plate", gt=0.0, le=1.0)
    eta_c_off: float = Field(description="Off-state cavity transmission at the pilot", gt=0.0, le=1.0)
    gain_g: float = Field(default=1.0, description="Net on-state gain (linear)", gt=0.0)
    t_hemt_mc: float = Field(description="Chain noise referred to the mixing-chamber plate in K", ge=0.0)
    frequency: float = Field(description="Operating frequency in Hz", gt=0.0)


class KerrCavity(BaseModel):
    """Semiclassical Kerr cavity. `K` is the resonance shift per photon."""

    f_r: float = Field(description="Small-signal resonance in Hz", gt=0.0)
    kappa_i: float = Field(description="Internal rate, s^-1", ge=0.0)
    kappa_ex: float = Field(description="External rate, s^-1", ge=0.0)
    K: float = Field(default=0.0, description="Kerr shift per photon, s^-1", le=0.0)

    @property
    def kappa(self) -> float:
        return self.kappa_i + self.kappa_ex

    @property
    def kappa_ratio(self) -> float:
        return self.kappa_i / self.kappa_ex if self.kappa_ex > 0 else math.inf


class PumpDrive(BaseModel):
    """Coherent pump applied to the cavity input."""

    f_pump: float = Field(description="Pump frequency in Hz", gt=0.0)
    p_pump: float = Field(default=0.0, description="Pump power at device input in W", ge=0.0)

    def detuning(self, cavity: KerrCavity) -> float:
        """Pump detuning Delta_p = 2pi (f_r - f_pump), s^-1."""
        return TWO_PI * (cavity.f_r - self.f_pump)


class Quantity(BaseModel):
    """A named numeric output with unit and optional uncertainty."""

    value: Any = Field(description="Scalar or list of numbers")
    unit: str = Field(description="Unit string, '1' for dimensionless")
    uncertainty: Optional[Any] = Field(default=None, description="One-sigma uncertainty")


class Provenance(BaseModel):
    """Where a record came from."""

    tool_version: str
    seed: Optional[int] = None
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


class ResultRecord(BaseModel):
    """Structured result of one command."""

    command: str = Field(description="Command name")
    inputs: Dict[str, Any] = Field(default_factory=dict, description="Echo of parameters and file digests")
    outputs: Dict[str, Quantity] = Field(default_factory=dict, description="Named values with units")
    series: Dict[str, List[float]] = Field(default_factory=dict, description="Array outputs for plotting")
    series_units: Dict[str, str] = Field(default_factory=dict, description="Unit of each series")
    error: Optional[Dict[str, Any]] = Field(default=None, description="Error category and message")
    provenance: Provenance

    def digest(self) -> str:
        """SHA-256 of the canonical record, timestamp excluded."""
        data = self.model_dump(mode="json")
        data["provenance"].pop("timestamp", None)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class AxisSpec(BaseModel):
    label: str
    unit: str
    log: bool = False


class PlotSpec(BaseModel):
    """Declarative description of a plot drawn from a ResultRecord."""

    kind: Literal["trace", "map", "envelope"] = Field(description="Plot kind")
    x: AxisSpec
    y: AxisSpec
    series: List[str] = Field(description="Series names inside the record")
    x_series: str = Field(description="Series holding the abscissa")
    y_series: Optional[str] = Field(default=None, description="Series holding the ordinate grid (map plots)")
    color_unit: Optional[str] = Field(default=None, description="Color-scale unit (map plots)")
    title: Optional[str] = None
