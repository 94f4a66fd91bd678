"""Driven Kerr cavity: steady states, linearized gain and synthetic sweeps.

Frame rotating at the pump. With detuning Delta = 2pi (f_r - f_pump) and the
mean-field shift K per photon, the steady-state photon number solves

    K^2 n^3 + 2 K Delta n^2 + (Delta^2 + kappa^2/4) n = kappa_ex P / (h f_pump)

Reflected output follows a_out = sqrt(kappa_ex) a - a_in.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jofet_amp.analyzers.resonance import reflection_model
from jofet_amp.core.errors import DomainError, StabilityError
from jofet_amp.core.models import ComplexReflectionTrace, GainPair, KerrCavity, PumpDrive
from jofet_amp.utils.physics import H, TWO_PI, watts_to_dbm

logger = logging.getLogger(__name__)

Branch = Literal["low", "high"]
SUM_RULE_WARNING = 1e-9


class SteadyState(BaseModel):
    """Classical intracavity field for one drive."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: float = Field(description="Mean photon number", ge=0.0)
    alpha: complex = Field(description="Intracavity amplitude in sqrt(photons)")
    detuning: float = Field(description="Pump detuning 2pi (f_r - f_pump), s^-1")
    branch_count: int = Field(description="Number of coexisting steady states (1 or 3)")
    branch: str = "low"


class CriticalPoint(BaseModel):
    """Onset of bistability."""

    power: float = Field(description="Pump power at device input in W", gt=0.0)
    f_pump: float = Field(description="Pump frequency in Hz", gt=0.0)
    detuning: float = Field(description="Pump detuning 2pi (f_r - f_pump), s^-1")

    @property
    def power_dbm(self) -> float:
        return float(watts_to_dbm(self.power))


def drive_strength(cavity: KerrCavity, drive: PumpDrive) -> float:
    """Photon flux into the cavity times kappa_ex, kappa_ex P / (h f)."""
    return cavity.kappa_ex * drive.p_pump / (H * drive.f_pump)


def _scaled_cubic(cavity: KerrCavity, drive: PumpDrive) -> Tuple[float, float, float, float]:
    # n = m kappa/|K| gives the monic cubic m^3 + b m^2 + c m + d
    kappa = cavity.kappa
    delta = drive.detuning(cavity)
    b = 2.0 * math.copysign(1.0, cavity.K) * delta / kappa
    c = (delta / kappa) ** 2 + 0.25
    d = -drive_strength(cavity, drive) * abs(cavity.K) / kappa ** 3
    return 1.0, b, c, d


def cubic_discriminant(cavity: KerrCavity, drive: PumpDrive) -> float:
    """Discriminant of the scaled steady-state cubic; positive when three states coexist."""
    if cavity.K == 0:
        return -1.0
    a, b, c, d = _scaled_cubic(cavity, drive)
    return 18 * a * b * c * d - 4 * b ** 3 * d + b ** 2 * c ** 2 - 4 * a * c ** 3 - 27 * a ** 2 * d ** 2


def _polish(m: float, b: float, c: float, d: float) -> float:
    for _ in range(8):
        value = ((m + b) * m + c) * m + d
        slope = (3.0 * m + 2.0 * b) * m + c
        if slope == 0:
            break
        step = value / slope
        m -= step
        if abs(step) <= 1e-15 * max(abs(m), 1.0):
            break
    return m


def steady_state(cavity: KerrCavity, drive: PumpDrive, branch: Branch = "low") -> SteadyState:
    """
    Steady-state photon number and amplitude under a coherent drive.

    Args:
        cavity: Kerr cavity
        drive: Pump frequency and power at the device input
        branch: Which state to return when three coexist

    Returns:
        SteadyState on the requested branch

    Raises:
        DomainError: If the cavity has no loss channel
    """
    kappa = cavity.kappa
    if kappa <= 0:
        raise DomainError("cavity must have a positive total rate")
    delta = drive.detuning(cavity)
    strength = drive_strength(cavity, drive)

    if strength == 0:
        n, count = 0.0, 1
    elif cavity.K == 0:
        n, count = strength / (delta ** 2 + 0.25 * kappa ** 2), 1
    else:
        a, b, c, d = _scaled_cubic(cavity, drive)
        roots = np.roots([a, b, c, d])
        if cubic_discriminant(cavity, drive) > 0:
            candidates = np.sort(roots.real)
            count = 3
        else:
            candidates = np.array([roots[np.argmin(np.abs(roots.imag))].real])
            count = 1
        m = candidates[0] if branch == "low" else candidates[-1]
        n = max(_polish(float(m), b, c, d), 0.0) * kappa / abs(cavity.K)

    alpha_in = math.sqrt(drive.p_pump / (H * drive.f_pump))
    alpha = math.sqrt(cavity.kappa_ex) * alpha_in / (0.5 * kappa + 1j * (delta + cavity.K * n))
    return SteadyState(n=n, alpha=complex(alpha), detuning=delta, branch_count=count, branch=branch)


def critical_power(cavity: KerrCavity, f_pump: Optional[float] = None) -> CriticalPoint:
    """
    Pump power at which the response becomes bistable.

    Without a pump frequency, returns the cusp: the pump sits sqrt(3) kappa/2
    below the resonance (for K < 0) and the power is the smallest that
    produces bistability anywhere. With a pump frequency, returns the power
    where the lower branch ends.

    Raises:
        DomainError: If K = 0 or the given pump frequency cannot produce bistability
    """
    if cavity.K == 0:
        raise DomainError("a linear cavity has no bistability")
    kappa, K = cavity.kappa, cavity.K
    if f_pump is None:
        delta = -math.copysign(1.0, K) * math.sqrt(3.0) * kappa / 2.0
        f_pump = cavity.f_r - delta / TWO_PI
        n = -2.0 * delta / (3.0 * K)
    else:
        delta = TWO_PI * (cavity.f_r - f_pump)
        if K * delta >= 0 or delta ** 2 < 0.75 * kappa ** 2:
            raise DomainError(f"no bistability for a pump at {f_pump:.6e} Hz")
        # turning points where d(strength)/dn = 0; the lower-n one ends the low branch
        root = math.sqrt(4.0 * K ** 2 * (delta ** 2 - 0.75 * kappa ** 2))
        n = min((-4.0 * K * delta - root) / (6.0 * K ** 2), (-4.0 * K * delta + root) / (6.0 * K ** 2))
    strength = n * ((delta + K * n) ** 2 + 0.25 * kappa ** 2)
    power = strength * H * f_pump / cavity.kappa_ex
    return CriticalPoint(power=power, f_pump=f_pump, detuning=delta)


def _linear_response(cavity: KerrCavity, state: SteadyState, deltas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = 0.5 * cavity.kappa + 1j * (state.detuning + 2.0 * cavity.K * state.n)
    b = 1j * cavity.K * state.alpha ** 2
    det = (a - 1j * deltas) * (np.conj(a) - 1j * deltas) - abs(b) ** 2
    chi_11 = (np.conj(a) - 1j * deltas) / det
    chi_12 = -b / det
    return cavity.kappa_ex * chi_11 - 1.0, cavity.kappa_ex * chi_12


def is_stable(cavity: KerrCavity, state: SteadyState) -> bool:
    """Whether small fluctuations around the state decay."""
    a = 0.5 * cavity.kappa + 1j * (state.detuning + 2.0 * cavity.K * state.n)
    b = 1j * cavity.K * state.alpha ** 2
    matrix = np.array([[a, b], [np.conj(b), np.conj(a)]])
    return bool(np.all(np.linalg.eigvals(matrix).real > 0))


def gain_curve(
    cavity: KerrCavity,
    drive: PumpDrive,
    deltas: Sequence[float],
    branch: Branch = "low",
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Signal and idler gains over signal-pump detunings.

    Args:
        cavity: Kerr cavity
        drive: Pump
        deltas: Angular signal-pump detunings 2pi (f_s - f_pump), s^-1
        branch: Steady-state branch to linearize around

    Returns:
        (g_s, g_i) complex arrays

    Raises:
        StabilityError: If the steady state is unstable
    """
    state = steady_state(cavity, drive, branch)
    if not is_stable(cavity, state):
        raise StabilityError(f"steady state with n={state.n:.4g} is unstable")
    return _linear_response(cavity, state, np.asarray(deltas, dtype=float))


def gain_pair(cavity: KerrCavity, drive: PumpDrive, delta: float, branch: Branch = "low") -> GainPair:
    """Linearized signal and idler gain at one signal-pump detuning."""
    g_s, g_i = gain_curve(cavity, drive, [delta], branch)
    pair = GainPair(g_s=complex(g_s[0]), g_i=complex(g_i[0]), detuning=delta)
    if cavity.kappa_ex > 0:
        residual = pair.sum_rule_residual(cavity.kappa_i / cavity.kappa_ex)
        if residual > SUM_RULE_WARNING:
            logger.warning(f"Sum rule violated by {residual:.2e} at detuning {delta:.4g} s^-1")
    return pair


def synth_reflection(
    cavity: KerrCavity,
    probe_power: float,
    frequencies: Sequence[float],
    noise_sigma: float = 0.0,
    seed: Optional[int] = None,
    branch: Branch = "low",
) -> ComplexReflectionTrace:
    """
    Reflection of a probe swept across the cavity at fixed power.

    Each point is the coherent self-reflection at the probe's own steady state,
    with optional complex Gaussian noise of per-component sigma.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    s11 = np.empty(frequencies.size, dtype=complex)
    for k, f in enumerate(frequencies):
        state = steady_state(cavity, PumpDrive(f_pump=f, p_pump=probe_power), branch)
        s11[k] = reflection_model(-(state.detuning + cavity.K * state.n), cavity.kappa_i, cavity.kappa_ex)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        s11 = s11 + noise_sigma * (rng.standard_normal(s11.size) + 1j * rng.standard_normal(s11.size))
    return ComplexReflectionTrace(
        frequencies=frequencies,
        s11=s11,
        probe_power_dbm=float(watts_to_dbm(probe_power)) if probe_power > 0 else None,
    )


class GainMap(BaseModel):
    """Signal power gain over a grid of pump powers and frequencies."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pump_powers: np.ndarray = Field(description="Pump powers in W")
    pump_frequencies: np.ndarray = Field(description="Pump frequencies in Hz")
    gain_db: np.ndarray = Field(description="Gain in dB, shape (powers, frequencies); NaN where unstable")
    detuning: float = Field(description="Signal-pump detuning, s^-1")

    @property
    def max_gain_db(self) -> float:
        return float(np.nanmax(self.gain_db))


def gain_map(
    cavity: KerrCavity,
    pump_powers: Sequence[float],
    pump_frequencies: Sequence[float],
    delta: float,
    max_workers: Optional[int] = None,
    branch: Branch = "low",
) -> GainMap:
    """
    Signal gain over a pump power x frequency grid, one row per worker task.

    Grid points whose steady state is unstable are left as NaN.
    """
    powers = np.asarray(pump_powers, dtype=float)
    pumps = np.asarray(pump_frequencies, dtype=float)

    def row(power: float) -> np.ndarray:
        values = np.full(pumps.size, np.nan)
        for j, f_pump in enumerate(pumps):
            try:
                g_s, _ = gain_curve(cavity, PumpDrive(f_pump=f_pump, p_pump=power), [delta], branch)
            except StabilityError:
                continue
            values[j] = 10.0 * np.log10(abs(g_s[0]) ** 2)
        return values

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        rows = list(executor.map(row, powers))

    grid = np.vstack(rows) if rows else np.empty((0, pumps.size))
    unstable = int(np.isnan(grid).sum())
    if unstable:
        logger.info(f"{unstable} of {grid.size} grid points are unstable")
    return GainMap(pump_powers=powers, pump_frequencies=pumps, gain_db=grid, detuning=delta)
