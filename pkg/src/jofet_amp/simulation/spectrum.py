"""Synthetic spectrum-analyzer traces of the amplifier behind a lossy chain."""

import logging
from typing import Optional, Tuple

import numpy as np

from jofet_amp.analyzers.paramp import output_psd
from jofet_amp.core.errors import DomainError
from jofet_amp.core.models import (
    GainPair,
    KerrCavity,
    NoiseChain,
    NoiseSpectralDensity,
    PumpDrive,
    SpectrumTrace,
)
from jofet_amp.simulation.cavity import gain_curve, steady_state
from jofet_amp.utils.physics import H, K_B, TWO_PI, watts_to_dbm

logger = logging.getLogger(__name__)


def _grid(center: float, rbw: float, points: int) -> np.ndarray:
    return center + rbw * (np.arange(points) - points // 2)


def floor_temperature(
    cavity: KerrCavity,
    drive: Optional[PumpDrive],
    chain: NoiseChain,
    frequencies,
) -> np.ndarray:
    """Noise floor at the plate in K, pump on when `drive` is given."""
    f = np.asarray(frequencies, dtype=float)
    vacuum_k = 0.5 * H * f / K_B
    if drive is None:
        return vacuum_k + chain.t_hemt_mc
    g_s, g_i = gain_curve(cavity, drive, TWO_PI * (f - drive.f_pump))
    device_k = np.array(
        [
            output_psd(
                NoiseSpectralDensity.from_temperature(v, frequency=fk),
                GainPair(g_s=gs, g_i=gi),
                cavity.kappa_i,
                cavity.kappa_ex,
            ).equivalent_temperature
            for v, fk, gs, gi in zip(vacuum_k, f, g_s, g_i)
        ]
    )
    return chain.eta_s * device_k + (1.0 - chain.eta_s) * vacuum_k + chain.t_hemt_mc


def _to_trace(
    frequencies: np.ndarray,
    power_w: np.ndarray,
    rbw: float,
    rng: np.random.Generator,
    n_average: Optional[int],
    **metadata,
) -> SpectrumTrace:
    if n_average:
        # averaged power of n_average exponential samples per bin
        power_w = power_w * rng.gamma(n_average, 1.0 / n_average, size=power_w.size)
    return SpectrumTrace(frequencies=frequencies, psd_dbm=watts_to_dbm(power_w), rbw=rbw, **metadata)


def synth_spectrum(
    cavity: KerrCavity,
    drive: PumpDrive,
    chain: NoiseChain,
    pilot_f: float,
    pilot_power: float,
    rbw: float,
    points: int = 2001,
    n_average: Optional[int] = 100,
    seed: Optional[int] = None,
) -> Tuple[SpectrumTrace, SpectrumTrace]:
    """
    Pump-on and pump-off spectra referred to the mixing-chamber plate.

    The floor is the device output, attenuated by eta_s with vacuum mixed in,
    plus the HEMT noise. The pump-on trace carries the amplified pilot, its
    idler and the reflected pump; the pump-off trace carries the pilot
    transmitted with eta_c_off.

    Args:
        cavity: Kerr cavity
        drive: Pump used for the on state
        chain: Chain transmission and noise
        pilot_f: Pilot frequency in Hz
        pilot_power: Pilot power at the device input in W
        rbw: Resolution bandwidth and bin spacing in Hz
        points: Number of bins, centered on the pump
        n_average: Averages per bin; None gives noiseless traces
        seed: Random seed

    Returns:
        (spectrum_on, spectrum_off)

    Raises:
        DomainError: If the pilot falls outside the span
        StabilityError: If the pumped steady state is unstable
    """
    if rbw <= 0 or points < 3:
        raise DomainError("rbw must be positive and the grid must hold at least 3 bins")
    f = _grid(drive.f_pump, rbw, points)
    if not f[0] <= pilot_f <= f[-1]:
        raise DomainError(f"pilot at {pilot_f:.6e} Hz lies outside the span")
    rng = np.random.default_rng(seed)

    floor_on = K_B * rbw * floor_temperature(cavity, drive, chain, f)
    floor_off = K_B * rbw * floor_temperature(cavity, None, chain, f)

    i_pilot = int(np.argmin(np.abs(f - pilot_f)))
    g_s_pilot, g_i_pilot = gain_curve(cavity, drive, [TWO_PI * (pilot_f - drive.f_pump)])
    on = floor_on.copy()
    on[i_pilot] += chain.eta_s * abs(g_s_pilot[0]) ** 2 * pilot_power
    idler_f = 2.0 * drive.f_pump - pilot_f
    if f[0] <= idler_f <= f[-1]:
        on[int(np.argmin(np.abs(f - idler_f)))] += chain.eta_s * abs(g_i_pilot[0]) ** 2 * pilot_power
    if drive.p_pump > 0:
        state = steady_state(cavity, drive)
        alpha_in = np.sqrt(drive.p_pump / (H * drive.f_pump))
        reflected = abs(np.sqrt(cavity.kappa_ex) * state.alpha / alpha_in - 1.0) ** 2
        on[points // 2] += chain.eta_s * reflected * drive.p_pump

    off = floor_off.copy()
    off[i_pilot] += chain.eta_c_off * chain.eta_s * pilot_power

    logger.debug(f"Pilot gain {10 * np.log10(abs(g_s_pilot[0]) ** 2):.2f} dB at {pilot_f:.6e} Hz")
    common = {"pilot_frequency": pilot_f, "pilot_power_dbm": float(watts_to_dbm(pilot_power))}
    spectrum_on = _to_trace(
        f, on, rbw, rng, n_average, pump_on=True, pump_frequency=drive.f_pump, **common
    )
    spectrum_off = _to_trace(f, off, rbw, rng, n_average, pump_on=False, pump_frequency=None, **common)
    return spectrum_on, spectrum_off


def predicted_delta_snr(
    cavity: KerrCavity,
    drive: PumpDrive,
    chain: NoiseChain,
    pilot_f: float,
    pilot_power: float,
    rbw: float,
) -> float:
    """Noiseless SNR improvement of a pilot in one resolution bandwidth, in dB."""
    g_s, _ = gain_curve(cavity, drive, [TWO_PI * (pilot_f - drive.f_pump)])
    floor_on = K_B * rbw * float(floor_temperature(cavity, drive, chain, [pilot_f])[0])
    floor_off = K_B * rbw * float(floor_temperature(cavity, None, chain, [pilot_f])[0])
    tone_on = chain.eta_s * abs(g_s[0]) ** 2 * pilot_power
    tone_off = chain.eta_c_off * chain.eta_s * pilot_power
    return float(10.0 * np.log10((tone_on + floor_on) / floor_on) - 10.0 * np.log10((tone_off + floor_off) / floor_off))
