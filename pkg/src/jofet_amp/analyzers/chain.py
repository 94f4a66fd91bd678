"""Calibration of the measurement chain and referral of noise to the device input.

Two reference points are used: the mixing-chamber plate, where HEMT noise is
calibrated, and the device input. A lossy element of transmission eta between
them mixes in vacuum, S_out = eta S_in + (1 - eta) V.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import linregress

from jofet_amp.analyzers.resonance import fit_lorentzian_gain
from jofet_amp.core.errors import DomainError, LowContrastError, UnidentifiableError
from jofet_amp.core.models import NoiseChain, SpectrumTrace
from jofet_amp.utils.physics import H, K_B, db_to_linear, linear_to_db, watts_to_dbm

logger = logging.getLogger(__name__)

SNR_WINDOW_BINS = 50
MIN_SNR_DB = 3.0


def callen_welton_temperature(temperature, f):
    """
    Vacuum-corrected Johnson-Nyquist temperature (hf/2k_B) coth(hf/2k_B T).

    Args:
        temperature: Physical temperature in K, scalar or array
        f: Frequency in Hz

    Returns:
        Effective noise temperature in K, hf/2k_B at T = 0 and T when f = 0
    """
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature < 0):
        raise DomainError("temperature must be nonnegative")
    if f < 0:
        raise DomainError("frequency must be nonnegative")
    if f == 0:
        result = temperature.copy()
    else:
        x = H * f / (2.0 * K_B)
        with np.errstate(divide="ignore"):
            result = np.where(temperature > 0, x / np.tanh(x / np.where(temperature > 0, temperature, 1.0)), x)
    return result if result.ndim else float(result)


class HemtCalibration(BaseModel):
    """Chain noise referred to the mixing-chamber plate."""

    t_hemt_mc: float = Field(description="Added chain noise in K")
    t_hemt_mc_sigma: float = Field(description="One-sigma of the added noise in K", ge=0.0)
    gain_scale: float = Field(description="Slope of measured noise versus plate noise")
    gain_scale_sigma: float = Field(default=0.0, ge=0.0)
    frequency: float = Field(description="Frequency in Hz")


def fit_hemt_calibration(
    t_set: Sequence[float],
    psd_k: Sequence[float],
    f: float,
) -> HemtCalibration:
    """
    Fit a plate-temperature sweep of the output noise for the chain noise.

    The measured noise is g (T_CW(T_set) + T_add), so T_add is the intercept
    over the slope of a straight line in the vacuum-corrected temperature.
    The sweep is given as two equal-length columns, as read from a hemt_sweep
    table; a list of (T_set, PSD) pairs unpacks with `zip(*pairs)`.

    Args:
        t_set: Plate temperatures in K
        psd_k: Measured noise in K (arbitrary gain scale)
        f: Measurement frequency in Hz

    Returns:
        HemtCalibration with T_add as t_hemt_mc

    Raises:
        DomainError: If fewer than 4 points are given
        UnidentifiableError: If every point sits in the vacuum-saturated regime
    """
    t_set = np.asarray(t_set, dtype=float)
    psd_k = np.asarray(psd_k, dtype=float)
    if t_set.size < 4 or t_set.size != psd_k.size:
        raise DomainError("the calibration sweep needs at least 4 (T_set, psd) pairs")
    plate = callen_welton_temperature(t_set, f)
    if np.ptp(plate) <= 1e-3 * float(np.max(plate)):
        raise UnidentifiableError("all sweep points sit in vacuum saturation; the slope is unconstrained")

    fit = linregress(plate, psd_k)
    gain, offset = fit.slope, fit.intercept
    if gain <= 0:
        raise UnidentifiableError("measured noise does not rise with plate temperature")
    t_add = offset / gain

    # delta method with cov(slope, intercept) = -mean(x) var(slope)
    var_g = fit.stderr ** 2
    var_b = fit.intercept_stderr ** 2
    cov_gb = -float(np.mean(plate)) * var_g
    var_t = var_b / gain ** 2 + offset ** 2 * var_g / gain ** 4 - 2.0 * offset * cov_gb / gain ** 3
    calibration = HemtCalibration(
        t_hemt_mc=float(t_add),
        t_hemt_mc_sigma=math.sqrt(max(var_t, 0.0)),
        gain_scale=float(gain),
        gain_scale_sigma=float(fit.stderr),
        frequency=f,
    )
    logger.info(f"HEMT noise at the plate: {calibration.t_hemt_mc:.4f} +/- {calibration.t_hemt_mc_sigma:.4f} K")
    return calibration


class ReferredNoise(BaseModel):
    """Decomposition of a measured noise temperature referred to the device input."""

    total: float = Field(description="Measured noise over eta in K")
    input_noise: float = Field(description="Source noise at the device input in K")
    vacuum_term: float = Field(description="(1 - eta)/eta V in K")
    hemt_term: float = Field(description="T_hemt_mc / eta in K")
    eta: float


def refer_to_input(s_diamond: float, eta: float, t_hemt_mc: float, f: float) -> ReferredNoise:
    """
    Refer a noise temperature measured at the plate to the device input.

    Args:
        s_diamond: Measured noise at the plate in K
        eta: Net transmission from device input to plate; on-state values include gain
        t_hemt_mc: Chain noise at the plate in K
        f: Frequency in Hz

    Returns:
        ReferredNoise with total = S/eta = input + vacuum term + HEMT term

    Raises:
        DomainError: If eta is not positive
    """
    if eta <= 0:
        raise DomainError(f"transmission must be positive, got {eta}")
    v = 0.5 * H * f / K_B
    vacuum_term = (1.0 - eta) / eta * v
    hemt_term = t_hemt_mc / eta
    total = s_diamond / eta
    return ReferredNoise(
        total=total,
        input_noise=(s_diamond - (1.0 - eta) * v - t_hemt_mc) / eta,
        vacuum_term=vacuum_term,
        hemt_term=hemt_term,
        eta=eta,
    )


def eta_off(chain: NoiseChain) -> float:
    """Net transmission with the pump off."""
    return chain.eta_c_off * chain.eta_s


def eta_on(chain: NoiseChain) -> float:
    """Net transmission with the pump on, including gain."""
    return chain.gain_g * chain.eta_s


def gain_from_pilot(p_on: float, p_off: float, eta_c_off: float) -> float:
    """Gain at the pilot, eta_c_off P_on / P_off."""
    if p_off <= 0:
        raise DomainError("pump-off pilot power must be positive")
    if p_on < 0 or not 0 < eta_c_off <= 1:
        raise DomainError("invalid pilot power or off-state transmission")
    return eta_c_off * p_on / p_off


def pilot_power(spectrum: SpectrumTrace, pilot_f: float) -> float:
    """Pilot power in W with the local median floor subtracted."""
    i = spectrum.bin_index(pilot_f)
    floor = float(np.median(spectrum.psd_mw[_window(spectrum, i, _tone_bins(spectrum, pilot_f))]))
    return max(float(spectrum.psd_mw[i]) - floor, 0.0) * 1e-3


def gain_profile(
    gain_at_pilot: float,
    spectrum_on: SpectrumTrace,
    pilot_f: float,
    frequencies,
) -> np.ndarray:
    """Gain versus frequency scaled from the pilot through a Lorentzian fit of the on-state noise."""
    tones = [t for t in (spectrum_on.pump_frequency, pilot_f, _idler(spectrum_on, pilot_f)) if t is not None]
    fit = fit_lorentzian_gain(spectrum_on, exclude=tones, exclude_bins=1)
    return gain_at_pilot * fit.gain_profile(frequencies) / float(fit.gain_profile(pilot_f))


class AttenuationEstimate(BaseModel):
    """Drive-line attenuation inferred from the noise floor."""

    floor_dbm: float = Field(description="Chain noise floor in one resolution bandwidth, dBm")
    input_signal_dbm: float = Field(description="Signal at the device input, dBm")
    attenuation_db: float = Field(description="Attenuation from source to device input, dB")


def estimate_attenuation(
    signal_dbm_out: float,
    floor_margin_db: float,
    t_noise: float,
    rbw: float,
    cavity_loss_db: float = 0.0,
) -> AttenuationEstimate:
    """
    Attenuation between the source and the device input.

    Args:
        signal_dbm_out: Source output power in dBm
        floor_margin_db: Observed signal height above the noise floor in dB
        t_noise: Chain noise temperature in K
        rbw: Resolution bandwidth in Hz
        cavity_loss_db: Off-state cavity insertion loss in dB, sign ignored

    Returns:
        AttenuationEstimate
    """
    if rbw <= 0 or t_noise <= 0:
        raise DomainError("rbw and noise temperature must be positive")
    floor = float(watts_to_dbm(K_B * t_noise * rbw))
    signal = floor + floor_margin_db
    attenuation = signal + abs(cavity_loss_db) - signal_dbm_out
    logger.info(f"Floor {floor:.2f} dBm, input signal {signal + abs(cavity_loss_db):.2f} dBm, A = {attenuation:.2f} dB")
    return AttenuationEstimate(floor_dbm=floor, input_signal_dbm=signal + abs(cavity_loss_db), attenuation_db=attenuation)


def insertion_loss_diff(
    trace_a: Tuple[Sequence[float], Sequence[float]],
    trace_b: Tuple[Sequence[float], Sequence[float]],
    band: Tuple[float, float],
) -> Tuple[float, float]:
    """
    Mean and standard deviation of trace_a - trace_b over a band.

    Trace b is interpolated onto the points of trace a inside the band.

    Args:
        trace_a: (frequencies in Hz, transmission in dB)
        trace_b: (frequencies in Hz, transmission in dB)
        band: (low, high) in Hz

    Returns:
        (mean_db, std_db)

    Raises:
        DomainError: If the traces do not overlap inside the band
    """
    f_a, db_a = (np.asarray(x, dtype=float) for x in trace_a)
    f_b, db_b = (np.asarray(x, dtype=float) for x in trace_b)
    low = max(band[0], f_b.min())
    high = min(band[1], f_b.max())
    inside = (f_a >= low) & (f_a <= high)
    if high < low or not np.any(inside):
        raise DomainError(f"traces do not overlap within the band [{band[0]:g}, {band[1]:g}] Hz")
    order = np.argsort(f_b)
    diff = db_a[inside] - np.interp(f_a[inside], f_b[order], db_b[order])
    std = float(np.std(diff, ddof=1)) if diff.size > 1 else 0.0
    return float(np.mean(diff)), std


def combine_insertion_losses(losses_db: Sequence[float]) -> float:
    """Linear transmission of elements in series, from their losses in dB."""
    return float(db_to_linear(-sum(abs(loss) for loss in losses_db)))


def _idler(spectrum: SpectrumTrace, pilot_f: float) -> Optional[float]:
    if spectrum.pump_frequency is None:
        return None
    return 2.0 * spectrum.pump_frequency - pilot_f


def _tone_bins(spectrum: SpectrumTrace, pilot_f: float) -> set:
    bins = {spectrum.bin_index(pilot_f)}
    for tone in (spectrum.pump_frequency, _idler(spectrum, pilot_f)):
        if tone is not None and spectrum.frequencies[0] <= tone <= spectrum.frequencies[-1]:
            bins.add(spectrum.bin_index(tone))
    return bins


def _window(spectrum: SpectrumTrace, center: int, excluded: set) -> np.ndarray:
    lo = max(center - SNR_WINDOW_BINS, 0)
    hi = min(center + SNR_WINDOW_BINS + 1, spectrum.frequencies.size)
    indices = np.array([i for i in range(lo, hi) if i not in excluded], dtype=int)
    if indices.size == 0:
        raise LowContrastError("no floor bins around the pilot")
    return indices


def snr(spectrum: SpectrumTrace, pilot_f: float) -> float:
    """
    Pilot height over the local median floor in dB.

    Raises:
        LowContrastError: If the pilot shares a bin with the pump or sits within 3 dB of the floor
    """
    i = spectrum.bin_index(pilot_f)
    if spectrum.pump_on and spectrum.pump_frequency is not None:
        if abs(spectrum.bin_index(spectrum.pump_frequency) - i) <= 1:
            raise LowContrastError("pump and pilot cannot be resolved individually")
    floor = float(np.median(spectrum.psd_mw[_window(spectrum, i, _tone_bins(spectrum, pilot_f))]))
    value = float(spectrum.psd_dbm[i] - linear_to_db(floor))
    if value < MIN_SNR_DB:
        raise LowContrastError(f"pilot only {value:.2f} dB above the floor")
    return value


def delta_snr(spectrum_on: SpectrumTrace, spectrum_off: SpectrumTrace, pilot_f: float) -> float:
    """Improvement of the pilot SNR from pump off to pump on, in dB."""
    return snr(spectrum_on, pilot_f) - snr(spectrum_off, pilot_f)


class ReferredSpectrum(BaseModel):
    """A spectrum converted to noise temperature at the device input."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frequencies: np.ndarray
    total: np.ndarray = Field(description="Measured noise over eta in K")
    input_noise: np.ndarray = Field(description="Source noise at the device input in K")


def refer_spectrum(spectrum: SpectrumTrace, eta: float, t_hemt_mc: float) -> ReferredSpectrum:
    """Per-bin `refer_to_input` of a spectrum measured at the plate."""
    if eta <= 0:
        raise DomainError(f"transmission must be positive, got {eta}")
    plate_k = spectrum.psd_mw * 1e-3 / (K_B * spectrum.rbw)
    v = 0.5 * H * spectrum.frequencies / K_B
    return ReferredSpectrum(
        frequencies=spectrum.frequencies,
        total=plate_k / eta,
        input_noise=(plate_k - (1.0 - eta) * v - t_hemt_mc) / eta,
    )


def compression_point(
    p_in_dbm: Sequence[float],
    gain_db: Sequence[float],
    small_signal_gain_db: Optional[float] = None,
) -> float:
    """
    Input power at which the gain has dropped by 1 dB.

    Args:
        p_in_dbm: Input powers in dBm, any order
        gain_db: Gain at each power
        small_signal_gain_db: Reference gain; the mean of the three weakest points by default

    Returns:
        1 dB compression point in dBm, linearly interpolated

    Raises:
        UnidentifiableError: If the gain never drops by 1 dB in the sweep
    """
    p = np.asarray(p_in_dbm, dtype=float)
    g = np.asarray(gain_db, dtype=float)
    if p.size < 2 or p.size != g.size:
        raise DomainError("compression sweep needs at least 2 matching points")
    order = np.argsort(p)
    p, g = p[order], g[order]
    reference = float(np.mean(g[:3])) if small_signal_gain_db is None else small_signal_gain_db
    below = np.nonzero(g <= reference - 1.0)[0]
    if below.size == 0:
        raise UnidentifiableError("gain does not compress by 1 dB within the sweep")
    j = int(below[0])
    if j == 0:
        return float(p[0])
    target = reference - 1.0
    return float(p[j - 1] + (target - g[j - 1]) * (p[j] - p[j - 1]) / (g[j] - g[j - 1]))
