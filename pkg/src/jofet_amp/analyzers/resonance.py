"""One-port reflection fitting and resonance extraction.

Sign map: `reflection_model` uses the reference plane where the on-resonance
value is (kappa_i - kappa_ex)/kappa_tot. The amplifier input-output relations
in `paramp` use the opposite reference, g_S = (kappa_ex - kappa_i)/kappa, so
g_S = -reflection_model(...) for the same cavity.
"""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import curve_fit, least_squares
from scipy.signal import find_peaks

from jofet_amp.core.errors import (
    AmbiguityError,
    ConvergenceError,
    DomainError,
    FitRejectedError,
    LowContrastError,
)
from jofet_amp.core.models import ComplexReflectionTrace, ResonatorFit, SpectrumTrace
from jofet_amp.utils.physics import TWO_PI

logger = logging.getLogger(__name__)

MIN_POINTS_PER_LINEWIDTH = 5
MIN_CONTRAST_DB = 3.0
MAX_FIT_EVALUATIONS = 5000
MIN_TRACE_POINTS = 5


def reflection_model(delta, kappa_i: float, kappa_ex: float):
    """
    Reflection of a single-port cavity.

    Args:
        delta: Angular detuning 2pi (f - f_r) in s^-1, scalar or array
        kappa_i: Internal dissipation rate in s^-1
        kappa_ex: External coupling rate in s^-1

    Returns:
        Complex reflection ((kappa_i - kappa_ex)/2 + i delta) / (kappa_tot/2 + i delta)

    Raises:
        DomainError: If a rate is negative or the total rate is zero
    """
    if kappa_i < 0 or kappa_ex < 0:
        raise DomainError(f"rates must be nonnegative (kappa_i={kappa_i}, kappa_ex={kappa_ex})")
    kappa = kappa_i + kappa_ex
    if kappa <= 0:
        raise DomainError("total rate kappa_i + kappa_ex must be positive")
    delta = np.asarray(delta, dtype=float)
    result = 1.0 - kappa_ex / (kappa / 2.0 + 1j * delta)
    return result if result.ndim else complex(result)


def _edge_count(n: int) -> int:
    return max(3, n // 10)


def estimate_cable_delay(frequencies: np.ndarray, data: np.ndarray) -> float:
    """Cable delay from the mean phase slope of the outer tenth on each side."""
    m = _edge_count(frequencies.size)
    phase = np.unwrap(np.angle(data))
    slope_lo = np.polyfit(frequencies[:m], phase[:m], 1)[0]
    slope_hi = np.polyfit(frequencies[-m:], phase[-m:], 1)[0]
    return 0.5 * (slope_lo + slope_hi) / TWO_PI


def _noise_sigma(data: np.ndarray) -> float:
    # per-component sigma of complex Gaussian noise from consecutive differences
    return float(np.median(np.abs(np.diff(data)))) / 1.665


def _normalize(trace: ComplexReflectionTrace) -> Tuple[np.ndarray, float, float, complex]:
    f = trace.frequencies
    f_center = 0.5 * (f[0] + f[-1])
    delay = estimate_cable_delay(f, trace.s11)
    rotated = trace.s11 * np.exp(-1j * TWO_PI * delay * (f - f_center))
    m = _edge_count(f.size)
    background = complex(np.mean(np.concatenate([rotated[:m], rotated[-m:]])))
    if background == 0:
        raise FitRejectedError("trace has no off-resonant background")
    return rotated / background, f_center, delay, background


def _initial_rates(f: np.ndarray, normalized: np.ndarray) -> Tuple[float, float, float]:
    depth = np.abs(normalized - 1.0)
    i_peak = int(np.argmax(depth))
    f_guess = float(f[i_peak])
    above = np.nonzero(depth ** 2 >= 0.5 * depth[i_peak] ** 2)[0]
    step = float(np.median(np.diff(f)))
    fwhm = max(float(f[above[-1]] - f[above[0]]), step)
    kappa = TWO_PI * fwhm
    kappa_ex = 0.5 * kappa * min(float(depth[i_peak]), 1.98)

    winding = np.unwrap(np.angle(normalized))
    total_winding = abs(winding[-1] - winding[0])
    if total_winding > 1.5 * np.pi and kappa_ex < 0.5 * kappa:
        logger.debug(f"Phase winds {np.degrees(total_winding):.0f} deg, taking the overcoupled branch")
        kappa_ex = kappa - kappa_ex
    kappa_ex = float(np.clip(kappa_ex, 0.01 * kappa, 0.99 * kappa))
    return f_guess, kappa - kappa_ex, kappa_ex


def _check_dip(normalized: np.ndarray) -> None:
    variation = float(np.max(np.abs(normalized - 1.0)))
    floor = 5.0 * _noise_sigma(normalized)
    if variation <= max(floor, 1e-9):
        raise FitRejectedError(
            f"no resonance detected: variation {variation:.3g} below noise floor {floor:.3g}"
        )


def fit_one_port(trace: ComplexReflectionTrace) -> ResonatorFit:
    """
    Fit a one-port reflection trace with a complex background and cable delay.

    Args:
        trace: Reflection trace containing one resonance

    Returns:
        ResonatorFit with Jacobian-based one-sigma uncertainties

    Raises:
        FitRejectedError: If the trace shows no resonance above its noise
        ConvergenceError: If the optimizer hits its evaluation cap
    """
    f = trace.frequencies
    z = trace.s11
    if f.size < MIN_TRACE_POINTS:
        raise FitRejectedError(f"a one-port fit needs at least {MIN_TRACE_POINTS} points, got {f.size}")
    normalized, f_center, delay0, background0 = _normalize(trace)
    _check_dip(normalized)
    f_guess, kappa_i0, kappa_ex0 = _initial_rates(f, normalized)
    kappa_scale = kappa_i0 + kappa_ex0
    f_scale = kappa_scale / TWO_PI
    span = float(f[-1] - f[0])

    logger.info(
        f"Fitting one-port trace: {f.size} points, f_r guess {f_guess:.6e} Hz, "
        f"kappa/2pi guess {f_scale:.3e} Hz"
    )

    def unpack(x: np.ndarray) -> Dict[str, float]:
        return {
            "f_r": f_guess + x[0] * f_scale,
            "kappa_i": x[1] * kappa_scale,
            "kappa_ex": x[2] * kappa_scale,
            "a_re": x[3],
            "a_im": x[4],
            "delay": delay0 + x[5] / span,
        }

    def model(x: np.ndarray) -> np.ndarray:
        p = unpack(x)
        background = (p["a_re"] + 1j * p["a_im"]) * np.exp(1j * TWO_PI * p["delay"] * (f - f_center))
        kappa = p["kappa_i"] + p["kappa_ex"]
        gamma = 1.0 - p["kappa_ex"] / (kappa / 2.0 + 1j * TWO_PI * (f - p["f_r"]))
        return background * gamma

    def residuals(x: np.ndarray) -> np.ndarray:
        diff = model(x) - z
        return np.concatenate([diff.real, diff.imag])

    x0 = np.array([
        0.0,
        kappa_i0 / kappa_scale,
        kappa_ex0 / kappa_scale,
        background0.real,
        background0.imag,
        0.0,
    ])
    lower = [-np.inf, 0.0, 1e-9, -np.inf, -np.inf, -np.inf]
    upper = [np.inf] * 6
    result = least_squares(
        residuals,
        x0,
        bounds=(lower, upper),
        method="trf",
        x_scale=1.0,
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=MAX_FIT_EVALUATIONS,
    )
    best = unpack(result.x)
    if result.status == 0:
        logger.error(f"One-port fit did not converge after {result.nfev} evaluations")
        raise ConvergenceError("one-port fit hit the evaluation cap", best_params=best)

    dof = max(2 * f.size - x0.size, 1)
    s_squared = 2.0 * result.cost / dof
    jac = result.jac
    cov = np.linalg.pinv(jac.T @ jac) * s_squared
    sigma = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    uncertainties = {
        "f_r": float(sigma[0] * f_scale),
        "kappa_i": float(sigma[1] * kappa_scale),
        "kappa_ex": float(sigma[2] * kappa_scale),
        "background_amplitude": float(np.hypot(sigma[3], sigma[4])),
        "cable_delay": float(sigma[5] / span),
    }
    a = best["a_re"] + 1j * best["a_im"]
    fit = ResonatorFit(
        f_r=best["f_r"],
        kappa_i=max(best["kappa_i"], 0.0),
        kappa_ex=max(best["kappa_ex"], 0.0),
        background_amplitude=abs(a),
        background_phase=float(np.angle(a)),
        cable_delay=best["delay"],
        uncertainties=uncertainties,
        residual_norm=float(np.sqrt(2.0 * result.cost / f.size)),
    )
    if not f[0] <= fit.f_r <= f[-1]:
        raise FitRejectedError(f"fitted resonance {fit.f_r:.6e} Hz lies outside the trace span")
    logger.info(
        f"One-port fit: f_r={fit.f_r:.6e} Hz, kappa_i/2pi={fit.kappa_i_hz:.4g} Hz, "
        f"kappa_ex/2pi={fit.kappa_ex_hz:.4g} Hz, efficiency={fit.efficiency:.3f}"
    )
    return fit


def extract_resonance_from_phase(trace: ComplexReflectionTrace) -> float:
    """
    Resonant frequency at the maximum phase slope.

    Args:
        trace: Reflection trace, linear or moderately nonlinear

    Returns:
        Frequency in Hz, refined below the grid step by parabolic interpolation

    Raises:
        AmbiguityError: If the phase has more than one steep region
    """
    f = trace.frequencies
    if f.size < 3:
        raise FitRejectedError("phase extraction needs at least 3 points")
    delay = estimate_cable_delay(f, trace.s11)
    phase = np.unwrap(np.angle(trace.s11)) - TWO_PI * delay * f
    slope = np.abs(np.gradient(phase, f))
    peak = float(slope.max())

    peaks, _ = find_peaks(slope, height=0.5 * peak, prominence=0.5 * peak)
    if len(peaks) > 1:
        candidates = [float(f[i]) for i in peaks]
        raise AmbiguityError(
            f"phase has {len(peaks)} steep regions; the trace may be bifurcated",
            candidates=candidates,
        )

    i = int(np.argmax(slope))
    above = np.nonzero(slope >= 0.5 * peak)[0]
    points_per_linewidth = above[-1] - above[0] + 1
    if points_per_linewidth < MIN_POINTS_PER_LINEWIDTH:
        logger.warning(
            f"Only {points_per_linewidth} points per linewidth; "
            f"phase extraction needs at least {MIN_POINTS_PER_LINEWIDTH}"
        )

    return _refine_peak(f, slope, i)


def extract_resonance_from_response(trace: ComplexReflectionTrace) -> float:
    """
    Resonant frequency at the maximum intracavity response |S11/background - 1|.

    The intracavity photon number peaks exactly where the drive meets the
    shifted resonance, so this locator stays unbiased for Kerr-shifted traces
    where the maximum phase slope runs ahead of the true shift.

    Args:
        trace: Reflection trace

    Returns:
        Frequency in Hz, refined below the grid step by parabolic interpolation

    Raises:
        FitRejectedError: If the trace shows no resonance above the noise
    """
    normalized, _, _, _ = _normalize(trace)
    _check_dip(normalized)
    response = np.abs(normalized - 1.0)
    return _refine_peak(trace.frequencies, response, int(np.argmax(response)))


def _refine_peak(f: np.ndarray, y: np.ndarray, i: int) -> float:
    if 0 < i < f.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        curvature = y0 - 2.0 * y1 + y2
        offset = 0.5 * (y0 - y2) / curvature if curvature != 0 else 0.0
        step = 0.5 * (f[i + 1] - f[i - 1])
        return float(f[i] + offset * step)
    return float(f[i])


class LorentzianGainFit(BaseModel):
    """Lorentzian-plus-constant fit of a power spectrum."""

    center: float = Field(description="Peak center in Hz")
    fwhm: float = Field(description="Full width at half maximum in Hz", gt=0.0)
    peak_db: float = Field(description="Peak height above the floor in dB")
    amplitude_mw: float = Field(description="Lorentzian amplitude in mW per bin")
    floor_mw: float = Field(description="Constant floor in mW per bin")
    uncertainties: Dict[str, float] = Field(default_factory=dict)

    def gain_profile(self, frequencies) -> np.ndarray:
        """Peak-normalized power profile, 1 at the center."""
        x = 2.0 * (np.asarray(frequencies, dtype=float) - self.center) / self.fwhm
        return 1.0 / (1.0 + x ** 2)


def _lorentzian(f, amplitude, center, fwhm, floor):
    return amplitude / (1.0 + (2.0 * (f - center) / fwhm) ** 2) + floor


def fit_lorentzian_gain(
    spectrum: SpectrumTrace,
    exclude: Optional[Sequence[float]] = None,
    exclude_bins: int = 0,
) -> LorentzianGainFit:
    """
    Fit a single dominant peak with a Lorentzian plus constant floor.

    Args:
        spectrum: Power spectrum in dBm per resolution bandwidth
        exclude: Frequencies of discrete tones to mask from the fit
        exclude_bins: Extra bins masked on each side of every excluded tone

    Returns:
        LorentzianGainFit with center, full width and peak height above floor

    Raises:
        LowContrastError: If the peak is less than 3 dB above the median floor
    """
    f = spectrum.frequencies
    power = spectrum.psd_mw
    keep = np.ones(f.size, dtype=bool)
    for tone in exclude or ():
        i = spectrum.bin_index(tone)
        keep[max(i - exclude_bins, 0):i + exclude_bins + 1] = False
    f_fit = f[keep]
    p_fit = power[keep]

    floor0 = float(np.median(p_fit))
    peak0 = float(p_fit.max())
    contrast_db = 10.0 * np.log10(peak0 / floor0) if floor0 > 0 else np.inf
    if contrast_db < MIN_CONTRAST_DB:
        raise LowContrastError(f"peak only {contrast_db:.2f} dB above the floor")

    i_peak = int(np.argmax(p_fit))
    half = floor0 + 0.5 * (peak0 - floor0)
    above = np.nonzero(p_fit >= half)[0]
    fwhm0 = max(float(f_fit[above[-1]] - f_fit[above[0]]), float(np.median(np.diff(f))))
    p0 = [peak0 - floor0, float(f_fit[i_peak]), fwhm0, floor0]
    scale = peak0

    popt, pcov = curve_fit(
        lambda x, a, c, w, b: _lorentzian(x, a * scale, c, w, b * scale) / scale,
        f_fit,
        p_fit / scale,
        p0=[p0[0] / scale, p0[1], p0[2], p0[3] / scale],
        maxfev=20000,
    )
    amplitude, center, fwhm, floor = popt[0] * scale, popt[1], abs(popt[2]), popt[3] * scale
    sigma = np.sqrt(np.clip(np.diag(pcov), 0.0, None))
    if floor <= 0:
        raise LowContrastError("fitted floor is not positive")
    fit = LorentzianGainFit(
        center=float(center),
        fwhm=float(fwhm),
        peak_db=float(10.0 * np.log10((amplitude + floor) / floor)),
        amplitude_mw=float(amplitude),
        floor_mw=float(floor),
        uncertainties={"center": float(sigma[1]), "fwhm": float(sigma[2])},
    )
    logger.info(f"Lorentzian fit: center={fit.center:.6e} Hz, fwhm={fit.fwhm:.4g} Hz, peak={fit.peak_db:.2f} dB")
    return fit
