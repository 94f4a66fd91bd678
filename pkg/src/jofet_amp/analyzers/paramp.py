"""Input-output noise theory of a lossy phase-insensitive parametric amplifier.

Gains follow the convention where the unpumped on-resonance signal gain is
(kappa_ex - kappa_i)/kappa. Bath and idler inputs are taken in their ground
state, so each contributes the vacuum level V = hf/2.
"""

import logging
import math
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from jofet_amp.core.errors import DomainError, InconsistentGainError
from jofet_amp.core.models import GainPair, NoiseSpectralDensity
from jofet_amp.utils.physics import H, K_B, db_to_linear

logger = logging.getLogger(__name__)

SUM_RULE_TOLERANCE = 1e-12
NOISE_INPUTS = ("gain_db", "kappa_ratio", "eta_s", "t_hemt", "frequency")


def vacuum_level(f: float) -> NoiseSpectralDensity:
    """Zero-point level V = hf/2."""
    if f < 0:
        raise DomainError(f"frequency must be nonnegative, got {f}")
    return NoiseSpectralDensity.from_value(0.5 * H * f, frequency=f)


def quantum_limit(f: float) -> NoiseSpectralDensity:
    """Input-referred noise 2V of an ideal amplifier with a vacuum input."""
    return NoiseSpectralDensity.from_value(H * f, frequency=f)


def device_quantum_limit(kappa_ratio: float, f: float) -> NoiseSpectralDensity:
    """High-gain added noise V (1 + 2 kappa_i/kappa_ex) of a lossy cavity."""
    if kappa_ratio < 0:
        raise DomainError("kappa_i/kappa_ex must be nonnegative")
    return NoiseSpectralDensity.from_value(0.5 * H * f * (1.0 + 2.0 * kappa_ratio), frequency=f)


def idler_from_sumrule(g_s: complex, kappa_ratio: float) -> float:
    """
    Idler power gain |g_I|^2 implied by the bosonic sum rule.

    Args:
        g_s: Complex signal gain
        kappa_ratio: kappa_i / kappa_ex

    Returns:
        |g_I|^2

    Raises:
        InconsistentGainError: If the signal gain lies outside the physical region
    """
    if kappa_ratio < 0:
        raise DomainError("kappa_i/kappa_ex must be nonnegative")
    g_s = complex(g_s)
    idler = (abs(g_s) ** 2 - 1.0 + kappa_ratio * abs(g_s + 1.0) ** 2) / (1.0 + kappa_ratio)
    if idler < -SUM_RULE_TOLERANCE * max(1.0, abs(g_s) ** 2):
        raise InconsistentGainError(
            f"signal gain {g_s:.6g} implies |g_I|^2 = {idler:.3g} < 0 for kappa_i/kappa_ex = {kappa_ratio:g}"
        )
    return max(idler, 0.0)


def output_psd(
    s_in: NoiseSpectralDensity,
    pair: GainPair,
    kappa_i: float,
    kappa_ex: float,
    frequency: Optional[float] = None,
) -> NoiseSpectralDensity:
    """
    Output spectral density with the bath and idler in vacuum.

    Args:
        s_in: Signal-port input density
        pair: Signal and idler gains
        kappa_i: Internal rate, s^-1
        kappa_ex: External rate, s^-1
        frequency: Frequency for V; defaults to that of s_in

    Returns:
        S_J = S_in |g_S|^2 + V r |g_S + 1|^2 + V (1 + r) |g_I|^2 with r = kappa_i/kappa_ex
    """
    if kappa_ex <= 0:
        raise DomainError("external rate must be positive")
    f = s_in.frequency if frequency is None else frequency
    v = vacuum_level(f).value
    r = kappa_i / kappa_ex
    value = (
        s_in.value * abs(pair.g_s) ** 2
        + v * r * abs(pair.g_s + 1.0) ** 2
        + v * (1.0 + r) * abs(pair.g_i) ** 2
    )
    return NoiseSpectralDensity.from_value(value, frequency=f)


def added_noise(g_s: complex, kappa_ratio: float, f: float) -> NoiseSpectralDensity:
    """Input-referred noise added by the amplifier, V + 2V r |g_S+1|^2/|g_S|^2 - V/|g_S|^2."""
    g_s = complex(g_s)
    if g_s == 0:
        raise DomainError("signal gain must be nonzero")
    v = vacuum_level(f).value
    power = abs(g_s) ** 2
    value = v + 2.0 * v * kappa_ratio * abs(g_s + 1.0) ** 2 / power - v / power
    return NoiseSpectralDensity.from_value(max(value, 0.0), frequency=f)


def _total_noise_k(gain_db, kappa_ratio, eta_s, t_hemt, frequency, s_in_k=None):
    # vectorized total input-referred noise in K for real g_S = sqrt(G)
    gain = db_to_linear(gain_db)
    v = 0.5 * H * np.asarray(frequency, dtype=float) / K_B
    s_in = v if s_in_k is None else np.asarray(s_in_k, dtype=float)
    g = np.sqrt(gain)
    added = v + 2.0 * v * kappa_ratio * (g + 1.0) ** 2 / gain - v / gain
    return s_in + added + (1.0 - eta_s) / (eta_s * gain) * v + t_hemt / (eta_s * gain)


def expected_total_input_noise(
    g_s,
    kappa_ratio: float,
    eta_s: float,
    t_hemt: float,
    f: float,
    s_in: Optional[NoiseSpectralDensity] = None,
):
    """
    Total noise of the full chain referred to the amplifier input.

    Args:
        g_s: Real positive signal gain sqrt(G), scalar or array
        kappa_ratio: kappa_i / kappa_ex
        eta_s: System transmission after the amplifier
        t_hemt: Chain noise at the mixing-chamber reference in K
        f: Frequency in Hz
        s_in: Input density, vacuum by default

    Returns:
        Temperature in K
    """
    if not 0 < eta_s <= 1:
        raise DomainError(f"eta_s must lie in (0, 1], got {eta_s}")
    g_s = np.asarray(g_s, dtype=float)
    if np.any(g_s <= 0):
        raise DomainError("signal gain must be real and positive")
    gain_db = 10.0 * np.log10(g_s ** 2)
    s_in_k = None if s_in is None else s_in.equivalent_temperature
    total = _total_noise_k(gain_db, kappa_ratio, eta_s, t_hemt, f, s_in_k)
    return total if np.ndim(total) else float(total)


def expected_noise_from_gain_db(
    gain_db, kappa_ratio: float, eta_s: float, t_hemt: float, f: float
):
    """expected_total_input_noise with the gain given in dB."""
    return expected_total_input_noise(np.sqrt(db_to_linear(gain_db)), kappa_ratio, eta_s, t_hemt, f)


def solve_kappa_ratio_for_noise(
    target_k: float,
    gain_db: float,
    eta_s: float,
    t_hemt: float,
    f: float,
    bracket: Tuple[float, float] = (0.0, 10.0),
) -> float:
    """
    Loss ratio kappa_i/kappa_ex that yields a given total input noise.

    Raises:
        DomainError: If the target is not reachable within the bracket
    """
    def residual(r: float) -> float:
        return expected_noise_from_gain_db(gain_db, r, eta_s, t_hemt, f) - target_k

    low, high = bracket
    if residual(low) > 0 or residual(high) < 0:
        raise DomainError(
            f"target {target_k} K is outside the noise range reachable for kappa_i/kappa_ex in {bracket}"
        )
    return float(brentq(residual, low, high, xtol=1e-14))


class NoiseBand(BaseModel):
    """Propagated uncertainty of the expected total input noise."""

    central: float = Field(description="Expected noise at the central inputs in K")
    sigma: float = Field(description="One-sigma half width in K", ge=0.0)
    contributions: Dict[str, float] = Field(default_factory=dict, description="Per-input one-sigma terms in K")

    @property
    def low(self) -> float:
        return self.central - self.sigma

    @property
    def high(self) -> float:
        return self.central + self.sigma


def _unpack(inputs: Mapping[str, Tuple[float, float]]) -> Tuple[Dict[str, float], Dict[str, float]]:
    missing = [name for name in NOISE_INPUTS if name not in inputs]
    if missing:
        raise DomainError(f"missing noise inputs: {', '.join(missing)}")
    central = {name: float(inputs[name][0]) for name in NOISE_INPUTS}
    sigma = {name: float(inputs[name][1]) for name in NOISE_INPUTS}
    if any(s < 0 for s in sigma.values()):
        raise DomainError("one-sigma values must be nonnegative")
    return central, sigma


def _drift_sigma(eta_s: float, drift_db: float) -> float:
    # linearized dB -> relative transmission change
    return eta_s * math.log(10.0) / 10.0 * drift_db


def uncertainty_band(
    inputs: Mapping[str, Tuple[float, float]],
    drift_db: float = 0.0,
) -> NoiseBand:
    """
    First-order uncertainty of the expected total input noise.

    Args:
        inputs: (central, one-sigma) for gain_db, kappa_ratio, eta_s, t_hemt and frequency
        drift_db: Calibration drift bound on eta_s in dB; 0 leaves it out

    Returns:
        NoiseBand with per-input contributions summed in quadrature
    """
    central, sigma = _unpack(inputs)
    value = float(_total_noise_k(**central))

    contributions = {}
    for name in NOISE_INPUTS:
        x = central[name]
        step = 1e-6 * abs(x) if x != 0 else 1e-9
        up = dict(central, **{name: x + step})
        down = dict(central, **{name: x - step})
        derivative = (float(_total_noise_k(**up)) - float(_total_noise_k(**down))) / (2.0 * step)
        contributions[name] = abs(derivative) * sigma[name]
        if name == "eta_s" and drift_db > 0:
            contributions["calibration_drift"] = abs(derivative) * _drift_sigma(x, drift_db)

    total = math.sqrt(sum(term ** 2 for term in contributions.values()))
    logger.debug(f"Noise band {value:.4f} +/- {total:.4f} K; terms {contributions}")
    return NoiseBand(central=value, sigma=total, contributions=contributions)


def uncertainty_band_monte_carlo(
    inputs: Mapping[str, Tuple[float, float]],
    drift_db: float = 0.0,
    samples: int = 100_000,
    seed: Optional[int] = None,
) -> NoiseBand:
    """Sampling cross-check of `uncertainty_band` with independent Gaussian inputs."""
    central, sigma = _unpack(inputs)
    rng = np.random.default_rng(seed)
    draws = {name: central[name] + sigma[name] * rng.standard_normal(samples) for name in NOISE_INPUTS}
    if drift_db > 0:
        draws["eta_s"] = draws["eta_s"] + _drift_sigma(central["eta_s"], drift_db) * rng.standard_normal(samples)
    values = _total_noise_k(**draws)
    return NoiseBand(central=float(_total_noise_k(**central)), sigma=float(np.std(values)))
