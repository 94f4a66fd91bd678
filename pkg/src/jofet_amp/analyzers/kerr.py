"""Kerr nonlinearity: power-sweep extraction and circuit prediction."""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from jofet_amp.analyzers.circuit import (
    DEFAULT_F_GEO,
    junction_state,
    state_from_inductance,
)
from jofet_amp.core.errors import DomainError, UnidentifiableError
from jofet_amp.core.models import (
    CircuitModel,
    JunctionState,
    KerrEstimate,
    PowerSweepPoint,
    ResonatorFit,
)
from jofet_amp.utils.physics import E_CHARGE, H, HBAR, PHI0, TWO_PI

logger = logging.getLogger(__name__)

LINEAR_WINDOW_FRACTION = 0.25


def photon_number(p_in, f_s, kappa_ex: float, kappa_i: float, delta=0.0):
    """
    Mean intracavity photon number for a weak coherent drive.

    Args:
        p_in: Power at the device input in W
        f_s: Drive frequency in Hz
        kappa_ex: External rate, s^-1
        kappa_i: Internal rate, s^-1
        delta: Angular drive detuning from the resonance, s^-1

    Returns:
        n = 4 kappa_ex P_in / (h f_s ((kappa_ex + kappa_i)^2 + 4 delta^2))
    """
    if kappa_ex < 0 or kappa_i < 0:
        raise DomainError("rates must be nonnegative")
    f_s = np.asarray(f_s, dtype=float)
    if np.any(f_s <= 0):
        raise DomainError("drive frequency must be positive")
    kappa = kappa_ex + kappa_i
    delta = np.asarray(delta, dtype=float)
    denominator = kappa ** 2 + 4.0 * delta ** 2
    if np.any(denominator == 0):
        raise DomainError("photon number diverges for a lossless cavity driven on resonance")
    n = 4.0 * kappa_ex * np.asarray(p_in, dtype=float) / (H * f_s * denominator)
    return n if n.ndim else float(n)


def photon_number_per_watt(f_s: float, kappa_ex: float, kappa_i: float) -> float:
    """On-resonance photons per watt at the device input."""
    return photon_number(1.0, f_s, kappa_ex, kappa_i, 0.0)


def kerr_shift_per_power(K: float, f_s: float, kappa_ex: float, kappa_i: float) -> float:
    """On-resonance frequency shift per input power in Hz/W for a Hamiltonian K."""
    return 0.5 * K / TWO_PI * photon_number_per_watt(f_s, kappa_ex, kappa_i)


def kerr_from_sweep(points: Sequence[PowerSweepPoint], cavity: ResonatorFit) -> KerrEstimate:
    """
    Extract the Kerr coefficient from resonances measured at increasing power.

    Only the low-power points whose shift stays below a quarter linewidth
    enter the fit. The fitted angular shift per photon is half the
    Hamiltonian K.

    Args:
        points: Sweep points in any order
        cavity: Small-signal fit providing kappa_i and kappa_ex

    Returns:
        KerrEstimate with K, the shift per input power and their uncertainties

    Raises:
        DomainError: If fewer than 3 points are supplied
        UnidentifiableError: If fewer than 3 points fall in the low-power window
    """
    if len(points) < 3:
        raise DomainError(f"a Kerr fit needs at least 3 points, got {len(points)}")
    ordered = sorted(points, key=lambda p: (p.input_power, p.signal_frequency, p.resonant_frequency))
    power = np.array([p.input_power for p in ordered])
    f_r = np.array([p.resonant_frequency for p in ordered])
    f_s = np.array([p.signal_frequency for p in ordered])

    shift = np.abs(f_r - f_r[0])
    window = shift < LINEAR_WINDOW_FRACTION * cavity.kappa_tot / TWO_PI
    if window.sum() < 3:
        raise UnidentifiableError(
            f"only {int(window.sum())} points lie within a quarter linewidth of the low-power resonance"
        )
    if window.sum() < len(ordered):
        logger.info(f"Using {int(window.sum())} of {len(ordered)} points in the low-power window")
    power, f_r, f_s = power[window], f_r[window], f_s[window]

    n = photon_number(power, f_s, cavity.kappa_ex, cavity.kappa_i, TWO_PI * (f_s - f_r))
    if np.ptp(n) == 0:
        raise UnidentifiableError("all points share one photon number")
    per_photon = linregress(n, TWO_PI * f_r)
    per_power = linregress(power, f_r)

    residual = TWO_PI * f_r - (per_photon.intercept + per_photon.slope * n)
    noise = float(np.std(residual))
    rises = np.diff(TWO_PI * f_r)
    if np.any(rises > 3.0 * noise + 1e-12 * abs(TWO_PI * f_r[0])):
        logger.warning("Resonance is not monotone in power; points may lie outside the linear regime")

    estimate = KerrEstimate(
        K=2.0 * per_photon.slope,
        K_per_power=per_power.slope,
        uncertainty=2.0 * per_photon.stderr,
        shift_per_photon=per_photon.slope,
        K_per_power_uncertainty=per_power.stderr,
        points_used=int(window.sum()),
    )
    logger.info(
        f"Kerr fit: K={estimate.K:.4g} s^-1, shift/power={estimate.mhz_per_fw:.4g} MHz/fW "
        f"from {estimate.points_used} points"
    )
    return estimate


def kerr_predict(state: JunctionState) -> float:
    """
    Kerr coefficient of the mode from its lumped description.

    hbar K = -e^2/(2 C_eff) (L_eff/L_J) du^4

    Args:
        state: Junction state with L_J > 0

    Returns:
        K in s^-1, exactly 0 when the flux drop vanishes
    """
    if state.delta_u_bar == 0:
        return 0.0
    if state.l_j <= 0:
        raise DomainError("Josephson inductance must be positive")
    energy = -(E_CHARGE ** 2) / (2.0 * state.c_eff) * (state.l_eff / state.l_j) * state.delta_u_bar ** 4
    return energy / HBAR


def josephson_inductance_from_critical_current(i_c: float) -> float:
    """L_J = Phi0 / (2 pi I_c)."""
    if i_c <= 0:
        raise DomainError(f"critical current must be positive, got {i_c}")
    return PHI0 / (TWO_PI * i_c)


def kerr_design(i_c: float, model: CircuitModel) -> float:
    """Kerr coefficient expected for a junction of critical current i_c in A."""
    l_j = josephson_inductance_from_critical_current(i_c)
    state = state_from_inductance(l_j, model)
    logger.debug(f"Design point: L_J={l_j:.4g} H, kl={state.kl:.6f}, f_r={state.f_r:.6e} Hz")
    return kerr_predict(state)


class KerrBandPredictor:
    """Predicted Kerr coefficient at observed resonances for an assumed f0."""

    def __init__(
        self,
        frequencies: Sequence[float],
        abscissa: Optional[Sequence[float]] = None,
        f_geo: float = DEFAULT_F_GEO,
    ):
        self.frequencies = np.asarray(frequencies, dtype=float)
        self._abscissa = self.frequencies if abscissa is None else np.asarray(abscissa, dtype=float)
        self.f_geo = f_geo

    @property
    def abscissa(self) -> np.ndarray:
        return self._abscissa

    @property
    def unit(self) -> str:
        return "s^-1"

    def __call__(self, f0: float) -> np.ndarray:
        model = CircuitModel.from_design(f0=f0, f_geo=self.f_geo)
        return np.array([kerr_predict(junction_state(f, model)) for f in self.frequencies])


def kerr_conventions(K: float) -> dict:
    """Report a Kerr coefficient in angular and ordinary units."""
    return {"angular_s^-1": K, "ordinary_Hz": K / TWO_PI, "abs_angular_s^-1": math.fabs(K)}
