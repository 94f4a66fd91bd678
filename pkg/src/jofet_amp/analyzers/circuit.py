"""Embedded-junction resonator model.

A half-wave resonator of two quarter-wave sections with a Josephson junction
at the center. The junction inductance pulls the mode down from the bare
resonance f0 and loads it with the junction shunt resistance; a coupling
capacitor sets the external rate.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import bisect, curve_fit, lsq_linear, newton

from jofet_amp.core.errors import DomainError, JofetError, UnidentifiableError
from jofet_amp.core.interfaces import BandPredictor
from jofet_amp.core.models import CircuitModel, JunctionState
from jofet_amp.utils.physics import TWO_PI

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
KL_FLOOR = 1e-9
KL_TOLERANCE = 1e-12
DEFAULT_F_GEO = 7.2e9


def characteristic_impedance(f0: float, f_geo: float = DEFAULT_F_GEO) -> float:
    """Z0 scaled from 50 Ohm by the kinetic-inductance pull f_geo/f0."""
    if f0 <= 0 or f_geo <= 0:
        raise DomainError("f0 and f_geo must be positive")
    return 50.0 * f_geo / f0


def kl_from_fr(f_r: float, f0: float) -> float:
    """
    Mode argument per half-section for a resonance at f_r.

    Args:
        f_r: Resonant frequency in Hz
        f0: Bare resonant frequency in Hz

    Returns:
        kl in rad, (pi/2) f_r / f0

    Raises:
        DomainError: If f_r is not in (0, f0]
    """
    if f_r <= 0:
        raise DomainError(f"resonant frequency must be positive, got {f_r}")
    if f_r > f0:
        raise DomainError(f"f_r = {f_r:g} Hz exceeds f0 = {f0:g} Hz; the junction only lowers the mode")
    return HALF_PI * (f_r / f0)


def _mode_residual(kl: float, r: float) -> float:
    # 2 cot(kl) - r kl multiplied through by sin(kl); monotone decreasing on (0, pi/2]
    return 2.0 * math.cos(kl) - r * kl * math.sin(kl)


def solve_kl(r: float) -> float:
    """
    Solve the mode equation 2 cot(kl) = r kl on (0, pi/2].

    Args:
        r: Inductance ratio L_J / (L_l l)

    Returns:
        kl in rad to an absolute tolerance of 1e-12

    Raises:
        DomainError: If r is negative
    """
    if r < 0 or not math.isfinite(r):
        raise DomainError(f"inductance ratio must be finite and nonnegative, got {r}")
    if r == 0 or _mode_residual(HALF_PI, r) >= 0:
        return HALF_PI

    kl = bisect(_mode_residual, KL_FLOOR, HALF_PI, args=(r,), xtol=1e-10)
    try:
        polished = newton(
            _mode_residual,
            kl,
            fprime=lambda x, r: -(2.0 + r) * math.sin(x) - r * x * math.cos(x),
            args=(r,),
            tol=1e-15,
            maxiter=50,
        )
    except RuntimeError:
        logger.debug(f"Newton polish stalled at r={r:g}; keeping the bisection root")
        return float(kl)
    if abs(polished - kl) > 1e-9 or not KL_FLOOR < polished <= HALF_PI:
        return float(kl)
    return float(polished)


def effective_capacitance(kl, c_l_l: float):
    """C_eff = C_l l (1 + sin(2kl)/(2kl))."""
    kl = np.asarray(kl, dtype=float)
    if np.any(kl <= 0) or np.any(kl > HALF_PI):
        raise DomainError("kl must lie in (0, pi/2]")
    # numpy sinc is the normalized sin(pi x)/(pi x)
    c_eff = c_l_l * (1.0 + np.sinc(2.0 * kl / math.pi))
    return c_eff if c_eff.ndim else float(c_eff)


def flux_drop(kl):
    """Normalized flux drop 2 cos(kl) across the junction, exactly 0 at kl = pi/2."""
    kl = np.asarray(kl, dtype=float)
    drop = 2.0 * np.sin(HALF_PI - kl)
    return drop if drop.ndim else float(drop)


def josephson_inductance(kl: float, model: CircuitModel) -> float:
    """L_J that places the mode at kl, from L_J = L_l l 2 cot(kl) / kl."""
    if not 0 < kl <= HALF_PI:
        raise DomainError("kl must lie in (0, pi/2]")
    return model.l_l_l * 2.0 * math.tan(HALF_PI - kl) / kl


def _state(kl: float, l_j: float, model: CircuitModel) -> JunctionState:
    f_r = model.f0 * kl / HALF_PI
    c_eff = effective_capacitance(kl, model.c_l_l)
    delta_u_bar = flux_drop(kl)
    l_eff = 1.0 / ((TWO_PI * f_r) ** 2 * c_eff)
    if delta_u_bar == 0 or math.isinf(model.r_j):
        r_eff = math.inf
    else:
        r_eff = model.r_j / delta_u_bar ** 2
    return JunctionState(
        kl=kl,
        l_j=l_j,
        delta_u_bar=delta_u_bar,
        c_eff=c_eff,
        l_eff=l_eff,
        r_eff=r_eff,
        f_r=f_r,
    )


def junction_state(f_r: float, model: CircuitModel) -> JunctionState:
    """Lumped description of the mode observed at f_r."""
    kl = kl_from_fr(f_r, model.f0)
    return _state(kl, josephson_inductance(kl, model), model)


def state_from_inductance(l_j: float, model: CircuitModel) -> JunctionState:
    """Lumped description of the mode for a given Josephson inductance."""
    if l_j < 0:
        raise DomainError(f"Josephson inductance must be nonnegative, got {l_j}")
    kl = solve_kl(l_j / model.l_l_l)
    return _state(kl, l_j, model)


def kappa_i_model(state: JunctionState, model: CircuitModel) -> float:
    """Internal rate from line attenuation plus the junction shunt, s^-1."""
    junction = 0.0 if math.isinf(state.r_eff) else 1.0 / (state.r_eff * state.c_eff)
    return model.alpha_l / (model.z0 * state.c_eff) + junction


def kappa_ex_model(state: JunctionState, model: CircuitModel) -> float:
    """External rate through the coupling capacitor, s^-1."""
    if model.c_k == 0:
        return 0.0
    x = (TWO_PI * state.f_r * model.c_k) ** 2
    r_star = (1.0 + x * model.z0 ** 2) / (x * model.z0)
    return 1.0 / (r_star * state.c_eff)


def coupling_efficiency(state: JunctionState, model: CircuitModel) -> float:
    """kappa_ex / kappa_tot of the modeled mode."""
    kappa_ex = kappa_ex_model(state, model)
    kappa = kappa_ex + kappa_i_model(state, model)
    if kappa == 0:
        raise DomainError("modeled mode has no loss channel")
    return kappa_ex / kappa


class DissipationFit(BaseModel):
    """Attenuation and junction shunt resistance fitted at one bare frequency."""

    alpha_l: float = Field(description="Attenuation x length product", ge=0.0)
    r_j: float = Field(description="Junction shunt resistance in Ohm", gt=0.0)
    alpha_l_sigma: float = Field(description="Statistical one-sigma of alpha_l", ge=0.0)
    r_j_sigma: float = Field(description="Statistical one-sigma of R_J in Ohm", ge=0.0)
    f0: float = Field(description="Assumed bare frequency in Hz")
    z0: float = Field(description="Characteristic impedance used in Ohm")
    residual_norm: float = Field(default=0.0, description="RMS residual in s^-1", ge=0.0)
    alpha_l_systematic: float = Field(default=0.0, description="Half spread of alpha_l across the f0 band", ge=0.0)
    r_j_systematic: float = Field(default=0.0, description="Half spread of R_J across the f0 band in Ohm", ge=0.0)


class CouplingFit(BaseModel):
    """Coupling capacitance fitted at one bare frequency."""

    c_k: float = Field(description="Coupling capacitance in F", ge=0.0)
    c_k_sigma: float = Field(description="Statistical one-sigma of C_k in F", ge=0.0)
    f0: float
    z0: float
    residual_norm: float = Field(default=0.0, ge=0.0)


def _split_points(points: Sequence[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    data = np.asarray(points, dtype=float)
    if data.size == 0:
        raise DomainError("no points supplied")
    data = data.reshape(-1, 2)
    return data[:, 0], data[:, 1]


def _mode_arrays(f_r: np.ndarray, model: CircuitModel) -> Tuple[np.ndarray, np.ndarray]:
    if np.any(f_r <= 0):
        raise DomainError("resonant frequencies must be positive")
    if np.any(f_r > model.f0):
        raise DomainError(f"f0 = {model.f0:g} Hz is below the highest observed f_r = {f_r.max():g} Hz")
    kl = HALF_PI * f_r / model.f0
    return effective_capacitance(kl, model.c_l_l), flux_drop(kl)


def _weights(sigma: Optional[Sequence[float]], n: int) -> np.ndarray:
    if sigma is None:
        return np.ones(n)
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    if sigma.size != n or np.any(sigma <= 0):
        raise DomainError("sigma must hold one positive value per point")
    return 1.0 / sigma


def fit_dissipation(
    points: Sequence[Tuple[float, float]],
    f0: float,
    f_geo: float = DEFAULT_F_GEO,
    sigma: Optional[Sequence[float]] = None,
) -> DissipationFit:
    """
    Fit alpha_l and R_J to internal rates observed across a gate sweep.

    kappa_i is linear in (alpha_l, 1/R_J), so the fit is a bounded linear least
    squares with both parameters held nonnegative.

    Args:
        points: Pairs of (f_r in Hz, kappa_i in s^-1)
        f0: Assumed bare frequency in Hz
        f_geo: Designed geometric frequency in Hz
        sigma: Optional one-sigma per kappa_i for inverse-variance weighting

    Returns:
        DissipationFit with statistical uncertainties

    Raises:
        DomainError: If a point lies above f0 or inputs are malformed
        UnidentifiableError: If fewer than 3 distinct frequencies are given
    """
    f_r, kappa_i = _split_points(points)
    if np.unique(f_r).size < 3:
        raise UnidentifiableError(
            f"two parameters need at least 3 distinct resonant frequencies, got {np.unique(f_r).size}"
        )
    model = CircuitModel.from_design(f0=f0, f_geo=f_geo)
    c_eff, drop = _mode_arrays(f_r, model)
    w = _weights(sigma, f_r.size)

    design = np.column_stack([1.0 / (model.z0 * c_eff), drop ** 2 / c_eff]) * w[:, None]
    target = kappa_i * w
    scale = np.linalg.norm(design, axis=0)
    junction_identifiable = scale[1] > 1e-12 * scale[0]
    if not junction_identifiable:
        logger.warning("All points sit at the flux node; R_J is unconstrained")
        alpha = max(float(np.dot(design[:, 0], target) / np.dot(design[:, 0], design[:, 0])), 0.0)
        residual = target - design[:, 0] * alpha
        dof = max(f_r.size - 1, 1)
        s2 = float(residual @ residual) / dof
        return DissipationFit(
            alpha_l=alpha,
            r_j=math.inf,
            alpha_l_sigma=math.sqrt(s2 / float(design[:, 0] @ design[:, 0])),
            r_j_sigma=math.inf,
            f0=f0,
            z0=model.z0,
            residual_norm=math.sqrt(float(np.mean((residual / w) ** 2))),
        )

    solution = lsq_linear(design / scale, target, bounds=(0.0, np.inf), method="bvls", tol=1e-14)
    alpha_l, conductance = solution.x / scale

    residual = target - design @ np.array([alpha_l, conductance])
    dof = max(f_r.size - 2, 1)
    s2 = float(residual @ residual) / dof
    normal = (design / scale).T @ (design / scale)
    covariance = np.linalg.pinv(normal) * s2 / np.outer(scale, scale)
    alpha_sigma, g_sigma = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    if conductance <= 0:
        logger.warning("Junction conductance pinned at zero; reporting R_J as unbounded")
        r_j, r_j_sigma = math.inf, math.inf
    else:
        r_j = 1.0 / conductance
        r_j_sigma = g_sigma / conductance ** 2

    fit = DissipationFit(
        alpha_l=float(alpha_l),
        r_j=float(r_j),
        alpha_l_sigma=float(alpha_sigma),
        r_j_sigma=float(r_j_sigma),
        f0=f0,
        z0=model.z0,
        residual_norm=math.sqrt(float(np.mean((residual / w) ** 2))),
    )
    logger.info(f"Dissipation fit at f0={f0:.4e} Hz: alpha_l={fit.alpha_l:.3e}, R_J={fit.r_j:.4g} Ohm")
    return fit


def _kappa_ex_curve(f_r: np.ndarray, c_k: np.ndarray, model: CircuitModel) -> np.ndarray:
    c_eff, _ = _mode_arrays(f_r, model)
    x = (TWO_PI * f_r * c_k) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = x * model.z0 / ((1.0 + x * model.z0 ** 2) * c_eff)
    return np.where(x > 0, rate, 0.0)


def fit_coupling(
    points: Sequence[Tuple[float, float]],
    f0: float,
    f_geo: float = DEFAULT_F_GEO,
    sigma: Optional[Sequence[float]] = None,
) -> CouplingFit:
    """
    Fit the coupling capacitance to external rates observed across a gate sweep.

    Args:
        points: Pairs of (f_r in Hz, kappa_ex in s^-1)
        f0: Assumed bare frequency in Hz
        f_geo: Designed geometric frequency in Hz
        sigma: Optional one-sigma per kappa_ex

    Returns:
        CouplingFit; the uncertainty is unbounded for a single point

    Raises:
        DomainError: If no points are given or a point lies above f0
    """
    f_r, kappa_ex = _split_points(points)
    model = CircuitModel.from_design(f0=f0, f_geo=f_geo)
    c_eff, _ = _mode_arrays(f_r, model)

    # small-coupling inversion kappa_ex ~ w^2 C_k^2 Z0 / C_eff as the starting point
    guess = float(np.median(np.sqrt(np.clip(kappa_ex, 0.0, None) * c_eff / ((TWO_PI * f_r) ** 2 * model.z0))))
    unit = guess if guess > 0 else 1e-15
    rate_scale = float(np.max(np.abs(kappa_ex))) or 1.0

    popt, pcov = curve_fit(
        lambda f, c: _kappa_ex_curve(f, c * unit, model) / rate_scale,
        f_r,
        kappa_ex / rate_scale,
        p0=[1.0],
        sigma=None if sigma is None else np.asarray(sigma, dtype=float) / rate_scale,
        bounds=(0.0, np.inf),
        maxfev=5000,
    )
    c_k = float(popt[0] * unit)
    variance = float(pcov[0, 0]) if f_r.size > 1 else math.inf
    c_k_sigma = math.sqrt(variance) * unit if math.isfinite(variance) else math.inf
    residual = kappa_ex - _kappa_ex_curve(f_r, c_k, model)

    fit = CouplingFit(
        c_k=c_k,
        c_k_sigma=c_k_sigma,
        f0=f0,
        z0=model.z0,
        residual_norm=math.sqrt(float(np.mean(residual ** 2))),
    )
    logger.info(f"Coupling fit at f0={f0:.4e} Hz: C_k={fit.c_k * 1e15:.4g} fF")
    return fit


class BandEnvelope(BaseModel):
    """Pointwise min/max of a prediction across assumed bare frequencies."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    abscissa: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    f0_values: List[float] = Field(description="Bare frequencies that evaluated successfully")
    failures: Dict[float, str] = Field(default_factory=dict, description="Bare frequency -> failure message")
    unit: str = "1"

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def band_evaluate(
    predictor: BandPredictor,
    f0_range: Tuple[float, float],
    grid: int,
    max_workers: Optional[int] = None,
) -> BandEnvelope:
    """
    Evaluate a predictor across a grid of bare frequencies.

    Args:
        predictor: Callable returning one curve per assumed f0
        f0_range: (low, high) bare frequencies in Hz
        grid: Number of grid points, at least 2
        max_workers: Thread pool size

    Returns:
        BandEnvelope; bare frequencies whose evaluation failed are listed in `failures`

    Raises:
        DomainError: If the range or grid is invalid
        UnidentifiableError: If the predictor fails at every grid point
    """
    low, high = f0_range
    if grid < 2:
        raise DomainError(f"grid must hold at least 2 points, got {grid}")
    if low <= 0 or high < low:
        raise DomainError(f"invalid f0 range [{low}, {high}]")
    f0_grid = np.unique(np.linspace(low, high, grid))

    def evaluate(f0: float):
        try:
            return f0, np.asarray(predictor(float(f0)), dtype=float), None
        except JofetError as e:
            return f0, None, e.message

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        results = list(executor.map(evaluate, f0_grid))

    curves = [curve for _, curve, _ in results if curve is not None]
    failures = {float(f0): message for f0, _, message in results if message is not None}
    for f0, message in failures.items():
        logger.warning(f"Band evaluation failed at f0={f0:.4e} Hz: {message}")
    if not curves:
        raise UnidentifiableError("predictor failed at every bare frequency in the band")

    stack = np.vstack(curves)
    return BandEnvelope(
        abscissa=np.asarray(predictor.abscissa, dtype=float),
        lower=stack.min(axis=0),
        upper=stack.max(axis=0),
        f0_values=[float(f0) for f0, curve, _ in results if curve is not None],
        failures=failures,
        unit=predictor.unit,
    )


class RateBandPredictor:
    """Predicted kappa_i or kappa_ex at observed resonances, refitted per f0.

    With `refit` off the given circuit parameters are held fixed and only
    the assumed f0 varies.
    """

    def __init__(
        self,
        frequencies: Sequence[float],
        rates: Optional[Sequence[float]] = None,
        quantity: str = "kappa_i",
        abscissa: Optional[Sequence[float]] = None,
        f_geo: float = DEFAULT_F_GEO,
        sigma: Optional[Sequence[float]] = None,
        refit: bool = True,
        params: Optional[Dict[str, float]] = None,
    ):
        if quantity not in ("kappa_i", "kappa_ex"):
            raise DomainError(f"unknown quantity '{quantity}'")
        if refit and rates is None:
            raise DomainError("refitting needs observed rates")
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.rates = None if rates is None else np.asarray(rates, dtype=float)
        self.quantity = quantity
        self._abscissa = self.frequencies if abscissa is None else np.asarray(abscissa, dtype=float)
        self.f_geo = f_geo
        self.sigma = sigma
        self.refit = refit
        self.params = dict(params or {})

    @property
    def abscissa(self) -> np.ndarray:
        return self._abscissa

    @property
    def unit(self) -> str:
        return "s^-1"

    def _parameters(self, f0: float) -> Dict[str, float]:
        if not self.refit:
            return self.params
        points = list(zip(self.frequencies, self.rates))
        if self.quantity == "kappa_i":
            fit = fit_dissipation(points, f0, self.f_geo, self.sigma)
            return {"alpha_l": fit.alpha_l, "r_j": fit.r_j}
        return {"c_k": fit_coupling(points, f0, self.f_geo, self.sigma).c_k}

    def __call__(self, f0: float) -> np.ndarray:
        model = CircuitModel.from_design(f0=f0, f_geo=self.f_geo, **self._parameters(f0))
        rate = kappa_i_model if self.quantity == "kappa_i" else kappa_ex_model
        return np.array([rate(junction_state(f, model), model) for f in self.frequencies])


def fit_dissipation_band(
    points: Sequence[Tuple[float, float]],
    f0_range: Tuple[float, float],
    grid: int = 10,
    f_geo: float = DEFAULT_F_GEO,
    sigma: Optional[Sequence[float]] = None,
) -> DissipationFit:
    """
    Fit at the band center and attach the spread across the band as systematic error.

    Args:
        points: Pairs of (f_r in Hz, kappa_i in s^-1)
        f0_range: (low, high) bare frequencies in Hz
        grid: Number of bare frequencies sampled
        f_geo: Designed geometric frequency in Hz
        sigma: Optional one-sigma per kappa_i

    Returns:
        DissipationFit at the band center with alpha_l_systematic and r_j_systematic set

    Raises:
        UnidentifiableError: If no bare frequency in the band admits a fit
    """
    low, high = f0_range
    f0_grid = np.unique(np.linspace(low, high, max(grid, 1)))
    fits = []
    for f0 in f0_grid:
        try:
            fits.append(fit_dissipation(points, float(f0), f_geo, sigma))
        except DomainError as e:
            logger.warning(f"Skipping f0={f0:.4e} Hz: {e.message}")
    if not fits:
        raise UnidentifiableError("no bare frequency in the band admits a dissipation fit")

    central = fits[len(fits) // 2]
    alphas = np.array([fit.alpha_l for fit in fits])
    resistances = np.array([fit.r_j for fit in fits])
    finite = resistances[np.isfinite(resistances)]
    r_spread = 0.5 * float(finite.max() - finite.min()) if finite.size == resistances.size else math.inf
    return central.model_copy(
        update={
            "alpha_l_systematic": 0.5 * float(alphas.max() - alphas.min()),
            "r_j_systematic": r_spread,
        }
    )
