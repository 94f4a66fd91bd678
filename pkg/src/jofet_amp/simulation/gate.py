"""Gate-voltage control of the junction inductance and synthetic gate sweeps."""

import logging
import math
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.interpolate import PchipInterpolator

from jofet_amp.analyzers.circuit import kappa_ex_model, kappa_i_model, state_from_inductance
from jofet_amp.core.errors import DomainError
from jofet_amp.core.models import CircuitModel

logger = logging.getLogger(__name__)


class GateMap(BaseModel):
    """Monotone map from gate voltage to Josephson inductance.

    Inductance falls as the gate opens the channel. Voltages outside the
    tabulated range hold the end values.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    voltages: np.ndarray = Field(description="Gate voltages in V, strictly increasing")
    inductances: np.ndarray = Field(description="Josephson inductance in H at each voltage")

    @field_validator("voltages", "inductances", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return np.array(value, dtype=float).reshape(-1)

    @model_validator(mode="after")
    def _validate_shape(self) -> "GateMap":
        if self.voltages.size < 2 or self.voltages.size != self.inductances.size:
            raise ValueError("gate map needs at least 2 matching (V, L_J) points")
        if not np.all(np.diff(self.voltages) > 0):
            raise ValueError("voltages must be strictly increasing")
        if np.any(self.inductances <= 0):
            raise ValueError("inductances must be positive")
        if not np.all(np.diff(self.inductances) <= 0):
            raise ValueError("inductance must not increase with gate voltage")
        return self

    def __call__(self, voltage):
        """Josephson inductance in H at the given voltage(s)."""
        clipped = np.clip(np.asarray(voltage, dtype=float), self.voltages[0], self.voltages[-1])
        result = PchipInterpolator(self.voltages, self.inductances)(clipped)
        return result if np.ndim(result) else float(result)

    @classmethod
    def saturating(
        cls,
        v_pinch: float = -3.0,
        v_open: float = 0.0,
        l_pinch: float = 3.0e-9,
        l_open: float = 0.12e-9,
        scale: float = 0.6,
        points: int = 61,
    ) -> "GateMap":
        """
        Exponential approach from the pinch-off inductance to the open-channel plateau.

        The defaults move a 6.2 GHz bare mode between about 4 and 6 GHz.
        """
        if v_open <= v_pinch or l_pinch <= l_open or scale <= 0:
            raise DomainError("need v_open > v_pinch, l_pinch > l_open and a positive scale")
        v = np.linspace(v_pinch, v_open, points)
        l_j = l_open + (l_pinch - l_open) * np.exp(-(v - v_pinch) / scale)
        return cls(voltages=v, inductances=l_j)


class GateSweep(BaseModel):
    """Resonance and rates across a gate sweep, one row per voltage."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    voltages: np.ndarray
    f_r: np.ndarray = Field(description="Resonant frequency in Hz")
    kappa_i: np.ndarray = Field(description="Internal rate, s^-1")
    kappa_ex: np.ndarray = Field(description="External rate, s^-1")
    l_j: np.ndarray = Field(description="Josephson inductance in H")

    def dissipation_points(self):
        return list(zip(self.f_r, self.kappa_i))

    def coupling_points(self):
        return list(zip(self.f_r, self.kappa_ex))


def synth_gate_sweep(
    gate_map: GateMap,
    model: CircuitModel,
    voltages: Sequence[float],
    relative_noise: float = 0.0,
    seed: Optional[int] = None,
) -> GateSweep:
    """
    Model resonance and rates at each gate voltage.

    Args:
        gate_map: Voltage to inductance map
        model: Circuit parameters
        voltages: Gate voltages in V
        relative_noise: Multiplicative Gaussian noise on the rates
        seed: Random seed

    Returns:
        GateSweep
    """
    voltages = np.asarray(voltages, dtype=float)
    l_j = np.atleast_1d(gate_map(voltages))
    states = [state_from_inductance(float(l), model) for l in l_j]
    kappa_i = np.array([kappa_i_model(s, model) for s in states])
    kappa_ex = np.array([kappa_ex_model(s, model) for s in states])
    if relative_noise > 0:
        rng = np.random.default_rng(seed)
        kappa_i = kappa_i * (1.0 + relative_noise * rng.standard_normal(kappa_i.size))
        kappa_ex = kappa_ex * (1.0 + relative_noise * rng.standard_normal(kappa_ex.size))
    f_r = np.array([s.f_r for s in states])
    logger.debug(f"Gate sweep spans {f_r.min():.4e}-{f_r.max():.4e} Hz over {voltages.size} points")
    if not math.isfinite(float(kappa_i.sum())):
        raise DomainError("modeled rates are not finite")
    return GateSweep(voltages=voltages, f_r=f_r, kappa_i=kappa_i, kappa_ex=kappa_ex, l_j=l_j)
