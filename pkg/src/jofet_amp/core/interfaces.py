"""Interfaces for model predictors evaluated across the bare-frequency band."""

from typing import Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class BandPredictor(Protocol):
    """Protocol for a model quantity predicted at an assumed bare frequency f0."""

    @property
    def abscissa(self) -> np.ndarray:
        """Points the prediction is evaluated at (gate voltage or frequency)."""
        ...

    @property
    def unit(self) -> str:
        """Unit of the predicted quantity."""
        ...

    def __call__(self, f0: float) -> np.ndarray:
        """
        Predict the quantity for one bare resonance.

        Args:
            f0: Assumed bare resonant frequency in Hz

        Returns:
            One value per abscissa point

        Raises:
            JofetError: If refitting free parameters fails at this f0
        """
        ...
