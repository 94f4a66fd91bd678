"""Calibration workflow from pump-on/pump-off spectra to input-referred noise."""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from jofet_amp.analyzers.chain import (
    ReferredNoise,
    delta_snr,
    eta_off,
    eta_on,
    gain_from_pilot,
    pilot_power,
    refer_to_input,
)
from jofet_amp.analyzers.paramp import expected_noise_from_gain_db
from jofet_amp.core.config import ChainConfig
from jofet_amp.core.errors import LowContrastError, SchemaError
from jofet_amp.core.models import NoiseChain, SpectrumTrace
from jofet_amp.utils.physics import K_B, linear_to_db

logger = logging.getLogger(__name__)

FLOOR_WINDOW_BINS = 50


class CalibrationState(BaseModel):
    """State passed between calibration stages."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spectrum_on: SpectrumTrace
    spectrum_off: SpectrumTrace
    pilot_f: float
    kappa_ratio: Optional[float] = None
    current_stage: str = "init"
    pilot_on_w: float = 0.0
    pilot_off_w: float = 0.0
    floor_on_k: float = 0.0
    floor_off_k: float = 0.0
    chain: Optional[NoiseChain] = None
    warnings: List[str] = Field(default_factory=list)


class CalibrationReport(BaseModel):
    """Every intermediate of one calibration run."""

    floor_on_dbm: float = Field(description="Pump-on floor near the pilot, dBm per bin")
    floor_off_dbm: float = Field(description="Pump-off floor near the pilot, dBm per bin")
    pilot_on_w: float = Field(description="Floor-subtracted pump-on pilot power in W")
    pilot_off_w: float = Field(description="Floor-subtracted pump-off pilot power in W")
    gain: float = Field(description="Gain at the pilot (linear)")
    gain_db: float
    eta_off: float
    eta_on: float
    referred_off: ReferredNoise
    referred_on: ReferredNoise
    delta_snr_db: Optional[float] = Field(default=None, description="SNR improvement at the pilot")
    expected_noise_k: Optional[float] = Field(default=None, description="Model total input noise in K")
    warnings: List[str] = Field(default_factory=list)


class CalibrationPipeline:
    """Runs the calibration stages in order over a pair of spectra."""

    def __init__(self, config: ChainConfig):
        missing = [key for key in ("eta_s", "eta_c_off", "t_hemt_mc_k") if getattr(config, key) is None]
        if missing:
            raise SchemaError(f"calibration needs {', '.join(missing)}", name=missing[0])
        self.config = config
        self.stages: List[Tuple[str, Callable[[CalibrationState], CalibrationState]]] = [
            ("measure_pilot", self._measure_pilot),
            ("measure_floor", self._measure_floor),
            ("extract_gain", self._extract_gain),
        ]

    def run(
        self,
        spectrum_on: SpectrumTrace,
        spectrum_off: SpectrumTrace,
        pilot_f: float,
        kappa_ratio: Optional[float] = None,
    ) -> CalibrationReport:
        """
        Calibrate the chain from the pilot and refer both floors to the device input.

        Args:
            spectrum_on: Pump-on spectrum at the plate
            spectrum_off: Pump-off spectrum at the plate
            pilot_f: Pilot frequency in Hz
            kappa_ratio: kappa_i/kappa_ex; enables the model noise estimate

        Returns:
            CalibrationReport
        """
        logger.info(f"Starting calibration at pilot {pilot_f:.6e} Hz")
        state = CalibrationState(
            spectrum_on=spectrum_on, spectrum_off=spectrum_off, pilot_f=pilot_f, kappa_ratio=kappa_ratio
        )
        for name, stage in self.stages:
            state.current_stage = name
            logger.debug(f"Calibration stage {name}")
            state = stage(state)
        return self._report(state)

    def _measure_pilot(self, state: CalibrationState) -> CalibrationState:
        state.pilot_on_w = pilot_power(state.spectrum_on, state.pilot_f)
        state.pilot_off_w = pilot_power(state.spectrum_off, state.pilot_f)
        for label, power in (("pump-on", state.pilot_on_w), ("pump-off", state.pilot_off_w)):
            if power <= 0:
                raise LowContrastError(f"pilot is not visible in the {label} spectrum")
        return state

    def _measure_floor(self, state: CalibrationState) -> CalibrationState:
        state.floor_on_k = self._floor_k(state.spectrum_on, state.pilot_f)
        state.floor_off_k = self._floor_k(state.spectrum_off, state.pilot_f)
        return state

    def _extract_gain(self, state: CalibrationState) -> CalibrationState:
        gain = gain_from_pilot(state.pilot_on_w, state.pilot_off_w, self.config.eta_c_off)
        state.chain = NoiseChain(
            eta_s=self.config.eta_s,
            eta_c_off=self.config.eta_c_off,
            gain_g=gain,
            t_hemt_mc=self.config.t_hemt_mc_k,
            frequency=state.pilot_f,
        )
        logger.info(f"Gain at the pilot: {linear_to_db(gain):.2f} dB")
        return state

    @staticmethod
    def _floor_k(spectrum: SpectrumTrace, pilot_f: float) -> float:
        i = spectrum.bin_index(pilot_f)
        lo = max(i - FLOOR_WINDOW_BINS, 0)
        window = np.delete(spectrum.psd_mw[lo:i + FLOOR_WINDOW_BINS + 1], i - lo)
        return float(np.median(window)) * 1e-3 / (K_B * spectrum.rbw)

    def _report(self, state: CalibrationState) -> CalibrationReport:
        chain = state.chain
        f = state.pilot_f
        snr_gain = None
        try:
            snr_gain = delta_snr(state.spectrum_on, state.spectrum_off, f)
        except LowContrastError as e:
            logger.warning(f"SNR improvement unavailable: {e.message}")
            state.warnings.append(e.message)

        expected = None
        if state.kappa_ratio is not None:
            expected = float(
                expected_noise_from_gain_db(
                    linear_to_db(chain.gain_g), state.kappa_ratio, chain.eta_s, chain.t_hemt_mc, f
                )
            )

        rbw_on, rbw_off = state.spectrum_on.rbw, state.spectrum_off.rbw
        return CalibrationReport(
            floor_on_dbm=float(linear_to_db(state.floor_on_k * K_B * rbw_on / 1e-3)),
            floor_off_dbm=float(linear_to_db(state.floor_off_k * K_B * rbw_off / 1e-3)),
            pilot_on_w=state.pilot_on_w,
            pilot_off_w=state.pilot_off_w,
            gain=chain.gain_g,
            gain_db=float(linear_to_db(chain.gain_g)),
            eta_off=eta_off(chain),
            eta_on=eta_on(chain),
            referred_off=refer_to_input(state.floor_off_k, eta_off(chain), chain.t_hemt_mc, f),
            referred_on=refer_to_input(state.floor_on_k, eta_on(chain), chain.t_hemt_mc, f),
            delta_snr_db=snr_gain,
            expected_noise_k=expected,
            warnings=state.warnings,
        )


def calibration_report(
    spectrum_on: SpectrumTrace,
    spectrum_off: SpectrumTrace,
    pilot_f: float,
    config: ChainConfig,
    kappa_ratio: Optional[float] = None,
) -> CalibrationReport:
    """Run the full calibration with the given chain constants."""
    return CalibrationPipeline(config).run(spectrum_on, spectrum_off, pilot_f, kappa_ratio)
