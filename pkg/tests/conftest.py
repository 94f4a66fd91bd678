"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from jofet_amp.analyzers.resonance import reflection_model
from jofet_amp.core.config import ChainConfig
from jofet_amp.core.models import CircuitModel, ComplexReflectionTrace, KerrCavity, NoiseChain, SpectrumTrace
from jofet_amp.utils.physics import TWO_PI

F_R = 5.9e9
KAPPA_I = TWO_PI * 0.5e6
KAPPA_EX = TWO_PI * 2.5e6


@pytest.fixture
def make_trace():
    """Factory for model reflection traces with optional complex Gaussian noise."""

    def factory(f_r=F_R, kappa_i=KAPPA_I, kappa_ex=KAPPA_EX, points=401, span=10.0, noise=0.0, seed=None):
        half = 0.5 * span * (kappa_i + kappa_ex) / TWO_PI
        f = np.linspace(f_r - half, f_r + half, points)
        s11 = reflection_model(TWO_PI * (f - f_r), kappa_i, kappa_ex)
        if noise > 0:
            rng = np.random.default_rng(seed)
            s11 = s11 + noise * (rng.standard_normal(points) + 1j * rng.standard_normal(points))
        return ComplexReflectionTrace(frequencies=f, s11=s11)

    return factory


@pytest.fixture
def make_spectrum():
    """Factory for spectra built from a power array in mW per bin."""

    def factory(frequencies, power_mw, rbw=None, **metadata):
        f = np.asarray(frequencies, dtype=float)
        rbw = float(f[1] - f[0]) if rbw is None else rbw
        return SpectrumTrace(frequencies=f, psd_dbm=10.0 * np.log10(power_mw), rbw=rbw, **metadata)

    return factory


@pytest.fixture
def design_model():
    """Design geometry: f0 = f_geo = 6 GHz, 50 Ohm."""
    return CircuitModel(f_geo=6.0e9, f0=6.0e9, z0=50.0)


@pytest.fixture
def kerr_cavity():
    """Kerr cavity with kappa/2pi = 3 MHz and K = -2pi x 1 kHz per photon."""
    return KerrCavity(f_r=F_R, kappa_i=KAPPA_I, kappa_ex=KAPPA_EX, K=-TWO_PI * 1.0e3)


@pytest.fixture
def noise_chain():
    return NoiseChain(eta_s=0.8, eta_c_off=0.87, t_hemt_mc=1.61, frequency=F_R)


@pytest.fixture
def chain_config():
    return ChainConfig(eta_s=0.8, eta_c_off=0.87, t_hemt_mc_k=1.61)
