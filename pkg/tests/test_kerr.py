import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jofet_amp.analyzers.circuit import band_evaluate, junction_state, state_from_inductance
from jofet_amp.analyzers.kerr import (
    KerrBandPredictor,
    josephson_inductance_from_critical_current,
    kerr_conventions,
    kerr_design,
    kerr_from_sweep,
    kerr_predict,
    kerr_shift_per_power,
    photon_number,
    photon_number_per_watt,
)
from jofet_amp.core.errors import DomainError, UnidentifiableError
from jofet_amp.core.models import CircuitModel, PowerSweepPoint, ResonatorFit
from jofet_amp.utils.physics import TWO_PI

from conftest import F_R, KAPPA_EX, KAPPA_I

SHIFT_HZ_PER_PHOTON = -1.0e5


def _cavity() -> ResonatorFit:
    return ResonatorFit(f_r=F_R, kappa_i=KAPPA_I, kappa_ex=KAPPA_EX)


def _sweep(photons, noise_hz=0.0, seed=None):
    rng = np.random.default_rng(seed)
    per_watt = photon_number_per_watt(F_R, KAPPA_EX, KAPPA_I)
    points = []
    for n in photons:
        f_true = F_R + SHIFT_HZ_PER_PHOTON * n
        f_seen = f_true + (noise_hz * rng.standard_normal() if noise_hz else 0.0)
        points.append(
            PowerSweepPoint(input_power=n / per_watt, signal_frequency=f_true, resonant_frequency=f_seen)
        )
    return points


def test_photon_number_example():
    n = photon_number(1e-15, 6.0e9, TWO_PI * 2.5e6, TWO_PI * 0.5e6)
    assert n == pytest.approx(44.48, rel=1e-3)


@given(
    power=st.floats(min_value=1e-20, max_value=1e-10),
    scale=st.floats(min_value=0.1, max_value=10.0),
    detuning=st.floats(min_value=-1e8, max_value=1e8),
)
def test_photon_number_scaling(power, scale, detuning):
    n = photon_number(power, 6.0e9, KAPPA_EX, KAPPA_I, detuning)
    assert photon_number(2.0 * power, 6.0e9, KAPPA_EX, KAPPA_I, detuning) == pytest.approx(2.0 * n, rel=1e-12)
    scaled = photon_number(scale * power, 6.0e9, scale * KAPPA_EX, scale * KAPPA_I, scale * detuning)
    assert scaled == pytest.approx(n, rel=1e-9)


def test_photon_number_rejects_bad_inputs():
    with pytest.raises(DomainError):
        photon_number(1e-15, 6.0e9, -1.0, KAPPA_I)
    with pytest.raises(DomainError):
        photon_number(1e-15, 0.0, KAPPA_EX, KAPPA_I)
    with pytest.raises(DomainError):
        photon_number(1e-15, 6.0e9, 0.0, 0.0)


def test_sweep_round_trip():
    estimate = kerr_from_sweep(_sweep(np.linspace(0.0, 5.0, 6)), _cavity())
    assert estimate.shift_per_photon == pytest.approx(TWO_PI * SHIFT_HZ_PER_PHOTON, rel=1e-3)
    assert estimate.K == pytest.approx(2.0 * TWO_PI * SHIFT_HZ_PER_PHOTON, rel=1e-3)
    assert estimate.points_used == 6
    expected_per_power = kerr_shift_per_power(estimate.K, F_R, KAPPA_EX, KAPPA_I)
    assert estimate.K_per_power == pytest.approx(expected_per_power, rel=1e-3)
    assert estimate.mhz_per_fw == pytest.approx(expected_per_power * 1e-21, rel=1e-3)


def test_sweep_order_does_not_matter():
    points = _sweep(np.linspace(0.0, 5.0, 6))
    forward = kerr_from_sweep(points, _cavity())
    backward = kerr_from_sweep(points[::-1], _cavity())
    assert backward.K == pytest.approx(forward.K, rel=1e-12)


def test_points_beyond_linear_window_are_dropped():
    estimate = kerr_from_sweep(_sweep([0.0, 1.0, 2.0, 3.0, 20.0, 40.0]), _cavity())
    assert estimate.points_used == 4
    assert estimate.K == pytest.approx(2.0 * TWO_PI * SHIFT_HZ_PER_PHOTON, rel=1e-3)


def test_noisy_sweep_is_within_three_sigma():
    truth = 2.0 * TWO_PI * SHIFT_HZ_PER_PHOTON
    hits = 0
    for seed in range(100):
        estimate = kerr_from_sweep(_sweep(np.linspace(0.0, 5.0, 20), noise_hz=2.0e3, seed=seed), _cavity())
        hits += abs(estimate.K - truth) <= 3.0 * estimate.uncertainty
    assert hits >= 95


def test_sweep_needs_three_points():
    with pytest.raises(DomainError):
        kerr_from_sweep(_sweep([0.0, 1.0]), _cavity())


def test_sweep_outside_window_is_unidentifiable():
    with pytest.raises(UnidentifiableError):
        kerr_from_sweep(_sweep([0.0, 20.0, 40.0, 60.0]), _cavity())


def test_critical_current_inductance():
    assert josephson_inductance_from_critical_current(10e-6) == pytest.approx(32.9e-12, rel=2e-3)
    with pytest.raises(DomainError):
        josephson_inductance_from_critical_current(0.0)


def test_design_kerr_matches_reported_magnitude(design_model):
    K = kerr_design(10e-6, design_model)
    assert K < 0
    assert 0.7e3 <= abs(K) <= 2.8e3


def test_design_kerr_scales_with_inverse_cube_of_critical_current(design_model):
    ratio = kerr_design(10e-6, design_model) / kerr_design(20e-6, design_model)
    assert ratio == pytest.approx(8.0, rel=0.05)


def test_kerr_magnitude_grows_with_inductance(design_model):
    inductances = np.geomspace(5e-12, 2e-10, 12)
    magnitudes = [abs(kerr_predict(state_from_inductance(l_j, design_model))) for l_j in inductances]
    assert np.all(np.diff(magnitudes) > 0)


def test_kerr_vanishes_at_flux_node(design_model):
    assert kerr_predict(junction_state(design_model.f0, design_model)) == 0.0


def test_band_predictor_brackets_design_curve():
    frequencies = np.linspace(5.0e9, 5.95e9, 6)
    predictor = KerrBandPredictor(frequencies, f_geo=7.2e9)
    envelope = band_evaluate(predictor, (6.0e9, 6.45e9), 4)
    central = predictor(6.2e9)
    assert np.all(envelope.upper <= 0)
    assert np.all(envelope.lower <= central + 1e-9 * np.abs(central))
    assert np.all(central <= envelope.upper + 1e-9 * np.abs(central))


def test_kerr_conventions():
    report = kerr_conventions(-1.4e3)
    assert report["ordinary_Hz"] == pytest.approx(-1.4e3 / (2.0 * math.pi))
    assert report["abs_angular_s^-1"] == 1.4e3
