import numpy as np
import pytest

from jofet_amp.analyzers.chain import delta_snr, gain_from_pilot, pilot_power
from jofet_amp.core.errors import DomainError
from jofet_amp.core.models import PumpDrive
from jofet_amp.simulation.cavity import critical_power, gain_curve
from jofet_amp.simulation.spectrum import floor_temperature, predicted_delta_snr, synth_spectrum
from jofet_amp.utils.physics import H, K_B, TWO_PI, dbm_to_watts

RBW = 1.0e3
PILOT_OFFSET = 1.0e5
PILOT_POWER = float(dbm_to_watts(-140.0))


@pytest.fixture
def drive(kerr_cavity):
    cusp = critical_power(kerr_cavity)
    return PumpDrive(f_pump=cusp.f_pump, p_pump=0.99 * cusp.power)


def _spectra(kerr_cavity, drive, noise_chain, n_average=None, seed=None):
    return synth_spectrum(
        kerr_cavity,
        drive,
        noise_chain,
        drive.f_pump + PILOT_OFFSET,
        PILOT_POWER,
        RBW,
        points=401,
        n_average=n_average,
        seed=seed,
    )


def test_pump_off_floor_is_vacuum_plus_hemt(kerr_cavity, noise_chain):
    floor = floor_temperature(kerr_cavity, None, noise_chain, [6e9])
    assert floor[0] == pytest.approx(0.5 * H * 6e9 / K_B + 1.61)


def test_idler_appears_mirrored_about_pump(kerr_cavity, drive, noise_chain):
    on, off = _spectra(kerr_cavity, drive, noise_chain)
    idler = on.bin_index(drive.f_pump - PILOT_OFFSET)
    assert on.psd_dbm[idler] > on.psd_dbm[idler - 1] + 3.0
    assert on.psd_dbm[idler] > on.psd_dbm[idler + 1] + 3.0
    assert off.psd_dbm[idler] == pytest.approx(off.psd_dbm[idler - 1], abs=1e-3)
    assert on.pump_on and not off.pump_on
    assert on.pilot_power_dbm == pytest.approx(-140.0)


def test_pilot_gain_round_trip(kerr_cavity, drive, noise_chain):
    on, off = _spectra(kerr_cavity, drive, noise_chain)
    pilot_f = drive.f_pump + PILOT_OFFSET
    measured = gain_from_pilot(pilot_power(on, pilot_f), pilot_power(off, pilot_f), noise_chain.eta_c_off)
    g_s, _ = gain_curve(kerr_cavity, drive, [TWO_PI * PILOT_OFFSET])
    assert measured == pytest.approx(abs(g_s[0]) ** 2, rel=0.01)


def test_measured_snr_improvement_matches_prediction(kerr_cavity, drive, noise_chain):
    pilot_f = drive.f_pump + PILOT_OFFSET
    on, off = _spectra(kerr_cavity, drive, noise_chain, n_average=10000, seed=2)
    predicted = predicted_delta_snr(kerr_cavity, drive, noise_chain, pilot_f, PILOT_POWER, RBW)
    assert predicted > 0
    assert delta_snr(on, off, pilot_f) == pytest.approx(predicted, abs=0.5)


def test_spectra_are_seeded(kerr_cavity, drive, noise_chain):
    first, _ = _spectra(kerr_cavity, drive, noise_chain, n_average=100, seed=9)
    second, _ = _spectra(kerr_cavity, drive, noise_chain, n_average=100, seed=9)
    noiseless, _ = _spectra(kerr_cavity, drive, noise_chain, n_average=0, seed=9)
    np.testing.assert_array_equal(first.psd_dbm, second.psd_dbm)
    assert not np.array_equal(first.psd_dbm, noiseless.psd_dbm)


def test_pilot_outside_span_is_rejected(kerr_cavity, drive, noise_chain):
    with pytest.raises(DomainError):
        synth_spectrum(kerr_cavity, drive, noise_chain, drive.f_pump + 1e7, PILOT_POWER, RBW, points=401)
