import numpy as np
import pytest

from jofet_amp.analyzers.kerr import photon_number
from jofet_amp.analyzers.resonance import fit_one_port, reflection_model
from jofet_amp.core.errors import DomainError
from jofet_amp.core.models import GainPair, KerrCavity, PumpDrive
from jofet_amp.simulation.cavity import (
    critical_power,
    cubic_discriminant,
    gain_curve,
    gain_map,
    gain_pair,
    is_stable,
    steady_state,
    synth_reflection,
)
from jofet_amp.utils.physics import TWO_PI

from conftest import F_R, KAPPA_EX, KAPPA_I


def test_linear_cavity_matches_photon_number():
    cavity = KerrCavity(f_r=F_R, kappa_i=KAPPA_I, kappa_ex=KAPPA_EX)
    for offset in (-2e6, 0.0, 1e6):
        drive = PumpDrive(f_pump=F_R + offset, p_pump=1e-15)
        state = steady_state(cavity, drive)
        expected = photon_number(1e-15, F_R + offset, KAPPA_EX, KAPPA_I, TWO_PI * (F_R - F_R - offset))
        assert state.n == pytest.approx(expected, rel=1e-12)
        assert abs(state.alpha) ** 2 == pytest.approx(state.n, rel=1e-12)
        assert state.branch_count == 1


def test_undriven_cavity_is_empty(kerr_cavity):
    state = steady_state(kerr_cavity, PumpDrive(f_pump=F_R, p_pump=0.0))
    assert state.n == 0.0


def test_cusp_sits_below_resonance_for_softening_kerr(kerr_cavity):
    cusp = critical_power(kerr_cavity)
    assert cusp.detuning == pytest.approx(np.sqrt(3.0) * kerr_cavity.kappa / 2.0)
    assert cusp.f_pump < kerr_cavity.f_r
    assert steady_state(kerr_cavity, PumpDrive(f_pump=cusp.f_pump, p_pump=0.99 * cusp.power)).branch_count == 1


def test_lower_branch_ends_at_critical_power(kerr_cavity):
    f_pump = kerr_cavity.f_r - 1.5 * kerr_cavity.kappa / TWO_PI
    edge = critical_power(kerr_cavity, f_pump)
    weak = PumpDrive(f_pump=f_pump, p_pump=0.5 * edge.power)
    below = PumpDrive(f_pump=f_pump, p_pump=0.99 * edge.power)
    above = PumpDrive(f_pump=f_pump, p_pump=1.01 * edge.power)
    assert steady_state(kerr_cavity, weak).branch_count == 1
    assert steady_state(kerr_cavity, above).branch_count == 1
    assert cubic_discriminant(kerr_cavity, below) > 0
    low = steady_state(kerr_cavity, below, "low")
    high = steady_state(kerr_cavity, below, "high")
    assert low.branch_count == 3
    assert high.n > low.n
    assert is_stable(kerr_cavity, low)
    assert is_stable(kerr_cavity, high)
    assert steady_state(kerr_cavity, above).n > high.n * 0.9


def test_critical_power_rejects_linear_cavity_and_wrong_side(kerr_cavity):
    with pytest.raises(DomainError):
        critical_power(kerr_cavity.model_copy(update={"K": 0.0}))
    with pytest.raises(DomainError):
        critical_power(kerr_cavity, kerr_cavity.f_r + 5e6)


def test_sum_rule_holds_across_grid(kerr_cavity):
    cusp = critical_power(kerr_cavity)
    ratio = kerr_cavity.kappa_i / kerr_cavity.kappa_ex
    deltas = np.linspace(-2.0, 2.0, 50) * kerr_cavity.kappa
    worst = 0.0
    for fraction in np.linspace(0.02, 0.98, 50):
        drive = PumpDrive(f_pump=cusp.f_pump, p_pump=fraction * cusp.power)
        g_s, g_i = gain_curve(kerr_cavity, drive, deltas)
        for s, i in zip(g_s, g_i):
            worst = max(worst, GainPair(g_s=s, g_i=i).sum_rule_residual(ratio))
    assert worst < 1e-9


def test_gain_exceeds_20_db_near_cusp(kerr_cavity):
    cusp = critical_power(kerr_cavity)
    pair = gain_pair(kerr_cavity, PumpDrive(f_pump=cusp.f_pump, p_pump=0.999 * cusp.power), 0.0)
    assert 10 * np.log10(pair.power_gain) > 20.0


def test_unpumped_gain_is_passive_reflection(kerr_cavity):
    f_pump = F_R - 1e6
    deltas = TWO_PI * np.linspace(-5e6, 5e6, 41)
    g_s, g_i = gain_curve(kerr_cavity, PumpDrive(f_pump=f_pump, p_pump=0.0), deltas)
    detuning = TWO_PI * (F_R - f_pump)
    expected = reflection_model(deltas - detuning, KAPPA_I, KAPPA_EX)
    np.testing.assert_allclose(np.abs(g_s), np.abs(expected), rtol=1e-12)
    np.testing.assert_allclose(g_i, 0.0, atol=1e-15)


def test_linear_synthetic_reflection_round_trips(make_trace):
    expected = make_trace()
    cavity = KerrCavity(f_r=F_R, kappa_i=KAPPA_I, kappa_ex=KAPPA_EX)
    trace = synth_reflection(cavity, 1e-18, expected.frequencies)
    np.testing.assert_allclose(trace.s11, expected.s11, atol=1e-12)
    assert trace.probe_power_dbm == pytest.approx(-150.0)
    assert fit_one_port(trace).f_r == pytest.approx(F_R, rel=1e-6)


def test_synthetic_reflection_noise_is_seeded(kerr_cavity, make_trace):
    f = make_trace().frequencies
    first = synth_reflection(kerr_cavity, 1e-18, f, noise_sigma=0.01, seed=4)
    second = synth_reflection(kerr_cavity, 1e-18, f, noise_sigma=0.01, seed=4)
    np.testing.assert_array_equal(first.s11, second.s11)


def test_gain_map_grid(kerr_cavity):
    cusp = critical_power(kerr_cavity)
    powers = np.linspace(0.5, 0.99, 5) * cusp.power
    pumps = kerr_cavity.f_r - np.linspace(0.0, 2.0, 6) * kerr_cavity.kappa / TWO_PI
    result = gain_map(kerr_cavity, powers, pumps, TWO_PI * 1e5, max_workers=2)
    assert result.gain_db.shape == (5, 6)
    assert np.isfinite(result.max_gain_db)
    assert result.max_gain_db > 0.0
