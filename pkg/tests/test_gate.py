import numpy as np
import pytest
from pydantic import ValidationError

from jofet_amp.analyzers.circuit import fit_coupling, fit_dissipation
from jofet_amp.core.models import CircuitModel
from jofet_amp.simulation.gate import GateMap, synth_gate_sweep

VOLTAGES = np.linspace(-3.0, 0.0, 31)


def _model() -> CircuitModel:
    return CircuitModel.from_design(f0=6.2e9, f_geo=7.2e9, alpha_l=1e-4, r_j=5e3, c_k=2e-15)


def test_gate_map_rejects_rising_inductance():
    with pytest.raises(ValidationError):
        GateMap(voltages=[-1.0, 0.0], inductances=[1e-10, 2e-10])
    with pytest.raises(ValidationError):
        GateMap(voltages=[0.0, -1.0], inductances=[2e-10, 1e-10])


def test_gate_map_holds_end_values():
    gate_map = GateMap(voltages=[-2.0, -1.0, 0.0], inductances=[3e-10, 2e-10, 1e-10])
    assert gate_map(-5.0) == pytest.approx(3e-10)
    assert gate_map(1.0) == pytest.approx(1e-10)
    assert gate_map(-1.0) == pytest.approx(2e-10)


def test_saturating_map_tunes_resonance_across_band():
    sweep = synth_gate_sweep(GateMap.saturating(), _model(), VOLTAGES)
    assert np.all(np.diff(sweep.f_r) > 0)
    assert 3.8e9 < sweep.f_r[0] < 4.2e9
    assert 5.9e9 < sweep.f_r[-1] < 6.2e9
    assert np.all(sweep.kappa_i > 0)
    assert np.all(sweep.kappa_ex > 0)


def test_noiseless_sweep_refits_to_model():
    sweep = synth_gate_sweep(GateMap.saturating(), _model(), VOLTAGES)
    dissipation = fit_dissipation(sweep.dissipation_points(), 6.2e9, 7.2e9)
    coupling = fit_coupling(sweep.coupling_points(), 6.2e9, 7.2e9)
    assert dissipation.alpha_l == pytest.approx(1e-4, rel=1e-3)
    assert dissipation.r_j == pytest.approx(5e3, rel=1e-3)
    assert coupling.c_k == pytest.approx(2e-15, rel=1e-3)


def test_noisy_sweep_is_seeded():
    first = synth_gate_sweep(GateMap.saturating(), _model(), VOLTAGES, relative_noise=0.05, seed=1)
    second = synth_gate_sweep(GateMap.saturating(), _model(), VOLTAGES, relative_noise=0.05, seed=1)
    clean = synth_gate_sweep(GateMap.saturating(), _model(), VOLTAGES)
    np.testing.assert_array_equal(first.kappa_i, second.kappa_i)
    np.testing.assert_array_equal(first.f_r, clean.f_r)
    assert not np.array_equal(first.kappa_i, clean.kappa_i)
