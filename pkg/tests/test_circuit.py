import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jofet_amp.analyzers.circuit import (
    HALF_PI,
    RateBandPredictor,
    band_evaluate,
    characteristic_impedance,
    coupling_efficiency,
    effective_capacitance,
    fit_coupling,
    fit_dissipation,
    fit_dissipation_band,
    flux_drop,
    josephson_inductance,
    junction_state,
    kappa_ex_model,
    kappa_i_model,
    kl_from_fr,
    solve_kl,
    state_from_inductance,
)
from jofet_amp.core.errors import DomainError, UnidentifiableError
from jofet_amp.core.interfaces import BandPredictor
from jofet_amp.core.models import CircuitModel, JunctionState

F0 = 6.2e9
F_GEO = 7.2e9
SWEEP = np.linspace(4.0e9, 6.0e9, 21)


def _bisection_oracle(r: float) -> float:
    lo, hi = 1e-12, HALF_PI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 2.0 * math.cos(mid) - r * mid * math.sin(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _model(**params) -> CircuitModel:
    return CircuitModel.from_design(f0=F0, f_geo=F_GEO, **params)


def _rates(model: CircuitModel, frequencies=SWEEP):
    states = [junction_state(float(f), model) for f in frequencies]
    return (
        np.array([kappa_i_model(s, model) for s in states]),
        np.array([kappa_ex_model(s, model) for s in states]),
    )


def test_kl_from_fr_examples():
    assert kl_from_fr(6.0e9, 6.0e9) == pytest.approx(HALF_PI)
    assert kl_from_fr(4.0e9, 6.0e9) == pytest.approx(math.pi / 3)
    assert kl_from_fr(6.0e9, 6.45e9) == pytest.approx(1.4613, abs=2e-4)


def test_kl_from_fr_rejects_resonance_above_bare_mode():
    with pytest.raises(DomainError):
        kl_from_fr(6.5e9, 6.0e9)


def test_solve_kl_examples():
    assert solve_kl(0.0) == HALF_PI
    kl = solve_kl(0.0158)
    assert kl == pytest.approx(1.5584, abs=2e-4)
    assert abs(2.0 / math.tan(kl) - 0.0158 * kl) < 1e-12
    assert solve_kl(1000.0) == pytest.approx(math.sqrt(2.0 / 1000.0), rel=0.01)


def test_solve_kl_rejects_negative_ratio():
    with pytest.raises(DomainError):
        solve_kl(-1.0)


def test_solve_kl_matches_bisection_oracle_and_decreases():
    ratios = np.concatenate([[0.0], np.logspace(-3, 3, 25)])
    roots = np.array([solve_kl(float(r)) for r in ratios])
    oracle = np.array([HALF_PI] + [_bisection_oracle(float(r)) for r in ratios[1:]])
    np.testing.assert_allclose(roots, oracle, rtol=0.0, atol=1e-12)
    assert np.all(np.diff(roots) < 0)


@given(r=st.floats(min_value=0.0, max_value=1e3))
def test_solve_kl_round_trips_through_kl_from_fr(r):
    kl = solve_kl(r)
    f_r = F0 * kl / HALF_PI
    assert kl_from_fr(f_r, F0) == pytest.approx(kl, abs=1e-12)


def test_effective_capacitance_examples():
    assert effective_capacitance(HALF_PI, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert effective_capacitance(1e-9, 1.0) == pytest.approx(2.0)
    assert effective_capacitance(math.pi / 3, 1.0) == pytest.approx(1.4135, abs=1e-4)


def test_flux_drop_examples():
    assert flux_drop(HALF_PI) == 0.0
    assert flux_drop(math.pi / 3) == pytest.approx(1.0)
    assert flux_drop(1.5584) == pytest.approx(0.0248, abs=1e-4)


def test_characteristic_impedance_scales_with_pull():
    assert characteristic_impedance(6.0e9, 7.2e9) == pytest.approx(60.0)
    assert _model().z0 == pytest.approx(50.0 * F_GEO / F0)


def test_state_from_inductance_inverts_junction_state():
    model = _model()
    state = junction_state(5.0e9, model)
    assert josephson_inductance(state.kl, model) == pytest.approx(state.l_j)
    again = state_from_inductance(state.l_j, model)
    assert again.f_r == pytest.approx(5.0e9, rel=1e-9)
    assert again.l_eff == pytest.approx(1.0 / ((2 * math.pi * 5.0e9) ** 2 * again.c_eff))


def test_bare_mode_has_only_line_dissipation():
    model = _model(alpha_l=1e-3, r_j=15e3)
    state = junction_state(F0, model)
    assert state.delta_u_bar == 0.0
    assert kappa_i_model(state, model) == pytest.approx(1e-3 / (model.z0 * state.c_eff))


def test_junction_loss_at_reported_shunt():
    model = CircuitModel(f_geo=6e9, f0=6e9, z0=50.0, alpha_l=0.0, r_j=15e3)
    state = JunctionState(
        kl=math.pi / 3, l_j=1e-9, delta_u_bar=1.0, c_eff=1e-12, l_eff=1e-9, r_eff=15e3, f_r=4e9
    )
    assert kappa_i_model(state, model) == pytest.approx(1.0 / (15e3 * 1e-12))


def test_doubling_shunt_halves_junction_term():
    single, double = _model(alpha_l=1e-3, r_j=15e3), _model(alpha_l=1e-3, r_j=30e3)
    state_1, state_2 = junction_state(4.5e9, single), junction_state(4.5e9, double)
    line = 1e-3 / (single.z0 * state_1.c_eff)
    junction_1 = kappa_i_model(state_1, single) - line
    junction_2 = kappa_i_model(state_2, double) - line
    assert junction_2 == pytest.approx(0.5 * junction_1)


def test_coupling_rate_examples():
    state = junction_state(5.0e9, _model())
    assert kappa_ex_model(state, _model()) == 0.0

    model = _model(c_k=1e-15)
    omega = 2 * math.pi * 5.0e9
    approx = omega ** 2 * model.c_k ** 2 * model.z0 / state.c_eff
    assert kappa_ex_model(state, model) == pytest.approx(approx, rel=0.01)

    rates = [kappa_ex_model(state, _model(c_k=c)) for c in np.geomspace(1e-16, 1e-12, 30)]
    assert np.all(np.diff(rates) > 0)


def test_coupling_efficiency_is_a_fraction():
    model = _model(alpha_l=1e-3, r_j=15e3, c_k=5e-15)
    efficiency = coupling_efficiency(junction_state(5.5e9, model), model)
    assert 0.0 < efficiency < 1.0


def test_dissipation_round_trip():
    kappa_i, _ = _rates(_model(alpha_l=1e-3, r_j=15e3))
    fit = fit_dissipation(list(zip(SWEEP, kappa_i)), F0, F_GEO)
    assert fit.alpha_l == pytest.approx(1e-3, rel=1e-3)
    assert fit.r_j == pytest.approx(15e3, rel=1e-3)


def test_noisy_dissipation_is_within_three_sigma():
    kappa_i, _ = _rates(_model(alpha_l=1e-3, r_j=15e3))
    sigma = 0.05 * kappa_i
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = kappa_i * (1.0 + 0.05 * rng.standard_normal(kappa_i.size))
        fit = fit_dissipation(list(zip(SWEEP, noisy)), F0, F_GEO, sigma=sigma)
        hits += abs(fit.alpha_l - 1e-3) <= 3 * fit.alpha_l_sigma and abs(fit.r_j - 15e3) <= 3 * fit.r_j_sigma
    assert hits >= 95


def test_single_point_is_unidentifiable():
    with pytest.raises(UnidentifiableError):
        fit_dissipation([(5.0e9, 1e7)], F0, F_GEO)


def test_point_above_bare_mode_is_rejected():
    with pytest.raises(DomainError):
        fit_dissipation([(4e9, 1e7), (5e9, 1e7), (6.5e9, 1e7)], F0, F_GEO)


def test_coupling_round_trip():
    _, kappa_ex = _rates(_model(c_k=5e-15))
    fit = fit_coupling(list(zip(SWEEP, kappa_ex)), F0, F_GEO)
    assert fit.c_k == pytest.approx(5e-15, rel=1e-3)


def test_noisy_coupling_is_within_three_sigma():
    _, kappa_ex = _rates(_model(c_k=5e-15))
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = kappa_ex * (1.0 + 0.05 * rng.standard_normal(kappa_ex.size))
        fit = fit_coupling(list(zip(SWEEP, noisy)), F0, F_GEO, sigma=0.05 * kappa_ex)
        hits += abs(fit.c_k - 5e-15) <= 3 * fit.c_k_sigma
    assert hits >= 95


def test_coupling_needs_points():
    with pytest.raises(DomainError):
        fit_coupling([], F0, F_GEO)


def test_single_coupling_point_has_unbounded_uncertainty():
    _, kappa_ex = _rates(_model(c_k=5e-15), [5.0e9])
    fit = fit_coupling([(5.0e9, kappa_ex[0])], F0, F_GEO)
    assert fit.c_k == pytest.approx(5e-15, rel=1e-4)
    assert math.isinf(fit.c_k_sigma)


class _Constant:
    abscissa = np.array([1.0, 2.0, 3.0])
    unit = "s^-1"

    def __call__(self, f0: float) -> np.ndarray:
        return np.full(3, 7.0)


def test_constant_predictor_has_constant_envelope():
    assert isinstance(_Constant(), BandPredictor)
    envelope = band_evaluate(_Constant(), (6.0e9, 6.45e9), 5)
    np.testing.assert_array_equal(envelope.lower, 7.0)
    np.testing.assert_array_equal(envelope.upper, 7.0)
    assert envelope.unit == "s^-1"


def test_degenerate_band_collapses_to_single_curve():
    params = {"alpha_l": 1e-3, "r_j": 15e3}
    predictor = RateBandPredictor(SWEEP, refit=False, params=params, f_geo=F_GEO)
    envelope = band_evaluate(predictor, (F0, F0), 4)
    expected, _ = _rates(_model(**params))
    np.testing.assert_allclose(envelope.lower, expected, rtol=1e-12)
    np.testing.assert_allclose(envelope.upper, expected, rtol=1e-12)
    assert envelope.f0_values == [F0]


def test_internal_rate_band_widens_toward_low_frequency():
    frequencies = np.linspace(4.6e9, 5.95e9, 12)
    params = {"alpha_l": 1e-3, "r_j": 15e3}
    envelope = band_evaluate(
        RateBandPredictor(frequencies, refit=False, params=params, f_geo=F_GEO), (6.0e9, 6.45e9), 10
    )
    assert np.all(np.diff(envelope.width) < 0)

    edges = band_evaluate(
        RateBandPredictor([4.0e9, 5.9e9], refit=False, params=params, f_geo=F_GEO), (6.0e9, 6.45e9), 10
    )
    assert edges.width[0] > edges.width[1]


def test_band_records_failures(caplog):
    kappa_i, _ = _rates(_model(alpha_l=1e-3, r_j=15e3))
    predictor = RateBandPredictor(SWEEP, kappa_i, "kappa_i", f_geo=F_GEO)
    envelope = band_evaluate(predictor, (5.5e9, F0), 3)
    assert 5.5e9 in envelope.failures
    assert envelope.f0_values
    assert "Band evaluation failed" in caplog.text


def test_band_rejects_bad_grid():
    with pytest.raises(DomainError):
        band_evaluate(_Constant(), (6.0e9, 6.45e9), 1)


def test_dissipation_band_reports_systematic_spread():
    kappa_i, _ = _rates(_model(alpha_l=1e-3, r_j=15e3))
    fit = fit_dissipation_band(list(zip(SWEEP, kappa_i)), (6.0e9, 6.45e9), grid=5, f_geo=F_GEO)
    assert fit.f0 == pytest.approx(6.225e9)
    assert fit.r_j_systematic > 0
    assert fit.alpha_l_systematic >= 0
