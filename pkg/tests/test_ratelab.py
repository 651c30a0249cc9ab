import json

import numpy as np
import pytest

from shearlab.errors import BadParameter, NoCrossing, NonPositiveOrdinate, TooFewPoints, UnderResolved, ZeroField
from shearlab.flowgen import Grid1D, analytic_flow, flow_from_spec
from shearlab.spectral import ComplexField, DecayCurve
from shearlab.ratelab import (
    SweepTable,
    config_hash,
    dissipation_experiment,
    dissipation_time,
    fit_power_law,
    interpolation_check,
    mixing_experiment,
    probe_ensemble,
    wei_bound_experiment,
)


def test_fit_pure_power_laws():
    t = np.logspace(0, 3, 20)
    fit = fit_power_law(DecayCurve(t, 1 / t, "x"))
    assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    fit = fit_power_law(DecayCurve(t, 3 * t**-0.5, "x"))
    assert fit.exponent == pytest.approx(-0.5, abs=1e-10)
    assert fit.intercept == pytest.approx(np.log(3), abs=1e-10)
    assert fit.window == (1.0, 1000.0) and fit.n_points == 20


def test_fit_oscillating_power_law():
    t = np.logspace(1, 3, 41)
    fit = fit_power_law(DecayCurve(t, (1 + 0.2 * np.sin(np.log(t))) / t, "x"))
    assert -1.1 <= fit.exponent <= -0.9


def test_fit_errors():
    t = np.logspace(0, 1, 10)
    with pytest.raises(TooFewPoints):
        fit_power_law(DecayCurve(t, 1 / t, "x"), window=(1.0, 1.5))
    with pytest.raises(NonPositiveOrdinate):
        fit_power_law(DecayCurve(t, np.where(t > 5, 0.0, 1.0), "x"))


def test_dissipation_time_exponential():
    nu = 0.01
    t = np.linspace(0, 300, 31)
    curve = DecayCurve(t, np.exp(-nu * t), "x")
    assert dissipation_time(curve) == pytest.approx(1 / nu, rel=1e-12)
    assert dissipation_time(curve, q=1.0) == 0.0
    with pytest.raises(NoCrossing) as exc:
        dissipation_time(curve.restrict(0, 50))
    assert exc.value.details["lower_bound"] == 50.0
    with pytest.raises(BadParameter):
        dissipation_time(curve, q=0.0)


def test_heat_dissipation_time_within_record_interval():
    from shearlab.spectral import viscous_evolve

    f = analytic_flow("constant", Grid1D.torus(64), c=0.0)
    nu = 0.02
    curve, _ = viscous_evolve(f, ComplexField.mode(f.grid, 1), 1, nu, 80.0, record_times=np.linspace(0, 80, 41))
    assert abs(dissipation_time(curve) - 1 / nu) <= 2.0


def test_mixing_constant_flow_is_flat():
    f = analytic_flow("constant", Grid1D.torus(2**10), c=1.0)
    res = mixing_experiment(f, None, times=np.logspace(1, 3, 20))
    assert abs(res.fit.exponent) <= 1e-6
    assert res.predicted is None


def test_mixing_refuses_or_truncates():
    f = flow_from_spec({"kind": "fbm", "hurst": 0.5, "seed": 0, "n": 2**10})
    with pytest.raises(UnderResolved):
        mixing_experiment(f, 0.5)
    with pytest.raises(TooFewPoints):
        mixing_experiment(f, 0.5, on_underresolved="truncate")


def test_mixing_fbm_h075_median():
    exps = []
    for seed in range(8):
        f = flow_from_spec({"kind": "fbm", "hurst": 0.75, "seed": seed, "n": 2**18})
        res = mixing_experiment(f, 0.75, on_underresolved="truncate")
        assert res.predicted == pytest.approx(-2 / 3)
        exps.append(res.fit.exponent)
    assert -0.80 <= np.median(exps) <= -0.53


def test_dissipation_zero_flow_baseline():
    f = analytic_flow("constant", Grid1D.torus(64), c=0.0)
    table, fit, predicted = dissipation_experiment(f, None, nu_list=np.logspace(-2, -5, 7))
    assert fit.exponent == pytest.approx(-1.0, abs=1e-3)
    assert predicted == -1.0
    np.testing.assert_allclose(table.column("tau"), 1 / table.column("nu"), rtol=1e-3)


def test_dissipation_fbm_median_and_heuristic():
    slopes = []
    for seed in range(4):
        f = flow_from_spec({"kind": "fbm", "hurst": 0.5, "seed": seed, "n": 2**14})
        table, fit, predicted = dissipation_experiment(f, 0.5)
        tau = table.column("tau")
        # sorted by increasing nu, so tau must not increase
        assert np.all(np.diff(tau) <= 0)
        slopes.append(fit.exponent)
    med = np.median(slopes)
    assert -0.27 <= med <= -0.13
    # between pure diffusion and the enhanced rate, with slack 0.1
    assert -1.0 <= med <= -0.5 / 2.5 + 0.1


def test_sweep_table_serialisation():
    rows = [{"nu": 1e-2, "tau": 10.0}, {"nu": 1e-3, "tau": 30.0}]
    t = SweepTable("nu", rows, config={"seed": 4})
    assert t.column("nu").tolist() == [1e-3, 1e-2]
    assert t.provenance == config_hash({"seed": 4})
    lines = t.to_csv().split("\r\n")
    assert lines[0] == "nu,tau,config_hash"
    assert json.loads(json.dumps(t.to_dict()))["config"] == {"seed": 4}


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_wei_bound_constant_flow_trivial():
    f = analytic_flow("constant", Grid1D.torus(256), c=1.0)
    table = wei_bound_experiment(f, 1e-2, [0.0, 10.0, 100.0], [0.2])
    assert all(r["ok"] for r in table.rows)
    np.testing.assert_allclose(table.column("bound"), np.exp(np.pi / 2), rtol=1e-14)
    assert table.rows[0]["measured"] == pytest.approx(1.0, rel=1e-14)


def test_wei_bound_sine_grid():
    f = analytic_flow("sine", Grid1D.torus(256))
    table = wei_bound_experiment(f, 1e-2, np.logspace(0, np.log10(200), 10), [0.1, 0.2, 0.4])
    assert len(table.rows) == 30
    assert all(r["ok"] for r in table.rows)


def test_probe_ensemble_mean_free():
    probes = probe_ensemble(Grid1D.torus(64), count=4, seed=1)
    assert len(probes) == 5
    for p in probes[1:]:
        assert abs(p.coeffs[32]) < 1e-15


def test_interpolation_single_mode_and_constant():
    g = Grid1D.torus(64)
    s1, s2, eps = 0.5, 0.5, 0.01
    for eta in (1, 3, 10):
        r = interpolation_check(ComplexField.mode(g, eta), s1, s2, eps)
        assert r == pytest.approx((1 + eta**2) ** (-s1 * eps / (2 * (s1 + s2))), rel=1e-12)
    assert interpolation_check(ComplexField.mode(g, 0), s1, s2) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ZeroField):
        interpolation_check(ComplexField(g, np.zeros(64)), s1, s2)


def test_interpolation_ensemble_stable():
    g = Grid1D.torus(128)
    rng = np.random.default_rng(9)
    ratios = [interpolation_check(ComplexField.random_trig(g, rng), 0.5, 0.5) for _ in range(128)]
    assert max(ratios[:64]) <= 1
    assert max(ratios) == pytest.approx(max(ratios[:64]), rel=0.05)
