import numpy as np
import pytest

from shearlab.errors import BadParameter, StepTooLarge, UnderResolved, ZeroModePresent
from shearlab.flowgen import Grid1D, analytic_flow, flow_from_spec
from shearlab.functionals import besov_seminorm, default_xi_grid, rho_irregularity_norm
from shearlab.spectral import (
    ComplexField,
    DecayCurve,
    evolve_oscillator,
    inviscid_apply,
    rescale_check,
    shear2d_evolve,
    sobolev_norm,
    viscous_evolve,
)

T64 = Grid1D.torus(64)


def sine(n=2**10):
    return analytic_flow("sine", Grid1D.torus(n))


def test_single_mode_norms():
    for s in (-1.0, -0.5, 0.0, 0.5, 2.0):
        assert sobolev_norm(ComplexField.mode(T64, 1), s) == pytest.approx(2 ** (s / 2), rel=1e-14)
        assert sobolev_norm(ComplexField.mode(T64, 0), s) == pytest.approx(1.0, rel=1e-14)
    assert sobolev_norm(ComplexField.mode(T64, 1), -0.5) == pytest.approx(0.84090, abs=1e-5)


def test_parseval_against_quadrature():
    rng = np.random.default_rng(0)
    g = ComplexField.random_trig(Grid1D.torus(256), rng)
    direct = np.sqrt(np.mean(np.abs(g.values) ** 2))
    assert sobolev_norm(g, 0.0) == pytest.approx(direct, rel=1e-10)


def test_coefficient_round_trip():
    rng = np.random.default_rng(1)
    g = ComplexField.random_trig(T64, rng, max_freq=20)
    back = ComplexField.from_coeffs(T64, np.array(g.coeffs))
    np.testing.assert_allclose(back.values, g.values, atol=1e-13)
    assert abs(ComplexField.mode(T64, 3).coeffs[32 + 3] - 1) < 1e-14


def test_field_evaluate_off_grid():
    g = ComplexField.mode(T64, 2)
    y = np.array([0.1, 3.0, 10.0])
    np.testing.assert_allclose(g.evaluate(y), np.exp(2j * y), atol=1e-13)


def test_inviscid_identity_and_constant_phase():
    f = sine()
    g0 = ComplexField.mode(f.grid, 1)
    np.testing.assert_array_equal(inviscid_apply(f, g0, 1, 0.0).values, g0.values)
    c = analytic_flow("constant", f.grid, c=0.7)
    rng = np.random.default_rng(2)
    g = ComplexField.random_trig(f.grid, rng)
    out = inviscid_apply(c, g, 3, 12.0)
    for s in (-1.0, -0.5, 0.0, 1.0):
        assert sobolev_norm(out, s) == pytest.approx(sobolev_norm(g, s), rel=1e-12)


def test_inviscid_refuses_unresolved_time():
    f = sine(64)
    with pytest.raises(UnderResolved) as exc:
        inviscid_apply(f, ComplexField.mode(f.grid, 1), 1, 100.0)
    assert exc.value.details["required_n"] >= 128


def test_inviscid_lower_floor_fbm():
    # floor from the interpolation chain with its hidden constant set to one
    alpha, t = 0.45, 100.0
    for seed in range(2):
        f = flow_from_spec({"kind": "fbm", "hurst": 0.5, "seed": seed, "n": 2**18})
        g = ComplexField.mode(f.grid, 1)
        b = besov_seminorm(f, alpha)
        floor = sobolev_norm(g, 0) ** (1 + 1 / alpha) * sobolev_norm(g, 1) ** (-1 / alpha) * (1 + b) ** (-1 / (2 * alpha)) * t ** (-1 / (2 * alpha))
        assert sobolev_norm(inviscid_apply(f, g, 1, t), -0.5) > floor


def test_mixing_ratio_bounded_across_xi():
    f = flow_from_spec({"kind": "fbm", "hurst": 0.5, "seed": 0, "n": 2**14})
    g = ComplexField.mode(f.grid, 1)
    xi = default_xi_grid(1e3)
    xi = xi[xi <= 0.99 * np.pi / f.max_increment()]
    phi = rho_irregularity_norm(f, 0.55, 0.9, xi, depth=8).value
    ratio = np.array([sobolev_norm(inviscid_apply(f, g, 1, x), -0.5) * x**0.9 for x in xi]) / (phi * sobolev_norm(g, 0.5))
    half = xi.size // 2
    assert ratio[half:].max() <= 2 * ratio[:half].max()
    assert ratio.max() < 1


def test_viscous_constant_flow_is_heat():
    f = analytic_flow("constant", Grid1D.torus(256), c=1.5)
    g0 = ComplexField.mode(f.grid, 1)
    nu, t = 0.01, 30.0
    curve, out = viscous_evolve(f, g0, 2, nu, t)
    np.testing.assert_allclose(curve.ordinates, np.exp(-nu * curve.abscissae), rtol=1e-8)
    np.testing.assert_allclose(out.values, np.exp(-2j * 1.5 * t - nu * t) * g0.values, atol=1e-10)


def test_viscous_zero_nu_preserves_norm():
    f = sine()
    rng = np.random.default_rng(3)
    g0 = ComplexField.random_trig(f.grid, rng)
    curve, _ = viscous_evolve(f, g0, 1, 0.0, 50.0)
    np.testing.assert_allclose(curve.ordinates, g0.norm(), rtol=1e-12)


def test_richardson_ratio():
    f = sine()
    g0 = ComplexField.mode(f.grid, 1)
    finals = [viscous_evolve(f, g0, 1, 1e-3, 20.0, dt=dt, record_times=[20.0])[1] for dt in (0.1, 0.05, 0.025)]
    n = [x.norm() for x in finals]
    ratio = (n[0] - n[1]) / (n[1] - n[2])
    assert 3.5 <= ratio <= 4.5


def test_viscous_energy_non_increasing():
    f = flow_from_spec({"kind": "weierstrass", "alpha": 0.5, "n": 2**10})
    rng = np.random.default_rng(5)
    curve, _ = viscous_evolve(f, ComplexField.random_trig(f.grid, rng), 3, 1e-2, 40.0, record_times=np.linspace(0, 40, 401))
    o = curve.ordinates
    assert np.all(o[1:] <= o[:-1] * (1 + 1e-10))


def test_step_too_large_and_bad_k():
    f = sine()
    g0 = ComplexField.mode(f.grid, 1)
    with pytest.raises(StepTooLarge):
        viscous_evolve(f, g0, 1, 1e-3, 1.0, dt=0.5)
    with pytest.raises(BadParameter):
        viscous_evolve(f, g0, 0, 1e-3, 1.0)


def test_underresolved_tail():
    f = analytic_flow("sine", Grid1D.torus(32), k0=8)
    with pytest.raises(UnderResolved):
        viscous_evolve(f, ComplexField.mode(f.grid, 1), 1, 1e-6, 50.0)


def test_rescale_check_cases():
    f = sine()
    g0 = ComplexField.mode(f.grid, 1)
    assert rescale_check(f, g0, 1, 1e-3, 5.0) == 0.0
    assert rescale_check(f, g0, -1, 1e-3, 5.0, dt=0.01) <= 1e-8
    assert rescale_check(f, g0, 4, 4e-3, 50.0, dt=0.01) <= 1e-6


def test_negative_k_is_conjugate():
    f = sine()
    rng = np.random.default_rng(6)
    g0 = ComplexField.random_trig(f.grid, rng)
    _, a = viscous_evolve(f, g0, -2, 1e-3, 10.0, dt=0.02, record_times=[10.0])
    _, b = evolve_oscillator(f, g0, -2.0, 1e-3, [10.0], dt=0.02)[:2]
    assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_shear2d_single_mode_matches_1d():
    f = sine()
    g0 = ComplexField.mode(f.grid, 1)
    res = shear2d_evolve(f, {1: g0}, 1e-3, 10.0)
    one, _ = viscous_evolve(f, g0, 1, 1e-3, 10.0, record_times=res.combined.abscissae)
    np.testing.assert_allclose(res.combined.ordinates, one.ordinates, rtol=1e-14)


def test_shear2d_conjugate_pair():
    f = sine()
    rng = np.random.default_rng(7)
    g = ComplexField.random_trig(f.grid, rng)
    res = shear2d_evolve(f, {1: g, -1: g.conj()}, 1e-3, 10.0, s=-0.5)
    np.testing.assert_allclose(res.combined.ordinates**2, 2 * res.per_mode[1].ordinates**2, rtol=1e-10)


def test_shear2d_heat_closed_form():
    f = analytic_flow("constant", Grid1D.torus(64), c=0.0)
    g0 = ComplexField.mode(f.grid, 1)
    nu, s = 1e-2, -0.5
    res = shear2d_evolve(f, {k: g0 for k in (1, 2, 3)}, nu, 5.0, s=s, full_laplacian=True)
    t = res.combined.abscissae
    expected = sum(np.exp(-2 * nu * (1 + k**2) * t) for k in (1, 2, 3)) * 2.0**s
    np.testing.assert_allclose(res.combined.ordinates**2, expected, rtol=1e-8)


def test_shear2d_rejects_zero_mode():
    with pytest.raises(ZeroModePresent):
        shear2d_evolve(sine(), {0: ComplexField.mode(Grid1D.torus(2**10), 1)}, 1e-3, 1.0)


def test_decay_curve_validation_and_csv():
    with pytest.raises(BadParameter):
        DecayCurve([1.0, 1.0], [1.0, 2.0], "x")
    c = DecayCurve([0.0, 1.0, 2.0], [1.0, 0.5, 0.25], "L2")
    assert c.to_csv().splitlines()[0] == "abscissa,ordinate,label"
    assert len(c.restrict(0.5, 2.0)) == 2
