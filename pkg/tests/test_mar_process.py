import numpy as np
import pytest
from scipy import stats

from noncausal import mar_process as mp
from noncausal.errors import (InputError, NonStationaryError, ParseError,
                              UnsupportedOrderError)
from noncausal.timeseries import ExogenousPanel, TimeSeries


def test_root_moduli_match_numpy_roots():
    gen = np.random.default_rng(0)
    for _ in range(50):
        c = gen.uniform(-1, 1, size=gen.integers(1, 5))
        expected = np.sort(np.abs(np.roots(np.r_[-c[::-1], 1.0])))
        np.testing.assert_allclose(np.sort(mp.root_moduli(c)), expected, rtol=1e-8)


def test_stationarity_boundary():
    assert mp.check_stationarity([0.94])[0]
    assert not mp.check_stationarity([1.0])[0]
    assert not mp.check_stationarity([1.0 - 1e-10])[0]
    ok, mod = mp.check_stationarity(mp.LagPolynomial([0.94], "lead"))
    assert ok and mod[0] == pytest.approx(1 / 0.94)
    with pytest.raises(NonStationaryError):
        mp.MarModel.from_coeffs([1.2], [], 4, 1)


def test_noise_validation():
    with pytest.raises(InputError):
        mp.NoiseSpec(2.0, 1.0)
    with pytest.raises(InputError):
        mp.NoiseSpec(4.0, 0.0)


def test_t_logpdf_matches_scipy():
    x = np.linspace(-30, 30, 101)
    for dof in (2.1, 3.25, 10, 1e4):
        np.testing.assert_allclose(mp.t_logpdf(x, dof, 1.7),
                                   stats.t.logpdf(x, dof, scale=1.7), rtol=1e-9, atol=1e-9)


def test_laurent_mar11():
    m = mp.MarModel.from_coeffs([0.5], [0.8], 4, 1)
    c, a, b = mp.laurent(m)
    # (1 - 0.5 L)(1 - 0.8 F) = -0.8 F + 1.4 - 0.5 L
    np.testing.assert_allclose(c, [-0.8, 1.4, -0.5])
    assert (a, b) == (1, 1)


@pytest.mark.parametrize("lag,lead", [([0.5], [0.8]), ([0.9, -0.2], []), ([], [0.3, 0.4])])
def test_residuals_recover_innovations(lag, lead):
    m = mp.MarModel.from_coeffs(lag, lead, 4, 1.3)
    y, eps = mp.simulate(m, 300, seed=1)
    res = mp.residuals(y, m)
    i0 = res.start - y.start
    np.testing.assert_allclose(res.values, eps.values[i0:i0 + len(res)], atol=1e-9)


def test_smar_and_marx_round_trip():
    base = mp.MarModel.from_coeffs([0.4], [0.6], 5, 1)
    sm = mp.SmarModel(base, 0.3, -0.3, 12, 12)
    y, eps = mp.simulate(sm, 300, seed=2)
    res = mp.residuals(y, sm)
    np.testing.assert_allclose(res.values, eps.values[13:13 + len(res)], atol=1e-9)

    n, burn = 200, 50
    X = ExogenousPanel(0, ("a", "b"), np.random.default_rng(1).normal(size=(n + 2 * burn, 2)))
    mx = mp.MarxModel(base, [1.5, -0.7], (1, -1))
    y, eps = mp.simulate(mx, n, seed=3, X=X, burn=burn, start=burn)
    res = mp.residuals(y, mx, X)
    i0 = res.start - y.start
    np.testing.assert_allclose(res.values, eps.values[i0:i0 + len(res)], atol=1e-9)


def test_filter_components():
    m = mp.MarModel.from_coeffs([0.5], [0.8], 4, 1)
    y = TimeSeries(0, np.arange(1.0, 7.0))
    u, v = mp.filter_components(y, m)
    np.testing.assert_allclose(u.values, y.values[1:] - 0.5 * y.values[:-1])
    np.testing.assert_allclose(v.values, y.values[:-1] - 0.8 * y.values[1:])
    assert u.start == 1 and v.start == 0


def test_ma_weights_reproduce_simulation():
    m = mp.MarModel.from_coeffs([0.5], [0.7], 4, 1)
    w = mp.invert_to_ma(m)
    y, eps = mp.simulate(m, 400, seed=4)
    t = 200
    approx = sum(w.weight(j) * eps.values[t - j] for j in range(-w.B, w.B + 1))
    assert approx == pytest.approx(y.values[t], abs=1e-6)
    # closed form for MAR(1,1): w_j = phi^j / (1 - phi psi) for j >= 0
    assert w.weight(3) == pytest.approx(0.5 ** 3 / 0.65, rel=1e-8)
    assert w.weight(-2) == pytest.approx(0.7 ** 2 / 0.65, rel=1e-8)


def test_additive_expansion_published_values():
    e = mp.expand_additive(mp.MarModel.from_coeffs([0.58], [0.94], 3.25, 1))
    assert round(e.weight(-1), 2) == 0.38 and round(e.weight(1), 2) == 0.61
    sm = mp.SmarModel(mp.MarModel.from_coeffs([0.59], [0.96], 4, 1), 0.0, -0.30, 0, 12)
    e = mp.expand_additive(sm)
    got = [round(e.weight(d), 2) for d in (-1, 1, 11, 12, 13)]
    assert got == [0.38, 0.61, 0.11, -0.30, 0.18]


def test_additive_expansion_degenerate_cases():
    e = mp.expand_additive(mp.MarModel.from_coeffs([], [], 4, 1))
    assert e.weight(1) == 0 and e.weight(-1) == 0 and e.error_factor == 1
    with pytest.raises(UnsupportedOrderError):
        mp.expand_additive(mp.MarModel.from_coeffs([0.1, 0.1], [0.5], 4, 1))


def test_iid_simulation_is_t():
    m = mp.MarModel.from_coeffs([], [], 6.0, 2.0)
    y, eps = mp.simulate(m, 100_000, seed=9)
    np.testing.assert_array_equal(y.values, eps.values)
    assert stats.kstest(y.values / 2.0, stats.t(6.0).cdf).pvalue > 0.01


def test_simulation_deterministic():
    m = mp.MarModel.from_coeffs([0.5], [0.7], 4, 1)
    a, _ = mp.simulate(m, 50, seed=1)
    b, _ = mp.simulate(m, 50, seed=1)
    np.testing.assert_array_equal(a.values, b.values)


def test_model_serialization_round_trip(tmp_path):
    base = mp.MarModel.from_coeffs([0.58], [0.94], 3.25, 0.123456789012345)
    for model in (base, mp.MarxModel(base, [1.64, -0.53], (1, 1)),
                  mp.SmarModel(base, 0.0, -0.3, 0, 12)):
        back = mp.loads_model(mp.dumps_model(model))
        assert mp.dumps_model(back) == mp.dumps_model(model)
    mp.save_model(base, tmp_path / "m.txt")
    assert mp.load_model(tmp_path / "m.txt").noise.scale == base.noise.scale
    with pytest.raises(ParseError):
        mp.loads_model("r=1\n")
    with pytest.raises(NonStationaryError):
        mp.loads_model(mp.dumps_model(base).replace("0.93999999999999995", "1.5"))
