import numpy as np
import pytest

from noncausal.credibility import (CredibilityIndex, OutcomeSeries, classify,
                                   compare_indices, default_thresholds, load_index,
                                   load_outcomes, mann_whitney_auc, realized_outcomes,
                                   roc_curve, rolling_index, save_index, save_outcomes,
                                   write_roc_csv)
from noncausal.density import lls_probability
from noncausal.errors import (AlignmentError, ConvergenceError, EvaluationError,
                              InputError, ParseError)
from noncausal.timeseries import BoundsSeries, TimeSeries, parse_date

from conftest import constant_bounds

D0 = parse_date("2000-01")


def _index(values, name="ix"):
    return CredibilityIndex(tuple(range(D0, D0 + len(values))), values, name=name)


def _outcomes(flags):
    return OutcomeSeries(tuple(range(D0, D0 + len(flags))), flags)


def test_hand_case_rates():
    ix = _index([0.9, 0.6, 0.7, 0.2])
    out = _outcomes([True, True, False, False])
    roc = roc_curve(ix, out, thresholds=[0.5])
    assert roc.fpr[0] == 0.5 and roc.tpr[0] == 1.0
    assert roc.auc == pytest.approx(0.75)
    assert mann_whitney_auc(ix, out) == pytest.approx(0.75)


def test_classify_strict_and_extremes():
    ix = _index([0.0, 0.5, 1.0])
    np.testing.assert_array_equal(classify(ix, 0.5), [False, False, True])
    np.testing.assert_array_equal(classify(ix, 1.0), [False, False, False])
    np.testing.assert_array_equal(classify(ix, 0.0), [False, True, True])
    with pytest.raises(InputError):
        classify(ix, 1.5)


def test_roc_endpoints_with_attained_zero():
    ix = _index([0.0, 0.3, 1.0, 0.0])
    roc = roc_curve(ix, _outcomes([False, True, True, False]))
    assert (roc.fpr[0], roc.tpr[0]) == (1.0, 1.0)
    assert (roc.fpr[-1], roc.tpr[-1]) == (0.0, 0.0)
    assert roc.auc == 1.0


def test_perfect_and_random_index():
    rs = np.random.default_rng(0)
    flags = rs.random(2000) < 0.5
    perfect = _index(np.where(flags, 0.8, 0.2))
    assert roc_curve(perfect, _outcomes(flags)).auc == 1.0
    noise = _index(rs.random(2000))
    assert abs(roc_curve(noise, _outcomes(flags)).auc - 0.5) < 0.05


def test_auc_matches_mann_whitney_with_ties():
    rs = np.random.default_rng(3)
    vals = np.round(rs.random(300), 1)
    flags = rs.random(300) < vals
    ix, out = _index(vals), _outcomes(flags)
    assert roc_curve(ix, out).auc == pytest.approx(mann_whitney_auc(ix, out), abs=1e-12)
    # a strictly increasing transform leaves the ranking unchanged
    assert roc_curve(_index(vals ** 3), out).auc == pytest.approx(roc_curve(ix, out).auc)


def test_display_thresholds_do_not_change_auc():
    rs = np.random.default_rng(4)
    vals, flags = rs.random(100), rs.random(100) < 0.4
    full = roc_curve(_index(vals), _outcomes(flags))
    coarse = roc_curve(_index(vals), _outcomes(flags), thresholds=[0.25, 0.5, 0.75])
    assert coarse.auc == full.auc and coarse.thresholds.size == 3


def test_single_class_raises():
    with pytest.raises(EvaluationError):
        roc_curve(_index([0.1, 0.2]), _outcomes([True, True]))
    with pytest.raises(EvaluationError):
        mann_whitney_auc(_index([0.1, 0.2]), _outcomes([False, False]))


def test_alignment():
    ix = CredibilityIndex((D0 + 10, D0 + 11), [0.5, 0.6])
    with pytest.raises(AlignmentError):
        roc_curve(ix, _outcomes([True, False]))
    partial = CredibilityIndex((D0, D0 + 1, D0 + 50), [0.9, 0.1, 0.5])
    assert roc_curve(partial, _outcomes([True, False])).n_obs == 2


def test_index_validation():
    with pytest.raises(InputError):
        _index([0.5, 1.2])
    with pytest.raises(InputError):
        CredibilityIndex((D0,), [0.1, 0.2])


def test_compare_indices_ranking():
    flags = np.array([True, False] * 20)
    good = _index(np.where(flags, 0.7, 0.3), "good")
    bad = _index(np.where(flags, 0.3, 0.7), "bad")
    rep = compare_indices([bad, good, _index(np.where(flags, 0.7, 0.3), "twin")], _outcomes(flags))
    assert rep.ranking == ["good", "twin", "bad"]
    with pytest.raises(InputError):
        compare_indices([], _outcomes(flags))


def test_realized_outcomes_inclusive():
    s = TimeSeries(D0, [0.0, 1.0, 2.0, 3.0])
    b = BoundsSeries(D0 + 1, [1.0, 1.0, 1.0], [2.0, 2.0, 2.0])
    out = realized_outcomes(s, b)
    assert out.dates == (D0 + 1, D0 + 2, D0 + 3)
    np.testing.assert_array_equal(out.inside, [True, True, False])


def test_rolling_index(mar11, mar11_series):
    bounds = constant_bounds(mar11_series, -1e9, 1e9)
    T = mar11_series.end
    origins = [T - 5, T - 4, T - 3]

    def fit(sub):
        if sub.end == T - 4:
            raise ConvergenceError("forced")
        return mar11

    def fc(f, sub, b, h):
        return lls_probability(f, sub, b, h, 1000, seed=1)

    ix = rolling_index(mar11_series, bounds, fit, fc, origins, 2, name="lls", method="LLS")
    assert ix.failed == (T - 4,)
    assert ix.dates == (T - 3, T - 1)
    np.testing.assert_array_equal(ix.values, [1.0, 1.0])
    one = rolling_index(mar11_series, bounds, lambda s: mar11, fc, [T - 1], 1)
    assert one.dates == (T,) and not one.failed


def test_csv_round_trips(tmp_path):
    ix = _index([0.25, 0.5, 1.0], "abc")
    save_index(ix, tmp_path / "abc.csv")
    back = load_index(tmp_path / "abc.csv")
    assert back.dates == ix.dates and back.name == "abc"
    np.testing.assert_array_equal(back.values, ix.values)
    out = _outcomes([True, False, True])
    save_outcomes(out, tmp_path / "o.csv")
    back = load_outcomes(tmp_path / "o.csv")
    np.testing.assert_array_equal(back.inside, out.inside)
    (tmp_path / "bad.csv").write_text("date,outcome\n2000-01,maybe\n")
    with pytest.raises(ParseError):
        load_outcomes(tmp_path / "bad.csv")


def test_roc_csv_layout(tmp_path):
    rep = compare_indices([_index([0.9, 0.1], "a")], _outcomes([True, False]))
    write_roc_csv(rep, tmp_path / "roc.csv")
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "index_name,threshold,fpr,tpr"
    assert lines[-2] == "index_name,auc,n_obs,n_failed"
    assert lines[-1] == "a,1.0,2,0"
    assert len(lines) == 2 + len(default_thresholds(np.array([0.9, 0.1]))) + 1
