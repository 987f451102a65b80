import numpy as np
import pytest

from noncausal import timeseries as ts
from noncausal.errors import (AlignmentError, DateParseError, DomainError,
                              DuplicateDateError, GapError, InsufficientDataError,
                              ParseError, ValueParseError)


def write(tmp_path, text, name="x.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_date_round_trip():
    o = ts.parse_date("1997-01")
    assert ts.format_date(o) == "1997-01"
    assert ts.parse_date("1997-01-31") == o
    assert ts.format_date(o + 13) == "1998-02"


@pytest.mark.parametrize("bad", ["1997/01", "97-01", "1997-13", "x"])
def test_bad_dates(bad):
    with pytest.raises(DateParseError):
        ts.parse_date(bad)


def test_load_sorts_rows(tmp_path):
    p = write(tmp_path, "date,cpi\n2000-02,2\n2000-01,1\n2000-03,3\n")
    s = ts.load_series(p)
    assert ts.format_date(s.start) == "2000-01"
    np.testing.assert_array_equal(s.values, [1, 2, 3])
    assert s.name == "cpi"


def test_parse_errors_carry_row_numbers(tmp_path):
    with pytest.raises(ValueParseError) as e:
        ts.load_series(write(tmp_path, "date,v\n2000-01,1\n2000-02,abc\n"))
    assert e.value.row == 2
    with pytest.raises(DuplicateDateError):
        ts.load_series(write(tmp_path, "date,v\n2000-01,1\n2000-01,2\n"))
    with pytest.raises(GapError):
        ts.load_series(write(tmp_path, "date,v\n2000-01,1\n2000-03,2\n"))
    with pytest.raises(ParseError):
        ts.load_series(write(tmp_path, "when,v\n2000-01,1\n"))
    with pytest.raises(ParseError):
        ts.load_series(write(tmp_path, "date,a,b\n2000-01,1,2\n"))


def test_save_load_round_trip(tmp_path):
    s = ts.TimeSeries(ts.parse_date("2001-05"), np.array([0.1, -2.5, 1e-17]), "pi")
    ts.save_series(s, tmp_path / "s.csv")
    back = ts.load_series(tmp_path / "s.csv")
    assert back.start == s.start
    np.testing.assert_array_equal(back.values, s.values)
    b = ts.BoundsSeries(s.start, [1.0, 2.0], [3.0, 4.5])
    ts.save_bounds(b, tmp_path / "b.csv")
    assert ts.load_bounds(tmp_path / "b.csv").at(s.start + 1) == (2.0, 4.5)
    panel = ts.ExogenousPanel(s.start, ("ip", "ex"), np.arange(6.0).reshape(3, 2))
    ts.save_panel(panel, tmp_path / "x.csv")
    assert ts.load_panel(tmp_path / "x.csv").names == ("ip", "ex")


def test_yoy_log_inflation():
    prices = ts.TimeSeries(0, np.full(13, 100.0))
    out = ts.yoy_log_inflation(prices)
    assert len(out) == 1 and out.values[0] == 0.0 and out.start == 12
    grow = ts.TimeSeries(0, 100 * 1.01 ** np.arange(30))
    np.testing.assert_allclose(ts.yoy_log_inflation(grow).values, 1200 * np.log(1.01))
    with pytest.raises(DomainError):
        ts.yoy_log_inflation(ts.TimeSeries(0, np.r_[0.0, np.ones(13)]))
    with pytest.raises(InsufficientDataError):
        ts.yoy_log_inflation(ts.TimeSeries(0, np.ones(12)))


def test_pct_change():
    x = ts.TimeSeries(0, np.r_[np.full(12, 50.0), np.full(12, 55.0)])
    np.testing.assert_allclose(ts.pct_change_yoy(x).values, 10.0)
    with pytest.raises(DomainError):
        ts.pct_change_yoy(ts.TimeSeries(0, np.zeros(13)))


def test_align_and_windows():
    a = ts.TimeSeries(10, np.arange(10.0))
    b = ts.BoundsSeries(12, np.zeros(20), np.ones(20))
    a2, b2 = ts.align([a, b])
    assert (a2.start, a2.end, b2.start, b2.end) == (12, 19, 12, 19)
    with pytest.raises(AlignmentError):
        ts.align([a, ts.TimeSeries(100, [1.0])])


def test_bounds_must_be_ordered():
    with pytest.raises(Exception):
        ts.BoundsSeries(0, [1.0], [1.0])


def test_replace_rows():
    p = ts.ExogenousPanel(0, ("a",), np.zeros((5, 1)))
    q = p.replace_rows(ts.ExogenousPanel(3, ("a",), np.ones((4, 1))))
    np.testing.assert_array_equal(q.values[:, 0], [0, 0, 0, 1, 1])
