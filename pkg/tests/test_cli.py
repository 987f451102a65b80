import os
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from noncausal import cli
from noncausal.mar_process import MarModel, save_model, simulate
from noncausal.timeseries import (BoundsSeries, ExogenousPanel, load_series,
                                  save_bounds, save_panel, save_series)

DATA = Path(__file__).parent / "data"


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    model = MarModel.from_coeffs([0.5], [0.7], 5.0, 1.0)
    save_model(model, d / "model.txt")
    y, _ = simulate(model, 300, seed=7)
    save_series(y, d / "series.csv")
    n = len(y) + 12
    save_bounds(BoundsSeries(y.start, np.full(n, -1.5), np.full(n, 2.5)), d / "bounds.csv")
    save_bounds(BoundsSeries(y.start, np.full(n, -1e9), np.full(n, 1e9)), d / "wide.csv")
    return d


def test_transform_golden(tmp_path):
    assert run("transform", "--input", DATA / "sample_prices.csv", "--output-dir", tmp_path) == 0
    assert (tmp_path / "transformed.csv").read_bytes() == \
        (DATA / "sample_inflation_golden.csv").read_bytes()
    assert (tmp_path / "run_manifest.txt").exists()


def test_transform_trivial_cases(tmp_path):
    rows = "\n".join(f"2001-{m:02d},50" for m in range(1, 13)) + "\n2002-01,50\n"
    (tmp_path / "p.csv").write_text("date,value\n" + rows)
    assert run("transform", "--input", tmp_path / "p.csv", "--output-dir", tmp_path) == 0
    out = load_series(tmp_path / "transformed.csv")
    assert len(out) == 1 and out.values[0] == 0.0


def test_input_errors_exit_2(tmp_path, files):
    (tmp_path / "bad.csv").write_text("date,value\n2001-01,1\n2001-02,abc\n")
    assert run("transform", "--input", tmp_path / "bad.csv", "--output-dir", tmp_path) == 2
    assert run("simulate", "--model", files / "model.txt", "--n", 10,
               "--output-dir", tmp_path) == 2            # no seed
    (tmp_path / "ns.txt").write_text("r=1\ns=0\nlag_coeffs=1.2\nlead_coeffs=\ndof=5\nscale=1\n")
    assert run("simulate", "--model", tmp_path / "ns.txt", "--n", 10, "--seed", 1,
               "--output-dir", tmp_path) == 2
    assert run("forecast", "--series", files / "series.csv", "--output-dir", tmp_path) == 2


def test_simulate_deterministic(tmp_path, files):
    for d in ("a", "b"):
        assert run("simulate", "--model", files / "model.txt", "--n", 200, "--seed", 5,
                   "--output-dir", tmp_path / d) == 0
    for name in ("simulated.csv", "innovations.csv", "run_manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() != b""
    assert (tmp_path / "a" / "simulated.csv").read_bytes() == \
        (tmp_path / "b" / "simulated.csv").read_bytes()


def test_simulate_iid_t(tmp_path):
    save_model(MarModel.from_coeffs([], [], 4.0, 1.0), tmp_path / "iid.txt")
    assert run("simulate", "--model", tmp_path / "iid.txt", "--n", 100_000, "--seed", 3,
               "--output-dir", tmp_path) == 0
    y = load_series(tmp_path / "simulated.csv").values
    assert stats.kstest(y, stats.t(4.0).cdf).pvalue > 0.01


def test_manifest_round_trip(tmp_path, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("forecast", "--model", files / "model.txt", "--series", files / "series.csv",
               "--bounds", files / "bounds.csv", "--h", 2, "--method", "SIR", "--seed", 11,
               "--write-paths", "--output-dir", a) == 0
    assert run("forecast", "--config", a / "run_manifest.txt", "--output-dir", b) == 0
    for name in ("forecast.csv", "paths.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = (a / "run_manifest.txt").read_text().splitlines()
    mb = (b / "run_manifest.txt").read_text().splitlines()
    assert [l for l in ma if not l.startswith("output_dir")] == \
        [l for l in mb if not l.startswith("output_dir")]
    assert "K=10000" in ma and "S_resample=1000" in ma


def test_forecast_methods_agree(tmp_path, files):
    ps = {}
    for m in ("LLS", "GJ", "SIR"):
        out = tmp_path / m
        assert run("forecast", "--model", files / "model.txt", "--series", files / "series.csv",
                   "--bounds", files / "bounds.csv", "--method", m, "--seed", 2,
                   "--write-density", "--output-dir", out) == 0
        row = (out / "forecast.csv").read_text().splitlines()[1].split(",")
        ps[m] = float(row[3])
    assert abs(ps["LLS"] - ps["SIR"]) < 0.02 and abs(ps["LLS"] - ps["GJ"]) < 0.02
    assert (tmp_path / "GJ" / "density.csv").exists()


def test_forecast_wide_bounds(tmp_path, files):
    assert run("forecast", "--model", files / "model.txt", "--series", files / "series.csv",
               "--bounds", files / "wide.csv", "--h", 3, "--seed", 1, "--N", 5000,
               "--output-dir", tmp_path) == 0
    row = (tmp_path / "forecast.csv").read_text().splitlines()[1].split(",")
    assert float(row[3]) == 1.0


def test_forecast_degenerate_exit_4(tmp_path, files):
    y = load_series(files / "series.csv")
    v = y.values.copy()
    v[-1] = 0.5 * v[-2] + 60.0
    save_series(y.with_values(v), tmp_path / "far.csv")
    assert run("forecast", "--model", files / "model.txt", "--series", tmp_path / "far.csv",
               "--bounds", files / "bounds.csv", "--h", 6, "--method", "SIR", "--seed", 1,
               "--output-dir", tmp_path) == 4


def test_credibility_command(tmp_path):
    (tmp_path / "ix.csv").write_text("date,value\n2001-01,0.9\n2001-02,0.6\n2001-03,0.7\n2001-04,0.2\n")
    (tmp_path / "out.csv").write_text("date,outcome\n2001-01,in\n2001-02,in\n2001-03,out\n2001-04,out\n")
    assert run("credibility", "--index", tmp_path / "ix.csv", "--outcomes", tmp_path / "out.csv",
               "--thresholds", "0.5", "--output-dir", tmp_path) == 0
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[1] == "ix,0.5,0.5,1.0" and lines[-1] == "ix,0.75,4,0"
    (tmp_path / "one.csv").write_text("date,outcome\n2001-01,in\n2001-02,in\n")
    assert run("credibility", "--index", tmp_path / "ix.csv", "--outcomes", tmp_path / "one.csv",
               "--output-dir", tmp_path) == 5


def test_fit_with_fixed_order_and_extras(tmp_path):
    model = MarModel.from_coeffs([0.5], [0.7], 5.0, 1.0)
    rs = np.random.default_rng(0)
    n = 300
    x = rs.standard_normal((n + 200, 1))
    X = ExogenousPanel(24000 - 100, ("x",), x)
    y, _ = simulate(model, n, seed=8, start=24000)
    save_series(y, tmp_path / "y.csv")
    save_panel(X, tmp_path / "x.csv")
    rc = run("fit", "--series", tmp_path / "y.csv", "--r", 1, "--s", 1, "--smar", "12",
             "--exog", tmp_path / "x.csv", "--n-starts", 2, "--output-dir", tmp_path)
    assert rc in (0, 3)
    for name in ("model.txt", "smar_model.txt", "marx_model.txt", "fit_report.txt",
                 "diagnostics.csv", "run_manifest.txt"):
        assert (tmp_path / name).exists()
    report = (tmp_path / "fit_report.txt").read_text()
    assert "pseudo_causal_p" not in report and "[marx]" in report and "[smar]" in report


def test_fit_selects_mar11(tmp_path, files):
    assert run("fit", "--series", files / "series.csv", "--output-dir", tmp_path) == 0
    text = (tmp_path / "model.txt").read_text()
    assert "r=1\ns=1\n" in text


@pytest.mark.slow
def test_backtest_rows_and_dispersion(tmp_path, files):
    y = load_series(files / "series.csv")
    from noncausal.timeseries import format_date
    first, last = format_date(y.end - 11), format_date(y.end - 6)
    assert run("backtest", "--series", files / "series.csv", "--bounds", files / "bounds.csv",
               "--origin-first", first, "--origin-last", last, "--horizons", "1,6",
               "--methods", "LLS,SIR", "--r", 1, "--s", 1, "--n-starts", 2, "--seed", 4,
               "--output-dir", tmp_path) == 0
    rows = [l.split(",") for l in (tmp_path / "backtest.csv").read_text().splitlines()[1:]]
    for h in ("1", "6"):
        for m in ("LLS", "SIR"):
            assert sum(r[1] == h and r[2] == m for r in rows) == 6
    p = {h: np.std([float(r[3]) for r in rows if r[1] == h and r[2] == "LLS"]) for h in ("1", "6")}
    assert p["6"] < p["1"]
    assert (tmp_path / "failures.csv").read_text().startswith("origin_date,stage")
