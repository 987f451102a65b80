"""Short-term credibility index and ROC evaluation.

The index at month d is the probability, forecast h months earlier, that the
series lands inside its announced bounds at d.  A central bank is predicted
credible at threshold x when the index is strictly above x; predictions are
scored against realized in/out outcomes with ROC curves.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (AlignmentError, EvaluationError, InputError,
                     NoncausalError, ParseError)
from .timeseries import format_date, load_series, parse_date

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CredibilityIndex:
    dates: tuple                  # month ordinals
    values: np.ndarray
    method: str = ""
    horizon: int = 1
    name: str = "index"
    failed: tuple = ()            # origins whose fit or forecast raised

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.dates),):
            raise InputError("one index value per date required")
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise InputError("index values must lie in [0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dates", tuple(int(d) for d in self.dates))


@dataclass(frozen=True)
class OutcomeSeries:
    dates: tuple
    inside: np.ndarray            # True when the realized value was within bounds

    def __post_init__(self):
        object.__setattr__(self, "inside", np.array(self.inside, dtype=bool))
        object.__setattr__(self, "dates", tuple(int(d) for d in self.dates))
        if self.inside.shape != (len(self.dates),):
            raise InputError("one outcome per date required")


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    n_obs: int
    name: str = "index"
    n_failed: int = 0


def rolling_index(series, bounds, fit_procedure, forecaster, origins, h, name="index",
                  method=""):
    """Refit on data up to each origin and forecast the in-bounds probability at h.

    ``fit_procedure(sub_series)`` returns a fit, ``forecaster(fit, sub_series,
    bounds, h)`` a ProbabilityForecast.  Errors of the package at one origin
    mark that origin as failed; the run continues.
    """
    dates, values, failed = [], [], []
    for origin in origins:
        try:
            sub = series.upto(origin)
            fit = fit_procedure(sub)
            fc = forecaster(fit, sub, bounds, h)
        except NoncausalError as exc:
            log.warning("origin %s failed: %s", format_date(origin), exc)
            failed.append(int(origin))
            continue
        dates.append(int(origin) + h)
        values.append(fc.p_in_bounds)
    return CredibilityIndex(tuple(dates), np.array(values), method, h, name, tuple(failed))


def realized_outcomes(series, bounds, dates=None):
    """In/out outcome wherever both the series and the bounds exist."""
    if dates is None:
        first, last = max(series.start, bounds.start), min(series.end, bounds.end)
        dates = range(first, last + 1)
    inside = []
    for d in dates:
        lo, up = bounds.at(d)
        x = series.values[series.index_of(d)]
        inside.append(lo <= x <= up)
    return OutcomeSeries(tuple(dates), np.array(inside))


def classify(index, x):
    """Predicted credible iff the index is strictly above ``x``."""
    if not 0.0 <= x <= 1.0:
        raise InputError("threshold must be in [0, 1]")
    return index.values > x


def _aligned(index, outcomes):
    pos = {d: i for i, d in enumerate(outcomes.dates)}
    keep = [i for i, d in enumerate(index.dates) if d in pos]
    if not keep:
        raise AlignmentError("index and outcomes share no dates")
    vals = index.values[keep]
    ins = outcomes.inside[[pos[index.dates[i]] for i in keep]]
    return vals, ins


def _check_classes(ins):
    if ins.all():
        raise EvaluationError("no out-of-bounds outcomes: false-positive rate undefined")
    if not ins.any():
        raise EvaluationError("no in-bounds outcomes: true-positive rate undefined")


def default_thresholds(values):
    """Distinct index values plus 0 and 1; a value below 0 is added when 0 is attained."""
    t = np.unique(np.concatenate([values, [0.0, 1.0]]))
    if values.min() <= 0.0:
        t = np.concatenate([[-1e-9], t])
    return t


def roc_curve(index, outcomes, thresholds=None):
    """Empirical ROC over ``thresholds`` (sorted ascending) and its trapezoid AUC.

    The AUC integrates over the full set of distinct thresholds together with
    the exact (0, 0) and (1, 1) endpoints, independent of the thresholds
    requested for display.
    """
    vals, ins = _aligned(index, outcomes)
    _check_classes(ins)
    thr = default_thresholds(vals) if thresholds is None else np.sort(np.asarray(thresholds, float))
    n_pos, n_neg = int(ins.sum()), int((~ins).sum())

    def rates(ts):
        pred = vals[None, :] > ts[:, None]
        tpr = (pred & ins[None, :]).sum(axis=1) / n_pos
        fpr = (pred & ~ins[None, :]).sum(axis=1) / n_neg
        return fpr, tpr

    fpr, tpr = rates(thr)
    full_f, full_t = rates(default_thresholds(vals))
    # thresholds ascend, so rates descend; reverse for integration in fpr
    xs = np.concatenate([[0.0], full_f[::-1], [1.0]])
    ys = np.concatenate([[0.0], full_t[::-1], [1.0]])
    auc = float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))
    return RocCurve(thr, fpr, tpr, auc, int(vals.size), index.name, len(index.failed))


def mann_whitney_auc(index, outcomes):
    """P(index | in > index | out) + 0.5 P(equal), by direct pair counting."""
    vals, ins = _aligned(index, outcomes)
    _check_classes(ins)
    a, b = vals[ins], vals[~ins]
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float((gt + 0.5 * eq) / (a.size * b.size))


@dataclass
class ComparisonReport:
    curves: list
    order: list = field(default_factory=list)     # curve positions, best AUC first

    @property
    def ranking(self):
        return [self.curves[i].name for i in self.order]


def compare_indices(indices, outcomes, thresholds=None):
    if not indices:
        raise InputError("need at least one index")
    curves = [roc_curve(ix, outcomes, thresholds) for ix in indices]
    order = sorted(range(len(curves)), key=lambda i: (-curves[i].auc, i))
    return ComparisonReport(curves, order)


def write_roc_csv(report, path):
    """ROC points per index, then one ``index_name,auc,n_obs,n_failed`` line per index."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("index_name,threshold,fpr,tpr\n")
        for c in report.curves:
            for t, f, p in zip(c.thresholds, c.fpr, c.tpr):
                fh.write(f"{c.name},{float(t)!r},{float(f)!r},{float(p)!r}\n")
        fh.write("index_name,auc,n_obs,n_failed\n")
        for i in report.order:
            c = report.curves[i]
            fh.write(f"{c.name},{float(c.auc)!r},{c.n_obs},{c.n_failed}\n")


# -- CSV -----------------------------------------------------------------------

def load_index(path, name=None):
    ts = load_series(path, "value")
    return CredibilityIndex(tuple(range(ts.start, ts.end + 1)), ts.values,
                            name=name or str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0])


def save_index(index, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,value\n")
        for d, v in zip(index.dates, index.values):
            fh.write(f"{format_date(d)},{float(v)!r}\n")


def load_outcomes(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows or [c.strip().lower() for c in rows[0]] != ["date", "outcome"]:
        raise ParseError(f"{path}: header must be 'date,outcome'")
    dates, inside, seen = [], [], set()
    for rownum, r in enumerate(rows[1:], start=1):
        if len(r) != 2:
            raise ParseError("expected 2 fields", rownum)
        d = parse_date(r[0], rownum)
        if d in seen:
            raise ParseError(f"duplicate date {format_date(d)}", rownum)
        seen.add(d)
        flag = r[1].strip().lower()
        if flag not in ("in", "out"):
            raise ParseError(f"outcome must be 'in' or 'out', got {r[1]!r}", rownum)
        dates.append(d)
        inside.append(flag == "in")
    return OutcomeSeries(tuple(dates), np.array(inside))


def save_outcomes(outcomes, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,outcome\n")
        for d, i in zip(outcomes.dates, outcomes.inside):
            fh.write(f"{format_date(d)},{'in' if i else 'out'}\n")
