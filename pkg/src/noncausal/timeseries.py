"""Monthly series containers, CSV ingestion and year-on-year transforms.

Dates are kept as integer month ordinals (``year * 12 + month - 1``) so that
alignment and gap checks are plain integer arithmetic.
"""

import csv
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (AlignmentError, DateParseError, DomainError,
                     DuplicateDateError, GapError, InputError,
                     InsufficientDataError, ParseError, ValueParseError)

#: displacement of every year-on-year operator, monthly data only
YEAR = 12

_DATE_RE = re.compile(r"^\s*(\d{4,})-(\d{1,2})(?:-(\d{1,2}))?\s*$")


def month_ordinal(year, month):
    return int(year) * 12 + int(month) - 1


def parse_date(text, row=None):
    """``'1997-01'`` (or ``'1997-01-31'``, day ignored) -> month ordinal."""
    m = _DATE_RE.match(text)
    if not m:
        raise DateParseError(f"malformed date {text!r}, expected YYYY-MM", row)
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise DateParseError(f"month out of range in {text!r}", row)
    return month_ordinal(year, month)


def format_date(ordinal):
    year, m0 = divmod(int(ordinal), 12)
    return f"{year:04d}-{m0 + 1:02d}"


def _readonly(a, ndim):
    a = np.array(a, dtype=float)
    if a.ndim != ndim:
        raise InputError(f"expected a {ndim}-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Gap-free monthly series starting at month ordinal ``start``."""

    start: int
    values: np.ndarray
    name: str = "value"

    def __post_init__(self):
        v = _readonly(self.values, 1)
        if v.size < 1:
            raise InsufficientDataError("a series needs at least one observation")
        if not np.all(np.isfinite(v)):
            raise InputError(f"series {self.name!r} contains non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self):
        return self.values.size

    @property
    def end(self):
        """Ordinal of the last observation."""
        return self.start + len(self) - 1

    @property
    def dates(self):
        return [format_date(self.start + i) for i in range(len(self))]

    def window(self, first, last):
        """Sub-series covering ordinals ``first..last`` inclusive."""
        if first < self.start or last > self.end or last < first:
            raise AlignmentError(
                f"window {format_date(first)}..{format_date(last)} outside "
                f"{format_date(self.start)}..{format_date(self.end)}")
        i = first - self.start
        return TimeSeries(first, self.values[i:i + last - first + 1], self.name)

    def upto(self, last):
        return self.window(self.start, last)

    def index_of(self, ordinal):
        i = ordinal - self.start
        if not 0 <= i < len(self):
            raise AlignmentError(f"{format_date(ordinal)} not in series {self.name!r}")
        return i

    def with_values(self, values, start=None, name=None):
        return TimeSeries(self.start if start is None else start, values,
                          self.name if name is None else name)


@dataclass(frozen=True)
class BoundsSeries:
    start: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, up = _readonly(self.lower, 1), _readonly(self.upper, 1)
        if lo.shape != up.shape or lo.size < 1:
            raise InputError("lower and upper bounds must be non-empty and of equal length")
        if not np.all(lo < up):
            bad = int(np.argmin(lo < up))
            raise InputError(f"lower bound not below upper bound at {format_date(self.start + bad)}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self):
        return self.lower.size

    @property
    def end(self):
        return self.start + len(self) - 1

    def at(self, ordinal):
        """(lower, upper) for one month."""
        i = ordinal - self.start
        if not 0 <= i < len(self):
            raise AlignmentError(f"no bounds for {format_date(ordinal)}")
        return float(self.lower[i]), float(self.upper[i])

    def window(self, first, last):
        i = first - self.start
        if i < 0 or last > self.end or last < first:
            raise AlignmentError("bounds window out of range")
        n = last - first + 1
        return BoundsSeries(first, self.lower[i:i + n], self.upper[i:i + n])


@dataclass(frozen=True)
class ExogenousPanel:
    """``q`` regressors sharing one monthly index; ``values`` has shape (n, q)."""

    start: int
    names: tuple
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values, 2)
        names = tuple(self.names)
        if v.shape[1] != len(names) or len(names) < 1 or v.shape[0] < 1:
            raise InputError("panel needs at least one row and one named column")
        if not np.all(np.isfinite(v)):
            raise InputError("panel contains missing or non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self):
        return self.values.shape[0]

    @property
    def q(self):
        return len(self.names)

    @property
    def end(self):
        return self.start + len(self) - 1

    def window(self, first, last):
        i = first - self.start
        if i < 0 or last > self.end or last < first:
            raise AlignmentError("panel window out of range")
        return ExogenousPanel(first, self.names, self.values[i:i + last - first + 1])

    def replace_rows(self, other):
        """Overwrite the months covered by ``other`` (e.g. newer data vintages)."""
        if other.names != self.names:
            raise AlignmentError("replacement panel has different columns")
        v = np.array(self.values)
        for k in range(len(other)):
            i = other.start + k - self.start
            if 0 <= i < len(self):
                v[i] = other.values[k]
        return ExogenousPanel(self.start, self.names, v)


# -- CSV ---------------------------------------------------------------------

def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "date":
        raise ParseError(f"{path}: first header column must be 'date'")
    return header, rows[1:]


def _parse_float(text, row):
    try:
        x = float(text)
    except ValueError:
        raise ValueParseError(f"non-numeric value {text!r}", row) from None
    if not math.isfinite(x):
        raise ValueParseError(f"non-finite value {text!r}", row)
    return x


def _read_table(path, columns=None):
    """Parse a date-indexed CSV into (start, header, matrix)."""
    header, rows = _read_rows(path)
    if not rows:
        raise InsufficientDataError(f"{path}: no data rows")
    if columns is None:
        idx = list(range(1, len(header)))
    else:
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
    records = []
    for rownum, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(r)}", rownum)
        ordinal = parse_date(r[0], rownum)
        records.append((ordinal, rownum, [_parse_float(r[j].strip(), rownum) for j in idx]))
    records.sort(key=lambda t: (t[0], t[1]))
    for (d0, _, _), (d1, row, _) in zip(records, records[1:]):
        if d1 == d0:
            raise DuplicateDateError(f"duplicate date {format_date(d1)}", row)
        if d1 != d0 + 1:
            raise GapError(f"gap between {format_date(d0)} and {format_date(d1)}", row)
    names = [header[j] for j in idx]
    return records[0][0], names, np.array([rec[2] for rec in records], dtype=float)


def load_series(path, column=None):
    """Read one numeric column of a ``date,...`` CSV as a TimeSeries.

    With ``column=None`` the file must have exactly one value column.
    """
    if column is None:
        header, _ = _read_rows(path)
        if len(header) != 2:
            raise ParseError(f"{path}: several value columns, pass column=")
        column = header[1]
    start, _, m = _read_table(path, [column])
    return TimeSeries(start, m[:, 0], column)


def load_bounds(path):
    start, _, m = _read_table(path, ["lower", "upper"])
    return BoundsSeries(start, m[:, 0], m[:, 1])


def load_panel(path):
    start, names, m = _read_table(path)
    if not names:
        raise ParseError(f"{path}: panel has no regressor columns")
    return ExogenousPanel(start, tuple(names), m)


def _fmt(x):
    return repr(float(x))


def _write(path, header, start, matrix):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(matrix):
            fh.write(",".join([format_date(start + i)] + [_fmt(x) for x in row]) + "\n")


def save_series(series, path):
    _write(path, ["date", series.name], series.start, series.values[:, None])


def save_bounds(bounds, path):
    _write(path, ["date", "lower", "upper"], bounds.start,
           np.column_stack([bounds.lower, bounds.upper]))


def save_panel(panel, path):
    _write(path, ["date", *panel.names], panel.start, panel.values)


# -- transforms --------------------------------------------------------------

def yoy_log_inflation(prices, name=None):
    """100 * (ln P_t - ln P_{t-12}); the first twelve months are dropped."""
    p = prices.values
    if np.any(p <= 0):
        raise DomainError("prices must be strictly positive for log inflation")
    if len(p) <= YEAR:
        raise InsufficientDataError("need more than 12 observations")
    lp = np.log(p)
    return TimeSeries(prices.start + YEAR, 100.0 * (lp[YEAR:] - lp[:-YEAR]),
                      name or prices.name)


def pct_change_yoy(series, name=None):
    """100 * (x_t - x_{t-12}) / x_{t-12}."""
    x = series.values
    if len(x) <= YEAR:
        raise InsufficientDataError("need more than 12 observations")
    base = x[:-YEAR]
    if np.any(base == 0):
        raise DomainError("zero denominator in year-on-year change")
    return TimeSeries(series.start + YEAR, 100.0 * (x[YEAR:] - base) / base,
                      name or series.name)


def demean(series):
    return series.with_values(series.values - series.values.mean())


def align(items):
    """Restrict every series/bounds/panel to the common date span.

    Returns a list in the input order.
    """
    items = list(items)
    if not items:
        raise AlignmentError("nothing to align")
    first = max(it.start for it in items)
    last = min(it.end for it in items)
    if last < first:
        raise AlignmentError("date ranges do not overlap")
    return [it.window(first, last) for it in items]
