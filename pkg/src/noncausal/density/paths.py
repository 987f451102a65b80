"""Containers for simulated forecast paths and probability-in-bounds summaries."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import AlignmentError, InputError, UnsupportedOrderError
from ..mar_process import MarModel, MarxModel, SmarModel, filter_components
from ..timeseries import format_date


@dataclass(frozen=True)
class ForecastPaths:
    """``paths[i, k]`` is path i at horizon k + 1; optional weights sum to one."""

    origin: int
    paths: np.ndarray
    weights: np.ndarray = None
    ess: float = np.nan
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.paths, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise InputError("paths must be a non-empty (n_paths, h) array")
        object.__setattr__(self, "paths", p)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != (p.shape[0],) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InputError("weights must be nonnegative, one per path, summing to 1")
            object.__setattr__(self, "weights", w)

    @property
    def h(self):
        return self.paths.shape[1]

    @property
    def n_paths(self):
        return self.paths.shape[0]


@dataclass(frozen=True)
class ProbabilityForecast:
    origin: int
    horizon: int
    p_in_bounds: float
    p_below: float
    p_above: float
    method: str
    settings: dict = field(default_factory=dict)
    point_mean: float = np.nan
    point_median: float = np.nan
    ess: float = np.nan

    def __post_init__(self):
        parts = (self.p_in_bounds, self.p_below, self.p_above)
        if any(not 0.0 <= p <= 1.0 for p in parts) or abs(sum(parts) - 1.0) > 1e-9:
            raise InputError(f"probability split {parts} is not a distribution")

    def csv_row(self):
        n = self.settings.get("N", self.settings.get("K", ""))
        return ",".join([format_date(self.origin), str(self.horizon), self.method,
                         repr(self.p_in_bounds), repr(self.p_below), repr(self.p_above),
                         repr(self.point_mean), repr(self.point_median),
                         str(self.settings.get("seed", "")), str(n)])


FORECAST_HEADER = ("origin_date,horizon,method,p_in_bounds,p_below,p_above,"
                   "point_mean,point_median,seed,N_or_K")


def write_forecasts(forecasts, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(FORECAST_HEADER + "\n")
        for f in forecasts:
            fh.write(f.csv_row() + "\n")


def write_paths(paths, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(f"h{k + 1}" for k in range(paths.h)) + "\n")
        for row in paths.paths:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def mass_split(values, weights, lower, upper):
    """(in, below, above) masses with ``lower <= x <= upper`` counted as in."""
    if not lower <= upper:
        raise InputError("lower bound above upper bound")
    below = float(np.sum(weights[values < lower]))
    above = float(np.sum(weights[values > upper]))
    below, above = min(max(below, 0.0), 1.0), min(max(above, 0.0), 1.0)
    return max(0.0, 1.0 - below - above), below, above


def weighted_median(values, weights):
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, 0.5 * cw[-1])])


def _weights(paths):
    if paths.weights is None:
        return np.full(paths.n_paths, 1.0 / paths.n_paths)
    return paths.weights


def probability_in_bounds(paths, bounds, method="SIR", settings=None):
    """Fraction (weighted when weights exist) of terminal values inside the bounds.

    ``bounds`` is a BoundsSeries (looked up at origin + h) or a plain
    ``(lower, upper)`` pair.
    """
    h = paths.h
    if isinstance(bounds, tuple):
        lo, up = bounds
    else:
        try:
            lo, up = bounds.at(paths.origin + h)
        except AlignmentError as exc:
            raise AlignmentError(f"bounds missing at the target date: {exc}") from None
    w = _weights(paths)
    term = paths.paths[:, -1]
    p_in, below, above = mass_split(term, w, lo, up)
    return ProbabilityForecast(paths.origin, h, p_in, below, above, method,
                               dict(settings or {}),
                               point_mean=float(w @ term),
                               point_median=weighted_median(term, w),
                               ess=paths.ess)


def point_forecast(paths):
    """Weighted mean and median for every horizon 1..h."""
    w = _weights(paths)
    mean = w @ paths.paths
    median = np.array([weighted_median(paths.paths[:, k], w) for k in range(paths.h)])
    return mean, median


# -- shared helpers ------------------------------------------------------------

def model_of(fit):
    return fit.model if hasattr(fit, "model") else fit


def mar11_params(fit, allow_marx=False):
    """(phi, psi, dof, scale) of a MAR with at most one lag and one lead."""
    model = model_of(fit)
    if isinstance(model, SmarModel):
        raise UnsupportedOrderError("forecasting seasonal models is not supported")
    if isinstance(model, MarxModel) and not allow_marx:
        raise UnsupportedOrderError("this forecaster does not handle exogenous regressors")
    base = model if isinstance(model, MarModel) else model.base
    if base.r > 1 or base.s > 1:
        raise UnsupportedOrderError(
            f"forecasters are derived for MAR(1,1) (r, s <= 1); got MAR({base.r},{base.s})")
    phi = float(base.phi[0]) if base.r else 0.0
    psi = float(base.psi[0]) if base.s else 0.0
    return phi, psi, base.noise.dof, base.noise.scale


def causal_component(series, fit):
    """Filtered u_t = pi_t - phi pi_{t-1} over the series (first value dropped when r = 1)."""
    u, _ = filter_components(series, model_of(fit))
    return u.values
