"""Sample-based predictive densities.

The intractable marginal density of the noncausal component is replaced by an
average over the filtered values observed so far:

    l(u*_1..u*_h | F_T) ~ g(u_T - psi u*_1) ... g(u*_{h-1} - psi u*_h)
                          * sum_i g(u*_h - psi u_i) / sum_i g(u_T - psi u_i),

with ``u*_k = pi*_{T+k} - phi pi*_{T+k-1}``.  For MARX models every link
also subtracts ``beta' X`` at the matching date.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import logsumexp

from ..errors import InputError
from ..mar_process import t_logpdf
from .paths import ProbabilityForecast, causal_component, mar11_params

GRID_POINTS = 2001
GRID_HALF_WIDTH = 12.0
CHUNK = 4096


@dataclass(frozen=True)
class UTarget:
    """Everything the u-form density needs, gathered once per origin.

    ``shift[k]`` (k = 0..h) is the exogenous term ``beta' X`` entering the
    link of u at T + k; zero for plain MAR.
    """

    psi: float
    dof: float
    scale: float
    u_T: float
    u_sample: np.ndarray
    shift: np.ndarray = None

    def _shift(self, k):
        return 0.0 if self.shift is None else float(self.shift[k])

    def _log_marginal(self, u, k):
        """log sum_i g(u - shift_k - psi u_i), vectorized over ``u``."""
        u = np.atleast_1d(u)
        out = np.empty(u.size)
        base = self.psi * self.u_sample
        for lo in range(0, u.size, CHUNK):
            blk = u[lo:lo + CHUNK, None] - self._shift(k) - base[None, :]
            out[lo:lo + CHUNK] = logsumexp(t_logpdf(blk, self.dof, self.scale), axis=1)
        return out

    def logpdf(self, upaths):
        """Unnormalized log density of u-paths, shape (n_paths, h)."""
        up = np.atleast_2d(np.asarray(upaths, dtype=float))
        h = up.shape[1]
        prev = np.column_stack([np.full(up.shape[0], self.u_T), up[:, :-1]])
        shifts = np.array([self._shift(k) for k in range(h)])
        links = t_logpdf(prev - self.psi * up - shifts[None, :], self.dof, self.scale).sum(axis=1)
        denom = self._log_marginal(np.array([self.u_T]), 0)[0]
        return links + self._log_marginal(up[:, -1], h) - denom


def u_target(fit, series):
    phi, psi, dof, scale = mar11_params(fit)
    u = causal_component(series, fit)
    return UTarget(psi, dof, scale, float(u[-1]), u)


def _pi_to_u(path, phi, pi_T):
    path = np.atleast_2d(np.asarray(path, dtype=float))
    prev = np.column_stack([np.full(path.shape[0], pi_T), path[:, :-1]])
    return path - phi * prev


def gj_joint_logdensity(fit, series, paths):
    """Log of the unnormalized joint predictive density for each row of ``paths``."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    if paths.shape[1] < 1:
        raise InputError("path length (horizon) must be >= 1")
    phi = mar11_params(fit)[0]
    target = u_target(fit, series)
    return target.logpdf(_pi_to_u(paths, phi, float(series.values[-1])))


def gj_joint_density(fit, series, path):
    """Unnormalized joint predictive density of one future path (length h >= 1)."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 1 or path.size < 1:
        raise InputError("path must be a non-empty vector (h >= 1)")
    return float(np.exp(gj_joint_logdensity(fit, series, path[None, :])[0]))


@dataclass(frozen=True)
class GridDensity:
    grid: np.ndarray
    density: np.ndarray
    raw_integral: float
    coarse_grid: bool

    def cdf(self, x):
        cum = cumulative_trapezoid(self.density, self.grid, initial=0.0)
        return np.interp(x, self.grid, cum, left=0.0, right=1.0)

    def mean(self):
        return float(trapezoid(self.grid * self.density, self.grid))

    def median(self):
        cum = cumulative_trapezoid(self.density, self.grid, initial=0.0)
        return float(np.interp(0.5, cum, self.grid))


def gj_density_h1(fit, series, grid):
    """One-step predictive density on ``grid``, renormalized by the trapezoid rule.

    ``coarse_grid`` is set when the raw integral is outside [0.5, 2], i.e. the
    grid misses a sizeable part of the mass or is too coarse.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.isfinite(grid)) \
            or np.any(np.diff(grid) <= 0):
        raise InputError("grid must be finite and strictly increasing")
    raw = np.exp(gj_joint_logdensity(fit, series, grid[:, None]))
    total = float(trapezoid(raw, grid))
    if not total > 0:
        raise InputError("density vanishes on the whole grid")
    return GridDensity(grid, raw / total, total, not 0.5 <= total <= 2.0)


def default_grid(fit, series, n=GRID_POINTS, half_width=GRID_HALF_WIDTH):
    """Grid of ``n`` points over median +- ``half_width`` predictive scale units.

    The scale unit is the larger of the t error standard deviation and the
    sample standard deviation of the filtered u.  The median comes from a
    first pass on a grid centred at ``phi pi_T``.
    """
    phi, _, dof, scale = mar11_params(fit)
    u = causal_component(series, fit)
    unit = max(scale * np.sqrt(dof / (dof - 2.0)), float(np.std(u)))
    centre = phi * float(series.values[-1])
    first = np.linspace(centre - 2 * half_width * unit, centre + 2 * half_width * unit, n)
    med = gj_density_h1(fit, series, first).median()
    return np.linspace(med - half_width * unit, med + half_width * unit, n)


def gj_probability(fit, series, bounds, grid=None):
    """h = 1 probability-in-bounds from the sample-based density."""
    if isinstance(bounds, tuple):
        lo, up = bounds
    else:
        lo, up = bounds.at(series.end + 1)
    if grid is None:
        grid = default_grid(fit, series)
    dens = gj_density_h1(fit, series, grid)
    below = float(dens.cdf(lo)) if np.isfinite(lo) else 0.0
    above = float(1.0 - dens.cdf(up)) if np.isfinite(up) else 0.0
    if not lo <= up:
        raise InputError("lower bound above upper bound")
    below, above = min(max(below, 0.0), 1.0), min(max(above, 0.0), 1.0)
    p_in = max(0.0, 1.0 - below - above)
    return ProbabilityForecast(series.end, 1, p_in, below, above, "GJ",
                               {"grid_points": grid.size},
                               point_mean=dens.mean(), point_median=dens.median()), dens


def write_density(dens, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("grid_value,density\n")
        for x, d in zip(dens.grid, dens.density):
            fh.write(f"{float(x)!r},{float(d)!r}\n")
