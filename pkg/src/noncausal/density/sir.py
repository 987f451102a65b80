"""Sampling importance resampling for multi-step predictive paths.

Paths of the noncausal component u are simulated from a Gaussian AR(1)
instrumental model started at the last filtered value, reweighted by the
sample-based target density and resampled.  Each resampled u-path is turned
into a path of the series through ``pi_{T+k} = phi pi_{T+k-1} + u_{T+k}``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import rng
from ..errors import AlignmentError, DegenerateWeightsError, InputError
from ..mar_process import MarxModel, residuals
from ..timeseries import ExogenousPanel
from .lls import normalized_weights
from .paths import ForecastPaths, causal_component, mar11_params, model_of
from .sample_based import UTarget

RHO_CLIP = 0.999
ESS_FRACTION = 1e-3
CHUNK = 1 << 14


@dataclass(frozen=True)
class InstrumentalModel:
    """``u_t = rho u_{t-1} + eta' X_t + e_t`` with ``e_t ~ N(0, sigma2)``."""

    rho: float
    sigma2: float
    eta: np.ndarray = None

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise InputError(f"instrumental rho must be inside (-1, 1), got {self.rho}")
        if not self.sigma2 > 0:
            raise InputError("instrumental variance must be positive")

    def simulate(self, u_T, shocks, drift=None):
        """u-paths from shocks of shape (K, h); ``drift[k]`` adds eta' X_{T+k+1}."""
        K, h = shocks.shape
        out = np.empty((K, h))
        prev = np.full(K, float(u_T))
        for k in range(h):
            prev = self.rho * prev + shocks[:, k] + (0.0 if drift is None else drift[k])
            out[:, k] = prev
        return out

    def logpdf(self, u_T, upaths, drift=None):
        up = np.atleast_2d(upaths)
        prev = np.column_stack([np.full(up.shape[0], float(u_T)), up[:, :-1]])
        e = up - self.rho * prev
        if drift is not None:
            e = e - np.asarray(drift)[None, :]
        return stats.norm.logpdf(e, scale=np.sqrt(self.sigma2)).sum(axis=1)


def fit_instrumental(u, resid, Xc=None):
    """OLS of u_t on u_{t-1} (and contemporaneous X when given), no intercept.

    The innovation variance is the sample variance of the model residuals.
    Regressors that are identically zero get a zero loading.
    """
    u = np.asarray(u, dtype=float)
    if u.size < 3:
        raise InputError("too few filtered values for the instrumental regression")
    cols = [u[:-1, None]]
    if Xc is not None:
        cols.append(np.asarray(Xc, dtype=float)[1:])
    Z = np.hstack(cols)
    coef, *_ = np.linalg.lstsq(Z, u[1:], rcond=None)
    rho = float(np.clip(coef[0], -RHO_CLIP, RHO_CLIP))
    eta = coef[1:] if Xc is not None else None
    return InstrumentalModel(rho, float(np.var(resid)), eta)


def systematic_resample(values_key, weights, S, u0):
    """Indices of S systematic draws; candidates are ordered by ``values_key`` first.

    Ordering by the terminal value makes the resampled empirical distribution
    function deviate from the weighted one by at most 1/S everywhere.
    """
    order = np.argsort(values_key, kind="stable")
    cw = np.cumsum(weights[order])
    cw[-1] = 1.0
    pos = (np.arange(S) + u0) / S
    return order[np.searchsorted(cw, pos, side="right").clip(max=len(order) - 1)]


def _sir(target_logpdf, instr, u_T, pi_T, phi, h, K, S_resample, seed, origin,
         drift=None, label="sir"):
    if h < 1:
        raise InputError("horizon must be >= 1")
    if S_resample < 1 or K < S_resample:
        raise InputError("need K >= S_resample >= 1")
    sd = np.sqrt(instr.sigma2)
    upaths = np.empty((K, h))
    logw = np.empty(K)
    for lo in range(0, K, CHUNK):
        hi = min(K, lo + CHUNK)
        shocks = sd * rng.normal_matrix(seed, label, lo, hi, h)
        up = instr.simulate(u_T, shocks, drift)
        upaths[lo:hi] = up
        with np.errstate(over="ignore", invalid="ignore"):
            logw[lo:hi] = target_logpdf(up) - instr.logpdf(u_T, up, drift)
    logw = np.where(np.isfinite(logw), logw, -np.inf)
    w, ess = normalized_weights(logw)
    if not ess >= ESS_FRACTION * K:
        raise DegenerateWeightsError(
            f"importance weights degenerate (threshold {ESS_FRACTION * K:.3g})", ess)
    pi = np.empty((K, h))
    prev = np.full(K, float(pi_T))
    for k in range(h):
        prev = phi * prev + upaths[:, k]
        pi[:, k] = prev
    u0 = float(rng.uniform(seed, label + "/resample", 0, 1)[0])
    idx = systematic_resample(pi[:, -1], w, S_resample, u0)
    return ForecastPaths(origin, pi[idx], None, ess,
                         {"K": K, "S": S_resample, "seed": seed, "instrumental": instr,
                          "u_paths": upaths[idx]})


def sir_forecast(fit, series, h, K, S_resample, seed, target_logpdf=None):
    """Resampled predictive paths ``pi_{T+1..T+h}`` for a MAR(r<=1, s<=1) fit.

    ``target_logpdf`` replaces the sample-based target (it maps u-paths of
    shape (n, h) to log densities); used to check the algorithm against a
    known answer.
    """
    phi, psi, dof, scale = mar11_params(fit)
    u = causal_component(series, fit)
    instr = fit_instrumental(u, residuals(series, model_of(fit)).values)
    target = target_logpdf or UTarget(psi, dof, scale, float(u[-1]), u).logpdf
    return _sir(target, instr, float(u[-1]), float(series.values[-1]), phi, h, K,
                S_resample, seed, series.end)


def _exog_rows(X, first, last):
    """Rows for ordinals first..last; dates past the panel hold its last row."""
    if first < X.start:
        raise AlignmentError("exogenous panel starts after the series")
    idx = np.minimum(np.arange(first, last + 1) - X.start, len(X) - 1)
    return X.values[idx]


def marx_sir_forecast(fit, series, X, X_future, h, K, S_resample, seed, vintage=None):
    """SIR paths for a MARX fit given regressor forecasts for T+1..T+h.

    ``vintage`` (an ExogenousPanel) overwrites the matching historical rows of
    ``X`` before filtering, e.g. revised values for the last few months.
    Regressor values needed beyond ``X_future`` (a lead offset at T+h) are held
    at the last forecast.
    """
    model = model_of(fit)
    if not isinstance(model, MarxModel):
        raise InputError("marx_sir_forecast needs a MARX fit")
    phi, psi, dof, scale = mar11_params(fit, allow_marx=True)
    T = series.end
    if X_future.start > T + 1 or X_future.end < T + h or X_future.names != X.names:
        raise InputError(f"X_future must cover {h} months after the series end with the same columns")
    if vintage is not None:
        X = X.replace_rows(vintage)
    if X.start > series.start or X.end < T:
        raise AlignmentError("exogenous panel does not cover the series")
    hist = X.window(series.start, T)
    fut = X_future.window(T + 1, T + h)
    full = ExogenousPanel(series.start, X.names, np.vstack([hist.values, fut.values]))
    beta = np.asarray(model.beta)
    offs = np.asarray(model.offsets)

    def shift(t):
        rows = _exog_rows(full, t + offs.min(), t + offs.max())
        return float(sum(beta[i] * rows[o - offs.min(), i] for i, o in enumerate(offs)))

    u = causal_component(series, fit)
    u_start = series.end - u.size + 1
    # links of the target subtract beta'X at every date from T to T+h
    shifts = np.array([shift(T + k) for k in range(h + 1)])
    resid = residuals(series, model, full).values
    Xc = _exog_rows(full, u_start, T)
    instr = fit_instrumental(u, resid, Xc)
    drift = _exog_rows(full, T + 1, T + h) @ instr.eta

    target = UTarget(psi, dof, scale, float(u[-1]), u, shifts)
    paths = _sir(target.logpdf, instr, float(u[-1]), float(series.values[-1]), phi, h, K,
                 S_resample, seed, T, drift=drift, label="marx-sir")
    return paths
